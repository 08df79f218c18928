//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use mathtag::classifier::{evaluate, overlap_matrix, DiagonalRule, DocumentClassifier};
use mathtag::corpus::{CorpusReader, Document};
use mathtag::keyphrase::{Extraction, TaggedDocument};
use mathtag::msc::MscCode;
use mathtag::vocabstore::{Status, VocabStore, VocabularyLookup};

use crate::config::PipelineConfig;
use crate::{ClassifierOverrides, Cli, CliError, Command, Diagonal, ExtractionOverrides, Format, Io};

/// One scored class of a classified document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub code: MscCode,
    pub score: f64,
}

/// Output record of `classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub doc_id: String,
    pub classes: Vec<ClassScore>,
}

fn open_input(path: &Option<PathBuf>) -> Result<Option<Box<dyn BufRead>>, CliError> {
    match path {
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(Some(Box::new(BufReader::new(f))))
        }
        None => Ok(None),
    }
}

fn with_input<R>(
    path: &Option<PathBuf>,
    stdin: &mut dyn BufRead,
    f: impl FnOnce(&mut dyn BufRead) -> Result<R, CliError>,
) -> Result<R, CliError> {
    match open_input(path)? {
        Some(mut r) => f(&mut r),
        None => f(stdin),
    }
}

fn with_output<R>(
    path: &Option<PathBuf>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<R, CliError>,
) -> Result<R, CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            let r = f(&mut w)?;
            w.flush()?;
            Ok(r)
        }
        None => {
            let r = f(stdout)?;
            stdout.flush()?;
            Ok(r)
        }
    }
}

/// Reads a corpus, reporting invalid records on `stderr` and skipping them.
pub fn read_corpus_lenient(reader: &mut dyn BufRead, stderr: &mut dyn Write) -> Result<Vec<Document>, CliError> {
    let mut docs = Vec::new();
    for r in CorpusReader::new(reader) {
        match r {
            Ok(d) => docs.push(d),
            Err(mathtag::corpus::CorpusError::Io(e)) => return Err(CliError::Data(e.to_string())),
            Err(e) => writeln!(stderr, "record error: {e}")?,
        }
    }
    Ok(docs)
}

fn read_corpus_arg(
    input: &Option<PathBuf>,
    stdin: &mut dyn BufRead,
    stderr: &mut dyn Write,
) -> Result<Vec<Document>, CliError> {
    with_input(input, stdin, |r| read_corpus_lenient(r, stderr))
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn apply_extraction(c: &mut PipelineConfig, o: &ExtractionOverrides) {
    if let Some(v) = o.max_phrases {
        c.extraction.max_phrases = v;
    }
    if let Some(v) = o.min_phrases {
        c.extraction.min_phrases = v;
    }
    if let Some(v) = o.similarity_threshold {
        c.extraction.similarity_threshold = v;
    }
    if let Some(v) = &o.vocab {
        c.vocab_path = Some(v.clone());
    }
}

fn apply_classifier(c: &mut PipelineConfig, o: &ClassifierOverrides) {
    if let Some(v) = &o.model_dir {
        c.model_dir = Some(v.clone());
    }
    if let Some(v) = o.c {
        c.classifier.c = v;
    }
    if let Some(v) = o.tol {
        c.classifier.tol = v;
    }
    if let Some(v) = o.degree {
        c.classifier.degree = v;
    }
    if o.balance_classes {
        c.classifier.balance_classes = true;
    }
    if let Some(v) = o.threshold {
        c.classifier.accept_threshold = v;
    }
}

fn open_vocabulary(config: &PipelineConfig) -> Result<Arc<dyn VocabularyLookup>, CliError> {
    match &config.vocab_path {
        Some(dir) => {
            let store = VocabStore::open(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
            Ok(Arc::new(store))
        }
        None => Ok(Arc::new(HashMap::<String, Status>::new())),
    }
}

fn require_model_dir(config: &PipelineConfig) -> Result<&Path, CliError> {
    config
        .model_dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("--model-dir is required (or model_dir in --config)".into()))
}

fn load_classifier(config: &PipelineConfig) -> Result<DocumentClassifier, CliError> {
    let dir = require_model_dir(config)?;
    let clf = DocumentClassifier::load(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    if clf.models.is_empty() {
        return Err(CliError::Data(format!("{}: no models", dir.display())));
    }
    Ok(clf)
}

pub fn dispatch(cli: Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut config = load_config(&cli.config)?;
    match cli.command {
        Command::Tag {
            io,
            corpus,
            format,
            tagger_dir,
        } => {
            if tagger_dir.is_some() {
                config.tagger_dir = tagger_dir;
            }
            config.validate()?;
            cmd_tag(&config, &io, corpus, format, stdin, stdout, stderr)
        }
        Command::Extract {
            io,
            tagged,
            format,
            overrides,
        } => {
            apply_extraction(&mut config, &overrides);
            config.validate()?;
            cmd_extract(&config, &io, tagged.as_deref(), format, stdin, stdout, stderr)
        }
        Command::Train { input, classifier } => {
            apply_classifier(&mut config, &classifier);
            config.validate()?;
            cmd_train(&config, &input, stdin, stdout, stderr)
        }
        Command::Classify { io, classifier } => {
            apply_classifier(&mut config, &classifier);
            config.validate()?;
            cmd_classify(&config, &io, stdin, stdout, stderr)
        }
        Command::Evaluate {
            io,
            predictions,
            classifier,
        } => {
            apply_classifier(&mut config, &classifier);
            config.validate()?;
            cmd_evaluate(&config, &io, predictions.as_deref(), stdin, stdout, stderr)
        }
        Command::Overlap {
            input,
            prefix,
            diagonal,
        } => cmd_overlap(&input, &prefix, diagonal, stdin, stdout, stderr),
        Command::Serve { input, vocab, port } => {
            if let Some(v) = vocab {
                config.vocab_path = Some(v);
            }
            if let Some(p) = port {
                config.port = p;
            }
            config.validate()?;
            let corpus = read_corpus_arg(&input, stdin, stderr)?;
            crate::server::serve_blocking(&config, corpus, stderr)
        }
    }
}

pub fn cmd_tag(
    config: &PipelineConfig,
    io: &Io,
    corpus: bool,
    format: Format,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let extractor = config.extractor(Arc::new(HashMap::<String, Status>::new()))?;
    let docs = with_input(&io.input, stdin, |r| {
        if corpus {
            read_corpus_lenient(r, stderr)
        } else {
            let mut docs = Vec::new();
            for (i, line) in r.lines().enumerate() {
                let line = line?;
                if !line.trim().is_empty() {
                    docs.push(Document::new(format!("line-{}", i + 1), line));
                }
            }
            Ok(docs)
        }
    })?;
    with_output(&io.output, stdout, |out| {
        let mut first = true;
        for doc in &docs {
            let tagged = match extractor.tag_document(doc) {
                Ok(t) => t,
                Err(e) => {
                    writeln!(stderr, "record {}: {e}", doc.id)?;
                    continue;
                }
            };
            match format {
                Format::Text => {
                    if !first {
                        writeln!(out)?;
                    }
                    for line in tagged.restored_lines() {
                        writeln!(out, "{line}")?;
                    }
                }
                Format::Json => {
                    serde_json::to_writer(&mut *out, &tagged).map_err(std::io::Error::from)?;
                    writeln!(out)?;
                }
            }
            first = false;
        }
        Ok(())
    })
}

fn read_tagged(path: &Path) -> Result<HashMap<String, TaggedDocument>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: TaggedDocument = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.insert(t.doc_id.clone(), t);
    }
    Ok(out)
}

/// Human-readable extraction report: a header line per document followed
/// by one tab-separated line per candidate.
pub fn write_extraction_text(out: &mut dyn Write, e: &Extraction) -> std::io::Result<()> {
    writeln!(out, "# {}\traw={}\tfinal={}", e.doc_id, e.raw_count, e.candidates.len())?;
    for (i, c) in e.candidates.iter().enumerate() {
        let reasons: Vec<&str> = c.scored.reasons.iter().map(|r| r.as_str()).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            c.scored.surface,
            c.scored.tier,
            c.scored.weight,
            reasons.join(","),
            c.group_members.join(" | ")
        )?;
    }
    Ok(())
}

pub fn cmd_extract(
    config: &PipelineConfig,
    io: &Io,
    tagged: Option<&Path>,
    format: Format,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let extractor = config.extractor(open_vocabulary(config)?)?;
    let docs = read_corpus_arg(&io.input, stdin, stderr)?;
    let staged = tagged.map(read_tagged).transpose()?;
    with_output(&io.output, stdout, |out| {
        for doc in &docs {
            let result = match &staged {
                Some(map) => match map.get(&doc.id) {
                    Some(t) => Ok(extractor.extract_from_tagged(doc, t)),
                    None => Err(format!("no tagged record for {}", doc.id)),
                },
                None => extractor.extract_detailed(doc).map_err(|e| e.to_string()),
            };
            let e = match result {
                Ok(e) => e,
                Err(m) => {
                    writeln!(stderr, "record {}: {m}", doc.id)?;
                    continue;
                }
            };
            match format {
                Format::Text => write_extraction_text(out, &e)?,
                Format::Json => {
                    serde_json::to_writer(&mut *out, &e).map_err(std::io::Error::from)?;
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    })
}

pub fn cmd_train(
    config: &PipelineConfig,
    input: &Option<PathBuf>,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let dir = require_model_dir(config)?.to_path_buf();
    let docs = read_corpus_arg(input, stdin, stderr)?;
    let extractor = config.extractor(open_vocabulary(config)?)?;
    let (clf, warnings) = DocumentClassifier::train(&docs, &extractor, &config.classifier.smo_params());
    for w in &warnings {
        writeln!(stderr, "warning: {w}")?;
    }
    clf.save(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    writeln!(
        stdout,
        "trained {} models on {} documents into {}",
        clf.models.len(),
        docs.len(),
        dir.display()
    )?;
    Ok(())
}

fn classify_all(
    config: &PipelineConfig,
    docs: &[Document],
) -> Result<Vec<Classification>, CliError> {
    let clf = load_classifier(config)?;
    let extractor = config.extractor(open_vocabulary(config)?)?;
    let threshold = config.classifier.accept_threshold;
    Ok(docs
        .iter()
        .map(|d| Classification {
            doc_id: d.id.clone(),
            classes: clf
                .classify_document(d, &extractor, threshold)
                .into_iter()
                .map(|(code, score)| ClassScore { code, score })
                .collect(),
        })
        .collect())
}

pub fn cmd_classify(
    config: &PipelineConfig,
    io: &Io,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    require_model_dir(config)?;
    let docs = read_corpus_arg(&io.input, stdin, stderr)?;
    let results = classify_all(config, &docs)?;
    with_output(&io.output, stdout, |out| {
        for r in &results {
            serde_json::to_writer(&mut *out, r).map_err(std::io::Error::from)?;
            writeln!(out)?;
        }
        Ok(())
    })
}

fn read_predictions(path: &Path) -> Result<Vec<Classification>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn cmd_evaluate(
    config: &PipelineConfig,
    io: &Io,
    predictions: Option<&Path>,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let docs: Vec<Document> = read_corpus_arg(&io.input, stdin, stderr)?
        .into_iter()
        .filter(|d| d.msc_primary.is_some())
        .collect();
    let classified = match predictions {
        Some(p) => read_predictions(p)?,
        None => classify_all(config, &docs)?,
    };
    let gold: BTreeMap<String, MscCode> = docs
        .iter()
        .filter_map(|d| Some((d.id.clone(), d.msc_primary?)))
        .collect();
    let predicted: BTreeMap<String, BTreeSet<MscCode>> = classified
        .into_iter()
        .filter(|c| gold.contains_key(&c.doc_id))
        .map(|c| (c.doc_id, c.classes.into_iter().map(|s| s.code).collect()))
        .collect();
    let report = evaluate(&predicted, &gold).map_err(|e| CliError::Data(e.to_string()))?;
    with_output(&io.output, stdout, |out| {
        writeln!(out, "{report}")?;
        Ok(())
    })
}

pub fn cmd_overlap(
    input: &Option<PathBuf>,
    prefix: &Path,
    diagonal: Diagonal,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let docs = read_corpus_arg(input, stdin, stderr)?;
    let rule = match diagonal {
        Diagonal::NoSecondary => DiagonalRule::NoSecondary,
        Diagonal::NoOtherClass => DiagonalRule::NoOtherClass,
    };
    let m = overlap_matrix(&docs, rule);
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let (pgm, tsv) = (with_ext(".pgm"), with_ext(".tsv"));
    m.export(&pgm, &tsv)
        .map_err(|e| CliError::Data(format!("{}: {e}", prefix.display())))?;
    writeln!(
        stdout,
        "wrote {} and {} ({} of 63 classes without primary documents)",
        pgm.display(),
        tsv.display(),
        m.empty_rows().len()
    )?;
    Ok(())
}

/// A vocabulary store shared between the review service and extraction.
pub type SharedVocabulary = Arc<RwLock<VocabStore>>;
