//! Line-delimited JSON document collections.
//!
//! One record per line with the fields `id`, `title`, `text`,
//! `author_keyphrases`, `msc_primary` and `msc_secondary`. Unknown fields are
//! ignored so newer writers can add metadata without breaking readers.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::msc::MscCode;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown MSC code {code:?}")]
    UnknownMsc { line: usize, code: String },
    #[error("line {line}: invalid record: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CorpusError {
    /// The 1-based line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Parse { line, .. }
            | CorpusError::DuplicateId { line, .. }
            | CorpusError::UnknownMsc { line, .. }
            | CorpusError::Invalid { line, .. } => Some(*line),
            CorpusError::Io(_) => None,
        }
    }
}

/// One bibliographic record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub author_keyphrases: Vec<String>,
    #[serde(default)]
    pub msc_primary: Option<MscCode>,
    #[serde(default)]
    pub msc_secondary: Vec<MscCode>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            title: String::new(),
            text: text.into(),
            author_keyphrases: Vec::new(),
            msc_primary: None,
            msc_secondary: Vec::new(),
        }
    }

    pub fn with_primary(mut self, code: MscCode) -> Self {
        self.msc_primary = Some(code);
        self
    }

    pub fn with_secondary(mut self, codes: impl IntoIterator<Item = MscCode>) -> Self {
        self.msc_secondary = codes.into_iter().collect();
        self
    }

    /// Title and abstract joined the way the pipeline consumes them.
    pub fn full_text(&self) -> String {
        match (self.title.trim().is_empty(), self.text.trim().is_empty()) {
            (true, _) => self.text.clone(),
            (false, true) => self.title.clone(),
            (false, false) => {
                let sep = if self.title.trim_end().ends_with(['.', '!', '?']) {
                    " "
                } else {
                    ". "
                };
                format!("{}{}{}", self.title.trim_end(), sep, self.text)
            }
        }
    }
}

// MSC fields arrive as plain strings so that bad codes surface as
// positioned domain errors rather than generic JSON errors.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    author_keyphrases: Vec<String>,
    #[serde(default)]
    msc_primary: Option<String>,
    #[serde(default)]
    msc_secondary: Vec<String>,
}

fn parse_record(line_no: usize, line: &str) -> Result<Document, CorpusError> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if raw.id.is_empty() {
        return Err(CorpusError::Invalid {
            line: line_no,
            message: "empty id".into(),
        });
    }
    let code = |s: String| {
        s.parse::<MscCode>().map_err(|_| CorpusError::UnknownMsc {
            line: line_no,
            code: s,
        })
    };
    let msc_primary = raw.msc_primary.map(code).transpose()?;
    let msc_secondary = raw
        .msc_secondary
        .into_iter()
        .map(code)
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = msc_primary {
        if msc_secondary.contains(&p) {
            return Err(CorpusError::Invalid {
                line: line_no,
                message: format!("primary code {p} repeated among secondary codes"),
            });
        }
    }
    Ok(Document {
        id: raw.id,
        title: raw.title,
        text: raw.text,
        author_keyphrases: raw.author_keyphrases,
        msc_primary,
        msc_secondary,
    })
}

/// Streams validated documents from a reader, one per non-blank line.
///
/// Duplicate ids are detected across the whole stream.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Document, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let doc = match parse_record(self.line_no, &line) {
                Ok(d) => d,
                Err(e) => return Some(Err(e)),
            };
            if !self.seen.insert(doc.id.clone()) {
                return Some(Err(CorpusError::DuplicateId {
                    line: self.line_no,
                    id: doc.id,
                }));
            }
            return Some(Ok(doc));
        }
    }
}

/// Reads a whole corpus, failing on the first invalid record.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    CorpusReader::new(reader).collect()
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    read_corpus(BufReader::new(File::open(path)?))
}

pub fn write_corpus<W: Write>(docs: &[Document], mut out: W) -> Result<(), CorpusError> {
    for doc in docs {
        serde_json::to_writer(&mut out, doc).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_corpus(docs: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    write_corpus(docs, BufWriter::new(File::create(path)?))
}
