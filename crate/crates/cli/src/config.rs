//! Pipeline configuration file (TOML) and resource loading.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use mathtag::chunker::ChunkGrammar;
use mathtag::classifier::{Kernel, SmoParams};
use mathtag::keyphrase::{self, ExtractionConfig, Extractor, ScoringResources};
use mathtag::tagger::TaggerModel;
use mathtag::textproc::AcronymLexicon;
use mathtag::vocabstore::VocabularyLookup;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub gazetteer: Option<PathBuf>,
    pub mathematicians: Option<PathBuf>,
    pub acronyms: Option<PathBuf>,
    pub stop_phrases: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSettings {
    pub max_phrases: usize,
    pub min_phrases: usize,
    pub similarity_threshold: f64,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        let d = ExtractionConfig::default();
        ExtractionSettings {
            max_phrases: d.max_phrases,
            min_phrases: d.min_phrases,
            similarity_threshold: d.similarity_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub c: f64,
    pub tol: f64,
    pub degree: u32,
    pub coef0: f64,
    pub gamma: f64,
    pub max_passes: Option<usize>,
    pub balance_classes: bool,
    pub accept_threshold: f64,
    pub seed: u64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        let p = SmoParams::default();
        ClassifierSettings {
            c: p.c,
            tol: p.tol,
            degree: p.kernel.degree,
            coef0: p.kernel.coef0,
            gamma: p.kernel.gamma,
            max_passes: p.max_passes,
            balance_classes: p.balance_classes,
            accept_threshold: 0.0,
            seed: p.seed,
        }
    }
}

impl ClassifierSettings {
    pub fn smo_params(&self) -> SmoParams {
        SmoParams {
            c: self.c,
            tol: self.tol,
            kernel: Kernel {
                degree: self.degree,
                coef0: self.coef0,
                gamma: self.gamma,
            },
            max_passes: self.max_passes,
            seed: self.seed,
            balance_classes: self.balance_classes,
        }
    }
}

/// Everything a command needs besides its input. Relative paths are taken
/// relative to the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Classifier model directory.
    pub model_dir: Option<PathBuf>,
    /// Trained tagger directory; the bundled seed model when absent.
    pub tagger_dir: Option<PathBuf>,
    pub grammar_path: Option<PathBuf>,
    pub resources: ResourcePaths,
    /// Vocabulary store directory.
    pub vocab_path: Option<PathBuf>,
    pub extraction: ExtractionSettings,
    pub classifier: ClassifierSettings,
    pub port: u16,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model_dir: None,
            tagger_dir: None,
            grammar_path: None,
            resources: ResourcePaths::default(),
            vocab_path: None,
            extraction: ExtractionSettings::default(),
            classifier: ClassifierSettings::default(),
            port: 8080,
        }
    }
}

fn rebase(p: &mut Option<PathBuf>, base: &Path) {
    if let Some(path) = p.as_mut() {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn parse(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        let mut c = Self::parse(&src)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut c.model_dir,
            &mut c.tagger_dir,
            &mut c.grammar_path,
            &mut c.vocab_path,
            &mut c.resources.gazetteer,
            &mut c.resources.mathematicians,
            &mut c.resources.acronyms,
            &mut c.resources.stop_phrases,
        ] {
            rebase(p, base);
        }
        Ok(c)
    }

    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig {
            max_phrases: self.extraction.max_phrases,
            min_phrases: self.extraction.min_phrases,
            similarity_threshold: self.extraction.similarity_threshold,
            ..ExtractionConfig::default()
        }
    }

    /// Checks value ranges and that every configured input path exists.
    pub fn validate(&self) -> Result<(), CliError> {
        self.extraction_config()
            .validate()
            .map_err(|m| CliError::Usage(format!("extraction: {m}")))?;
        let c = &self.classifier;
        if !(c.c > 0.0 && c.c.is_finite()) || !(c.tol > 0.0) || c.degree == 0 || !(c.gamma > 0.0) {
            return Err(CliError::Usage(
                "classifier: need c > 0, tol > 0, degree >= 1, gamma > 0".into(),
            ));
        }
        let inputs = [
            ("tagger_dir", &self.tagger_dir),
            ("grammar_path", &self.grammar_path),
            ("resources.gazetteer", &self.resources.gazetteer),
            ("resources.mathematicians", &self.resources.mathematicians),
            ("resources.acronyms", &self.resources.acronyms),
            ("resources.stop_phrases", &self.resources.stop_phrases),
        ];
        for (name, p) in inputs {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(CliError::Usage(format!("{name}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    fn list(path: &Option<PathBuf>, bundled: fn() -> Vec<String>) -> Result<Vec<String>, CliError> {
        match path {
            Some(p) => ScoringResources::read_list(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
            None => Ok(bundled()),
        }
    }

    pub fn scoring_resources(&self, vocabulary: Arc<dyn VocabularyLookup>) -> Result<ScoringResources, CliError> {
        let r = &self.resources;
        let acronyms = match &r.acronyms {
            Some(p) => {
                let src = std::fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                AcronymLexicon::parse(&src).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
            }
            None => AcronymLexicon::bundled(),
        };
        ScoringResources::new(
            Self::list(&r.gazetteer, keyphrase::bundled_gazetteer)?,
            Self::list(&r.mathematicians, keyphrase::bundled_mathematicians)?,
            acronyms,
            vocabulary,
            Self::list(&r.stop_phrases, keyphrase::bundled_stop_phrases)?,
        )
        .map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn tagger(&self) -> Result<TaggerModel, CliError> {
        match &self.tagger_dir {
            Some(d) => TaggerModel::load(d).map_err(|e| CliError::Data(format!("{}: {e}", d.display()))),
            None => Ok(TaggerModel::seed()),
        }
    }

    pub fn grammar(&self) -> Result<ChunkGrammar, CliError> {
        match &self.grammar_path {
            Some(p) => ChunkGrammar::load(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
            None => Ok(ChunkGrammar::bundled()),
        }
    }

    pub fn extractor(&self, vocabulary: Arc<dyn VocabularyLookup>) -> Result<Extractor, CliError> {
        Ok(Extractor::new(
            self.tagger()?,
            self.grammar()?,
            self.scoring_resources(vocabulary)?,
            self.extraction_config(),
        ))
    }
}
