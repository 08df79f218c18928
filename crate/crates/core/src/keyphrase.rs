//! Keyphrase candidates: scoring of noun phrases, grouping of near
//! duplicates and selection of a short ranked list per document.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{extract_nps, ChunkGrammar, NounPhrase};
use crate::corpus::Document;
use crate::masking::{is_placeholder, mask_formulae, FormulaTable, MaskError};
use crate::msc::MscCode;
use crate::tagger::{viterbi_tag, Tag, TaggedSentence, TaggerModel};
use crate::textproc::{
    expand_acronyms, normalize_phrase, split_sentences, AcronymExpansion, AcronymLexicon,
};
use crate::vocabstore::{Status, VocabularyLookup};

const GAZETTEER_SRC: &str = include_str!("../data/gazetteer.txt");
const MATHEMATICIANS_SRC: &str = include_str!("../data/mathematicians.txt");
const STOP_PHRASES_SRC: &str = include_str!("../data/stop_phrases.txt");

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("stop phrase {0:?} is also a gazetteer entry")]
    StopInGazetteer(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Lexicon(#[from] crate::textproc::LexiconError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tier {
    VeryHigh,
    High,
    Baseline,
    Negative,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::VeryHigh => "VERY_HIGH",
            Tier::High => "HIGH",
            Tier::Baseline => "BASELINE",
            Tier::Negative => "NEGATIVE",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    Gazetteer,
    AuthorKeyphrase,
    ExistingKeyphrase,
    MathematicianName,
    Acronym,
    Formula,
    StopPhrase,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Gazetteer => "GAZETTEER",
            Reason::AuthorKeyphrase => "AUTHOR_KEYPHRASE",
            Reason::ExistingKeyphrase => "EXISTING_KEYPHRASE",
            Reason::MathematicianName => "MATHEMATICIAN_NAME",
            Reason::Acronym => "ACRONYM",
            Reason::Formula => "FORMULA",
            Reason::StopPhrase => "STOP_PHRASE",
        }
    }

    fn is_very_high(self) -> bool {
        matches!(
            self,
            Reason::Gazetteer | Reason::AuthorKeyphrase | Reason::ExistingKeyphrase
        )
    }

    fn is_high(self) -> bool {
        matches!(
            self,
            Reason::MathematicianName | Reason::Acronym | Reason::Formula
        )
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPhrase {
    pub phrase: NounPhrase,
    /// Display text: tokens joined by spaces, sentence-initial capital
    /// removed from common words.
    pub surface: String,
    /// Normalized lookup key.
    pub key: String,
    pub tier: Tier,
    pub weight: f64,
    pub reasons: Vec<Reason>,
    pub group_id: Option<usize>,
}

/// A stop phrase; `*` stands for any number of words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopPattern(Vec<String>);

impl StopPattern {
    pub fn new(src: &str) -> Self {
        StopPattern(normalize_phrase(src).split(' ').map(str::to_string).collect())
    }

    pub fn matches(&self, words: &[&str]) -> bool {
        fn go(p: &[String], w: &[&str]) -> bool {
            match p.split_first() {
                None => w.is_empty(),
                Some((head, rest)) if head == "*" => (0..=w.len()).any(|i| go(rest, &w[i..])),
                Some((head, rest)) => w.first().is_some_and(|x| x == head) && go(rest, &w[1..]),
            }
        }
        go(&self.0, words)
    }

    fn is_literal(&self) -> bool {
        !self.0.iter().any(|w| w == "*")
    }

    fn literal(&self) -> String {
        self.0.join(" ")
    }
}

/// Lookup resources for the scorer, loaded once and shared read-only.
#[derive(Clone)]
pub struct ScoringResources {
    pub gazetteer: HashSet<String>,
    pub mathematicians: HashSet<String>,
    pub acronyms: AcronymLexicon,
    pub vocabulary: Arc<dyn VocabularyLookup>,
    pub stop_phrases: Vec<StopPattern>,
}

impl fmt::Debug for ScoringResources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoringResources")
            .field("gazetteer", &self.gazetteer.len())
            .field("mathematicians", &self.mathematicians.len())
            .field("acronyms", &self.acronyms.len())
            .field("stop_phrases", &self.stop_phrases.len())
            .finish()
    }
}

pub fn bundled_gazetteer() -> Vec<String> {
    phrase_lines(GAZETTEER_SRC).map(str::to_string).collect()
}

pub fn bundled_mathematicians() -> Vec<String> {
    phrase_lines(MATHEMATICIANS_SRC).map(str::to_string).collect()
}

pub fn bundled_stop_phrases() -> Vec<String> {
    phrase_lines(STOP_PHRASES_SRC).map(str::to_string).collect()
}

fn phrase_lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl ScoringResources {
    pub fn new(
        gazetteer: impl IntoIterator<Item = String>,
        mathematicians: impl IntoIterator<Item = String>,
        acronyms: AcronymLexicon,
        vocabulary: Arc<dyn VocabularyLookup>,
        stop_phrases: impl IntoIterator<Item = String>,
    ) -> Result<Self, ResourceError> {
        let gazetteer: HashSet<String> = gazetteer
            .into_iter()
            .map(|g| normalize_phrase(&g))
            .filter(|g| !g.is_empty())
            .collect();
        let stop_phrases: Vec<StopPattern> = stop_phrases
            .into_iter()
            .map(|s| StopPattern::new(&s))
            .filter(|s| !s.0.is_empty() && s.0 != [""])
            .collect();
        for s in &stop_phrases {
            if s.is_literal() && gazetteer.contains(&s.literal()) {
                return Err(ResourceError::StopInGazetteer(s.literal()));
            }
        }
        Ok(ScoringResources {
            gazetteer,
            mathematicians: mathematicians.into_iter().map(|m| m.to_lowercase()).collect(),
            acronyms,
            vocabulary,
            stop_phrases,
        })
    }

    /// The bundled lists with an empty vocabulary.
    pub fn bundled() -> Self {
        Self::bundled_with_vocabulary(Arc::new(HashMap::<String, Status>::new()))
    }

    pub fn bundled_with_vocabulary(vocabulary: Arc<dyn VocabularyLookup>) -> Self {
        Self::new(
            bundled_gazetteer(),
            bundled_mathematicians(),
            AcronymLexicon::bundled(),
            vocabulary,
            bundled_stop_phrases(),
        )
        .expect("bundled resources are consistent")
    }

    /// Replaces a list with the lines of a file (`#` comments allowed).
    pub fn read_list(path: impl AsRef<Path>) -> Result<Vec<String>, ResourceError> {
        let src = fs::read_to_string(path)?;
        Ok(phrase_lines(&src).map(str::to_string).collect())
    }

    fn is_stop(&self, key: &str) -> bool {
        let words: Vec<&str> = key.split(' ').collect();
        self.stop_phrases.iter().any(|p| p.matches(&words))
    }

    fn is_mathematician(&self, token: &str) -> bool {
        if is_placeholder(token) || !token.chars().next().is_some_and(char::is_uppercase) {
            return false;
        }
        token
            .split('-')
            .filter(|p| !p.is_empty())
            .any(|part| self.mathematicians.contains(&part.to_lowercase()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    pub max_phrases: usize,
    pub min_phrases: usize,
    pub similarity_threshold: f64,
    pub weight_very_high: f64,
    pub weight_high: f64,
    pub weight_baseline: f64,
    pub weight_negative: f64,
    pub weight_extra_reason: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            max_phrases: 10,
            min_phrases: 7,
            similarity_threshold: 0.6,
            weight_very_high: 3.0,
            weight_high: 2.0,
            weight_baseline: 1.0,
            weight_negative: -1.0,
            weight_extra_reason: 0.25,
        }
    }
}

impl ExtractionConfig {
    /// Reads `key=value` lines; unknown keys are errors, missing keys keep
    /// their defaults.
    pub fn parse(src: &str) -> Result<Self, ResourceError> {
        let mut c = ExtractionConfig::default();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ResourceError::Config {
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected key=value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || v.parse::<f64>().map_err(|e| err(format!("{k}: {e}")));
            let int = || v.parse::<usize>().map_err(|e| err(format!("{k}: {e}")));
            match k {
                "max_phrases" => c.max_phrases = int()?,
                "min_phrases" => c.min_phrases = int()?,
                "similarity_threshold" => c.similarity_threshold = num()?,
                "weight_very_high" => c.weight_very_high = num()?,
                "weight_high" => c.weight_high = num()?,
                "weight_baseline" => c.weight_baseline = num()?,
                "weight_negative" => c.weight_negative = num()?,
                "weight_extra_reason" => c.weight_extra_reason = num()?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        c.validate()
            .map_err(|message| ResourceError::Config { line: 0, message })?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_phrases == 0 || self.min_phrases > self.max_phrases {
            return Err("need 0 < min_phrases <= max_phrases".into());
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err("similarity_threshold must lie in (0, 1]".into());
        }
        if !(self.weight_very_high > self.weight_high
            && self.weight_high > self.weight_baseline
            && self.weight_baseline > self.weight_negative
            && self.weight_extra_reason >= 0.0)
        {
            return Err("tier weights must be strictly decreasing".into());
        }
        Ok(())
    }

    fn base(&self, tier: Tier) -> f64 {
        match tier {
            Tier::VeryHigh => self.weight_very_high,
            Tier::High => self.weight_high,
            Tier::Baseline => self.weight_baseline,
            Tier::Negative => self.weight_negative,
        }
    }
}

/// True for formulas with more than one character of content.
fn is_substantial_formula(tex: &str) -> bool {
    let inner = tex
        .trim()
        .trim_start_matches("$$")
        .trim_end_matches("$$")
        .trim_start_matches('$')
        .trim_end_matches('$')
        .trim_start_matches("\\(")
        .trim_end_matches("\\)")
        .trim_start_matches("\\[")
        .trim_end_matches("\\]");
    inner.chars().filter(|c| !c.is_whitespace()).count() > 1
}

fn surface_text(np: &NounPhrase) -> String {
    let mut tokens = np.tokens.clone();
    if np.span.0 == 0 {
        if let (Some(first), Some(tag)) = (tokens.first_mut(), np.tag_sequence.first()) {
            let keep = matches!(tag, Tag::NNP | Tag::NNPS)
                || first.starts_with('$')
                || first.starts_with('\\')
                || (first.chars().count() > 1 && !first.chars().any(char::is_lowercase));
            if !keep {
                let mut chars = first.chars();
                if let Some(c) = chars.next() {
                    *first = c.to_lowercase().chain(chars).collect();
                }
            }
        }
    }
    tokens.join(" ")
}

/// Assigns a tier by precedence VERY_HIGH, NEGATIVE, HIGH, BASELINE.
pub fn score_phrase(
    np: &NounPhrase,
    doc: &Document,
    res: &ScoringResources,
    config: &ExtractionConfig,
) -> ScoredPhrase {
    let surface = surface_text(np);
    let key = normalize_phrase(&surface);
    let mut reasons = Vec::new();
    if res.gazetteer.contains(&key) {
        reasons.push(Reason::Gazetteer);
    }
    if doc
        .author_keyphrases
        .iter()
        .any(|k| normalize_phrase(k) == key)
    {
        reasons.push(Reason::AuthorKeyphrase);
    }
    let vocab = res.vocabulary.status(&key);
    if vocab == Some(Status::Good) {
        reasons.push(Reason::ExistingKeyphrase);
    }
    if np.tokens.iter().any(|t| res.is_mathematician(t)) {
        reasons.push(Reason::MathematicianName);
    }
    if np
        .tokens
        .iter()
        .any(|t| !t.starts_with('$') && res.acronyms.lookup_token(t).is_some())
    {
        reasons.push(Reason::Acronym);
    }
    if np.formulas.iter().any(|f| is_substantial_formula(f)) {
        reasons.push(Reason::Formula);
    }
    if vocab == Some(Status::Bad) || res.is_stop(&key) {
        reasons.push(Reason::StopPhrase);
    }
    let tier = if reasons.iter().any(|r| r.is_very_high()) {
        Tier::VeryHigh
    } else if reasons.contains(&Reason::StopPhrase) {
        Tier::Negative
    } else if reasons.iter().any(|r| r.is_high()) {
        Tier::High
    } else {
        Tier::Baseline
    };
    let extra = reasons.len().saturating_sub(1) as f64;
    ScoredPhrase {
        phrase: np.clone(),
        surface,
        key,
        tier,
        weight: config.base(tier) + config.weight_extra_reason * extra,
        reasons,
        group_id: None,
    }
}

/// Longest common subsequence length of two token lists, compared
/// case-insensitively.
pub fn lcs_length<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> usize {
    const INLINE: usize = 32;
    let n = b.len() + 1;
    let (mut stack_rows, mut stack_ascii) = ([0usize; 2 * INLINE], [false; INLINE]);
    let (mut heap_rows, mut heap_ascii) = (Vec::new(), Vec::new());
    let (rows, b_ascii): (&mut [usize], &mut [bool]) = if n <= INLINE {
        (&mut stack_rows[..2 * n], &mut stack_ascii[..b.len()])
    } else {
        heap_rows.resize(2 * n, 0);
        heap_ascii.resize(b.len(), false);
        (&mut heap_rows, &mut heap_ascii)
    };
    for (flag, y) in b_ascii.iter_mut().zip(b) {
        *flag = y.as_ref().is_ascii();
    }
    let (mut prev, mut cur) = rows.split_at_mut(n);
    for x in a {
        let x = x.as_ref();
        let x_ascii = x.is_ascii();
        for (j, y) in b.iter().enumerate() {
            let y = y.as_ref();
            let same = (x.len() == y.len() && x.eq_ignore_ascii_case(y))
                || (!(x_ascii && b_ascii[j]) && x.to_lowercase() == y.to_lowercase());
            cur[j + 1] = if same { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Tokens compared when grouping: lowercase, no leading determiner, plural
/// nouns reduced to their singular by dropping a final `s`.
pub fn comparison_tokens(np: &NounPhrase) -> Vec<String> {
    let skip = usize::from(np.tag_sequence.first() == Some(&Tag::DT) && np.tokens.len() > 1);
    np.tokens
        .iter()
        .zip(&np.tag_sequence)
        .skip(skip)
        .map(|(t, tag)| {
            let lower = t.to_lowercase();
            match tag {
                Tag::NNS | Tag::NNPS if lower.len() > 1 => {
                    lower.strip_suffix('s').unwrap_or(&lower).to_string()
                }
                _ => lower,
            }
        })
        .collect()
}

/// `lcs / max(len)` over comparison tokens; 1 for two empty phrases.
pub fn similarity(a: &NounPhrase, b: &NounPhrase) -> f64 {
    let (x, y) = (comparison_tokens(a), comparison_tokens(b));
    let longest = x.len().max(y.len());
    if longest == 0 {
        return 1.0;
    }
    lcs_length(&x, &y) as f64 / longest as f64
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage grouping over pairs with similarity at least
/// `threshold`. Group ids are numbered by first appearance.
pub fn group_similar(phrases: &mut [ScoredPhrase], threshold: f64) {
    let n = phrases.len();
    let tokens: Vec<Vec<String>> = phrases.iter().map(|p| comparison_tokens(&p.phrase)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let longest = tokens[i].len().max(tokens[j].len());
            let sim = if longest == 0 {
                1.0
            } else {
                lcs_length(&tokens[i], &tokens[j]) as f64 / longest as f64
            };
            if sim >= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut ids: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let next = ids.len();
        let id = *ids.entry(root).or_insert(next);
        phrases[i].group_id = Some(id);
    }
}

/// Representative of a group by precedence: controlled vocabulary,
/// gazetteer, weight, fewer tokens, then text order.
pub fn select_representative<'a>(
    group: &'a [ScoredPhrase],
    res: &ScoringResources,
) -> Option<&'a ScoredPhrase> {
    group.iter().min_by(|a, b| {
        let vocab = |p: &ScoredPhrase| res.vocabulary.status(&p.key) == Some(Status::Good);
        let gaz = |p: &ScoredPhrase| res.gazetteer.contains(&p.key);
        vocab(b)
            .cmp(&vocab(a))
            .then_with(|| gaz(b).cmp(&gaz(a)))
            .then_with(|| b.weight.total_cmp(&a.weight))
            .then_with(|| a.phrase.len().cmp(&b.phrase.len()))
            .then_with(|| a.surface.cmp(&b.surface))
    })
}

/// A document after masking, sentence splitting and tagging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedDocument {
    pub doc_id: String,
    /// Tagged sentences over masked tokens.
    pub sentences: Vec<TaggedSentence>,
    pub table: FormulaTable,
    /// Acronym expansions per sentence.
    pub expansions: Vec<Vec<AcronymExpansion>>,
}

impl TaggedDocument {
    /// Sentences with formulas restored, in `token_TAG` form.
    pub fn restored_lines(&self) -> Vec<String> {
        self.sentences
            .iter()
            .map(|s| crate::masking::unmask(&s.to_string(), &self.table))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(flatten)]
    pub scored: ScoredPhrase,
    /// Distinct surface forms in the candidate's group.
    pub group_members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc_id: String,
    pub candidates: Vec<Candidate>,
    /// Number of noun phrases before filtering and grouping.
    pub raw_count: usize,
    pub expansions: Vec<Vec<AcronymExpansion>>,
}

/// The configured pipeline from raw documents to ranked candidates.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub model: Arc<TaggerModel>,
    pub grammar: Arc<ChunkGrammar>,
    pub resources: ScoringResources,
    pub config: ExtractionConfig,
}

fn rank(a: &ScoredPhrase, b: &ScoredPhrase) -> std::cmp::Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then_with(|| a.surface.cmp(&b.surface))
}

impl Extractor {
    pub fn new(
        model: TaggerModel,
        grammar: ChunkGrammar,
        resources: ScoringResources,
        config: ExtractionConfig,
    ) -> Self {
        Extractor {
            model: Arc::new(model),
            grammar: Arc::new(grammar),
            resources,
            config,
        }
    }

    /// Seed tagger, bundled grammar and resources, default config.
    pub fn bundled() -> Self {
        Self::new(
            TaggerModel::seed(),
            ChunkGrammar::bundled(),
            ScoringResources::bundled(),
            ExtractionConfig::default(),
        )
    }

    pub fn tag_document(&self, doc: &Document) -> Result<TaggedDocument, MaskError> {
        let (masked, table) = mask_formulae(&doc.full_text(), &doc.id)?;
        let mut sentences = Vec::new();
        let mut expansions = Vec::new();
        for s in split_sentences(&masked) {
            expansions.push(expand_acronyms(
                &s.tokens,
                &self.resources.acronyms,
                doc.msc_primary,
            ));
            sentences.push(viterbi_tag(&s.tokens, &self.model));
        }
        Ok(TaggedDocument {
            doc_id: doc.id.clone(),
            sentences,
            table,
            expansions,
        })
    }

    /// Every noun phrase of a tagged document, scored.
    pub fn score_all(&self, doc: &Document, tagged: &TaggedDocument) -> Vec<ScoredPhrase> {
        tagged
            .sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| extract_nps(s, i, &self.grammar, &tagged.table))
            .map(|np| score_phrase(&np, doc, &self.resources, &self.config))
            .collect()
    }

    pub fn extract_from_tagged(&self, doc: &Document, tagged: &TaggedDocument) -> Extraction {
        let scored = self.score_all(doc, tagged);
        let raw_count = scored.len();
        let mut kept: Vec<ScoredPhrase> = scored
            .into_iter()
            .filter(|p| p.tier != Tier::Negative)
            .collect();
        group_similar(&mut kept, self.config.similarity_threshold);

        let mut groups: Vec<Vec<ScoredPhrase>> = Vec::new();
        for p in kept {
            let id = p.group_id.expect("grouped");
            if id == groups.len() {
                groups.push(Vec::new());
            }
            groups[id].push(p);
        }
        let mut reps: Vec<Candidate> = Vec::new();
        let mut rest: Vec<Candidate> = Vec::new();
        for group in &groups {
            let rep = select_representative(group, &self.resources).expect("nonempty group");
            let mut members: Vec<String> = Vec::new();
            for m in group {
                if !members.contains(&m.surface) {
                    members.push(m.surface.clone());
                }
            }
            reps.push(Candidate {
                scored: rep.clone(),
                group_members: members.clone(),
            });
            let mut seen = HashSet::from([rep.key.clone()]);
            for m in group {
                if seen.insert(m.key.clone()) {
                    rest.push(Candidate {
                        scored: m.clone(),
                        group_members: members.clone(),
                    });
                }
            }
        }
        reps.sort_by(|a, b| rank(&a.scored, &b.scored));
        reps.truncate(self.config.max_phrases);
        if reps.len() < self.config.min_phrases {
            rest.sort_by(|a, b| rank(&a.scored, &b.scored));
            let need = self.config.min_phrases - reps.len();
            reps.extend(rest.into_iter().take(need));
            reps.sort_by(|a, b| rank(&a.scored, &b.scored));
        }
        Extraction {
            doc_id: doc.id.clone(),
            candidates: reps,
            raw_count,
            expansions: tagged.expansions.clone(),
        }
    }

    pub fn extract_detailed(&self, doc: &Document) -> Result<Extraction, MaskError> {
        let tagged = self.tag_document(doc)?;
        Ok(self.extract_from_tagged(doc, &tagged))
    }

    pub fn extract_keyphrases(&self, doc: &Document) -> Result<Vec<ScoredPhrase>, MaskError> {
        Ok(self
            .extract_detailed(doc)?
            .candidates
            .into_iter()
            .map(|c| c.scored)
            .collect())
    }

    /// The class of `phrase` when every corpus document it is extracted
    /// from has the same primary code.
    pub fn assign_msc(&self, phrase: &str, corpus: &[Document]) -> Option<MscCode> {
        let extracted: Vec<(Option<MscCode>, Vec<String>)> = corpus
            .iter()
            .filter_map(|d| {
                let tagged = self.tag_document(d).ok()?;
                let phrases = self
                    .score_all(d, &tagged)
                    .into_iter()
                    .map(|p| p.surface)
                    .collect();
                Some((d.msc_primary, phrases))
            })
            .collect();
        crate::vocabstore::assign_msc(phrase, extracted.iter().map(|(c, p)| (*c, &p[..])))
    }
}
