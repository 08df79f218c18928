use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hmm::DenseHmm;
use super::tagset::{State, Tag, UnknownTag, TAG_COUNT};
use crate::masking::{is_placeholder, PLACEHOLDER_PREFIX};

const SEED_CORPUS: &str = include_str!("../../data/seed/corpus.txt");
const SEED_LEXICON: &str = include_str!("../../data/seed/lexicon.tsv");

// Transition table rows are START + tags, columns are tags + STOP.
const ROWS: usize = TAG_COUNT + 1;
const COLS: usize = TAG_COUNT + 1;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("training corpus contains no tagged tokens")]
    EmptyCorpus,
    #[error("token and tag sequences differ in length ({tokens} vs {tags})")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid tagger config: {0}")]
    Config(String),
    #[error(transparent)]
    Tag(#[from] UnknownTag),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A sentence with one tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub pairs: Vec<(String, Tag)>,
}

impl TaggedSentence {
    pub fn new(pairs: Vec<(String, Tag)>) -> Self {
        TaggedSentence { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(w, _)| w.as_str())
    }

    pub fn tags(&self) -> impl Iterator<Item = Tag> + '_ {
        self.pairs.iter().map(|&(_, t)| t)
    }

    /// Parses `token<sep>TAG` items separated by whitespace, splitting each
    /// item at the last occurrence of `sep`.
    pub fn parse(line: &str, sep: char) -> Result<Self, String> {
        line.split_whitespace()
            .map(|item| {
                let (w, t) = item
                    .rsplit_once(sep)
                    .ok_or_else(|| format!("item {item:?} has no {sep:?} separator"))?;
                if w.is_empty() {
                    return Err(format!("item {item:?} has an empty token"));
                }
                let tag = t.parse::<Tag>().map_err(|e| e.to_string())?;
                Ok((w.to_string(), tag))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(TaggedSentence::new)
    }
}

/// Renders `token_TAG` items separated by single spaces.
impl fmt::Display for TaggedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (w, t)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{w}_{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerConfig {
    /// Add-k constant for transition smoothing.
    pub transition_k: f64,
    /// Tokens seen fewer times than this feed the suffix statistics.
    pub rare_threshold: u64,
    pub max_suffix: usize,
    /// Emission distribution for formula placeholders; NN and JJ only.
    pub formula_prior: Vec<(Tag, f64)>,
    /// Mass moved to NNP for capitalized unknown words inside a sentence.
    pub proper_noun_bias: f64,
    /// Weight of the suffix-free open-class distribution in the back-off.
    pub unknown_base_weight: f64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            transition_k: 0.1,
            rare_threshold: 5,
            max_suffix: 4,
            formula_prior: vec![(Tag::NN, 0.9), (Tag::JJ, 0.1)],
            proper_noun_bias: 0.8,
            unknown_base_weight: 0.1,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<(), TaggerError> {
        let bad = |m: &str| Err(TaggerError::Config(m.to_string()));
        if !(self.transition_k > 0.0) {
            return bad("transition_k must be positive");
        }
        if self.max_suffix == 0 {
            return bad("max_suffix must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.proper_noun_bias)
            || !(0.0..=1.0).contains(&self.unknown_base_weight)
        {
            return bad("bias weights must lie in [0, 1]");
        }
        let mut sum = 0.0;
        for &(tag, p) in &self.formula_prior {
            if !matches!(tag, Tag::NN | Tag::JJ) {
                return bad("formula prior may only use NN and JJ");
            }
            if !(p > 0.0 && p <= 1.0) {
                return bad("formula prior probabilities must lie in (0, 1]");
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return bad("formula prior must sum to 1");
        }
        Ok(())
    }

    fn to_text(&self) -> String {
        let prior: Vec<String> = self
            .formula_prior
            .iter()
            .map(|(t, p)| format!("{t}:{p}"))
            .collect();
        format!(
            "transition_k={}\nrare_threshold={}\nmax_suffix={}\nproper_noun_bias={}\nunknown_base_weight={}\nformula_prior={}\n",
            self.transition_k,
            self.rare_threshold,
            self.max_suffix,
            self.proper_noun_bias,
            self.unknown_base_weight,
            prior.join(",")
        )
    }

    fn parse(src: &str) -> Result<Self, TaggerError> {
        let mut c = TaggerConfig::default();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| TaggerError::Format {
                file: "config".into(),
                line: i + 1,
                message: m,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected key=value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{k}: {e}")));
            match k {
                "transition_k" => c.transition_k = num(v)?,
                "rare_threshold" => c.rare_threshold = num(v)? as u64,
                "max_suffix" => c.max_suffix = num(v)? as usize,
                "proper_noun_bias" => c.proper_noun_bias = num(v)?,
                "unknown_base_weight" => c.unknown_base_weight = num(v)?,
                "formula_prior" => {
                    c.formula_prior = v
                        .split(',')
                        .map(|item| {
                            let (t, p) = item
                                .split_once(':')
                                .ok_or_else(|| err(format!("bad prior item {item:?}")))?;
                            Ok((t.trim().parse::<Tag>()?, num(p.trim())?))
                        })
                        .collect::<Result<_, TaggerError>>()?;
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// Token to tag-count dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, [u64; TAG_COUNT]>,
    tag_totals: [u64; TAG_COUNT],
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            entries: HashMap::new(),
            tag_totals: [0; TAG_COUNT],
        }
    }
}

impl Lexicon {
    pub fn add(&mut self, token: &str, tag: Tag, count: u64) {
        if count == 0 {
            return;
        }
        self.entries
            .entry(token.to_string())
            .or_insert([0; TAG_COUNT])[tag.index()] += count;
        self.tag_totals[tag.index()] += count;
    }

    pub fn counts(&self, token: &str) -> Option<&[u64; TAG_COUNT]> {
        self.entries.get(token)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn total(&self, token: &str) -> u64 {
        self.entries.get(token).map_or(0, |c| c.iter().sum())
    }

    pub fn tag_total(&self, tag: Tag) -> u64 {
        self.tag_totals[tag.index()]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(token, tag, count)` triples in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Tag, u64)> {
        let sorted: BTreeMap<_, _> = self.entries.iter().collect();
        sorted.into_iter().flat_map(|(w, counts)| {
            Tag::ALL
                .iter()
                .filter(|t| counts[t.index()] > 0)
                .map(move |&t| (w.as_str(), t, counts[t.index()]))
        })
    }
}

/// Bigram HMM tagger parameters: raw counts plus the smoothed tables
/// derived from them.
#[derive(Debug, Clone)]
pub struct TaggerModel {
    config: TaggerConfig,
    lexicon: Lexicon,
    transitions: Vec<u64>,
    suffixes: HashMap<String, [u64; TAG_COUNT]>,
    hmm: DenseHmm,
}

fn row_index(s: State) -> Option<usize> {
    match s {
        State::Start => Some(TAG_COUNT),
        State::Tag(t) => Some(t.index()),
        State::Stop => None,
    }
}

fn col_index(s: State) -> Option<usize> {
    match s {
        State::Stop => Some(TAG_COUNT),
        State::Tag(t) => Some(t.index()),
        State::Start => None,
    }
}

fn suffixes_of(word: &str, max: usize) -> impl Iterator<Item = String> + '_ {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    (1..=max.min(n.saturating_sub(1))).map(move |l| chars[n - l..].iter().collect())
}

// "formula-abc" but not "formula-abc-control", which is tagged as a word.
fn is_bare_placeholder(token: &str) -> bool {
    is_placeholder(token)
        && token[PLACEHOLDER_PREFIX.len()..]
            .bytes()
            .all(|b| b.is_ascii_lowercase())
}

fn looks_numeric(token: &str) -> bool {
    let t = token.trim_start_matches(['-', '+']);
    !t.is_empty()
        && t.chars().any(|c| c.is_ascii_digit())
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '/'))
}

impl TaggerModel {
    fn from_parts(
        config: TaggerConfig,
        lexicon: Lexicon,
        transitions: Vec<u64>,
        suffixes: HashMap<String, [u64; TAG_COUNT]>,
    ) -> Result<Self, TaggerError> {
        config.validate()?;
        let hmm = Self::build_hmm(&config, &transitions);
        Ok(TaggerModel {
            config,
            lexicon,
            transitions,
            suffixes,
            hmm,
        })
    }

    fn build_hmm(config: &TaggerConfig, transitions: &[u64]) -> DenseHmm {
        let k = config.transition_k;
        let row = |r: usize| -> Vec<f64> {
            let counts = &transitions[r * COLS..(r + 1) * COLS];
            let total: u64 = counts.iter().sum();
            let denom = total as f64 + k * COLS as f64;
            counts.iter().map(|&c| ((c as f64 + k) / denom).ln()).collect()
        };
        let start_row = row(TAG_COUNT);
        let mut trans = Vec::with_capacity(TAG_COUNT * TAG_COUNT);
        let mut stop = Vec::with_capacity(TAG_COUNT);
        for r in 0..TAG_COUNT {
            let probs = row(r);
            trans.extend_from_slice(&probs[..TAG_COUNT]);
            stop.push(probs[TAG_COUNT]);
        }
        DenseHmm::new(start_row[..TAG_COUNT].to_vec(), trans, stop)
    }

    /// The built-in model trained on the bundled hand-tagged sentences and
    /// extended with the bundled dictionary.
    pub fn seed() -> Self {
        let corpus: Vec<TaggedSentence> = SEED_CORPUS
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| TaggedSentence::parse(l, '/').expect("seed corpus is well formed"))
            .collect();
        let mut model =
            train_hmm(&corpus, TaggerConfig::default()).expect("seed corpus is nonempty");
        for (line_no, line) in SEED_LEXICON.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, t, c) = parse_triple(line)
                .unwrap_or_else(|e| panic!("seed lexicon line {}: {e}", line_no + 1));
            model.lexicon.add(w, t.parse().expect("seed lexicon tag"), c);
        }
        model
    }

    pub fn config(&self) -> &TaggerConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn hmm(&self) -> &DenseHmm {
        &self.hmm
    }

    /// Adds dictionary counts without touching transition or suffix
    /// statistics.
    pub fn add_lexicon_entry(&mut self, token: &str, tag: Tag, count: u64) {
        self.lexicon.add(token, tag, count);
    }

    /// Smoothed transition probability; `from` may be START, `to` may be
    /// STOP.
    pub fn transition_prob(&self, from: State, to: State) -> f64 {
        let (Some(r), Some(c)) = (row_index(from), col_index(to)) else {
            return 0.0;
        };
        let counts = &self.transitions[r * COLS..(r + 1) * COLS];
        let total: u64 = counts.iter().sum();
        let k = self.config.transition_k;
        (counts[c] as f64 + k) / (total as f64 + k * COLS as f64)
    }

    /// Interpolated suffix back-off estimate of `P(tag | word)` over
    /// open-class tags.
    pub fn unknown_tag_distribution(&self, word: &str) -> [f64; TAG_COUNT] {
        let lower = word.to_lowercase();
        let dist = |counts: &[u64; TAG_COUNT]| -> Option<[f64; TAG_COUNT]> {
            let mut d = [0.0; TAG_COUNT];
            let mut total = 0.0;
            for t in Tag::ALL.iter().filter(|t| t.is_open_class()) {
                d[t.index()] = counts[t.index()] as f64;
                total += d[t.index()];
            }
            (total > 0.0).then(|| d.map(|v| v / total))
        };
        let base = self.suffixes.get("").and_then(dist).unwrap_or_else(|| {
            let open = Tag::ALL.iter().filter(|t| t.is_open_class()).count() as f64;
            Tag::ALL.map(|t| if t.is_open_class() { 1.0 / open } else { 0.0 })
        });
        let levels: Vec<(usize, [f64; TAG_COUNT])> = suffixes_of(&lower, self.config.max_suffix)
            .enumerate()
            .filter_map(|(i, s)| self.suffixes.get(&s).and_then(dist).map(|d| (i + 1, d)))
            .collect();
        if levels.is_empty() {
            return base;
        }
        let lambda0 = self.config.unknown_base_weight;
        let weight_sum: f64 = levels.iter().map(|(l, _)| *l as f64).sum();
        let mut out = base.map(|v| v * lambda0);
        for (l, d) in &levels {
            let w = (1.0 - lambda0) * *l as f64 / weight_sum;
            for (o, v) in out.iter_mut().zip(d) {
                *o += w * v;
            }
        }
        out
    }

    fn tag_prior(&self, tag: Tag) -> f64 {
        let total: u64 = Tag::ALL.iter().map(|&t| self.lexicon.tag_total(t)).sum();
        (self.lexicon.tag_total(tag) as f64 + 1.0) / (total as f64 + TAG_COUNT as f64)
    }

    /// Log emission scores of `token` at `position` for every tag.
    pub fn emission_row(&self, token: &str, position: usize) -> Vec<f64> {
        let mut counts = self.lexicon.counts(token).copied();
        if position == 0 {
            let lower = token.to_lowercase();
            if lower != token {
                if let Some(lc) = self.lexicon.counts(&lower) {
                    let mut merged = counts.unwrap_or([0; TAG_COUNT]);
                    for (m, c) in merged.iter_mut().zip(lc) {
                        *m += c;
                    }
                    counts = Some(merged);
                }
            }
        }
        // Hyphenated unknown words take the dictionary row of their last part.
        if counts.is_none() {
            if let Some((_, head)) = token.rsplit_once('-') {
                if !head.is_empty() {
                    counts = self.lexicon.counts(head).copied();
                }
            }
        }
        if let Some(counts) = counts {
            return Tag::ALL
                .iter()
                .map(|&t| {
                    let c = counts[t.index()];
                    if c == 0 {
                        f64::NEG_INFINITY
                    } else {
                        (c as f64 / self.lexicon.tag_total(t) as f64).ln()
                    }
                })
                .collect();
        }
        let only = |pairs: &[(Tag, f64)]| -> Vec<f64> {
            let mut row = vec![f64::NEG_INFINITY; TAG_COUNT];
            for &(t, p) in pairs {
                row[t.index()] = p.ln();
            }
            row
        };
        if is_bare_placeholder(token) {
            return only(&self.config.formula_prior);
        }
        if looks_numeric(token) {
            return only(&[(Tag::CD, 1.0)]);
        }
        if !token.chars().any(char::is_alphanumeric) {
            return only(&[(Tag::SYM, 1.0)]);
        }
        let mut dist = self.unknown_tag_distribution(token);
        if position > 0 && token.chars().next().is_some_and(char::is_uppercase) {
            let b = self.config.proper_noun_bias;
            for v in dist.iter_mut() {
                *v *= 1.0 - b;
            }
            dist[Tag::NNP.index()] += b;
        }
        Tag::ALL
            .iter()
            .map(|&t| {
                let p = dist[t.index()];
                if p > 0.0 {
                    (p / self.tag_prior(t)).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    pub fn emission_rows<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Vec<f64>> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| self.emission_row(t.as_ref(), i))
            .collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), TaggerError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut lex = String::new();
        for (w, t, c) in self.lexicon.iter() {
            lex.push_str(&format!("{w}\t{t}\t{c}\n"));
        }
        fs::write(dir.join("lexicon.tsv"), lex)?;

        let mut trans = String::new();
        for r in 0..ROWS {
            let from = if r == TAG_COUNT { "START" } else { Tag::ALL[r].as_str() };
            for c in 0..COLS {
                let n = self.transitions[r * COLS + c];
                if n > 0 {
                    let to = if c == TAG_COUNT { "STOP" } else { Tag::ALL[c].as_str() };
                    trans.push_str(&format!("{from}\t{to}\t{n}\n"));
                }
            }
        }
        fs::write(dir.join("transitions.tsv"), trans)?;

        let sorted: BTreeMap<_, _> = self.suffixes.iter().collect();
        let mut suf = String::new();
        for (s, counts) in sorted {
            for t in Tag::ALL {
                if counts[t.index()] > 0 {
                    suf.push_str(&format!("{s}\t{t}\t{}\n", counts[t.index()]));
                }
            }
        }
        fs::write(dir.join("suffixes.tsv"), suf)?;
        fs::write(dir.join("config"), self.config.to_text())?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, TaggerError> {
        let dir = dir.as_ref();
        let read = |name: &str| fs::read_to_string(dir.join(name));
        let config = TaggerConfig::parse(&read("config")?)?;

        let triples = |name: &str, src: &str| -> Result<Vec<(String, String, u64)>, TaggerError> {
            src.lines()
                .enumerate()
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .map(|(i, l)| {
                    parse_triple(l)
                        .map(|(a, b, c)| (a.to_string(), b.to_string(), c))
                        .map_err(|message| TaggerError::Format {
                            file: name.to_string(),
                            line: i + 1,
                            message,
                        })
                })
                .collect()
        };

        let mut lexicon = Lexicon::default();
        for (w, t, c) in triples("lexicon.tsv", &read("lexicon.tsv")?)? {
            lexicon.add(&w, t.parse()?, c);
        }
        let mut transitions = vec![0u64; ROWS * COLS];
        for (from, to, c) in triples("transitions.tsv", &read("transitions.tsv")?)? {
            let r = row_index(from.parse()?);
            let col = col_index(to.parse()?);
            match (r, col) {
                (Some(r), Some(col)) => transitions[r * COLS + col] += c,
                _ => {
                    return Err(TaggerError::Config(format!(
                        "transition {from} -> {to} is not allowed"
                    )))
                }
            }
        }
        let mut suffixes: HashMap<String, [u64; TAG_COUNT]> = HashMap::new();
        for (s, t, c) in triples("suffixes.tsv", &read("suffixes.tsv")?)? {
            let tag: Tag = t.parse()?;
            suffixes.entry(s).or_insert([0; TAG_COUNT])[tag.index()] += c;
        }
        Self::from_parts(config, lexicon, transitions, suffixes)
    }
}

fn parse_triple(line: &str) -> Result<(&str, &str, u64), String> {
    let mut cols = line.split('\t');
    let (Some(a), Some(b), Some(c), None) = (cols.next(), cols.next(), cols.next(), cols.next())
    else {
        return Err("expected three tab-separated columns".into());
    };
    let n = c
        .trim()
        .parse::<u64>()
        .map_err(|_| format!("bad count {c:?}"))?;
    if n == 0 {
        return Err("counts must be positive".into());
    }
    Ok((a, b.trim(), n))
}

/// Estimates a bigram HMM from tagged sentences. Formula placeholders only
/// contribute transitions; their emissions come from the formula prior.
pub fn train_hmm(
    corpus: &[TaggedSentence],
    config: TaggerConfig,
) -> Result<TaggerModel, TaggerError> {
    config.validate()?;
    let mut lexicon = Lexicon::default();
    let mut transitions = vec![0u64; ROWS * COLS];
    let mut seen_any = false;
    for sentence in corpus.iter().filter(|s| !s.is_empty()) {
        seen_any = true;
        let mut prev = TAG_COUNT;
        for (w, t) in &sentence.pairs {
            transitions[prev * COLS + t.index()] += 1;
            prev = t.index();
            if !is_placeholder(w) {
                lexicon.add(w, *t, 1);
            }
        }
        transitions[prev * COLS + TAG_COUNT] += 1;
    }
    if !seen_any {
        return Err(TaggerError::EmptyCorpus);
    }
    let mut suffixes: HashMap<String, [u64; TAG_COUNT]> = HashMap::new();
    for (w, counts) in &lexicon.entries {
        let total: u64 = counts.iter().sum();
        if total >= config.rare_threshold {
            continue;
        }
        let lower = w.to_lowercase();
        let keys = std::iter::once(String::new()).chain(suffixes_of(&lower, config.max_suffix));
        for key in keys {
            let row = suffixes.entry(key).or_insert([0; TAG_COUNT]);
            for (r, c) in row.iter_mut().zip(counts) {
                *r += c;
            }
        }
    }
    TaggerModel::from_parts(config, lexicon, transitions, suffixes)
}

/// Tags a token sequence with the highest-scoring path under the model.
pub fn viterbi_tag<S: AsRef<str>>(tokens: &[S], model: &TaggerModel) -> TaggedSentence {
    let emissions = model.emission_rows(tokens);
    let (path, _) = model.hmm().viterbi(&emissions);
    TaggedSentence::new(
        tokens
            .iter()
            .zip(path)
            .map(|(w, s)| (w.as_ref().to_string(), Tag::ALL[s]))
            .collect(),
    )
}

/// Joint log-probability of a tag sequence for the tokens, including the
/// START and STOP transitions.
pub fn tag_probability<S: AsRef<str>>(
    tokens: &[S],
    tags: &[Tag],
    model: &TaggerModel,
) -> Result<f64, TaggerError> {
    if tokens.len() != tags.len() {
        return Err(TaggerError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    if tokens.is_empty() {
        return Ok(model.transition_prob(State::Start, State::Stop).ln());
    }
    let mut logp = 0.0;
    let mut prev = State::Start;
    for (i, (w, &t)) in tokens.iter().zip(tags).enumerate() {
        logp += model.transition_prob(prev, State::Tag(t)).ln();
        logp += model.emission_row(w.as_ref(), i)[t.index()];
        prev = State::Tag(t);
    }
    Ok(logp + model.transition_prob(prev, State::Stop).ln())
}
