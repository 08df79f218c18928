//! Deterministic synthetic abstract corpora for training and evaluation at
//! desk scale.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::msc::MscCode;

/// Classes of the five-class corpus.
pub const FIVE_CLASSES: [&str; 5] = ["35", "05", "60", "76", "68"];

/// Modifier and head words characteristic of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassVocabulary {
    pub code: MscCode,
    pub adjectives: Vec<String>,
    pub nouns: Vec<String>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn five_class_vocabularies() -> Vec<ClassVocabulary> {
    let raw = [
        (
            "35",
            "elliptic parabolic hyperbolic semilinear quasilinear nonlinear variational",
            "equation boundary regularity wave heat diffusion operator estimate eigenvalue potential",
        ),
        (
            "05",
            "combinatorial chromatic planar bipartite four-colorable extremal",
            "graph vertex edge tree coloring hypergraph permutation partition tableau matroid",
        ),
        (
            "60",
            "stochastic random ergodic gaussian markovian stationary",
            "martingale process distribution probability walk variance expectation filtration sample law",
        ),
        (
            "76",
            "turbulent viscous incompressible compressible laminar inviscid",
            "flow fluid vortex layer turbulence velocity pressure jet wake channel",
        ),
        (
            "68",
            "efficient adaptive parallel distributed NP-complete approximate",
            "algorithm complexity code network scheme automaton compiler query protocol heuristic",
        ),
    ];
    raw.iter()
        .map(|(c, a, n)| ClassVocabulary {
            code: c.parse().expect("valid class"),
            adjectives: words(a),
            nouns: words(n),
        })
        .collect()
}

const SYLLABLES: [&str; 16] = [
    "ba", "ce", "di", "fo", "gu", "ka", "le", "mi", "no", "pu", "ra", "se", "ti", "vo", "xu", "ze",
];

fn pseudo_stem(class: usize, word: usize) -> String {
    let k = class * 8 + word;
    format!(
        "{}{}{}",
        SYLLABLES[k % 16],
        SYLLABLES[(k / 16) % 16],
        SYLLABLES[(k / 256) % 16]
    )
}

/// Vocabularies built from pseudo-words for every top-level class. Nouns
/// end in `-ation` and adjectives in `-ical`.
pub fn pseudo_vocabularies() -> Vec<ClassVocabulary> {
    MscCode::all()
        .enumerate()
        .map(|(i, code)| ClassVocabulary {
            code,
            adjectives: (0..3).map(|w| format!("{}ical", pseudo_stem(i, w))).collect(),
            nouns: (3..8).map(|w| format!("{}ation", pseudo_stem(i, w))).collect(),
        })
        .collect()
}

const GENERIC: [&str; 10] = [
    "the main result",
    "this paper",
    "a new method",
    "the proof",
    "several examples",
    "the existence",
    "a sharp bound",
    "the uniqueness",
    "numerical experiments",
    "the general case",
];

const TEMPLATES: [&str; 8] = [
    "We study {} .",
    "We prove that {} has {} .",
    "In {} we consider {} with {} .",
    "{} implies {} for {} .",
    "We show that {} satisfies {} .",
    "{} yields {} .",
    "We obtain {} for {} .",
    "{} is given by {} .",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub docs: usize,
    pub seed: u64,
    /// Share of documents with one secondary class.
    pub secondary_rate: f64,
    /// Share of class-specific phrases drawn from the secondary class when
    /// present.
    pub secondary_share: f64,
    /// Share of phrases drawn from the class-neutral pool.
    pub generic_share: f64,
    /// Share of documents written mostly in class-neutral phrases.
    pub vague_rate: f64,
    /// Class-neutral phrase share inside such documents.
    pub vague_generic_share: f64,
    pub min_phrases: usize,
    pub max_phrases: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            docs: 500,
            seed: 2014,
            secondary_rate: 0.3,
            secondary_share: 0.2,
            generic_share: 0.15,
            vague_rate: 0.2,
            vague_generic_share: 0.95,
            min_phrases: 10,
            max_phrases: 20,
        }
    }
}

fn class_phrase(v: &ClassVocabulary, rng: &mut ChaCha8Rng) -> String {
    let noun = v.nouns.choose(rng).expect("nonempty");
    let mut parts: Vec<&str> = Vec::new();
    if rng.gen_bool(0.3) {
        parts.push("the");
    }
    if rng.gen_bool(0.8) {
        parts.push(v.adjectives.choose(rng).expect("nonempty"));
    }
    if rng.gen_bool(0.35) {
        let other = v.nouns.choose(rng).expect("nonempty");
        if other != noun {
            parts.push(other);
        }
    }
    parts.push(noun);
    parts.join(" ")
}

fn render(phrases: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut sentences = Vec::new();
    let mut rest = phrases;
    while !rest.is_empty() {
        let fitting: Vec<&&str> = TEMPLATES
            .iter()
            .filter(|t| t.matches("{}").count() <= rest.len())
            .collect();
        let template = fitting.choose(rng).expect("single-slot templates always fit");
        let slots = template.matches("{}").count();
        let mut sentence = String::new();
        for (piece, phrase) in template.split("{}").zip(rest[..slots].iter().map(Some).chain([None])) {
            sentence.push_str(piece);
            if let Some(p) = phrase {
                sentence.push_str(p);
            }
        }
        let mut chars = sentence.chars();
        let sentence = match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => sentence,
        };
        sentences.push(sentence.replace(" .", "."));
        rest = &rest[slots..];
    }
    sentences.join(" ")
}

/// Generates a corpus over `vocabularies`, cycling primary classes so each
/// class gets an equal share of documents.
pub fn generate(vocabularies: &[ClassVocabulary], config: &SyntheticConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.docs)
        .map(|i| {
            let primary = &vocabularies[i % vocabularies.len()];
            let secondary = (vocabularies.len() > 1 && rng.gen_bool(config.secondary_rate)).then(|| {
                let offset = rng.gen_range(1..vocabularies.len());
                &vocabularies[(i % vocabularies.len() + offset) % vocabularies.len()]
            });
            let generic_share = if rng.gen_bool(config.vague_rate) {
                config.vague_generic_share
            } else {
                config.generic_share
            };
            let n = rng.gen_range(config.min_phrases..=config.max_phrases);
            let phrases: Vec<String> = (0..n)
                .map(|_| {
                    if rng.gen_bool(generic_share) {
                        GENERIC.choose(&mut rng).expect("nonempty").to_string()
                    } else if let Some(s) = secondary.filter(|_| rng.gen_bool(config.secondary_share)) {
                        class_phrase(s, &mut rng)
                    } else {
                        class_phrase(primary, &mut rng)
                    }
                })
                .collect();
            let mut doc = Document::new(format!("syn-{i:05}"), render(&phrases, &mut rng))
                .with_primary(primary.code);
            doc.title = format!("On {}", phrases[0]);
            if let Some(s) = secondary {
                doc = doc.with_secondary([s.code]);
            }
            doc
        })
        .collect()
}

/// Held-out share and split seed used for the bundled evaluation.
pub const HOLDOUT_SHARE: f64 = 0.3;
pub const HOLDOUT_SEED: u64 = 0;

/// The five-class corpus (classes 35, 05, 60, 76, 68) with 500 documents.
pub fn five_class_corpus() -> Vec<Document> {
    generate(&five_class_vocabularies(), &SyntheticConfig::default())
}

/// A corpus covering all 63 top-level classes with pseudo-word vocabularies.
pub fn all_class_corpus(docs_per_class: usize, seed: u64) -> Vec<Document> {
    let vocab = pseudo_vocabularies();
    let config = SyntheticConfig {
        docs: docs_per_class * vocab.len(),
        seed,
        ..SyntheticConfig::default()
    };
    generate(&vocab, &config)
}

/// Seeded random split; returns `(train, held_out)` with
/// `round(len * held_out_share)` held-out documents.
pub fn holdout_split(corpus: &[Document], held_out_share: f64, seed: u64) -> (Vec<Document>, Vec<Document>) {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (corpus.len() as f64 * held_out_share.clamp(0.0, 1.0)).round() as usize;
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (
        train.into_iter().map(|i| corpus[i].clone()).collect(),
        test.into_iter().map(|i| corpus[i].clone()).collect(),
    )
}
