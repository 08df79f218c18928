use std::collections::{BTreeMap, BTreeSet};

use mathtag::classifier::{train_all, featurize, phrase_tokens, DocumentClassifier, FeatureIndex, SmoParams, DEFAULT_BUCKETS};
use mathtag::corpus::{load_corpus, Document};
use mathtag::keyphrase::Extractor;
use mathtag::msc::MscCode;
use mathtag::synthetic::*;

fn bundled(name: &str) -> Vec<Document> {
    load_corpus(format!("{}/data/synthetic/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn bundled_files_match_generator() {
    assert_eq!(bundled("five_class.jsonl"), five_class_corpus());
    assert_eq!(bundled("all_class.jsonl"), all_class_corpus(4, 63));
}

#[test]
fn five_class_shape() {
    let c = five_class_corpus();
    assert_eq!(c.len(), 500);
    let mut per: BTreeMap<MscCode, usize> = BTreeMap::new();
    for d in &c {
        *per.entry(d.msc_primary.unwrap()).or_default() += 1;
        assert!(!d.msc_secondary.contains(&d.msc_primary.unwrap()));
    }
    let want: BTreeSet<MscCode> = FIVE_CLASSES.iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(per.keys().copied().collect::<BTreeSet<_>>(), want);
    assert!(per.values().all(|&n| n == 100));
    assert!(c.iter().any(|d| !d.msc_secondary.is_empty()));
}

#[test]
fn pseudo_vocabularies_are_disjoint() {
    let v = pseudo_vocabularies();
    assert_eq!(v.len(), 63);
    let mut seen = BTreeSet::new();
    for cv in &v {
        for w in cv.adjectives.iter().chain(&cv.nouns) {
            assert!(seen.insert(w.clone()), "{w} repeated");
        }
    }
}

#[test]
fn phrase_density_on_first_hundred() {
    let ex = Extractor::bundled();
    let docs: Vec<Document> = five_class_corpus().into_iter().take(100).collect();
    let (mut raw, mut fin) = (0usize, 0usize);
    for d in &docs {
        let e = ex.extract_detailed(d).unwrap();
        raw += e.raw_count;
        fin += e.candidates.len();
    }
    let (raw, fin) = (raw as f64 / 100.0, fin as f64 / 100.0);
    assert!((10.0..=20.0).contains(&raw), "raw {raw}");
    assert!((7.0..=10.0).contains(&fin), "final {fin}");
}

#[test]
fn all_class_corpus_trains_one_model_per_class() {
    let ex = Extractor::bundled();
    let corpus = bundled("all_class.jsonl");
    let phrases: Vec<_> = corpus.iter().map(|d| (ex.extract_keyphrases(d).unwrap(), d.msc_primary.unwrap())).collect();
    let index = FeatureIndex::new(phrases.iter().flat_map(|(p, _)| p.iter().flat_map(phrase_tokens)), DEFAULT_BUCKETS);
    let examples: Vec<_> = phrases.iter().map(|(p, c)| (featurize(p, &index), *c)).collect();
    let out = train_all(&examples, &SmoParams::default());
    assert_eq!(out.models.len(), 63);
    assert!(out.warnings.is_empty(), "{:?}", out.warnings);
}

#[test]
fn class_vocabulary_document_ranks_its_class_first() {
    let ex = Extractor::bundled();
    let (train, _) = holdout_split(&five_class_corpus(), HOLDOUT_SHARE, HOLDOUT_SEED);
    let (clf, warnings) = DocumentClassifier::train(&train, &ex, &SmoParams::default());
    assert!(warnings.is_empty());
    assert_eq!(clf.models.len(), 5);
    let vocab = five_class_vocabularies();
    let text = "We study the elliptic equation with parabolic boundary regularity. \
                The hyperbolic wave operator satisfies the semilinear heat estimate.";
    // Oracle: the class sharing the most words with the text.
    let words: BTreeSet<&str> = text.split(|c: char| !c.is_alphanumeric() && c != '-').collect();
    let best = vocab
        .iter()
        .max_by_key(|v| v.adjectives.iter().chain(&v.nouns).filter(|w| words.contains(w.as_str())).count())
        .unwrap()
        .code;
    let ranked = clf.classify_document(&Document::new("q", text), &ex, f64::NEG_INFINITY);
    assert_eq!(ranked[0].0, best);
    assert_eq!(best.to_string(), "35");
    assert!(clf.classify_document(&Document::new("q", text), &ex, f64::INFINITY).is_empty());
    assert!(clf.classify_document(&Document::new("e", ""), &ex, 0.0).is_empty());

    let dir = tempfile::tempdir().unwrap();
    clf.save(dir.path()).unwrap();
    let back = DocumentClassifier::load(dir.path()).unwrap();
    assert_eq!(back.index, clf.index);
    assert_eq!(back.models, clf.models);
}
