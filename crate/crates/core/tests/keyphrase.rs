use std::collections::HashMap;
use std::sync::Arc;

use mathtag::chunker::{extract_nps, ChunkGrammar, NounPhrase};
use mathtag::corpus::Document;
use mathtag::keyphrase::{
    group_similar, lcs_length, score_phrase, select_representative, similarity,
    ExtractionConfig, Extractor, Reason, ScoredPhrase, ScoringResources, StopPattern,
    TaggedDocument, Tier,
};
use mathtag::masking::FormulaTable;
use mathtag::tagger::TaggedSentence;
use mathtag::vocabstore::Status;
use proptest::prelude::*;

const PEANO: &str = "The classical Peano theorem states that in finite dimensional \
spaces the Cauchy problem $x'(t)=f(t,x(t))$, $x(t\\sb 0)=x\\sb 0$, \
has a solution provided $f$ is continuous.";

fn np(tagged: &str) -> NounPhrase {
    let s = TaggedSentence::parse(tagged, '/').unwrap();
    let mut nps = extract_nps(&s, 0, &ChunkGrammar::bundled(), &FormulaTable::new("t"));
    assert_eq!(nps.len(), 1, "{tagged}");
    let mut p = nps.remove(0);
    // Not sentence-initial, so surface text keeps its case.
    p.span = (p.span.0 + 1, p.span.1 + 1);
    p
}

fn scored(tagged: &str, res: &ScoringResources) -> ScoredPhrase {
    score_phrase(&np(tagged), &Document::new("d", ""), res, &ExtractionConfig::default())
}

fn doc(id: &str, text: &str) -> Document {
    Document::new(id, text)
}

#[test]
fn peano_document_candidates() {
    let ex = Extractor::bundled();
    let out = ex.extract_keyphrases(&doc("peano", PEANO)).unwrap();
    let surfaces: Vec<&str> = out.iter().map(|p| p.surface.as_str()).collect();
    assert!(surfaces.contains(&"the classical Peano theorem"), "{surfaces:?}");
    let cauchy = out
        .iter()
        .find(|p| p.surface == "the Cauchy problem $x'(t)=f(t,x(t))$ , $x(t\\sb 0)=x\\sb 0$")
        .unwrap_or_else(|| panic!("{surfaces:?}"));
    assert_eq!(cauchy.tier, Tier::High);
    assert!(cauchy.reasons.contains(&Reason::MathematicianName));
    assert!(cauchy.reasons.contains(&Reason::Formula));
    let peano = out.iter().find(|p| p.surface == "the classical Peano theorem").unwrap();
    assert_eq!(peano.reasons, vec![Reason::MathematicianName]);
}

#[test]
fn tier_examples() {
    let res = ScoringResources::bundled();
    let ex = Extractor::bundled();
    let hinf = ex.extract_keyphrases(&doc("h", "We study $H^\\infty$-control.")).unwrap();
    let p = hinf.iter().find(|p| p.surface == "$H^\\infty$-control").expect("H-infinity phrase");
    assert_eq!(p.tier, Tier::High);
    assert_eq!(p.reasons, vec![Reason::Formula]);

    let stop = scored("in/IN the/DT following/VBN paper/NN", &res);
    assert_eq!(stop.tier, Tier::Negative);
    assert_eq!(stop.reasons, vec![Reason::StopPhrase]);
    assert_eq!(stop.weight, -1.0);

    let single = ex.extract_keyphrases(&doc("f", "Let $f$ be given.")).unwrap();
    let f = single.iter().find(|p| p.surface == "$f$").expect("single formula phrase");
    assert_eq!(f.tier, Tier::Baseline);
    assert!(f.reasons.is_empty());

    let gaz = scored("the/DT distance/NN function/NN", &res);
    assert_eq!(gaz.tier, Tier::VeryHigh);
    assert_eq!(gaz.weight, 3.0);

    let acr = scored("the/DT PDE/NNP", &res);
    assert_eq!(acr.tier, Tier::High);
    assert_eq!(acr.reasons, vec![Reason::Acronym]);
}

#[test]
fn author_and_vocabulary_reasons() {
    let vocab: HashMap<String, Status> = HashMap::from([
        ("compact embedding".to_string(), Status::Good),
        ("trivial remark".to_string(), Status::Bad),
    ]);
    let res = ScoringResources::bundled_with_vocabulary(Arc::new(vocab));
    let cfg = ExtractionConfig::default();
    let mut d = doc("d", "");
    d.author_keyphrases = vec!["Navier-Stokes equations".into()];
    let good = score_phrase(&np("a/DT compact/JJ embedding/NN"), &d, &res, &cfg);
    assert_eq!((good.tier, good.reasons.clone()), (Tier::VeryHigh, vec![Reason::ExistingKeyphrase]));
    let bad = score_phrase(&np("a/DT trivial/JJ remark/NN"), &d, &res, &cfg);
    assert_eq!(bad.tier, Tier::Negative);
    let auth = score_phrase(&np("the/DT Navier-Stokes/NNP equations/NNS"), &d, &res, &cfg);
    assert_eq!(auth.tier, Tier::VeryHigh);
    assert_eq!(
        auth.reasons,
        vec![Reason::Gazetteer, Reason::AuthorKeyphrase, Reason::MathematicianName]
    );
    assert_eq!(auth.weight, 3.5);
}

#[test]
fn stop_glob() {
    let p = StopPattern::new("* paper");
    assert!(p.matches(&["paper"]));
    assert!(p.matches(&["present", "short", "paper"]));
    assert!(!p.matches(&["paper", "clip"]));
}

#[test]
fn lcs_examples() {
    let x = ["a", "b", "c"];
    assert_eq!(lcs_length(&x, &x), 3);
    assert_eq!(lcs_length(&["marginal", "function"], &["distance", "function"]), 1);
    assert_eq!(lcs_length(&x, &[] as &[&str]), 0);
    assert_eq!(lcs_length(&["Function"], &["function"]), 1);
    assert_eq!(lcs_length(&["Ökonomie", "Satz"], &["ökonomie", "satz"]), 2);
}

#[test]
fn grouping_examples() {
    let res = ScoringResources::bundled();
    let a = scored("a/DT quasi-differentiable/JJ function/NN", &res);
    let b = scored("quasi-differentiable/JJ functions/NNS", &res);
    assert_eq!(similarity(&a.phrase, &b.phrase), 1.0);
    let mut ps = vec![a, b];
    group_similar(&mut ps, 0.5);
    assert_eq!(ps[0].group_id, ps[1].group_id);

    let mut disjoint = vec![scored("Hilbert/NNP space/NN", &res), scored("weak/JJ solution/NN", &res)];
    group_similar(&mut disjoint, 0.5);
    assert_ne!(disjoint[0].group_id, disjoint[1].group_id);

    let mut one = vec![scored("weak/JJ solution/NN", &res)];
    group_similar(&mut one, 0.6);
    assert_eq!(one[0].group_id, Some(0));
}

#[test]
fn representative_precedence() {
    let vocab: HashMap<String, Status> =
        HashMap::from([("marginal functions".to_string(), Status::Good)]);
    let res = ScoringResources::bundled_with_vocabulary(Arc::new(vocab));
    let plain = ScoringResources::bundled();
    let group = vec![scored("marginal/JJ function/NN", &plain), scored("marginal/JJ functions/NNS", &plain)];
    // "marginal function" is in the gazetteer but the vocabulary entry wins.
    assert_eq!(select_representative(&group, &res).unwrap().surface, "marginal functions");
    assert_eq!(select_representative(&group, &plain).unwrap().surface, "marginal function");
    assert_eq!(select_representative(&group[..1], &res).unwrap().surface, "marginal function");
    let ties = vec![
        scored("compact/JJ embeddings/NNS", &plain),
        scored("the/DT compact/JJ embedding/NN", &plain),
        scored("compact/JJ embedding/NN", &plain),
    ];
    assert_eq!(select_representative(&ties, &plain).unwrap().surface, "compact embedding");
    assert!(select_representative(&[], &plain).is_none());
}

#[test]
fn empty_document_has_no_candidates() {
    let ex = Extractor::bundled();
    assert!(ex.extract_keyphrases(&doc("e", "")).unwrap().is_empty());
}

#[test]
fn masking_errors_propagate() {
    let ex = Extractor::bundled();
    assert!(ex.extract_keyphrases(&doc("e", "Let $x be.")).is_err());
}

#[test]
fn staged_extraction_matches_fused() {
    let ex = Extractor::bundled();
    let d = doc("peano", PEANO);
    let tagged = ex.tag_document(&d).unwrap();
    let json = serde_json::to_string(&tagged).unwrap();
    let back: TaggedDocument = serde_json::from_str(&json).unwrap();
    assert_eq!(ex.extract_from_tagged(&d, &back), ex.extract_detailed(&d).unwrap());
    assert!(tagged.restored_lines()[0].contains("$f$_NN is_VBZ continuous_JJ ._."));
}

#[test]
fn config_file() {
    let c = ExtractionConfig::parse("# c\nmax_phrases=5\nmin_phrases = 3\nsimilarity_threshold=0.5\n").unwrap();
    assert_eq!((c.max_phrases, c.min_phrases, c.similarity_threshold), (5, 3, 0.5));
    assert!(ExtractionConfig::parse("max_phrases=2\nmin_phrases=3").is_err());
    assert!(ExtractionConfig::parse("bogus=1").is_err());
    assert!(ExtractionConfig::parse("weight_high=5").is_err());
}

#[test]
fn stop_phrases_must_not_be_gazetteer_entries() {
    let r = ScoringResources::new(
        vec!["Hilbert space".to_string()],
        vec![],
        Default::default(),
        Arc::new(HashMap::<String, Status>::new()),
        vec!["the Hilbert space".to_string()],
    );
    assert!(r.is_err());
}

fn subsequences(x: &[u8]) -> Vec<Vec<u8>> {
    (0..1u32 << x.len())
        .map(|m| (0..x.len()).filter(|i| m >> i & 1 == 1).map(|i| x[i]).collect())
        .collect()
}

const WORDS: [&str; 14] = [
    "The", "operator", "is", "bounded", "and", "we", "prove", "a", "compact", "embedding",
    "theorem", "Hilbert", "spaces", "$x$",
];

proptest! {
    #[test]
    fn lcs_matches_subsequence_oracle(
        a in prop::collection::vec(0u8..3, 0..7),
        b in prop::collection::vec(0u8..3, 0..7),
    ) {
        let sa: std::collections::HashSet<Vec<u8>> = subsequences(&a).into_iter().collect();
        let oracle = subsequences(&b).into_iter().filter(|s| sa.contains(s)).map(|s| s.len()).max().unwrap();
        let ta: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        let tb: Vec<String> = b.iter().map(|x| x.to_string()).collect();
        prop_assert_eq!(lcs_length(&ta, &tb), oracle);
    }

    #[test]
    fn extraction_invariants(words in prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..60)) {
        let ex = Extractor::bundled();
        let text = words.chunks(9).map(|c| c.join(" ") + ".").collect::<Vec<_>>().join(" ");
        let d = doc("p", &text);
        let out = ex.extract_detailed(&d).unwrap();
        prop_assert!(out.candidates.len() <= ex.config.max_phrases);
        for w in out.candidates.windows(2) {
            prop_assert!(w[0].scored.weight >= w[1].scored.weight);
        }
        for c in &out.candidates {
            prop_assert!(c.scored.tier != Tier::Negative);
            prop_assert!(c.group_members.contains(&c.scored.surface));
        }
        let again = ex.extract_detailed(&d).unwrap();
        prop_assert_eq!(out, again);

        let tagged = ex.tag_document(&d).unwrap();
        let mut all = ex.score_all(&d, &tagged);
        group_similar(&mut all, 0.6);
        let groups: std::collections::BTreeSet<usize> = all.iter().map(|p| p.group_id.unwrap()).collect();
        prop_assert_eq!(groups.len(), groups.iter().max().map_or(0, |m| m + 1));
        for g in groups {
            let members: Vec<ScoredPhrase> = all.iter().filter(|p| p.group_id == Some(g)).cloned().collect();
            let rep = select_representative(&members, &ex.resources).unwrap();
            prop_assert!(members.contains(rep));
        }
    }
}
