mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::oracles::*;
use mathtag::classifier::*;
use mathtag::corpus::Document;
use mathtag::msc::{MscCode, TOP_LEVEL_COUNT};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn code(s: &str) -> MscCode {
    s.parse().unwrap()
}

fn dense(v: &[f64]) -> SparseVector {
    SparseVector::from_pairs(v.iter().enumerate().map(|(i, &x)| (i as u32, x)))
}

fn gram(xs: &[SparseVector], k: &Kernel) -> Vec<Vec<f64>> {
    xs.iter()
        .map(|a| xs.iter().map(|b| k.eval(a, b)).collect())
        .collect()
}

pub fn separable_problem(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<(SparseVector, f64)> {
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Vec::new();
    while out.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm;
        if m.abs() < 0.2 {
            continue;
        }
        let label = if m > 0.0 { 1.0 } else { -1.0 };
        if out.len() + 1 == n && !out.iter().any(|(_, l)| *l != label) {
            continue;
        }
        out.push((dense(&x), label));
    }
    out
}

fn kkt_violation(sol: &DualSolution, examples: &[(SparseVector, f64)]) -> f64 {
    examples
        .iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let r = y * svm_decision(&sol.model, x) - 1.0;
            let a = sol.alpha[i];
            if a <= 0.0 {
                (-r).max(0.0)
            } else if a >= sol.c[i] {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn featurize_examples() {
    let idx = FeatureIndex::new(["distance".to_string(), "function".to_string()], 16);
    assert!(featurize(&[], &idx).is_zero());
    assert_eq!(idx.dimension(), 18);
    assert_ne!(idx.id("banach"), idx.id("distance"));
    assert!(idx.id("banach") >= 2 && idx.id("banach") < 18);
}

#[test]
fn kernel_examples() {
    let x = dense(&[0.6, 0.8]);
    let y = dense(&[1.0, -2.0]);
    assert_eq!(polynomial_kernel(&x, &y, 1, 0.0, 1.0), x.dot(&y));
    assert!((polynomial_kernel(&x, &x, 2, 1.0, 1.0) - 4.0).abs() < 1e-12);
    assert_eq!(Kernel::default().eval(&x, &y), Kernel::default().eval(&y, &x));
}

#[test]
fn gram_matrix_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<SparseVector> = (0..10)
        .map(|_| {
            SparseVector::from_pairs(
                (0..4).map(|_| (rng.gen_range(0..12u32), rng.gen_range(-1.0..1.0))),
            )
        })
        .collect();
    let g = gram(&xs, &Kernel::default());
    for i in 0..10 {
        for j in 0..10 {
            assert_eq!(g[i][j], g[j][i]);
        }
    }
    let min = jacobi_eigenvalues(&g).into_iter().fold(f64::MAX, f64::min);
    assert!(min >= -1e-8, "min eigenvalue {min}");
}

#[test]
fn two_points_become_support_vectors() {
    let ex = vec![(dense(&[1.0, 0.0]), 1.0), (dense(&[-1.0, 0.0]), -1.0)];
    let params = SmoParams {
        kernel: Kernel { degree: 1, coef0: 0.0, gamma: 1.0 },
        ..SmoParams::default()
    };
    let m = smo_train(&ex, &params).unwrap();
    assert_eq!(m.support_vectors.len(), 2);
    for (x, y) in &ex {
        assert!(svm_decision(&m, x) * y > 0.0);
    }
}

#[test]
fn training_errors() {
    let params = SmoParams::default();
    let one = vec![(dense(&[1.0]), 1.0)];
    assert!(matches!(smo_train(&one, &params), Err(SvmError::TooFewExamples(1))));
    let same = vec![(dense(&[1.0]), 1.0), (dense(&[2.0]), 1.0)];
    assert!(matches!(smo_train(&same, &params), Err(SvmError::SingleClass)));
    let bad_c = SmoParams { c: 0.0, ..SmoParams::default() };
    let two = vec![(dense(&[1.0]), 1.0), (dense(&[-1.0]), -1.0)];
    assert!(matches!(smo_train(&two, &bad_c), Err(SvmError::InvalidParameter(_))));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy: Vec<(SparseVector, f64)> = (0..40)
        .map(|i| (dense(&[rng.gen_range(-1.0..1.0)]), if i % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    let capped = SmoParams { max_passes: Some(1), ..SmoParams::default() };
    match smo_train(&noisy, &capped) {
        Err(SvmError::NonConvergence { passes, partial }) => {
            assert_eq!(passes, 1);
            assert_eq!(partial.support_vectors.len(), partial.alphas.len());
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn smo_matches_dual_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = SmoParams { c: 10.0, ..SmoParams::default() };
    for _ in 0..5 {
        let ex = separable_problem(&mut rng, 20, 3);
        let sol = smo_train_dual(&ex, &params).unwrap();
        let xs: Vec<SparseVector> = ex.iter().map(|(x, _)| x.clone()).collect();
        let y: Vec<f64> = ex.iter().map(|(_, l)| *l).collect();
        let g = gram(&xs, &params.kernel);
        let reference = dual_reference(&y, &g, &sol.c, 4000);
        let (o_smo, o_ref) = (dual_objective(&sol.alpha, &y, &g), dual_objective(&reference, &y, &g));
        assert!((o_smo - o_ref).abs() <= 1e-3, "smo {o_smo} ref {o_ref}");
        let eq: f64 = sol.model.alphas.iter().sum();
        assert!(eq.abs() <= 1e-6);
        assert!(kkt_violation(&sol, &ex) <= params.tol + 1e-9);
        for (x, l) in &ex {
            assert!(svm_decision(&sol.model, x) * l > 0.0);
        }
    }
}

#[test]
fn xor_is_kernel_separable() {
    let pts = [([1.0, 1.0], 1.0), ([-1.0, -1.0], 1.0), ([1.0, -1.0], -1.0), ([-1.0, 1.0], -1.0)];
    let ex: Vec<(SparseVector, f64)> = pts.iter().map(|(x, l)| (dense(x), *l)).collect();
    let m = smo_train(&ex, &SmoParams::default()).unwrap();
    for (x, l) in &ex {
        assert!(svm_decision(&m, x) * l > 0.0);
    }
    // The lifted points are linearly separable by the x1*x2 coordinate.
    for (x, l) in &pts {
        let phi = quadratic_feature_map(x);
        assert!(phi[4] * l > 0.0);
    }
    let linear = SmoParams {
        kernel: Kernel { degree: 1, coef0: 0.0, gamma: 1.0 },
        ..SmoParams::default()
    };
    let m = smo_train(&ex, &linear).unwrap();
    assert!(ex.iter().any(|(x, l)| svm_decision(&m, x) * l <= 0.0));
}

#[test]
fn decision_of_zero_vector_is_bias() {
    let m = SvmModel {
        msc_class: None,
        support_vectors: vec![dense(&[1.0])],
        alphas: vec![0.5],
        bias: 0.0,
        kernel: Kernel { degree: 2, coef0: 0.0, gamma: 1.0 },
        c: 1.0,
        passes: 0,
    };
    assert_eq!(svm_decision(&m, &SparseVector::default()), 0.0);
}

#[test]
fn train_all_counts_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let classes = ["35", "05", "60"];
    let ex: Vec<(SparseVector, MscCode)> = (0..30)
        .map(|i| {
            let k = i % 3;
            let mut v = vec![0.0; 3];
            v[k] = 1.0;
            v[(k + 1) % 3] = rng.gen_range(0.0..0.2);
            (dense(&v), code(classes[k]))
        })
        .collect();
    let out = train_all(&ex, &SmoParams::default());
    assert_eq!(out.models.len(), 3);
    assert!(out.warnings.is_empty());
    for (x, c) in &ex {
        let ranked = rank_classes(x, &out.models, f64::NEG_INFINITY);
        assert_eq!(ranked[0].0, *c);
        assert!(rank_classes(x, &out.models, f64::INFINITY).is_empty());
    }
    let single: Vec<(SparseVector, MscCode)> = ex.iter().map(|(x, _)| (x.clone(), code("35"))).collect();
    let out = train_all(&single, &SmoParams::default());
    assert!(out.models.is_empty());
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn model_file_round_trip() {
    let ex = vec![(dense(&[1.0, 0.5]), 1.0), (dense(&[-1.0, 0.25]), -1.0)];
    let mut m = smo_train(&ex, &SmoParams::default()).unwrap();
    m.msc_class = Some(code("35"));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.svm");
    save_model(&m, &p).unwrap();
    assert_eq!(load_model(&p).unwrap(), m);
    std::fs::write(&p, "class=35\nkernel=rbf\n").unwrap();
    assert!(load_model(&p).is_err());
}

fn preds(v: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<MscCode>> {
    v.iter()
        .map(|(d, cs)| (d.to_string(), cs.iter().map(|c| code(c)).collect()))
        .collect()
}

fn golds(v: &[(&str, &str)]) -> BTreeMap<String, MscCode> {
    v.iter().map(|(d, c)| (d.to_string(), code(c))).collect()
}

#[test]
fn evaluate_examples() {
    let gold = golds(&[("a", "35"), ("b", "35"), ("c", "35"), ("d", "05"), ("e", "05"), ("f", "60")]);
    let p = preds(&[
        ("a", &["35"]),
        ("b", &["35"]),
        ("c", &["05"]),
        ("d", &["35"]),
        ("e", &["05"]),
        ("f", &["60"]),
    ]);
    let e = evaluate(&p, &gold).unwrap();
    let m = e.per_class[&code("35")];
    assert_eq!((m.tp, m.fp, m.fn_), (2, 1, 1));
    assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);

    let half = ClassMetrics::from_counts(1, 1, 0);
    assert!((half.f1 - 2.0 / 3.0).abs() < 1e-12);

    let perfect: BTreeMap<String, BTreeSet<MscCode>> =
        gold.iter().map(|(d, c)| (d.clone(), BTreeSet::from([*c]))).collect();
    let e = evaluate(&perfect, &gold).unwrap();
    assert_eq!((e.macro_precision, e.macro_recall, e.macro_f1), (1.0, 1.0, 1.0));

    let mut missing = perfect.clone();
    missing.remove("a");
    assert!(matches!(evaluate(&missing, &gold), Err(ClassifierError::DocumentMismatch(_))));
}

fn doc(id: usize, p: &str, s: &[&str]) -> Document {
    let mut d = Document::new(format!("d{id}"), "text");
    d.msc_primary = Some(code(p));
    d.msc_secondary = s.iter().map(|c| code(c)).collect();
    d
}

#[test]
fn overlap_examples() {
    let m = overlap_matrix(&[doc(0, "35", &[]), doc(1, "35", &["76"])], DiagonalRule::default());
    assert_eq!(m.value(code("35"), code("35")), 0.5);
    assert_eq!(m.value(code("35"), code("76")), 0.5);
    let (i, j) = (code("35").index(), code("76").index());
    assert_eq!(m.to_pgm()[m.to_pgm().len() - TOP_LEVEL_COUNT * TOP_LEVEL_COUNT + i * TOP_LEVEL_COUNT + j], 127);
    assert!(m.empty_rows().contains(&code("05")));
    assert_eq!(m.empty_rows().len(), TOP_LEVEL_COUNT - 1);

    let m = overlap_matrix(&[doc(0, "35", &["76", "93"])], DiagonalRule::default());
    assert_eq!(m.count(code("35"), code("35")), 0);
    assert_eq!(m.count(code("35"), code("76")), 1);
    assert_eq!(m.count(code("35"), code("93")), 1);

    let single: Vec<Document> = ["35", "05", "60"].iter().enumerate().map(|(i, c)| doc(i, c, &[])).collect();
    let m = overlap_matrix(&single, DiagonalRule::default());
    for a in MscCode::all() {
        for b in MscCode::all() {
            let want = if a == b && m.totals[a.index()] > 0 { 1.0 } else { 0.0 };
            assert_eq!(m.value(a, b), want);
        }
    }
}

#[test]
fn heatmap_endpoints() {
    assert_eq!(OverlapMatrix::gray_level(0.0), 255);
    assert_eq!(OverlapMatrix::gray_level(1.0), 0);
    assert_eq!(OverlapMatrix::gray_level(0.5), 127);
    let empty = overlap_matrix(&[], DiagonalRule::default());
    let pgm = empty.to_pgm();
    assert!(pgm.starts_with(b"P5\n63 63\n255\n"));
    assert!(pgm[pgm.len() - 63 * 63..].iter().all(|&p| p == 255));
    let dir = tempfile::tempdir().unwrap();
    empty.export(dir.path().join("o.pgm"), dir.path().join("o.tsv")).unwrap();
    let tsv = std::fs::read_to_string(dir.path().join("o.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 64);
}

fn arb_corpus() -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
    prop::collection::vec((0..6usize, prop::collection::btree_set(0..6usize, 0..3)), 0..30).prop_map(
        |v| {
            v.into_iter()
                .map(|(p, s)| (p, s.into_iter().filter(|&x| x != p).collect()))
                .collect()
        },
    )
}

const SMALL: [&str; 6] = ["05", "35", "60", "68", "76", "93"];

proptest! {
    #[test]
    fn overlap_is_bounded_and_order_invariant(corpus in arb_corpus(), seed in any::<u64>()) {
        let docs: Vec<Document> = corpus
            .iter()
            .enumerate()
            .map(|(i, (p, s))| {
                let sec: Vec<&str> = s.iter().map(|&x| SMALL[x]).collect();
                doc(i, SMALL[*p], &sec)
            })
            .collect();
        let m = overlap_matrix(&docs, DiagonalRule::default());
        prop_assert!(m.normalized.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for i in 0..TOP_LEVEL_COUNT {
            if m.totals[i] == 0 {
                prop_assert!(m.normalized[i * TOP_LEVEL_COUNT..(i + 1) * TOP_LEVEL_COUNT].iter().all(|&v| v == 0.0));
            }
        }
        let mut shuffled = docs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(overlap_matrix(&shuffled, DiagonalRule::default()), m.clone());
        // Primary codes never recur among secondaries, so both diagonal rules agree.
        prop_assert_eq!(overlap_matrix(&docs, DiagonalRule::NoOtherClass), m);
    }

    #[test]
    fn evaluate_matches_brute_force(
        docs in prop::collection::vec((prop::collection::vec(0..5u8, 0..3), 0..5u8), 1..50)
    ) {
        let pool = ["05", "35", "60", "68", "76"];
        let gold: BTreeMap<String, MscCode> =
            docs.iter().enumerate().map(|(i, (_, g))| (i.to_string(), code(pool[*g as usize]))).collect();
        let pred: BTreeMap<String, BTreeSet<MscCode>> = docs
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (i.to_string(), p.iter().map(|&c| code(pool[c as usize])).collect()))
            .collect();
        let e = evaluate(&pred, &gold).unwrap();
        let oracle = brute_force_confusion(&docs, &[0, 1, 2, 3, 4]);
        for (c, tp, fp, fn_) in oracle {
            match e.per_class.get(&code(pool[c as usize])) {
                Some(m) => prop_assert_eq!((m.tp, m.fp, m.fn_), (tp, fp, fn_)),
                None => prop_assert_eq!((tp, fp, fn_), (0, 0, 0)),
            }
        }
    }

    #[test]
    fn kernel_is_symmetric(
        a in prop::collection::vec((0..20u32, -5.0..5.0f64), 0..8),
        b in prop::collection::vec((0..20u32, -5.0..5.0f64), 0..8),
    ) {
        let (x, y) = (SparseVector::from_pairs(a), SparseVector::from_pairs(b));
        let k = Kernel::default();
        prop_assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
    }

    #[test]
    fn separable_sets_train_to_full_accuracy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ex = separable_problem(&mut rng, 16, 2);
        let params = SmoParams { c: 1e4, ..SmoParams::default() };
        let sol = smo_train_dual(&ex, &params).unwrap();
        prop_assert!(sol.alpha.iter().zip(&sol.c).all(|(a, c)| *a >= 0.0 && a <= c));
        prop_assert!(sol.model.alphas.iter().sum::<f64>().abs() <= 1e-6);
        for (x, l) in &ex {
            prop_assert!(svm_decision(&sol.model, x) * l > 0.0);
        }
    }
}

#[test]
fn featurize_extracted_phrases() {
    use mathtag::keyphrase::Extractor;
    let ex = Extractor::bundled();
    let d = Document::new("f", "We study the distance function on compact manifolds.");
    let phrases = ex.extract_keyphrases(&d).unwrap();
    let dist: Vec<_> = phrases.iter().filter(|p| p.surface.ends_with("distance function")).cloned().collect();
    assert_eq!(dist.len(), 1, "{:?}", phrases.iter().map(|p| &p.surface).collect::<Vec<_>>());
    let idx = FeatureIndex::new(dist.iter().flat_map(phrase_tokens), DEFAULT_BUCKETS);
    let v = featurize(&dist, &idx);
    assert_eq!(v.nnz(), 2);
    assert!((v.norm() - 1.0).abs() < 1e-12);
    let mut rev = phrases.clone();
    rev.reverse();
    assert_eq!(featurize(&phrases, &idx), featurize(&rev, &idx));
}
