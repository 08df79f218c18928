//! One-vs-rest SVM classification of documents into top-level MSC classes,
//! with evaluation metrics and the primary/secondary class overlap matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::keyphrase::{Extractor, ScoredPhrase};
use crate::msc::{MscCode, TOP_LEVEL_COUNT};
use crate::tagger::Tag;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("need at least two training examples, got {0}")]
    TooFewExamples(usize),
    #[error("training labels contain only one class")]
    SingleClass,
    #[error("invalid training parameter: {0}")]
    InvalidParameter(String),
    #[error("no convergence after {passes} passes")]
    NonConvergence {
        passes: usize,
        partial: Box<SvmModel>,
    },
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("prediction and gold document sets differ: {0}")]
    DocumentMismatch(String),
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sparse vector with strictly increasing feature ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a vector, summing duplicate ids and dropping zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut map: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *map.entry(i).or_insert(0.0) += v;
        }
        SparseVector {
            entries: map.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseVector::from_pairs(self.entries.iter().map(|&(i, v)| (i, v * s)))
    }

    pub fn max_id(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }
}

/// Token to feature id map. Tokens outside the vocabulary hash into a
/// reserved range of buckets after the vocabulary ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureIndex {
    vocab: HashMap<String, u32>,
    buckets: u32,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl FeatureIndex {
    pub fn new(tokens: impl IntoIterator<Item = String>, buckets: u32) -> Self {
        let sorted: BTreeSet<String> = tokens.into_iter().collect();
        FeatureIndex {
            vocab: sorted
                .into_iter()
                .enumerate()
                .map(|(i, t)| (t, i as u32))
                .collect(),
            buckets: buckets.max(1),
        }
    }

    pub fn dimension(&self) -> u32 {
        self.vocab.len() as u32 + self.buckets
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn id(&self, token: &str) -> u32 {
        match self.vocab.get(token) {
            Some(&i) => i,
            None => self.vocab.len() as u32 + (fnv1a(token) % u64::from(self.buckets)) as u32,
        }
    }

    fn to_text(&self) -> String {
        let mut sorted: Vec<(&String, &u32)> = self.vocab.iter().collect();
        sorted.sort_by_key(|&(_, &i)| i);
        let mut out = format!("# buckets={}\n", self.buckets);
        for (t, _) in sorted {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    fn parse(src: &str) -> Result<Self, String> {
        let mut buckets = None;
        let mut tokens = Vec::new();
        for line in src.lines() {
            if let Some(b) = line.strip_prefix("# buckets=") {
                buckets = Some(b.trim().parse().map_err(|_| "bad bucket count")?);
            } else if !line.is_empty() {
                tokens.push(line.to_string());
            }
        }
        let buckets = buckets.ok_or("missing bucket header")?;
        Ok(FeatureIndex {
            vocab: tokens
                .into_iter()
                .enumerate()
                .map(|(i, t)| (t, i as u32))
                .collect(),
            buckets,
        })
    }
}

/// Feature tokens of a phrase: words lowercased with a leading determiner
/// dropped; formulas keep their TeX source.
pub fn phrase_tokens(p: &ScoredPhrase) -> impl Iterator<Item = String> + '_ {
    let np = &p.phrase;
    let skip = usize::from(np.tag_sequence.first() == Some(&Tag::DT) && np.tokens.len() > 1);
    np.tokens.iter().skip(skip).map(|t| {
        if t.contains('$') || t.contains('\\') {
            t.clone()
        } else {
            t.to_lowercase()
        }
    })
}

/// L2-normalized term-frequency bag of phrase tokens.
pub fn featurize(phrases: &[ScoredPhrase], index: &FeatureIndex) -> SparseVector {
    let v = SparseVector::from_pairs(
        phrases
            .iter()
            .flat_map(phrase_tokens)
            .map(|t| (index.id(&t), 1.0)),
    );
    let n = v.norm();
    if n > 0.0 {
        v.scaled(1.0 / n)
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub degree: u32,
    pub coef0: f64,
    pub gamma: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel {
            degree: 2,
            coef0: 1.0,
            gamma: 1.0,
        }
    }
}

impl Kernel {
    pub fn eval(&self, x: &SparseVector, y: &SparseVector) -> f64 {
        polynomial_kernel(x, y, self.degree, self.coef0, self.gamma)
    }
}

/// `(gamma * <x, y> + coef0) ^ degree`.
pub fn polynomial_kernel(x: &SparseVector, y: &SparseVector, degree: u32, coef0: f64, gamma: f64) -> f64 {
    (gamma * x.dot(y) + coef0).powi(degree as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub msc_class: Option<MscCode>,
    pub support_vectors: Vec<SparseVector>,
    /// Dual coefficients multiplied by the labels.
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub passes: usize,
}

/// `sum_i alphas[i] * K(sv_i, x) + bias`.
pub fn svm_decision(model: &SvmModel, x: &SparseVector) -> f64 {
    model
        .support_vectors
        .iter()
        .zip(&model.alphas)
        .map(|(sv, a)| a * model.kernel.eval(sv, x))
        .sum::<f64>()
        + model.bias
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub kernel: Kernel,
    /// Defaults to ten times the number of examples.
    pub max_passes: Option<usize>,
    pub seed: u64,
    /// Scale C per class by the inverse class frequency.
    pub balance_classes: bool,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            tol: 1e-3,
            kernel: Kernel::default(),
            max_passes: None,
            seed: 0x5eed,
            balance_classes: false,
        }
    }
}

const EPS: f64 = 1e-12;

struct Smo<'a> {
    gram: &'a [f64],
    n: usize,
    y: Vec<f64>,
    c: Vec<f64>,
    alpha: Vec<f64>,
    b: f64,
    err: Vec<f64>,
    tol: f64,
    rng: ChaCha8Rng,
}

impl Smo<'_> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn bound(&self, i: usize) -> bool {
        self.alpha[i] <= 0.0 || self.alpha[i] >= self.c[i]
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (c1, c2) = (self.c[i1], self.c[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), c2.min(c1 - a1 + a2))
        } else {
            ((a1 + a2 - c1).max(0.0), c2.min(a1 + a2))
        };
        if hi - lo < EPS {
            return false;
        }
        let (k11, k12, k22) = (self.k(i1, i1), self.k(i1, i2), self.k(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2n = if eta > EPS {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Objective at the segment ends.
            let f1 = y1 * (e1 + y1) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 + y2) - s * a1 * k12 - a2 * k22;
            let l1 = a1 + s * (a2 - lo);
            let h1 = a1 + s * (a2 - hi);
            let obj = |a1x: f64, a2x: f64| {
                a1x * f1 + a2x * f2 + 0.5 * a1x * a1x * k11 + 0.5 * a2x * a2x * k22
                    + s * a2x * a1x * k12
            };
            let (lobj, hobj) = (obj(l1, lo), obj(h1, hi));
            if lobj < hobj - EPS {
                lo
            } else if lobj > hobj + EPS {
                hi
            } else {
                a2
            }
        };
        if (a2n - a2).abs() < EPS * (a2n + a2 + EPS) {
            return false;
        }
        let mut a1n = a1 + s * (a2 - a2n);
        if a1n < 0.0 {
            a2n += s * a1n;
            a1n = 0.0;
        } else if a1n > c1 {
            a2n += s * (a1n - c1);
            a1n = c1;
        }
        a2n = a2n.clamp(0.0, c2);
        let (d1, d2) = (y1 * (a1n - a1), y2 * (a2n - a2));
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let bn = if a1n > 0.0 && a1n < c1 {
            b1
        } else if a2n > 0.0 && a2n < c2 {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = bn - self.b;
        for i in 0..self.n {
            self.err[i] += d1 * self.k(i1, i) + d2 * self.k(i2, i) + db;
        }
        self.alpha[i1] = a1n;
        self.alpha[i2] = a2n;
        self.b = bn;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let r2 = self.err[i2] * self.y[i2];
        let (a2, c2) = (self.alpha[i2], self.c[i2]);
        if !((r2 < -self.tol && a2 < c2) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let free: Vec<usize> = (0..self.n).filter(|&i| !self.bound(i)).collect();
        if free.len() > 1 {
            let e2 = self.err[i2];
            let best = free
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    (self.err[a] - e2)
                        .abs()
                        .total_cmp(&(self.err[b] - e2).abs())
                        .then(b.cmp(&a))
                })
                .expect("nonempty");
            if self.take_step(best, i2) {
                return true;
            }
        }
        if !free.is_empty() {
            let start = self.rng.gen_range(0..free.len());
            for k in 0..free.len() {
                if self.take_step(free[(start + k) % free.len()], i2) {
                    return true;
                }
            }
        }
        let start = self.rng.gen_range(0..self.n);
        for k in 0..self.n {
            if self.take_step((start + k) % self.n, i2) {
                return true;
            }
        }
        false
    }
}

fn gram_matrix(xs: &[&SparseVector], kernel: &Kernel) -> Vec<f64> {
    let n = xs.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| kernel.eval(xs[i], xs[j])).collect())
        .collect();
    rows.into_iter().flatten().collect()
}

/// Platt's SMO over a precomputed Gram matrix. Returns dual variables
/// (without labels), bias and the number of passes.
fn smo_solve(
    gram: &[f64],
    y: &[f64],
    c: &[f64],
    params: &SmoParams,
) -> Result<(Vec<f64>, f64, usize), (Vec<f64>, f64, usize)> {
    let n = y.len();
    let mut smo = Smo {
        gram,
        n,
        y: y.to_vec(),
        c: c.to_vec(),
        alpha: vec![0.0; n],
        b: 0.0,
        err: y.iter().map(|v| -v).collect(),
        tol: params.tol,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    };
    let max_passes = params.max_passes.unwrap_or(10 * n);
    // A pass is one sweep over every example; the sweeps over non-bound
    // examples in between are capped at n per pass.
    let mut passes = 0;
    loop {
        if passes >= max_passes {
            return Err((smo.alpha, smo.b, passes));
        }
        let mut changed = 0;
        for i in 0..n {
            changed += usize::from(smo.examine(i));
        }
        passes += 1;
        if changed == 0 {
            break;
        }
        for _ in 0..n {
            let mut inner = 0;
            for i in 0..n {
                if !smo.bound(i) {
                    inner += usize::from(smo.examine(i));
                }
            }
            if inner == 0 {
                break;
            }
        }
    }
    Ok((smo.alpha, smo.b, passes))
}

fn per_example_c(labels: &[f64], params: &SmoParams) -> Vec<f64> {
    if !params.balance_classes {
        return vec![params.c; labels.len()];
    }
    let pos = labels.iter().filter(|&&l| l > 0.0).count() as f64;
    let neg = labels.len() as f64 - pos;
    let n = labels.len() as f64;
    labels
        .iter()
        .map(|&l| params.c * n / (2.0 * if l > 0.0 { pos } else { neg }))
        .collect()
}

fn check_training_input(labels: &[f64], params: &SmoParams) -> Result<(), SvmError> {
    if labels.len() < 2 {
        return Err(SvmError::TooFewExamples(labels.len()));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(SvmError::InvalidParameter(format!("C = {}", params.c)));
    }
    if !(params.tol > 0.0) {
        return Err(SvmError::InvalidParameter(format!("tol = {}", params.tol)));
    }
    if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(SvmError::InvalidParameter("labels must be +1 or -1".into()));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

fn build_model(
    xs: &[&SparseVector],
    y: &[f64],
    alpha: &[f64],
    bias: f64,
    params: &SmoParams,
    passes: usize,
) -> SvmModel {
    let (support_vectors, alphas) = xs
        .iter()
        .zip(y)
        .zip(alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|((x, &l), &a)| ((*x).clone(), a * l))
        .unzip();
    SvmModel {
        msc_class: None,
        support_vectors,
        alphas,
        bias,
        kernel: params.kernel,
        c: params.c,
        passes,
    }
}

fn train_on_gram(
    xs: &[&SparseVector],
    gram: &[f64],
    y: &[f64],
    params: &SmoParams,
) -> Result<SvmModel, SvmError> {
    check_training_input(y, params)?;
    let c = per_example_c(y, params);
    match smo_solve(gram, y, &c, params) {
        Ok((alpha, b, passes)) => Ok(build_model(xs, y, &alpha, b, params, passes)),
        Err((alpha, b, passes)) => Err(SvmError::NonConvergence {
            passes,
            partial: Box::new(build_model(xs, y, &alpha, b, params, passes)),
        }),
    }
}

/// Dual variables of a finished SMO run, one per training example.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Label-free multipliers in `[0, C_i]`.
    pub alpha: Vec<f64>,
    /// Per-example box bounds.
    pub c: Vec<f64>,
    pub bias: f64,
    pub passes: usize,
    pub model: SvmModel,
}

/// Like [`smo_train`] but also returns the full multiplier vector.
pub fn smo_train_dual(
    examples: &[(SparseVector, f64)],
    params: &SmoParams,
) -> Result<DualSolution, SvmError> {
    let xs: Vec<&SparseVector> = examples.iter().map(|(x, _)| x).collect();
    let y: Vec<f64> = examples.iter().map(|&(_, l)| l).collect();
    check_training_input(&y, params)?;
    let gram = gram_matrix(&xs, &params.kernel);
    let c = per_example_c(&y, params);
    match smo_solve(&gram, &y, &c, params) {
        Ok((alpha, bias, passes)) => {
            let model = build_model(&xs, &y, &alpha, bias, params, passes);
            Ok(DualSolution {
                alpha,
                c,
                bias,
                passes,
                model,
            })
        }
        Err((alpha, b, passes)) => Err(SvmError::NonConvergence {
            passes,
            partial: Box::new(build_model(&xs, &y, &alpha, b, params, passes)),
        }),
    }
}

/// Trains a binary SVM with Platt's sequential minimal optimization.
/// Labels are +1 or -1.
pub fn smo_train(examples: &[(SparseVector, f64)], params: &SmoParams) -> Result<SvmModel, SvmError> {
    smo_train_dual(examples, params).map(|d| d.model)
}

#[derive(Debug)]
pub struct TrainOutput {
    pub models: BTreeMap<MscCode, SvmModel>,
    /// One message per class that could not be trained.
    pub warnings: Vec<String>,
}

/// One-vs-rest training: for each primary class present, positives are its
/// documents and negatives all other labelled documents.
pub fn train_all(examples: &[(SparseVector, MscCode)], params: &SmoParams) -> TrainOutput {
    let classes: BTreeSet<MscCode> = examples.iter().map(|&(_, c)| c).collect();
    if classes.len() < 2 {
        return TrainOutput {
            models: BTreeMap::new(),
            warnings: classes
                .iter()
                .map(|c| format!("class {c}: no negative examples, only one class present"))
                .collect(),
        };
    }
    let xs: Vec<&SparseVector> = examples.iter().map(|(x, _)| x).collect();
    let gram = gram_matrix(&xs, &params.kernel);
    let results: Vec<(MscCode, Result<SvmModel, SvmError>)> = classes
        .par_iter()
        .map(|&class| {
            let y: Vec<f64> = examples
                .iter()
                .map(|&(_, c)| if c == class { 1.0 } else { -1.0 })
                .collect();
            let r = train_on_gram(&xs, &gram, &y, params).map(|mut m| {
                m.msc_class = Some(class);
                m
            });
            (class, r)
        })
        .collect();
    let mut out = TrainOutput {
        models: BTreeMap::new(),
        warnings: Vec::new(),
    };
    for (class, r) in results {
        match r {
            Ok(m) => {
                out.models.insert(class, m);
            }
            Err(e) => {
                log::warn!("class {class}: {e}");
                out.warnings.push(format!("class {class}: {e}"));
            }
        }
    }
    out
}

/// Classes whose decision value exceeds `threshold`, best first.
pub fn rank_classes(
    x: &SparseVector,
    models: &BTreeMap<MscCode, SvmModel>,
    threshold: f64,
) -> Vec<(MscCode, f64)> {
    let mut out: Vec<(MscCode, f64)> = models
        .iter()
        .map(|(&c, m)| (c, svm_decision(m, x)))
        .filter(|&(_, s)| s > threshold)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// Feature index and per-class models, plus the extractor that turns
/// documents into phrases.
#[derive(Debug, Clone)]
pub struct DocumentClassifier {
    pub index: FeatureIndex,
    pub models: BTreeMap<MscCode, SvmModel>,
}

pub const DEFAULT_BUCKETS: u32 = 1024;

impl DocumentClassifier {
    /// Extracts keyphrases from every labelled document, builds the
    /// vocabulary and trains one model per class.
    pub fn train(
        corpus: &[Document],
        extractor: &Extractor,
        params: &SmoParams,
    ) -> (Self, Vec<String>) {
        let phrases: Vec<(Vec<ScoredPhrase>, MscCode)> = corpus
            .par_iter()
            .filter_map(|d| {
                let code = d.msc_primary?;
                match extractor.extract_keyphrases(d) {
                    Ok(p) => Some((p, code)),
                    Err(e) => {
                        log::warn!("document {}: {e}", d.id);
                        None
                    }
                }
            })
            .collect();
        let index = FeatureIndex::new(
            phrases
                .iter()
                .flat_map(|(ps, _)| ps.iter().flat_map(phrase_tokens)),
            DEFAULT_BUCKETS,
        );
        let examples: Vec<(SparseVector, MscCode)> = phrases
            .iter()
            .map(|(ps, c)| (featurize(ps, &index), *c))
            .collect();
        let out = train_all(&examples, params);
        (
            DocumentClassifier {
                index,
                models: out.models,
            },
            out.warnings,
        )
    }

    pub fn featurize_document(&self, doc: &Document, extractor: &Extractor) -> SparseVector {
        match extractor.extract_keyphrases(doc) {
            Ok(p) => featurize(&p, &self.index),
            Err(e) => {
                log::warn!("document {}: {e}", doc.id);
                SparseVector::default()
            }
        }
    }

    /// Classes with decision value above `threshold`, best first; empty
    /// when the classifier abstains.
    pub fn classify_document(
        &self,
        doc: &Document,
        extractor: &Extractor,
        threshold: f64,
    ) -> Vec<(MscCode, f64)> {
        rank_classes(&self.featurize_document(doc, extractor), &self.models, threshold)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("features.txt"), self.index.to_text())?;
        for (code, m) in &self.models {
            save_model(m, dir.join(format!("class-{code}.svm")))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let dir = dir.as_ref();
        let src = fs::read_to_string(dir.join("features.txt"))?;
        let index = FeatureIndex::parse(&src).map_err(|message| ClassifierError::Format {
            file: "features.txt".into(),
            line: 1,
            message,
        })?;
        let mut models = BTreeMap::new();
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "svm"))
            .collect();
        paths.sort();
        for p in paths {
            let m = load_model(&p)?;
            let code = m.msc_class.ok_or_else(|| ClassifierError::Format {
                file: p.display().to_string(),
                line: 1,
                message: "model has no class".into(),
            })?;
            models.insert(code, m);
        }
        Ok(DocumentClassifier { index, models })
    }
}

/// Writes a model: `key=value` header lines, then one support vector per
/// line as `alpha<TAB>id:value ...`.
pub fn save_model(m: &SvmModel, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "class={}", m.msc_class.map_or("-".to_string(), |c| c.to_string()))?;
    writeln!(w, "kernel=polynomial")?;
    writeln!(w, "degree={}", m.kernel.degree)?;
    writeln!(w, "coef0={:?}", m.kernel.coef0)?;
    writeln!(w, "gamma={:?}", m.kernel.gamma)?;
    writeln!(w, "C={:?}", m.c)?;
    writeln!(w, "bias={:?}", m.bias)?;
    writeln!(w, "passes={}", m.passes)?;
    writeln!(w, "support_vectors={}", m.support_vectors.len())?;
    for (sv, a) in m.support_vectors.iter().zip(&m.alphas) {
        let feats: Vec<String> = sv.entries().iter().map(|(i, v)| format!("{i}:{v:?}")).collect();
        writeln!(w, "{a:?}\t{}", feats.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel, ClassifierError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path)?;
    let file = path.display().to_string();
    let err = |line: usize, message: String| ClassifierError::Format {
        file: file.clone(),
        line,
        message,
    };
    let mut header: HashMap<String, String> = HashMap::new();
    let mut lines = src.lines().enumerate();
    for (i, line) in lines.by_ref() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, "expected key=value".into()))?;
        header.insert(k.to_string(), v.to_string());
        if k == "support_vectors" {
            break;
        }
    }
    let get = |k: &str| -> Result<&str, ClassifierError> {
        header
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| err(0, format!("missing header {k}")))
    };
    let num = |k: &str| -> Result<f64, ClassifierError> {
        get(k)?.parse().map_err(|_| err(0, format!("bad number for {k}")))
    };
    if get("kernel")? != "polynomial" {
        return Err(err(0, "only polynomial kernels are supported".into()));
    }
    let msc_class = match get("class")? {
        "-" => None,
        c => Some(c.parse().map_err(|e: crate::msc::UnknownMscCode| err(0, e.to_string()))?),
    };
    let count: usize = get("support_vectors")?
        .parse()
        .map_err(|_| err(0, "bad support vector count".into()))?;
    let mut support_vectors = Vec::with_capacity(count);
    let mut alphas = Vec::with_capacity(count);
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (a, feats) = line.split_once('\t').unwrap_or((line, ""));
        alphas.push(a.parse::<f64>().map_err(|_| err(i + 1, "bad alpha".into()))?);
        let pairs = feats
            .split_whitespace()
            .map(|f| {
                let (id, v) = f.split_once(':')?;
                Some((id.parse().ok()?, v.parse().ok()?))
            })
            .collect::<Option<Vec<(u32, f64)>>>()
            .ok_or_else(|| err(i + 1, "bad feature".into()))?;
        support_vectors.push(SparseVector::from_pairs(pairs));
    }
    if support_vectors.len() != count {
        return Err(err(0, format!("expected {count} support vectors")));
    }
    Ok(SvmModel {
        msc_class,
        support_vectors,
        alphas,
        bias: num("bias")?,
        kernel: Kernel {
            degree: num("degree")? as u32,
            coef0: num("coef0")?,
            gamma: num("gamma")?,
        },
        c: num("C")?,
        passes: num("passes")? as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_class: BTreeMap<MscCode, ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "class\tTP\tFP\tFN\tprecision\trecall\tF1")?;
        for (c, m) in &self.per_class {
            writeln!(
                f,
                "{c}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
                m.tp, m.fp, m.fn_, m.precision, m.recall, m.f1
            )?;
        }
        write!(
            f,
            "macro\t\t\t\t{:.4}\t{:.4}\t{:.4}",
            self.macro_precision, self.macro_recall, self.macro_f1
        )
    }
}

/// Per-class precision, recall and F1 of multi-label predictions against
/// primary-class gold labels. Classes are those occurring in either map.
pub fn evaluate(
    predictions: &BTreeMap<String, BTreeSet<MscCode>>,
    gold: &BTreeMap<String, MscCode>,
) -> Result<Evaluation, ClassifierError> {
    if predictions.len() != gold.len() || predictions.keys().any(|k| !gold.contains_key(k)) {
        let missing: Vec<&String> = predictions
            .keys()
            .filter(|k| !gold.contains_key(*k))
            .chain(gold.keys().filter(|k| !predictions.contains_key(*k)))
            .take(5)
            .collect();
        return Err(ClassifierError::DocumentMismatch(format!("{missing:?}")));
    }
    let mut counts: BTreeMap<MscCode, (usize, usize, usize)> = BTreeMap::new();
    for (doc, &g) in gold {
        let predicted = &predictions[doc];
        let e = counts.entry(g).or_default();
        if predicted.contains(&g) {
            e.0 += 1;
        } else {
            e.2 += 1;
        }
        for &p in predicted.iter().filter(|&&p| p != g) {
            counts.entry(p).or_default().1 += 1;
        }
    }
    let per_class: BTreeMap<MscCode, ClassMetrics> = counts
        .into_iter()
        .map(|(c, (tp, fp, fn_))| (c, ClassMetrics::from_counts(tp, fp, fn_)))
        .collect();
    let n = per_class.len().max(1) as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.values().map(f).sum::<f64>() / n;
    Ok(Evaluation {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
    })
}

/// How the diagonal of the overlap matrix counts exclusive documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalRule {
    /// Documents without any secondary code.
    #[default]
    NoSecondary,
    /// Documents without a secondary code in another top-level class.
    NoOtherClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    /// Row-major `a_ij` counts over the sorted top-level table.
    pub counts: Vec<u64>,
    /// `A_i`: documents with primary class `i`.
    pub totals: Vec<u64>,
    /// `a_ij / A_i`, zero on rows with `A_i = 0`.
    pub normalized: Vec<f64>,
}

impl OverlapMatrix {
    pub fn size(&self) -> usize {
        TOP_LEVEL_COUNT
    }

    pub fn count(&self, i: MscCode, j: MscCode) -> u64 {
        self.counts[i.index() * TOP_LEVEL_COUNT + j.index()]
    }

    pub fn value(&self, i: MscCode, j: MscCode) -> f64 {
        self.normalized[i.index() * TOP_LEVEL_COUNT + j.index()]
    }

    /// Classes without any primary document.
    pub fn empty_rows(&self) -> Vec<MscCode> {
        (0..TOP_LEVEL_COUNT)
            .filter(|&i| self.totals[i] == 0)
            .filter_map(MscCode::from_index)
            .collect()
    }

    /// Gray level of a normalized value: 255 for 0 (white), 0 for 1
    /// (black), half-way values rounded half up in darkness.
    pub fn gray_level(v: f64) -> u8 {
        let dark = (255.0 * v.clamp(0.0, 1.0) + 0.5).floor();
        (255.0 - dark) as u8
    }

    /// Binary PGM image, one pixel per cell, origin top-left.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{TOP_LEVEL_COUNT} {TOP_LEVEL_COUNT}\n255\n").into_bytes();
        out.extend(self.normalized.iter().map(|&v| Self::gray_level(v)));
        out
    }

    /// Tab-separated normalized matrix with code headers.
    pub fn to_tsv(&self) -> String {
        let codes: Vec<String> = MscCode::all().map(|c| c.to_string()).collect();
        let mut out = format!("primary\\secondary\t{}\n", codes.join("\t"));
        for (i, code) in codes.iter().enumerate() {
            let row: Vec<String> = (0..TOP_LEVEL_COUNT)
                .map(|j| format!("{}", self.normalized[i * TOP_LEVEL_COUNT + j]))
                .collect();
            out.push_str(&format!("{code}\t{}\n", row.join("\t")));
        }
        out
    }

    pub fn export(&self, pgm: impl AsRef<Path>, tsv: impl AsRef<Path>) -> io::Result<()> {
        fs::write(pgm, self.to_pgm())?;
        fs::write(tsv, self.to_tsv())
    }
}

/// Primary/secondary co-classification counts normalized per primary class.
pub fn overlap_matrix(corpus: &[Document], rule: DiagonalRule) -> OverlapMatrix {
    let n = TOP_LEVEL_COUNT;
    let mut counts = vec![0u64; n * n];
    let mut totals = vec![0u64; n];
    for d in corpus {
        let Some(p) = d.msc_primary else { continue };
        let i = p.index();
        totals[i] += 1;
        let others: BTreeSet<MscCode> = d.msc_secondary.iter().copied().filter(|&s| s != p).collect();
        let exclusive = match rule {
            DiagonalRule::NoSecondary => d.msc_secondary.is_empty(),
            DiagonalRule::NoOtherClass => others.is_empty(),
        };
        if exclusive {
            counts[i * n + i] += 1;
        }
        for s in others {
            counts[i * n + s.index()] += 1;
        }
    }
    let normalized = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let total = totals[k / n];
            if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            }
        })
        .collect();
    OverlapMatrix {
        counts,
        totals,
        normalized,
    }
}
