//! Dense first-order HMM decoding in log space.

/// Log-probability tables of a bigram HMM with explicit sentence start and
/// stop transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHmm {
    states: usize,
    start: Vec<f64>,
    trans: Vec<f64>,
    stop: Vec<f64>,
}

impl DenseHmm {
    /// `trans` is row-major: `trans[i * states + j]` is `log P(j | i)`.
    pub fn new(start: Vec<f64>, trans: Vec<f64>, stop: Vec<f64>) -> Self {
        let states = start.len();
        assert_eq!(trans.len(), states * states, "transition table shape");
        assert_eq!(stop.len(), states, "stop table shape");
        DenseHmm {
            states,
            start,
            trans,
            stop,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn start(&self, s: usize) -> f64 {
        self.start[s]
    }

    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.trans[from * self.states + to]
    }

    pub fn stop(&self, s: usize) -> f64 {
        self.stop[s]
    }

    /// Log score of a state path given per-position log emission rows.
    pub fn path_score(&self, emissions: &[Vec<f64>], path: &[usize]) -> f64 {
        assert_eq!(emissions.len(), path.len());
        let Some((&first, _)) = path.split_first() else {
            return 0.0;
        };
        let mut score = self.start(first) + emissions[0][first];
        for (t, w) in path.windows(2).enumerate() {
            score += self.trans(w[0], w[1]) + emissions[t + 1][w[1]];
        }
        score + self.stop(path[path.len() - 1])
    }

    /// Most probable state path and its log score. Among equal scores the
    /// path using lower state indices at later positions wins.
    pub fn viterbi(&self, emissions: &[Vec<f64>]) -> (Vec<usize>, f64) {
        let n = self.states;
        let len = emissions.len();
        if len == 0 || n == 0 {
            return (Vec::new(), 0.0);
        }
        let mut delta: Vec<f64> = (0..n).map(|s| self.start(s) + emissions[0][s]).collect();
        let mut back = vec![0usize; len * n];
        let mut next = vec![f64::NEG_INFINITY; n];
        for t in 1..len {
            for (j, slot) in next.iter_mut().enumerate() {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for (i, &d) in delta.iter().enumerate() {
                    let v = d + self.trans(i, j);
                    if v > best {
                        best = v;
                        arg = i;
                    }
                }
                *slot = best + emissions[t][j];
                back[t * n + j] = arg;
            }
            std::mem::swap(&mut delta, &mut next);
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = 0;
        for (s, &d) in delta.iter().enumerate() {
            let v = d + self.stop(s);
            if v > best {
                best = v;
                last = s;
            }
        }
        let mut path = vec![0; len];
        path[len - 1] = last;
        for t in (1..len).rev() {
            path[t - 1] = back[t * n + path[t]];
        }
        (path, best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_normalized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|v| (v / sum).ln()).collect()
    }

    fn random_hmm(rng: &mut ChaCha8Rng, n: usize) -> DenseHmm {
        // Each row covers the n states plus STOP.
        let start = log_normalized(rng, n);
        let mut trans = Vec::new();
        let mut stop = Vec::new();
        for _ in 0..n {
            let row = log_normalized(rng, n + 1);
            trans.extend_from_slice(&row[..n]);
            stop.push(row[n]);
        }
        DenseHmm::new(start, trans, stop)
    }

    fn brute_force(hmm: &DenseHmm, em: &[Vec<f64>]) -> f64 {
        let n = hmm.states();
        let total = n.pow(em.len() as u32);
        let mut best = f64::NEG_INFINITY;
        let mut path = vec![0; em.len()];
        for mut code in 0..total {
            for p in path.iter_mut() {
                *p = code % n;
                code /= n;
            }
            best = best.max(hmm.path_score(em, &path));
        }
        best
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let len = rng.gen_range(1..=6);
            let hmm = random_hmm(&mut rng, n);
            let em: Vec<Vec<f64>> = (0..len).map(|_| log_normalized(&mut rng, n)).collect();
            let (path, score) = hmm.viterbi(&em);
            assert_eq!(path.len(), len);
            assert!((score - hmm.path_score(&em, &path)).abs() < 1e-12);
            assert!((score - brute_force(&hmm, &em)).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let z = 0.5f64.ln();
        let hmm = DenseHmm::new(vec![z, z], vec![z, z, z, z], vec![0.0, 0.0]);
        let (path, _) = hmm.viterbi(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(path, vec![0, 0]);
    }

    #[test]
    fn empty_input() {
        let hmm = DenseHmm::new(vec![0.0], vec![0.0], vec![0.0]);
        assert_eq!(hmm.viterbi(&[]), (vec![], 0.0));
    }
}
