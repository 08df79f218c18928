//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Euclidean projection onto `{0 <= a_i <= c_i, sum a_i y_i = 0}` by
/// bisection on the multiplier of the equality constraint.
pub fn project_feasible(v: &[f64], y: &[f64], c: &[f64]) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .zip(c)
            .map(|((&vi, &yi), &ci)| (vi - mu * yi).clamp(0.0, ci))
            .collect()
    };
    let g = |mu: f64| -> f64 { at(mu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// SVM dual objective `sum a - 1/2 a^T Q a` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], gram: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Dense accelerated projected-gradient ascent on the SVM dual.
pub fn dual_reference(y: &[f64], gram: &[Vec<f64>], c: &[f64], iterations: usize) -> Vec<f64> {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * gram[i][j]).collect())
        .collect();
    let lipschitz = jacobi_eigenvalues(&q)
        .into_iter()
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>())
            .collect();
        let moved: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi + step * gi).collect();
        let next = project_feasible(&moved, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        t = t_next;
    }
    x
}

/// Explicit feature map of `(<x, y> + 1)^2` for dense inputs.
pub fn quadratic_feature_map(x: &[f64]) -> Vec<f64> {
    let mut out = vec![1.0];
    out.extend(x.iter().map(|v| 2f64.sqrt() * v));
    for i in 0..x.len() {
        out.push(x[i] * x[i]);
        for j in i + 1..x.len() {
            out.push(2f64.sqrt() * x[i] * x[j]);
        }
    }
    out
}

/// Per-class (tp, fp, fn) by scanning every (document, class) pair.
pub fn brute_force_confusion(
    docs: &[(Vec<u8>, u8)],
    classes: &[u8],
) -> Vec<(u8, usize, usize, usize)> {
    classes
        .iter()
        .map(|&c| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (pred, gold) in docs {
                let p = pred.contains(&c);
                let g = *gold == c;
                match (p, g) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            (c, tp, fp, fn_)
        })
        .collect()
}
