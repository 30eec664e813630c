//! Gauss rules used by element integration.
//!
//! Nodes and weights are generated in `f64` and converted to the working
//! scalar once per rule.

use crate::scalar::Real;

/// Number of points in the standard element rule.
pub const STANDARD_POINTS: usize = 20;

/// A quadrature rule: `∫ f ≈ Σ w_i f(t_i)` on its reference interval.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    fn from_f64(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        Self {
            nodes: nodes.into_iter().map(T::cst).collect(),
            weights: weights.into_iter().map(T::cst).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gauss–Legendre rule on `[-1, 1]`.
    pub fn gauss_legendre(n: usize) -> Self {
        let (x, w) = gauss_legendre_f64(n);
        Self::from_f64(x, w)
    }

    /// Gauss rule on `[0, 1]` for the weight `-ln t`.
    pub fn gauss_log(n: usize) -> Self {
        let (x, w) = gauss_log_f64(n);
        Self::from_f64(x, w)
    }

    /// Integrates `f` over `[a, b]`; only meaningful for Legendre rules.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::cst(0.5);
        let mid = (a + b) * T::cst(0.5);
        let mut sum = T::zero();
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * t);
        }
        sum * half
    }
}

/// Newton iteration on the Legendre three-term recurrence.
fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Modified Chebyshev algorithm with shifted Legendre polynomials as the
/// auxiliary basis, followed by Golub–Welsch.
fn gauss_log_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one point");
    let len = 2 * n;
    // Monic shifted Legendre on [0,1]: a_k = 1/2, b_k = k^2 / (4 (4k^2 - 1)).
    let a_aux = vec![0.5; len];
    let b_aux: Vec<f64> = (0..len)
        .map(|k| {
            let k = k as f64;
            if k == 0.0 {
                0.0
            } else {
                k * k / (4.0 * (4.0 * k * k - 1.0))
            }
        })
        .collect();
    // Modified moments ∫ -ln t π_k(t) dt with π_k = (k!)^2/(2k)! P*_k.
    let mut moments = vec![0.0; len];
    moments[0] = 1.0;
    let mut scale = 1.0;
    for (k, m) in moments.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        scale *= kf * kf / ((2.0 * kf) * (2.0 * kf - 1.0));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *m = scale * sign / (kf * (kf + 1.0));
    }

    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut sigma_prev = vec![0.0; len + 1];
    let mut sigma = moments.clone();
    alpha[0] = a_aux[0] + moments[1] / moments[0];
    beta[0] = moments[0];
    for k in 1..n {
        let mut next = vec![0.0; len + 1];
        for l in k..(len - k) {
            let lower = if l >= 1 { sigma[l - 1] } else { 0.0 };
            next[l] =
                sigma[l + 1] - (alpha[k - 1] - a_aux[l]) * sigma[l] - beta[k - 1] * sigma_prev[l]
                    + b_aux[l] * lower;
        }
        alpha[k] = a_aux[k] + next[k + 1] / next[k] - sigma[k] / sigma[k - 1];
        beta[k] = next[k] / sigma[k - 1];
        sigma_prev = sigma;
        sigma_prev.resize(len + 1, 0.0);
        sigma = next;
    }

    let off: Vec<f64> = beta[1..].iter().map(|b| b.sqrt()).collect();
    let (values, first) = tridiagonal_eigen(&alpha, &off);
    let mut pairs: Vec<(f64, f64)> = values
        .into_iter()
        .zip(first)
        .map(|(x, v)| (x, beta[0] * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal
/// matrix (implicit QL with Wilkinson shifts).
fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut zfull = vec![vec![0.0; n]; n];
    for (i, row) in zfull.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal eigen solver failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in zfull.iter_mut() {
                    let t = row[i + 1];
                    row[i + 1] = s * row[i] + c * t;
                    row[i] = c * row[i] - s * t;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    // Row 0 of the accumulated eigenvector matrix.
    let first = zfull.swap_remove(0);
    (d, first)
}
