//! Gradient-based minimizers over a flat parameter vector.

use std::cell::Cell;

use crate::error::Result;
use crate::scalar::Real;

/// Adam with the usual moment decay rates.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    pub fn new(n: usize, learning_rate: T) -> Self {
        Self {
            learning_rate,
            beta1: T::cst(0.9),
            beta2: T::cst(0.999),
            epsilon: T::cst(1e-8),
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    /// Applies one update in place.
    pub fn step(&mut self, x: &mut [T], grad: &[T]) {
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            x[i] -= self.learning_rate * mh / (vh.sqrt() + self.epsilon);
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Accepted point of a line search.
struct Trial<T> {
    x: Vec<T>,
    f: T,
    g: Vec<T>,
}

/// Dense inverse-Hessian BFGS with a strong Wolfe line search.
#[derive(Debug, Clone)]
pub struct Bfgs<T> {
    h: Vec<T>,
    n: usize,
    fresh: bool,
    pub c1: T,
    pub c2: T,
    pub max_evaluations: usize,
}

/// Outcome of one BFGS iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfgsStep {
    Moved,
    /// No acceptable step even from a reset curvature model.
    Stalled,
}

impl<T: Real> Bfgs<T> {
    pub fn new(n: usize) -> Self {
        let mut s = Self {
            h: vec![T::zero(); n * n],
            n,
            fresh: true,
            c1: T::cst(1e-4),
            c2: T::cst(0.9),
            max_evaluations: 25,
        };
        s.reset(T::one());
        s
    }

    fn reset(&mut self, scale: T) {
        self.h.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.n {
            self.h[i * self.n + i] = scale;
        }
        self.fresh = true;
    }

    /// One iteration from `(x, f, g)`; on success the triple is replaced by
    /// the new iterate.
    pub fn step<F>(
        &mut self,
        x: &mut Vec<T>,
        f: &mut T,
        g: &mut Vec<T>,
        mut eval: F,
    ) -> Result<BfgsStep>
    where
        F: FnMut(&[T]) -> Result<(T, Vec<T>)>,
    {
        for attempt in 0..2 {
            let n = self.n;
            let dir: Vec<T> = (0..n)
                .map(|i| -dot(&self.h[i * n..(i + 1) * n], g))
                .collect();
            let mut slope = dot(&dir, g);
            let dir = if slope < T::zero() {
                dir
            } else {
                slope = -dot(g, g);
                g.iter().map(|&v| -v).collect()
            };
            if slope == T::zero() {
                return Ok(BfgsStep::Stalled);
            }
            let alpha0 = if self.fresh {
                T::one().min(T::one() / dot(&dir, &dir).sqrt())
            } else {
                T::one()
            };
            match self.line_search(x, *f, slope, &dir, alpha0, &mut eval)? {
                Some(t) => {
                    let s: Vec<T> = t.x.iter().zip(x.iter()).map(|(&a, &b)| a - b).collect();
                    let y: Vec<T> = t.g.iter().zip(g.iter()).map(|(&a, &b)| a - b).collect();
                    self.update(&s, &y);
                    *x = t.x;
                    *f = t.f;
                    *g = t.g;
                    return Ok(BfgsStep::Moved);
                }
                None if attempt == 0 && !self.fresh => self.reset(T::one()),
                None => break,
            }
        }
        Ok(BfgsStep::Stalled)
    }

    fn update(&mut self, s: &[T], y: &[T]) {
        let sy = dot(s, y);
        if !(sy > T::zero()) {
            return;
        }
        let n = self.n;
        if self.fresh {
            self.reset(sy / dot(y, y));
            self.fresh = false;
        }
        let rho = T::one() / sy;
        let hy: Vec<T> = (0..n)
            .map(|i| dot(&self.h[i * n..(i + 1) * n], y))
            .collect();
        let yhy = dot(y, &hy);
        let coef = (T::one() + rho * yhy) * rho;
        for i in 0..n {
            for j in 0..n {
                self.h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }

    fn line_search<F>(
        &self,
        x: &[T],
        f0: T,
        slope0: T,
        dir: &[T],
        alpha0: T,
        eval: &mut F,
    ) -> Result<Option<Trial<T>>>
    where
        F: FnMut(&[T]) -> Result<(T, Vec<T>)>,
    {
        let evals = Cell::new(0);
        let mut probe = |alpha: T| -> Result<(Trial<T>, T)> {
            evals.set(evals.get() + 1);
            let xn: Vec<T> = x.iter().zip(dir).map(|(&a, &d)| a + alpha * d).collect();
            let (f, g) = eval(&xn)?;
            let slope = dot(&g, dir);
            Ok((Trial { x: xn, f, g }, slope))
        };
        let armijo = |alpha: T, f: T| f.is_finite() && f <= f0 + self.c1 * alpha * slope0;
        let curvature = |slope: T| slope.abs() <= -self.c2 * slope0;

        // Bracketing phase. `lo` always satisfies sufficient decrease.
        let mut lo: (T, T, T, Option<Trial<T>>) = (T::zero(), f0, slope0, None);
        let mut hi: (T, T);
        let mut alpha = alpha0;
        loop {
            let (trial, slope) = probe(alpha)?;
            let f = trial.f;
            if !armijo(alpha, f) || (lo.3.is_some() && f >= lo.1) {
                hi = (alpha, f);
                break;
            }
            if curvature(slope) {
                return Ok(Some(trial));
            }
            if slope >= T::zero() {
                hi = (lo.0, lo.1);
                lo = (alpha, f, slope, Some(trial));
                break;
            }
            lo = (alpha, f, slope, Some(trial));
            if evals.get() >= self.max_evaluations {
                return Ok(lo.3);
            }
            alpha = alpha * T::cst(2.0);
        }

        // Zoom phase.
        while evals.get() < self.max_evaluations {
            let (l, u) = if lo.0 < hi.0 {
                (lo.0, hi.0)
            } else {
                (hi.0, lo.0)
            };
            if u - l <= T::epsilon() * u.abs().max(T::one()) {
                break;
            }
            // Minimizer of the quadratic matching f and slope at lo and f at hi.
            let d = hi.0 - lo.0;
            let denom = T::cst(2.0) * (hi.1 - lo.1 - lo.2 * d);
            let mut a = if denom > T::zero() && hi.1.is_finite() {
                lo.0 - lo.2 * d * d / denom
            } else {
                (l + u) * T::cst(0.5)
            };
            let margin = (u - l) * T::cst(0.1);
            if !(a > l + margin && a < u - margin) {
                a = (l + u) * T::cst(0.5);
            }
            let (trial, slope) = probe(a)?;
            let f = trial.f;
            if !armijo(a, f) || f >= lo.1 {
                hi = (a, f);
            } else {
                if curvature(slope) {
                    return Ok(Some(trial));
                }
                if slope * (hi.0 - lo.0) >= T::zero() {
                    hi = (lo.0, lo.1);
                }
                lo = (a, f, slope, Some(trial));
            }
        }
        // Fall back to the best sufficient-decrease point found.
        Ok(lo.3)
    }
}
