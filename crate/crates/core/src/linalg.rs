//! Dense complex matrices and LU factorization with partial pivoting.

use std::io::{self, Write};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{BinnError, Result};
use crate::scalar::Real;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(BinnError::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::zero()
            }
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `A^H v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.rows, "vector length must match row count");
        let mut out = vec![Complex::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, a) in sums.iter_mut().zip(self.row(i)) {
                *s += a.norm();
            }
        }
        sums.into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    /// Text dump: a `rows cols` header, then one `re im` pair per entry in
    /// row-major order.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.rows, self.cols)?;
        for z in &self.data {
            writeln!(out, "{:e} {:e}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// `PA = LU` with unit-diagonal `L` stored below the diagonal.
#[derive(Debug, Clone)]
pub struct LuFactorization<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    norm1: T,
}

impl<T: Real> LuFactorization<T> {
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(BinnError::Dimension {
                expected: a.rows,
                got: a.cols,
            });
        }
        let n = a.rows;
        let norm1 = a.norm1();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu.get(k, k).norm();
            for i in (k + 1)..n {
                let v = lu.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return Err(BinnError::SingularSystem {
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu.get(k, k);
            let (upper, lower) = lu.data.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..];
            for row in lower.chunks_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l.is_zero() {
                    continue;
                }
                for (r, u) in row[(k + 1)..].iter_mut().zip(&row_k[(k + 1)..]) {
                    *r -= l * u;
                }
            }
        }
        Ok(Self { lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // A^H = U^H L^H P, so solve U^H w = b, L^H v = w, x = P^T v.
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu.get(j, i).conj() * w[j];
            }
            w[i] = s / self.lu.get(i, i).conj();
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in (i + 1)..n {
                s -= self.lu.get(j, i).conj() * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![Complex::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// 1-norm condition number estimate (Hager's method as refined by Higham).
    pub fn condition_estimate(&self) -> T {
        let n = self.dim();
        if n == 0 {
            return T::one();
        }
        let l1 = |v: &[Complex<T>]| v.iter().fold(T::zero(), |a, z| a + z.norm());
        let mut x = vec![Complex::new(T::one() / T::from_usize_lossy(n), T::zero()); n];
        let mut est = T::zero();
        for iter in 0..5 {
            let y = self.solve(&x);
            let ny = l1(&y);
            if iter > 0 && ny <= est {
                break;
            }
            est = ny;
            let xi: Vec<Complex<T>> = y
                .iter()
                .map(|z| {
                    let m = z.norm();
                    if m > T::zero() {
                        z / m
                    } else {
                        Complex::new(T::one(), T::zero())
                    }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, T::zero()), |a, b| if b.1 > a.1 { b } else { a });
            let ztx = z
                .iter()
                .zip(&x)
                .fold(Complex::zero(), |acc: Complex<T>, (a, b)| {
                    acc + a.conj() * b
                });
            if zmax <= ztx.re {
                break;
            }
            x = vec![Complex::zero(); n];
            x[jmax] = Complex::new(T::one(), T::zero());
        }
        // Alternative estimate guarding against the known bad cases.
        let mut alt: Vec<Complex<T>> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { T::one() } else { -T::one() };
                let v = T::one() + T::from_usize_lossy(i) / T::from_usize_lossy((n - 1).max(1));
                Complex::new(s * v, T::zero())
            })
            .collect();
        alt = self.solve(&alt);
        let alt_est = l1(&alt) * T::cst(2.0) / (T::cst(3.0) * T::from_usize_lossy(n));
        est.max(alt_est) * self.norm1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sample(n: usize) -> CMatrix<f64> {
        CMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            c(
                d + ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6,
                ((i + 2 * j) % 3) as f64 * 0.25 - 0.2,
            )
        })
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = sample(12);
        let x: Vec<_> = (0..12).map(|i| c(i as f64 - 3.0, 0.5 * i as f64)).collect();
        let b = a.mul_vec(&x);
        let lu = LuFactorization::new(&a).unwrap();
        for (u, v) in lu.solve(&b).iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
        let bh = a.adjoint_mul_vec(&x);
        for (u, v) in lu.solve_adjoint(&bh).iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = CMatrix::from_rows(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        let lu = LuFactorization::new(&a).unwrap();
        let x = lu.solve(&[c(3.0, 0.0), c(2.0, 1.0)]);
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CMatrix::from_rows(
            2,
            2,
            vec![c(1.0, 1.0), c(2.0, 2.0), c(1.0, 1.0), c(2.0, 2.0)],
        )
        .unwrap();
        match LuFactorization::new(&a) {
            Err(BinnError::SingularSystem { .. }) => {}
            Ok(lu) => assert!(lu.condition_estimate() > 1e14),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn condition_estimate_matches_diagonal_case() {
        let a = CMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                c(10f64.powi(i as i32), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let cond = LuFactorization::new(&a).unwrap().condition_estimate();
        assert!((cond - 1e4).abs() < 1e-8);
        let id = LuFactorization::new(&CMatrix::<f64>::identity(4)).unwrap();
        assert!((id.condition_estimate() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn condition_estimate_bounds_true_value() {
        let a = sample(8);
        let lu = LuFactorization::new(&a).unwrap();
        // Exact inverse 1-norm from solving against unit vectors.
        let mut inv_norm = 0.0_f64;
        for j in 0..8 {
            let mut e = vec![c(0.0, 0.0); 8];
            e[j] = c(1.0, 0.0);
            inv_norm = inv_norm.max(lu.solve(&e).iter().map(|z| z.norm()).sum());
        }
        let exact = inv_norm * a.norm1();
        let est = lu.condition_estimate();
        assert!(
            est <= exact * (1.0 + 1e-12) && est >= exact / 3.0,
            "{est} vs {exact}"
        );
    }

    #[test]
    fn text_dump_layout() {
        let a = sample(3);
        let mut buf = Vec::new();
        a.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("3 3"));
        assert_eq!(text.lines().count(), 10);
    }
}
