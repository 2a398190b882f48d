//! Small dense complex linear algebra.
//!
//! Matrices in this crate are tiny (channel counts up to a few dozen), so a
//! row-major `Vec` with cyclic Jacobi for Hermitian eigenproblems is plenty.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, actual: bad.len() });
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == ZERO {
                    continue;
                }
                for (oj, &bkj) in o.iter_mut().zip(rhs.row(k)) {
                    *oj += aik * bkj;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: rhs.rows * rhs.cols,
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(C64::norm_sqr).sum())
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: self.cols });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return Ok(ZERO);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        Ok(det)
    }

    /// Solves `self * x = b` for every column of `b` (Gaussian elimination with
    /// partial pivoting). Returns `None` when the matrix is numerically singular.
    pub fn solve(&self, b: &Self) -> Result<Option<Self>> {
        if !self.is_square() || b.rows != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: b.rows });
        }
        let n = self.rows;
        let m = b.cols;
        let mut a = self.data.clone();
        let mut x = b.data.clone();
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if pmax <= 1e-14 * scale {
                return Ok(None);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                for j in 0..m {
                    x.swap(k * m + j, p * m + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
                for j in 0..m {
                    let xkj = x[k * m + j];
                    x[i * m + j] -= f * xkj;
                }
            }
        }
        for k in (0..n).rev() {
            let pivot = a[k * n + k];
            for j in 0..m {
                let mut acc = x[k * m + j];
                for l in k + 1..n {
                    acc -= a[k * n + l] * x[l * m + j];
                }
                x[k * m + j] = acc / pivot;
            }
        }
        Ok(Some(Self { rows: n, cols: m, data: x }))
    }

    pub fn inverse(&self) -> Result<Option<Self>> {
        self.solve(&Self::identity(self.rows))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `aᴴ b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    libm::sqrt(a.iter().map(C64::norm_sqr).sum())
}

/// Scales `v` to unit norm in place; returns the previous norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|x| *x *= inv);
    }
    n
}

/// Rotates `v` so that its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let Some(pivot) = v
        .iter()
        .copied()
        .fold(None, |best: Option<C64>, x| match best {
            Some(b) if b.norm() >= x.norm() => Some(b),
            _ => Some(x),
        })
    else {
        return;
    };
    let r = pivot.norm();
    if r == 0.0 {
        return;
    }
    let rot = pivot.conj() / r;
    v.iter_mut().for_each(|x| *x *= rot);
    // land exactly on the real axis
    if let Some(p) = v.iter_mut().max_by(|a, b| a.norm().total_cmp(&b.norm())) {
        *p = C64::new(p.norm(), 0.0);
    }
}

/// Distance between `b` and the closest phase rotation of `a`:
/// `min_φ ‖b − e^{iφ} a‖`, attained at `φ = arg(aᴴ b)`.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let ip = inner(a, b);
    let rot = if ip.norm() > 0.0 { ip / ip.norm() } else { ONE };
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (y - rot * x).norm_sqr()).sum())
}

/// Lower-triangular `L` with `L Lᴴ = A` for a Hermitian positive definite
/// `A`; `None` if a pivot is not positive.
pub fn cholesky(a: &CMatrix) -> Result<Option<CMatrix>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, actual: a.cols });
    }
    let n = a.rows;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Ok(None);
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(Some(l))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, in the order of `values`. Each column's
    /// largest-magnitude entry is real positive.
    pub vectors: CMatrix,
    pub sweeps: usize,
}

/// Cyclic complex Jacobi. The input is assumed Hermitian; only its
/// Hermitian part is used.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, actual: a.cols });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("hermitian_eigen input"));
    }
    let n = a.rows;
    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    let mut sweeps = 0;
    while sweeps < 100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if libm::sqrt(off) <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for r_ in 0..n {
                    let x = m[(r_, p)];
                    let y = m[(r_, q)];
                    m[(r_, p)] = x * gpp + y * gqp;
                    m[(r_, q)] = x * gpq + y * gqq;
                }
                for c_ in 0..n {
                    let x = m[(p, c_)];
                    let y = m[(q, c_)];
                    m[(p, c_)] = gpp.conj() * x + gqp.conj() * y;
                    m[(q, c_)] = gpq.conj() * x + gqq.conj() * y;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for r_ in 0..n {
                    let x = v[(r_, p)];
                    let y = v[(r_, q)];
                    v[(r_, p)] = x * gpp + y * gqp;
                    v[(r_, q)] = x * gpq + y * gqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = v.column(i);
        fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(HermitianEigen { values, vectors, sweeps })
}

/// Hermitian square root `B` with `B Bᴴ = A` for a positive semidefinite `A`
/// (negative eigenvalues are clipped to zero).
pub fn hermitian_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(a)?;
    let n = a.rows();
    let u = &eig.vectors;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| u[(i, k)] * libm::sqrt(eig.values[k].max(0.0)) * u[(j, k)].conj())
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn jacobi_reconstructs_hermitian_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..7 {
            let b = random(&mut rng, n, n);
            let a = b.matmul(&b.adjoint()).unwrap();
            let eig = hermitian_eigen(&a).unwrap();
            let u = &eig.vectors;
            let d = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(eig.values[i], 0.0) } else { ZERO });
            let rebuilt = u.matmul(&d).unwrap().matmul(&u.adjoint()).unwrap();
            assert!(rebuilt.max_abs_diff(&a) < 1e-12, "n={n}");
            let gram = u.adjoint().matmul(u).unwrap();
            assert!(gram.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn determinant_matches_closed_form() {
        let a = CMatrix::from_vec(
            2,
            2,
            vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0), C64::new(0.0, -1.0), C64::new(3.0, 0.5)],
        )
        .unwrap();
        let expected = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((a.determinant().unwrap() - expected).norm() < 1e-14);
        let perm = CMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((perm.determinant().unwrap() + ONE).norm() < 1e-15);
    }

    #[test]
    fn solve_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(&mut rng, 4, 4);
        let inv = a.inverse().unwrap().unwrap();
        assert!(a.matmul(&inv).unwrap().max_abs_diff(&CMatrix::identity(4)) < 1e-10);
        let singular = CMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(singular.inverse().unwrap().is_none());
    }

    #[test]
    fn phase_fix_and_alignment() {
        let mut v = vec![C64::new(0.0, 0.5), C64::new(0.0, -2.0)];
        fix_phase(&mut v);
        assert_eq!(v[1], C64::new(2.0, 0.0));
        assert!((v[0] - C64::new(-0.5, 0.0)).norm() < 1e-15);

        let a = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let rot = C64::from_polar(1.0, 1.3);
        let b: Vec<C64> = a.iter().map(|x| x * rot).collect();
        assert!(phase_aligned_distance(&a, &b) < 1e-15);
    }

    #[test]
    fn cholesky_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random(&mut rng, 4, 4);
        let a = b.matmul(&b.adjoint()).unwrap().add(&CMatrix::identity(4)).unwrap();
        let l = cholesky(&a).unwrap().unwrap();
        assert!(l.matmul(&l.adjoint()).unwrap().max_abs_diff(&a) < 1e-12);
        let indefinite = CMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(cholesky(&indefinite).unwrap().is_none());
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random(&mut rng, 3, 3);
        let a = b.matmul(&b.adjoint()).unwrap();
        let r = hermitian_sqrt(&a).unwrap();
        assert!(r.matmul(&r.adjoint()).unwrap().max_abs_diff(&a) < 1e-12);
    }
}
