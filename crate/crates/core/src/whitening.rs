//! Centering and PCA whitening.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::signal::ComplexDataMatrix;

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WhiteningResult {
    /// Whitened data, `kept_dims × L`.
    pub z: ComplexDataMatrix,
    /// Whitening matrix `Λ^{-1/2} Uᴴ`, `kept_dims × N`.
    pub v: CMatrix,
    pub mean: Vec<C64>,
    pub kept_dims: usize,
    /// All covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl WhiteningResult {
    /// Applies the stored mean and whitening matrix to other data of the
    /// same shape (used to push ground-truth components through).
    pub fn apply(&self, x: &ComplexDataMatrix) -> Result<ComplexDataMatrix> {
        x.transform(&self.v)
    }

    /// Applies the transform after removing the stored mean.
    pub fn apply_centered(&self, x: &ComplexDataMatrix) -> Result<ComplexDataMatrix> {
        let mut m = x.matrix().clone();
        for i in 0..m.rows() {
            let mu = self.mean[i];
            m.row_mut(i).iter_mut().for_each(|v| *v -= mu);
        }
        ComplexDataMatrix::new(m, x.sample_rate())?.transform(&self.v)
    }
}

/// Row means.
pub fn row_means(x: &ComplexDataMatrix) -> Vec<C64> {
    let l = x.samples() as f64;
    (0..x.channels()).map(|i| x.row(i).iter().sum::<C64>() / l).collect()
}

/// Removes each row's mean.
pub fn center(x: &ComplexDataMatrix) -> ComplexDataMatrix {
    let mut m = x.matrix().clone();
    for (i, mu) in row_means(x).into_iter().enumerate() {
        m.row_mut(i).iter_mut().for_each(|v| *v -= mu);
    }
    ComplexDataMatrix::new(m, x.sample_rate()).expect("centering preserves shape and finiteness")
}

/// `(1/L) X Xᴴ`.
pub fn sample_covariance(x: &ComplexDataMatrix) -> CMatrix {
    let n = x.channels();
    let l = x.samples() as f64;
    let mut c = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: C64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b.conj()).sum::<C64>() / l;
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
    }
    c
}

/// Centers `x` and whitens it onto its `n_keep` principal directions
/// (all of them by default).
pub fn whiten(x: &ComplexDataMatrix, n_keep: Option<usize>) -> Result<WhiteningResult> {
    let n = x.channels();
    let keep = n_keep.unwrap_or(n);
    if keep == 0 || keep > n {
        return Err(invalid("n_keep must lie in 1..=N"));
    }
    let mean = row_means(x);
    let xc = center(x);
    let cov = sample_covariance(&xc);
    let eig = hermitian_eigen(&cov)?;
    let trace: f64 = eig.values.iter().sum();
    let rank = eig.values.iter().filter(|&&v| v > 1e-12 * trace).count();
    if rank < keep {
        return Err(Error::RankDeficient { rank, requested: keep });
    }
    let v = CMatrix::from_fn(keep, n, |k, j| eig.vectors[(j, k)].conj() / libm::sqrt(eig.values[k]));
    let z = xc.transform(&v)?;
    Ok(WhiteningResult { z, v, mean, kept_dims: keep, eigenvalues: eig.values })
}

/// Number of dominant eigenvalues, located at the largest ratio between
/// consecutive (descending) eigenvalues. Returns at least `min_dims`.
pub fn dominant_dims(eigenvalues: &[f64], min_dims: usize) -> usize {
    let mut best = (eigenvalues.len(), 0.0);
    for k in min_dims.max(1)..eigenvalues.len() {
        let lo = eigenvalues[k].max(f64::MIN_POSITIVE);
        let ratio = eigenvalues[k - 1] / lo;
        if ratio > best.1 {
            best = (k, ratio);
        }
    }
    best.0.max(min_dims).min(eigenvalues.len())
}

/// Largest elementwise deviation of `(1/L) Z Zᴴ` from the identity.
pub fn whiteness_error(z: &ComplexDataMatrix) -> f64 {
    let c = sample_covariance(z);
    c.max_abs_diff(&CMatrix::identity(c.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, seeded};

    fn random_data(n: usize, l: usize, seed: u64) -> ComplexDataMatrix {
        let mut rng = seeded(seed);
        let m = CMatrix::from_fn(n, l, |i, _| complex_normal(&mut rng) * (i + 1) as f64 + C64::new(2.0, -1.0));
        ComplexDataMatrix::new(m, 1.0).unwrap()
    }

    #[test]
    fn centering_zeroes_means() {
        let x = center(&random_data(3, 400, 1));
        for mu in row_means(&x) {
            assert!(mu.norm() < 1e-14);
        }
        let again = center(&x);
        let scale = x.matrix().as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(again.matrix().max_abs_diff(x.matrix()) <= 1e-15 * scale);
    }

    #[test]
    fn whitened_covariance_is_identity() {
        let w = whiten(&random_data(4, 1000, 2), None).unwrap();
        assert!(whiteness_error(&w.z) < 1e-10);
        let again = whiten(&w.z, None).unwrap();
        let vv = again.v.matmul(&again.v.adjoint()).unwrap();
        assert!(vv.max_abs_diff(&CMatrix::identity(4)) < 1e-8);
    }

    #[test]
    fn rank_deficiency_is_named() {
        let base = random_data(2, 300, 3);
        let m = CMatrix::from_fn(3, 300, |i, j| base.matrix()[(i.min(1), j)]);
        let x = ComplexDataMatrix::new(m, 1.0).unwrap();
        assert!(matches!(whiten(&x, None), Err(Error::RankDeficient { rank: 2, requested: 3 })));
        assert_eq!(whiten(&x, Some(2)).unwrap().kept_dims, 2);
    }

    #[test]
    fn dominant_gap() {
        assert_eq!(dominant_dims(&[50.0, 20.0, 0.11, 0.09], 1), 2);
        assert_eq!(dominant_dims(&[1.0, 1.0], 2), 2);
    }
}
