//! Fourth-order statistical tensor, coskewness tensor and their contractions.
//!
//! The fourth-order tensor of whitened data `Z` (columns `x`) is stored as
//! `c[a,b,c,d] = (1/L) Σ x_a x_b* x_c x_d*`, row-major with `a` slowest.
//! Its contractions are taken so that
//!
//! * `Cw⁴ = (1/L) Σ |wᴴx|⁴`, the kurtosis of the projection `wᴴZ`;
//! * `(Cw³)_a = Σ c[a,b,c,d] w_b w_c* w_d = (1/L) Σ x_a |y|² y*` with `y = wᴴx`,
//!   so that `Cw⁴ = wᴴ Cw³` and `Cw³` is the Wirtinger gradient direction.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, hermitian_eigen, hermitian_sqrt, inner, norm, CMatrix};
use crate::rng::{complex_normal, seeded};
use crate::signal::ComplexDataMatrix;
use crate::whitening::{whiten, whiteness_error};

/// Default cap on a dense `N⁴` allocation (1 GiB).
pub const DEFAULT_MEMORY_CAP: u128 = 1 << 30;

const UNIT_TOL: f64 = 1e-9;

/// Eigenpair `Cw³ = λw` together with the residual `‖Cw³ − λw‖` it was
/// accepted with.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenPair {
    pub w: Vec<C64>,
    pub lambda: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FourthOrderTensor {
    dim: usize,
    entries: Vec<C64>,
}

fn check_capacity(dim: usize, cap: u128) -> Result<()> {
    let bytes = (dim as u128).pow(4) * 16;
    if bytes > cap {
        return Err(Error::Capacity { dim, bytes, cap });
    }
    Ok(())
}

fn check_unit(w: &[C64], dim: usize) -> Result<()> {
    if w.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: w.len() });
    }
    let n = norm(w);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitNorm { norm: n });
    }
    Ok(())
}

/// The eight index images of `(a,b,c,d)` under the tensor's symmetry group,
/// each with a flag telling whether the value is conjugated.
fn orbit(q: [usize; 4]) -> [([usize; 4], bool); 8] {
    let [a, b, c, d] = q;
    [
        ([a, b, c, d], false),
        ([c, b, a, d], false),
        ([a, d, c, b], false),
        ([c, d, a, b], false),
        ([b, a, d, c], true),
        ([b, c, d, a], true),
        ([d, a, b, c], true),
        ([d, c, b, a], true),
    ]
}

impl FourthOrderTensor {
    /// Wraps raw row-major entries.
    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("tensor dimension must be positive"));
        }
        check_capacity(dim, DEFAULT_MEMORY_CAP)?;
        if entries.len() != dim.pow(4) {
            return Err(Error::DimensionMismatch { expected: dim.pow(4), actual: entries.len() });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        self.entries[self.index(a, b, c, d)]
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// `Cw³` without argument checks.
    pub fn cw3_unchecked(&self, w: &[C64]) -> Vec<C64> {
        let n = self.dim;
        // inner[c*n+d] = w_c* w_d, reused for every (a, b)
        let mut pair = vec![C64::new(0.0, 0.0); n * n];
        for c in 0..n {
            for d in 0..n {
                pair[c * n + d] = w[c].conj() * w[d];
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (a, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (b, &wb) in w.iter().enumerate() {
                let base = (a * n + b) * n * n;
                let slab = &self.entries[base..base + n * n];
                let s: C64 = slab.iter().zip(&pair).map(|(t, p)| t * p).sum();
                acc += wb * s;
            }
            *o = acc;
        }
        out
    }

    /// `Cw³` for a unit vector `w`.
    pub fn cw3(&self, w: &[C64]) -> Result<Vec<C64>> {
        check_unit(w, self.dim)?;
        Ok(self.cw3_unchecked(w))
    }

    /// `wᴴ Cw³` as a complex number, without checks.
    pub fn quartic_form(&self, w: &[C64]) -> C64 {
        inner(w, &self.cw3_unchecked(w))
    }

    /// `Cw⁴`, the projected kurtosis. Errors if the contraction is not real to
    /// `1e-10·max(1, |Cw⁴|)`.
    pub fn cw4(&self, w: &[C64]) -> Result<f64> {
        check_unit(w, self.dim)?;
        let v = self.quartic_form(w);
        if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
            return Err(Error::NonRealContraction { real: v.re, imag: v.im });
        }
        Ok(v.re)
    }

    /// `(λ, ‖Cw³ − λw‖)` with `λ = Re wᴴCw³`.
    pub fn eigen_residual(&self, w: &[C64]) -> (f64, f64) {
        let g = self.cw3_unchecked(w);
        let lambda = inner(w, &g).re;
        let r = libm::sqrt(g.iter().zip(w).map(|(gi, wi)| (gi - wi * lambda).norm_sqr()).sum());
        (lambda, r)
    }

    /// Residuals of the six equalities in the chain
    /// `c_abcd = c*_bacd = c_cbad = c*_dbca = c*_acbd = c_adcb = c*_abdc`,
    /// each as the largest absolute deviation from `c_abcd`.
    pub fn symmetry_residuals(&self) -> [f64; 6] {
        let n = self.dim;
        let mut out = [0.0f64; 6];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = self.get(a, b, c, d);
                        let rel = [
                            self.get(b, a, c, d).conj(),
                            self.get(c, b, a, d),
                            self.get(d, b, c, a).conj(),
                            self.get(a, c, b, d).conj(),
                            self.get(a, d, c, b),
                            self.get(a, b, d, c).conj(),
                        ];
                        for (k, r) in rel.iter().enumerate() {
                            out[k] = out[k].max((v - r).norm());
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest deviation from the symmetries every moment tensor of the form
    /// `E[x_a x_b* x_c x_d*]` satisfies: swapping the two unconjugated
    /// indices, swapping the two conjugated ones, and `c_abcd = c*_badc`.
    pub fn moment_symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = self.get(a, b, c, d);
                        for (q, conj) in orbit([a, b, c, d]) {
                            let u = self.get(q[0], q[1], q[2], q[3]);
                            let u = if conj { u.conj() } else { u };
                            worst = worst.max((v - u).norm());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DenseTensor {
        DenseTensor { shape: vec![self.dim; 4], entries: self.entries.clone() }
    }
}

/// Fourth-moment tensor of whitened data, capped at [`DEFAULT_MEMORY_CAP`].
pub fn fourth_moment_tensor(z: &ComplexDataMatrix) -> Result<FourthOrderTensor> {
    fourth_moment_tensor_with_cap(z, DEFAULT_MEMORY_CAP)
}

/// Computes one representative per symmetry orbit and fills the rest.
pub fn fourth_moment_tensor_with_cap(z: &ComplexDataMatrix, cap: u128) -> Result<FourthOrderTensor> {
    let n = z.channels();
    check_capacity(n, cap)?;
    let dev = whiteness_error(z);
    if dev > 1e-3 {
        log::warn!("fourth_moment_tensor: input covariance deviates from identity by {dev:.3e}");
    }
    let l = z.samples();
    let inv_l = 1.0 / l as f64;
    let rows: Vec<&[C64]> = (0..n).map(|i| z.row(i)).collect();
    let mut entries = vec![C64::new(0.0, 0.0); n.pow(4)];
    let mut done = vec![false; n.pow(4)];
    let idx = |q: [usize; 4]| ((q[0] * n + q[1]) * n + q[2]) * n + q[3];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let here = idx([a, b, c, d]);
                    if done[here] {
                        continue;
                    }
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..l {
                        acc += rows[a][j] * rows[b][j].conj() * rows[c][j] * rows[d][j].conj();
                    }
                    let v = acc * inv_l;
                    for (q, conj) in orbit([a, b, c, d]) {
                        let k = idx(q);
                        if done[k] {
                            continue;
                        }
                        entries[k] = if conj { v.conj() } else { v };
                        done[k] = true;
                    }
                    // an entry that is its own conjugate image is real
                    if here == idx([b, a, d, c]) {
                        entries[here].im = 0.0;
                    }
                }
            }
        }
    }
    Ok(FourthOrderTensor { dim: n, entries })
}

/// `(1/L) Σ |wᴴx|⁴` evaluated directly on samples.
pub fn sample_kurtosis(z: &ComplexDataMatrix, w: &[C64]) -> Result<f64> {
    let y = project(z, w)?;
    Ok(y.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>() / y.len() as f64)
}

/// `(1/L) Σ x |y|² y*` with `y = wᴴx`, the sample-side `Cw³`.
pub fn sample_cw3(z: &ComplexDataMatrix, w: &[C64]) -> Result<Vec<C64>> {
    let y = project(z, w)?;
    let l = y.len() as f64;
    Ok((0..z.channels())
        .map(|a| z.row(a).iter().zip(&y).map(|(x, v)| x * v.conj() * v.norm_sqr()).sum::<C64>() / l)
        .collect())
}

/// `wᴴZ`.
pub fn project(z: &ComplexDataMatrix, w: &[C64]) -> Result<Vec<C64>> {
    if w.len() != z.channels() {
        return Err(Error::DimensionMismatch { expected: z.channels(), actual: w.len() });
    }
    let mut y = vec![C64::new(0.0, 0.0); z.samples()];
    for (i, wi) in w.iter().enumerate() {
        let c = wi.conj();
        for (yj, x) in y.iter_mut().zip(z.row(i)) {
            *yj += c * x;
        }
    }
    Ok(y)
}

/// Symmetric real third-order coskewness tensor.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThirdOrderTensor {
    dim: usize,
    entries: Vec<f64>,
}

impl ThirdOrderTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.dim + j) * self.dim + k]
    }

    /// `S ×₂ w ×₃ w`.
    pub fn contract2(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    let row = &self.entries[(i * n + j) * n..(i * n + j + 1) * n];
                    acc += w[j] * row.iter().zip(w).map(|(s, x)| s * x).sum::<f64>();
                }
                acc
            })
            .collect()
    }

    /// `S ×₁ w ×₂ w ×₃ w`, the skewness of `wᵀZ`.
    pub fn skewness(&self, w: &[f64]) -> f64 {
        self.contract2(w).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Largest deviation from full permutation symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for u in [self.get(i, k, j), self.get(j, i, k), self.get(j, k, i), self.get(k, i, j), self.get(k, j, i)] {
                        worst = worst.max((v - u).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `S_ijk = (1/L) Σ x_i x_j x_k` for real whitened data.
pub fn coskewness_tensor(z: &ComplexDataMatrix) -> Result<ThirdOrderTensor> {
    if !z.is_real() {
        return Err(Error::ComplexInput);
    }
    let n = z.channels();
    let l = z.samples();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| z.row(i).iter().map(|v| v.re).collect()).collect();
    let mut entries = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let v = (0..l).map(|t| rows[i][t] * rows[j][t] * rows[k][t]).sum::<f64>() / l as f64;
                for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    entries[(a * n + b) * n + c] = v;
                }
            }
        }
    }
    Ok(ThirdOrderTensor { dim: n, entries })
}

/// General dense complex tensor for n-mode products.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    entries: Vec<C64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, entries: Vec<C64>) -> Result<Self> {
        let size: usize = shape.iter().product();
        if size != entries.len() {
            return Err(Error::DimensionMismatch { expected: size, actual: entries.len() });
        }
        Ok(Self { shape, entries })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    fn strides(shape: &[usize]) -> Vec<usize> {
        let mut s = vec![1; shape.len()];
        for k in (0..shape.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * shape[k + 1];
        }
        s
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        let s = Self::strides(&self.shape);
        self.entries[index.iter().zip(&s).map(|(i, st)| i * st).sum::<usize>()]
    }
}

/// `(A ×ₙ U)_{…j…} = Σ_{iₙ} a_{…iₙ…} U_{iₙ j}` with a zero-based `mode`.
pub fn nmode_product(t: &DenseTensor, u: &CMatrix, mode: usize) -> Result<DenseTensor> {
    if mode >= t.shape.len() {
        return Err(invalid("mode index out of range"));
    }
    let dim = t.shape[mode];
    if u.rows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: u.rows() });
    }
    let j_len = u.cols();
    let outer: usize = t.shape[..mode].iter().product();
    let inner_len: usize = t.shape[mode + 1..].iter().product();
    let mut shape = t.shape.clone();
    shape[mode] = j_len;
    let mut entries = vec![C64::new(0.0, 0.0); outer * j_len * inner_len];
    for o in 0..outer {
        for i in 0..dim {
            for r in 0..inner_len {
                let a = t.entries[(o * dim + i) * inner_len + r];
                for j in 0..j_len {
                    entries[(o * j_len + j) * inner_len + r] += a * u[(i, j)];
                }
            }
        }
    }
    Ok(DenseTensor { shape, entries })
}

/// n-mode product with a vector; the contracted mode is removed.
pub fn nmode_vector_product(t: &DenseTensor, v: &[C64], mode: usize) -> Result<DenseTensor> {
    let u = CMatrix::from_vec(v.len(), 1, v.to_vec())?;
    let mut out = nmode_product(t, &u, mode)?;
    out.shape.remove(mode);
    Ok(out)
}

/// Fourth-order cumulant matrices `(N_kl)_ij = cum(x_i, x_j*, x_k, x_l*)`,
/// returned in the order `k·N + l`.
pub fn cumulant_matrices(z: &ComplexDataMatrix) -> Result<Vec<CMatrix>> {
    let t = fourth_moment_tensor(z)?;
    let n = z.channels();
    let l = z.samples() as f64;
    // r[i][j] = E[x_i x_j*], p[i][j] = E[x_i x_j]
    let mut r = CMatrix::zeros(n, n);
    let mut p = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (mut sr, mut sp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for (a, b) in z.row(i).iter().zip(z.row(j)) {
                sr += a * b.conj();
                sp += a * b;
            }
            r[(i, j)] = sr / l;
            p[(i, j)] = sp / l;
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for ll in 0..n {
            out.push(CMatrix::from_fn(n, n, |i, j| {
                t.get(i, j, k, ll) - r[(i, j)] * r[(k, ll)] - p[(i, k)] * p[(j, ll)].conj() - r[(i, ll)] * r[(k, j)]
            }));
        }
    }
    Ok(out)
}

/// Cumulant matrices built from a moment tensor alone, assuming the data it
/// came from was white and circular (`E[xxᴴ] = I`, `E[xxᵀ] = 0`). Same
/// ordering as [`cumulant_matrices`].
pub fn cumulant_matrices_from_tensor(t: &FourthOrderTensor) -> Vec<CMatrix> {
    let n = t.dim();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for ll in 0..n {
            out.push(CMatrix::from_fn(n, n, |i, j| {
                t.get(i, j, k, ll) - C64::new(delta(i, j) * delta(k, ll) + delta(i, ll) * delta(k, j), 0.0)
            }));
        }
    }
    out
}

/// Parameters of the planted-eigenvector tensor family used by the
/// validation experiment.
#[derive(Clone, Copy, Debug)]
pub struct StatisticalTensorParams {
    /// Bernoulli activity of each sparse source.
    pub activity: f64,
    /// Fraction of the leading covariance direction carried by the sources.
    pub source_share: f64,
    /// Range of `|gᵢⱼ|` for the Gram matrix of the planted directions.
    pub gram_range: (f64, f64),
}

impl Default for StatisticalTensorParams {
    fn default() -> Self {
        Self { activity: 0.02, source_share: 0.6, gram_range: (0.15, 0.35) }
    }
}

/// Fourth-moment tensor of freshly drawn, whitened, circular complex
/// Gaussian-mixture data: `n` sparse Bernoulli–Gaussian sources along
/// nonorthogonal directions over a Gaussian background, so the tensor has
/// `n` nonorthogonal local maxima of `Cw⁴`.
pub fn random_statistical_tensor(n: usize, seed: u64, l_samples: usize) -> Result<FourthOrderTensor> {
    random_statistical_tensor_with(n, seed, l_samples, StatisticalTensorParams::default())
}

pub fn random_statistical_tensor_with(
    n: usize,
    seed: u64,
    l_samples: usize,
    params: StatisticalTensorParams,
) -> Result<FourthOrderTensor> {
    if n < 2 {
        return Err(invalid("random tensors need n >= 2"));
    }
    if l_samples < n {
        return Err(invalid("need at least n samples"));
    }
    let mut rng = seeded(seed);
    let (lo, hi) = params.gram_range;
    let d = loop {
        let mut g = CMatrix::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                let mag = lo + (hi - lo) * rng.random::<f64>();
                let ph = 2.0 * core::f64::consts::PI * rng.random::<f64>();
                let v = C64::from_polar(mag, ph);
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        let min_eig = hermitian_eigen(&g)?.values.last().copied().unwrap_or(0.0);
        if min_eig < 0.1 {
            continue;
        }
        if let Some(lower) = cholesky(&g)? {
            // columns of Lᴴ have Gram matrix L Lᴴ = G
            break lower.adjoint();
        }
    };
    let ddh = d.matmul(&d.adjoint())?;
    let lam_max = hermitian_eigen(&ddh)?.values[0];
    let sigma2 = params.source_share / lam_max;
    let background = hermitian_sqrt(&CMatrix::identity(n).sub(&ddh.scale(C64::new(sigma2, 0.0)))?)?;
    let scale = 1.0 / libm::sqrt(params.activity);
    let sources = CMatrix::from_fn(n, l_samples, |_, _| {
        let g = complex_normal(&mut rng);
        if rng.random::<f64>() < params.activity {
            g * scale
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let noise = CMatrix::from_fn(n, l_samples, |_, _| complex_normal(&mut rng));
    let mixing = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng));
    let y = d.scale(C64::new(libm::sqrt(sigma2), 0.0)).matmul(&sources)?.add(&background.matmul(&noise)?)?;
    let x = ComplexDataMatrix::new(mixing.matmul(&y)?, 1.0)?;
    let white = whiten(&x, None)?;
    fourth_moment_tensor(&white.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::random_unit;

    fn data(n: usize, l: usize, seed: u64, real: bool) -> ComplexDataMatrix {
        let mut rng = seeded(seed);
        let m = CMatrix::from_fn(n, l, |_, _| {
            let z = complex_normal(&mut rng);
            if real {
                C64::new(z.re, 0.0)
            } else {
                z
            }
        });
        whiten(&ComplexDataMatrix::new(m, 1.0).unwrap(), None).unwrap().z
    }

    #[test]
    fn matches_naive_sum() {
        let z = data(3, 50, 1, false);
        let t = fourth_moment_tensor(&z).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let mut acc = C64::new(0.0, 0.0);
                        for j in 0..50 {
                            let x = |i: usize| z.row(i)[j];
                            acc += x(a) * x(b).conj() * x(c) * x(d).conj();
                        }
                        assert!((t.get(a, b, c, d) - acc / 50.0).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_case() {
        let ph: Vec<C64> = (0..16).map(|k| C64::from_polar(1.0, k as f64 * 0.7)).collect();
        let z = ComplexDataMatrix::new(CMatrix::from_vec(1, 16, ph).unwrap(), 1.0).unwrap();
        let t = fourth_moment_tensor(&z).unwrap();
        assert!((t.get(0, 0, 0, 0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        let kappa = C64::new(2.5, 0.0);
        let t = FourthOrderTensor::from_entries(1, vec![kappa]).unwrap();
        let w = [C64::from_polar(1.0, 0.9)];
        assert!((t.cw3(&w).unwrap()[0] - kappa * w[0]).norm() < 1e-15);
        assert!((t.cw4(&w).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn kurtosis_and_gradient_match_samples() {
        let z = data(4, 300, 3, false);
        let t = fourth_moment_tensor(&z).unwrap();
        let mut rng = seeded(4);
        for _ in 0..10 {
            let w = random_unit(&mut rng, 4, false);
            let direct = sample_kurtosis(&z, &w).unwrap();
            assert!((t.cw4(&w).unwrap() - direct).abs() <= 1e-10 * direct.max(1.0));
            let g = t.cw3(&w).unwrap();
            let gs = sample_cw3(&z, &w).unwrap();
            for (a, b) in g.iter().zip(&gs) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn group_symmetries_hold_and_chain_holds_for_real() {
        let t = fourth_moment_tensor(&data(3, 200, 5, false)).unwrap();
        assert!(t.moment_symmetry_residual() < 1e-12);
        let r = t.symmetry_residuals();
        assert!(r[1] < 1e-12 && r[4] < 1e-12);
        let real = fourth_moment_tensor(&data(3, 200, 6, true)).unwrap();
        assert!(real.is_real());
        assert!(real.symmetry_residuals().iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn unit_norm_is_enforced() {
        let t = FourthOrderTensor::from_entries(1, vec![C64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(t.cw3(&[C64::new(2.0, 0.0)]), Err(Error::NotUnitNorm { .. })));
        assert!(matches!(t.cw3(&[C64::new(1.0, 0.0); 2]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn capacity_error() {
        let z = data(3, 10, 1, false);
        assert!(matches!(fourth_moment_tensor_with_cap(&z, 100), Err(Error::Capacity { dim: 3, .. })));
    }

    #[test]
    fn nmode_identity_and_ones() {
        let mut rng = seeded(2);
        let t = DenseTensor::new(vec![2, 3, 2], (0..12).map(|_| complex_normal(&mut rng)).collect()).unwrap();
        for mode in 0..3 {
            let id = CMatrix::identity(t.shape()[mode]);
            assert_eq!(nmode_product(&t, &id, mode).unwrap(), t);
        }
        let ones = DenseTensor::new(vec![2, 2, 2], vec![C64::new(1.0, 0.0); 8]).unwrap();
        let r = nmode_vector_product(&ones, &[C64::new(1.0, 0.0); 2], 0).unwrap();
        assert_eq!(r.shape(), &[2, 2]);
        assert!(r.entries().iter().all(|&v| v == C64::new(2.0, 0.0)));
    }

    #[test]
    fn sequential_modes_equal_quartic_form() {
        let t = random_statistical_tensor(3, 1, 2000).unwrap();
        let mut rng = seeded(8);
        let w = random_unit(&mut rng, 3, false);
        let wc: Vec<C64> = w.iter().map(|v| v.conj()).collect();
        // kurt(wᴴZ) contracts the unconjugated modes with w* and the conjugated ones with w
        let mut d = t.to_dense();
        for v in [&wc, &w, &wc, &w] {
            d = nmode_vector_product(&d, v, 0).unwrap();
        }
        assert!((d.entries()[0] - t.quartic_form(&w)).norm() < 1e-12);
    }

    #[test]
    fn coskewness_rejects_complex_and_is_symmetric() {
        assert!(matches!(coskewness_tensor(&data(2, 20, 1, false)), Err(Error::ComplexInput)));
        let s = coskewness_tensor(&data(3, 100, 2, true)).unwrap();
        assert!(s.symmetry_residual() == 0.0);
        let w = [0.6, 0.0, 0.8];
        let mut brute = [0.0; 3];
        for (i, b) in brute.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    *b += s.get(i, j, k) * w[j] * w[k];
                }
            }
        }
        for (a, b) in s.contract2(&w).iter().zip(brute) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulant_matrix_pairs_are_adjoint() {
        let m = cumulant_matrices(&data(3, 400, 7, false)).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let a = &m[k * 3 + l];
                let b = &m[l * 3 + k];
                assert!(a.adjoint().max_abs_diff(b) < 1e-12);
            }
        }
    }

    #[test]
    fn random_tensor_is_seeded() {
        let a = random_statistical_tensor(3, 11, 1000).unwrap();
        assert_eq!(a, random_statistical_tensor(3, 11, 1000).unwrap());
        assert_eq!(a.entries().len(), 81);
        assert!(a.moment_symmetry_residual() < 1e-12);
    }
}
