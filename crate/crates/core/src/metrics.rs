//! Separation metrics: ISI, ACC, SDR, eigenvector cosine similarity and
//! SIR improvement.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, CMatrix};
use crate::separators::{Algorithm, UnmixingMatrix};
use crate::signal::{ComplexDataMatrix, MixingMatrix, SourceSet};
use crate::tensor::{project, FourthOrderTensor};

/// SDR reported for a distortion-free estimate.
pub const SDR_CAP_DB: f64 = 300.0;

/// ISI of a global matrix `P`.
pub fn isi_matrix(p: &CMatrix) -> Result<f64> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch { expected: p.rows(), actual: p.cols() });
    }
    let n = p.rows();
    let mag = |i: usize, j: usize| p[(i, j)].norm_sqr();
    let mut total = 0.0;
    for i in 0..n {
        let m = (0..n).map(|j| mag(i, j)).fold(0.0, f64::max);
        if m == 0.0 {
            return Err(Error::UndefinedMetric("ISI: zero row in the global matrix"));
        }
        total += (0..n).map(|j| mag(i, j) / m).sum::<f64>() - 1.0;
    }
    for j in 0..n {
        let m = (0..n).map(|i| mag(i, j)).fold(0.0, f64::max);
        if m == 0.0 {
            return Err(Error::UndefinedMetric("ISI: zero column in the global matrix"));
        }
        total += (0..n).map(|i| mag(i, j) / m).sum::<f64>() - 1.0;
    }
    Ok(total)
}

/// `P = WᴴA_eff`.
pub fn global_matrix(w: &UnmixingMatrix, a_eff: &CMatrix) -> Result<CMatrix> {
    w.matrix().adjoint().matmul(a_eff)
}

/// Effective mixing seen in whitened space, `V·A`.
pub fn effective_mixing(v: &CMatrix, a: &MixingMatrix) -> Result<CMatrix> {
    v.matmul(a.matrix())
}

/// ISI of `P = WᴴA_eff`.
pub fn isi(w: &UnmixingMatrix, a_eff: &CMatrix) -> Result<f64> {
    isi_matrix(&global_matrix(w, a_eff)?)
}

/// `x₁·x₂ / (‖x₁‖‖x₂‖)` in absolute value; complex signals are compared
/// through their magnitude envelopes.
pub fn correlation(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedMetric("correlation of a zero-norm signal"));
    }
    let real = a.iter().chain(b).all(|z| z.im == 0.0);
    let dot = if real {
        a.iter().zip(b).map(|(x, y)| x.re * y.re).sum::<f64>().abs()
    } else {
        a.iter().zip(b).map(|(x, y)| x.norm() * y.norm()).sum::<f64>()
    };
    Ok((dot / (na * nb)).min(1.0))
}

/// Phase-invariant complex correlation `|⟨a, b⟩| / (‖a‖‖b‖)`.
pub fn complex_correlation(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedMetric("correlation of a zero-norm signal"));
    }
    Ok((inner(a, b).norm() / (na * nb)).min(1.0))
}

/// `|CC|` between every true source (rows) and every estimate (columns).
pub fn correlation_matrix(truth: &SourceSet, estimate: &SourceSet) -> Result<Vec<Vec<f64>>> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: estimate.len() });
    }
    truth
        .signals()
        .iter()
        .map(|s| estimate.signals().iter().map(|e| correlation(s.samples(), e.samples())).collect())
        .collect()
}

/// Greedy one-to-one matching, largest `|CC|` first. `matching[i]` is the
/// estimate assigned to true source `i`.
pub fn greedy_matching(cc: &[Vec<f64>]) -> Vec<usize> {
    let n = cc.len();
    let m = cc.first().map_or(0, Vec::len);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| cc[b.0][b.1].total_cmp(&cc[a.0][a.1]).then(a.cmp(b)));
    let mut matching = vec![usize::MAX; n];
    let mut used = vec![false; m];
    for (i, j) in pairs {
        if matching[i] == usize::MAX && !used[j] {
            matching[i] = j;
            used[j] = true;
        }
    }
    matching
}

/// Assignment maximising the summed `|CC|`, by exhaustive search.
pub fn optimal_matching(cc: &[Vec<f64>]) -> Vec<usize> {
    fn go(cc: &[Vec<f64>], i: usize, used: &mut [bool], cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>), acc: f64) {
        if i == cc.len() {
            if acc > best.0 {
                *best = (acc, cur.clone());
            }
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(cc, i + 1, used, cur, best, acc + cc[i][j]);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let m = cc.first().map_or(0, Vec::len);
    go(cc, 0, &mut vec![false; m], &mut Vec::new(), &mut best, 0.0);
    best.1
}

/// Mean matched `|CC|` and the matching used.
pub fn acc(truth: &SourceSet, estimate: &SourceSet) -> Result<(f64, Vec<usize>)> {
    if truth.count() != estimate.count() {
        return Err(Error::DimensionMismatch { expected: truth.count(), actual: estimate.count() });
    }
    let cc = correlation_matrix(truth, estimate)?;
    let matching = greedy_matching(&cc);
    let mean = matching.iter().enumerate().map(|(i, &j)| cc[i][j]).sum::<f64>() / truth.count() as f64;
    Ok((mean, matching))
}

/// Energies of the orthogonal decomposition `ŷ = target + e_interf + e_artif`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdrParts {
    pub estimate: f64,
    pub target: f64,
    pub interference: f64,
    pub artifact: f64,
    /// `‖e_interf + e_artif‖²`.
    pub distortion: f64,
}

impl SdrParts {
    pub fn sdr_db(&self) -> f64 {
        if self.target == 0.0 {
            return f64::NEG_INFINITY;
        }
        if self.distortion == 0.0 {
            return SDR_CAP_DB;
        }
        (10.0 * libm::log10(self.target / self.distortion)).min(SDR_CAP_DB)
    }
}

/// Orthogonal projection of `y` onto the span of `basis`.
fn project_onto(basis: &[&[C64]], y: &[C64]) -> Result<Vec<C64>> {
    let k = basis.len();
    let g = CMatrix::from_fn(k, k, |i, j| inner(basis[i], basis[j]));
    let b = CMatrix::from_fn(k, 1, |i, _| inner(basis[i], y));
    let coef = g.solve(&b)?.ok_or(Error::UndefinedMetric("SDR: true sources are linearly dependent"))?;
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    for (i, s) in basis.iter().enumerate() {
        let c = coef[(i, 0)];
        out.iter_mut().zip(s.iter()).for_each(|(o, x)| *o += c * x);
    }
    Ok(out)
}

/// Decomposition of `estimate` against true source `index` of `truth`.
pub fn sdr_parts(truth: &SourceSet, index: usize, estimate: &[C64]) -> Result<SdrParts> {
    let s = truth.signals()[index].samples();
    if s.len() != estimate.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), actual: estimate.len() });
    }
    let energy = |v: &[C64]| v.iter().map(C64::norm_sqr).sum::<f64>();
    let ss = energy(s);
    if ss == 0.0 {
        return Err(Error::UndefinedMetric("SDR: zero-energy true source"));
    }
    let c = inner(s, estimate) / ss;
    let target: Vec<C64> = s.iter().map(|x| x * c).collect();
    let basis: Vec<&[C64]> = truth.signals().iter().map(|x| x.samples()).collect();
    let all = project_onto(&basis, estimate)?;
    let interf: Vec<C64> = all.iter().zip(&target).map(|(a, t)| a - t).collect();
    let artif: Vec<C64> = estimate.iter().zip(&all).map(|(y, a)| y - a).collect();
    let dist: Vec<C64> = estimate.iter().zip(&target).map(|(y, t)| y - t).collect();
    Ok(SdrParts {
        estimate: energy(estimate),
        target: energy(&target),
        interference: energy(&interf),
        artifact: energy(&artif),
        distortion: energy(&dist),
    })
}

/// Per-source SDR in dB, with `matching[i]` the estimate for true source `i`.
pub fn sdr(truth: &SourceSet, estimate: &SourceSet, matching: &[usize]) -> Result<Vec<f64>> {
    if matching.len() != truth.count() {
        return Err(Error::DimensionMismatch { expected: truth.count(), actual: matching.len() });
    }
    matching
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let est = estimate
                .signals()
                .get(j)
                .ok_or(Error::DimensionMismatch { expected: estimate.count(), actual: j })?;
            Ok(sdr_parts(truth, i, est.samples())?.sdr_db())
        })
        .collect()
}

/// `s(w) = Re(wᴴCw³) / ‖Cw³‖`.
pub fn eigen_cosine(t: &FourthOrderTensor, w: &[C64]) -> Result<f64> {
    let g = t.cw3(w)?;
    let gn = norm(&g);
    if gn < 1e-14 {
        return Err(Error::DegenerateDirection(gn));
    }
    let v = inner(w, &g) / gn;
    if v.im.abs() > 1e-9 {
        return Err(Error::NonRealContraction { real: v.re, imag: v.im });
    }
    Ok(v.re)
}

/// Output SIR of `w` in dB given the target and interference components
/// after whitening.
pub fn output_sir_db(target_white: &ComplexDataMatrix, interf_white: &ComplexDataMatrix, w: &[C64]) -> Result<f64> {
    let pt: f64 = project(target_white, w)?.iter().map(C64::norm_sqr).sum();
    let pi: f64 = project(interf_white, w)?.iter().map(C64::norm_sqr).sum();
    if pi == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(pt / pi))
}

/// `SIR_out − SIR_in` in dB.
pub fn sir_improvement(
    target_white: &ComplexDataMatrix,
    interf_white: &ComplexDataMatrix,
    w: &[C64],
    sir_in_db: f64,
) -> Result<f64> {
    Ok(output_sir_db(target_white, interf_white, w)? - sir_in_db)
}

/// Index of the vector whose output `wₖᴴZ` correlates best with `reference`.
pub fn select_target_vector(w: &UnmixingMatrix, z: &ComplexDataMatrix, reference: &[C64]) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, col) in w.columns.iter().enumerate() {
        let y = project(z, col)?;
        let c = complex_correlation(&y, reference).unwrap_or(0.0);
        if c > best.1 {
            best = (k, c);
        }
    }
    Ok(best.0)
}

/// Metrics of one separator run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparationReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub isi: f64,
    pub acc: f64,
    pub sdr_db: Vec<f64>,
    pub matching: Vec<usize>,
    pub converged: bool,
    /// Additional named diagnostics (condition number, s(w), ...).
    pub extra: BTreeMap<String, f64>,
}

impl SeparationReport {
    pub fn sdr_mean(&self) -> f64 {
        if self.sdr_db.is_empty() {
            return f64::NAN;
        }
        self.sdr_db.iter().sum::<f64>() / self.sdr_db.len() as f64
    }

    pub fn sdr_min(&self) -> f64 {
        self.sdr_db.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// ISI, ACC and SDR of an unmixing matrix against known sources and the
/// effective (whitened) mixing matrix.
pub fn evaluate(
    truth: &SourceSet,
    w: &UnmixingMatrix,
    z: &ComplexDataMatrix,
    a_eff: &CMatrix,
    seed: u64,
) -> Result<SeparationReport> {
    let est = crate::separators::unmix(w, z)?;
    let (acc_value, matching) = acc(truth, &est)?;
    let sdr_db = sdr(truth, &est, &matching)?;
    let isi_value = isi(w, a_eff).unwrap_or(f64::INFINITY);
    Ok(SeparationReport {
        algorithm: w.algorithm,
        seed,
        isi: isi_value,
        acc: acc_value,
        sdr_db,
        matching,
        converged: w.converged(),
        extra: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, seeded};
    use crate::signal::Signal;

    fn sources(n: usize, l: usize, seed: u64) -> SourceSet {
        let mut rng = seeded(seed);
        SourceSet::unlabeled(
            (0..n)
                .map(|_| Signal::new((0..l).map(|_| complex_normal(&mut rng)).collect(), 1.0).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn isi_hand_values() {
        assert_eq!(isi_matrix(&CMatrix::identity(3)).unwrap(), 0.0);
        let ones = CMatrix::from_real(2, 2, &[1.0; 4]).unwrap();
        assert_eq!(isi_matrix(&ones).unwrap(), 4.0);
        let scaled = CMatrix::from_vec(
            2,
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, 3.0), C64::new(-0.5, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(isi_matrix(&scaled).unwrap(), 0.0);
        assert!(isi_matrix(&CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn acc_recovers_permutation() {
        let s = sources(3, 500, 1);
        assert_eq!(acc(&s, &s).unwrap(), (1.0, vec![0, 1, 2]));
        let perm = SourceSet::unlabeled(vec![
            Signal::new(s.signals()[2].samples().iter().map(|x| -x).collect(), 1.0).unwrap(),
            s.signals()[0].clone(),
            s.signals()[1].clone(),
        ])
        .unwrap();
        let (v, m) = acc(&s, &perm).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(m, vec![1, 2, 0]);
    }

    #[test]
    fn sdr_scaling_and_equal_power_noise() {
        let s = sources(2, 4000, 2);
        let est: Vec<C64> = s.signals()[0].samples().iter().map(|x| x * 2.5).collect();
        let p = sdr_parts(&s, 0, &est).unwrap();
        assert!(p.sdr_db() > 250.0);
        // noise orthogonal to both sources with the target's energy
        let mut rng = seeded(3);
        let mut noise: Vec<C64> = (0..4000).map(|_| complex_normal(&mut rng)).collect();
        for src in s.signals() {
            let x = src.samples();
            let c = inner(x, &noise) / inner(x, x).re;
            noise.iter_mut().zip(x).for_each(|(n, v)| *n -= v * c);
        }
        let x0 = s.signals()[0].samples();
        let scale = libm::sqrt(inner(x0, x0).re / inner(&noise, &noise).re);
        let est: Vec<C64> = x0.iter().zip(&noise).map(|(a, b)| a + b * scale).collect();
        let p = sdr_parts(&s, 0, &est).unwrap();
        assert!(p.sdr_db().abs() < 0.1);
        assert!((p.estimate - p.target - p.interference - p.artifact).abs() < 1e-8 * p.estimate);
    }

    #[test]
    fn greedy_equals_optimal_on_clear_matches() {
        let cc = vec![vec![0.1, 0.9, 0.2], vec![0.95, 0.1, 0.3], vec![0.2, 0.3, 0.8]];
        assert_eq!(greedy_matching(&cc), optimal_matching(&cc));
    }
}
