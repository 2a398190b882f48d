//! PKA and the baseline separators.
//!
//! Every separator returns an [`UnmixingMatrix`] whose columns `wₖ` recover
//! sources as `wₖᴴZ` from whitened data `Z`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{fix_phase, hermitian_eigen, inner, norm, normalize, phase_aligned_distance, CMatrix};
use crate::rng::{random_unit, seeded};
use crate::signal::{ComplexDataMatrix, SourceSet};
use crate::tensor::{coskewness_tensor, cumulant_matrices, cumulant_matrices_from_tensor, fourth_moment_tensor, EigenPair, FourthOrderTensor, ThirdOrderTensor};

/// Relative residual `‖Cw³ − λw‖ / ‖Cw³‖` below which an extraction counts
/// as an eigenvector.
pub const ACCEPT_RESIDUAL: f64 = 1e-6;
/// Two unit vectors with `|⟨p, w⟩|` at or above this are the same direction.
pub const DUPLICATE_COSINE: f64 = 1.0 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Direction {
    Ascent,
    Descent,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Ascent => 1.0,
            Direction::Descent => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Algorithm {
    Pka,
    Deflation,
    CFastIca,
    Psa,
    Jade,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Pka, Algorithm::Deflation, Algorithm::CFastIca, Algorithm::Psa, Algorithm::Jade];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pka => "pka",
            Algorithm::Deflation => "deflation",
            Algorithm::CFastIca => "cfastica",
            Algorithm::Psa => "psa",
            Algorithm::Jade => "jade",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PkaConfig {
    pub alpha: f64,
    pub direction: Direction,
    /// Threshold on the phase-aligned step length.
    pub tol: f64,
    pub max_iter: usize,
    pub max_restarts: usize,
    pub det_floor: f64,
    /// Iterations without a new best projected-gradient norm after which a
    /// run is abandoned and restarted.
    pub stall_window: usize,
    pub seed: u64,
}

impl Default for PkaConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-2,
            direction: Direction::Ascent,
            tol: 1e-9,
            max_iter: 20_000,
            max_restarts: 20,
            det_floor: 1e-12,
            stall_window: 2_000,
            seed: 0,
        }
    }
}

impl PkaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.tol > 0.0) || !(self.det_floor > 0.0) {
            return Err(invalid("alpha, tol and det_floor must be positive"));
        }
        Ok(())
    }
}

/// Per-vector convergence record.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VectorDiagnostics {
    pub iterations: usize,
    pub restarts: usize,
    /// `‖Cw³ − λw‖` for tensor methods, the last step length otherwise.
    pub residual: f64,
    pub lambda: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnmixingMatrix {
    pub columns: Vec<Vec<C64>>,
    pub algorithm: Algorithm,
    pub diagnostics: Vec<VectorDiagnostics>,
    /// Objective value per sweep where the method has one (JADE's
    /// off-diagonal energy).
    pub objective_trace: Vec<f64>,
}

impl UnmixingMatrix {
    /// `dim × k` matrix with the vectors as columns.
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.columns).expect("columns share a length")
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.iter().all(|d| d.converged)
    }

    /// `|det(WᴴW)|`.
    pub fn volume(&self) -> f64 {
        gram_volume(&self.columns)
    }
}

fn gram(columns: &[Vec<C64>]) -> CMatrix {
    let k = columns.len();
    CMatrix::from_fn(k, k, |i, j| inner(&columns[i], &columns[j]))
}

/// `|det(WᴴW)|` for the given columns.
pub fn gram_volume(columns: &[Vec<C64>]) -> f64 {
    if columns.is_empty() {
        return 1.0;
    }
    gram(columns).determinant().map(|d| d.norm()).unwrap_or(0.0)
}

/// Conditioning state of the volume constraint: the Gram matrix of the
/// previously accepted vectors, extended by one row/column per step.
struct Volume<'a> {
    prev: &'a [Vec<C64>],
    base: CMatrix,
}

impl<'a> Volume<'a> {
    fn new(prev: &'a [Vec<C64>]) -> Self {
        Self { prev, base: gram(prev) }
    }

    fn det_with(&self, w: &[C64]) -> f64 {
        let k = self.prev.len();
        if k == 0 {
            return inner(w, w).re;
        }
        let mut r = CMatrix::zeros(k + 1, k + 1);
        for i in 0..k {
            for j in 0..k {
                r[(i, j)] = self.base[(i, j)];
            }
            let c = inner(&self.prev[i], w);
            r[(i, k)] = c;
            r[(k, i)] = c.conj();
        }
        r[(k, k)] = inner(w, w);
        r.determinant().map(|d| d.norm()).unwrap_or(0.0)
    }
}

/// One Riemannian update `w ± α(I − wwᴴ)Cw³ / max(|det R|, floor)`,
/// renormalised. `prev` holds the previously accepted vectors.
pub fn pka_step(t: &FourthOrderTensor, prev: &[Vec<C64>], w: &[C64], cfg: &PkaConfig) -> Vec<C64> {
    let vol = Volume::new(prev);
    step_with(t, &vol, w, cfg).0
}

/// Returns the new iterate and the projected-gradient norm at `w`.
fn step_with(t: &FourthOrderTensor, vol: &Volume<'_>, w: &[C64], cfg: &PkaConfig) -> (Vec<C64>, f64, f64) {
    let g = t.cw3_unchecked(w);
    let ip = inner(w, &g);
    let rg: Vec<C64> = g.iter().zip(w).map(|(gi, wi)| gi - wi * ip).collect();
    let det = vol.det_with(w).max(cfg.det_floor);
    let scale = cfg.direction.sign() * cfg.alpha / det;
    let mut next: Vec<C64> = w.iter().zip(&rg).map(|(wi, ri)| wi + ri * scale).collect();
    normalize(&mut next);
    (next, norm(&rg), norm(&g))
}

/// Plain fixed-point update `P·Cw³ / ‖P·Cw³‖` with `P` projecting out
/// `prev`.
pub fn fixed_point_step(t: &FourthOrderTensor, prev: &[Vec<C64>], w: &[C64]) -> Vec<C64> {
    let mut g = t.cw3_unchecked(w);
    project_out(&mut g, prev);
    normalize(&mut g);
    g
}

fn project_out(g: &mut [C64], prev: &[Vec<C64>]) {
    for p in prev {
        let c = inner(p, g);
        g.iter_mut().zip(p).for_each(|(gi, pi)| *gi -= pi * c);
    }
}

/// Outcome of one [`pka_extract`] call.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub pair: EigenPair,
    pub iterations: usize,
    pub restarts: usize,
}

struct Candidate {
    w: Vec<C64>,
    iterations: usize,
    stalled: bool,
}

fn run_from(t: &FourthOrderTensor, vol: &Volume<'_>, mut w: Vec<C64>, cfg: &PkaConfig) -> Candidate {
    let mut best_grad = f64::INFINITY;
    let mut since_best = 0usize;
    for it in 0..cfg.max_iter {
        let (next, grad, gnorm) = step_with(t, vol, &w, cfg);
        let rel = if gnorm > 0.0 { grad / gnorm } else { 0.0 };
        if rel < best_grad * 0.999 {
            best_grad = rel;
            since_best = 0;
        } else {
            since_best += 1;
        }
        let step = phase_aligned_distance(&w, &next);
        w = next;
        if !step.is_finite() {
            return Candidate { w, iterations: it + 1, stalled: true };
        }
        if step < cfg.tol {
            return Candidate { w, iterations: it + 1, stalled: false };
        }
        if cfg.stall_window > 0 && since_best >= cfg.stall_window {
            return Candidate { w, iterations: it + 1, stalled: true };
        }
    }
    Candidate { w, iterations: cfg.max_iter, stalled: false }
}

/// Extracts one eigenvector conditioned on `prev` under the non-zero volume
/// constraint, restarting from fresh random vectors when a run ends off an
/// eigenvector, on a duplicate, or below the volume floor.
pub fn pka_extract<R: Rng + ?Sized>(
    t: &FourthOrderTensor,
    prev: &[Vec<C64>],
    cfg: &PkaConfig,
    rng: &mut R,
) -> Result<Extraction> {
    cfg.validate()?;
    let n = t.dim();
    if prev.len() >= n {
        return Err(invalid("already extracted as many vectors as the tensor dimension"));
    }
    if let Some(p) = prev.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: p.len() });
    }
    let vol = Volume::new(prev);
    let real = t.is_real();
    let mut best: Option<(f64, EigenPair)> = None;
    let mut iterations = 0;
    for restart in 0..=cfg.max_restarts {
        let init = random_unit(rng, n, real);
        let cand = run_from(t, &vol, init, cfg);
        iterations += cand.iterations;
        let mut w = cand.w;
        fix_phase(&mut w);
        let (lambda, residual) = t.eigen_residual(&w);
        let gnorm = norm(&t.cw3_unchecked(&w));
        let rel = if gnorm > 0.0 { residual / gnorm } else { f64::INFINITY };
        let dup = prev.iter().any(|p| inner(p, &w).norm() >= DUPLICATE_COSINE);
        let volume_ok = vol.det_with(&w) >= cfg.det_floor;
        let pair = EigenPair { w, lambda, residual };
        if !cand.stalled && rel <= ACCEPT_RESIDUAL && !dup && volume_ok {
            return Ok(Extraction { pair, iterations, restarts: restart });
        }
        let score = if dup || !volume_ok { rel + 1.0 } else { rel };
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, pair));
        }
    }
    let (_, best) = best.expect("at least one run");
    let residual = best.residual;
    Err(Error::RestartsExhausted { best, residual })
}

/// Sequential PKA extraction of `n_sources` vectors; fails if any extraction
/// exhausts its restarts.
pub fn pka(t: &FourthOrderTensor, n_sources: usize, cfg: &PkaConfig) -> Result<UnmixingMatrix> {
    pka_impl(t, n_sources, cfg, true)
}

/// Like [`pka`], but keeps the best candidate of an exhausted extraction
/// (flagged as not converged) and carries on.
pub fn pka_best_effort(t: &FourthOrderTensor, n_sources: usize, cfg: &PkaConfig) -> Result<UnmixingMatrix> {
    pka_impl(t, n_sources, cfg, false)
}

fn pka_impl(t: &FourthOrderTensor, n_sources: usize, cfg: &PkaConfig, strict: bool) -> Result<UnmixingMatrix> {
    if n_sources == 0 || n_sources > t.dim() {
        return Err(invalid("n_sources must lie in 1..=dim"));
    }
    let mut rng = seeded(cfg.seed);
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n_sources);
    let mut diagnostics = Vec::with_capacity(n_sources);
    for _ in 0..n_sources {
        match pka_extract(t, &columns, cfg, &mut rng) {
            Ok(e) => {
                diagnostics.push(VectorDiagnostics {
                    iterations: e.iterations,
                    restarts: e.restarts,
                    residual: e.pair.residual,
                    lambda: e.pair.lambda,
                    converged: true,
                });
                columns.push(e.pair.w);
            }
            Err(Error::RestartsExhausted { best, residual }) if !strict => {
                diagnostics.push(VectorDiagnostics {
                    iterations: 0,
                    restarts: cfg.max_restarts,
                    residual,
                    lambda: best.lambda,
                    converged: false,
                });
                columns.push(best.w);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(UnmixingMatrix { columns, algorithm: Algorithm::Pka, diagnostics, objective_trace: Vec::new() })
}

/// Settings shared by the deflation-type baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 5_000, seed: 0 }
    }
}

fn deflate_with(
    t: &FourthOrderTensor,
    n_sources: usize,
    cfg: &FixedPointConfig,
    shift: f64,
    algorithm: Algorithm,
) -> Result<UnmixingMatrix> {
    if n_sources == 0 || n_sources > t.dim() {
        return Err(invalid("n_sources must lie in 1..=dim"));
    }
    let n = t.dim();
    let real = t.is_real();
    let mut rng = seeded(cfg.seed);
    let mut columns: Vec<Vec<C64>> = Vec::new();
    let mut diagnostics = Vec::new();
    for _ in 0..n_sources {
        let mut w = random_unit(&mut rng, n, real);
        project_out(&mut w, &columns);
        normalize(&mut w);
        let mut converged = false;
        let mut iterations = cfg.max_iter;
        for it in 0..cfg.max_iter {
            let mut g = t.cw3_unchecked(&w);
            g.iter_mut().zip(&w).for_each(|(gi, wi)| *gi -= wi * shift);
            project_out(&mut g, &columns);
            if normalize(&mut g) == 0.0 {
                break;
            }
            let step = phase_aligned_distance(&w, &g);
            w = g;
            if step < cfg.tol {
                converged = true;
                iterations = it + 1;
                break;
            }
        }
        fix_phase(&mut w);
        let (lambda, residual) = t.eigen_residual(&w);
        diagnostics.push(VectorDiagnostics { iterations, restarts: 0, residual, lambda, converged });
        columns.push(w);
    }
    Ok(UnmixingMatrix { columns, algorithm, diagnostics, objective_trace: Vec::new() })
}

/// Orthogonal-deflation fixed point `wₖ ← P·Cwₖ³ / ‖·‖`.
pub fn fixed_point_deflation(t: &FourthOrderTensor, n_sources: usize, cfg: &FixedPointConfig) -> Result<UnmixingMatrix> {
    deflate_with(t, n_sources, cfg, 0.0, Algorithm::Deflation)
}

/// Kurtosis FastICA, deflationary, evaluated through the tensor kernel:
/// `w ← Cw³ − 2w` for complex data and `w ← Cw³ − 3w` for real data (the
/// Gaussian fourth moment in each case).
pub fn cfastica_tensor(t: &FourthOrderTensor, n_sources: usize, cfg: &FixedPointConfig) -> Result<UnmixingMatrix> {
    let shift = if t.is_real() { 3.0 } else { 2.0 };
    deflate_with(t, n_sources, cfg, shift, Algorithm::CFastIca)
}

/// Kurtosis FastICA on whitened data.
pub fn cfastica(z: &ComplexDataMatrix, n_sources: usize, cfg: &FixedPointConfig) -> Result<UnmixingMatrix> {
    cfastica_tensor(&fourth_moment_tensor(z)?, n_sources, cfg)
}

/// PSA: `w ← S ×₂ w ×₃ w`, normalised, with orthogonal deflation.
pub fn psa(t3: &ThirdOrderTensor, n_sources: usize, cfg: &FixedPointConfig) -> Result<UnmixingMatrix> {
    let n = t3.dim();
    if n_sources == 0 || n_sources > n {
        return Err(invalid("n_sources must lie in 1..=dim"));
    }
    let mut rng = seeded(cfg.seed);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut diagnostics = Vec::new();
    let project = |g: &mut Vec<f64>, cols: &[Vec<f64>]| {
        for p in cols {
            let c: f64 = p.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            g.iter_mut().zip(p).for_each(|(gi, pi)| *gi -= pi * c);
        }
    };
    let unit = |g: &mut Vec<f64>| {
        let nn = libm::sqrt(g.iter().map(|x| x * x).sum::<f64>());
        if nn > 0.0 {
            g.iter_mut().for_each(|x| *x /= nn);
        }
        nn
    };
    for _ in 0..n_sources {
        let mut w: Vec<f64> = random_unit(&mut rng, n, true).iter().map(|z| z.re).collect();
        project(&mut w, &columns);
        unit(&mut w);
        let mut converged = false;
        let mut iterations = cfg.max_iter;
        let mut last_step = f64::INFINITY;
        for it in 0..cfg.max_iter {
            let mut g = t3.contract2(&w);
            project(&mut g, &columns);
            if unit(&mut g) < 1e-300 {
                break;
            }
            let plus = libm::sqrt(g.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
            let minus = libm::sqrt(g.iter().zip(&w).map(|(a, b)| (a + b) * (a + b)).sum::<f64>());
            last_step = plus.min(minus);
            w = g;
            if last_step < cfg.tol {
                converged = true;
                iterations = it + 1;
                break;
            }
        }
        diagnostics.push(VectorDiagnostics {
            iterations,
            restarts: 0,
            residual: last_step,
            lambda: t3.skewness(&w),
            converged,
        });
        columns.push(w);
    }
    let columns = columns
        .into_iter()
        .map(|c| {
            let mut v: Vec<C64> = c.into_iter().map(|x| C64::new(x, 0.0)).collect();
            fix_phase(&mut v);
            v
        })
        .collect();
    Ok(UnmixingMatrix { columns, algorithm: Algorithm::Psa, diagnostics, objective_trace: Vec::new() })
}

/// PSA on real whitened data.
pub fn psa_data(z: &ComplexDataMatrix, n_sources: usize, cfg: &FixedPointConfig) -> Result<UnmixingMatrix> {
    psa(&coskewness_tensor(z)?, n_sources, cfg)
}

/// Sum of squared off-diagonal magnitudes over all matrices.
pub fn off_diagonal_energy(ms: &[CMatrix]) -> f64 {
    ms.iter()
        .map(|m| {
            let mut e = 0.0;
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    if i != j {
                        e += m[(i, j)].norm_sqr();
                    }
                }
            }
            e
        })
        .sum()
}

/// JADE: joint diagonalisation of all `N²` cumulant matrices by complex
/// Givens sweeps, stopping when every rotation's `|s|` is below `1e-8` or
/// after 100 sweeps. Columns of the returned matrix are the columns of the
/// unitary diagonaliser.
pub fn jade(z: &ComplexDataMatrix, n_sources: usize) -> Result<UnmixingMatrix> {
    let n = z.channels();
    if n_sources == 0 || n_sources > n {
        return Err(invalid("n_sources must lie in 1..=dim"));
    }
    jade_from_matrices(cumulant_matrices(z)?, n_sources)
}

/// JADE on a moment tensor of white, circular data (see
/// [`cumulant_matrices_from_tensor`]).
pub fn jade_tensor(t: &FourthOrderTensor, n_sources: usize) -> Result<UnmixingMatrix> {
    if n_sources == 0 || n_sources > t.dim() {
        return Err(invalid("n_sources must lie in 1..=dim"));
    }
    jade_from_matrices(cumulant_matrices_from_tensor(t), n_sources)
}

fn jade_from_matrices(mut ms: Vec<CMatrix>, n_sources: usize) -> Result<UnmixingMatrix> {
    let n = ms[0].rows();
    let (v, trace, converged, sweeps) = joint_diagonalize(&mut ms, 1e-8, 100)?;
    // order columns by decreasing |diagonal energy| for a stable output
    let mut energy: Vec<(usize, f64)> =
        (0..n).map(|i| (i, ms.iter().map(|m| m[(i, i)].norm_sqr()).sum::<f64>())).collect();
    energy.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut columns = Vec::with_capacity(n_sources);
    let mut diagnostics = Vec::with_capacity(n_sources);
    for &(i, e) in energy.iter().take(n_sources) {
        let mut c = v.column(i);
        fix_phase(&mut c);
        columns.push(c);
        diagnostics.push(VectorDiagnostics {
            iterations: sweeps,
            restarts: 0,
            residual: *trace.last().unwrap_or(&0.0),
            lambda: libm::sqrt(e),
            converged,
        });
    }
    Ok(UnmixingMatrix { columns, algorithm: Algorithm::Jade, diagnostics, objective_trace: trace })
}

/// Jointly diagonalises `ms` in place (`M ← Vᴴ M V`) and returns `V`, the
/// off-diagonal energy before the first and after every sweep, a
/// convergence flag and the sweep count.
pub fn joint_diagonalize(ms: &mut [CMatrix], threshold: f64, max_sweeps: usize) -> Result<(CMatrix, Vec<f64>, bool, usize)> {
    let n = ms.first().map_or(0, CMatrix::rows);
    let mut v = CMatrix::identity(n);
    let mut trace = vec![off_diagonal_energy(ms)];
    let mut converged = false;
    let mut sweeps = 0;
    let imag = C64::new(0.0, 1.0);
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                // h_k = [M_pp − M_qq, M_pq + M_qp, i(M_qp − M_pq)]
                let mut gg = [[0.0f64; 3]; 3];
                for m in ms.iter() {
                    let h = [
                        m[(p, p)] - m[(q, q)],
                        m[(p, q)] + m[(q, p)],
                        imag * (m[(q, p)] - m[(p, q)]),
                    ];
                    for (a, ha) in h.iter().enumerate() {
                        for (b, hb) in h.iter().enumerate() {
                            gg[a][b] += (ha * hb.conj()).re;
                        }
                    }
                }
                let g = CMatrix::from_fn(3, 3, |a, b| C64::new(gg[a][b], 0.0));
                let eig = hermitian_eigen(&g)?;
                let mut x = eig.vectors.column(0).iter().map(|z| z.re).collect::<Vec<_>>();
                if x[0] < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                let c = libm::sqrt(0.5 + x[0] / 2.0);
                if c == 0.0 {
                    continue;
                }
                let s = C64::new(x[1], -x[2]) * (0.5 / c);
                if s.norm() <= threshold {
                    continue;
                }
                rotated = true;
                // G = [[c, −s*], [s, c]]; M ← Gᴴ M G on rows/columns p, q
                let (cc, sc) = (C64::new(c, 0.0), s.conj());
                for m in ms.iter_mut() {
                    for j in 0..n {
                        let (mp, mq) = (m[(p, j)], m[(q, j)]);
                        m[(p, j)] = cc * mp + sc * mq;
                        m[(q, j)] = -s * mp + cc * mq;
                    }
                    for i in 0..n {
                        let (mp, mq) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = cc * mp + s * mq;
                        m[(i, q)] = -sc * mp + cc * mq;
                    }
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cc * vp + s * vq;
                    v[(i, q)] = -sc * vp + cc * vq;
                }
            }
        }
        trace.push(off_diagonal_energy(ms));
        if !rotated {
            converged = true;
            break;
        }
    }
    Ok((v, trace, converged, sweeps))
}

/// Row `k` of the output is `wₖᴴZ`.
pub fn unmix_data(w: &UnmixingMatrix, z: &ComplexDataMatrix) -> Result<ComplexDataMatrix> {
    if w.dim() != z.channels() {
        return Err(Error::DimensionMismatch { expected: z.channels(), actual: w.dim() });
    }
    z.transform(&w.matrix().adjoint())
}

/// Estimated sources, labelled `est0`, `est1`, ...
pub fn unmix(w: &UnmixingMatrix, z: &ComplexDataMatrix) -> Result<SourceSet> {
    let y = unmix_data(w, z)?;
    let labels: Vec<String> = (0..y.channels()).map(|i| alloc::format!("est{i}")).collect();
    SourceSet::from_data(&y, labels)
}

/// Settings for [`separate`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparatorConfig {
    pub pka: PkaConfig,
    pub fixed_point: FixedPointConfig,
}

/// Runs one algorithm on whitened data. PSA requires real data; PKA keeps
/// the best candidate of an exhausted extraction rather than failing.
pub fn separate(
    algorithm: Algorithm,
    z: &ComplexDataMatrix,
    tensor: Option<&FourthOrderTensor>,
    n_sources: usize,
    cfg: &SeparatorConfig,
) -> Result<UnmixingMatrix> {
    let owned;
    let t = match (algorithm, tensor) {
        (Algorithm::Psa | Algorithm::Jade, _) => None,
        (_, Some(t)) => Some(t),
        (_, None) => {
            owned = fourth_moment_tensor(z)?;
            Some(&owned)
        }
    };
    match algorithm {
        Algorithm::Pka => pka_best_effort(t.expect("tensor"), n_sources, &cfg.pka),
        Algorithm::Deflation => fixed_point_deflation(t.expect("tensor"), n_sources, &cfg.fixed_point),
        Algorithm::CFastIca => cfastica_tensor(t.expect("tensor"), n_sources, &cfg.fixed_point),
        Algorithm::Psa => psa_data(z, n_sources, &cfg.fixed_point),
        Algorithm::Jade => jade(z, n_sources),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::complex_normal;
    use crate::tensor::random_statistical_tensor;
    use crate::whitening::whiten;

    fn qpsk(n: usize, l: usize, seed: u64) -> (ComplexDataMatrix, CMatrix) {
        let mut rng = seeded(seed);
        let s = CMatrix::from_fn(n, l, |_, _| {
            let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
            C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
        });
        let a = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng));
        (ComplexDataMatrix::new(a.matmul(&s).unwrap(), 1.0).unwrap(), a)
    }

    fn isi_of(w: &UnmixingMatrix, v: &CMatrix, a: &CMatrix) -> f64 {
        let p = w.matrix().adjoint().matmul(&v.matmul(a).unwrap()).unwrap();
        let n = p.rows();
        let mag = |i: usize, j: usize| p[(i, j)].norm_sqr();
        let mut s = 0.0;
        for i in 0..n {
            let m = (0..n).map(|j| mag(i, j)).fold(0.0, f64::max);
            s += (0..n).map(|j| mag(i, j)).sum::<f64>() / m - 1.0;
        }
        for j in 0..n {
            let m = (0..n).map(|i| mag(i, j)).fold(0.0, f64::max);
            s += (0..n).map(|i| mag(i, j)).sum::<f64>() / m - 1.0;
        }
        s
    }

    #[test]
    fn scalar_tensor_extraction() {
        let t = FourthOrderTensor::from_entries(1, vec![C64::new(1.7, 0.0)]).unwrap();
        let w = pka(&t, 1, &PkaConfig::default()).unwrap();
        assert_eq!(w.columns[0], vec![C64::new(1.0, 0.0)]);
        assert!((w.diagnostics[0].lambda - 1.7).abs() < 1e-15);
    }

    #[test]
    fn pka_finds_three_distinct_eigenvectors() {
        let t = random_statistical_tensor(3, 4, 10_000).unwrap();
        let w = pka(&t, 3, &PkaConfig { seed: 1, ..PkaConfig::default() }).unwrap();
        for c in &w.columns {
            let (_, r) = t.eigen_residual(c);
            assert!(r <= 1e-6 * norm(&t.cw3(c).unwrap()));
        }
        for i in 0..3 {
            for j in 0..i {
                assert!(inner(&w.columns[i], &w.columns[j]).norm() < DUPLICATE_COSINE);
            }
        }
        assert!(w.volume() >= 1e-12);
    }

    #[test]
    fn pka_is_deterministic() {
        let t = random_statistical_tensor(3, 2, 5_000).unwrap();
        let cfg = PkaConfig { seed: 9, ..PkaConfig::default() };
        assert_eq!(pka(&t, 3, &cfg).unwrap(), pka(&t, 3, &cfg).unwrap());
    }

    #[test]
    fn jade_and_fastica_separate_orthogonal_qpsk() {
        let (x, a) = qpsk(3, 5_000, 3);
        let white = whiten(&x, None).unwrap();
        let j = jade(&white.z, 3).unwrap();
        assert!(isi_of(&j, &white.v, &a) < 0.05, "{}", isi_of(&j, &white.v, &a));
        assert!(j.objective_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let gram = j.matrix().adjoint().matmul(&j.matrix()).unwrap();
        assert!(gram.max_abs_diff(&CMatrix::identity(3)) < 1e-8);
        let f = cfastica(&white.z, 3, &FixedPointConfig::default()).unwrap();
        assert!(isi_of(&f, &white.v, &a) < 0.1);
        // QPSK is circular and the data white, so the tensor-only variant agrees
        let jt = jade_tensor(&fourth_moment_tensor(&white.z).unwrap(), 3).unwrap();
        assert!(isi_of(&jt, &white.v, &a) < 0.05);
    }

    #[test]
    fn first_deflation_vector_is_an_eigenvector() {
        let t = random_statistical_tensor(3, 5, 5_000).unwrap();
        let w = fixed_point_deflation(&t, 1, &FixedPointConfig::default()).unwrap();
        assert!(w.diagnostics[0].converged);
        assert!(w.diagnostics[0].residual < 1e-8);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::parse(a.name()), Some(a));
        }
        assert_eq!(Algorithm::parse("nope"), None);
    }
}
