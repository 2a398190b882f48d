//! Signals, source sets, mixing and receiver noise.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::rng::{complex_normal, normal, seeded};

/// One sampled channel. Real signals are stored with a zero imaginary part.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Signal {
    samples: Vec<C64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<C64>, sample_rate: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid(format!("signal needs at least 2 samples, got {}", samples.len())));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("signal samples"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn from_real(samples: &[f64], sample_rate: f64) -> Result<Self> {
        Self::new(samples.iter().map(|&x| C64::new(x, 0.0)).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn mean(&self) -> C64 {
        self.samples.iter().sum::<C64>() / self.samples.len() as f64
    }

    /// Mean of |x|².
    pub fn power(&self) -> f64 {
        self.samples.iter().map(C64::norm_sqr).sum::<f64>() / self.samples.len() as f64
    }

    /// Zero mean, unit variance copy.
    pub fn standardized(&self) -> Result<Self> {
        let mu = self.mean();
        let centered: Vec<C64> = self.samples.iter().map(|&x| x - mu).collect();
        let var = centered.iter().map(C64::norm_sqr).sum::<f64>() / centered.len() as f64;
        if !(var > 1e-300) {
            return Err(Error::ZeroPower("signal".into()));
        }
        let inv = 1.0 / libm::sqrt(var);
        Ok(Self { samples: centered.into_iter().map(|x| x * inv).collect(), sample_rate: self.sample_rate })
    }

    /// Linear-interpolation resampling to `target_rate`.
    pub fn resampled(&self, target_rate: f64) -> Result<Self> {
        if !(target_rate > 0.0 && target_rate.is_finite()) {
            return Err(invalid(format!("target rate must be positive, got {target_rate}")));
        }
        if target_rate == self.sample_rate {
            return Ok(self.clone());
        }
        let duration = self.samples.len() as f64 / self.sample_rate;
        let out_len = libm::round(duration * target_rate) as usize;
        let last = self.samples.len() - 1;
        let samples = (0..out_len)
            .map(|k| {
                let pos = k as f64 * self.sample_rate / target_rate;
                let i = (libm::floor(pos) as usize).min(last);
                let frac = pos - i as f64;
                if i == last {
                    self.samples[last]
                } else {
                    self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
                }
            })
            .collect();
        Self::new(samples, target_rate)
    }
}

/// Ground-truth sources sharing one length and sample rate.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceSet {
    signals: Vec<Signal>,
    labels: Vec<String>,
}

impl SourceSet {
    pub fn new(signals: Vec<Signal>, labels: Vec<String>) -> Result<Self> {
        if signals.len() < 2 {
            return Err(invalid(format!("a source set needs at least 2 signals, got {}", signals.len())));
        }
        if labels.len() != signals.len() {
            return Err(Error::DimensionMismatch { expected: signals.len(), actual: labels.len() });
        }
        let (len, rate) = (signals[0].len(), signals[0].sample_rate());
        for s in &signals[1..] {
            if s.len() != len {
                return Err(Error::DimensionMismatch { expected: len, actual: s.len() });
            }
            if s.sample_rate() != rate {
                return Err(invalid("signals have different sample rates"));
            }
        }
        Ok(Self { signals, labels })
    }

    /// Labels default to `s0`, `s1`, ...
    pub fn unlabeled(signals: Vec<Signal>) -> Result<Self> {
        let labels = (0..signals.len()).map(|i| format!("s{i}")).collect();
        Self::new(signals, labels)
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.signals.len()
    }

    pub fn len(&self) -> usize {
        self.signals[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate(&self) -> f64 {
        self.signals[0].sample_rate()
    }

    pub fn is_real(&self) -> bool {
        self.signals.iter().all(Signal::is_real)
    }

    pub fn standardized(&self) -> Result<Self> {
        let signals = self.signals.iter().map(Signal::standardized).collect::<Result<_>>()?;
        Ok(Self { signals, labels: self.labels.clone() })
    }

    /// Stacks the signals as the rows of a data matrix.
    pub fn to_data(&self) -> Result<ComplexDataMatrix> {
        let n = self.count();
        let l = self.len();
        let m = CMatrix::from_fn(n, l, |i, j| self.signals[i].samples()[j]);
        ComplexDataMatrix::new(m, self.sample_rate())
    }

    pub fn from_data(x: &ComplexDataMatrix, labels: Vec<String>) -> Result<Self> {
        let signals = (0..x.channels())
            .map(|i| Signal::new(x.row(i).to_vec(), x.sample_rate()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(signals, labels)
    }
}

/// Square, nonsingular mixing matrix.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixingMatrix {
    a: CMatrix,
}

fn is_nonsingular(a: &CMatrix) -> Result<bool> {
    let det = a.determinant()?.norm();
    let scale = libm::pow(a.frobenius_norm(), a.rows() as f64);
    Ok(det > 1e-10 * scale)
}

impl MixingMatrix {
    pub fn new(a: CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), actual: a.cols() });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("mixing matrix"));
        }
        if !is_nonsingular(&a)? {
            return Err(Error::SingularMatrix { attempts: 1 });
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Ratio of largest to smallest singular value.
    pub fn condition_number(&self) -> Result<f64> {
        let eig = hermitian_eigen(&self.a.adjoint().matmul(&self.a)?)?;
        let hi = eig.values.first().copied().unwrap_or(0.0);
        let lo = eig.values.last().copied().unwrap_or(0.0);
        Ok(if lo > 0.0 { libm::sqrt(hi / lo) } else { f64::INFINITY })
    }
}

/// N×L multichannel samples: rows are channels, columns time.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexDataMatrix {
    data: CMatrix,
    sample_rate: f64,
}

impl ComplexDataMatrix {
    pub fn new(data: CMatrix, sample_rate: f64) -> Result<Self> {
        if data.rows() == 0 || data.rows() > data.cols() {
            return Err(invalid(format!(
                "data matrix must have 1 <= N <= L, got {}x{}",
                data.rows(),
                data.cols()
            )));
        }
        if !data.is_finite() {
            return Err(Error::NonFinite("data matrix"));
        }
        if !(sample_rate > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        Ok(Self { data, sample_rate })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn row(&self, i: usize) -> &[C64] {
        self.data.row(i)
    }

    pub fn is_real(&self) -> bool {
        self.data.is_real()
    }

    /// Copy with the imaginary part dropped.
    pub fn real_part(&self) -> Self {
        let m = CMatrix::from_fn(self.channels(), self.samples(), |i, j| C64::new(self.data[(i, j)].re, 0.0));
        Self { data: m, sample_rate: self.sample_rate }
    }

    /// Mean of |x|² over all entries.
    pub fn power(&self) -> f64 {
        self.data.as_slice().iter().map(C64::norm_sqr).sum::<f64>() / self.data.as_slice().len() as f64
    }

    /// Applies `m` from the left: `m · X`.
    pub fn transform(&self, m: &CMatrix) -> Result<Self> {
        Self::new(m.matmul(&self.data)?, self.sample_rate)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::new(self.data.add(&other.data)?, self.sample_rate)
    }
}

fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    let l = libm::round(duration * sample_rate);
    if l < 2.0 {
        return Err(invalid("duration yields fewer than 2 samples"));
    }
    Ok(l as usize)
}

fn check_tone(freq: f64, sample_rate: f64, allow_nyquist: bool) -> Result<()> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
    }
    if !(freq > 0.0) {
        return Err(invalid(format!("frequency must be positive, got {freq}")));
    }
    let nyquist = sample_rate / 2.0;
    if freq > nyquist || (freq == nyquist && !allow_nyquist) {
        return Err(Error::Aliasing { freq, sample_rate });
    }
    Ok(())
}

/// `sin(2π f n / fs + phase)` for `n = 0..round(duration·fs)`.
pub fn gen_sine(freq: f64, sample_rate: f64, duration: f64, phase: f64) -> Result<Signal> {
    check_tone(freq, sample_rate, false)?;
    let l = sample_count(sample_rate, duration)?;
    let samples = (0..l)
        .map(|n| C64::new(libm::sin(2.0 * PI * freq * n as f64 / sample_rate + phase), 0.0))
        .collect();
    Signal::new(samples, sample_rate)
}

/// ±1 square wave, +1 on the first half of each period. A square wave at
/// exactly Nyquist is the alternating sequence and is accepted.
pub fn gen_square(freq: f64, sample_rate: f64, duration: f64) -> Result<Signal> {
    check_tone(freq, sample_rate, true)?;
    let l = sample_count(sample_rate, duration)?;
    let samples = (0..l)
        .map(|n| {
            let half_periods = libm::floor(2.0 * freq * n as f64 / sample_rate + 1e-9) as i64;
            C64::new(if half_periods % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .collect();
    Signal::new(samples, sample_rate)
}

/// Gaussian mixing matrix, redrawn (at most 100 times) until nonsingular.
pub fn random_mixing_matrix(n: usize, complex: bool, seed: u64) -> Result<MixingMatrix> {
    if n < 2 {
        return Err(invalid(format!("mixing matrix needs n >= 2, got {n}")));
    }
    let mut rng = seeded(seed);
    const ATTEMPTS: usize = 100;
    for _ in 0..ATTEMPTS {
        let a = CMatrix::from_fn(n, n, |_, _| {
            if complex {
                complex_normal(&mut rng)
            } else {
                C64::new(normal(&mut rng), 0.0)
            }
        });
        if is_nonsingular(&a)? {
            return Ok(MixingMatrix { a });
        }
    }
    Err(Error::SingularMatrix { attempts: ATTEMPTS })
}

/// `X = A·S`.
pub fn mix(sources: &SourceSet, a: &MixingMatrix) -> Result<ComplexDataMatrix> {
    if a.dim() != sources.count() {
        return Err(Error::DimensionMismatch { expected: sources.count(), actual: a.dim() });
    }
    sources.to_data()?.transform(a.matrix())
}

/// Adds white Gaussian noise scaled so that total signal power over total
/// noise power is exactly `10^(snr_db/10)`. `+∞` returns the input.
pub fn add_noise(x: &ComplexDataMatrix, snr_db: f64, complex: bool, seed: u64) -> Result<ComplexDataMatrix> {
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    if !snr_db.is_finite() {
        return Err(invalid(format!("snr must be finite or +inf, got {snr_db}")));
    }
    let noise = white_noise(x.channels(), x.samples(), complex, seed);
    let ps = x.power();
    if !(ps > 0.0) {
        return Err(Error::ZeroPower("mixture".into()));
    }
    let pn = noise.as_slice().iter().map(C64::norm_sqr).sum::<f64>() / noise.as_slice().len() as f64;
    let gain = libm::sqrt(ps / (pn * libm::pow(10.0, snr_db / 10.0)));
    x.add(&ComplexDataMatrix::new(noise.scale(C64::new(gain, 0.0)), x.sample_rate())?)
}

/// Unscaled i.i.d. Gaussian rows (unit variance per entry).
pub fn white_noise(rows: usize, cols: usize, complex: bool, seed: u64) -> CMatrix {
    let mut rng = seeded(seed);
    CMatrix::from_fn(rows, cols, |_, _| {
        if complex {
            complex_normal(&mut rng)
        } else {
            C64::new(normal(&mut rng), 0.0)
        }
    })
}

/// Correlation coefficient matrix (real part of the normalized Hermitian
/// correlation, which is the plain Pearson coefficient for real signals).
pub fn covariance(sources: &SourceSet) -> Result<Vec<Vec<f64>>> {
    let std = sources.standardized()?;
    let n = std.count();
    let l = std.len() as f64;
    let rows: Vec<&[C64]> = std.signals().iter().map(Signal::samples).collect();
    let mut out = alloc::vec![alloc::vec![0.0; n]; n];
    for i in 0..n {
        out[i][i] = 1.0;
        for j in i + 1..n {
            let c: C64 = rows[i].iter().zip(rows[j]).map(|(a, b)| a * b.conj()).sum::<C64>() / l;
            out[i][j] = c.re;
            out[j][i] = c.re;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sine_quarter_period_grid() {
        let s = gen_sine(1.0, 4.0, 1.0, PI / 2.0).unwrap();
        let expect = [1.0, 0.0, -1.0, 0.0];
        for (z, e) in s.samples().iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
        let s = gen_sine(9.0, 1000.0, 0.5, 0.0).unwrap();
        assert_eq!(s.len(), 500);
        assert_eq!(s.samples()[0].re, 0.0);
    }

    #[test]
    fn square_blocks() {
        let s = gen_square(1.0, 2.0, 1.0).unwrap();
        assert_eq!(s.real_part(), vec![1.0, -1.0]);
        let s = gen_square(8.0, 1000.0, 0.5).unwrap();
        let x = s.real_part();
        let mut runs = vec![];
        let mut len = 1;
        for w in x.windows(2) {
            if w[0] == w[1] {
                len += 1;
            } else {
                runs.push(len);
                len = 1;
            }
        }
        assert!(runs.iter().all(|&r| r == 62 || r == 63), "{runs:?}");
    }

    #[test]
    fn aliasing_rejected() {
        assert!(matches!(gen_sine(500.0, 1000.0, 1.0, 0.0), Err(Error::Aliasing { .. })));
        assert!(matches!(gen_square(600.0, 1000.0, 1.0), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn mixing_is_seeded() {
        let a = random_mixing_matrix(3, false, 7).unwrap();
        assert_eq!(a, random_mixing_matrix(3, false, 7).unwrap());
        assert_ne!(a, random_mixing_matrix(3, false, 8).unwrap());
        assert!(random_mixing_matrix(3, true, 7).unwrap().matrix().as_slice().iter().any(|z| z.im != 0.0));
    }

    #[test]
    fn noise_hits_requested_snr() {
        let s = SourceSet::unlabeled(vec![
            gen_sine(13.0, 1000.0, 10.0, 0.0).unwrap(),
            gen_square(7.0, 1000.0, 10.0).unwrap(),
        ])
        .unwrap();
        let x = s.to_data().unwrap();
        let y = add_noise(&x, 10.0, false, 3).unwrap();
        let noise = y.matrix().sub(x.matrix()).unwrap();
        let pn = noise.as_slice().iter().map(C64::norm_sqr).sum::<f64>() / noise.as_slice().len() as f64;
        let ratio_db = 10.0 * libm::log10(x.power() / pn);
        assert!((ratio_db - 10.0).abs() < 1e-9);
        assert_eq!(add_noise(&x, f64::INFINITY, false, 3).unwrap(), x);
    }

    #[test]
    fn resample_keeps_duration() {
        let s = gen_sine(5.0, 1000.0, 1.0, 0.0).unwrap();
        let r = s.resampled(800.0).unwrap();
        assert_eq!(r.len(), 800);
        assert!((r.samples()[100].re - libm::sin(2.0 * PI * 5.0 * 100.0 / 800.0)).abs() < 1e-3);
    }
}
