//! Uniform linear array scenes: LFM target plus comb-spectrum or
//! interrupted-sampling repeater jamming, with per-component ground truth.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::{complex_normal, seeded};
use crate::signal::{ComplexDataMatrix, Signal};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UlaConfig {
    pub n_elements: usize,
    pub spacing_over_lambda: f64,
}

impl Default for UlaConfig {
    fn default() -> Self {
        Self { n_elements: 4, spacing_over_lambda: 0.5 }
    }
}

impl UlaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return Err(invalid("an array needs at least 2 elements"));
        }
        if !(self.spacing_over_lambda > 0.0 && self.spacing_over_lambda <= 0.5) {
            return Err(invalid(format!("element spacing must lie in (0, 0.5] wavelengths, got {}", self.spacing_over_lambda)));
        }
        Ok(())
    }
}

/// `aₙ = exp(j2π d n sin θ)/√N`.
pub fn steering_vector(theta: f64, ula: &UlaConfig) -> Result<Vec<C64>> {
    ula.validate()?;
    if !(theta.abs() < PI / 2.0) {
        return Err(invalid(format!("arrival angle must satisfy |theta| < pi/2, got {theta}")));
    }
    let n = ula.n_elements;
    let s = 1.0 / libm::sqrt(n as f64);
    let k = 2.0 * PI * ula.spacing_over_lambda * libm::sin(theta);
    Ok((0..n).map(|i| C64::from_polar(s, k * i as f64)).collect())
}

/// Broadside half-power beamwidth `0.886 / (N d/λ)` in radians.
pub fn beamwidth_3db(ula: &UlaConfig) -> Result<f64> {
    ula.validate()?;
    Ok(0.886 / (ula.n_elements as f64 * ula.spacing_over_lambda))
}

/// `|a(θ₀)ᴴ a(θ)|²`.
pub fn beampattern(theta0: f64, theta: f64, ula: &UlaConfig) -> Result<f64> {
    let a = steering_vector(theta0, ula)?;
    let b = steering_vector(theta, ula)?;
    Ok(crate::linalg::inner(&a, &b).norm_sqr())
}

fn rate_check(sample_rate: f64) -> Result<()> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid("sample rate must be positive"));
    }
    Ok(())
}

/// Complex baseband chirp `exp(jπ(B/T)t²)` on `t ∈ [−T/2, T/2)`.
pub fn gen_lfm(bandwidth: f64, pulse_width: f64, sample_rate: f64) -> Result<Signal> {
    rate_check(sample_rate)?;
    if !(bandwidth > 0.0 && pulse_width > 0.0) {
        return Err(invalid("bandwidth and pulse width must be positive"));
    }
    if bandwidth > sample_rate {
        return Err(Error::Aliasing { freq: bandwidth, sample_rate });
    }
    let l = libm::round(pulse_width * sample_rate) as usize;
    let k = bandwidth / pulse_width;
    let samples = (0..l)
        .map(|n| {
            let t = -pulse_width / 2.0 + n as f64 / sample_rate;
            C64::from_polar(1.0, PI * k * t * t)
        })
        .collect();
    Signal::new(samples, sample_rate)
}

/// `n_teeth` equal tones centred on DC, `tooth_spacing` apart, with random
/// phases, scaled to unit power.
pub fn gen_csi(n_teeth: usize, tooth_spacing: f64, sample_rate: f64, duration: f64, seed: u64) -> Result<Signal> {
    rate_check(sample_rate)?;
    if n_teeth == 0 || !(tooth_spacing > 0.0) {
        return Err(invalid("comb needs at least one tooth and positive spacing"));
    }
    if n_teeth as f64 * tooth_spacing >= sample_rate {
        return Err(Error::Aliasing { freq: n_teeth as f64 * tooth_spacing, sample_rate });
    }
    let l = libm::round(duration * sample_rate) as usize;
    let mut rng = seeded(seed);
    let tones: Vec<(f64, f64)> = (0..n_teeth)
        .map(|k| {
            let f = (k as f64 - (n_teeth as f64 - 1.0) / 2.0) * tooth_spacing;
            (f, 2.0 * PI * rng.random::<f64>())
        })
        .collect();
    let raw: Vec<C64> = (0..l)
        .map(|n| {
            let t = n as f64 / sample_rate;
            tones.iter().map(|&(f, ph)| C64::from_polar(1.0, 2.0 * PI * f * t + ph)).sum()
        })
        .collect();
    unit_power(raw, sample_rate)
}

fn unit_power(raw: Vec<C64>, sample_rate: f64) -> Result<Signal> {
    let p = raw.iter().map(C64::norm_sqr).sum::<f64>() / raw.len().max(1) as f64;
    if !(p > 0.0) {
        return Err(Error::ZeroPower("jamming waveform".into()));
    }
    let s = 1.0 / libm::sqrt(p);
    Signal::new(raw.into_iter().map(|x| x * s).collect(), sample_rate)
}

/// Interrupted-sampling repeater: in every `slice_period` the first
/// `duty` fraction of the base pulse is sampled and retransmitted `delay`
/// later; zero elsewhere; unit power.
pub fn gen_isrj(base: &Signal, slice_period: f64, duty: f64, delay: f64) -> Result<Signal> {
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(invalid(format!("duty must lie in (0, 1], got {duty}")));
    }
    if !(slice_period > 0.0) || !(delay >= 0.0) {
        return Err(invalid("slice period must be positive and delay non-negative"));
    }
    if duty < 1.0 && delay < slice_period * duty - 1e-15 {
        return Err(invalid("delay must be at least one slice width"));
    }
    let fs = base.sample_rate();
    let l = base.len();
    let period = libm::round(slice_period * fs) as usize;
    let width = libm::round(duty * slice_period * fs) as usize;
    let d = libm::round(delay * fs) as usize;
    if period == 0 || width == 0 {
        return Err(invalid("slice shorter than one sample"));
    }
    if d >= l || period > l {
        return Err(invalid("slice or delay overruns the pulse"));
    }
    let src = base.samples();
    let raw: Vec<C64> = (0..l)
        .map(|n| match n.checked_sub(d) {
            Some(m) if m % period < width => src[m],
            _ => C64::new(0.0, 0.0),
        })
        .collect();
    unit_power(raw, fs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum JammingKind {
    Csi,
    Isrj,
}

impl JammingKind {
    pub fn name(self) -> &'static str {
        match self {
            JammingKind::Csi => "csi",
            JammingKind::Isrj => "isrj",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csi" => Some(JammingKind::Csi),
            "isrj" => Some(JammingKind::Isrj),
            _ => None,
        }
    }
}

/// Waveform parameters shared by target and jammers.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaveformParams {
    pub bandwidth: f64,
    pub pulse_width: f64,
    pub sample_rate: f64,
    pub csi_teeth: usize,
    pub csi_spacing: f64,
    pub isrj_period: f64,
    pub isrj_duty: f64,
    pub isrj_delay: f64,
}

impl Default for WaveformParams {
    fn default() -> Self {
        Self {
            bandwidth: 10e6,
            pulse_width: 100e-6,
            sample_rate: 20e6,
            csi_teeth: 8,
            csi_spacing: 10e6 / 8.0,
            isrj_period: 10e-6,
            isrj_duty: 0.2,
            isrj_delay: 2e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadarScene {
    pub kind: JammingKind,
    pub mixed: ComplexDataMatrix,
    pub target_component: ComplexDataMatrix,
    pub interference_component: ComplexDataMatrix,
    pub noise_component: ComplexDataMatrix,
    /// The transmitted target waveform.
    pub target_waveform: Signal,
    pub jammer_waveform: Signal,
    pub sir_in_db: f64,
    pub snr_in_db: f64,
    pub delta_theta: f64,
    pub theta_3db: f64,
    pub theta_target: f64,
    pub theta_jammer: f64,
}

fn outer(a: &[C64], s: &Signal, gain: f64) -> CMatrix {
    let x = s.samples();
    CMatrix::from_fn(a.len(), x.len(), |i, j| a[i] * x[j] * gain)
}

fn power(m: &CMatrix) -> f64 {
    m.as_slice().iter().map(C64::norm_sqr).sum::<f64>() / m.as_slice().len() as f64
}

/// Target at broadside, jammer at `delta_theta·θ_3dB`, components scaled to
/// the requested SIR (target/interference) and SNR (target/noise) measured
/// at the array.
pub fn build_scenario(
    kind: JammingKind,
    delta_theta: f64,
    snr_db: f64,
    sir_db: f64,
    ula: &UlaConfig,
    waveform: &WaveformParams,
    seed: u64,
) -> Result<RadarScene> {
    if !(delta_theta > 0.0) {
        return Err(invalid("delta_theta must be positive"));
    }
    if !snr_db.is_finite() || !sir_db.is_finite() {
        return Err(invalid("SNR and SIR must be finite"));
    }
    let theta_3db = beamwidth_3db(ula)?;
    let theta_jammer = delta_theta * theta_3db;
    let lfm = gen_lfm(waveform.bandwidth, waveform.pulse_width, waveform.sample_rate)?;
    let jam = match kind {
        JammingKind::Csi => gen_csi(
            waveform.csi_teeth,
            waveform.csi_spacing,
            waveform.sample_rate,
            waveform.pulse_width,
            seed ^ 0x05ee_dc51,
        )?,
        JammingKind::Isrj => gen_isrj(&lfm, waveform.isrj_period, waveform.isrj_duty, waveform.isrj_delay)?,
    };
    if jam.len() != lfm.len() {
        return Err(Error::DimensionMismatch { expected: lfm.len(), actual: jam.len() });
    }
    let a_t = steering_vector(0.0, ula)?;
    let a_j = steering_vector(theta_jammer, ula)?;
    let target = outer(&a_t, &lfm, 1.0);
    let pt = power(&target);
    let raw_j = outer(&a_j, &jam, 1.0);
    let gj = libm::sqrt(pt / (power(&raw_j) * libm::pow(10.0, sir_db / 10.0)));
    let interference = raw_j.scale(C64::new(gj, 0.0));
    let mut rng = seeded(seed);
    let raw_n = CMatrix::from_fn(ula.n_elements, lfm.len(), |_, _| complex_normal(&mut rng));
    let gn = libm::sqrt(pt / (power(&raw_n) * libm::pow(10.0, snr_db / 10.0)));
    let noise_draw = raw_n.scale(C64::new(gn, 0.0));
    let mixed = target.add(&interference)?.add(&noise_draw)?;
    // stored so that mixed − target − interference − noise is exactly zero
    let noise = mixed.sub(&target)?.sub(&interference)?;
    let fs = waveform.sample_rate;
    Ok(RadarScene {
        kind,
        mixed: ComplexDataMatrix::new(mixed, fs)?,
        target_component: ComplexDataMatrix::new(target, fs)?,
        interference_component: ComplexDataMatrix::new(interference, fs)?,
        noise_component: ComplexDataMatrix::new(noise, fs)?,
        target_waveform: lfm,
        jammer_waveform: jam,
        sir_in_db: sir_db,
        snr_in_db: snr_db,
        delta_theta,
        theta_3db,
        theta_target: 0.0,
        theta_jammer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::complex_correlation;

    #[test]
    fn steering_basics() {
        let ula = UlaConfig::default();
        let a = steering_vector(0.0, &ula).unwrap();
        assert!(a.iter().all(|z| (z - C64::new(0.5, 0.0)).norm() < 1e-15));
        for th in [-1.2, -0.3, 0.4, 1.5] {
            let a = steering_vector(th, &ula).unwrap();
            assert!((crate::linalg::norm(&a) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn beamwidth_formula_and_pattern() {
        let ula = UlaConfig::default();
        let bw = beamwidth_3db(&ula).unwrap();
        assert!((bw - 0.443).abs() < 1e-12);
        let two = UlaConfig { n_elements: 2, ..ula };
        assert!((beamwidth_3db(&two).unwrap() - 0.886).abs() < 1e-12);
        let eight = UlaConfig { n_elements: 8, ..ula };
        assert!((beamwidth_3db(&eight).unwrap() * 2.0 - bw).abs() < 1e-12);
        let g = beampattern(0.0, bw / 2.0, &ula).unwrap();
        assert!((g - 0.5).abs() < 0.05, "{g}");
        assert!((beampattern(0.0, -bw / 2.0, &ula).unwrap() - g).abs() < 1e-12);
    }

    #[test]
    fn lfm_is_unit_modulus_chirp() {
        let p = WaveformParams::default();
        let s = gen_lfm(p.bandwidth, p.pulse_width, p.sample_rate).unwrap();
        assert_eq!(s.len(), 2000);
        assert!(s.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let x = s.samples();
        let slope = p.bandwidth / p.pulse_width;
        let mut worst: f64 = 0.0;
        for n in 0..x.len() - 1 {
            let f = (x[n + 1] * x[n].conj()).arg() * p.sample_rate / (2.0 * PI);
            let t = -p.pulse_width / 2.0 + (n as f64 + 0.5) / p.sample_rate;
            worst = worst.max((f - slope * t).abs());
        }
        assert!(worst <= 0.01 * p.bandwidth, "{worst}");
    }

    #[test]
    fn isrj_degenerate_and_default() {
        let p = WaveformParams::default();
        let lfm = gen_lfm(p.bandwidth, p.pulse_width, p.sample_rate).unwrap();
        let full = gen_isrj(&lfm, p.isrj_period, 1.0, 0.0).unwrap();
        assert!((complex_correlation(full.samples(), lfm.samples()).unwrap() - 1.0).abs() < 1e-12);
        let j = gen_isrj(&lfm, p.isrj_period, p.isrj_duty, p.isrj_delay).unwrap();
        assert!(complex_correlation(j.samples(), lfm.samples()).unwrap() >= 0.3);
        assert!(gen_isrj(&lfm, p.isrj_period, 0.25, 1e-6).is_err());
    }

    #[test]
    fn csi_single_tone_constant_modulus() {
        let s = gen_csi(1, 1e6, 20e6, 100e-6, 3).unwrap();
        assert!(s.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scene_calibration() {
        let ula = UlaConfig::default();
        let p = WaveformParams::default();
        for kind in [JammingKind::Csi, JammingKind::Isrj] {
            let s = build_scenario(kind, 1.0, 10.0, 0.0, &ula, &p, 4).unwrap();
            let db = |a: f64, b: f64| 10.0 * libm::log10(a / b);
            let pt = s.target_component.power();
            assert!(db(pt, s.interference_component.power()).abs() < 0.1);
            assert!((db(pt, s.noise_component.power()) - 10.0).abs() < 0.1);
            assert!((s.theta_jammer - s.theta_3db).abs() < 1e-15);
            let rebuilt = s
                .mixed
                .matrix()
                .sub(s.target_component.matrix())
                .unwrap()
                .sub(s.interference_component.matrix())
                .unwrap()
                .sub(s.noise_component.matrix())
                .unwrap();
            assert!(rebuilt.as_slice().iter().all(|z| z.re == 0.0 && z.im == 0.0));
        }
    }
}
