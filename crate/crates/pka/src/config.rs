//! Experiment configuration, loadable from a JSON object with the same
//! fields. Unset optional fields take per-experiment defaults.

use std::path::{Path, PathBuf};

use pka_core::radar::{JammingKind, UlaConfig, WaveformParams};
use pka_core::separators::{Algorithm, Direction, FixedPointConfig, PkaConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    #[default]
    Validate,
    Waves,
    Audio,
    Radar,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Validate => "validate",
            ExperimentId::Waves => "waves",
            ExperimentId::Audio => "audio",
            ExperimentId::Radar => "radar",
        }
    }

    pub fn default_algorithms(self) -> Vec<Algorithm> {
        use Algorithm::*;
        match self {
            ExperimentId::Validate => vec![Pka, Deflation, CFastIca, Jade],
            _ => vec![Pka, Deflation, CFastIca, Psa, Jade],
        }
    }

    pub fn default_seeds(self) -> Vec<u64> {
        match self {
            ExperimentId::Validate => vec![0],
            ExperimentId::Waves | ExperimentId::Audio => (0..20).collect(),
            ExperimentId::Radar => (0..10).collect(),
        }
    }

    pub fn default_direction(self) -> Direction {
        match self {
            ExperimentId::Validate | ExperimentId::Audio => Direction::Ascent,
            ExperimentId::Waves | ExperimentId::Radar => Direction::Descent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PkaSettings {
    pub alpha: f64,
    /// Defaults to descent for waves and radar, ascent otherwise.
    pub direction: Option<Direction>,
    pub tol: f64,
    pub max_iter: usize,
    pub max_restarts: usize,
    pub det_floor: f64,
    pub stall_window: usize,
}

impl Default for PkaSettings {
    fn default() -> Self {
        let d = PkaConfig::default();
        Self {
            alpha: d.alpha,
            direction: None,
            tol: d.tol,
            max_iter: d.max_iter,
            max_restarts: d.max_restarts,
            det_floor: d.det_floor,
            stall_window: d.stall_window,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointSettings {
    fn default() -> Self {
        let d = FixedPointConfig::default();
        Self { tol: d.tol, max_iter: d.max_iter }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationParams {
    pub n_tensors: usize,
    pub dim: usize,
    /// Samples behind each random tensor.
    pub l_samples: usize,
    pub thresholds: Vec<f64>,
}

impl Default for ValidationParams {
    fn default() -> Self {
        Self {
            n_tensors: 100,
            dim: 3,
            l_samples: 10_000,
            thresholds: vec![0.0, 0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999, 0.9999999, 0.99999999],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavesParams {
    pub sample_rate: f64,
    pub duration: f64,
    pub sine_freqs: [f64; 2],
    pub square_freq: f64,
}

impl Default for WavesParams {
    fn default() -> Self {
        Self { sample_rate: 1000.0, duration: 0.5, sine_freqs: [9.0, 9.5], square_freq: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioParams {
    /// WAV files to mix; when empty the built-in speech surrogates are used.
    pub wavs: Vec<PathBuf>,
    pub offset: f64,
    pub duration: Option<f64>,
    pub target_rate: Option<f64>,
    pub surrogate_count: usize,
    pub surrogate_rate: f64,
    pub surrogate_duration: f64,
    pub surrogate_seed: u64,
}

impl Default for AudioParams {
    fn default() -> Self {
        Self {
            wavs: Vec::new(),
            offset: 0.0,
            duration: None,
            target_rate: None,
            surrogate_count: 4,
            surrogate_rate: 8000.0,
            surrogate_duration: 2.0,
            surrogate_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    #[default]
    Dtheta,
    Snr,
    Sir,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Dtheta => "dtheta",
            SweepAxis::Snr => "snr",
            SweepAxis::Sir => "sir",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Dtheta => vec![0.25, 0.5, 1.0, 2.0],
            SweepAxis::Snr => vec![0.0, 5.0, 10.0, 15.0, 20.0],
            SweepAxis::Sir => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams {
    pub kind: JammingKind,
    pub axis: SweepAxis,
    pub values: Option<Vec<f64>>,
    pub delta_theta: f64,
    pub snr_db: f64,
    pub sir_db: f64,
    pub ula: UlaConfig,
    pub waveform: WaveformParams,
    /// Whitened dimensions kept; `None` keeps one per source (two), `0`
    /// picks the count from the largest eigenvalue gap.
    pub n_keep: Option<usize>,
    /// Write one scene (first point, first seed) as CSV + JSON.
    pub export_scene: bool,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            kind: JammingKind::Csi,
            axis: SweepAxis::Dtheta,
            values: None,
            delta_theta: 1.0,
            snr_db: 10.0,
            sir_db: 0.0,
            ula: UlaConfig::default(),
            waveform: WaveformParams::default(),
            n_keep: None,
            export_scene: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub algorithms: Option<Vec<Algorithm>>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 1 runs everything on the calling thread, 0 lets the
    /// pool decide.
    pub threads: usize,
    /// Write separated signals for the first seed.
    pub export_signals: bool,
    pub pka: PkaSettings,
    pub fixed_point: FixedPointSettings,
    pub validation: ValidationParams,
    pub waves: WavesParams,
    pub audio: AudioParams,
    pub radar: RadarParams,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId) -> Self {
        Self { experiment, ..Self::default() }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        crate::formats::read_json(path)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithms.clone().unwrap_or_else(|| self.experiment.default_algorithms())
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| self.experiment.default_seeds())
    }

    pub fn radar_values(&self) -> Vec<f64> {
        self.radar.values.clone().unwrap_or_else(|| self.radar.axis.default_values())
    }

    pub fn pka_config(&self, seed: u64) -> PkaConfig {
        let p = &self.pka;
        PkaConfig {
            alpha: p.alpha,
            direction: p.direction.unwrap_or_else(|| self.experiment.default_direction()),
            tol: p.tol,
            max_iter: p.max_iter,
            max_restarts: p.max_restarts,
            det_floor: p.det_floor,
            stall_window: p.stall_window,
            seed,
        }
    }

    pub fn fixed_point_config(&self, seed: u64) -> FixedPointConfig {
        FixedPointConfig { tol: self.fixed_point.tol, max_iter: self.fixed_point.max_iter, seed }
    }

    /// Fills every optional field with its effective value, so the echo in
    /// a manifest reproduces the run on its own.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.algorithms = Some(self.algorithms());
        c.seeds = Some(self.seeds());
        c.pka.direction = Some(self.pka_config(0).direction);
        if self.experiment == ExperimentId::Radar {
            c.radar.values = Some(self.radar_values());
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.algorithms().is_empty() {
            return bad("algorithm list is empty");
        }
        if self.seeds().is_empty() {
            return bad("seed list is empty");
        }
        self.pka_config(0).validate()?;
        match self.experiment {
            ExperimentId::Validate => {
                let v = &self.validation;
                if v.n_tensors == 0 || v.dim < 2 || v.l_samples < v.dim {
                    return bad("validation needs n_tensors ≥ 1, dim ≥ 2 and l_samples ≥ dim");
                }
                if self.algorithms().contains(&Algorithm::Psa) {
                    return bad("PSA needs data, not a fourth-order tensor; drop it from the validation run");
                }
                if v.thresholds.is_empty() || v.thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
                    return bad("thresholds must be a nonempty list in [0, 1)");
                }
            }
            ExperimentId::Audio => {
                let a = &self.audio;
                if !a.wavs.is_empty() && a.wavs.len() < 2 {
                    return bad("audio needs at least two WAV files");
                }
                if a.wavs.is_empty() && a.surrogate_count < 2 {
                    return bad("audio needs at least two surrogate signals");
                }
            }
            ExperimentId::Radar => {
                if self.radar_values().is_empty() {
                    return bad("radar sweep values are empty");
                }
                if self.radar.n_keep.is_some_and(|k| k > self.radar.ula.n_elements) {
                    return bad("n_keep exceeds the number of array elements");
                }
            }
            ExperimentId::Waves => {}
        }
        Ok(())
    }
}
