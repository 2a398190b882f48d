//! The four experiments: tensor validation, basic waves, audio mixtures and
//! radar jamming sweeps.
//!
//! [`run`] does all computation and returns tables in memory;
//! [`write_outputs`] puts them on disk. Rows are ordered by (sweep point,
//! seed, algorithm) whatever the thread count, and carry no timings, so
//! `results.csv` is reproducible bit for bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pka_core::metrics::{
    self, effective_mixing, eigen_cosine, evaluate, select_target_vector, sir_improvement, SeparationReport,
};
use pka_core::radar::build_scenario;
use pka_core::rng::{normal, seeded};
use pka_core::separators::{
    cfastica_tensor, fixed_point_deflation, jade_tensor, pka_best_effort, psa_data, separate, unmix, Algorithm,
    SeparatorConfig, UnmixingMatrix,
};
use pka_core::signal::{covariance, gen_sine, gen_square, mix, random_mixing_matrix, ComplexDataMatrix, Signal, SourceSet};
use pka_core::tensor::{fourth_moment_tensor, random_statistical_tensor, FourthOrderTensor};
use pka_core::whitening::{dominant_dims, whiten, WhiteningResult};
use pka_core::C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentId, SweepAxis};
use crate::error::{format_err, io_err, Error, Result};
use crate::formats::{self, SceneDescriptor};
use crate::plot::{line_chart, Series};

/// A table of already-formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_owned()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell `name` of row `row`.
    pub fn get(&self, row: usize, name: &str) -> Option<&str> {
        Some(self.rows.get(row)?.get(self.column_index(name)?)?.as_str())
    }

    /// Like [`Table::get`], parsed as a float (NaN when missing or unparsable).
    pub fn get_f64(&self, row: usize, name: &str) -> f64 {
        self.get(row, name).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
    }

    /// Indices of rows whose `name` cell equals `value`.
    pub fn rows_where(&self, name: &str, value: &str) -> Vec<usize> {
        match self.column_index(name) {
            Some(c) => (0..self.rows.len()).filter(|&r| self.rows[r][c] == value).collect(),
            None => Vec::new(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(io_err(path))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(io_err(path))?;
        let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
        let header = r.headers()?.iter().map(str::to_owned).collect();
        let rows = r.records().map(|rec| Ok(rec?.iter().map(str::to_owned).collect())).collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }
}

/// Wall-clock and outcome of one (point, seed, algorithm) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub point: Option<f64>,
    pub wall_ms: f64,
    /// `"ok"` or the error message.
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub experiment: ExperimentId,
    /// The resolved configuration; running it again reproduces the results.
    pub config: ExperimentConfig,
    pub rows: usize,
    pub completed: bool,
    pub runs: Vec<RunRecord>,
    /// Experiment-specific diagnostics (source covariance, ...).
    pub notes: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// The manifest with wall-clock fields zeroed, for comparisons.
    pub fn without_timings(&self) -> Self {
        let mut m = self.clone();
        m.runs.iter_mut().for_each(|r| r.wall_ms = 0.0);
        m
    }
}

pub struct RunOutput {
    pub results: Table,
    pub summary: Table,
    /// Further tables, written as `<name>.csv`.
    pub tables: Vec<(String, Table)>,
    pub manifest: RunManifest,
    /// `(file name, SVG text)`.
    pub plots: Vec<(String, String)>,
    /// Signals to export, written as `<name>.csv` (and `.wav` for audio).
    pub signals: Vec<(String, SourceSet)>,
    /// Scene exports: descriptor and stem.
    pub scenes: Vec<(String, SceneDescriptor)>,
}

impl RunOutput {
    pub fn completed(&self) -> bool {
        self.manifest.completed
    }
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn par_map<T: Sync, R: Send>(threads: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running serially");
            items.iter().map(f).collect()
        }
    }
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64() * 1e3)
}

fn status_of<T>(r: &Result<T>) -> String {
    match r {
        Ok(_) => "ok".to_owned(),
        Err(e) => e.to_string(),
    }
}

/// Runs the configured experiment entirely in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let mut out = match cfg.experiment {
        ExperimentId::Validate => run_validation(&cfg)?,
        ExperimentId::Waves => run_waves(&cfg)?,
        ExperimentId::Audio => run_audio(&cfg)?,
        ExperimentId::Radar => run_radar_sweep(&cfg)?,
    };
    out.manifest.completed = out.manifest.runs.iter().all(|r| r.status == "ok");
    Ok(out)
}

fn manifest(cfg: &ExperimentConfig, rows: usize, runs: Vec<RunRecord>) -> RunManifest {
    RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_owned(),
        experiment: cfg.experiment,
        config: cfg.clone(),
        rows,
        completed: false,
        runs,
        notes: BTreeMap::new(),
        outputs: Vec::new(),
    }
}

/// Separators that work from a fourth-order tensor alone.
pub fn separate_tensor(
    algorithm: Algorithm,
    t: &FourthOrderTensor,
    n: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<UnmixingMatrix> {
    let w = match algorithm {
        Algorithm::Pka => pka_best_effort(t, n, &cfg.pka_config(seed))?,
        Algorithm::Deflation => fixed_point_deflation(t, n, &cfg.fixed_point_config(seed))?,
        Algorithm::CFastIca => cfastica_tensor(t, n, &cfg.fixed_point_config(seed))?,
        Algorithm::Jade => jade_tensor(t, n)?,
        Algorithm::Psa => return Err(Error::Config("PSA cannot run on a fourth-order tensor".into())),
    };
    Ok(w)
}

/// Seed of tensor `k` in the validation run for `seed`.
pub fn validation_tensor_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(k as u64)
}

struct Extracted {
    s: Vec<f64>,
    residual: Vec<f64>,
    converged: Vec<bool>,
}

/// Extraction on random statistical tensors, scored by `s(w)` at each
/// threshold.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let v = &cfg.validation;
    let algs = cfg.algorithms();
    let seeds = cfg.seeds();
    let jobs: Vec<(u64, usize)> = seeds.iter().flat_map(|&s| (0..v.n_tensors).map(move |k| (s, k))).collect();
    let results = par_map(cfg.threads, &jobs, |&(seed, k)| {
        let ts = validation_tensor_seed(seed, k);
        let tensor = random_statistical_tensor(v.dim, ts, v.l_samples);
        algs.iter()
            .map(|&alg| {
                let (r, ms) = timed(|| -> Result<Extracted> {
                    let t = tensor.as_ref().map_err(|e| Error::Core(e.clone()))?;
                    let w = separate_tensor(alg, t, v.dim, cfg, ts)?;
                    Ok(Extracted {
                        s: w.columns.iter().map(|c| eigen_cosine(t, c).unwrap_or(f64::NAN)).collect(),
                        residual: w.columns.iter().map(|c| t.eigen_residual(c).1).collect(),
                        converged: w.diagnostics.iter().map(|d| d.converged).collect(),
                    })
                });
                (alg, r, ms)
            })
            .collect::<Vec<_>>()
    });

    let mut extractions = Table::new(&["algorithm", "seed", "tensor", "vector", "s", "one_minus_s", "residual", "converged"]);
    let mut runs = Vec::new();
    // per (seed, algorithm) list of s values
    let mut scores: BTreeMap<(u64, usize), Vec<f64>> = BTreeMap::new();
    for (&(seed, k), per_alg) in jobs.iter().zip(&results) {
        for (ai, (alg, r, ms)) in per_alg.iter().enumerate() {
            runs.push(RunRecord { algorithm: alg.name().into(), seed, point: Some(k as f64), wall_ms: *ms, status: status_of(r) });
            let entry = scores.entry((seed, ai)).or_default();
            match r {
                Ok(e) => {
                    for (i, &s) in e.s.iter().enumerate() {
                        entry.push(s);
                        extractions.push(vec![
                            alg.name().into(),
                            seed.to_string(),
                            k.to_string(),
                            i.to_string(),
                            fmt(s),
                            fmt(1.0 - s),
                            fmt(e.residual[i]),
                            e.converged[i].to_string(),
                        ]);
                    }
                    // failed vectors count as attempted
                    entry.extend(std::iter::repeat_n(f64::NAN, v.dim - e.s.len()));
                }
                Err(_) => entry.extend(std::iter::repeat_n(f64::NAN, v.dim)),
            }
        }
    }

    let header = ["experiment", "algorithm", "seed", "threshold", "successes", "attempted", "dim", "n_tensors", "l_samples"];
    let mut table = Table::new(&header);
    let mut summary = Table::new(&["algorithm", "threshold", "successes", "attempted", "fraction"]);
    let mut series: Vec<Series> = algs.iter().map(|a| Series::new(a.name())).collect();
    for &th in &v.thresholds {
        for &seed in &seeds {
            for (ai, alg) in algs.iter().enumerate() {
                let s = &scores[&(seed, ai)];
                let ok = s.iter().filter(|&&x| x > th).count();
                table.push(vec![
                    "validate".into(),
                    alg.name().into(),
                    seed.to_string(),
                    fmt(th),
                    ok.to_string(),
                    s.len().to_string(),
                    v.dim.to_string(),
                    v.n_tensors.to_string(),
                    v.l_samples.to_string(),
                ]);
            }
        }
        for (ai, alg) in algs.iter().enumerate() {
            let all: Vec<f64> = seeds.iter().flat_map(|&s| scores[&(s, ai)].iter().copied()).collect();
            let ok = all.iter().filter(|&&x| x > th).count();
            summary.push(vec![
                alg.name().into(),
                fmt(th),
                ok.to_string(),
                all.len().to_string(),
                fmt(ok as f64 / all.len() as f64),
            ]);
            series[ai].points.push((threshold_axis(th), ok as f64));
        }
    }
    let plot = line_chart("Eigenvector recovery", "-log10(1 - threshold)", "successes", &series);
    let m = manifest(cfg, table.len(), runs);
    Ok(RunOutput {
        results: table,
        summary,
        tables: vec![("extractions".into(), extractions)],
        manifest: m,
        plots: vec![("validation.svg".into(), plot)],
        signals: Vec::new(),
        scenes: Vec::new(),
    })
}

fn threshold_axis(th: f64) -> f64 {
    if th <= 0.0 {
        0.0
    } else {
        -(1.0 - th).log10()
    }
}

/// The 9 Hz / 9.5 Hz sine and 8 Hz square trio, standardized.
pub fn basic_waves(cfg: &ExperimentConfig) -> Result<SourceSet> {
    let w = &cfg.waves;
    let s = SourceSet::new(
        vec![
            gen_sine(w.sine_freqs[0], w.sample_rate, w.duration, 0.0)?,
            gen_sine(w.sine_freqs[1], w.sample_rate, w.duration, 0.0)?,
            gen_square(w.square_freq, w.sample_rate, w.duration)?,
        ],
        vec![format!("sine{}", w.sine_freqs[0]), format!("sine{}", w.sine_freqs[1]), format!("square{}", w.square_freq)],
    )?;
    Ok(s.standardized()?)
}

/// Synthetic speech stand-ins: white noise through a per-source one-pole
/// filter, gated by Hann-shaped bursts of random length and loudness
/// separated by near-silent gaps. Heavy-tailed like speech.
pub fn speech_surrogates(count: usize, sample_rate: f64, duration: f64, seed: u64) -> Result<SourceSet> {
    let l = (sample_rate * duration).round() as usize;
    if l < 2 {
        return Err(Error::Config("surrogate duration too short".into()));
    }
    let mut signals = Vec::with_capacity(count);
    for k in 0..count {
        let mut rng = seeded(seed.wrapping_mul(0x9e37_79b9).wrapping_add(k as u64 + 1));
        let pole = rng.random_range(0.3..0.9);
        let mut env = vec![0.02; l];
        let mut pos = (rng.random_range(0.0..0.2) * sample_rate) as usize;
        while pos < l {
            let len = (rng.random_range(0.08..0.3) * sample_rate) as usize;
            let amp = rng.random_range(0.4..1.6);
            for i in 0..len.min(l - pos) {
                let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos();
                env[pos + i] += amp * hann;
            }
            pos += len + (rng.random_range(0.05..0.25) * sample_rate) as usize;
        }
        let mut y = 0.0;
        let samples: Vec<f64> = env
            .iter()
            .map(|e| {
                y = pole * y + normal(&mut rng);
                e * y
            })
            .collect();
        signals.push(Signal::from_real(&samples, sample_rate)?);
    }
    let labels = (0..count).map(|k| format!("speech{k}")).collect();
    Ok(SourceSet::new(signals, labels)?.standardized()?)
}

fn audio_sources(cfg: &ExperimentConfig) -> Result<SourceSet> {
    let a = &cfg.audio;
    if a.wavs.is_empty() {
        return speech_surrogates(a.surrogate_count, a.surrogate_rate, a.surrogate_duration, a.surrogate_seed);
    }
    let mut signals = Vec::with_capacity(a.wavs.len());
    for p in &a.wavs {
        signals.push(crate::wav::ingest_wav(p, a.offset, a.duration, a.target_rate)?);
    }
    let rate = signals[0].sample_rate();
    if signals.iter().any(|s| s.sample_rate() != rate) {
        return Err(Error::Config("WAV files differ in sample rate; set audio.target_rate".into()));
    }
    let len = signals.iter().map(Signal::len).min().unwrap_or(0);
    let signals = signals
        .into_iter()
        .map(|s| Signal::new(s.samples()[..len].to_vec(), rate).and_then(|s| s.standardized()))
        .collect::<pka_core::Result<Vec<_>>>()?;
    let labels = a
        .wavs
        .iter()
        .map(|p| p.file_stem().map_or_else(|| "wav".into(), |s| s.to_string_lossy().into_owned()))
        .collect();
    Ok(SourceSet::new(signals, labels)?)
}

struct MixtureRun {
    reports: Vec<(Algorithm, Result<SeparationReport>, f64)>,
    separated: Vec<(Algorithm, SourceSet)>,
}

fn mixture_run(cfg: &ExperimentConfig, truth: &SourceSet, seed: u64, keep_signals: bool) -> MixtureRun {
    let n = truth.count();
    let prep = (|| -> Result<_> {
        let a = random_mixing_matrix(n, !truth.is_real(), seed)?;
        let x = mix(truth, &a)?;
        let white = whiten(&x, None)?;
        let a_eff = effective_mixing(&white.v, &a)?;
        let t = fourth_moment_tensor(&white.z)?;
        let cond = a.condition_number()?;
        Ok((white, a_eff, t, cond))
    })();
    let mut reports = Vec::new();
    let mut separated = Vec::new();
    for alg in cfg.algorithms() {
        let (r, ms) = timed(|| -> Result<(SeparationReport, UnmixingMatrix)> {
            let (white, a_eff, t, cond) = prep.as_ref().map_err(|e| Error::Config(e.to_string()))?;
            let sc = SeparatorConfig { pka: cfg.pka_config(seed), fixed_point: cfg.fixed_point_config(seed) };
            let w = separate(alg, &white.z, Some(t), n, &sc)?;
            let mut rep = evaluate(truth, &w, &white.z, a_eff, seed)?;
            rep.extra.insert("cond_number".into(), *cond);
            rep.extra.insert("converged".into(), if rep.converged { 1.0 } else { 0.0 });
            for (label, sdr) in truth.labels().iter().zip(&rep.sdr_db) {
                rep.extra.insert(format!("sdr_{label}"), *sdr);
            }
            Ok((rep, w))
        });
        let r = r.and_then(|(rep, w)| {
            if keep_signals {
                let (white, ..) = prep.as_ref().map_err(|e| Error::Config(e.to_string()))?;
                separated.push((alg, unmix(&w, &white.z)?));
            }
            Ok(rep)
        });
        reports.push((alg, r, ms));
    }
    MixtureRun { reports, separated }
}

fn sentinel_report(alg: Algorithm, seed: u64, truth: &SourceSet) -> SeparationReport {
    let mut extra = BTreeMap::new();
    extra.insert("cond_number".into(), f64::NAN);
    extra.insert("converged".into(), 0.0);
    for label in truth.labels() {
        extra.insert(format!("sdr_{label}"), f64::NAN);
    }
    SeparationReport {
        algorithm: alg,
        seed,
        isi: f64::NAN,
        acc: f64::NAN,
        sdr_db: vec![f64::NAN; truth.count()],
        matching: Vec::new(),
        converged: false,
        extra,
    }
}

fn median(v: &mut [f64]) -> f64 {
    let mut finite: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if finite.is_empty() {
        return f64::NAN;
    }
    finite.sort_by(f64::total_cmp);
    let m = finite.len() / 2;
    if finite.len() % 2 == 1 {
        finite[m]
    } else {
        0.5 * (finite[m - 1] + finite[m])
    }
}

fn mean_std(v: &[f64]) -> (f64, f64, usize) {
    let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    let n = f.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = f.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    (mean, var.sqrt(), n)
}

fn mixture_experiment(cfg: &ExperimentConfig, name: &str, truth: SourceSet) -> Result<RunOutput> {
    let seeds = cfg.seeds();
    let algs = cfg.algorithms();
    let first = seeds[0];
    let runs_out = par_map(cfg.threads, &seeds, |&seed| mixture_run(cfg, &truth, seed, cfg.export_signals && seed == first));

    let mut table: Option<Table> = None;
    let mut runs = Vec::new();
    let mut per_alg: BTreeMap<usize, Vec<SeparationReport>> = BTreeMap::new();
    let mut signals = Vec::new();
    for (&seed, mr) in seeds.iter().zip(runs_out) {
        for (ai, (alg, r, ms)) in mr.reports.into_iter().enumerate() {
            runs.push(RunRecord { algorithm: alg.name().into(), seed, point: None, wall_ms: ms, status: status_of(&r) });
            let rep = r.unwrap_or_else(|e| {
                log::warn!("{name} seed {seed} {alg}: {e}");
                sentinel_report(alg, seed, &truth)
            });
            let (mut header, mut row) = formats::report_record(&rep);
            header.extend(["experiment", "n_sources", "samples", "sample_rate"].map(String::from));
            row.extend([name.to_owned(), truth.count().to_string(), truth.len().to_string(), fmt(truth.sample_rate())]);
            table.get_or_insert_with(|| Table::new(&header)).push(row);
            per_alg.entry(ai).or_default().push(rep);
        }
        for (alg, est) in mr.separated {
            signals.push((format!("separated_{}", alg.name()), est));
        }
    }
    if cfg.export_signals {
        signals.insert(0, ("sources".into(), truth.clone()));
    }

    let mut summary =
        Table::new(&["algorithm", "seeds", "isi_median", "isi_mean", "acc_median", "acc_mean", "sdr_median", "sdr_mean"]);
    let mut isi_series = Vec::new();
    let mut sdr_series = Vec::new();
    for (ai, alg) in algs.iter().enumerate() {
        let reps = &per_alg[&ai];
        let mut isi: Vec<f64> = reps.iter().map(|r| r.isi).collect();
        let mut acc: Vec<f64> = reps.iter().map(|r| r.acc).collect();
        let mut sdr: Vec<f64> = reps.iter().map(SeparationReport::sdr_mean).collect();
        summary.push(vec![
            alg.name().into(),
            reps.len().to_string(),
            fmt(median(&mut isi)),
            fmt(mean_std(&isi).0),
            fmt(median(&mut acc)),
            fmt(mean_std(&acc).0),
            fmt(median(&mut sdr)),
            fmt(mean_std(&sdr).0),
        ]);
        let xs = seeds.iter().map(|&s| s as f64);
        isi_series.push(Series { name: alg.name().into(), points: xs.clone().zip(isi.iter().copied()).collect() });
        sdr_series.push(Series { name: alg.name().into(), points: xs.zip(sdr.iter().copied()).collect() });
    }
    let table = table.unwrap_or_default();
    let mut m = manifest(cfg, table.len(), runs);
    let cov = covariance(&truth)?;
    m.notes.insert("source_covariance".into(), serde_json::to_value(&cov)?);
    m.notes.insert("source_labels".into(), serde_json::to_value(truth.labels())?);
    Ok(RunOutput {
        results: table,
        summary,
        tables: Vec::new(),
        manifest: m,
        plots: vec![
            (format!("{name}_isi.svg"), line_chart("ISI per seed", "seed", "ISI", &isi_series)),
            (format!("{name}_sdr.svg"), line_chart("Mean SDR per seed", "seed", "SDR (dB)", &sdr_series)),
        ],
        signals,
        scenes: Vec::new(),
    })
}

pub fn run_waves(cfg: &ExperimentConfig) -> Result<RunOutput> {
    mixture_experiment(cfg, "waves", basic_waves(cfg)?)
}

/// Ingestion errors surface here, before any separation run.
pub fn run_audio(cfg: &ExperimentConfig) -> Result<RunOutput> {
    mixture_experiment(cfg, "audio", audio_sources(cfg)?)
}

/// Outcome of one algorithm on one radar scene.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarOutcome {
    pub sir_improvement_db: f64,
    pub sir_out_db: f64,
    pub target_index: usize,
    pub kept_dims: usize,
    pub converged: bool,
    /// `|corr|` between the transmitted and jamming waveforms.
    pub waveform_correlation: f64,
}

fn scene_params(cfg: &ExperimentConfig, value: f64) -> (f64, f64, f64) {
    let r = &cfg.radar;
    match r.axis {
        SweepAxis::Dtheta => (value, r.snr_db, r.sir_db),
        SweepAxis::Snr => (r.delta_theta, value, r.sir_db),
        SweepAxis::Sir => (r.delta_theta, r.snr_db, value),
    }
}

fn whiten_scene(x: &ComplexDataMatrix, n_keep: Option<usize>) -> Result<WhiteningResult> {
    let keep = match n_keep {
        None => 2.min(x.channels()),
        Some(0) => {
            let probe = whiten(x, None)?;
            dominant_dims(&probe.eigenvalues, 2)
        }
        Some(k) => k,
    };
    Ok(whiten(x, Some(keep))?)
}

/// Separates one scene with one algorithm and scores the output that best
/// matches the transmitted waveform. PSA sees only the real part of the
/// data.
pub fn radar_outcome(
    cfg: &ExperimentConfig,
    alg: Algorithm,
    scene: &pka_core::radar::RadarScene,
    seed: u64,
) -> Result<RadarOutcome> {
    let real = alg == Algorithm::Psa;
    let prep = |m: &ComplexDataMatrix| if real { m.real_part() } else { m.clone() };
    let mixed = prep(&scene.mixed);
    let white = whiten_scene(&mixed, cfg.radar.n_keep)?;
    let k = white.kept_dims;
    let w = if real {
        psa_data(&white.z, k, &cfg.fixed_point_config(seed))?
    } else {
        let t = fourth_moment_tensor(&white.z)?;
        let sc = SeparatorConfig { pka: cfg.pka_config(seed), fixed_point: cfg.fixed_point_config(seed) };
        separate(alg, &white.z, Some(&t), k, &sc)?
    };
    let reference: Vec<C64> = if real {
        scene.target_waveform.samples().iter().map(|z| C64::new(z.re, 0.0)).collect()
    } else {
        scene.target_waveform.samples().to_vec()
    };
    let idx = select_target_vector(&w, &white.z, &reference)?;
    let tw = white.apply(&prep(&scene.target_component))?;
    let iw = white.apply(&prep(&scene.interference_component))?;
    let gain = sir_improvement(&tw, &iw, &w.columns[idx], scene.sir_in_db)?;
    Ok(RadarOutcome {
        sir_improvement_db: gain,
        sir_out_db: metrics::output_sir_db(&tw, &iw, &w.columns[idx])?,
        target_index: idx,
        kept_dims: k,
        converged: w.converged(),
        waveform_correlation: metrics::complex_correlation(
            scene.target_waveform.samples(),
            scene.jammer_waveform.samples(),
        )?,
    })
}

/// SIR improvement against one swept parameter.
pub fn run_radar_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let r = &cfg.radar;
    let values = cfg.radar_values();
    let seeds = cfg.seeds();
    let algs = cfg.algorithms();
    let jobs: Vec<(usize, u64)> = (0..values.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let outcomes = par_map(cfg.threads, &jobs, |&(vi, seed)| {
        let (dt, snr, sir) = scene_params(cfg, values[vi]);
        let scene = build_scenario(r.kind, dt, snr, sir, &r.ula, &r.waveform, seed);
        algs.iter()
            .map(|&alg| {
                let (o, ms) = timed(|| match &scene {
                    Ok(s) => radar_outcome(cfg, alg, s, seed),
                    Err(e) => Err(Error::Core(e.clone())),
                });
                (alg, o, ms)
            })
            .collect::<Vec<_>>()
    });

    let header = [
        "experiment", "kind", "axis", "value", "delta_theta", "snr_db", "sir_db", "algorithm", "seed",
        "sir_improvement_db", "sir_out_db", "target_index", "kept_dims", "converged", "waveform_correlation",
    ];
    let mut table = Table::new(&header);
    let mut runs = Vec::new();
    let mut gains: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (&(vi, seed), per_alg) in jobs.iter().zip(outcomes) {
        let (dt, snr, sir) = scene_params(cfg, values[vi]);
        for (ai, (alg, o, ms)) in per_alg.into_iter().enumerate() {
            runs.push(RunRecord { algorithm: alg.name().into(), seed, point: Some(values[vi]), wall_ms: ms, status: status_of(&o) });
            let o = o.unwrap_or_else(|e| {
                log::warn!("radar point {} seed {seed} {alg}: {e}", values[vi]);
                RadarOutcome {
                    sir_improvement_db: f64::NAN,
                    sir_out_db: f64::NAN,
                    target_index: 0,
                    kept_dims: 0,
                    converged: false,
                    waveform_correlation: f64::NAN,
                }
            });
            gains.entry((vi, ai)).or_default().push(o.sir_improvement_db);
            table.push(vec![
                "radar".into(),
                r.kind.name().into(),
                r.axis.name().into(),
                fmt(values[vi]),
                fmt(dt),
                fmt(snr),
                fmt(sir),
                alg.name().into(),
                seed.to_string(),
                fmt(o.sir_improvement_db),
                fmt(o.sir_out_db),
                o.target_index.to_string(),
                o.kept_dims.to_string(),
                o.converged.to_string(),
                fmt(o.waveform_correlation),
            ]);
        }
    }

    let mut summary = Table::new(&["kind", "axis", "value", "algorithm", "mean_db", "std_db", "n"]);
    let mut series: Vec<Series> = algs.iter().map(|a| Series::new(a.name())).collect();
    for (vi, &v) in values.iter().enumerate() {
        for (ai, alg) in algs.iter().enumerate() {
            let (mean, std, n) = mean_std(&gains[&(vi, ai)]);
            summary.push(vec![r.kind.name().into(), r.axis.name().into(), fmt(v), alg.name().into(), fmt(mean), fmt(std), n.to_string()]);
            series[ai].points.push((v, mean));
        }
    }
    let title = format!("{} SIR improvement", r.kind.name().to_uppercase());
    let plot = line_chart(&title, r.axis.name(), "SIR improvement (dB)", &series);
    let mut scenes = Vec::new();
    if r.export_scene {
        let (dt, snr, sir) = scene_params(cfg, values[0]);
        let desc = SceneDescriptor {
            kind: r.kind,
            delta_theta: dt,
            snr_db: snr,
            sir_db: sir,
            ula: r.ula,
            waveform: r.waveform,
            seed: seeds[0],
        };
        scenes.push((format!("scene_{}", r.kind.name()), desc));
    }
    let m = manifest(cfg, table.len(), runs);
    Ok(RunOutput {
        results: table,
        summary,
        tables: Vec::new(),
        manifest: m,
        plots: vec![(format!("radar_{}_{}.svg", r.kind.name(), r.axis.name()), plot)],
        signals: Vec::new(),
        scenes,
    })
}

/// Writes `results.csv`, `summary.csv`, extra tables, plots, signals and
/// `manifest.json` into `dir` (created if missing). Returns the paths.
pub fn write_outputs(out: &mut RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut paths = Vec::new();
    let mut put = |p: PathBuf| {
        paths.push(p.clone());
        p
    };
    out.results.write_csv(&put(dir.join("results.csv")))?;
    out.summary.write_csv(&put(dir.join("summary.csv")))?;
    for (name, t) in &out.tables {
        t.write_csv(&put(dir.join(format!("{name}.csv"))))?;
    }
    for (name, svg) in &out.plots {
        let p = put(dir.join(name));
        std::fs::write(&p, svg).map_err(io_err(&p))?;
    }
    for (name, s) in &out.signals {
        formats::write_source_set(&put(dir.join(format!("{name}.csv"))), s)?;
        if out.manifest.experiment == ExperimentId::Audio {
            for (label, sig) in s.labels().iter().zip(s.signals()) {
                let p = put(dir.join(format!("{name}_{label}.wav")));
                crate::wav::write_wav(&p, &sig.real_part(), sig.sample_rate().round() as u32, true)?;
            }
        }
    }
    for (stem, desc) in &out.scenes {
        let scene = desc.build()?;
        for p in formats::export_scene(dir, stem, desc, &scene)? {
            put(p);
        }
    }
    let manifest_path = dir.join("manifest.json");
    paths.push(manifest_path.clone());
    out.manifest.outputs = paths
        .iter()
        .map(|p| p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()))
        .collect();
    formats::write_json(&manifest_path, &out.manifest)?;
    Ok(paths)
}

/// Reads a manifest and reruns its configuration echo.
pub fn rerun_manifest(path: &Path) -> Result<RunOutput> {
    let m: RunManifest = formats::read_json(path)?;
    if m.config.experiment != m.experiment {
        return Err(format_err("manifest", "experiment id does not match its config"));
    }
    run(&m.config)
}
