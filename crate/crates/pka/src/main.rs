use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pka_core::radar::JammingKind;
use pka_core::separators::{Algorithm, Direction};
use pka_tools::config::SweepAxis;
use pka_tools::experiments::write_outputs;
use pka_tools::{run, ExperimentConfig, ExperimentId};

#[derive(Parser)]
#[command(name = "pka", version, about = "Principal kurtosis analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvector recovery on random fourth-order statistical tensors.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_tensors: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        l_samples: Option<usize>,
        /// Comma-separated thresholds in [0, 1).
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
    },
    /// Sine and square wave mixtures.
    Waves {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sample_rate: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Audio mixtures from WAV files or the built-in speech surrogates.
    Audio {
        #[command(flatten)]
        common: Common,
        /// 16-bit PCM WAV file; repeat for each source.
        #[arg(long = "wav")]
        wavs: Vec<PathBuf>,
        #[arg(long)]
        offset: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        target_rate: Option<f64>,
    },
    /// SIR improvement against CSI or ISRJ jamming.
    Radar {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<JammingKind>,
        #[arg(long, value_parser = parse_axis)]
        axis: Option<SweepAxis>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[arg(long)]
        delta_theta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sir: Option<f64>,
        /// Whitened dimensions to keep (0 = largest eigenvalue gap).
        #[arg(long)]
        n_keep: Option<usize>,
        #[arg(long)]
        export_scene: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file mirroring the configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds, e.g. `0,3,7` or `0..20`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    /// Comma-separated: pka, deflation, cfastica, psa, jade.
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (1 = serial, 0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = parse_direction)]
    direction: Option<Direction>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also write separated signals for the first seed.
    #[arg(long)]
    export_signals: bool,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|_| format!("bad seed range {part:?}"))?;
            let b: u64 = b.parse().map_err(|_| format!("bad seed range {part:?}"))?;
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?);
        }
    }
    Ok(Seeds(out))
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| format!("unknown algorithm {s:?}"))
}

fn parse_kind(s: &str) -> Result<JammingKind, String> {
    JammingKind::parse(s).ok_or_else(|| format!("unknown jamming kind {s:?} (csi or isrj)"))
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "dtheta" => Ok(SweepAxis::Dtheta),
        "snr" => Ok(SweepAxis::Snr),
        "sir" => Ok(SweepAxis::Sir),
        _ => Err(format!("unknown axis {s:?} (dtheta, snr or sir)")),
    }
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "ascent" => Ok(Direction::Ascent),
        "descent" => Ok(Direction::Descent),
        _ => Err(format!("unknown direction {s:?}")),
    }
}

fn base_config(id: ExperimentId, common: &Common) -> pka_tools::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::new(id),
    };
    if common.config.is_some() && cfg.experiment != id {
        log::warn!("config file names experiment {:?}; running {:?}", cfg.experiment.name(), id.name());
    }
    cfg.experiment = id;
    if let Some(s) = &common.seeds {
        cfg.seeds = Some(s.0.clone());
    }
    if let Some(a) = &common.algorithms {
        cfg.algorithms = Some(a.clone());
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(d) = common.direction {
        cfg.pka.direction = Some(d);
    }
    if let Some(a) = common.alpha {
        cfg.pka.alpha = a;
    }
    if let Some(m) = common.max_iter {
        cfg.pka.max_iter = m;
    }
    cfg.export_signals |= common.export_signals;
    Ok(cfg)
}

fn build_config(cmd: Command) -> pka_tools::Result<ExperimentConfig> {
    Ok(match cmd {
        Command::Validate { common, n_tensors, dim, l_samples, thresholds } => {
            let mut c = base_config(ExperimentId::Validate, &common)?;
            let v = &mut c.validation;
            v.n_tensors = n_tensors.unwrap_or(v.n_tensors);
            v.dim = dim.unwrap_or(v.dim);
            v.l_samples = l_samples.unwrap_or(v.l_samples);
            if let Some(t) = thresholds {
                v.thresholds = t;
            }
            c
        }
        Command::Waves { common, sample_rate, duration } => {
            let mut c = base_config(ExperimentId::Waves, &common)?;
            c.waves.sample_rate = sample_rate.unwrap_or(c.waves.sample_rate);
            c.waves.duration = duration.unwrap_or(c.waves.duration);
            c
        }
        Command::Audio { common, wavs, offset, duration, target_rate } => {
            let mut c = base_config(ExperimentId::Audio, &common)?;
            if !wavs.is_empty() {
                c.audio.wavs = wavs;
            }
            c.audio.offset = offset.unwrap_or(c.audio.offset);
            c.audio.duration = duration.or(c.audio.duration);
            c.audio.target_rate = target_rate.or(c.audio.target_rate);
            c
        }
        Command::Radar { common, kind, axis, values, delta_theta, snr, sir, n_keep, export_scene } => {
            let mut c = base_config(ExperimentId::Radar, &common)?;
            let r = &mut c.radar;
            r.kind = kind.unwrap_or(r.kind);
            r.axis = axis.unwrap_or(r.axis);
            r.values = values.or(r.values.take());
            r.delta_theta = delta_theta.unwrap_or(r.delta_theta);
            r.snr_db = snr.unwrap_or(r.snr_db);
            r.sir_db = sir.unwrap_or(r.sir_db);
            r.n_keep = n_keep.or(r.n_keep);
            r.export_scene |= export_scene;
            c
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(cli.command).and_then(|cfg| {
        let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
        let mut out = run(&cfg)?;
        write_outputs(&mut out, &dir)?;
        println!("{} rows -> {}", out.results.len(), dir.join("results.csv").display());
        for line in summary_lines(&out.summary) {
            println!("{line}");
        }
        Ok(out.completed())
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some runs failed; see manifest.json");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn summary_lines(t: &pka_tools::Table) -> Vec<String> {
    let mut lines = vec![t.header.join("\t")];
    lines.extend(t.rows.iter().map(|r| r.join("\t")));
    lines
}
