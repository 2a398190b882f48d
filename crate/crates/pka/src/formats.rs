//! On-disk formats.
//!
//! * Signals and data matrices: CSV with a header `sample_rate=<fs>,<cols>`
//!   and one row per sample, first column the sample index. A real channel
//!   is one column named by its label, a complex channel two columns
//!   `<label>.re` and `<label>.im`.
//! * Tensors: CSV rows `i1,i2,i3,i4,re,im` (zero-based, row-major order),
//!   or binary: `PKAT`, `u32` version (1), `u32` dim, then `dim⁴` records of
//!   four `u32` indices and two `f64` parts, all little-endian.
//! * Unmixing matrices: CSV with one row per vector component and columns
//!   `w<k>.re,w<k>.im`, plus a JSON sidecar (same stem) holding the
//!   algorithm, per-vector diagnostics and objective trace.
//! * Separation reports: one JSON object, or one CSV row with columns
//!   `algorithm,seed,isi,acc,sdr_mean,sdr_min` followed by the extra metrics.
//! * Radar scenes: one data-matrix CSV per component plus a JSON descriptor
//!   from which the scene regenerates bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use pka_core::linalg::CMatrix;
use pka_core::metrics::SeparationReport;
use pka_core::radar::{build_scenario, JammingKind, RadarScene, UlaConfig, WaveformParams};
use pka_core::separators::{Algorithm, UnmixingMatrix, VectorDiagnostics};
use pka_core::signal::{ComplexDataMatrix, SourceSet};
use pka_core::tensor::FourthOrderTensor;
use pka_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::{format_err, io_err, Result};

const TENSOR_MAGIC: &[u8; 4] = b"PKAT";
const TENSOR_VERSION: u32 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn parse_f64(s: &str, what: &'static str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| format_err(what, format!("not a number: {s:?}")))
}

fn parse_usize(s: &str, what: &'static str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| format_err(what, format!("not an index: {s:?}")))
}

/// Writes rows of `x` as channels named by `labels`. Channels are written
/// as two columns unless `real` is set, in which case imaginary parts must
/// be zero.
pub fn write_channels(path: &Path, x: &ComplexDataMatrix, labels: &[String], real: bool) -> Result<()> {
    if labels.len() != x.channels() {
        return Err(pka_core::Error::DimensionMismatch { expected: x.channels(), actual: labels.len() }.into());
    }
    if real && !x.is_real() {
        return Err(pka_core::Error::ComplexInput.into());
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec![format!("sample_rate={}", x.sample_rate())];
    for l in labels {
        if real {
            header.push(l.clone());
        } else {
            header.push(format!("{l}.re"));
            header.push(format!("{l}.im"));
        }
    }
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for j in 0..x.samples() {
        rec.clear();
        rec.push(j.to_string());
        for i in 0..x.channels() {
            let v = x.row(i)[j];
            rec.push(v.re.to_string());
            if !real {
                rec.push(v.im.to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a file written by [`write_channels`]; returns the data and labels.
pub fn read_channels(path: &Path) -> Result<(ComplexDataMatrix, Vec<String>)> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let fs = header
        .first()
        .and_then(|h| h.strip_prefix("sample_rate="))
        .ok_or_else(|| format_err("channel CSV", "first header field must be sample_rate=<Hz>"))?;
    let fs = parse_f64(fs, "channel CSV")?;
    // (label, re column, optional im column)
    let mut layout: Vec<(String, usize, Option<usize>)> = Vec::new();
    let mut c = 1;
    while c < header.len() {
        let h = &header[c];
        match h.strip_suffix(".re") {
            Some(base) if header.get(c + 1).map(String::as_str) == Some(&format!("{base}.im")) => {
                layout.push((base.to_owned(), c, Some(c + 1)));
                c += 2;
            }
            _ => {
                layout.push((h.clone(), c, None));
                c += 1;
            }
        }
    }
    if layout.is_empty() {
        return Err(format_err("channel CSV", "no channels"));
    }
    let mut rows: Vec<Vec<C64>> = vec![Vec::new(); layout.len()];
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(format_err("channel CSV", "ragged row"));
        }
        for (k, (_, re, im)) in layout.iter().enumerate() {
            let re = parse_f64(&rec[*re], "channel CSV")?;
            let im = match im {
                Some(c) => parse_f64(&rec[*c], "channel CSV")?,
                None => 0.0,
            };
            rows[k].push(C64::new(re, im));
        }
    }
    let l = rows[0].len();
    let flat: Vec<C64> = rows.into_iter().flatten().collect();
    let m = CMatrix::from_vec(layout.len(), l, flat)?;
    let labels = layout.into_iter().map(|(l, _, _)| l).collect();
    Ok((ComplexDataMatrix::new(m, fs)?, labels))
}

pub fn write_source_set(path: &Path, s: &SourceSet) -> Result<()> {
    write_channels(path, &s.to_data()?, s.labels(), s.is_real())
}

pub fn read_source_set(path: &Path) -> Result<SourceSet> {
    let (x, labels) = read_channels(path)?;
    Ok(SourceSet::from_data(&x, labels)?)
}

pub fn write_tensor_csv(path: &Path, t: &FourthOrderTensor) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["i1", "i2", "i3", "i4", "re", "im"])?;
    let n = t.dim();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = t.get(a, b, c, d);
                    w.write_record([
                        a.to_string(),
                        b.to_string(),
                        c.to_string(),
                        d.to_string(),
                        v.re.to_string(),
                        v.im.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn tensor_from_records(records: Vec<([usize; 4], C64)>) -> Result<FourthOrderTensor> {
    let n = records.iter().flat_map(|(i, _)| i.iter().copied()).max().map_or(0, |m| m + 1);
    if n == 0 || records.len() != n.pow(4) {
        return Err(format_err("tensor", format!("{} entries do not fill a tensor of dim {n}", records.len())));
    }
    let mut entries = vec![None; records.len()];
    for (i, v) in records {
        let k = ((i[0] * n + i[1]) * n + i[2]) * n + i[3];
        if entries[k].replace(v).is_some() {
            return Err(format_err("tensor", format!("duplicate entry {i:?}")));
        }
    }
    let entries = entries.into_iter().map(|v| v.expect("count matched and no duplicates")).collect();
    Ok(FourthOrderTensor::from_entries(n, entries)?)
}

pub fn read_tensor_csv(path: &Path) -> Result<FourthOrderTensor> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 6 {
            return Err(format_err("tensor CSV", "expected 6 columns"));
        }
        let mut idx = [0; 4];
        for (k, slot) in idx.iter_mut().enumerate() {
            *slot = parse_usize(&rec[k], "tensor CSV")?;
        }
        let v = C64::new(parse_f64(&rec[4], "tensor CSV")?, parse_f64(&rec[5], "tensor CSV")?);
        records.push((idx, v));
    }
    tensor_from_records(records)
}

pub fn write_tensor_binary(path: &Path, t: &FourthOrderTensor) -> Result<()> {
    let mut w = create(path)?;
    let n = t.dim();
    let mut buf = Vec::with_capacity(12 + n.pow(4) * 32);
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    for (k, v) in t.entries().iter().enumerate() {
        let idx = [k / (n * n * n), (k / (n * n)) % n, (k / n) % n, k % n];
        for i in idx {
            buf.extend_from_slice(&(i as u32).to_le_bytes());
        }
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf).and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn read_tensor_binary(path: &Path) -> Result<FourthOrderTensor> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(io_err(path))?;
    if bytes.len() < 12 || &bytes[..4] != TENSOR_MAGIC {
        return Err(format_err("tensor binary", "bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != TENSOR_VERSION {
        return Err(format_err("tensor binary", format!("unsupported version {}", u32_at(4))));
    }
    let n = u32_at(8) as usize;
    let count = n.checked_pow(4).ok_or_else(|| format_err("tensor binary", "dimension overflow"))?;
    if bytes.len() != 12 + count * 32 {
        return Err(format_err("tensor binary", "length does not match dimension"));
    }
    let records = (0..count)
        .map(|k| {
            let o = 12 + k * 32;
            let idx = [u32_at(o) as usize, u32_at(o + 4) as usize, u32_at(o + 8) as usize, u32_at(o + 12) as usize];
            (idx, C64::new(f64_at(o + 16), f64_at(o + 24)))
        })
        .collect();
    tensor_from_records(records)
}

#[derive(Serialize, Deserialize)]
struct UnmixingSidecar {
    algorithm: Algorithm,
    dim: usize,
    vectors: usize,
    diagnostics: Vec<VectorDiagnostics>,
    objective_trace: Vec<f64>,
}

/// Path of the JSON sidecar next to an unmixing-matrix CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_unmixing(csv_path: &Path, w: &UnmixingMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(create(csv_path)?);
    let mut header = vec!["row".to_owned()];
    for k in 0..w.len() {
        header.push(format!("w{k}.re"));
        header.push(format!("w{k}.im"));
    }
    out.write_record(&header)?;
    for i in 0..w.dim() {
        let mut rec = vec![i.to_string()];
        for col in &w.columns {
            rec.push(col[i].re.to_string());
            rec.push(col[i].im.to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush().map_err(io_err(csv_path))?;
    let side = UnmixingSidecar {
        algorithm: w.algorithm,
        dim: w.dim(),
        vectors: w.len(),
        diagnostics: w.diagnostics.clone(),
        objective_trace: w.objective_trace.clone(),
    };
    write_json(&sidecar_path(csv_path), &side)
}

pub fn read_unmixing(csv_path: &Path) -> Result<UnmixingMatrix> {
    let side: UnmixingSidecar = read_json(&sidecar_path(csv_path))?;
    let mut r = csv::Reader::from_reader(open(csv_path)?);
    if r.headers()?.len() != 1 + 2 * side.vectors {
        return Err(format_err("unmixing CSV", "column count does not match sidecar"));
    }
    let mut columns = vec![Vec::with_capacity(side.dim); side.vectors];
    for rec in r.records() {
        let rec = rec?;
        for (k, col) in columns.iter_mut().enumerate() {
            let re = parse_f64(&rec[1 + 2 * k], "unmixing CSV")?;
            let im = parse_f64(&rec[2 + 2 * k], "unmixing CSV")?;
            col.push(C64::new(re, im));
        }
    }
    if columns.iter().any(|c| c.len() != side.dim) {
        return Err(format_err("unmixing CSV", "row count does not match sidecar"));
    }
    Ok(UnmixingMatrix {
        columns,
        algorithm: side.algorithm,
        diagnostics: side.diagnostics,
        objective_trace: side.objective_trace,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// CSV header and row for a report. Extra metrics follow the fixed columns
/// in key order.
pub fn report_record(r: &SeparationReport) -> (Vec<String>, Vec<String>) {
    let mut header: Vec<String> =
        ["algorithm", "seed", "isi", "acc", "sdr_mean", "sdr_min"].iter().map(|s| s.to_string()).collect();
    let mut row = vec![
        r.algorithm.name().to_owned(),
        r.seed.to_string(),
        r.isi.to_string(),
        r.acc.to_string(),
        r.sdr_mean().to_string(),
        r.sdr_min().to_string(),
    ];
    for (k, v) in &r.extra {
        header.push(k.clone());
        row.push(v.to_string());
    }
    (header, row)
}

/// Everything needed to rebuild a [`RadarScene`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDescriptor {
    pub kind: JammingKind,
    pub delta_theta: f64,
    pub snr_db: f64,
    pub sir_db: f64,
    pub ula: UlaConfig,
    pub waveform: WaveformParams,
    pub seed: u64,
}

impl SceneDescriptor {
    pub fn build(&self) -> Result<RadarScene> {
        Ok(build_scenario(self.kind, self.delta_theta, self.snr_db, self.sir_db, &self.ula, &self.waveform, self.seed)?)
    }
}

/// Writes `<stem>.json` and `<stem>_{mixed,target,interference,noise}.csv`
/// into `dir`; returns the written paths.
pub fn export_scene(dir: &Path, stem: &str, desc: &SceneDescriptor, scene: &RadarScene) -> Result<Vec<PathBuf>> {
    let labels: Vec<String> = (0..scene.mixed.channels()).map(|i| format!("ch{i}")).collect();
    let mut paths = Vec::new();
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, desc)?;
    paths.push(json);
    for (name, m) in [
        ("mixed", &scene.mixed),
        ("target", &scene.target_component),
        ("interference", &scene.interference_component),
        ("noise", &scene.noise_component),
    ] {
        let p = dir.join(format!("{stem}_{name}.csv"));
        write_channels(&p, m, &labels, false)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Reads a scene component written by [`export_scene`].
pub fn read_scene_component(dir: &Path, stem: &str, component: &str) -> Result<ComplexDataMatrix> {
    Ok(read_channels(&dir.join(format!("{stem}_{component}.csv")))?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pka_core::signal::{gen_sine, gen_square, Signal};
    use pka_core::tensor::random_statistical_tensor;

    #[test]
    fn source_set_round_trip_real_and_complex() {
        let dir = tempfile::tempdir().unwrap();
        let s = SourceSet::new(
            vec![gen_sine(9.0, 1000.0, 0.5, 0.1).unwrap(), gen_square(8.0, 1000.0, 0.5).unwrap()],
            vec!["sine".into(), "square".into()],
        )
        .unwrap();
        let p = dir.path().join("s.csv");
        write_source_set(&p, &s).unwrap();
        assert_eq!(read_source_set(&p).unwrap(), s);

        let c = SourceSet::unlabeled(vec![
            Signal::new(vec![C64::new(0.1, -0.3), C64::new(1e-300, 2.5)], 7.5).unwrap(),
            Signal::new(vec![C64::new(-4.0, 0.0), C64::new(0.0, 1.0 / 3.0)], 7.5).unwrap(),
        ])
        .unwrap();
        write_source_set(&p, &c).unwrap();
        assert_eq!(read_source_set(&p).unwrap(), c);
    }

    #[test]
    fn tensor_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let t = random_statistical_tensor(3, 5, 2000).unwrap();
        let c = dir.path().join("t.csv");
        let b = dir.path().join("t.bin");
        write_tensor_csv(&c, &t).unwrap();
        write_tensor_binary(&b, &t).unwrap();
        assert_eq!(read_tensor_csv(&c).unwrap(), t);
        assert_eq!(read_tensor_binary(&b).unwrap(), t);
        std::fs::write(&b, b"PKAT\x01\0\0\0\x02\0\0\0").unwrap();
        assert!(read_tensor_binary(&b).is_err());
    }

    #[test]
    fn unmixing_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = random_statistical_tensor(3, 2, 2000).unwrap();
        let w = pka_core::separators::pka_best_effort(&t, 3, &Default::default()).unwrap();
        let p = dir.path().join("w.csv");
        write_unmixing(&p, &w).unwrap();
        assert!(sidecar_path(&p).exists());
        assert_eq!(read_unmixing(&p).unwrap(), w);
    }

    #[test]
    fn scene_regenerates_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let desc = SceneDescriptor {
            kind: JammingKind::Isrj,
            delta_theta: 1.0,
            snr_db: 10.0,
            sir_db: 0.0,
            ula: UlaConfig::default(),
            waveform: WaveformParams { pulse_width: 10e-6, ..WaveformParams::default() },
            seed: 3,
        };
        let scene = desc.build().unwrap();
        export_scene(dir.path(), "scene", &desc, &scene).unwrap();
        let back: SceneDescriptor = read_json(&dir.path().join("scene.json")).unwrap();
        assert_eq!(back, desc);
        assert_eq!(back.build().unwrap(), scene);
        let mixed = read_scene_component(dir.path(), "scene", "mixed").unwrap();
        assert_eq!(mixed, scene.mixed);
    }
}
