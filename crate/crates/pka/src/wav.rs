//! 16-bit PCM WAV read/write via `hound`.

use std::path::Path;

use pka_core::signal::Signal;

use crate::error::{Error, Result};

/// Raw first-channel samples scaled to `[-1, 1)`, plus the sample rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, f64)> {
    let wrap = |source| Error::Wav { path: path.to_path_buf(), source };
    let mut reader = hound::WavReader::open(path).map_err(wrap)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::WavFormat {
            path: path.to_path_buf(),
            detail: format!("{:?} {}-bit (only 16-bit PCM is accepted)", spec.sample_format, spec.bits_per_sample),
        });
    }
    let channels = spec.channels.max(1) as usize;
    let mut out = Vec::with_capacity(reader.len() as usize / channels);
    for (i, s) in reader.samples::<i16>().enumerate() {
        let s = s.map_err(wrap)?;
        if i % channels == 0 {
            out.push(f64::from(s) / 32768.0);
        }
    }
    Ok((out, f64::from(spec.sample_rate)))
}

/// Writes mono 16-bit PCM. With `normalize` the peak is scaled to 0.9;
/// otherwise samples are clipped to `[-1, 1]`.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32, normalize: bool) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |source| Error::Wav { path: path.to_path_buf(), source };
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if normalize && peak > 0.0 { 0.9 / peak } else { 1.0 };
    let mut w = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in samples {
        let v = (s * gain).clamp(-1.0, 1.0) * 32767.0;
        w.write_sample(v.round() as i16).map_err(wrap)?;
    }
    w.finalize().map_err(wrap)
}

/// Reads a segment of a WAV file, optionally resamples it, and standardizes
/// it to zero mean and unit variance.
pub fn ingest_wav(path: &Path, offset: f64, duration: Option<f64>, target_rate: Option<f64>) -> Result<Signal> {
    if !(offset >= 0.0) || duration.is_some_and(|d| !(d > 0.0)) {
        return Err(Error::Config("offset must be ≥ 0 and duration > 0".into()));
    }
    let (raw, fs) = read_wav(path)?;
    let start = ((offset * fs).round() as usize).min(raw.len());
    let end = match duration {
        Some(d) => (start + (d * fs).round() as usize).min(raw.len()),
        None => raw.len(),
    };
    if end <= start {
        return Err(Error::Core(pka_core::Error::InvalidArgument("empty WAV segment".into())));
    }
    let mut sig = Signal::from_real(&raw[start..end], fs)?;
    if let Some(rate) = target_rate {
        if rate != fs {
            sig = sig.resampled(rate)?;
        }
    }
    Ok(sig.standardized()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pka_core::metrics::correlation;
    use pka_core::signal::gen_sine;

    #[test]
    fn sine_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let s = gen_sine(440.0, 16_000.0, 0.25, 0.3).unwrap();
        write_wav(&path, &s.real_part(), 16_000, true).unwrap();
        let back = ingest_wav(&path, 0.0, None, None).unwrap();
        assert_eq!(back.len(), s.len());
        let orig = s.standardized().unwrap();
        assert!(correlation(orig.samples(), back.samples()).unwrap() >= 0.999);
    }

    #[test]
    fn segment_length_and_constant_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noise.wav");
        let x: Vec<f64> = (0..8000).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        write_wav(&path, &x, 8000, false).unwrap();
        let seg = ingest_wav(&path, 0.25, Some(0.5), None).unwrap();
        assert!((seg.len() as f64 - 4000.0).abs() <= 1.0);
        let half = ingest_wav(&path, 0.0, Some(0.5), Some(4000.0)).unwrap();
        assert!((half.len() as f64 - 2000.0).abs() <= 1.0);

        let flat = dir.path().join("flat.wav");
        write_wav(&flat, &[0.25; 500], 8000, false).unwrap();
        assert!(ingest_wav(&flat, 0.0, None, None).is_err());
        assert!(ingest_wav(&path, 2.0, None, None).is_err());
    }

    #[test]
    fn rejects_float_wav() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = hound::WavSpec { channels: 1, sample_rate: 8000, bits_per_sample: 32, sample_format: hound::SampleFormat::Float };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::WavFormat { .. })));
    }
}
