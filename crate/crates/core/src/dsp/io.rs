use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{DspError, MotionTrace, Waveform, MOTION_CHANNELS};

pub const MOTION_CSV_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];

fn fmt_err(path: &Path, msg: impl Into<String>) -> DspError {
    DspError::Format {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DspError {
    DspError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn hound_err(path: &Path, e: hound::Error) -> DspError {
    match e {
        hound::Error::IoError(source) => io_err(path, source),
        other => fmt_err(path, other.to_string()),
    }
}

/// Writes mono 16-bit PCM. Samples are clamped to `[-1, 1]`.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<(), DspError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    for &s in w.samples() {
        let q = (s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
        writer.write_sample(q).map_err(|e| hound_err(path, e))?;
    }
    writer.finalize().map_err(|e| hound_err(path, e))
}

fn check_spec(path: &Path, spec: &hound::WavSpec) -> Result<(), DspError> {
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(fmt_err(
            path,
            format!(
                "expected mono 16-bit PCM, got {} channel(s), {} bits {:?}",
                spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    Ok(())
}

pub fn read_wav(path: &Path) -> Result<Waveform, DspError> {
    let mut reader = hound::WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    check_spec(path, &spec)?;
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / i16::MAX as f64))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| hound_err(path, e))?;
    Waveform::new(samples, spec.sample_rate).map_err(|e| fmt_err(path, e.to_string()))
}

/// Sample count and rate from the header only.
pub fn wav_len(path: &Path) -> Result<(usize, u32), DspError> {
    let reader = hound::WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    check_spec(path, &spec)?;
    Ok((reader.duration() as usize, spec.sample_rate))
}

/// CSV with header `t,ax,ay,az,gx,gy,gz`; `t` is seconds from the first tick.
pub fn write_motion_csv(path: &Path, m: &MotionTrace) -> Result<(), DspError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| io_err(path, e);
    writeln!(out, "{}", MOTION_CSV_HEADER.join(",")).map_err(io)?;
    for (i, s) in m.samples().iter().enumerate() {
        write!(out, "{:.3}", i as f64 / m.rate()).map_err(io)?;
        for v in s {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_motion_csv(path: &Path) -> Result<MotionTrace, DspError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| fmt_err(path, e.to_string()))?;
    let header = reader.headers().map_err(|e| fmt_err(path, e.to_string()))?.clone();
    if header.len() != MOTION_CSV_HEADER.len() || header.iter().zip(MOTION_CSV_HEADER).any(|(a, b)| a.trim() != b) {
        return Err(fmt_err(
            path,
            format!(
                "schema error: header {:?}, expected {}",
                header.iter().collect::<Vec<_>>(),
                MOTION_CSV_HEADER.join(",")
            ),
        ));
    }
    let mut samples = Vec::new();
    let mut times = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| fmt_err(path, format!("schema error at row {}: {e}", row + 1)))?;
        if rec.len() != MOTION_CSV_HEADER.len() {
            return Err(fmt_err(
                path,
                format!("schema error at row {}: {} columns, expected 7", row + 1, rec.len()),
            ));
        }
        let parse = |i: usize| -> Result<f64, DspError> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| fmt_err(path, format!("row {} column {}: {e}", row + 1, MOTION_CSV_HEADER[i])))
        };
        times.push(parse(0)?);
        let mut s = [0.0; MOTION_CHANNELS];
        for (c, v) in s.iter_mut().enumerate() {
            *v = parse(c + 1)?;
        }
        samples.push(s);
    }
    let rate = match times.as_slice() {
        [t0, t1, ..] if t1 > t0 => (1.0 / (t1 - t0) * 1000.0).round() / 1000.0,
        [_, _, ..] => return Err(fmt_err(path, "timestamps are not increasing")),
        _ => super::MOTION_RATE,
    };
    MotionTrace::new(samples, rate).map_err(|e| fmt_err(path, e.to_string()))
}
