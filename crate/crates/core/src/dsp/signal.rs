use serde::{Deserialize, Serialize};

use super::DspError;

pub const MOTION_CHANNELS: usize = 6;

/// Mono audio, amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, rate: u32) -> Result<Self, DspError> {
        if rate == 0 {
            return Err(DspError::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(DspError::InvalidSignal(format!("non-finite audio sample at {i}")));
        }
        Ok(Self { samples, rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate(&self) -> u32 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Six-axis chest motion: accelerometer x/y/z in g, gyroscope x/y/z in deg/s.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrace {
    samples: Vec<[f64; MOTION_CHANNELS]>,
    rate: f64,
}

impl MotionTrace {
    pub fn new(samples: Vec<[f64; MOTION_CHANNELS]>, rate: f64) -> Result<Self, DspError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(DspError::InvalidSignal(format!("motion rate {rate} must be positive")));
        }
        if let Some(i) = samples.iter().position(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(DspError::InvalidSignal(format!("non-finite motion sample at {i}")));
        }
        Ok(Self { samples, rate })
    }

    pub fn samples(&self) -> &[[f64; MOTION_CHANNELS]] {
        &self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    /// Raw samples as a frame sequence (no resampling: the sensor rate is the frame rate).
    pub fn to_features(&self) -> Result<FeatureSequence, DspError> {
        let flat = self.samples.iter().flatten().copied().collect();
        FeatureSequence::new(flat, MOTION_CHANNELS, self.rate, Modality::Motion)
    }
}

/// Signals that can be centre-padded with zeros.
pub trait Padded: Sized {
    fn sample_count(&self) -> usize;
    fn sample_rate(&self) -> f64;
    fn with_zero_pad(&self, left: usize, right: usize) -> Self;
}

impl Padded for Waveform {
    fn sample_count(&self) -> usize {
        self.samples.len()
    }

    fn sample_rate(&self) -> f64 {
        self.rate as f64
    }

    fn with_zero_pad(&self, left: usize, right: usize) -> Self {
        let mut samples = vec![0.0; left];
        samples.extend_from_slice(&self.samples);
        samples.resize(left + self.samples.len() + right, 0.0);
        Self { samples, rate: self.rate }
    }
}

impl Padded for MotionTrace {
    fn sample_count(&self) -> usize {
        self.samples.len()
    }

    fn sample_rate(&self) -> f64 {
        self.rate
    }

    fn with_zero_pad(&self, left: usize, right: usize) -> Self {
        let mut samples = vec![[0.0; MOTION_CHANNELS]; left];
        samples.extend_from_slice(&self.samples);
        samples.resize(left + self.samples.len() + right, [0.0; MOTION_CHANNELS]);
        Self { samples, rate: self.rate }
    }
}

/// Zero-pads `x` to `round(target_duration * rate)` samples with the original centred.
/// An odd amount of padding puts the extra zero on the right.
pub fn pad_center<S: Padded>(x: &S, target_duration: f64) -> Result<S, DspError> {
    let target = (target_duration * x.sample_rate()).round() as usize;
    let len = x.sample_count();
    if len > target {
        return Err(DspError::TooLong { len, target });
    }
    let total = target - len;
    let left = total / 2;
    Ok(x.with_zero_pad(left, total - left))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    AudioMfcc,
    Motion,
}

/// `T × F` frame matrix at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    data: Vec<f64>,
    channels: usize,
    frame_rate: f64,
    modality: Modality,
}

impl FeatureSequence {
    pub fn new(data: Vec<f64>, channels: usize, frame_rate: f64, modality: Modality) -> Result<Self, DspError> {
        if channels == 0 || data.is_empty() || data.len() % channels != 0 {
            return Err(DspError::InvalidSignal(format!(
                "{} values do not form frames of {channels} channels",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(DspError::InvalidSignal(format!("non-finite feature at flat index {i}")));
        }
        Ok(Self {
            data,
            channels,
            frame_rate,
            modality,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn truncated(&self, frames: usize) -> Self {
        Self {
            data: self.data[..frames * self.channels].to_vec(),
            ..self.clone()
        }
    }
}

/// Truncates both sequences from the end to the shorter length.
pub fn align(a: &FeatureSequence, b: &FeatureSequence) -> Result<(FeatureSequence, FeatureSequence), DspError> {
    if (a.frame_rate - b.frame_rate).abs() > 1e-9 * a.frame_rate.abs().max(1.0) {
        return Err(DspError::RateMismatch(a.frame_rate, b.frame_rate));
    }
    let n = a.frames().min(b.frames());
    Ok((a.truncated(n), b.truncated(n)))
}

/// Per-channel mean and standard deviation, fitted on training sequences only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    /// Pools every frame of every sequence. Non-positive deviations are replaced by 1.
    pub fn fit(seqs: &[&FeatureSequence]) -> Result<Self, DspError> {
        let first = seqs
            .first()
            .ok_or_else(|| DspError::InvalidSignal("no sequences to fit statistics on".into()))?;
        let c = first.channels;
        if let Some(bad) = seqs.iter().find(|s| s.channels != c) {
            return Err(DspError::ChannelMismatch { expected: c, got: bad.channels });
        }
        let n: usize = seqs.iter().map(|s| s.frames()).sum();
        let mut mean = vec![0.0; c];
        for s in seqs {
            for frame in s.data.chunks(c) {
                for (m, &v) in mean.iter_mut().zip(frame) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; c];
        for s in seqs {
            for frame in s.data.chunks(c) {
                for ((acc, &v), &m) in var.iter_mut().zip(frame).zip(&mean) {
                    *acc += (v - m) * (v - m);
                }
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &FeatureSequence) -> Result<FeatureSequence, DspError> {
        if x.channels != self.mean.len() || self.std.len() != self.mean.len() {
            return Err(DspError::ChannelMismatch {
                expected: self.mean.len(),
                got: x.channels,
            });
        }
        let mut data = x.data.clone();
        for frame in data.chunks_mut(x.channels) {
            for ((v, &m), &s) in frame.iter_mut().zip(&self.mean).zip(&self.std) {
                let s = if s > 0.0 { s } else { 1.0 };
                *v = (*v - m) / s;
            }
        }
        Ok(FeatureSequence { data, ..x.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(v: &[f64], rate: u32) -> Waveform {
        Waveform::new(v.to_vec(), rate).unwrap()
    }

    fn seq(data: Vec<f64>, c: usize, modality: Modality) -> FeatureSequence {
        FeatureSequence::new(data, c, 50.0, modality).unwrap()
    }

    #[test]
    fn pad_even_and_odd() {
        assert_eq!(pad_center(&wave(&[1.0, 2.0], 1), 4.0).unwrap().samples(), &[0.0, 1.0, 2.0, 0.0]);
        assert_eq!(pad_center(&wave(&[1.0, 2.0, 3.0], 1), 4.0).unwrap().samples(), &[1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn pad_normal_breath_motion() {
        let n = (2.12f64 * 50.0).round() as usize;
        let m = MotionTrace::new((0..n).map(|i| [i as f64 + 1.0; 6]).collect(), 50.0).unwrap();
        let p = pad_center(&m, 4.5).unwrap();
        assert_eq!(p.len(), 225);
        assert_eq!(n, 106);
        let left = (225 - 106) / 2;
        assert_eq!(left, 59);
        assert!(p.samples()[..left].iter().all(|s| *s == [0.0; 6]));
        assert_eq!(&p.samples()[left..left + n], m.samples());
        assert!(p.samples()[left + n..].iter().all(|s| *s == [0.0; 6]));
    }

    #[test]
    fn pad_refuses_to_truncate() {
        let err = pad_center(&wave(&[1.0; 5], 1), 4.0).unwrap_err();
        assert!(matches!(err, DspError::TooLong { len: 5, target: 4 }));
        // boundary equality is allowed
        assert_eq!(pad_center(&wave(&[1.0; 4], 1), 4.0).unwrap().len(), 4);
    }

    #[test]
    fn align_truncates_to_shorter() {
        let a = seq(vec![0.0; 224 * 20], 20, Modality::AudioMfcc);
        let b = seq(vec![1.0; 225 * 6], 6, Modality::Motion);
        let (a2, b2) = align(&a, &b).unwrap();
        assert_eq!((a2.frames(), a2.channels()), (224, 20));
        assert_eq!((b2.frames(), b2.channels()), (224, 6));
        let a = seq(vec![0.0; 124 * 20], 20, Modality::AudioMfcc);
        let b = seq(vec![1.0; 125 * 6], 6, Modality::Motion);
        let (a2, b2) = align(&a, &b).unwrap();
        assert_eq!((a2.frames(), b2.frames()), (124, 124));
        let (a3, b3) = align(&a2, &b2).unwrap();
        assert_eq!((a3, b3), (a2, b2));
    }

    #[test]
    fn align_rejects_rate_mismatch() {
        let a = seq(vec![0.0; 20], 20, Modality::AudioMfcc);
        let b = FeatureSequence::new(vec![0.0; 6], 6, 100.0, Modality::Motion).unwrap();
        assert!(matches!(align(&a, &b), Err(DspError::RateMismatch(..))));
    }

    #[test]
    fn standardize_cases() {
        let x = seq(vec![2.0, 7.0, 4.0, 7.0], 2, Modality::Motion);
        let id = FeatureStats::identity(2);
        assert_eq!(id.apply(&x).unwrap(), x);
        let stats = FeatureStats {
            mean: vec![3.0, 0.0],
            std: vec![1.0, 1.0],
        };
        let y = stats.apply(&x).unwrap();
        assert_eq!(y.frame(0)[0], -1.0);
        assert_eq!(y.frame(1)[0], 1.0);

        let fitted = FeatureStats::fit(&[&x]).unwrap();
        assert_eq!(fitted.mean, vec![3.0, 7.0]);
        assert_eq!(fitted.std, vec![1.0, 1.0]); // constant channel: std 0 replaced by 1
        let z = fitted.apply(&x).unwrap();
        assert_eq!(z.frame(0)[1], 0.0);
        assert_eq!(z.frame(1)[1], 0.0);

        let wrong = seq(vec![0.0; 3], 3, Modality::Motion);
        assert!(matches!(fitted.apply(&wrong), Err(DspError::ChannelMismatch { .. })));
    }
}
