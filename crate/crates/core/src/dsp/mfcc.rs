use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{DspError, FeatureSequence, Modality, Waveform};

/// Framing and filterbank settings. Defaults: 32 ms Hann window, 20 ms hop at
/// 16 kHz, 512-point FFT, 26 HTK mel bands over 0–8 kHz, 20 orthonormal DCT-II
/// coefficients including c0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub target_rate: u32,
    pub window_len: f64,
    pub hop: f64,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub fft_size: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            target_rate: 16_000,
            window_len: 0.032,
            hop: 0.020,
            n_mels: 26,
            n_coeffs: 20,
            fft_size: 512,
            f_min: 0.0,
            f_max: 8_000.0,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_samples(&self) -> usize {
        (self.window_len * self.target_rate as f64).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop * self.target_rate as f64).round() as usize
    }

    pub fn frame_rate(&self) -> f64 {
        self.target_rate as f64 / self.hop_samples() as f64
    }

    /// Frames produced for `len` samples (`None` if shorter than one window).
    pub fn frame_count(&self, len: usize) -> Option<usize> {
        let w = self.window_samples();
        (len >= w).then(|| (len - w) / self.hop_samples() + 1)
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let w = self.window_samples();
        let bad = |msg: String| Err(DspError::InvalidSignal(format!("mfcc config: {msg}")));
        if w == 0 || self.hop_samples() == 0 {
            return bad("window and hop must be at least one sample".into());
        }
        if w > self.fft_size {
            return bad(format!("window of {w} samples exceeds fft size {}", self.fft_size));
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return bad(format!("{} coefficients from {} mel bands", self.n_coeffs, self.n_mels));
        }
        if !(self.f_min >= 0.0 && self.f_max > self.f_min && self.f_max <= self.target_rate as f64 / 2.0) {
            return bad(format!("mel range {}..{} Hz", self.f_min, self.f_max));
        }
        if !(self.log_floor > 0.0) {
            return bad("log floor must be positive".into());
        }
        Ok(())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-mel filters on the `fft_size / 2 + 1` rfft bins, `[n_mels][bins]`.
pub fn mel_filterbank(cfg: &MfccConfig) -> Vec<Vec<f64>> {
    let bins = cfg.fft_size / 2 + 1;
    let (lo, hi) = (hz_to_mel(cfg.f_min), hz_to_mel(cfg.f_max));
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = cfg.target_rate as f64 / cfg.fft_size as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let up = (f - l) / (c - l);
                    let down = (r - f) / (r - c);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

fn check_input(w: &Waveform, cfg: &MfccConfig) -> Result<usize, DspError> {
    cfg.validate()?;
    if w.rate() != cfg.target_rate {
        return Err(DspError::InvalidSignal(format!(
            "mfcc expects {} Hz audio, got {} Hz",
            cfg.target_rate,
            w.rate()
        )));
    }
    cfg.frame_count(w.len()).ok_or(DspError::TooShort {
        len: w.len(),
        window: cfg.window_samples(),
    })
}

/// Log mel-band energies of every frame, `[frames][n_mels]`.
pub fn mel_log_energies(w: &Waveform, cfg: &MfccConfig) -> Result<Vec<Vec<f64>>, DspError> {
    let frames = check_input(w, cfg)?;
    let win_len = cfg.window_samples();
    let hop = cfg.hop_samples();
    let window = hann(win_len);
    let bank = mel_filterbank(cfg);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_size);
    let bins = cfg.fft_size / 2 + 1;
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    let mut mag = vec![0.0; bins];
    let x = w.samples();

    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let seg = &x[t * hop..t * hop + win_len];
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < win_len {
                Complex::new(seg[i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (m, b) in mag.iter_mut().zip(&buf) {
            *m = b.norm();
        }
        out.push(
            bank.iter()
                .map(|filter| {
                    let e: f64 = filter.iter().zip(&mag).map(|(a, b)| a * b).sum();
                    (e + cfg.log_floor).ln()
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Orthonormal DCT-II of `x`, first `n_out` coefficients.
fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Hann window → |FFT| → mel filterbank → log → DCT-II, keeping `n_coeffs`.
pub fn mfcc(w: &Waveform, cfg: &MfccConfig) -> Result<FeatureSequence, DspError> {
    let energies = mel_log_energies(w, cfg)?;
    let data = energies.iter().flat_map(|e| dct2(e, cfg.n_coeffs)).collect();
    FeatureSequence::new(data, cfg.n_coeffs, cfg.frame_rate(), Modality::AudioMfcc)
}
