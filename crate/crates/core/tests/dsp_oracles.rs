use std::f64::consts::PI;

use breathauth::dsp::{mel_log_energies, mfcc, pad_center, resample, MfccConfig, Waveform};
use proptest::prelude::*;

fn sine(freq: f64, amp: f64, rate: u32, secs: f64) -> Vec<f64> {
    let n = (secs * rate as f64).round() as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin()).collect()
}

/// Magnitude of the DFT of `x` at an arbitrary frequency, normalised so a unit sine reads 1.
fn dft_mag(x: &[f64], freq: f64, rate: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let ph = 2.0 * PI * freq * n as f64 / rate;
        re += v * ph.cos();
        im -= v * ph.sin();
    }
    2.0 * (re * re + im * im).sqrt() / x.len() as f64
}

fn brute_dft_bins(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n / 2 + 1)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let ph = 2.0 * PI * (k * i) as f64 / n as f64;
                re += v * ph.cos();
                im -= v * ph.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

#[test]
fn resampled_sine_peaks_at_its_frequency() {
    let w = Waveform::new(sine(1000.0, 0.8, 44_100, 0.3), 44_100).unwrap();
    let out = resample(&w, 16_000).unwrap();
    // 1600 interior samples → 10 Hz bins, 1 kHz at bin 100
    let seg = &out.samples()[1600..3200];
    let bins = brute_dft_bins(seg);
    let peak = bins
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert!((peak as i64 - 100).abs() <= 1, "peak bin {peak}");
}

#[test]
fn band_limited_content_is_preserved_within_five_percent() {
    let tones = [(300.0, 0.2), (1200.0, 0.15), (2500.0, 0.1), (3700.0, 0.3)];
    let secs = 0.5;
    let n = (secs * 44_100.0) as usize;
    let mut x = vec![0.0; n];
    for &(f, a) in &tones {
        for (v, s) in x.iter_mut().zip(sine(f, a, 44_100, secs)) {
            *v += s;
        }
    }
    let w = Waveform::new(x.clone(), 44_100).unwrap();
    let out = resample(&w, 16_000).unwrap();
    // identical 0.2 s windows (integer periods of every tone) away from the edges
    let xin = &x[6615..6615 + 8820];
    let xout = &out.samples()[2400..2400 + 3200];
    for &(f, a) in &tones {
        let mi = dft_mag(xin, f, 44_100.0);
        let mo = dft_mag(xout, f, 16_000.0);
        assert!((mi - a).abs() < 1e-6, "input oracle off at {f} Hz");
        assert!((mo - mi).abs() / mi < 0.05, "{f} Hz: in {mi} out {mo}");
    }
}

#[test]
fn content_above_output_nyquist_is_rejected() {
    let w = Waveform::new(sine(12_000.0, 1.0, 44_100, 0.3), 44_100).unwrap();
    let out = resample(&w, 16_000).unwrap();
    let interior = &out.samples()[400..out.len() - 400];
    let rms = (interior.iter().map(|v| v * v).sum::<f64>() / interior.len() as f64).sqrt();
    // a unit sine has rms 0.707; require at least 40 dB of attenuation
    assert!(rms < 0.707e-2, "alias rms {rms}");
}

fn oracle_filterbank(n_mels: usize, fft: usize, rate: f64, fmax: f64) -> Vec<Vec<f64>> {
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let top = mel(fmax);
    let pts: Vec<f64> = (0..n_mels + 2).map(|i| inv(top * i as f64 / (n_mels + 1) as f64)).collect();
    (0..n_mels)
        .map(|m| {
            (0..fft / 2 + 1)
                .map(|k| {
                    let f = k as f64 * rate / fft as f64;
                    if f <= pts[m] || f >= pts[m + 2] {
                        0.0
                    } else if f <= pts[m + 1] {
                        (f - pts[m]) / (pts[m + 1] - pts[m])
                    } else {
                        (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1])
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn sine_energy_peaks_in_the_band_covering_its_frequency() {
    let cfg = MfccConfig::default();
    let x = sine(1000.0, 0.5, 16_000, 0.5);
    let w = Waveform::new(x.clone(), 16_000).unwrap();
    let energies = mel_log_energies(&w, &cfg).unwrap();
    let bank = oracle_filterbank(26, 512, 16_000.0, 8_000.0);
    let frames = energies.len();
    for t in 1..frames - 1 {
        let seg = &x[t * 320..t * 320 + 512];
        let win: Vec<f64> = seg
            .iter()
            .enumerate()
            .map(|(i, v)| v * (0.5 - 0.5 * (2.0 * PI * i as f64 / 512.0).cos()))
            .collect();
        let mag = brute_dft_bins(&win);
        let oracle: Vec<f64> = bank
            .iter()
            .map(|f| (f.iter().zip(&mag).map(|(a, b)| a * b).sum::<f64>() + 1e-10).ln())
            .collect();
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let (got, want) = (argmax(&energies[t]), argmax(&oracle));
        assert_eq!(got, want, "frame {t}");
        // the winning band's support contains 1 kHz (bin 32)
        assert!(bank[want][32] > 0.0);
        // FFT vs direct sum: compare linear band energies relative to the peak band
        let peak = oracle[want].exp();
        for (a, b) in energies[t].iter().zip(&oracle) {
            assert!((a.exp() - b.exp()).abs() < 1e-10 * peak);
        }
    }
}

#[test]
fn mfcc_is_bit_deterministic() {
    let x: Vec<f64> = (0..20_000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0 - 0.5).collect();
    let w = Waveform::new(x, 16_000).unwrap();
    let a = mfcc(&w, &MfccConfig::default()).unwrap();
    let b = mfcc(&w, &MfccConfig::default()).unwrap();
    let bits = |s: &breathauth::dsp::FeatureSequence| s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

proptest! {
    #[test]
    fn frame_count_matches_sliding_window_enumeration(window in 1usize..600, hop in 1usize..400, extra in 0usize..4000) {
        let len = window + extra;
        let cfg = MfccConfig {
            window_len: window as f64 / 16_000.0,
            hop: hop as f64 / 16_000.0,
            ..MfccConfig::default()
        };
        prop_assume!(cfg.window_samples() == window && cfg.hop_samples() == hop);
        let mut starts = 0;
        let mut s = 0;
        while s + window <= len {
            starts += 1;
            s += hop;
        }
        prop_assert_eq!(cfg.frame_count(len), Some(starts));
    }

    #[test]
    fn mfcc_frame_count_on_random_lengths(len in 512usize..6000) {
        let w = Waveform::new(vec![0.01; len], 16_000).unwrap();
        let f = mfcc(&w, &MfccConfig::default()).unwrap();
        prop_assert_eq!(f.frames(), (len - 512) / 320 + 1);
    }

    #[test]
    fn pad_then_strip_recovers_samples(x in proptest::collection::vec(-1.0f64..1.0, 1..200), extra in 0usize..100) {
        let w = Waveform::new(x.clone(), 10).unwrap();
        let target = (x.len() + extra) as f64 / 10.0;
        let p = pad_center(&w, target).unwrap();
        prop_assert_eq!(p.len(), x.len() + extra);
        let left = extra / 2;
        prop_assert!(p.samples()[..left].iter().all(|&v| v == 0.0));
        prop_assert!(p.samples()[left + x.len()..].iter().all(|&v| v == 0.0));
        prop_assert_eq!(&p.samples()[left..left + x.len()], x.as_slice());
    }
}
