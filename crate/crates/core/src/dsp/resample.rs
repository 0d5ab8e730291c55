//! Rational-ratio decimation through a Blackman-windowed sinc low-pass.

use std::f64::consts::PI;

use super::{DspError, Waveform};

/// Passband edge as a fraction of the output Nyquist frequency.
const CUTOFF_FRACTION: f64 = 0.95;
/// Sinc zero crossings kept on each side of the centre tap.
const ZERO_CROSSINGS: f64 = 24.0;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    let p = PI * (x + 1.0);
    0.42 - 0.5 * p.cos() + 0.08 * (2.0 * p).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// One tap row per output phase; row `p` holds the weights for input offsets
/// `-(half - 1) ..= half` around `floor(n * down / up)`.
struct Polyphase {
    up: u64,
    down: u64,
    half: usize,
    rows: Vec<Vec<f64>>,
}

impl Polyphase {
    fn new(from: u32, to: u32) -> Self {
        let g = gcd(from as u64, to as u64);
        let (up, down) = (to as u64 / g, from as u64 / g);
        // cutoff in cycles per input sample
        let fc = CUTOFF_FRACTION * 0.5 * to as f64 / from as f64;
        let half_width = ZERO_CROSSINGS / (2.0 * fc);
        let half = half_width.ceil() as usize;
        let rows = (0..up)
            .map(|phase| {
                let frac = phase as f64 / up as f64;
                let mut row: Vec<f64> = (0..2 * half)
                    .map(|i| {
                        let j = i as f64 - (half as f64 - 1.0);
                        let tau = frac - j;
                        if tau.abs() >= half_width {
                            0.0
                        } else {
                            2.0 * fc * sinc(2.0 * fc * tau) * blackman(tau / half_width)
                        }
                    })
                    .collect();
                // unit DC gain in every phase
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                row
            })
            .collect();
        Self { up, down, half, rows }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n_out = ((x.len() as u64 * self.up + self.down / 2) / self.down) as usize;
        let len = x.len() as i64;
        (0..n_out)
            .map(|n| {
                let pos = n as u64 * self.down;
                let base = (pos / self.up) as i64;
                let row = &self.rows[(pos % self.up) as usize];
                let start = base - (self.half as i64 - 1);
                let mut acc = 0.0;
                for (i, &h) in row.iter().enumerate() {
                    let k = start + i as i64;
                    if k >= 0 && k < len {
                        acc += h * x[k as usize];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Low-pass filters at `0.95 * target_rate / 2` and decimates to `target_rate`.
/// Samples beyond the signal edges are treated as zero.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform, DspError> {
    if target_rate == 0 {
        return Err(DspError::InvalidSignal("target rate must be positive".into()));
    }
    if target_rate > w.rate() {
        return Err(DspError::Unsupported(format!(
            "upsampling from {} Hz to {target_rate} Hz",
            w.rate()
        )));
    }
    if target_rate == w.rate() {
        return Ok(w.clone());
    }
    let filter = Polyphase::new(w.rate(), target_rate);
    Waveform::new(filter.apply(w.samples()), target_rate)
}
