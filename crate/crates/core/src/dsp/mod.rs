//! Signal preprocessing: anti-aliased decimation, centre zero-padding, MFCC
//! extraction, frame alignment and per-channel standardisation.

mod io;
mod mfcc;
mod resample;
mod signal;

pub use io::{read_motion_csv, read_wav, wav_len, write_motion_csv, write_wav, MOTION_CSV_HEADER};
pub use mfcc::{mel_filterbank, mel_log_energies, mfcc, MfccConfig};
pub use resample::resample;
pub use signal::{
    align, pad_center, FeatureSequence, FeatureStats, Modality, MotionTrace, Padded, Waveform, MOTION_CHANNELS,
};

/// Native microphone rate of the capture device.
pub const AUDIO_RATE: u32 = 44_100;
/// Accelerometer / gyroscope rate.
pub const MOTION_RATE: f64 = 50.0;

#[derive(Debug, thiserror::Error)]
pub enum DspError {
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("input of {len} samples is longer than the {target}-sample target; clip or reject the instance")]
    TooLong { len: usize, target: usize },
    #[error("input of {len} samples is shorter than one {window}-sample window")]
    TooShort { len: usize, window: usize },
    #[error("frame-rate mismatch: {0} vs {1} frames/s")]
    RateMismatch(f64, f64),
    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
