//! Seeded synthetic cohort. Audio is band-passed noise shaped by an inhale and
//! an exhale burst; motion is a slow chest-displacement curve on top of gravity.
//!
//! Subjects come in loose pairs that share most of their vocal profile, and a
//! second pairing, offset by one, shares most of the chest-motion profile. Each
//! modality alone therefore confuses some subjects the other one separates.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{BreathInstance, BreathType, DatasetError, DatasetManifest, InstanceRecord, InstanceSource};
use crate::dsp::{MotionTrace, Waveform, AUDIO_RATE, MOTION_CHANNELS, MOTION_RATE};

/// Share of the per-type duration variance explained by the subject.
const BETWEEN_SUBJECT_SHARE: f64 = 0.25;
const INSTANCES_PER_SESSION: usize = 3;
const AUDIO_GAIN: f64 = 0.12;

/// How many instances each subject gets per breath type.
#[derive(Debug, Clone, PartialEq)]
pub enum CountSpec {
    /// Uniform over the inclusive range, drawn independently per subject and type.
    Uniform { min: usize, max: usize },
    /// The same count for every type, one entry per subject.
    PerSubject(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub seed: u64,
    pub noise: f64,
    pub counts: CountSpec,
    pub breath_types: Vec<BreathType>,
}

impl SynthConfig {
    pub fn new(n_subjects: usize, seed: u64, noise: f64) -> Self {
        Self {
            n_subjects,
            seed,
            noise,
            counts: CountSpec::Uniform { min: 20, max: 61 },
            breath_types: BreathType::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Config(m));
        if self.n_subjects < 2 {
            return bad(format!("{} subject(s): verification needs at least 2", self.n_subjects));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise level {} must be finite and non-negative", self.noise));
        }
        if self.breath_types.is_empty() {
            return bad("no breath types requested".into());
        }
        match &self.counts {
            CountSpec::Uniform { min, max } if *min == 0 || min > max => bad(format!("count range [{min}, {max}]")),
            CountSpec::PerSubject(v) if v.len() != self.n_subjects => {
                bad(format!("{} counts for {} subjects", v.len(), self.n_subjects))
            }
            CountSpec::PerSubject(v) if v.contains(&0) => bad("every subject needs at least one instance".into()),
            _ => Ok(()),
        }
    }
}

/// Generative parameters of one synthetic subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectProfile {
    pub subject_id: String,
    /// Indexed in `BreathType::ALL` order.
    pub duration_mean: [f64; 3],
    pub duration_std: [f64; 3],
    pub formant_hz: [f64; 3],
    pub bandwidth_hz: [f64; 3],
    pub formant_gain: [f64; 3],
    /// One-pole low-pass coefficient in `[0, 1)`; larger is darker.
    pub tilt: f64,
    /// Inhale peak over exhale peak.
    pub inhale_ratio: f64,
    /// Fraction of the instance spent inhaling.
    pub inhale_fraction: f64,
    /// Silent gap between inhale and exhale, as a fraction of the instance.
    pub pause_fraction: f64,
    /// Device orientation: unit gravity vector in the sensor frame.
    pub gravity: [f64; 3],
    /// Accelerometer amplitudes in g, then gyroscope amplitudes in deg/s.
    pub motion_amp: [f64; MOTION_CHANNELS],
    pub motion_phase: [f64; MOTION_CHANNELS],
    pub noise: f64,
}

fn type_slot(t: BreathType) -> usize {
    match t {
        BreathType::Normal => 0,
        BreathType::Deep => 1,
        BreathType::Strong => 2,
    }
}

/// Loudness, formant shift and chest-motion scale of each breath type.
fn type_voice(t: BreathType) -> (f64, f64, f64) {
    match t {
        BreathType::Normal => (1.0, 1.0, 1.0),
        BreathType::Deep => (1.3, 0.95, 1.6),
        BreathType::Strong => (1.8, 1.1, 1.3),
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn signed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let v = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn unit_from_angles(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

impl SubjectProfile {
    fn sample<R: Rng>(rng: &mut R, subject_id: String, noise: f64) -> Self {
        let bands = [(250.0, 800.0), (900.0, 2200.0), (2400.0, 4500.0)];
        let mut formant_hz = [0.0; 3];
        let mut bandwidth_hz = [0.0; 3];
        let mut formant_gain = [0.0; 3];
        for j in 0..3 {
            formant_hz[j] = log_uniform(rng, bands[j].0, bands[j].1);
            bandwidth_hz[j] = log_uniform(rng, 60.0, 300.0);
            formant_gain[j] = rng.gen_range(0.2..1.0);
        }
        let theta = rng.gen_range(0.0..0.25);
        let phi = rng.gen_range(0.0..2.0 * PI);
        let mut motion_amp = [0.0; MOTION_CHANNELS];
        let mut motion_phase = [0.0; MOTION_CHANNELS];
        for c in 0..MOTION_CHANNELS {
            motion_amp[c] = if c < 3 {
                signed(rng, 0.01, 0.06)
            } else {
                signed(rng, 1.0, 8.0)
            };
            motion_phase[c] = rng.gen_range(-PI..PI);
        }
        Self {
            subject_id,
            duration_mean: [0.0; 3],
            duration_std: [0.0; 3],
            formant_hz,
            bandwidth_hz,
            formant_gain,
            tilt: rng.gen_range(0.2..0.85),
            inhale_ratio: rng.gen_range(0.3..0.9),
            inhale_fraction: rng.gen_range(0.3..0.5),
            pause_fraction: rng.gen_range(0.03..0.12),
            gravity: unit_from_angles(theta, phi),
            motion_amp,
            motion_phase,
            noise,
        }
    }

    /// Audio amplitude envelope at fraction `u` of the instance, peak 1 on the exhale.
    pub fn audio_envelope(&self, u: f64) -> f64 {
        let (q, g) = (self.inhale_fraction, self.pause_fraction);
        audio_envelope(u, q, g, self.inhale_ratio)
    }

    /// Time average of [`Self::audio_envelope`] over the instance.
    pub fn mean_audio_envelope(&self) -> f64 {
        let (q, g) = (self.inhale_fraction, self.pause_fraction);
        0.5 * (self.inhale_ratio * q + (1.0 - q - g))
    }

    /// Noise-free motion sample at fraction `u` of a breath of the given type.
    pub fn motion_template(&self, u: f64, breath_type: BreathType) -> [f64; MOTION_CHANNELS] {
        let scale = type_voice(breath_type).2;
        motion_sample(u, self.inhale_fraction, &self.gravity, &self.motion_amp, &self.motion_phase, scale)
    }
}

fn audio_envelope(u: f64, q: f64, g: f64, ratio: f64) -> f64 {
    if u < q {
        ratio * (PI * u / q).sin().powi(2)
    } else if u < q + g {
        0.0
    } else {
        let v = (u - q - g) / (1.0 - q - g);
        (PI * v.min(1.0)).sin().powi(2)
    }
}

/// Chest displacement (rises while inhaling, falls while exhaling) and its
/// derivative divided by pi.
fn displacement(u: f64, q: f64) -> (f64, f64) {
    if u < q {
        let a = PI * u / (2.0 * q);
        (a.sin().powi(2), (2.0 * a).sin() / (2.0 * q))
    } else {
        let a = PI * (u - q) / (2.0 * (1.0 - q));
        (a.cos().powi(2), -(2.0 * a).sin() / (2.0 * (1.0 - q)))
    }
}

fn motion_sample(
    u: f64,
    q: f64,
    gravity: &[f64; 3],
    amp: &[f64; MOTION_CHANNELS],
    phase: &[f64; MOTION_CHANNELS],
    scale: f64,
) -> [f64; MOTION_CHANNELS] {
    let (d, dd) = displacement(u, q);
    let mut out = [0.0; MOTION_CHANNELS];
    for c in 0..MOTION_CHANNELS {
        let (s, co) = phase[c].sin_cos();
        // accelerometers follow the displacement, gyroscopes its rate of change
        let shape = if c < 3 { co * d + s * dd } else { co * dd + s * d };
        out[c] = amp[c] * scale * shape + if c < 3 { gravity[c] } else { 0.0 };
    }
    out
}

/// RBJ band-pass biquad, 0 dB peak gain.
struct Biquad {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    fn bandpass(f0: f64, bw: f64, rate: f64) -> Self {
        let w0 = 2.0 * PI * f0 / rate;
        let alpha = w0.sin() * bw / (2.0 * f0);
        let a0 = 1.0 + alpha;
        Self {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finaliser over the combined words
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(a << 6).wrapping_add(a >> 2);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Audio twins are `(2i, 2i + 1)`, motion twins `(2i + 1, 2i + 2)` cyclically.
fn pair_profiles<R: Rng>(profiles: &mut [SubjectProfile], rng: &mut R) {
    let n = profiles.len();
    for a in (0..n.saturating_sub(1)).step_by(2) {
        let src = profiles[a].clone();
        let p = &mut profiles[a + 1];
        for j in 0..3 {
            p.formant_hz[j] = src.formant_hz[j] * lognormal_jitter(rng, 0.06);
            p.bandwidth_hz[j] = src.bandwidth_hz[j] * lognormal_jitter(rng, 0.12);
            p.formant_gain[j] = src.formant_gain[j] * lognormal_jitter(rng, 0.15);
        }
        p.tilt = (src.tilt + gauss(rng, 0.036)).clamp(0.0, 0.95);
        p.inhale_ratio = src.inhale_ratio * lognormal_jitter(rng, 0.09);
    }
    if n < 3 {
        return;
    }
    for a in (1..n).step_by(2) {
        let b = (a + 1) % n;
        let src = profiles[a].clone();
        let p = &mut profiles[b];
        let theta = src.gravity[2].clamp(-1.0, 1.0).acos() + gauss(rng, 0.009);
        let phi = src.gravity[1].atan2(src.gravity[0]) + gauss(rng, 0.009);
        p.gravity = unit_from_angles(theta, phi);
        for c in 0..MOTION_CHANNELS {
            p.motion_amp[c] = src.motion_amp[c] * lognormal_jitter(rng, 0.03);
            p.motion_phase[c] = src.motion_phase[c] + gauss(rng, 0.035);
        }
    }
}

fn lognormal_jitter<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    (sigma * z).exp()
}

fn gauss<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// A generated cohort. Signals are rendered on demand from per-instance seeds.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    config: SynthConfig,
    manifest: DatasetManifest,
    profiles: Vec<SubjectProfile>,
    subject_of: Vec<usize>,
    session_seed: Vec<u64>,
    instance_seed: Vec<u64>,
}

/// Cohort with the default breath types and per-type counts uniform in `[20, 61]`.
pub fn synth_generate(n_subjects: usize, seed: u64, noise: f64) -> Result<SyntheticCohort, DatasetError> {
    SyntheticCohort::generate(SynthConfig::new(n_subjects, seed, noise))
}

impl SyntheticCohort {
    pub fn generate(config: SynthConfig) -> Result<Self, DatasetError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let width = config.n_subjects.to_string().len().max(2);
        let mut profiles: Vec<SubjectProfile> = (0..config.n_subjects)
            .map(|s| SubjectProfile::sample(&mut rng, format!("s{:0width$}", s + 1), config.noise))
            .collect();
        pair_profiles(&mut profiles, &mut rng);

        for t in BreathType::ALL {
            let st = t.duration_stats();
            let z: Vec<f64> = (0..profiles.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let zbar = z.iter().sum::<f64>() / z.len() as f64;
            for (p, zi) in profiles.iter_mut().zip(&z) {
                p.duration_mean[type_slot(t)] = st.mean + (zi - zbar) * st.std * BETWEEN_SUBJECT_SHARE.sqrt();
                p.duration_std[type_slot(t)] = st.std * (1.0 - BETWEEN_SUBJECT_SHARE).sqrt();
            }
        }

        let mut records = Vec::new();
        let mut subject_of = Vec::new();
        let mut session_seed = Vec::new();
        let mut instance_seed = Vec::new();
        for (s, p) in profiles.iter().enumerate() {
            for &t in &config.breath_types {
                let n = match &config.counts {
                    CountSpec::Uniform { min, max } => rng.gen_range(*min..=*max),
                    CountSpec::PerSubject(v) => v[s],
                };
                let st = t.duration_stats();
                let dist = Normal::new(p.duration_mean[type_slot(t)], p.duration_std[type_slot(t)])
                    .map_err(|e| DatasetError::Config(e.to_string()))?;
                for k in 0..n {
                    let duration = dist.sample(&mut rng).clamp(st.min, st.max);
                    let session = k / INSTANCES_PER_SESSION;
                    let stem = format!("{}/sess{:02}/{}_{:03}", p.subject_id, session + 1, t, k);
                    records.push(InstanceRecord {
                        subject_id: p.subject_id.clone(),
                        session_id: format!("sess{:02}", session + 1),
                        breath_type: t,
                        duration_s: duration,
                        audio_path: format!("{stem}.wav"),
                        motion_path: format!("{stem}.csv"),
                    });
                    subject_of.push(s);
                    session_seed.push(mix(mix(config.seed, s as u64 + 1), 1_000 + session as u64));
                    instance_seed.push(rng.gen());
                }
            }
        }
        Ok(Self {
            manifest: DatasetManifest::new(records)?,
            config,
            profiles,
            subject_of,
            session_seed,
            instance_seed,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn profiles(&self) -> &[SubjectProfile] {
        &self.profiles
    }

    pub fn profile(&self, subject_id: &str) -> Option<&SubjectProfile> {
        self.profiles.iter().find(|p| p.subject_id == subject_id)
    }

    pub fn render(&self, index: usize) -> Result<BreathInstance, DatasetError> {
        let record = self
            .manifest
            .instances()
            .get(index)
            .ok_or_else(|| DatasetError::Config(format!("instance index {index} out of range")))?
            .clone();
        let p = &self.profiles[self.subject_of[index]];
        let noise = self.config.noise;
        let (gain, shift, motion_scale) = type_voice(record.breath_type);
        let mut session_rng = ChaCha8Rng::seed_from_u64(self.session_seed[index]);
        let mut rng = ChaCha8Rng::seed_from_u64(self.instance_seed[index]);

        // ---- audio
        let n = (record.duration_s * AUDIO_RATE as f64).round() as usize;
        let rate = AUDIO_RATE as f64;
        let mut filters: Vec<Biquad> = (0..3)
            .map(|j| {
                let f = (p.formant_hz[j] * shift * lognormal_jitter(&mut rng, 0.06 * noise)).min(0.45 * rate);
                Biquad::bandpass(f, p.bandwidth_hz[j], rate)
            })
            .collect();
        let gains: Vec<f64> = (0..3)
            .map(|j| p.formant_gain[j] * lognormal_jitter(&mut rng, 0.15 * noise))
            .collect();
        let tilt = (p.tilt + gauss(&mut rng, 0.05 * noise)).clamp(0.0, 0.95);
        let ratio = p.inhale_ratio * lognormal_jitter(&mut rng, 0.2 * noise);
        let mut lp = 0.0;
        let mut shaped = Vec::with_capacity(n);
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            let mut s = 0.1 * e;
            for (f, g) in filters.iter_mut().zip(&gains) {
                s += g * f.step(e);
            }
            lp = (1.0 - tilt) * s + tilt * lp;
            shaped.push(lp);
        }
        let rms = (shaped.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
        let rms = if rms > 0.0 { rms } else { 1.0 };
        let floor = 0.02 * noise;
        let audio: Vec<f64> = shaped
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let u = (i as f64 + 0.5) / n as f64;
                let env = audio_envelope(u, p.inhale_fraction, p.pause_fraction, ratio);
                AUDIO_GAIN * gain * env * s / rms + gauss(&mut rng, floor)
            })
            .collect();

        // ---- motion
        let m = (record.duration_s * MOTION_RATE).round() as usize;
        let g_theta = gauss(&mut session_rng, 0.5 * noise) + gauss(&mut rng, 0.15 * noise);
        let g_phi = gauss(&mut session_rng, 0.5 * noise) + gauss(&mut rng, 0.15 * noise);
        let theta = p.gravity[2].clamp(-1.0, 1.0).acos() + g_theta;
        let phi = p.gravity[1].atan2(p.gravity[0]) + g_phi;
        let gravity = unit_from_angles(theta, phi);
        let mut amp = p.motion_amp;
        let mut phase = p.motion_phase;
        for c in 0..MOTION_CHANNELS {
            amp[c] *= lognormal_jitter(&mut rng, 0.35 * noise);
            phase[c] += gauss(&mut rng, 0.3 * noise);
        }
        let sigma = [0.09 * noise, 0.09 * noise, 0.09 * noise, 9.0 * noise, 9.0 * noise, 9.0 * noise];
        let motion: Vec<[f64; MOTION_CHANNELS]> = (0..m)
            .map(|i| {
                let u = (i as f64 + 0.5) / m as f64;
                let mut s = motion_sample(u, p.inhale_fraction, &gravity, &amp, &phase, motion_scale);
                for (v, sd) in s.iter_mut().zip(sigma) {
                    *v += gauss(&mut rng, sd);
                }
                s
            })
            .collect();

        Ok(BreathInstance {
            audio: Waveform::new(audio, AUDIO_RATE)?,
            motion: MotionTrace::new(motion, MOTION_RATE)?,
            record,
        })
    }
}

impl InstanceSource for SyntheticCohort {
    fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    fn load(&self, index: usize) -> Result<BreathInstance, DatasetError> {
        self.render(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_abs(x: impl Iterator<Item = f64>) -> f64 {
        let (s, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v.abs(), n + 1));
        s / n as f64
    }

    #[test]
    fn generation_is_deterministic() {
        let a = synth_generate(3, 7, 0.5).unwrap();
        let b = synth_generate(3, 7, 0.5).unwrap();
        assert_eq!(a.manifest().to_json().unwrap(), b.manifest().to_json().unwrap());
        assert_eq!(a.render(5).unwrap(), b.render(5).unwrap());
        let c = synth_generate(3, 8, 0.5).unwrap();
        assert_ne!(a.manifest(), c.manifest());
    }

    #[test]
    fn too_few_subjects_is_an_error() {
        assert!(matches!(synth_generate(1, 0, 0.1), Err(DatasetError::Config(_))));
        assert!(synth_generate(2, 0, -1.0).is_err());
    }

    #[test]
    fn counts_and_durations_respect_their_ranges() {
        let c = synth_generate(20, 11, 0.2).unwrap();
        let m = c.manifest();
        assert_eq!(m.subjects().len(), 20);
        for s in m.subjects() {
            for t in BreathType::ALL {
                let n = m.count(s, t);
                assert!((20..=61).contains(&n), "{s} {t}: {n}");
            }
        }
        for r in m.instances() {
            let st = r.breath_type.duration_stats();
            assert!(r.duration_s >= st.min && r.duration_s <= st.max);
        }
    }

    #[test]
    fn signals_cover_the_annotated_span() {
        let c = synth_generate(2, 3, 1.0).unwrap();
        for i in [0, 17, 40] {
            let inst = c.render(i).unwrap();
            let d = inst.record.duration_s;
            assert!((inst.audio.duration() - d).abs() <= 1.0 / 44_100.0);
            assert!((inst.motion.duration() - d).abs() <= 0.02);
            assert!((inst.audio.duration() - inst.motion.duration()).abs() <= 0.02);
        }
    }

    #[test]
    fn noise_free_amplitudes_follow_the_profile() {
        let c = SyntheticCohort::generate(SynthConfig {
            counts: CountSpec::PerSubject(vec![4, 4, 4]),
            breath_types: vec![BreathType::Normal],
            ..SynthConfig::new(3, 21, 0.0)
        })
        .unwrap();
        let by_subject = |s: usize| -> Vec<BreathInstance> { (0..4).map(|k| c.render(s * 4 + k).unwrap()).collect() };
        let mut per_subject_motion = Vec::new();
        for s in 0..3 {
            let p = &c.profiles()[s];
            // band-passed Gaussian noise at unit RMS has mean |x| = sqrt(2 / pi)
            let expected = AUDIO_GAIN * p.mean_audio_envelope() * (2.0 / PI).sqrt();
            let insts = by_subject(s);
            for inst in &insts {
                let got = mean_abs(inst.audio.samples().iter().copied());
                assert!((got - expected).abs() / expected < 0.1, "subject {s}: {got} vs {expected}");
            }
            let motion: Vec<[f64; 6]> = insts
                .iter()
                .map(|inst| {
                    let mut out = [0.0; 6];
                    for (c, o) in out.iter_mut().enumerate() {
                        *o = mean_abs(inst.motion.samples().iter().map(|v| v[c]));
                    }
                    out
                })
                .collect();
            for pair in motion.windows(2) {
                for ch in 0..6 {
                    let (a, b) = (pair[0][ch], pair[1][ch]);
                    assert!((a - b).abs() / a.max(b) < 0.1, "subject {s} channel {ch}: {a} vs {b}");
                }
            }
            // template evaluated on a fine grid agrees with the rendered trace
            let fine = 10_000;
            for ch in 0..6 {
                let oracle = mean_abs(
                    (0..fine).map(|i| p.motion_template((i as f64 + 0.5) / fine as f64, BreathType::Normal)[ch]),
                );
                let got = motion[0][ch];
                assert!((got - oracle).abs() <= 0.1 * oracle, "channel {ch}: {got} vs {oracle}");
            }
            per_subject_motion.push(motion[0]);
        }
        let gap = |a: usize, b: usize| {
            (0..6)
                .map(|ch| {
                    let (x, y) = (per_subject_motion[a][ch], per_subject_motion[b][ch]);
                    (x - y).abs() / x.max(y)
                })
                .fold(0.0, f64::max)
        };
        // 1 and 2 are motion twins; 0 shares neither profile with 2
        assert!(gap(0, 1) > 0.1, "subjects 0 and 1 are indistinguishable");
        assert!(gap(0, 2) > 0.1, "subjects 0 and 2 are indistinguishable");
        assert!(gap(1, 2) < 0.1, "motion twins differ by {}", gap(1, 2));
    }

    #[test]
    fn envelope_average_matches_closed_form() {
        let c = synth_generate(2, 4, 0.0).unwrap();
        let p = &c.profiles()[1];
        let n = 200_000;
        let avg = (0..n).map(|i| p.audio_envelope((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((avg - p.mean_audio_envelope()).abs() < 1e-6);
    }

    #[test]
    fn session_ids_group_three_instances() {
        let c = synth_generate(2, 9, 0.1).unwrap();
        let first: Vec<&InstanceRecord> = c.manifest().instances().iter().take(7).collect();
        assert_eq!(first[0].session_id, "sess01");
        assert_eq!(first[2].session_id, "sess01");
        assert_eq!(first[3].session_id, "sess02");
        assert_eq!(first[6].session_id, "sess03");
        assert_eq!(first[4].id(), "s01/sess02/normal_004");
    }
}
