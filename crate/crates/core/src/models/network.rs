use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ArchConfig, CnnLstmConfig, ModelConfig, ModelError, TcnConfig};
use crate::autodiff::{glorot_uniform, Graph, Parameter, Scalar, Tensor, Var};
use crate::dataset::InstanceFeatures;
use crate::dsp::{FeatureSequence, FeatureStats};

/// Pre-softmax scores and the pre-logit embedding of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub logits: Vec<f64>,
    pub embedding: Vec<f64>,
}

/// Network inputs as `[B, T, C]` tensors. A branch the mode does not use is `None`.
pub struct Inputs<T> {
    pub audio: Option<Tensor<T>>,
    pub motion: Option<Tensor<T>>,
}

/// Graph handles produced by one forward pass.
pub struct Forward {
    /// One per model parameter, in [`Model::params`] order.
    pub params: Vec<Var>,
    pub logits: Var,
    pub embedding: Var,
    /// Per-frame output of the last sequence layer (`[B, T', m]`).
    pub sequence: Var,
}

/// Dropout switch and randomness for a forward pass.
pub struct ForwardMode<'a> {
    pub training: bool,
    pub rng: Option<&'a mut dyn RngCore>,
}

impl ForwardMode<'_> {
    pub fn eval() -> Self {
        Self { training: false, rng: None }
    }
}

impl<'a> ForwardMode<'a> {
    pub fn train(rng: &'a mut dyn RngCore) -> Self {
        Self {
            training: true,
            rng: Some(rng),
        }
    }
}

/// A network plus the feature standardisation it was trained with.
#[derive(Debug, Clone)]
pub struct Model<T> {
    config: ModelConfig,
    params: Vec<Parameter<T>>,
    audio_stats: FeatureStats,
    motion_stats: FeatureStats,
    classes: Vec<String>,
    trained: bool,
}

struct Builder<'r, T> {
    params: Vec<Parameter<T>>,
    rng: &'r mut ChaCha8Rng,
}

impl<T: Scalar> Builder<'_, T> {
    fn glorot(&mut self, name: String, shape: &[usize], fan_in: usize, fan_out: usize) {
        let v = glorot_uniform(shape, fan_in, fan_out, self.rng);
        self.params.push(Parameter::new(name, v));
    }

    fn zeros(&mut self, name: String, shape: &[usize]) {
        self.params.push(Parameter::new(name, Tensor::zeros(shape)));
    }

    fn conv(&mut self, prefix: &str, out: usize, inp: usize, k: usize) {
        self.glorot(format!("{prefix}.w"), &[out, inp, k], inp * k, out * k);
        self.zeros(format!("{prefix}.b"), &[out]);
    }

    /// Direction `v`, magnitude `g` initialised to `|v|` so the first effective filter equals `v`.
    fn weight_normed_conv(&mut self, prefix: &str, out: usize, inp: usize, k: usize) {
        let v: Tensor<T> = glorot_uniform(&[out, inp, k], inp * k, out * k, self.rng);
        let per = inp * k;
        let g = Tensor::from_fn(&[out], |f| {
            let sq: T = v.data()[f * per..(f + 1) * per].iter().map(|&x| x * x).sum();
            sq.sqrt()
        });
        self.params.push(Parameter::new(format!("{prefix}.v"), v));
        self.params.push(Parameter::new(format!("{prefix}.g"), g));
        self.zeros(format!("{prefix}.b"), &[out]);
    }

    fn lstm(&mut self, prefix: &str, inp: usize, hidden: usize) {
        self.glorot(format!("{prefix}.w_ih"), &[inp, 4 * hidden], inp, 4 * hidden);
        self.glorot(format!("{prefix}.w_hh"), &[hidden, 4 * hidden], hidden, 4 * hidden);
        // gate order i, f, g, o; forget bias starts at 1
        let b = Tensor::from_fn(&[4 * hidden], |j| {
            if (hidden..2 * hidden).contains(&j) {
                T::one()
            } else {
                T::zero()
            }
        });
        self.params.push(Parameter::new(format!("{prefix}.b"), b));
    }

    fn linear(&mut self, prefix: &str, inp: usize, out: usize) {
        self.glorot(format!("{prefix}.w"), &[inp, out], inp, out);
        self.zeros(format!("{prefix}.b"), &[out]);
    }

    fn tcn_stage(&mut self, prefix: &str, inp: usize, out: usize, cfg: &TcnConfig) {
        let mut c = inp;
        for (i, _) in cfg.dilations.iter().enumerate() {
            let p = format!("{prefix}.block{i}");
            self.weight_normed_conv(&format!("{p}.conv"), out, c, cfg.kernel);
            if c != out {
                self.conv(&format!("{p}.residual"), out, c, 1);
            }
            c = out;
        }
    }
}

/// Binds parameters to graph leaves in creation order and hands them out by name.
struct Bound<'m> {
    names: Vec<&'m str>,
    vars: Vec<Var>,
}

impl Bound<'_> {
    fn get(&self, name: &str) -> Result<Var, ModelError> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| ModelError::Checkpoint(format!("parameter {name} missing from model")))
    }

    fn has(&self, name: &str) -> bool {
        self.names.contains(&name)
    }
}

impl<T: Scalar> Model<T> {
    /// Glorot-initialised network from `seed`; standardisation starts as the identity.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Builder {
            params: Vec::new(),
            rng: &mut rng,
        };
        let mode = config.mode;
        let branches = [
            ("audio", config.audio_channels, mode.uses_audio()),
            ("motion", config.motion_channels, mode.uses_motion()),
        ];
        let n = config.n_subjects;
        match &config.arch {
            ArchConfig::CnnLstm(c) => {
                for (name, ch, used) in branches {
                    if used {
                        b.conv(&format!("{name}.conv"), c.n_filters, ch, c.kernel);
                    }
                }
                b.lstm("lstm", c.n_filters * mode.branches(), c.lstm_hidden);
                b.linear("head", c.lstm_hidden, n);
            }
            ArchConfig::Tcn(c) => {
                for (name, ch, used) in branches {
                    if used {
                        b.tcn_stage(&format!("{name}.tcn"), ch, c.stage1_filters, c);
                    }
                }
                b.tcn_stage("fused.tcn", c.stage1_filters * mode.branches(), c.stage2_filters, c);
                b.linear("head", c.stage2_filters, n);
            }
        }
        let params = b.params;
        Ok(Self {
            audio_stats: FeatureStats::identity(config.audio_channels),
            motion_stats: FeatureStats::identity(config.motion_channels),
            config,
            params,
            classes: Vec::new(),
            trained: false,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Parameter<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter<T>] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.value().len()).sum()
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.embedding_dim()
    }

    /// Subject id of each output class, empty until set by training.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn set_classes(&mut self, classes: Vec<String>) -> Result<(), ModelError> {
        if classes.len() != self.config.n_subjects {
            return Err(ModelError::Config(format!(
                "{} class names for {} outputs",
                classes.len(),
                self.config.n_subjects
            )));
        }
        self.classes = classes;
        Ok(())
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    pub fn audio_stats(&self) -> &FeatureStats {
        &self.audio_stats
    }

    pub fn motion_stats(&self) -> &FeatureStats {
        &self.motion_stats
    }

    pub fn set_stats(&mut self, audio: FeatureStats, motion: FeatureStats) -> Result<(), ModelError> {
        if audio.mean.len() != self.config.audio_channels || motion.mean.len() != self.config.motion_channels {
            return Err(ModelError::Shape(format!(
                "standardisation for {}+{} channels, model expects {}+{}",
                audio.mean.len(),
                motion.mean.len(),
                self.config.audio_channels,
                self.config.motion_channels
            )));
        }
        self.audio_stats = audio;
        self.motion_stats = motion;
        Ok(())
    }

    /// Standardises and stacks a batch. Every instance must have the same frame count.
    pub fn inputs(&self, batch: &[&InstanceFeatures]) -> Result<Inputs<T>, ModelError> {
        let first = batch
            .first()
            .ok_or_else(|| ModelError::Shape("empty batch".into()))?;
        let frames = first.audio.frames();
        let stack = |get: &dyn Fn(&InstanceFeatures) -> &FeatureSequence,
                     stats: &FeatureStats,
                     expected: usize|
         -> Result<Tensor<T>, ModelError> {
            let mut data = Vec::with_capacity(batch.len() * frames * expected);
            for f in batch {
                let seq = get(f);
                if seq.channels() != expected {
                    return Err(ModelError::Shape(format!(
                        "{:?} input has {} channels, model expects {expected}",
                        seq.modality(),
                        seq.channels()
                    )));
                }
                if seq.frames() != frames {
                    return Err(ModelError::Shape(format!(
                        "batch mixes {} and {} frames",
                        frames,
                        seq.frames()
                    )));
                }
                let std = stats.apply(seq)?;
                data.extend(std.data().iter().map(|&v| T::of(v)));
            }
            Ok(Tensor::from_vec(&[batch.len(), frames, expected], data)?)
        };
        let mode = self.config.mode;
        Ok(Inputs {
            audio: if mode.uses_audio() {
                Some(stack(&|f| &f.audio, &self.audio_stats, self.config.audio_channels)?)
            } else {
                None
            },
            motion: if mode.uses_motion() {
                Some(stack(&|f| &f.motion, &self.motion_stats, self.config.motion_channels)?)
            } else {
                None
            },
        })
    }

    /// Records the network on `g`. Parameters become leaves that require
    /// gradients only when training.
    pub fn forward(&self, g: &mut Graph<T>, inputs: Inputs<T>, mut mode: ForwardMode<'_>) -> Result<Forward, ModelError> {
        let m = self.config.mode;
        let params: Vec<Var> = self
            .params
            .iter()
            .map(|p| g.leaf(p.value().clone(), mode.training))
            .collect();
        let bound = Bound {
            names: self.params.iter().map(|p| p.name()).collect(),
            vars: params.clone(),
        };
        let take = |t: Option<Tensor<T>>, needed: bool, what: &str| -> Result<Option<Tensor<T>>, ModelError> {
            match (t, needed) {
                (Some(t), true) => Ok(Some(t)),
                (_, false) => Ok(None),
                (None, true) => Err(ModelError::Shape(format!("{m} model needs {what} input"))),
            }
        };
        let audio = take(inputs.audio, m.uses_audio(), "audio")?;
        let motion = take(inputs.motion, m.uses_motion(), "motion")?;
        if let (Some(a), Some(b)) = (&audio, &motion) {
            if a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1) {
                return Err(ModelError::Shape(format!(
                    "multimodal inputs are not aligned: audio {:?}, motion {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        let mut branches: Vec<(&str, Var)> = Vec::new();
        if let Some(a) = audio {
            branches.push(("audio", g.input(a)));
        }
        if let Some(b) = motion {
            branches.push(("motion", g.input(b)));
        }

        let (sequence, embedding) = match &self.config.arch {
            ArchConfig::CnnLstm(c) => cnn_lstm(g, &bound, &branches, c)?,
            ArchConfig::Tcn(c) => tcn(g, &bound, &branches, c, &mut mode)?,
        };
        let logits = g.linear(embedding, bound.get("head.w")?, bound.get("head.b")?)?;
        Ok(Forward {
            params,
            logits,
            embedding,
            sequence,
        })
    }

    /// Inference over a batch, dropout off.
    pub fn outputs(&self, batch: &[&InstanceFeatures]) -> Result<Vec<ModelOutput>, ModelError> {
        let inputs = self.inputs(batch)?;
        let mut g = Graph::new();
        let fwd = self.forward(&mut g, inputs, ForwardMode::eval())?;
        let logits = g.value(fwd.logits);
        let emb = g.value(fwd.embedding);
        let (n, m) = (logits.dim(1), emb.dim(1));
        Ok((0..batch.len())
            .map(|i| ModelOutput {
                logits: logits.data()[i * n..(i + 1) * n].iter().map(|v| v.to_f64_lossy()).collect(),
                embedding: emb.data()[i * m..(i + 1) * m].iter().map(|v| v.to_f64_lossy()).collect(),
            })
            .collect())
    }

    pub fn output(&self, features: &InstanceFeatures) -> Result<ModelOutput, ModelError> {
        Ok(self.outputs(&[features])?.remove(0))
    }

    /// Embedding of one instance. The model must have been trained.
    pub fn embed(&self, features: &InstanceFeatures) -> Result<Vec<f64>, ModelError> {
        self.embed_batch(&[features]).map(|mut v| v.remove(0))
    }

    pub fn embed_batch(&self, batch: &[&InstanceFeatures]) -> Result<Vec<Vec<f64>>, ModelError> {
        if !self.trained {
            return Err(ModelError::Untrained);
        }
        Ok(self.outputs(batch)?.into_iter().map(|o| o.embedding).collect())
    }
}

fn cnn_lstm<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound<'_>,
    branches: &[(&str, Var)],
    c: &CnnLstmConfig,
) -> Result<(Var, Var), ModelError> {
    let mut fused: Option<Var> = None;
    for &(name, x) in branches {
        let w = p.get(&format!("{name}.conv.w"))?;
        let b = p.get(&format!("{name}.conv.b"))?;
        let y = g.conv1d_valid(x, w, Some(b), c.stride)?;
        let y = g.relu(y)?;
        fused = Some(match fused {
            None => y,
            Some(f) => g.concat_channels(f, y)?,
        });
    }
    let x = fused.ok_or_else(|| ModelError::Shape("no input branches".into()))?;
    let h = g.lstm(x, p.get("lstm.w_ih")?, p.get("lstm.w_hh")?, p.get("lstm.b")?)?;
    let last = g.last_step(h)?;
    Ok((h, last))
}

fn tcn_stage<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound<'_>,
    prefix: &str,
    mut x: Var,
    c: &TcnConfig,
    mode: &mut ForwardMode<'_>,
) -> Result<Var, ModelError> {
    for (i, &d) in c.dilations.iter().enumerate() {
        let blk = format!("{prefix}.block{i}");
        let w = g.weight_norm(p.get(&format!("{blk}.conv.v"))?, p.get(&format!("{blk}.conv.g"))?)?;
        let y = g.conv1d_causal(x, w, Some(p.get(&format!("{blk}.conv.b"))?), d)?;
        let y = g.relu(y)?;
        let y = match mode.rng.as_deref_mut() {
            Some(rng) if mode.training => g.spatial_dropout(y, c.dropout, true, rng)?,
            _ => y,
        };
        let residual = if p.has(&format!("{blk}.residual.w")) {
            let w = p.get(&format!("{blk}.residual.w"))?;
            let b = p.get(&format!("{blk}.residual.b"))?;
            g.conv1d_causal(x, w, Some(b), 1)?
        } else {
            x
        };
        x = g.add(y, residual)?;
    }
    Ok(x)
}

fn tcn<T: Scalar>(
    g: &mut Graph<T>,
    p: &Bound<'_>,
    branches: &[(&str, Var)],
    c: &TcnConfig,
    mode: &mut ForwardMode<'_>,
) -> Result<(Var, Var), ModelError> {
    if mode.training && c.dropout > 0.0 && mode.rng.is_none() {
        return Err(ModelError::Config("training with dropout needs a random source".into()));
    }
    let mut fused: Option<Var> = None;
    for &(name, x) in branches {
        let y = tcn_stage(g, p, &format!("{name}.tcn"), x, c, mode)?;
        fused = Some(match fused {
            None => y,
            Some(f) => g.concat_channels(f, y)?,
        });
    }
    let x = fused.ok_or_else(|| ModelError::Shape("no input branches".into()))?;
    let seq = tcn_stage(g, p, "fused.tcn", x, c, mode)?;
    let last = g.last_step(seq)?;
    Ok((seq, last))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
