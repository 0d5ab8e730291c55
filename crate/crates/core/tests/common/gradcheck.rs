//! Central finite-difference checks in double precision. Each check returns
//! the worst relative error over every differentiated entry.

use breathauth::autodiff::{Graph, Tensor, Var};
use breathauth::dataset::InstanceFeatures;
use breathauth::dsp::{FeatureSequence, Modality};
use breathauth::models::{ArchConfig, CnnLstmConfig, ForwardMode, Mode, Model, ModelConfig, TcnConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
/// Denominator floor. Central differences of an O(1) loss resolve about
/// 1e-16 / H = 1e-11 per ulp, so entries near 1e-9 (dead ReLU paths) are
/// compared on absolute error TOL * TINY = 1e-9 instead.
const TINY: f64 = 1e-5;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(TINY)
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

/// Values bounded away from the ReLU kink.
fn away_from_zero(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| {
        let v: f64 = rng.gen_range(0.1..1.0);
        if rng.gen_bool(0.5) { v } else { -v }
    })
}

/// Builds `loss(inputs)` on a fresh graph; all inputs are differentiated.
fn check<F>(inputs: Vec<Tensor<f64>>, build: F) -> f64
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Var,
{
    let eval = |vals: &[Tensor<f64>]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = vals.iter().map(|t| g.leaf(t.clone(), true)).collect();
        let loss = build(&mut g, &vars);
        g.value(loss).item()
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let loss = build(&mut g, &vars);
    let grads = g.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v).map(|t| t.data().to_vec()).unwrap_or_else(|| vec![0.0; inputs[i].len()]);
        for j in 0..inputs[i].len() {
            let mut plus = inputs.clone();
            plus[i].data_mut()[j] += H;
            let mut minus = inputs.clone();
            minus[i].data_mut()[j] -= H;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(analytic[j], numeric));
        }
    }
    worst
}

/// Random linear probe so every output entry contributes to the loss.
fn probe(g: &mut Graph<f64>, y: Var, seed: u64) -> Var {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random(g.value(y).shape(), &mut rng);
    g.weighted_sum(y, &w).unwrap()
}

pub fn valid_convolution() -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    [1, 2, 3]
        .into_iter()
        .map(|stride| {
            let inputs = vec![random(&[2, 30, 3], &mut rng), random(&[4, 3, 5], &mut rng), random(&[4], &mut rng)];
            let e = check(inputs, |g, v| {
                let y = g.conv1d_valid(v[0], v[1], Some(v[2]), stride).unwrap();
                probe(g, y, 10)
            });
            (format!("conv1d_valid stride {stride}"), e)
        })
        .collect()
}

pub fn causal_convolution() -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    [1, 2, 4, 8]
        .into_iter()
        .map(|dilation| {
            let inputs = vec![random(&[2, 30, 3], &mut rng), random(&[4, 3, 3], &mut rng), random(&[4], &mut rng)];
            let e = check(inputs, |g, v| {
                let y = g.conv1d_causal(v[0], v[1], Some(v[2]), dilation).unwrap();
                probe(g, y, 11)
            });
            (format!("conv1d_causal dilation {dilation}"), e)
        })
        .collect()
}

pub fn weight_norm() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inputs = vec![random(&[4, 3, 5], &mut rng), random(&[4], &mut rng)];
    check(inputs, |g, v| {
        let w = g.weight_norm(v[0], v[1]).unwrap();
        probe(g, w, 12)
    })
}

pub fn lstm() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (c, h) = (5, 8);
    let inputs = vec![
        random(&[2, 30, c], &mut rng),
        random(&[c, 4 * h], &mut rng).map(|v| 0.5 * v),
        random(&[h, 4 * h], &mut rng).map(|v| 0.5 * v),
        random(&[4 * h], &mut rng),
    ];
    check(inputs, |g, v| {
        let y = g.lstm(v[0], v[1], v[2], v[3]).unwrap();
        probe(g, y, 13)
    })
}

pub fn relu_add_concat_last_step() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inputs = vec![away_from_zero(&[2, 30, 3], &mut rng), random(&[2, 30, 3], &mut rng), random(&[2, 30, 4], &mut rng)];
    check(inputs, |g, v| {
        let r = g.relu(v[0]).unwrap();
        let s = g.add(r, v[1]).unwrap();
        let cat = g.concat_channels(s, v[2]).unwrap();
        let last = g.last_step(cat).unwrap();
        probe(g, last, 14)
    })
}

pub fn linear_cross_entropy() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inputs = vec![random(&[5, 8], &mut rng), random(&[8, 4], &mut rng), random(&[4], &mut rng)];
    check(inputs, |g, v| {
        let z = g.linear(v[0], v[1], v[2]).unwrap();
        g.softmax_cross_entropy(z, &[0, 3, 1, 1, 2]).unwrap()
    })
}

pub fn spatial_dropout() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inputs = vec![random(&[3, 30, 4], &mut rng)];
    check(inputs, |g, v| {
        let mut mask_rng = ChaCha8Rng::seed_from_u64(99);
        let y = g.spatial_dropout(v[0], 0.3, true, &mut mask_rng).unwrap();
        probe(g, y, 15)
    })
}

/// Every primitive check, labelled.
pub fn primitives() -> Vec<(String, f64)> {
    let mut all = valid_convolution();
    all.extend(causal_convolution());
    all.push(("weight_norm".into(), weight_norm()));
    all.push(("lstm".into(), lstm()));
    all.push(("relu/add/concat/last_step".into(), relu_add_concat_last_step()));
    all.push(("linear/softmax_cross_entropy".into(), linear_cross_entropy()));
    all.push(("spatial_dropout".into(), spatial_dropout()));
    all
}

fn features(frames: usize, seed: u64) -> InstanceFeatures {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = |c: usize, m: Modality| {
        let data = (0..frames * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureSequence::new(data, c, 50.0, m).unwrap()
    };
    InstanceFeatures {
        audio: seq(20, Modality::AudioMfcc),
        motion: seq(6, Modality::Motion),
    }
}

/// Cross-entropy of a 3-instance batch of 30 frames as a function of every
/// model parameter, in training mode with a fixed dropout mask.
pub fn model(arch: ArchConfig, mode: Mode) -> f64 {
    let n = 3;
    let mut model = Model::<f64>::new(ModelConfig::new(arch, mode, n), 21).unwrap();
    let batch: Vec<InstanceFeatures> = (0..3).map(|i| features(30, 40 + i)).collect();
    let refs: Vec<&InstanceFeatures> = batch.iter().collect();
    let labels = [0, 2, 1];
    let loss_of = |m: &Model<f64>, grads: bool| -> (f64, Option<Vec<Vec<f64>>>) {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fwd = m.forward(&mut g, m.inputs(&refs).unwrap(), ForwardMode::train(&mut rng)).unwrap();
        let loss = g.softmax_cross_entropy(fwd.logits, &labels).unwrap();
        let value = g.value(loss).item();
        let grads = grads.then(|| {
            let gr = g.backward(loss).unwrap();
            fwd.params
                .iter()
                .zip(m.params())
                .map(|(v, p)| gr.get(*v).map(|t| t.data().to_vec()).unwrap_or_else(|| vec![0.0; p.value().len()]))
                .collect()
        });
        (value, grads)
    };
    let analytic = loss_of(&model, true).1.unwrap();
    let mut worst: f64 = 0.0;
    for pi in 0..model.params().len() {
        let base = model.params()[pi].value().clone();
        for j in 0..base.len() {
            let mut t = base.clone();
            t.data_mut()[j] += H;
            model.params_mut()[pi].assign(t).unwrap();
            let plus = loss_of(&model, false).0;
            let mut t = base.clone();
            t.data_mut()[j] -= H;
            model.params_mut()[pi].assign(t).unwrap();
            let minus = loss_of(&model, false).0;
            worst = worst.max(rel_err(analytic[pi][j], (plus - minus) / (2.0 * H)));
        }
        model.params_mut()[pi].assign(base).unwrap();
    }
    worst
}

/// L=4, k=5, H=8.
pub fn tiny_cnn_lstm() -> ArchConfig {
    ArchConfig::CnnLstm(CnnLstmConfig {
        n_filters: 4,
        kernel: 5,
        stride: 1,
        lstm_hidden: 8,
    })
}

/// L1=4, L2=8, k=3.
pub fn tiny_tcn() -> ArchConfig {
    ArchConfig::Tcn(TcnConfig {
        stage1_filters: 4,
        stage2_filters: 8,
        kernel: 3,
        dilations: vec![1, 2, 4, 8],
        dropout: 0.1,
    })
}
