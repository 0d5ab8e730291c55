use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn seq(data: &[f64], t: usize, c: usize) -> Tensor<f64> {
    Tensor::from_vec(&[1, t, c], data.to_vec()).unwrap()
}

fn filt(data: &[f64], l: usize, f: usize, k: usize) -> Tensor<f64> {
    Tensor::from_vec(&[l, f, k], data.to_vec()).unwrap()
}

#[test]
fn valid_conv_identity_kernel() {
    let mut g = Graph::new();
    let x = g.input(seq(&[1.0, 2.0, 3.0, 4.0], 4, 1));
    let w = g.input(filt(&[1.0], 1, 1, 1));
    let y = g.conv1d_valid(x, w, None, 1).unwrap();
    assert_eq!(g.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn valid_conv_output_length() {
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::zeros(&[2, 225, 3]));
    let w = g.input(Tensor::zeros(&[5, 3, 9]));
    let y = g.conv1d_valid(x, w, None, 1).unwrap();
    assert_eq!(g.value(y).shape(), &[2, 217, 5]);
    let y2 = g.conv1d_valid(x, w, None, 4).unwrap();
    assert_eq!(g.value(y2).shape(), &[2, (225 - 9) / 4 + 1, 5]);
}

#[test]
fn valid_conv_rejects_short_input() {
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::zeros(&[1, 3, 1]));
    let w = g.input(Tensor::zeros(&[1, 1, 4]));
    assert!(matches!(g.conv1d_valid(x, w, None, 1), Err(AutodiffError::Shape(_))));
}

#[test]
fn causal_dilated_conv_hand_example() {
    let mut g = Graph::new();
    let x = g.input(seq(&[1.0, 2.0, 3.0, 4.0], 4, 1));
    let w = g.input(filt(&[1.0, 1.0], 1, 1, 2));
    let y = g.conv1d_causal(x, w, None, 2).unwrap();
    assert_eq!(g.value(y).data(), &[1.0, 2.0, 4.0, 6.0]);
}

#[test]
fn causal_conv_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(t, f, l, k, d) in &[(17, 3, 2, 3, 1), (20, 2, 4, 2, 4), (9, 1, 1, 5, 2)] {
        let xv: Vec<f64> = (0..t * f).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wv: Vec<f64> = (0..l * f * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = Graph::new();
        let x = g.input(seq(&xv, t, f));
        let w = g.input(filt(&wv, l, f, k));
        let y = g.conv1d_causal(x, w, None, d).unwrap();
        let out = g.value(y);
        for ti in 0..t {
            for li in 0..l {
                let mut s = 0.0;
                for j in 0..k {
                    let back = (k - 1 - j) * d;
                    if back > ti {
                        continue;
                    }
                    for fi in 0..f {
                        s += xv[(ti - back) * f + fi] * wv[(li * f + fi) * k + j];
                    }
                }
                assert!((out.data()[ti * l + li] - s).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn causal_conv_impulse_response_is_causal() {
    let t = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let wv: Vec<f64> = (0..2 * 3).map(|_| rng.gen_range(0.1..1.0)).collect();
    for j in 0..t {
        let mut xv = vec![0.0; t];
        xv[j] = 1.0;
        let mut g = Graph::new();
        let x = g.input(seq(&xv, t, 1));
        let w = g.input(filt(&wv, 2, 1, 3));
        let y = g.conv1d_causal(x, w, None, 2).unwrap();
        for ti in 0..j {
            assert_eq!(g.value(y).data()[ti * 2], 0.0);
            assert_eq!(g.value(y).data()[ti * 2 + 1], 0.0);
        }
    }
}

#[test]
fn lstm_zero_weights_give_zero_outputs() {
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::from_fn(&[2, 5, 3], |i| i as f64 * 0.1));
    let wi = g.input(Tensor::zeros(&[3, 16]));
    let wh = g.input(Tensor::zeros(&[4, 16]));
    let b = g.input(Tensor::zeros(&[16]));
    let y = g.lstm(x, wi, wh, b).unwrap();
    assert_eq!(g.value(y).shape(), &[2, 5, 4]);
    assert!(g.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn lstm_single_step_matches_cell_formula() {
    let (c, h) = (2usize, 3usize);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xv: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let wi: Vec<f64> = (0..c * 4 * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let bv: Vec<f64> = (0..4 * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g = Graph::new();
    let x = g.input(Tensor::from_vec(&[1, 1, c], xv.clone()).unwrap());
    let wiv = g.input(Tensor::from_vec(&[c, 4 * h], wi.clone()).unwrap());
    let whv = g.input(Tensor::from_fn(&[h, 4 * h], |_| 0.7));
    let b = g.input(Tensor::from_vec(&[4 * h], bv.clone()).unwrap());
    let y = g.lstm(x, wiv, whv, b).unwrap();
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    for q in 0..h {
        let pre = |gate: usize| bv[gate * h + q] + (0..c).map(|ci| xv[ci] * wi[ci * 4 * h + gate * h + q]).sum::<f64>();
        let (i, gg, o) = (sig(pre(0)), pre(2).tanh(), sig(pre(3)));
        // c_prev = 0 so the forget gate drops out
        let cell = i * gg;
        let expect = o * cell.tanh();
        assert!((g.value(y).data()[q] - expect).abs() < 1e-14);
    }
}

#[test]
fn weight_norm_unit_vector_and_scale_invariance() {
    let v0: Vec<f64> = vec![0.6, 0.0, 0.8, 0.0];
    let mut g = Graph::new();
    let v = g.input(Tensor::from_vec(&[1, 2, 2], v0.clone()).unwrap());
    let gain = g.input(Tensor::from_vec(&[1], vec![1.0]).unwrap());
    let w = g.weight_norm(v, gain).unwrap();
    for (a, b) in g.value(w).data().iter().zip(&v0) {
        assert!((a - b).abs() < 1e-15);
    }
    let scaled: Vec<f64> = v0.iter().map(|x| x * 10.0).collect();
    let v10 = g.input(Tensor::from_vec(&[1, 2, 2], scaled).unwrap());
    let w10 = g.weight_norm(v10, gain).unwrap();
    for (a, b) in g.value(w10).data().iter().zip(g.value(w).data()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn weight_norm_zero_filter_is_rejected() {
    let mut g = Graph::<f64>::new();
    let v = g.input(Tensor::from_vec(&[2, 1, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap());
    let gain = g.input(Tensor::from_vec(&[2], vec![1.0, 1.0]).unwrap());
    assert!(matches!(g.weight_norm(v, gain), Err(AutodiffError::ZeroNorm { filter: 1 })));
}

#[test]
fn dropout_identity_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::from_fn(&[2, 3, 4], |i| i as f64));
    let y = g.spatial_dropout(x, 0.0, true, &mut rng).unwrap();
    assert_eq!(g.value(x), g.value(y));
    let z = g.spatial_dropout(x, 0.9, false, &mut rng).unwrap();
    assert_eq!(g.value(x), g.value(z));
}

#[test]
fn dropout_zeroes_whole_channels_at_requested_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let c = 10_000;
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::from_fn(&[1, 3, c], |_| 1.0));
    let y = g.spatial_dropout(x, 0.5, true, &mut rng).unwrap();
    let out = g.value(y).data();
    let mut zeroed = 0;
    for ci in 0..c {
        let col: Vec<f64> = (0..3).map(|t| out[t * c + ci]).collect();
        assert!(col.iter().all(|&v| v == col[0]), "channel {ci} not dropped as a whole");
        if col[0] == 0.0 {
            zeroed += 1;
        } else {
            assert!((col[0] - 2.0).abs() < 1e-12);
        }
    }
    let frac = zeroed as f64 / c as f64;
    assert!((frac - 0.5).abs() < 0.02, "zeroed fraction {frac}");
}

#[test]
fn relu_concat_and_uniform_cross_entropy() {
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::from_vec(&[2], vec![-1.0, 2.0]).unwrap());
    let r = g.relu(x).unwrap();
    assert_eq!(g.value(r).data(), &[0.0, 2.0]);

    let a = g.input(Tensor::zeros(&[1, 7, 3]));
    let b = g.input(Tensor::zeros(&[1, 7, 5]));
    let c = g.concat_channels(a, b).unwrap();
    assert_eq!(g.value(c).shape(), &[1, 7, 8]);
    let short = g.input(Tensor::zeros(&[1, 6, 5]));
    assert!(g.concat_channels(a, short).is_err());

    for n in [2usize, 5, 20] {
        let logits = g.input(Tensor::from_fn(&[3, n], |_| 0.25));
        let loss = g.softmax_cross_entropy(logits, &[0, 1, n - 1]).unwrap();
        assert!((g.value(loss).item() - (n as f64).ln()).abs() < 1e-12);
    }
}

#[test]
fn cross_entropy_is_stable_for_large_logits() {
    let mut g = Graph::<f32>::new();
    let logits = g.input(Tensor::from_vec(&[1, 3], vec![1000.0, 0.0, -1000.0]).unwrap());
    let loss = g.softmax_cross_entropy(logits, &[0]).unwrap();
    assert!(g.value(loss).item().abs() < 1e-6);
}

#[test]
fn adam_first_step_is_lr_sized() {
    let mut p = vec![Parameter::new("theta", Tensor::from_vec(&[1], vec![0.0f64]).unwrap())];
    let grad = Tensor::from_vec(&[1], vec![1.0]).unwrap();
    Adam::with_lr(0.001).step(&mut p, &[Some(&grad)]).unwrap();
    let expect = -0.001 * (1.0 / (1.0 + 1e-8));
    assert!((p[0].value().item() - expect).abs() < 1e-15);
}

#[test]
fn adam_zero_gradient_leaves_parameters() {
    let mut p = vec![Parameter::new("w", Tensor::from_vec(&[3], vec![0.5f64, -1.0, 2.0]).unwrap())];
    let zero = Tensor::zeros(&[3]);
    for _ in 0..50 {
        Adam::default().step(&mut p, &[Some(&zero)]).unwrap();
    }
    assert_eq!(p[0].value().data(), &[0.5, -1.0, 2.0]);
}

#[test]
fn adam_descends_a_parabola() {
    // scalar reference: the same recurrence written out by hand. At lr 1e-3 Adam moves at
    // most ~1e-3 per step, so 100 steps cannot pass 0.9; descend at 1e-2 instead.
    let lr = 0.01;
    let (mut theta_ref, mut m, mut v) = (1.0f64, 0.0, 0.0);
    let mut p = vec![Parameter::new("theta", Tensor::from_vec(&[1], vec![1.0f64]).unwrap())];
    for t in 1..=100 {
        let g_ref = 2.0 * theta_ref;
        m = 0.9 * m + 0.1 * g_ref;
        v = 0.999 * v + 0.001 * g_ref * g_ref;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        theta_ref -= lr * mh / (vh.sqrt() + 1e-8);

        let grad = Tensor::from_vec(&[1], vec![2.0 * p[0].value().item()]).unwrap();
        Adam::with_lr(lr).step(&mut p, &[Some(&grad)]).unwrap();
    }
    let theta = p[0].value().item();
    assert!((theta - theta_ref).abs() < 1e-12);
    assert!(theta.abs() < 0.9, "theta = {theta}");
}

#[test]
fn adam_rejects_non_finite_gradient_without_touching_params() {
    let mut p = vec![
        Parameter::new("a", Tensor::from_vec(&[1], vec![1.0f64]).unwrap()),
        Parameter::new("b", Tensor::from_vec(&[1], vec![1.0f64]).unwrap()),
    ];
    let ok = Tensor::from_vec(&[1], vec![1.0]).unwrap();
    let bad = Tensor::from_vec(&[1], vec![f64::NAN]).unwrap();
    let err = Adam::default().step(&mut p, &[Some(&ok), Some(&bad)]).unwrap_err();
    assert!(matches!(err, AutodiffError::NonFiniteGradient { ref param, .. } if param == "b"));
    assert_eq!(p[0].value().item(), 1.0);
}

#[test]
fn weight_set_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params: Vec<Parameter<f32>> = (0..3)
        .map(|i| Parameter::new(format!("p{i}"), glorot_uniform(&[4, i + 1], 4, i + 1, &mut rng)))
        .collect();
    let json = serde_json::to_string(&WeightSet::capture(&params)).unwrap();
    let restored: WeightSet = serde_json::from_str(&json).unwrap();
    let mut fresh: Vec<Parameter<f32>> = (0..3)
        .map(|i| Parameter::new(format!("p{i}"), Tensor::zeros(&[4, i + 1])))
        .collect();
    restored.restore(&mut fresh).unwrap();
    for (a, b) in params.iter().zip(&fresh) {
        let bits_a: Vec<u32> = a.value().data().iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u32> = b.value().data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }
}

#[test]
fn weight_set_rejects_wrong_version_and_missing_names() {
    let params = vec![Parameter::new("w", Tensor::<f64>::zeros(&[2]))];
    let mut ws = WeightSet::capture(&params);
    ws.version = 99;
    let mut target = params.clone();
    assert!(ws.restore(&mut target).is_err());
    let mut ws = WeightSet::capture(&params);
    ws.tensors[0].name = "other".into();
    assert!(ws.restore(&mut target).is_err());
}

#[test]
fn non_finite_forward_value_is_reported() {
    let mut g = Graph::<f64>::new();
    let x = g.input(Tensor::from_vec(&[1, 1, 1], vec![f64::INFINITY]).unwrap());
    let w = g.input(filt(&[1.0], 1, 1, 1));
    let err = g.conv1d_valid(x, w, None, 1).unwrap_err();
    assert!(matches!(err, AutodiffError::NonFinite { op: "conv1d", .. }));
}
