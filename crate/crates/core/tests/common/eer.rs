use breathauth::verification::TrialScore;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn trials(genuine: &[f64], impostor: &[f64]) -> Vec<TrialScore> {
    let mk = |(i, &d): (usize, &f64), g: bool| TrialScore {
        claimed_subject: "s".into(),
        instance: format!("{}{i}", if g { "g" } else { "i" }),
        distance: d,
        genuine: g,
    };
    genuine
        .iter()
        .enumerate()
        .map(|p| mk(p, true))
        .chain(impostor.iter().enumerate().map(|p| mk(p, false)))
        .collect()
}

/// Evaluates FPR and FNR by counting at every threshold of the sweep, no cursors.
pub fn oracle(genuine: &[f64], impostor: &[f64]) -> (usize, f64, f64) {
    let mut all: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    let mut thresholds = vec![all[0]];
    for i in 1..all.len() {
        thresholds.push((all[i - 1] + all[i]) / 2.0);
    }
    thresholds.push(all[all.len() - 1].next_up());
    let rates = |eps: f64| {
        let fp = impostor.iter().filter(|&&d| d < eps).count() as f64 / impostor.len() as f64;
        let fneg = genuine.iter().filter(|&&d| d >= eps).count() as f64 / genuine.len() as f64;
        (fp, fneg)
    };
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (k, &eps) in thresholds.iter().enumerate() {
        let (fp, fneg) = rates(eps);
        if (fp - fneg).abs() < best_gap {
            best_gap = (fp - fneg).abs();
            best = k;
        }
    }
    let (fp, fneg) = rates(thresholds[best]);
    (best, thresholds[best], (fp + fneg) / 2.0)
}

/// Score sets with ties: values on a coarse grid part of the time.
pub fn score_set(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(10..=500);
    let ng = rng.gen_range(1..n);
    let coarse = rng.gen_bool(0.3);
    let shift = rng.gen_range(-1.0..3.0);
    let draw = |rng: &mut ChaCha8Rng, mu: f64| {
        let v: f64 = mu + rng.gen_range(-1.5..1.5) + rng.gen_range(-1.5..1.5);
        let v = v.abs();
        if coarse {
            (v * 4.0).round() / 4.0
        } else {
            v
        }
    };
    let genuine = (0..ng).map(|_| draw(rng, 1.0)).collect();
    let impostor = (0..n - ng).map(|_| draw(rng, 1.0 + shift)).collect();
    (genuine, impostor)
}

