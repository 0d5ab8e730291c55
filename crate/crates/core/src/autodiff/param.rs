use rand::Rng;

use super::{AutodiffError, Scalar, Tensor};

/// A trainable tensor plus its Adam moment estimates.
#[derive(Debug, Clone)]
pub struct Parameter<T> {
    name: String,
    value: Tensor<T>,
    first_moment: Vec<T>,
    second_moment: Vec<T>,
    step: u64,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let n = value.len();
        Self {
            name: name.into(),
            value,
            first_moment: vec![T::zero(); n],
            second_moment: vec![T::zero(); n],
            step: 0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Tensor<T> {
        &self.value
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Replaces the value and clears optimizer state. Shapes must agree.
    pub fn assign(&mut self, value: Tensor<T>) -> Result<(), AutodiffError> {
        if value.shape() != self.value.shape() {
            return Err(AutodiffError::Shape(format!(
                "parameter {}: cannot assign {:?} to {:?}",
                self.name,
                value.shape(),
                self.value.shape()
            )));
        }
        self.value = value;
        self.reset_moments();
        Ok(())
    }

    pub fn reset_moments(&mut self) {
        self.first_moment.iter_mut().for_each(|v| *v = T::zero());
        self.second_moment.iter_mut().for_each(|v| *v = T::zero());
        self.step = 0;
    }
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(shape, |_| T::of(rng.gen_range(-limit..limit)))
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    /// Updates every parameter that has a gradient. All gradients are checked for
    /// finiteness before any parameter is touched.
    pub fn step<T: Scalar>(
        &self,
        params: &mut [Parameter<T>],
        grads: &[Option<&Tensor<T>>],
    ) -> Result<(), AutodiffError> {
        if grads.len() != params.len() {
            return Err(AutodiffError::Shape(format!(
                "adam: {} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if let Some(g) = g {
                if g.shape() != p.value.shape() {
                    return Err(AutodiffError::Shape(format!(
                        "adam: gradient {:?} for parameter {} {:?}",
                        g.shape(),
                        p.name,
                        p.value.shape()
                    )));
                }
                if !g.is_finite() {
                    return Err(AutodiffError::NonFiniteGradient {
                        param: p.name.clone(),
                        count: g.data().iter().filter(|v| !v.is_finite()).count(),
                    });
                }
            }
        }
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let eps = T::of(self.eps);
        for (p, g) in params.iter_mut().zip(grads) {
            let Some(g) = g else { continue };
            p.step += 1;
            let t = p.step as i32;
            let c1 = T::of(1.0 - self.beta1.powi(t));
            let c2 = T::of(1.0 - self.beta2.powi(t));
            let lr = T::of(self.lr);
            for (((w, m), v), &gv) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.first_moment.iter_mut())
                .zip(p.second_moment.iter_mut())
                .zip(g.data())
            {
                *m = b1 * *m + (T::one() - b1) * gv;
                *v = b2 * *v + (T::one() - b2) * gv * gv;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
