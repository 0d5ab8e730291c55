use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{AutodiffError, Parameter, Scalar, Tensor};

pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Serializable parameter container: name → shape + values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub version: u32,
    pub tensors: Vec<NamedTensor>,
}

impl WeightSet {
    pub fn capture<T: Scalar>(params: &[Parameter<T>]) -> Self {
        Self {
            version: WEIGHTS_VERSION,
            tensors: params
                .iter()
                .map(|p| NamedTensor {
                    name: p.name().to_string(),
                    shape: p.value().shape().to_vec(),
                    values: p.value().to_f64_vec(),
                })
                .collect(),
        }
    }

    /// Writes stored values into `params`, matching by name. Every parameter must be present
    /// with the same shape, and no extra tensors are allowed.
    pub fn restore<T: Scalar>(&self, params: &mut [Parameter<T>]) -> Result<(), AutodiffError> {
        if self.version != WEIGHTS_VERSION {
            return Err(AutodiffError::Checkpoint(format!(
                "unsupported weights version {} (expected {WEIGHTS_VERSION})",
                self.version
            )));
        }
        let mut seen = HashSet::new();
        for t in &self.tensors {
            if !seen.insert(t.name.as_str()) {
                return Err(AutodiffError::Checkpoint(format!("duplicate tensor {}", t.name)));
            }
        }
        if self.tensors.len() != params.len() {
            return Err(AutodiffError::Checkpoint(format!(
                "checkpoint has {} tensors, model has {} parameters",
                self.tensors.len(),
                params.len()
            )));
        }
        for p in params.iter_mut() {
            let t = self
                .tensors
                .iter()
                .find(|t| t.name == p.name())
                .ok_or_else(|| AutodiffError::Checkpoint(format!("missing tensor {}", p.name())))?;
            let value = Tensor::from_vec(&t.shape, t.values.iter().map(|&v| T::of(v)).collect())?;
            p.assign(value)?;
        }
        Ok(())
    }
}
