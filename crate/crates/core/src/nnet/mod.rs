//! Minimal neural toolkit: named parameters, a reverse-mode tape, gated
//! recurrent encoders, linear heads, Adam, and finite-difference checking.

mod layers;
mod optim;
mod tape;

pub use layers::{GruEncoder, LinearHead};
pub use optim::{finite_diff_check, AdamState, GradCheck};
pub use tape::{log_softmax, sigmoid, softmax, softplus, Tape, Var};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnetError {
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("input width {got} does not match expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("backward root must be scalar, got length {0}")]
    NonScalarRoot(usize),
    #[error("non-finite gradient in parameter {param:?} at entry {index}")]
    NonFiniteGradient { param: String, index: usize },
    #[error("gradient shapes do not match the parameter store")]
    ShapeMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` with fan_in = cols, fan_out = rows.
    Glorot,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<R: Rng>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        init: Init,
        rng: &mut R,
    ) -> ParamId {
        let value = match init {
            Init::Zeros => vec![0.0; rows * cols],
            Init::Glorot => {
                let limit = (6.0 / (rows + cols) as f64).sqrt();
                (0..rows * cols)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect()
            }
        };
        self.params.push(Param {
            name: name.to_string(),
            rows,
            cols,
            value,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            grads: self.params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params
            .iter()
            .all(|p| p.value.iter().all(|v| v.is_finite()))
    }
}

/// Gradients laid out like the parameter store.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub grads: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.grads
            .iter()
            .flatten()
            .fold(0.0, |m: f64, g| m.max(g.abs()))
    }
}
