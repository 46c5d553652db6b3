//! Inner networks: architecture-specific maps from kinematic scalars to
//! strain energy, each evaluated with analytic value, gradient, and Hessian
//! in a single forward pass. A finite-difference oracle provides the slow
//! reference used for correctness checks and as the non-analytic timing
//! baseline.

pub mod cann;
pub mod fd;
pub mod ickan;
pub mod micnn;

pub use cann::{CannBranch, CannWeights, F0, F1, F2};
pub use fd::fd_oracle;
pub use ickan::{Extrapolation, IckanWeights, KanEdge, KanLayer, SplineBasis};
pub use micnn::{Activation, MicnnLayer, MicnnWeights};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("input width mismatch: network expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid weights at {path}: {message}")]
    InvalidWeights { path: String, message: String },
    #[error("domain violation in {context}: {message}")]
    Domain { context: String, message: String },
}

impl NetworkError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        NetworkError::InvalidWeights {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Value, gradient, and Hessian of an inner network at one input point.
/// The Hessian is stored row-major with side length `grad.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl InnerEval {
    pub fn zeros(m: usize) -> Self {
        InnerEval {
            value: 0.0,
            grad: vec![0.0; m],
            hess: vec![0.0; m * m],
        }
    }

    /// Resets to zero at width `m`, reusing the allocations.
    pub fn reset(&mut self, m: usize) {
        self.value = 0.0;
        self.grad.clear();
        self.grad.resize(m, 0.0);
        self.hess.clear();
        self.hess.resize(m * m, 0.0);
    }

    pub fn width(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.grad.len() + j]
    }

    pub fn hess_asymmetry(&self) -> f64 {
        let m = self.grad.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max((self.hess[i * m + j] - self.hess[j * m + i]).abs());
            }
        }
        worst
    }
}

fn check_width(expected: usize, got: usize) -> Result<(), NetworkError> {
    if expected != got {
        return Err(NetworkError::WidthMismatch { expected, got });
    }
    Ok(())
}
