//! Gent-Thomas reference model: Psi = 0.5 (Ibar1 - 3) + ln(Ibar2 / 3) + (J - 1)^2,
//! expressed as a hand-coded analytic inner function over the isochoric
//! kinematic layer with inputs (Ibar1, Ibar2, J). Serves as the analytic
//! ground truth next to the neural architectures.

use crate::kinematics::{Invariant, KinematicConfig};
use crate::networks::{InnerEval, NetworkError};
use crate::tensors::Mat3;

use super::{DerivativeMode, InnerSpec, ModelError, NcmDefinition, PointEval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GentThomasInner;

impl GentThomasInner {
    pub const WIDTH: usize = 3;

    pub fn value(&self, k: &[f64]) -> Result<f64, NetworkError> {
        self.check(k)?;
        Ok(0.5 * (k[0] - 3.0) + (k[1] / 3.0).ln() + (k[2] - 1.0) * (k[2] - 1.0))
    }

    pub fn eval_into(&self, k: &[f64], out: &mut InnerEval) -> Result<(), NetworkError> {
        self.check(k)?;
        out.reset(Self::WIDTH);
        out.value = 0.5 * (k[0] - 3.0) + (k[1] / 3.0).ln() + (k[2] - 1.0) * (k[2] - 1.0);
        out.grad[0] = 0.5;
        out.grad[1] = 1.0 / k[1];
        out.grad[2] = 2.0 * (k[2] - 1.0);
        out.hess[1 * 3 + 1] = -1.0 / (k[1] * k[1]);
        out.hess[2 * 3 + 2] = 2.0;
        Ok(())
    }

    fn check(&self, k: &[f64]) -> Result<(), NetworkError> {
        if k.len() != Self::WIDTH {
            return Err(NetworkError::WidthMismatch {
                expected: Self::WIDTH,
                got: k.len(),
            });
        }
        if !(k[1] > 0.0) {
            return Err(NetworkError::Domain {
                context: "gent_thomas".to_string(),
                message: format!("second isochoric invariant {} must be positive", k[1]),
            });
        }
        Ok(())
    }
}

/// The Gent-Thomas model wired through the standard constitutive pipeline.
pub fn gent_thomas_model() -> NcmDefinition {
    NcmDefinition {
        kinematic: KinematicConfig::isochoric(vec![Invariant::I1, Invariant::I2, Invariant::J]),
        inner: InnerSpec::GentThomas(GentThomasInner),
        mode: DerivativeMode::Cgo,
    }
}

/// Energy, stress, and tangent of the Gent-Thomas model at `f`.
pub fn eval_gent_thomas(f: &Mat3) -> Result<PointEval, ModelError> {
    gent_thomas_model().eval_point(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stress_free_reference() {
        let eval = eval_gent_thomas(&Mat3::identity()).unwrap();
        assert!(eval.psi.abs() < 1e-15);
        assert!(eval.tau.norm_inf() < 1e-13);
        // The volumetric block of the tangent is positive at the reference.
        assert!(eval.stiffness.0[0][0] > 0.0);
    }

    #[test]
    fn pure_dilation_energy() {
        // Isochoric terms vanish at F = 2I, leaving (J - 1)^2 = 49.
        let eval = eval_gent_thomas(&Mat3::diag(2.0, 2.0, 2.0)).unwrap();
        assert!((eval.psi - 49.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_singular_f() {
        assert!(eval_gent_thomas(&Mat3::diag(1.0, 0.0, 1.0)).is_err());
    }
}
