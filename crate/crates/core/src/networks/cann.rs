//! Tree-structured constitutive network: independent branches per kinematic
//! scalar, each a composition f2(f1(f0(K_m))) scaled by an outer weight.
//! Because no branch mixes inputs, the Hessian is diagonal.

use serde::{Deserialize, Serialize};

use super::{check_width, InnerEval, NetworkError};

/// Inner transform menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F0 {
    Identity,
    /// Macaulay bracket <x> = max(x, 0).
    Macaulay,
    Abs,
}

/// Power menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1 {
    Pow1,
    Pow2,
    Pow3,
}

/// Outer transform menu; each uses the branch weight w1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F2 {
    /// w1 x
    Linear,
    /// exp(w1 x) - 1
    Exp,
    /// -ln(1 - w1 x), defined for w1 x < 1
    Log,
}

/// Sign with the subgradient choice 0 at the kink.
#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl F0 {
    #[inline]
    fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            F0::Identity => (x, 1.0),
            F0::Macaulay => (x.max(0.0), if x == 0.0 { 0.0 } else { 0.5 * (1.0 + sign(x)) }),
            F0::Abs => (x.abs(), sign(x)),
        }
    }
}

impl F1 {
    #[inline]
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            F1::Pow1 => (x, 1.0, 0.0),
            F1::Pow2 => (x * x, 2.0 * x, 2.0),
            F1::Pow3 => (x * x * x, 3.0 * x * x, 6.0 * x),
        }
    }
}

impl F2 {
    #[inline]
    fn eval(&self, x: f64, w1: f64) -> Result<(f64, f64, f64), ()> {
        match self {
            F2::Linear => Ok((w1 * x, w1, 0.0)),
            F2::Exp => {
                let e = (w1 * x).exp();
                Ok((e - 1.0, w1 * e, w1 * w1 * e))
            }
            F2::Log => {
                let arg = 1.0 - w1 * x;
                if arg <= 0.0 {
                    return Err(());
                }
                Ok((-arg.ln(), w1 / arg, w1 * w1 / (arg * arg)))
            }
        }
    }
}

/// One branch of the tree: input index, three weights, three transform
/// selectors. w0 is carried for schema compatibility; the implemented f0
/// menu rows do not use it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CannBranch {
    pub input: usize,
    #[serde(default)]
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub f0: F0,
    pub f1: F1,
    pub f2: F2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CannWeights {
    pub input_width: usize,
    pub branches: Vec<CannBranch>,
}

impl CannWeights {
    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.input_width == 0 {
            return Err(NetworkError::invalid("input_width", "must be at least 1"));
        }
        for (i, br) in self.branches.iter().enumerate() {
            if br.input >= self.input_width {
                return Err(NetworkError::invalid(
                    format!("branches[{i}].input"),
                    format!("index {} out of range (width {})", br.input, self.input_width),
                ));
            }
            for (name, v) in [("w0", br.w0), ("w1", br.w1), ("w2", br.w2)] {
                if !v.is_finite() {
                    return Err(NetworkError::invalid(
                        format!("branches[{i}].{name}"),
                        "not finite",
                    ));
                }
            }
            // Convexity requires non-negative gains on the outer stages.
            if br.w1 < 0.0 {
                return Err(NetworkError::invalid(
                    format!("branches[{i}].w1"),
                    format!("negative weight {}", br.w1),
                ));
            }
            if br.w2 < 0.0 {
                return Err(NetworkError::invalid(
                    format!("branches[{i}].w2"),
                    format!("negative weight {}", br.w2),
                ));
            }
        }
        Ok(())
    }

    pub fn eval(&self, k: &[f64]) -> Result<InnerEval, NetworkError> {
        let mut out = InnerEval::zeros(self.input_width);
        self.eval_into(k, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, k: &[f64], out: &mut InnerEval) -> Result<(), NetworkError> {
        let m = self.input_width;
        check_width(m, k.len())?;
        out.reset(m);
        for (idx, br) in self.branches.iter().enumerate() {
            let x = k[br.input];
            let (v0, d0) = br.f0.eval(x);
            let (v1, d1, h1) = br.f1.eval(v0);
            let (v2, d2, h2) = br.f2.eval(v1, br.w1).map_err(|_| NetworkError::Domain {
                context: format!("branches[{idx}]"),
                message: format!(
                    "log branch argument {} reached 1/w1 = {}",
                    v1,
                    1.0 / br.w1
                ),
            })?;
            out.value += br.w2 * v2;
            // d f0 is piecewise constant, so its second derivative is zero
            // and the chain rule collapses to two terms.
            out.grad[br.input] += br.w2 * d2 * d1 * d0;
            out.hess[br.input * m + br.input] += br.w2 * (h2 * d1 * d1 + d2 * h1) * d0 * d0;
        }
        Ok(())
    }

    pub fn value(&self, k: &[f64]) -> Result<f64, NetworkError> {
        let m = self.input_width;
        check_width(m, k.len())?;
        let mut value = 0.0;
        for (idx, br) in self.branches.iter().enumerate() {
            let (v0, _) = br.f0.eval(k[br.input]);
            let (v1, _, _) = br.f1.eval(v0);
            let (v2, _, _) = br.f2.eval(v1, br.w1).map_err(|_| NetworkError::Domain {
                context: format!("branches[{idx}]"),
                message: "log branch domain violation".to_string(),
            })?;
            value += br.w2 * v2;
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::fd_oracle;

    #[test]
    fn fully_linear_branch() {
        let net = CannWeights {
            input_width: 2,
            branches: vec![
                CannBranch {
                    input: 0,
                    w0: 0.0,
                    w1: 0.5,
                    w2: 2.0,
                    f0: F0::Identity,
                    f1: F1::Pow1,
                    f2: F2::Linear,
                },
                CannBranch {
                    input: 1,
                    w0: 0.0,
                    w1: 3.0,
                    w2: 0.25,
                    f0: F0::Identity,
                    f1: F1::Pow1,
                    f2: F2::Linear,
                },
            ],
        };
        let eval = net.eval(&[4.0, 2.0]).unwrap();
        assert_eq!(eval.value, 2.0 * 0.5 * 4.0 + 0.25 * 3.0 * 2.0);
        assert_eq!(eval.grad, vec![1.0, 0.75]);
        assert!(eval.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn exp_branch_matches_fd() {
        let net = CannWeights {
            input_width: 1,
            branches: vec![CannBranch {
                input: 0,
                w0: 0.0,
                w1: 0.3,
                w2: 1.7,
                f0: F0::Identity,
                f1: F1::Pow1,
                f2: F2::Exp,
            }],
        };
        let k = [3.1];
        let analytic = net.eval(&k).unwrap();
        // Closed form: grad = w2 w1 e^{w1 K}.
        let expect = 1.7 * 0.3 * (0.3f64 * 3.1).exp();
        assert!((analytic.grad[0] - expect).abs() < 1e-12);
        let fd = fd_oracle(|x| net.value(x), &k, 1e-6, 1e-4).unwrap();
        assert!((analytic.grad[0] - fd.grad[0]).abs() / fd.grad[0].abs() < 1e-6);
        assert!((analytic.hess[0] - fd.hess[0]).abs() / fd.hess[0].abs() < 1e-4);
    }

    #[test]
    fn log_branch_matches_fd_and_rejects_domain() {
        let net = CannWeights {
            input_width: 1,
            branches: vec![CannBranch {
                input: 0,
                w0: 0.0,
                w1: 0.2,
                w2: 1.0,
                f0: F0::Identity,
                f1: F1::Pow2,
                f2: F2::Log,
            }],
        };
        let k = [1.4];
        let analytic = net.eval(&k).unwrap();
        let fd = fd_oracle(|x| net.value(x), &k, 1e-6, 1e-4).unwrap();
        assert!((analytic.grad[0] - fd.grad[0]).abs() / fd.grad[0].abs().max(1.0) < 1e-6);
        assert!((analytic.hess[0] - fd.hess[0]).abs() / fd.hess[0].abs().max(1.0) < 1e-4);

        // f1(K) = K^2 hits 1/w1 = 5 at K = sqrt(5).
        let err = net.eval(&[5.0f64.sqrt() + 0.1]).unwrap_err();
        assert!(matches!(err, NetworkError::Domain { .. }));
    }

    #[test]
    fn zero_outer_weights_kill_everything() {
        let net = CannWeights {
            input_width: 3,
            branches: (0..3)
                .map(|i| CannBranch {
                    input: i,
                    w0: 0.0,
                    w1: 0.4,
                    w2: 0.0,
                    f0: F0::Macaulay,
                    f1: F1::Pow3,
                    f2: F2::Exp,
                })
                .collect(),
        };
        let eval = net.eval(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(eval.value, 0.0);
        assert!(eval.grad.iter().all(|&g| g == 0.0));
        assert!(eval.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn hessian_is_diagonal() {
        let net = CannWeights {
            input_width: 3,
            branches: (0..3)
                .map(|i| CannBranch {
                    input: i,
                    w0: 0.0,
                    w1: 0.2,
                    w2: 1.0 + i as f64,
                    f0: F0::Identity,
                    f1: F1::Pow2,
                    f2: F2::Exp,
                })
                .collect(),
        };
        let eval = net.eval(&[1.0, 1.5, 0.5]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(eval.hess_at(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn validation_rejects_bad_branches() {
        let bad_input = CannWeights {
            input_width: 2,
            branches: vec![CannBranch {
                input: 2,
                w0: 0.0,
                w1: 0.1,
                w2: 1.0,
                f0: F0::Identity,
                f1: F1::Pow1,
                f2: F2::Linear,
            }],
        };
        assert!(matches!(
            bad_input.validate().unwrap_err(),
            NetworkError::InvalidWeights { path, .. } if path == "branches[0].input"
        ));

        let negative = CannWeights {
            input_width: 1,
            branches: vec![CannBranch {
                input: 0,
                w0: 0.0,
                w1: -0.1,
                w2: 1.0,
                f0: F0::Identity,
                f1: F1::Pow1,
                f2: F2::Linear,
            }],
        };
        assert!(negative.validate().is_err());
    }
}
