//! Central-difference gradient and Hessian of a scalar function. The cost is
//! O(m^2) function evaluations, which is the point: this is the correctness
//! oracle for the analytic one-pass evaluations and the slow baseline for
//! the derivative-mode benchmarks.

use super::{InnerEval, NetworkError};

/// Central-difference derivative steps, relative to max(1, |x_i|). The
/// Hessian step is larger to control round-off amplification in the second
/// difference.
pub const FD_GRAD_STEP: f64 = 1e-6;
pub const FD_HESS_STEP: f64 = 1e-4;

/// Gradient and Hessian of `f` at `k` by central differences with relative
/// steps `h_grad` and `h_hess`.
pub fn fd_oracle<F>(f: F, k: &[f64], h_grad: f64, h_hess: f64) -> Result<InnerEval, NetworkError>
where
    F: Fn(&[f64]) -> Result<f64, NetworkError>,
{
    let m = k.len();
    let mut out = InnerEval::zeros(m);
    out.value = f(k)?;

    let mut x = k.to_vec();
    for i in 0..m {
        let h = h_grad * k[i].abs().max(1.0);
        x[i] = k[i] + h;
        let fp = f(&x)?;
        x[i] = k[i] - h;
        let fm = f(&x)?;
        x[i] = k[i];
        out.grad[i] = (fp - fm) / (2.0 * h);
    }

    for i in 0..m {
        let hi = h_hess * k[i].abs().max(1.0);
        x[i] = k[i] + hi;
        let fp = f(&x)?;
        x[i] = k[i] - hi;
        let fm = f(&x)?;
        x[i] = k[i];
        out.hess[i * m + i] = (fp - 2.0 * out.value + fm) / (hi * hi);
        for j in (i + 1)..m {
            let hj = h_hess * k[j].abs().max(1.0);
            x[i] = k[i] + hi;
            x[j] = k[j] + hj;
            let fpp = f(&x)?;
            x[j] = k[j] - hj;
            let fpm = f(&x)?;
            x[i] = k[i] - hi;
            let fmm = f(&x)?;
            x[j] = k[j] + hj;
            let fmp = f(&x)?;
            x[i] = k[i];
            x[j] = k[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            out.hess[i * m + j] = v;
            out.hess[j * m + i] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_exact_to_truncation() {
        let f = |k: &[f64]| Ok(k.iter().map(|x| x * x).sum());
        let k = [1.5, -2.0, 0.25];
        let eval = fd_oracle(f, &k, 1e-6, 1e-4).unwrap();
        for i in 0..3 {
            assert!((eval.grad[i] - 2.0 * k[i]).abs() < 1e-8);
            for j in 0..3 {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((eval.hess_at(i, j) - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_function_has_zero_derivatives() {
        let f = |_: &[f64]| Ok(42.0);
        let eval = fd_oracle(f, &[1.0, 2.0], 1e-6, 1e-4).unwrap();
        assert_eq!(eval.value, 42.0);
        assert!(eval.grad.iter().all(|&g| g == 0.0));
        assert!(eval.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn cross_terms_recovered() {
        let f = |k: &[f64]| Ok(k[0] * k[1] + 0.5 * k[0] * k[0] * k[1]);
        let k = [0.7, 1.3];
        let eval = fd_oracle(f, &k, 1e-6, 1e-4).unwrap();
        // d2f/dx dy = 1 + x
        assert!((eval.hess_at(0, 1) - (1.0 + k[0])).abs() < 1e-6);
        assert_eq!(eval.hess_at(0, 1), eval.hess_at(1, 0));
    }
}
