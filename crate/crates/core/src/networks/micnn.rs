//! Monotone input-convex network: affine layers with skip connections from
//! the input, a convex non-decreasing activation, and non-negativity
//! constraints on the weight matrices. Value, gradient, and Hessian come out
//! of a single forward recursion that carries z, dz/dK, and d2z/dKdK through
//! the layers.

use serde::{Deserialize, Serialize};

use super::{check_width, InnerEval, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// ln(1 + e^x): convex, non-decreasing, C-infinity.
    Softplus,
}

impl Activation {
    #[inline]
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Activation::Softplus => {
                let v = x.max(0.0) + (-x.abs()).exp().ln_1p();
                let s = 1.0 / (1.0 + (-x).exp());
                (v, s, s * (1.0 - s))
            }
        }
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        match self {
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
        }
    }
}

/// One hidden layer: y = A z + B K + c.
#[derive(Debug, Clone, PartialEq)]
pub struct MicnnLayer {
    /// width x prev_width, entries constrained non-negative.
    pub a: Vec<Vec<f64>>,
    /// width x input_width, constrained non-negative in monotone mode.
    pub b: Vec<Vec<f64>>,
    /// Bias, length width.
    pub c: Vec<f64>,
}

impl MicnnLayer {
    pub fn width(&self) -> usize {
        self.a.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicnnWeights {
    pub input_width: usize,
    pub hidden: Vec<MicnnLayer>,
    /// Output layer row A^(n), length = last hidden width (or input width
    /// when there are no hidden layers). No bias on the output.
    pub out_a: Vec<f64>,
    /// Output skip row B^(n), length = input width.
    pub out_b: Vec<f64>,
    pub activation: Activation,
    /// When set, the B matrices are constrained non-negative as well, which
    /// makes the network monotonically non-decreasing in its inputs.
    pub monotone: bool,
}

/// Reusable intermediate buffers for the forward recursion.
#[derive(Debug, Default, Clone)]
pub struct MicnnScratch {
    z: Vec<f64>,
    dz: Vec<f64>,
    d2z: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
    d2y: Vec<f64>,
}

impl MicnnWeights {
    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn n_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut prev = self.input_width;
        if self.input_width == 0 {
            return Err(NetworkError::invalid("input_width", "must be at least 1"));
        }
        for (k, layer) in self.hidden.iter().enumerate() {
            let width = layer.a.len();
            if width == 0 {
                return Err(NetworkError::invalid(
                    format!("layers[{k}].a"),
                    "layer has zero width",
                ));
            }
            if layer.b.len() != width || layer.c.len() != width {
                return Err(NetworkError::invalid(
                    format!("layers[{k}]"),
                    format!(
                        "inconsistent widths: a has {}, b has {}, c has {}",
                        width,
                        layer.b.len(),
                        layer.c.len()
                    ),
                ));
            }
            for (r, row) in layer.a.iter().enumerate() {
                if row.len() != prev {
                    return Err(NetworkError::invalid(
                        format!("layers[{k}].a[{r}]"),
                        format!("expected {prev} columns, got {}", row.len()),
                    ));
                }
                for (cidx, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(NetworkError::invalid(
                            format!("layers[{k}].a[{r}][{cidx}]"),
                            "entry is not finite",
                        ));
                    }
                    if v < 0.0 {
                        return Err(NetworkError::invalid(
                            format!("layers[{k}].a[{r}][{cidx}]"),
                            format!("negative entry {v} in non-negativity-constrained matrix"),
                        ));
                    }
                }
            }
            for (r, row) in layer.b.iter().enumerate() {
                if row.len() != self.input_width {
                    return Err(NetworkError::invalid(
                        format!("layers[{k}].b[{r}]"),
                        format!("expected {} columns, got {}", self.input_width, row.len()),
                    ));
                }
                for (cidx, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(NetworkError::invalid(
                            format!("layers[{k}].b[{r}][{cidx}]"),
                            "entry is not finite",
                        ));
                    }
                    if self.monotone && v < 0.0 {
                        return Err(NetworkError::invalid(
                            format!("layers[{k}].b[{r}][{cidx}]"),
                            format!("negative entry {v} in monotone mode"),
                        ));
                    }
                }
            }
        }
        if self.out_a.len() != prev_width_for_output(self) {
            return Err(NetworkError::invalid(
                "out_a",
                format!(
                    "expected {} entries, got {}",
                    prev_width_for_output(self),
                    self.out_a.len()
                ),
            ));
        }
        if self.out_b.len() != self.input_width {
            return Err(NetworkError::invalid(
                "out_b",
                format!(
                    "expected {} entries, got {}",
                    self.input_width,
                    self.out_b.len()
                ),
            ));
        }
        for (i, &v) in self.out_a.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(NetworkError::invalid(
                    format!("out_a[{i}]"),
                    format!("entry {v} must be finite and non-negative"),
                ));
            }
        }
        for (i, &v) in self.out_b.iter().enumerate() {
            if !v.is_finite() {
                return Err(NetworkError::invalid(format!("out_b[{i}]"), "not finite"));
            }
            if self.monotone && v < 0.0 {
                return Err(NetworkError::invalid(
                    format!("out_b[{i}]"),
                    format!("negative entry {v} in monotone mode"),
                ));
            }
        }
        let _ = prev;
        Ok(())
    }

    pub fn eval(&self, k: &[f64]) -> Result<InnerEval, NetworkError> {
        let mut out = InnerEval::zeros(self.input_width);
        let mut scratch = MicnnScratch::default();
        self.eval_into(k, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(
        &self,
        k: &[f64],
        scratch: &mut MicnnScratch,
        out: &mut InnerEval,
    ) -> Result<(), NetworkError> {
        let (visits, ()) = self.eval_counted(k, scratch, out)?;
        debug_assert_eq!(visits, self.n_layers());
        Ok(())
    }

    /// Forward recursion carrying (z, dz/dK, d2z/dKdK). Returns the number
    /// of layer traversals performed; the one-pass property is that this
    /// equals `n_layers()`.
    pub fn eval_counted(
        &self,
        k: &[f64],
        scratch: &mut MicnnScratch,
        out: &mut InnerEval,
    ) -> Result<(usize, ()), NetworkError> {
        let m = self.input_width;
        check_width(m, k.len())?;
        let mut visits = 0usize;

        let s = scratch;
        s.z.clear();
        s.z.extend_from_slice(k);
        // dz starts as the identity, d2z as zero.
        s.dz.clear();
        s.dz.resize(m * m, 0.0);
        for i in 0..m {
            s.dz[i * m + i] = 1.0;
        }
        s.d2z.clear();
        s.d2z.resize(m * m * m, 0.0);

        let mut cur = m;
        for layer in &self.hidden {
            let width = layer.width();
            s.y.clear();
            s.y.resize(width, 0.0);
            s.dy.clear();
            s.dy.resize(width * m, 0.0);
            s.d2y.clear();
            s.d2y.resize(width * m * m, 0.0);

            for j in 0..width {
                let arow = &layer.a[j];
                let brow = &layer.b[j];
                let mut yj = layer.c[j];
                for p in 0..cur {
                    yj += arow[p] * s.z[p];
                }
                for q in 0..m {
                    yj += brow[q] * k[q];
                }
                s.y[j] = yj;
                for q in 0..m {
                    let mut d = brow[q];
                    for p in 0..cur {
                        d += arow[p] * s.dz[p * m + q];
                    }
                    s.dy[j * m + q] = d;
                }
                for q in 0..m {
                    for r in 0..m {
                        let mut d = 0.0;
                        for p in 0..cur {
                            d += arow[p] * s.d2z[(p * m + q) * m + r];
                        }
                        s.d2y[(j * m + q) * m + r] = d;
                    }
                }
            }

            // Apply the activation and roll the state forward.
            s.z.clear();
            s.z.resize(width, 0.0);
            s.dz.clear();
            s.dz.resize(width * m, 0.0);
            s.d2z.clear();
            s.d2z.resize(width * m * m, 0.0);
            for j in 0..width {
                let (v, d1, d2) = self.activation.eval(s.y[j]);
                s.z[j] = v;
                for q in 0..m {
                    let dyq = s.dy[j * m + q];
                    s.dz[j * m + q] = d1 * dyq;
                    for r in 0..m {
                        s.d2z[(j * m + q) * m + r] =
                            d1 * s.d2y[(j * m + q) * m + r] + d2 * dyq * s.dy[j * m + r];
                    }
                }
            }
            cur = width;
            visits += 1;
        }

        out.reset(m);
        let mut value = 0.0;
        for p in 0..cur {
            value += self.out_a[p] * s.z[p];
        }
        for q in 0..m {
            value += self.out_b[q] * k[q];
        }
        out.value = value;
        for q in 0..m {
            let mut d = self.out_b[q];
            for p in 0..cur {
                d += self.out_a[p] * s.dz[p * m + q];
            }
            out.grad[q] = d;
        }
        for q in 0..m {
            for r in 0..m {
                let mut d = 0.0;
                for p in 0..cur {
                    d += self.out_a[p] * s.d2z[(p * m + q) * m + r];
                }
                out.hess[q * m + r] = d;
            }
        }
        visits += 1;
        Ok((visits, ()))
    }

    /// Value-only forward pass (used by the finite-difference baseline).
    pub fn value(&self, k: &[f64]) -> Result<f64, NetworkError> {
        let m = self.input_width;
        check_width(m, k.len())?;
        let mut z: Vec<f64> = k.to_vec();
        for layer in &self.hidden {
            let width = layer.width();
            let mut next = vec![0.0; width];
            for j in 0..width {
                let mut yj = layer.c[j];
                for (p, &zp) in z.iter().enumerate() {
                    yj += layer.a[j][p] * zp;
                }
                for q in 0..m {
                    yj += layer.b[j][q] * k[q];
                }
                next[j] = self.activation.value(yj);
            }
            z = next;
        }
        let mut value = 0.0;
        for (p, &zp) in z.iter().enumerate() {
            value += self.out_a[p] * zp;
        }
        for q in 0..m {
            value += self.out_b[q] * k[q];
        }
        Ok(value)
    }
}

fn prev_width_for_output(w: &MicnnWeights) -> usize {
    w.hidden.last().map_or(w.input_width, |l| l.width())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::fd_oracle;

    fn zero_net(m: usize) -> MicnnWeights {
        MicnnWeights {
            input_width: m,
            hidden: vec![MicnnLayer {
                a: vec![vec![0.0; m]; 4],
                b: vec![vec![0.0; m]; 4],
                c: vec![0.0; 4],
            }],
            out_a: vec![0.0; 4],
            out_b: vec![0.0; m],
            activation: Activation::Softplus,
            monotone: true,
        }
    }

    fn small_random_net(m: usize, widths: &[usize], seed: u64) -> MicnnWeights {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut hidden = Vec::new();
        let mut prev = m;
        for &w in widths {
            hidden.push(MicnnLayer {
                a: (0..w).map(|_| (0..prev).map(|_| next() * 0.7).collect()).collect(),
                b: (0..w).map(|_| (0..m).map(|_| next() * 0.7).collect()).collect(),
                c: (0..w).map(|_| next() - 0.5).collect(),
            });
            prev = w;
        }
        MicnnWeights {
            input_width: m,
            hidden,
            out_a: (0..prev).map(|_| next()).collect(),
            out_b: (0..m).map(|_| next()).collect(),
            activation: Activation::Softplus,
            monotone: true,
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        // Softplus(0) = ln 2 per node, but zero output weights kill it all.
        let net = zero_net(3);
        let eval = net.eval(&[0.4, -0.2, 1.1]).unwrap();
        assert_eq!(eval.value, 0.0);
        assert!(eval.grad.iter().all(|&g| g == 0.0));
        assert!(eval.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn linear_network_gradient_is_skip_row() {
        let net = MicnnWeights {
            input_width: 3,
            hidden: vec![],
            out_a: vec![0.0; 3],
            out_b: vec![1.5, 0.25, 2.0],
            activation: Activation::Softplus,
            monotone: true,
        };
        let eval = net.eval(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(eval.value, 1.5 + 0.5 + 6.0);
        assert_eq!(eval.grad, vec![1.5, 0.25, 2.0]);
        assert!(eval.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn gradient_and_hessian_match_fd() {
        for seed in 0..10u64 {
            let net = small_random_net(3, &[8, 8], 1000 + seed);
            net.validate().unwrap();
            let k = [1.1 + 0.1 * seed as f64, 2.9, 0.7];
            let analytic = net.eval(&k).unwrap();
            let fd = fd_oracle(|x| net.value(x), &k, 1e-6, 1e-4).unwrap();
            for q in 0..3 {
                let scale = fd.grad[q].abs().max(1.0);
                assert!(
                    (analytic.grad[q] - fd.grad[q]).abs() / scale < 1e-6,
                    "grad mismatch at seed {seed}: {} vs {}",
                    analytic.grad[q],
                    fd.grad[q]
                );
                for r in 0..3 {
                    let scale = fd.hess_at(q, r).abs().max(1.0);
                    assert!(
                        (analytic.hess_at(q, r) - fd.hess_at(q, r)).abs() / scale < 1e-4,
                        "hess mismatch at seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn one_pass_layer_visits() {
        let net = small_random_net(3, &[8, 8], 77);
        let mut scratch = MicnnScratch::default();
        let mut out = InnerEval::zeros(3);
        let (visits, ()) = net.eval_counted(&[1.0, 2.0, 3.0], &mut scratch, &mut out).unwrap();
        assert_eq!(visits, net.n_layers());
        assert_eq!(visits, 3);
    }

    #[test]
    fn negative_constrained_entry_rejected() {
        let mut net = small_random_net(2, &[4], 5);
        net.hidden[0].a[1][0] = -0.3;
        let err = net.validate().unwrap_err();
        match err {
            NetworkError::InvalidWeights { path, .. } => assert_eq!(path, "layers[0].a[1][0]"),
            other => panic!("unexpected error {other:?}"),
        }

        let mut net = small_random_net(2, &[4], 6);
        net.hidden[0].b[2][1] = -0.1;
        assert!(net.validate().is_err());
        net.monotone = false;
        assert!(net.validate().is_ok());
    }

    #[test]
    fn width_mismatch_rejected() {
        let net = small_random_net(3, &[4], 9);
        let err = net.eval(&[1.0, 2.0]).unwrap_err();
        assert_eq!(err, NetworkError::WidthMismatch { expected: 3, got: 2 });
    }
}
