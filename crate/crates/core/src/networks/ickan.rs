//! Input-convex Kolmogorov-Arnold network: layers of weighted univariate
//! B-splines summed over incoming edges. Basis functions are evaluated with
//! the De Boor recursion; first and second derivatives use the standard
//! derivative recurrence (the derivative of an order-k spline is an
//! order-(k-1) spline over the same knots). Convexity and monotonicity come
//! from non-negative edge weights and control points with non-decreasing,
//! non-negative increments.

use serde::{Deserialize, Serialize};

use super::{check_width, InnerEval, NetworkError};

/// Policy for spline inputs outside [x_min, x_max]. Newton iterates can
/// momentarily leave the calibrated range, so the default extends each
/// spline linearly with its boundary tangent, which preserves convexity and
/// monotonicity. Clamp mode freezes the value at the boundary instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    #[default]
    Linear,
    Clamp,
}

/// Shared uniform B-spline basis: `n_basis` functions of order `order` over
/// knots extended `order` intervals beyond each end of [x_min, x_max], so
/// that the partition of unity holds on the whole range.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    order: usize,
    n_basis: usize,
    x_min: f64,
    x_max: f64,
    knots: Vec<f64>,
}

/// Scratch for basis evaluation: the order pyramid plus the three output rows.
#[derive(Debug, Default, Clone)]
pub struct BasisWork {
    pyramid: Vec<f64>,
    pub b: Vec<f64>,
    pub db: Vec<f64>,
    pub d2b: Vec<f64>,
}

impl SplineBasis {
    /// Builds a uniform knot vector for the given order and basis count.
    pub fn uniform(
        order: usize,
        n_basis: usize,
        x_min: f64,
        x_max: f64,
    ) -> Result<Self, NetworkError> {
        if order < 2 {
            return Err(NetworkError::invalid(
                "splines.order",
                "order must be at least 2 for second derivatives",
            ));
        }
        if n_basis <= order {
            return Err(NetworkError::invalid(
                "splines.n_basis",
                format!("need more than order = {order} basis functions, got {n_basis}"),
            ));
        }
        if !(x_max > x_min) {
            return Err(NetworkError::invalid(
                "splines.range",
                format!("empty input range [{x_min}, {x_max}]"),
            ));
        }
        let n_grid = n_basis - order;
        let h = (x_max - x_min) / n_grid as f64;
        let m_b = n_basis + order + 1;
        let knots = (0..m_b)
            .map(|i| x_min + (i as f64 - order as f64) * h)
            .collect();
        Ok(SplineBasis {
            order,
            n_basis,
            x_min,
            x_max,
            knots,
        })
    }

    /// Validates an explicit knot vector: uniform spacing and enough knots
    /// for the order.
    pub fn from_knots(order: usize, knots: Vec<f64>) -> Result<Self, NetworkError> {
        if order < 2 {
            return Err(NetworkError::invalid(
                "splines.order",
                "order must be at least 2 for second derivatives",
            ));
        }
        if knots.len() < 2 * order + 3 {
            return Err(NetworkError::invalid(
                "splines.knots",
                format!(
                    "knot vector too short for order {order}: need at least {}, got {}",
                    2 * order + 3,
                    knots.len()
                ),
            ));
        }
        let h = knots[1] - knots[0];
        if !(h > 0.0) {
            return Err(NetworkError::invalid("splines.knots", "knots must increase"));
        }
        for i in 1..knots.len() {
            let step = knots[i] - knots[i - 1];
            if (step - h).abs() > 1e-9 * h.abs() {
                return Err(NetworkError::invalid(
                    format!("splines.knots[{i}]"),
                    format!("non-uniform spacing: {step} vs {h}"),
                ));
            }
        }
        let n_basis = knots.len() - order - 1;
        let x_min = knots[order];
        let x_max = knots[n_basis];
        Ok(SplineBasis {
            order,
            n_basis,
            x_min,
            x_max,
            knots,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Evaluates all basis functions with first and second derivatives into
    /// `work.b`, `work.db`, `work.d2b`. `x` must lie in the domain; the
    /// right endpoint is treated as belonging to the last interior span so
    /// the partition of unity holds on the closed interval.
    pub fn eval_into(&self, x: f64, work: &mut BasisWork) {
        let k = self.order;
        let t = &self.knots;
        let n_fun0 = t.len() - 1;

        work.pyramid.clear();
        work.pyramid.resize((k + 1) * n_fun0, 0.0);

        // Order 0: indicator of the span holding x, clamped to the interior
        // spans so x == x_max evaluates as a left limit.
        let n_grid = self.n_basis - k;
        let h = (self.x_max - self.x_min) / n_grid as f64;
        let raw = ((x - self.x_min) / h).floor() as isize + k as isize;
        let span = raw.clamp(k as isize, (self.n_basis - 1) as isize) as usize;
        work.pyramid[span] = 1.0;

        for kappa in 1..=k {
            for i in 0..(n_fun0 - kappa) {
                let lower = work.pyramid[(kappa - 1) * n_fun0 + i];
                let upper = work.pyramid[(kappa - 1) * n_fun0 + i + 1];
                let left = if lower != 0.0 {
                    (x - t[i]) / (t[i + kappa] - t[i]) * lower
                } else {
                    0.0
                };
                let right = if upper != 0.0 {
                    (t[i + kappa + 1] - x) / (t[i + kappa + 1] - t[i + 1]) * upper
                } else {
                    0.0
                };
                work.pyramid[kappa * n_fun0 + i] = left + right;
            }
        }

        let nb = self.n_basis;
        work.b.clear();
        work.b.extend_from_slice(&work.pyramid[k * n_fun0..k * n_fun0 + nb]);

        let kf = k as f64;
        let km1 = &work.pyramid[(k - 1) * n_fun0..k * n_fun0];
        work.db.clear();
        work.db.resize(nb, 0.0);
        for i in 0..nb {
            work.db[i] = kf / (t[i + k] - t[i]) * km1[i] - kf / (t[i + k + 1] - t[i + 1]) * km1[i + 1];
        }

        let km1f = (k - 1) as f64;
        let km2 = &work.pyramid[(k - 2) * n_fun0..(k - 1) * n_fun0];
        let d_km1 = |i: usize| -> f64 {
            km1f / (t[i + k - 1] - t[i]) * km2[i] - km1f / (t[i + k] - t[i + 1]) * km2[i + 1]
        };
        work.d2b.clear();
        work.d2b.resize(nb, 0.0);
        for i in 0..nb {
            work.d2b[i] =
                kf / (t[i + k] - t[i]) * d_km1(i) - kf / (t[i + k + 1] - t[i + 1]) * d_km1(i + 1);
        }
    }
}

/// One spline edge: s(x) = weight * sum_i control[i] B_i(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanEdge {
    pub weight: f64,
    pub control: Vec<f64>,
}

/// A layer of `n_out * n_in` edges, stored row-major by output.
#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub edges: Vec<KanEdge>,
}

impl KanLayer {
    fn edge(&self, out: usize, inp: usize) -> &KanEdge {
        &self.edges[out * self.n_in + inp]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IckanWeights {
    pub basis: SplineBasis,
    pub layers: Vec<KanLayer>,
    pub extrapolation: Extrapolation,
}

#[derive(Debug, Default, Clone)]
pub struct IckanScratch {
    basis: BasisWork,
    z: Vec<f64>,
    dz: Vec<f64>,
    d2z: Vec<f64>,
    znew: Vec<f64>,
    dznew: Vec<f64>,
    d2znew: Vec<f64>,
}

impl IckanWeights {
    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n_in)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.layers.is_empty() {
            return Err(NetworkError::invalid("splines.layers", "no layers"));
        }
        let mut prev_out = self.layers[0].n_in;
        if prev_out == 0 {
            return Err(NetworkError::invalid("splines.layers[0].n_in", "zero width"));
        }
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.n_in != prev_out {
                return Err(NetworkError::invalid(
                    format!("splines.layers[{li}].n_in"),
                    format!("expected {prev_out}, got {}", layer.n_in),
                ));
            }
            if layer.n_out == 0 {
                return Err(NetworkError::invalid(
                    format!("splines.layers[{li}].n_out"),
                    "zero width",
                ));
            }
            if layer.edges.len() != layer.n_in * layer.n_out {
                return Err(NetworkError::invalid(
                    format!("splines.layers[{li}].edges"),
                    format!(
                        "expected {} edges, got {}",
                        layer.n_in * layer.n_out,
                        layer.edges.len()
                    ),
                ));
            }
            for (ei, edge) in layer.edges.iter().enumerate() {
                let path = format!("splines.layers[{li}].edges[{ei}]");
                if !edge.weight.is_finite() || edge.weight < 0.0 {
                    return Err(NetworkError::invalid(
                        format!("{path}.weight"),
                        format!("weight {} must be finite and non-negative", edge.weight),
                    ));
                }
                if edge.control.len() != self.basis.n_basis() {
                    return Err(NetworkError::invalid(
                        format!("{path}.control"),
                        format!(
                            "expected {} control points, got {}",
                            self.basis.n_basis(),
                            edge.control.len()
                        ),
                    ));
                }
                for (ci, &c) in edge.control.iter().enumerate() {
                    if !c.is_finite() {
                        return Err(NetworkError::invalid(
                            format!("{path}.control[{ci}]"),
                            "not finite",
                        ));
                    }
                }
                // c[i+2] - c[i+1] >= c[i+1] - c[i] >= 0 keeps every spline
                // convex and non-decreasing.
                for ci in 0..edge.control.len().saturating_sub(1) {
                    let d = edge.control[ci + 1] - edge.control[ci];
                    if d < 0.0 {
                        return Err(NetworkError::invalid(
                            format!("{path}.control[{}]", ci + 1),
                            format!("decreasing control step {d}"),
                        ));
                    }
                    if ci + 2 < edge.control.len() {
                        let d2 = edge.control[ci + 2] - edge.control[ci + 1];
                        if d2 < d {
                            return Err(NetworkError::invalid(
                                format!("{path}.control[{}]", ci + 2),
                                format!("control increments must be non-decreasing ({d2} < {d})"),
                            ));
                        }
                    }
                }
            }
            prev_out = layer.n_out;
        }
        if prev_out != 1 {
            return Err(NetworkError::invalid(
                "splines.layers",
                format!("final layer must have a single output, got {prev_out}"),
            ));
        }
        Ok(())
    }

    fn spline(&self, edge: &KanEdge, x: f64, work: &mut BasisWork) -> (f64, f64, f64) {
        let (lo, hi) = self.basis.domain();
        let (x_eval, extrapolate) = if x < lo {
            (lo, Some(x - lo))
        } else if x > hi {
            (hi, Some(x - hi))
        } else {
            (x, None)
        };
        self.basis.eval_into(x_eval, work);
        let mut v = 0.0;
        let mut d = 0.0;
        let mut dd = 0.0;
        for (i, &c) in edge.control.iter().enumerate() {
            v += c * work.b[i];
            d += c * work.db[i];
            dd += c * work.d2b[i];
        }
        let w = edge.weight;
        match (extrapolate, self.extrapolation) {
            (None, _) => (w * v, w * d, w * dd),
            (Some(dx), Extrapolation::Linear) => (w * (v + d * dx), w * d, 0.0),
            (Some(_), Extrapolation::Clamp) => (w * v, 0.0, 0.0),
        }
    }

    pub fn eval(&self, k: &[f64]) -> Result<InnerEval, NetworkError> {
        let mut out = InnerEval::zeros(self.input_width());
        let mut scratch = IckanScratch::default();
        self.eval_into(k, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(
        &self,
        k: &[f64],
        s: &mut IckanScratch,
        out: &mut InnerEval,
    ) -> Result<(), NetworkError> {
        let m = self.input_width();
        check_width(m, k.len())?;

        s.z.clear();
        s.z.extend_from_slice(k);
        s.dz.clear();
        s.dz.resize(m * m, 0.0);
        for i in 0..m {
            s.dz[i * m + i] = 1.0;
        }
        s.d2z.clear();
        s.d2z.resize(m * m * m, 0.0);

        for layer in &self.layers {
            let (n_in, n_out) = (layer.n_in, layer.n_out);
            s.znew.clear();
            s.znew.resize(n_out, 0.0);
            s.dznew.clear();
            s.dznew.resize(n_out * m, 0.0);
            s.d2znew.clear();
            s.d2znew.resize(n_out * m * m, 0.0);

            for o in 0..n_out {
                for j in 0..n_in {
                    let (sv, sd, sdd) = self.spline(layer.edge(o, j), s.z[j], &mut s.basis);
                    s.znew[o] += sv;
                    for q in 0..m {
                        let djq = s.dz[j * m + q];
                        s.dznew[o * m + q] += sd * djq;
                        for r in 0..m {
                            s.d2znew[(o * m + q) * m + r] +=
                                sdd * djq * s.dz[j * m + r] + sd * s.d2z[(j * m + q) * m + r];
                        }
                    }
                }
            }
            std::mem::swap(&mut s.z, &mut s.znew);
            std::mem::swap(&mut s.dz, &mut s.dznew);
            std::mem::swap(&mut s.d2z, &mut s.d2znew);
        }

        out.reset(m);
        out.value = s.z[0];
        out.grad.copy_from_slice(&s.dz[0..m]);
        out.hess.copy_from_slice(&s.d2z[0..m * m]);
        Ok(())
    }

    pub fn value(&self, k: &[f64]) -> Result<f64, NetworkError> {
        let m = self.input_width();
        check_width(m, k.len())?;
        let mut work = BasisWork::default();
        let mut z: Vec<f64> = k.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.n_out];
            for o in 0..layer.n_out {
                for j in 0..layer.n_in {
                    let (sv, _, _) = self.spline(layer.edge(o, j), z[j], &mut work);
                    next[o] += sv;
                }
            }
            z = next;
        }
        Ok(z[0])
    }

    /// Inputs presented to the splines of each layer for a given network
    /// input: element `r` holds the activations entering layer `r`. Useful
    /// for range diagnostics and for keeping test points away from knots.
    pub fn layer_inputs(&self, k: &[f64]) -> Result<Vec<Vec<f64>>, NetworkError> {
        let m = self.input_width();
        check_width(m, k.len())?;
        let mut work = BasisWork::default();
        let mut z: Vec<f64> = k.to_vec();
        let mut all = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            all.push(z.clone());
            let mut next = vec![0.0; layer.n_out];
            for o in 0..layer.n_out {
                for j in 0..layer.n_in {
                    let (sv, _, _) = self.spline(layer.edge(o, j), z[j], &mut work);
                    next[o] += sv;
                }
            }
            z = next;
        }
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::fd_oracle;

    fn basis() -> SplineBasis {
        SplineBasis::uniform(3, 8, -1.0, 4.0).unwrap()
    }

    fn single_layer(edges: Vec<KanEdge>, n_in: usize) -> IckanWeights {
        IckanWeights {
            basis: basis(),
            layers: vec![KanLayer {
                n_in,
                n_out: 1,
                edges,
            }],
            extrapolation: Extrapolation::Linear,
        }
    }

    fn convex_control(seed: u64, n: usize) -> Vec<f64> {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        // Increments sorted ascending keep the convexity condition.
        let mut incr: Vec<f64> = (0..n - 1).map(|_| next()).collect();
        incr.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut c = vec![next() - 0.5];
        for d in incr {
            let last = *c.last().unwrap();
            c.push(last + d);
        }
        c
    }

    #[test]
    fn partition_of_unity_on_scan() {
        let b = basis();
        let mut work = BasisWork::default();
        let (lo, hi) = b.domain();
        for i in 0..=1000 {
            let x = lo + (hi - lo) * i as f64 / 1000.0;
            b.eval_into(x, &mut work);
            let sum: f64 = work.b.iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-12,
                "partition of unity failed at x = {x}: sum = {sum}"
            );
        }
    }

    #[test]
    fn constant_spline_has_zero_gradient() {
        let net = single_layer(
            vec![KanEdge {
                weight: 0.8,
                control: vec![2.5; 8],
            }],
            1,
        );
        net.validate().unwrap();
        let eval = net.eval(&[1.3]).unwrap();
        // Sum of basis functions is one, so the value is weight * constant.
        assert!((eval.value - 0.8 * 2.5).abs() < 1e-13);
        assert!(eval.grad[0].abs() < 1e-13);
        assert!(eval.hess[0].abs() < 1e-12);
    }

    #[test]
    fn linear_control_points_give_affine_spline() {
        let h = 0.7;
        let control: Vec<f64> = (0..8).map(|i| i as f64 * h).collect();
        let net = single_layer(
            vec![KanEdge {
                weight: 1.0,
                control,
            }],
            1,
        );
        net.validate().unwrap();
        for &x in &[-0.4, 0.0, 0.9, 2.3, 3.7] {
            let eval = net.eval(&[x]).unwrap();
            assert!(eval.hess[0].abs() < 1e-11, "hessian at {x}: {}", eval.hess[0]);
            let fd = fd_oracle(|v| net.value(v), &[x], 1e-6, 1e-4).unwrap();
            assert!((eval.grad[0] - fd.grad[0]).abs() < 1e-7);
        }
    }

    #[test]
    fn convex_control_points_match_fd_and_stay_convex() {
        for seed in 0..8u64 {
            let net = single_layer(
                vec![KanEdge {
                    weight: 0.6,
                    control: convex_control(100 + seed, 8),
                }],
                1,
            );
            net.validate().unwrap();
            for step in 0..40 {
                let x = -0.95 + 4.8 * step as f64 / 40.0;
                // Keep away from the knots (integers here) for FD accuracy.
                if (x - x.round()).abs() < 5e-3 {
                    continue;
                }
                let eval = net.eval(&[x]).unwrap();
                assert!(eval.hess[0] >= -1e-10, "second derivative dipped at {x}");
                let fd = fd_oracle(|v| net.value(v), &[x], 1e-6, 1e-4).unwrap();
                let gs = fd.grad[0].abs().max(1.0);
                assert!((eval.grad[0] - fd.grad[0]).abs() / gs < 1e-6);
                let hs = fd.hess[0].abs().max(1.0);
                assert!((eval.hess[0] - fd.hess[0]).abs() / hs < 1e-4);
            }
        }
    }

    #[test]
    fn two_layer_chain_rule_matches_fd() {
        let l0 = KanLayer {
            n_in: 2,
            n_out: 2,
            edges: (0..4)
                .map(|i| KanEdge {
                    weight: 0.3,
                    control: convex_control(200 + i, 8),
                })
                .collect(),
        };
        let l1 = KanLayer {
            n_in: 2,
            n_out: 1,
            edges: (0..2)
                .map(|i| KanEdge {
                    weight: 0.5,
                    control: convex_control(300 + i, 8),
                })
                .collect(),
        };
        let net = IckanWeights {
            basis: basis(),
            layers: vec![l0, l1],
            extrapolation: Extrapolation::Linear,
        };
        net.validate().unwrap();
        let k = [0.83, 1.41];
        let eval = net.eval(&k).unwrap();
        let fd = fd_oracle(|v| net.value(v), &k, 1e-6, 1e-4).unwrap();
        for q in 0..2 {
            let gs = fd.grad[q].abs().max(1.0);
            assert!((eval.grad[q] - fd.grad[q]).abs() / gs < 1e-5);
            for r in 0..2 {
                let hs = fd.hess_at(q, r).abs().max(1.0);
                assert!((eval.hess_at(q, r) - fd.hess_at(q, r)).abs() / hs < 1e-3);
            }
        }
    }

    #[test]
    fn linear_extrapolation_is_c1_and_flat_in_second_derivative() {
        let net = single_layer(
            vec![KanEdge {
                weight: 1.0,
                control: convex_control(41, 8),
            }],
            1,
        );
        let inside = net.eval(&[3.999999]).unwrap();
        let outside = net.eval(&[4.5]).unwrap();
        assert!((outside.grad[0] - inside.grad[0]).abs() < 1e-4);
        assert_eq!(outside.hess[0], 0.0);
    }

    #[test]
    fn malformed_knots_rejected() {
        assert!(SplineBasis::from_knots(3, vec![0.0, 1.0, 2.0]).is_err());
        let mut knots: Vec<f64> = (0..12).map(|i| i as f64).collect();
        knots[5] = 5.5;
        assert!(SplineBasis::from_knots(3, knots).is_err());
        let knots: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert!(SplineBasis::from_knots(3, knots).is_ok());
    }

    #[test]
    fn validation_rejects_nonconvex_control() {
        let mut control = convex_control(7, 8);
        control[4] = control[3] - 0.5;
        let net = single_layer(vec![KanEdge { weight: 1.0, control }], 1);
        assert!(net.validate().is_err());

        let net = single_layer(
            vec![KanEdge {
                weight: -0.2,
                control: vec![0.0; 8],
            }],
            1,
        );
        assert!(net.validate().is_err());
    }
}
