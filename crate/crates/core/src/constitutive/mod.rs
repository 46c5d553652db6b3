//! Constitutive layer: the composition Psi = N(K(F)) with single-point and
//! batch-vectorized evaluation producing (Psi, tau, c) tables, plus the
//! Gent-Thomas analytic reference model.

pub mod batch;
pub mod gent_thomas;
pub mod weights;

pub use batch::MaterialBatch;
pub use gent_thomas::{eval_gent_thomas, gent_thomas_model, GentThomasInner};
pub use weights::{load_model, parse_model, ModelFile, WeightFileError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{self, KinematicConfig, KinematicEval, KinematicsError, LoadPath};
use crate::networks::ickan::IckanScratch;
use crate::networks::micnn::MicnnScratch;
use crate::networks::{
    CannWeights, IckanWeights, InnerEval, MicnnWeights, NetworkError,
};
use crate::tensors::{
    push_forward_stiffness, push_forward_stress, Mat3, Stiffness3, SymTensor3, TensorError,
    VOIGT_PAIRS,
};

/// How stress and stiffness are obtained from the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Analytic first and second derivatives assembled in one forward pass.
    Cgo,
    /// Central differences of the energy with respect to F, mapped through
    /// the push-forward transform. Many value passes per point; this is the
    /// correctness oracle and the slow baseline for benchmarks. (A true
    /// reverse-mode AD baseline is out of scope; benchmark labels say so.)
    FdBaseline,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("kinematic layer produces {kinematic} scalars but the inner network expects {inner}")]
    WidthMismatch { kinematic: usize, inner: usize },
}

/// Per-point failure inside a batched sweep, tagged with the table index.
#[derive(Debug, Error)]
#[error("constitutive evaluation failed at point {index}: {source}")]
pub struct BatchError {
    pub index: usize,
    #[source]
    pub source: ModelError,
}

/// Inner-network selection with its trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerSpec {
    Micnn(MicnnWeights),
    Cann(CannWeights),
    Ickan(IckanWeights),
    GentThomas(GentThomasInner),
}

impl InnerSpec {
    pub fn input_width(&self) -> usize {
        match self {
            InnerSpec::Micnn(w) => w.input_width(),
            InnerSpec::Cann(w) => w.input_width(),
            InnerSpec::Ickan(w) => w.input_width(),
            InnerSpec::GentThomas(_) => GentThomasInner::WIDTH,
        }
    }

    pub fn architecture(&self) -> &'static str {
        match self {
            InnerSpec::Micnn(_) => "micnn",
            InnerSpec::Cann(_) => "cann",
            InnerSpec::Ickan(_) => "ickan",
            InnerSpec::GentThomas(_) => "gent_thomas",
        }
    }

    fn validate(&self) -> Result<(), NetworkError> {
        match self {
            InnerSpec::Micnn(w) => w.validate(),
            InnerSpec::Cann(w) => w.validate(),
            InnerSpec::Ickan(w) => w.validate(),
            InnerSpec::GentThomas(_) => Ok(()),
        }
    }
}

/// A neural constitutive model: kinematic layer, inner network, and the
/// derivative mode. Immutable after construction and shareable across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct NcmDefinition {
    pub kinematic: KinematicConfig,
    pub inner: InnerSpec,
    pub mode: DerivativeMode,
}

/// Energy, Kirchhoff stress, and spatial tangent at one material point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub psi: f64,
    pub tau: SymTensor3,
    pub stiffness: Stiffness3,
}

/// Reusable buffers for one stream of point evaluations. A fresh set is
/// created per vectorized call, which is the per-call overhead the batched
/// sweeps amortize.
#[derive(Debug)]
pub struct EvalScratch {
    kin: KinematicEval,
    kin_values: Vec<f64>,
    inner: InnerEval,
    net: NetScratch,
}

#[derive(Debug)]
enum NetScratch {
    Micnn(MicnnScratch),
    Ickan(IckanScratch),
    None,
}

impl EvalScratch {
    pub fn for_model(model: &NcmDefinition) -> Self {
        let m = model.kinematic.width();
        EvalScratch {
            kin: KinematicEval::with_capacity(m),
            kin_values: Vec::with_capacity(m),
            inner: InnerEval::zeros(m),
            net: match &model.inner {
                InnerSpec::Micnn(_) => NetScratch::Micnn(MicnnScratch::default()),
                InnerSpec::Ickan(_) => NetScratch::Ickan(IckanScratch::default()),
                _ => NetScratch::None,
            },
        }
    }
}

impl NcmDefinition {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.kinematic.validate()?;
        self.inner.validate()?;
        let kw = self.kinematic.width();
        let iw = self.inner.input_width();
        if kw != iw {
            return Err(ModelError::WidthMismatch {
                kinematic: kw,
                inner: iw,
            });
        }
        Ok(())
    }

    /// Strain energy density only.
    pub fn psi(&self, f: &Mat3) -> Result<f64, ModelError> {
        let mut values = Vec::with_capacity(self.kinematic.width());
        self.psi_with(f, &mut values)
    }

    fn psi_with(&self, f: &Mat3, values: &mut Vec<f64>) -> Result<f64, ModelError> {
        kinematics::values_into(f, &self.kinematic, values)?;
        let v = match &self.inner {
            InnerSpec::Micnn(w) => w.value(values)?,
            InnerSpec::Cann(w) => w.value(values)?,
            InnerSpec::Ickan(w) => w.value(values)?,
            InnerSpec::GentThomas(g) => g.value(values)?,
        };
        Ok(v)
    }

    /// Energy, stress, and tangent at a single material point.
    pub fn eval_point(&self, f: &Mat3) -> Result<PointEval, ModelError> {
        let mut scratch = EvalScratch::for_model(self);
        self.eval_point_with(f, &mut scratch)
    }

    /// Same as [`eval_point`](Self::eval_point) but reusing caller-owned
    /// scratch. The batched kernel runs exactly this per point, in index
    /// order, so batch and per-point results are bitwise identical.
    pub fn eval_point_with(
        &self,
        f: &Mat3,
        scratch: &mut EvalScratch,
    ) -> Result<PointEval, ModelError> {
        match self.mode {
            DerivativeMode::Cgo => {
                kinematics::eval_into(f, &self.kinematic, &mut scratch.kin)?;
                match &self.inner {
                    InnerSpec::Micnn(w) => {
                        let net = match &mut scratch.net {
                            NetScratch::Micnn(s) => s,
                            _ => unreachable!("scratch built for a different architecture"),
                        };
                        w.eval_into(&scratch.kin.values, net, &mut scratch.inner)?;
                    }
                    InnerSpec::Cann(w) => {
                        w.eval_into(&scratch.kin.values, &mut scratch.inner)?;
                    }
                    InnerSpec::Ickan(w) => {
                        let net = match &mut scratch.net {
                            NetScratch::Ickan(s) => s,
                            _ => unreachable!("scratch built for a different architecture"),
                        };
                        w.eval_into(&scratch.kin.values, net, &mut scratch.inner)?;
                    }
                    InnerSpec::GentThomas(g) => {
                        g.eval_into(&scratch.kin.values, &mut scratch.inner)?;
                    }
                }
                let tau = push_forward_stress(&scratch.inner.grad, &scratch.kin.g)?;
                let stiffness = push_forward_stiffness(
                    &scratch.inner.grad,
                    &scratch.inner.hess,
                    &scratch.kin.g,
                    &scratch.kin.gg,
                )?;
                Ok(PointEval {
                    psi: scratch.inner.value,
                    tau,
                    stiffness,
                })
            }
            DerivativeMode::FdBaseline => self.fd_point(f, &mut scratch.kin_values),
        }
    }

    /// Central differences of Psi with respect to F, pushed forward:
    /// tau_ij = (dPsi/dF_iJ) F_jJ and
    /// c_ijkl = F_jJ (d2Psi/dF_iJ dF_kL) F_lL - delta_ik tau_jl.
    fn fd_point(&self, f: &Mat3, values: &mut Vec<f64>) -> Result<PointEval, ModelError> {
        use crate::networks::fd::{FD_GRAD_STEP, FD_HESS_STEP};

        let psi0 = self.psi_with(f, values)?;
        let mut fp = *f;

        let mut dpsi = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let h = FD_GRAD_STEP * f.0[i][j].abs().max(1.0);
                fp.0[i][j] = f.0[i][j] + h;
                let a = self.psi_with(&fp, values)?;
                fp.0[i][j] = f.0[i][j] - h;
                let b = self.psi_with(&fp, values)?;
                fp.0[i][j] = f.0[i][j];
                dpsi[i][j] = (a - b) / (2.0 * h);
            }
        }
        let mut tau_m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for jj in 0..3 {
                    s += dpsi[i][jj] * f.0[j][jj];
                }
                tau_m.0[i][j] = s;
            }
        }
        // Symmetrize: tau is symmetric analytically, FD noise is not.
        let tau = SymTensor3::from_mat3(&((tau_m + tau_m.transpose()) * 0.5));

        // Hessian over the 9 components of F (symmetric in the pair swap).
        let mut hess = [[0.0f64; 9]; 9];
        let idx = |i: usize, j: usize| 3 * i + j;
        for a in 0..9 {
            let (ia, ja) = (a / 3, a % 3);
            let ha = FD_HESS_STEP * f.0[ia][ja].abs().max(1.0);
            fp.0[ia][ja] = f.0[ia][ja] + ha;
            let pp = self.psi_with(&fp, values)?;
            fp.0[ia][ja] = f.0[ia][ja] - ha;
            let mm = self.psi_with(&fp, values)?;
            fp.0[ia][ja] = f.0[ia][ja];
            hess[a][a] = (pp - 2.0 * psi0 + mm) / (ha * ha);
            for b in (a + 1)..9 {
                let (ib, jb) = (b / 3, b % 3);
                let hb = FD_HESS_STEP * f.0[ib][jb].abs().max(1.0);
                fp.0[ia][ja] = f.0[ia][ja] + ha;
                fp.0[ib][jb] = f.0[ib][jb] + hb;
                let pp = self.psi_with(&fp, values)?;
                fp.0[ib][jb] = f.0[ib][jb] - hb;
                let pm = self.psi_with(&fp, values)?;
                fp.0[ia][ja] = f.0[ia][ja] - ha;
                let mm = self.psi_with(&fp, values)?;
                fp.0[ib][jb] = f.0[ib][jb] + hb;
                let mp = self.psi_with(&fp, values)?;
                fp.0[ia][ja] = f.0[ia][ja];
                fp.0[ib][jb] = f.0[ib][jb];
                let v = (pp - pm - mp + mm) / (4.0 * ha * hb);
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }

        let dense = |i: usize, j: usize, k: usize, l: usize| -> f64 {
            let mut s = 0.0;
            for jj in 0..3 {
                for ll in 0..3 {
                    s += f.0[j][jj] * hess[idx(i, jj)][idx(k, ll)] * f.0[l][ll];
                }
            }
            if i == k {
                s -= tau.get(j, l);
            }
            s
        };
        let mut stiffness = Stiffness3::ZERO;
        for (p, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            for (q, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
                stiffness.0[p][q] = 0.25
                    * (dense(i, j, k, l) + dense(j, i, k, l) + dense(i, j, l, k)
                        + dense(j, i, l, k));
            }
        }
        Ok(PointEval {
            psi: psi0,
            tau,
            stiffness,
        })
    }

    /// Fills the output tables of `batch` in place. The results are the same
    /// floating-point values as calling [`eval_point`](Self::eval_point) on
    /// every table entry in index order; per-point arithmetic is never
    /// reassociated by the batching. One scratch set is allocated per call,
    /// so larger batches amortize the per-call overhead.
    pub fn eval_batch(&self, batch: &mut MaterialBatch) -> Result<(), BatchError> {
        let mut scratch = EvalScratch::for_model(self);
        for i in 0..batch.len() {
            let f = batch.f_at(i);
            let eval = self
                .eval_point_with(&f, &mut scratch)
                .map_err(|source| BatchError { index: i, source })?;
            batch.store(i, &eval);
        }
        Ok(())
    }
}

/// One sample of a loading-path scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub gamma: f64,
    pub psi: f64,
}

/// Samples Psi along a loading path from 0 to `gamma_max` inclusive.
pub fn path_scan(
    model: &NcmDefinition,
    path: LoadPath,
    gamma_max: f64,
    steps: usize,
) -> Result<Vec<PathSample>, ModelError> {
    assert!(steps >= 1, "path scan needs at least one step");
    let n_rows = if gamma_max == 0.0 { 1 } else { steps + 1 };
    let mut rows = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let gamma = if n_rows == 1 {
            0.0
        } else {
            gamma_max * i as f64 / steps as f64
        };
        let f = kinematics::loading_path(path, gamma)?;
        rows.push(PathSample {
            gamma,
            psi: model.psi(&f)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Invariant;
    use crate::networks::{Activation, MicnnLayer};

    fn zero_micnn_model() -> NcmDefinition {
        NcmDefinition {
            kinematic: KinematicConfig::isochoric(vec![
                Invariant::I1,
                Invariant::I2,
                Invariant::J,
            ]),
            inner: InnerSpec::Micnn(MicnnWeights {
                input_width: 3,
                hidden: vec![MicnnLayer {
                    a: vec![vec![0.0; 3]; 4],
                    b: vec![vec![0.0; 3]; 4],
                    c: vec![0.0; 4],
                }],
                out_a: vec![0.0; 4],
                out_b: vec![0.0; 3],
                activation: Activation::Softplus,
                monotone: true,
            }),
            mode: DerivativeMode::Cgo,
        }
    }

    #[test]
    fn zero_weights_give_zero_stress_and_stiffness() {
        let model = zero_micnn_model();
        model.validate().unwrap();
        let eval = model.eval_point(&Mat3::diag(1.3, 0.9, 1.1)).unwrap();
        assert_eq!(eval.psi, 0.0);
        assert_eq!(eval.tau.norm_inf(), 0.0);
        assert_eq!(eval.stiffness.norm_inf(), 0.0);
    }

    #[test]
    fn width_mismatch_caught_by_validate() {
        let mut model = zero_micnn_model();
        model.kinematic = KinematicConfig::isochoric(vec![Invariant::I1, Invariant::J]);
        assert!(matches!(
            model.validate(),
            Err(ModelError::WidthMismatch { kinematic: 2, inner: 3 })
        ));
    }

    #[test]
    fn path_scan_zero_gamma_single_row() {
        let model = gent_thomas_model();
        let rows = path_scan(&model, LoadPath::UT, 0.0, 10).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].gamma, 0.0);
        assert!(rows[0].psi.abs() < 1e-14);
    }

    #[test]
    fn path_scan_matches_point_eval() {
        let model = gent_thomas_model();
        let rows = path_scan(&model, LoadPath::PS, 0.5, 5).unwrap();
        assert_eq!(rows.len(), 6);
        let f = kinematics::loading_path(LoadPath::PS, 0.5).unwrap();
        let direct = model.eval_point(&f).unwrap();
        assert_eq!(rows[5].psi, direct.psi);
    }
}
