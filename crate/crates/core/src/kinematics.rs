//! Kinematic layer: invariants of the right Cauchy-Green tensor, the
//! isochoric split, their first and second push-forward tensors G^m and
//! GG^m, and the six benchmark loading paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensors::{
    dot, sym_outer, tensor_prod, tensor_prod_bar, Mat3, Stiffness3, SymTensor3, Vec3,
};

/// Deformation gradients with determinant at or below this are rejected
/// rather than clamped; the solver's load stepping is responsible for
/// avoiding inversion.
pub const MIN_DET_F: f64 = 1e-12;

const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("deformation gradient is not invertible (det F = {det:e})")]
    NonInvertible { det: f64 },
    #[error("kinematic config selects no invariants")]
    EmptyInvariants,
    #[error("structural vector {index} has norm {norm} (must be unit within {UNIT_NORM_TOL:e})")]
    NotUnitVector { index: usize, norm: f64 },
    #[error("invariant {name} references structural vector {index}, only {count} defined")]
    StructuralIndexOutOfRange {
        name: String,
        index: usize,
        count: usize,
    },
    #[error("cross-coupled pair {name} requires allow_cross_pairs")]
    CrossPairDisallowed { name: String },
    #[error("invariant {name} is not available in the {variant:?} variant")]
    VariantMismatch {
        name: String,
        variant: KinematicVariant,
    },
    #[error("loading path {path:?} at gamma = {gamma} gives det F <= 0")]
    PathDomain { path: LoadPath, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinematicVariant {
    /// Standard invariants of C: I1, I2, I3 plus structural-vector pairs.
    Standard,
    /// Isochoric invariants Ibar_m = I_m I3^{e_m} with J as the volumetric
    /// scalar. I3 itself is excluded here (it is identically one after the
    /// split).
    Isochoric,
}

/// One kinematic scalar. Pair indices refer to structural vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    I1,
    I2,
    I3,
    J,
    I4(usize, usize),
    I5(usize, usize),
}

impl Invariant {
    pub fn name(&self) -> String {
        match self {
            Invariant::I1 => "I1".to_string(),
            Invariant::I2 => "I2".to_string(),
            Invariant::I3 => "I3".to_string(),
            Invariant::J => "J".to_string(),
            Invariant::I4(i, j) => format!("I4:{i}:{j}"),
            Invariant::I5(i, j) => format!("I5:{i}:{j}"),
        }
    }
}

/// Selection of kinematic scalars, their variant, and the structural
/// vectors they reference. Part of the model weight-file schema.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicConfig {
    pub variant: KinematicVariant,
    pub invariants: Vec<Invariant>,
    pub structural_vectors: Vec<Vec3>,
    /// Cross-coupled I4/I5 pairs (i != j) are opt-in.
    pub allow_cross_pairs: bool,
}

impl KinematicConfig {
    pub fn standard(invariants: Vec<Invariant>) -> Self {
        KinematicConfig {
            variant: KinematicVariant::Standard,
            invariants,
            structural_vectors: Vec::new(),
            allow_cross_pairs: false,
        }
    }

    pub fn isochoric(invariants: Vec<Invariant>) -> Self {
        KinematicConfig {
            variant: KinematicVariant::Isochoric,
            invariants,
            structural_vectors: Vec::new(),
            allow_cross_pairs: false,
        }
    }

    pub fn with_structural_vectors(mut self, vectors: Vec<Vec3>) -> Self {
        self.structural_vectors = vectors;
        self
    }

    /// Number of kinematic scalars produced, i.e. the inner-network input width.
    pub fn width(&self) -> usize {
        self.invariants.len()
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.invariants.is_empty() {
            return Err(KinematicsError::EmptyInvariants);
        }
        for (index, v) in self.structural_vectors.iter().enumerate() {
            let norm = dot(v, v).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(KinematicsError::NotUnitVector { index, norm });
            }
        }
        let n_sv = self.structural_vectors.len();
        for inv in &self.invariants {
            match (self.variant, inv) {
                (KinematicVariant::Standard, Invariant::J)
                | (KinematicVariant::Isochoric, Invariant::I3) => {
                    return Err(KinematicsError::VariantMismatch {
                        name: inv.name(),
                        variant: self.variant,
                    });
                }
                _ => {}
            }
            if let Invariant::I4(i, j) | Invariant::I5(i, j) = inv {
                for &idx in &[*i, *j] {
                    if idx >= n_sv {
                        return Err(KinematicsError::StructuralIndexOutOfRange {
                            name: inv.name(),
                            index: idx,
                            count: n_sv,
                        });
                    }
                }
                if i != j && !self.allow_cross_pairs {
                    return Err(KinematicsError::CrossPairDisallowed { name: inv.name() });
                }
            }
        }
        Ok(())
    }
}

/// Kinematic scalars with their push-forward tensors, in the order the
/// config lists them.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicEval {
    pub values: Vec<f64>,
    pub g: Vec<SymTensor3>,
    pub gg: Vec<Stiffness3>,
}

impl KinematicEval {
    pub fn with_capacity(m: usize) -> Self {
        KinematicEval {
            values: Vec::with_capacity(m),
            g: Vec::with_capacity(m),
            gg: Vec::with_capacity(m),
        }
    }

    fn clear(&mut self) {
        self.values.clear();
        self.g.clear();
        self.gg.clear();
    }

    fn push(&mut self, value: f64, g: SymTensor3, gg: Stiffness3) {
        self.values.push(value);
        self.g.push(g);
        self.gg.push(gg);
    }
}

/// Evaluates the configured kinematic layer at `f`.
pub fn eval(f: &Mat3, cfg: &KinematicConfig) -> Result<KinematicEval, KinematicsError> {
    let mut out = KinematicEval::with_capacity(cfg.width());
    eval_into(f, cfg, &mut out)?;
    Ok(out)
}

/// Allocation-free variant of [`eval`] for use in batched sweeps.
pub fn eval_into(
    f: &Mat3,
    cfg: &KinematicConfig,
    out: &mut KinematicEval,
) -> Result<(), KinematicsError> {
    let det_f = f.det();
    if !(det_f > MIN_DET_F) {
        return Err(KinematicsError::NonInvertible { det: det_f });
    }
    out.clear();
    match cfg.variant {
        KinematicVariant::Standard => eval_standard(f, cfg, out),
        KinematicVariant::Isochoric => eval_isochoric(f, det_f, cfg, out),
    }
    Ok(())
}

/// Kinematic scalar values only, without the G/GG tensors. This is the
/// cheap path used by value-only energy evaluations (finite-difference
/// baseline, path scans).
pub fn values_into(
    f: &Mat3,
    cfg: &KinematicConfig,
    out: &mut Vec<f64>,
) -> Result<(), KinematicsError> {
    let det_f = f.det();
    if !(det_f > MIN_DET_F) {
        return Err(KinematicsError::NonInvertible { det: det_f });
    }
    out.clear();
    let c = f.c_tensor();
    let i3 = c.det();
    let iso = cfg.variant == KinematicVariant::Isochoric;
    for inv in &cfg.invariants {
        let (raw, e) = match *inv {
            Invariant::I1 => (c.trace(), -1.0 / 3.0),
            Invariant::I2 => {
                let tr_c = c.trace();
                let tr_c2 = (c * c).trace();
                (0.5 * (tr_c * tr_c - tr_c2), -2.0 / 3.0)
            }
            Invariant::I3 => (i3, 0.0),
            Invariant::J => {
                out.push(det_f);
                continue;
            }
            Invariant::I4(i, j) => (
                dot(&cfg.structural_vectors[i], &c.mul_vec(&cfg.structural_vectors[j])),
                -1.0 / 3.0,
            ),
            Invariant::I5(i, j) => {
                let c2 = c * c;
                (
                    dot(&cfg.structural_vectors[i], &c2.mul_vec(&cfg.structural_vectors[j])),
                    -2.0 / 3.0,
                )
            }
        };
        out.push(if iso { raw * i3.powf(e) } else { raw });
    }
    Ok(())
}

/// Standard-invariant table. All G^m and GG^m follow from B = F F^T and the
/// pushed-forward structural vectors a^i = F A^i.
fn eval_standard(f: &Mat3, cfg: &KinematicConfig, out: &mut KinematicEval) {
    let b = f.b_tensor();
    let c = f.c_tensor();
    let b_sym = SymTensor3::from_mat3(&b);
    let ident = SymTensor3::identity();
    let a: Vec<Vec3> = cfg
        .structural_vectors
        .iter()
        .map(|v| f.mul_vec(v))
        .collect();

    for inv in &cfg.invariants {
        match *inv {
            Invariant::I1 => {
                out.push(c.trace(), b_sym, Stiffness3::ZERO);
            }
            Invariant::I2 => {
                let (val, g, gg) = i2_terms(&c, &b, &b_sym);
                out.push(val, g, gg);
            }
            Invariant::I3 => {
                let det_b = b.det();
                let gg = (tensor_prod(&ident, &ident) - tensor_prod_bar(&ident, &ident)) * det_b;
                out.push(c.det(), ident * det_b, gg);
            }
            Invariant::J => unreachable!("rejected by config validation"),
            Invariant::I4(i, j) => {
                let val = dot(&cfg.structural_vectors[i], &c.mul_vec(&cfg.structural_vectors[j]));
                out.push(val, sym_outer(&a[i], &a[j]), Stiffness3::ZERO);
            }
            Invariant::I5(i, j) => {
                let c2 = c * c;
                let val =
                    dot(&cfg.structural_vectors[i], &c2.mul_vec(&cfg.structural_vectors[j]));
                let (g, gg) = i5_terms(&b, &b_sym, &a[i], &a[j]);
                out.push(val, g, gg);
            }
        }
    }
}

/// Isochoric table: Ibar_m = I_m I3^{e_m}; the bar tensors are the standard
/// formulas evaluated at Bbar = J^(-2/3) B and abar = J^(-1/3) a, combined as
///
///   G^m  = Gbar^m + e_m Ibar_m I
///   GG^m = GGbar^m + e_m (I (x) Gbar^m + Gbar^m (x) I
///          + Ibar_m (e_m I (x) I - I (x)bar I))
///
/// J gets the volumetric pair G = (J/2) I, GG = (J/4)(I (x) I - 2 I (x)bar I).
fn eval_isochoric(f: &Mat3, det_f: f64, cfg: &KinematicConfig, out: &mut KinematicEval) {
    let j = det_f;
    let b = f.b_tensor();
    let c = f.c_tensor();
    let i3 = c.det();
    let bbar = b * j.powf(-2.0 / 3.0);
    let bbar_sym = SymTensor3::from_mat3(&bbar);
    let ident = SymTensor3::identity();
    let ixi = tensor_prod(&ident, &ident);
    let ibi = tensor_prod_bar(&ident, &ident);
    let abar: Vec<Vec3> = cfg
        .structural_vectors
        .iter()
        .map(|v| {
            let a = f.mul_vec(v);
            let s = j.powf(-1.0 / 3.0);
            [a[0] * s, a[1] * s, a[2] * s]
        })
        .collect();

    let combine =
        |e: f64, ibar: f64, gbar: SymTensor3, ggbar: Stiffness3| -> (SymTensor3, Stiffness3) {
            let g = gbar + ident * (e * ibar);
            let ig = tensor_prod(&ident, &gbar);
            let gi = tensor_prod(&gbar, &ident);
            let vol = (ixi * e - ibi) * ibar;
            let gg = ggbar + (ig + gi + vol) * e;
            (g, gg)
        };

    for inv in &cfg.invariants {
        match *inv {
            Invariant::I1 => {
                let e = -1.0 / 3.0;
                let ibar = c.trace() * i3.powf(e);
                let (g, gg) = combine(e, ibar, bbar_sym, Stiffness3::ZERO);
                out.push(ibar, g, gg);
            }
            Invariant::I2 => {
                let e = -2.0 / 3.0;
                let tr_c = c.trace();
                let tr_c2 = (c * c).trace();
                let ibar = 0.5 * (tr_c * tr_c - tr_c2) * i3.powf(e);
                let (_, gbar, ggbar) = i2_terms(&bbar, &bbar, &bbar_sym);
                let (g, gg) = combine(e, ibar, gbar, ggbar);
                out.push(ibar, g, gg);
            }
            Invariant::J => {
                let g = ident * (j / 2.0);
                let gg = (ixi - ibi * 2.0) * (j / 4.0);
                out.push(j, g, gg);
            }
            Invariant::I3 => unreachable!("rejected by config validation"),
            Invariant::I4(i, jj) => {
                let e = -1.0 / 3.0;
                let val =
                    dot(&cfg.structural_vectors[i], &c.mul_vec(&cfg.structural_vectors[jj]));
                let ibar = val * i3.powf(e);
                let gbar = sym_outer(&abar[i], &abar[jj]);
                let (g, gg) = combine(e, ibar, gbar, Stiffness3::ZERO);
                out.push(ibar, g, gg);
            }
            Invariant::I5(i, jj) => {
                let e = -2.0 / 3.0;
                let c2 = c * c;
                let val =
                    dot(&cfg.structural_vectors[i], &c2.mul_vec(&cfg.structural_vectors[jj]));
                let ibar = val * i3.powf(e);
                let (gbar, ggbar) = i5_terms(&bbar, &bbar_sym, &abar[i], &abar[jj]);
                let (g, gg) = combine(e, ibar, gbar, ggbar);
                out.push(ibar, g, gg);
            }
        }
    }
}

/// I2 value and tensors for a given (C, B) pair: I2 = ((tr C)^2 - tr C^2)/2,
/// G = B tr B - B^2, GG = B (x) B - B (x)bar B. For the isochoric case both
/// matrices are the bar versions.
fn i2_terms(c: &Mat3, b: &Mat3, b_sym: &SymTensor3) -> (f64, SymTensor3, Stiffness3) {
    let tr_c = c.trace();
    let tr_c2 = (*c * *c).trace();
    let val = 0.5 * (tr_c * tr_c - tr_c2);
    let g = SymTensor3::from_mat3(&(*b * b.trace() - *b * *b));
    let gg = tensor_prod(b_sym, b_sym) - tensor_prod_bar(b_sym, b_sym);
    (val, g, gg)
}

/// I5 tensors, symmetrized over the structural-vector pair so cross pairs
/// (i != j) carry the correct derivative:
/// G = sym(a^i (x) B a^j) + sym(a^j (x) B a^i),
/// GG = B (x)bar sym(a^i (x) a^j) + sym(a^i (x) a^j) (x)bar B.
fn i5_terms(b: &Mat3, b_sym: &SymTensor3, ai: &Vec3, aj: &Vec3) -> (SymTensor3, Stiffness3) {
    let baj = b.mul_vec(aj);
    let bai = b.mul_vec(ai);
    let g = sym_outer(ai, &baj) + sym_outer(aj, &bai);
    let s = sym_outer(ai, aj);
    let gg = tensor_prod_bar(b_sym, &s) + tensor_prod_bar(&s, b_sym);
    (g, gg)
}

/// The six benchmark loading paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LoadPath {
    /// Uniaxial tension: diag(1 + g, 1, 1).
    UT,
    /// Uniaxial compression: diag(1/(1 + g), 1, 1).
    UC,
    /// Biaxial tension: diag(1 + g, 1 + g, 1).
    BT,
    /// Biaxial compression: diag(1/(1 + g), 1/(1 + g), 1).
    BC,
    /// Simple shear: identity plus g in the (1,2) slot.
    SS,
    /// Pure shear: diag(1 + g, 1/(1 + g), 1).
    PS,
}

impl LoadPath {
    pub const ALL: [LoadPath; 6] = [
        LoadPath::UT,
        LoadPath::UC,
        LoadPath::BT,
        LoadPath::BC,
        LoadPath::SS,
        LoadPath::PS,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LoadPath::UT => "UT",
            LoadPath::UC => "UC",
            LoadPath::BT => "BT",
            LoadPath::BC => "BC",
            LoadPath::SS => "SS",
            LoadPath::PS => "PS",
        }
    }
}

impl std::str::FromStr for LoadPath {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "UT" => Ok(LoadPath::UT),
            "UC" => Ok(LoadPath::UC),
            "BT" => Ok(LoadPath::BT),
            "BC" => Ok(LoadPath::BC),
            "SS" => Ok(LoadPath::SS),
            "PS" => Ok(LoadPath::PS),
            other => Err(format!("unknown loading path {other:?}")),
        }
    }
}

/// Deformation gradient for a loading path at amplitude `gamma`.
pub fn loading_path(path: LoadPath, gamma: f64) -> Result<Mat3, KinematicsError> {
    let s = 1.0 + gamma;
    let f = match path {
        LoadPath::UT => Mat3::diag(s, 1.0, 1.0),
        LoadPath::UC => Mat3::diag(1.0 / s, 1.0, 1.0),
        LoadPath::BT => Mat3::diag(s, s, 1.0),
        LoadPath::BC => Mat3::diag(1.0 / s, 1.0 / s, 1.0),
        LoadPath::SS => Mat3([[1.0, gamma, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        LoadPath::PS => Mat3::diag(s, 1.0 / s, 1.0),
    };
    if !f.is_finite() || f.det() <= 0.0 {
        return Err(KinematicsError::PathDomain { path, gamma });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_standard_invariants() {
        let cfg = KinematicConfig::standard(vec![Invariant::I1, Invariant::I2, Invariant::I3]);
        let kin = eval(&Mat3::identity(), &cfg).unwrap();
        assert_eq!(kin.values, vec![3.0, 3.0, 1.0]);
        assert_eq!(kin.g[0], SymTensor3::identity());
        assert_eq!(kin.g[1], SymTensor3::identity() * 2.0);
        assert_eq!(kin.g[2], SymTensor3::identity());
    }

    #[test]
    fn diagonal_stretch_closed_form() {
        let cfg = KinematicConfig::standard(vec![Invariant::I1, Invariant::I3]);
        let f = Mat3::diag(1.5, 1.0, 1.0);
        let kin = eval(&f, &cfg).unwrap();
        assert!((kin.values[0] - 4.25).abs() < 1e-14);
        assert!((kin.values[1] - 2.25).abs() < 1e-14);
    }

    #[test]
    fn identity_isochoric() {
        let cfg = KinematicConfig::isochoric(vec![Invariant::I1, Invariant::I2, Invariant::J]);
        let kin = eval(&Mat3::identity(), &cfg).unwrap();
        assert_eq!(kin.values, vec![3.0, 3.0, 1.0]);
        assert_eq!(kin.g[2], SymTensor3::identity() * 0.5);
    }

    #[test]
    fn pure_dilation_leaves_isochoric_invariants() {
        let cfg = KinematicConfig::isochoric(vec![Invariant::I1, Invariant::I2, Invariant::J]);
        let kin = eval(&Mat3::diag(2.0, 2.0, 2.0), &cfg).unwrap();
        assert!((kin.values[0] - 3.0).abs() < 1e-12);
        assert!((kin.values[1] - 3.0).abs() < 1e-12);
        assert!((kin.values[2] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_f_rejected() {
        let cfg = KinematicConfig::standard(vec![Invariant::I1]);
        let err = eval(&Mat3::diag(1.0, 1.0, 0.0), &cfg).unwrap_err();
        assert!(matches!(err, KinematicsError::NonInvertible { .. }));
        // Negative determinant (inverted element) is rejected too.
        let err = eval(&Mat3::diag(-1.0, 1.0, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, KinematicsError::NonInvertible { .. }));
    }

    #[test]
    fn config_validation() {
        let cfg = KinematicConfig::standard(vec![]);
        assert_eq!(cfg.validate(), Err(KinematicsError::EmptyInvariants));

        let cfg = KinematicConfig::standard(vec![Invariant::J]);
        assert!(matches!(
            cfg.validate(),
            Err(KinematicsError::VariantMismatch { .. })
        ));

        let cfg = KinematicConfig::isochoric(vec![Invariant::I3]);
        assert!(matches!(
            cfg.validate(),
            Err(KinematicsError::VariantMismatch { .. })
        ));

        let cfg = KinematicConfig::standard(vec![Invariant::I4(0, 0)]);
        assert!(matches!(
            cfg.validate(),
            Err(KinematicsError::StructuralIndexOutOfRange { .. })
        ));

        let cfg = KinematicConfig::standard(vec![Invariant::I4(0, 1)])
            .with_structural_vectors(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert!(matches!(
            cfg.validate(),
            Err(KinematicsError::CrossPairDisallowed { .. })
        ));

        let mut cfg = cfg;
        cfg.allow_cross_pairs = true;
        assert_eq!(cfg.validate(), Ok(()));

        let cfg = KinematicConfig::standard(vec![Invariant::I4(0, 0)])
            .with_structural_vectors(vec![[1.0, 1.0, 0.0]]);
        assert!(matches!(
            cfg.validate(),
            Err(KinematicsError::NotUnitVector { .. })
        ));
    }

    #[test]
    fn loading_paths_closed_form() {
        let f = loading_path(LoadPath::SS, 0.0).unwrap();
        assert_eq!(f, Mat3::identity());

        let f = loading_path(LoadPath::PS, 0.5).unwrap();
        assert_eq!(f, Mat3::diag(1.5, 1.0 / 1.5, 1.0));

        let f = loading_path(LoadPath::BT, 0.2).unwrap();
        assert_eq!(f, Mat3::diag(1.2, 1.2, 1.0));

        assert!(matches!(
            loading_path(LoadPath::UT, -1.0),
            Err(KinematicsError::PathDomain { .. })
        ));
        assert!(matches!(
            loading_path(LoadPath::UT, -1.5),
            Err(KinematicsError::PathDomain { .. })
        ));
    }
}
