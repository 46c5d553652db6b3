//! Model weight files: a JSON document carrying the architecture tag, the
//! kinematic layer configuration, the derivative mode, and the per-
//! architecture parameter arrays. The loader validates every structural
//! invariant and reports failures by field path.
//!
//! Schema sketch (see docs/weights.md in the repository root):
//!
//! ```json
//! {
//!   "architecture": "micnn" | "cann" | "ickan" | "gent_thomas",
//!   "derivative_mode": "cgo" | "fd",
//!   "kinematic": {
//!     "variant": "standard" | "isochoric",
//!     "invariants": ["I1", "I2", "J", "I4:0:0", ...],
//!     "structural_vectors": [[x, y, z], ...],
//!     "allow_cross_pairs": false
//!   },
//!   "layers":   [...],   // micnn: hidden layers then the output layer
//!   "branches": [...],   // cann
//!   "splines":  {...},   // ickan
//!   "path_tolerance": 0.05   // optional, used by path-scan comparisons
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::kinematics::{Invariant, KinematicConfig, KinematicVariant};
use crate::networks::{
    Activation, CannBranch, CannWeights, Extrapolation, IckanWeights, KanEdge, KanLayer,
    MicnnLayer, MicnnWeights, NetworkError, SplineBasis,
};

use super::{DerivativeMode, GentThomasInner, InnerSpec, ModelError, NcmDefinition};

#[derive(Debug, Error)]
pub enum WeightFileError {
    #[error("cannot read weight file: {0}")]
    Io(#[from] std::io::Error),
    #[error("weight file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid weight file at {path}: {message}")]
    Invalid { path: String, message: String },
}

impl WeightFileError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        WeightFileError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<NetworkError> for WeightFileError {
    fn from(err: NetworkError) -> Self {
        match err {
            NetworkError::InvalidWeights { path, message } => {
                WeightFileError::Invalid { path, message }
            }
            other => WeightFileError::Invalid {
                path: "<weights>".to_string(),
                message: other.to_string(),
            },
        }
    }
}

/// A loaded, validated model plus the optional per-file metadata.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: NcmDefinition,
    /// Tolerance for comparing this model against the analytic reference in
    /// path scans, when the file ships fitted weights. Absent means no
    /// comparison is claimed.
    pub path_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSchema {
    architecture: String,
    kinematic: KinematicSchema,
    #[serde(default)]
    derivative_mode: Option<String>,
    #[serde(default)]
    layers: Option<Vec<MicnnLayerSchema>>,
    #[serde(default)]
    activation: Option<Activation>,
    #[serde(default)]
    monotone: Option<bool>,
    #[serde(default)]
    branches: Option<Vec<CannBranch>>,
    #[serde(default)]
    splines: Option<SplineSchema>,
    #[serde(default)]
    path_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KinematicSchema {
    variant: KinematicVariant,
    invariants: Vec<String>,
    #[serde(default)]
    structural_vectors: Vec<[f64; 3]>,
    #[serde(default)]
    allow_cross_pairs: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MicnnLayerSchema {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    #[serde(default)]
    c: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplineSchema {
    order: usize,
    /// Explicit uniform knot vector; alternatively give n_basis with
    /// x_min/x_max and the knots are generated.
    #[serde(default)]
    knots: Option<Vec<f64>>,
    #[serde(default)]
    n_basis: Option<usize>,
    #[serde(default)]
    x_min: Option<f64>,
    #[serde(default)]
    x_max: Option<f64>,
    layers: Vec<KanLayerSchema>,
    #[serde(default)]
    extrapolation: Extrapolation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KanLayerSchema {
    n_in: usize,
    n_out: usize,
    edges: Vec<KanEdge>,
}

/// Loads and validates a model weight file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile, WeightFileError> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

/// Parses and validates a model weight document.
pub fn parse_model(text: &str) -> Result<ModelFile, WeightFileError> {
    let schema: FileSchema = serde_json::from_str(text)?;

    let kinematic = parse_kinematic(&schema.kinematic)?;
    let mode = match schema.derivative_mode.as_deref() {
        None | Some("cgo") => DerivativeMode::Cgo,
        Some("fd") => DerivativeMode::FdBaseline,
        Some(other) => {
            return Err(WeightFileError::invalid(
                "derivative_mode",
                format!("expected \"cgo\" or \"fd\", got {other:?}"),
            ))
        }
    };

    let inner = match schema.architecture.as_str() {
        "micnn" => InnerSpec::Micnn(parse_micnn(&schema, kinematic.width())?),
        "cann" => {
            let branches = schema.branches.ok_or_else(|| {
                WeightFileError::invalid("branches", "required for architecture \"cann\"")
            })?;
            InnerSpec::Cann(CannWeights {
                input_width: kinematic.width(),
                branches,
            })
        }
        "ickan" => InnerSpec::Ickan(parse_ickan(schema.splines.as_ref().ok_or_else(|| {
            WeightFileError::invalid("splines", "required for architecture \"ickan\"")
        })?)?),
        "gent_thomas" => InnerSpec::GentThomas(GentThomasInner),
        other => {
            return Err(WeightFileError::invalid(
                "architecture",
                format!("unknown architecture {other:?}"),
            ))
        }
    };

    let model = NcmDefinition {
        kinematic,
        inner,
        mode,
    };
    model.validate().map_err(|err| match err {
        ModelError::Network(net) => net.into(),
        ModelError::Kinematics(kin) => WeightFileError::invalid("kinematic", kin.to_string()),
        other => WeightFileError::invalid("<model>", other.to_string()),
    })?;
    Ok(ModelFile {
        model,
        path_tolerance: schema.path_tolerance,
    })
}

fn parse_kinematic(schema: &KinematicSchema) -> Result<KinematicConfig, WeightFileError> {
    let mut invariants = Vec::with_capacity(schema.invariants.len());
    for (i, name) in schema.invariants.iter().enumerate() {
        invariants.push(parse_invariant(name).map_err(|message| {
            WeightFileError::invalid(format!("kinematic.invariants[{i}]"), message)
        })?);
    }
    Ok(KinematicConfig {
        variant: schema.variant,
        invariants,
        structural_vectors: schema.structural_vectors.clone(),
        allow_cross_pairs: schema.allow_cross_pairs,
    })
}

fn parse_invariant(name: &str) -> Result<Invariant, String> {
    match name {
        "I1" => return Ok(Invariant::I1),
        "I2" => return Ok(Invariant::I2),
        "I3" => return Ok(Invariant::I3),
        "J" => return Ok(Invariant::J),
        _ => {}
    }
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or("");
    let parse_pair = |parts: &mut std::str::Split<'_, char>| -> Result<(usize, usize), String> {
        let i = parts
            .next()
            .ok_or("missing first structural index")?
            .parse::<usize>()
            .map_err(|e| format!("bad structural index: {e}"))?;
        let j = parts
            .next()
            .ok_or("missing second structural index")?
            .parse::<usize>()
            .map_err(|e| format!("bad structural index: {e}"))?;
        Ok((i, j))
    };
    match head {
        "I4" => {
            let (i, j) = parse_pair(&mut parts)?;
            Ok(Invariant::I4(i, j))
        }
        "I5" => {
            let (i, j) = parse_pair(&mut parts)?;
            Ok(Invariant::I5(i, j))
        }
        _ => Err(format!(
            "unknown invariant {name:?} (expected I1, I2, I3, J, I4:i:j, or I5:i:j)"
        )),
    }
}

fn parse_micnn(schema: &FileSchema, input_width: usize) -> Result<MicnnWeights, WeightFileError> {
    let layers = schema.layers.as_ref().ok_or_else(|| {
        WeightFileError::invalid("layers", "required for architecture \"micnn\"")
    })?;
    if layers.is_empty() {
        return Err(WeightFileError::invalid(
            "layers",
            "need at least the output layer",
        ));
    }
    let (out, hidden_schemas) = layers.split_last().unwrap();
    if out.a.len() != 1 || out.b.len() != 1 {
        return Err(WeightFileError::invalid(
            format!("layers[{}]", layers.len() - 1),
            "output layer must have exactly one row in a and b",
        ));
    }
    if out.c.as_ref().is_some_and(|c| !c.is_empty()) {
        return Err(WeightFileError::invalid(
            format!("layers[{}].c", layers.len() - 1),
            "output layer carries no bias",
        ));
    }
    let hidden = hidden_schemas
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let c = l.c.clone().ok_or_else(|| {
                WeightFileError::invalid(format!("layers[{k}].c"), "hidden layer needs a bias")
            })?;
            Ok(MicnnLayer {
                a: l.a.clone(),
                b: l.b.clone(),
                c,
            })
        })
        .collect::<Result<Vec<_>, WeightFileError>>()?;
    Ok(MicnnWeights {
        input_width,
        hidden,
        out_a: out.a[0].clone(),
        out_b: out.b[0].clone(),
        activation: schema.activation.unwrap_or(Activation::Softplus),
        monotone: schema.monotone.unwrap_or(true),
    })
}

fn parse_ickan(schema: &SplineSchema) -> Result<IckanWeights, WeightFileError> {
    let basis = match (&schema.knots, schema.n_basis) {
        (Some(knots), _) => SplineBasis::from_knots(schema.order, knots.clone())?,
        (None, Some(n_basis)) => {
            let x_min = schema.x_min.ok_or_else(|| {
                WeightFileError::invalid("splines.x_min", "required when knots are generated")
            })?;
            let x_max = schema.x_max.ok_or_else(|| {
                WeightFileError::invalid("splines.x_max", "required when knots are generated")
            })?;
            SplineBasis::uniform(schema.order, n_basis, x_min, x_max)?
        }
        (None, None) => {
            return Err(WeightFileError::invalid(
                "splines",
                "give either knots or n_basis with x_min/x_max",
            ))
        }
    };
    Ok(IckanWeights {
        basis,
        layers: schema
            .layers
            .iter()
            .map(|l| KanLayer {
                n_in: l.n_in,
                n_out: l.n_out,
                edges: l.edges.clone(),
            })
            .collect(),
        extrapolation: schema.extrapolation,
    })
}
