//! Nonlinear finite elements for hyperelasticity with batch-vectorized
//! neural constitutive models.
//!
//! The constitutive update is a composition of a kinematic layer (invariants
//! of the right Cauchy-Green tensor with their push-forward tensors) and an
//! inner network (MICNN, CANN, or ICKAN) whose value, gradient, and Hessian
//! are computed analytically in a single forward pass. Assembly gathers
//! deformation gradients for runs of quadrature points into contiguous
//! tables, evaluates the model once per batch, and scatters stresses and
//! tangents back into the global system.

pub mod constitutive;
pub mod fe;
pub mod kinematics;
pub mod networks;
pub mod solver;
pub mod tensors;

pub use constitutive::{
    eval_gent_thomas, gent_thomas_model, load_model, parse_model, DerivativeMode, InnerSpec,
    MaterialBatch, ModelFile, NcmDefinition, PointEval,
};
pub use kinematics::{Invariant, KinematicConfig, KinematicVariant, LoadPath};
pub use tensors::{Mat3, Stiffness3, SymTensor3};
