//! Finite-element core: hex8 meshes, quadrature caches, DOF maps with
//! boundary conditions, the CSR stiffness matrix, and the assembly
//! algorithms (traditional, globally vectorized, batch-vectorized, and
//! partitioned).

pub mod assembly;
pub mod csr;
pub mod dofmap;
pub mod mesh;
pub mod quadrature;

pub use assembly::{assemble, compute_trial_f, AssemblyMode, AssemblyPhases};
pub use csr::CsrMatrix;
pub use dofmap::{BcSpec, DofMap, Traction};
pub use mesh::Mesh;
pub use quadrature::{QuadCache, N_QP};

use thiserror::Error;

use crate::constitutive::ModelError;

#[derive(Debug, Error)]
pub enum FeError {
    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },
    #[error("mesh is inconsistent: {0}")]
    MeshInvalid(String),
    #[error("non-positive Jacobian in element {element}, quadrature point {qp}")]
    BadJacobian { element: usize, qp: usize },
    #[error("constitutive failure in element {element}, quadrature point {qp}: {source}")]
    Constitutive {
        element: usize,
        qp: usize,
        #[source]
        source: ModelError,
    },
    #[error("worker {worker} failed: {source}")]
    Worker {
        worker: usize,
        #[source]
        source: Box<FeError>,
    },
    #[error("conflicting Dirichlet constraint on node {node}, direction {dir}")]
    ConflictingBc { node: usize, dir: usize },
    #[error("unknown {kind} set {name:?}")]
    UnknownSet { kind: &'static str, name: String },
    #[error("displacement vector has length {got}, model has {expected} DOFs")]
    DofLength { expected: usize, got: usize },
}

/// Mesh plus everything derived from it that assembly needs.
#[derive(Debug, Clone)]
pub struct FeModel {
    pub mesh: Mesh,
    pub cache: QuadCache,
    pub dofmap: DofMap,
}

impl FeModel {
    pub fn new(mesh: Mesh, dofmap: DofMap) -> Result<Self, FeError> {
        mesh.validate()?;
        let cache = QuadCache::build(&mesh)?;
        Ok(FeModel {
            mesh,
            cache,
            dofmap,
        })
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.mesh.n_nodes()
    }
}
