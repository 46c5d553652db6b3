//! Node-to-DOF mapping with Dirichlet constraints and traction
//! specifications. Prescribed values are functions of the load factor so
//! that rotational boundary conditions ramp through intermediate angles
//! instead of interpolating endpoint displacements linearly.

use serde::{Deserialize, Serialize};

use super::{FeError, Mesh};

/// One Dirichlet specification over a group of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcSpec {
    /// Hold the listed directions at zero.
    Fixed { nodes: Vec<usize>, dirs: [bool; 3] },
    /// Prescribe `load_factor * value` in one direction.
    Ramp {
        nodes: Vec<usize>,
        dir: usize,
        value: f64,
    },
    /// Axial displacement along x combined with a rotation about the x axis
    /// through `center`; both the angle and the axial displacement scale
    /// linearly with the load factor. Constrains all three directions.
    TwistStretch {
        nodes: Vec<usize>,
        axial: f64,
        angle: f64,
        center: [f64; 2],
    },
}

/// Dead-load traction on a named facet set, applied on the reference area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traction {
    pub facet_set: String,
    pub t: [f64; 3],
}

#[derive(Debug, Clone, Default)]
pub struct DofMap {
    n_nodes: usize,
    constrained: Vec<bool>,
    specs: Vec<BcSpec>,
    pub tractions: Vec<Traction>,
}

impl DofMap {
    pub fn new(n_nodes: usize) -> Self {
        DofMap {
            n_nodes,
            constrained: vec![false; 3 * n_nodes],
            specs: Vec::new(),
            tractions: Vec::new(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.n_nodes
    }

    #[inline]
    pub fn dof(&self, node: usize, dir: usize) -> usize {
        3 * node + dir
    }

    #[inline]
    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn n_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    pub fn add_bc(&mut self, spec: BcSpec) -> Result<(), FeError> {
        let mark = |constrained: &mut Vec<bool>, node: usize, dir: usize| -> Result<(), FeError> {
            let dof = 3 * node + dir;
            if constrained[dof] {
                return Err(FeError::ConflictingBc { node, dir });
            }
            constrained[dof] = true;
            Ok(())
        };
        match &spec {
            BcSpec::Fixed { nodes, dirs } => {
                for &node in nodes {
                    for (dir, &on) in dirs.iter().enumerate() {
                        if on {
                            mark(&mut self.constrained, node, dir)?;
                        }
                    }
                }
            }
            BcSpec::Ramp { nodes, dir, .. } => {
                for &node in nodes {
                    mark(&mut self.constrained, node, *dir)?;
                }
            }
            BcSpec::TwistStretch { nodes, .. } => {
                for &node in nodes {
                    for dir in 0..3 {
                        mark(&mut self.constrained, node, dir)?;
                    }
                }
            }
        }
        self.specs.push(spec);
        Ok(())
    }

    pub fn add_traction(&mut self, traction: Traction) {
        self.tractions.push(traction);
    }

    /// Prescribed (dof, value) pairs at the given load factor.
    pub fn prescribed(&self, mesh: &Mesh, load_factor: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for spec in &self.specs {
            match spec {
                BcSpec::Fixed { nodes, dirs } => {
                    for &node in nodes {
                        for (dir, &on) in dirs.iter().enumerate() {
                            if on {
                                out.push((self.dof(node, dir), 0.0));
                            }
                        }
                    }
                }
                BcSpec::Ramp { nodes, dir, value } => {
                    for &node in nodes {
                        out.push((self.dof(node, *dir), load_factor * value));
                    }
                }
                BcSpec::TwistStretch {
                    nodes,
                    axial,
                    angle,
                    center,
                } => {
                    let theta = load_factor * angle;
                    let (sin, cos) = theta.sin_cos();
                    for &node in nodes {
                        let p = mesh.coords[node];
                        let (ry, rz) = (p[1] - center[0], p[2] - center[1]);
                        out.push((self.dof(node, 0), load_factor * axial));
                        out.push((self.dof(node, 1), cos * ry - sin * rz + center[0] - p[1]));
                        out.push((self.dof(node, 2), sin * ry + cos * rz + center[1] - p[2]));
                    }
                }
            }
        }
        out
    }
}
