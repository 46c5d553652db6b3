//! Trilinear hex8 shape functions on a 2x2x2 Gauss rule, with per-element,
//! per-point reference shape gradients and quadrature weights cached once.
//! Spatial gradients (grad phi = F^-T Grad phi) are recomputed each
//! iteration in the assembly; only the reference data lives here.

use crate::tensors::Mat3;

use super::{FeError, Mesh};

/// Quadrature points per hex8 element.
pub const N_QP: usize = 8;

const GP: f64 = 0.577_350_269_189_625_8; // 1 / sqrt(3)

/// Corner signs of the isoparametric cube, matching the connectivity order.
const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Gauss abscissae in the same corner ordering (all weights are one).
fn gauss_points() -> [[f64; 3]; N_QP] {
    let mut pts = [[0.0; 3]; N_QP];
    for (q, corner) in CORNERS.iter().enumerate() {
        pts[q] = [corner[0] * GP, corner[1] * GP, corner[2] * GP];
    }
    pts
}

/// Shape gradients with respect to the isoparametric coordinates at `xi`.
fn dphi_dxi(xi: &[f64; 3]) -> [[f64; 3]; 8] {
    let mut out = [[0.0; 3]; 8];
    for (i, c) in CORNERS.iter().enumerate() {
        out[i] = [
            0.125 * c[0] * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]),
            0.125 * (1.0 + c[0] * xi[0]) * c[1] * (1.0 + c[2] * xi[2]),
            0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * c[2],
        ];
    }
    out
}

/// Shape function values at `xi`.
pub fn phi(xi: &[f64; 3]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (i, c) in CORNERS.iter().enumerate() {
        out[i] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
    }
    out
}

/// Cached reference shape gradients Grad phi^{I,e,q} and quadrature weights
/// w^{e,q} = gauss weight x det(dX/dxi).
#[derive(Debug, Clone)]
pub struct QuadCache {
    n_elements: usize,
    grads: Vec<[[f64; 3]; 8]>,
    weights: Vec<f64>,
}

impl QuadCache {
    pub fn build(mesh: &Mesh) -> Result<QuadCache, FeError> {
        let pts = gauss_points();
        let n_el = mesh.n_elements();
        let mut grads = Vec::with_capacity(n_el * N_QP);
        let mut weights = Vec::with_capacity(n_el * N_QP);

        for (e, conn) in mesh.elements.iter().enumerate() {
            for (q, xi) in pts.iter().enumerate() {
                let local = dphi_dxi(xi);
                // Jacobian of the isoparametric map, J_ab = dX_a / dxi_b.
                let mut jac = Mat3::ZERO;
                for (i, &node) in conn.iter().enumerate() {
                    let x = mesh.coords[node];
                    for a in 0..3 {
                        for b in 0..3 {
                            jac.0[a][b] += x[a] * local[i][b];
                        }
                    }
                }
                let det = jac.det();
                if !(det > 0.0) {
                    return Err(FeError::BadJacobian { element: e, qp: q });
                }
                let jac_inv = jac.inverse().expect("checked det above");
                let mut grad = [[0.0; 3]; 8];
                for i in 0..8 {
                    // Grad phi = J^-T dphi/dxi.
                    for a in 0..3 {
                        let mut s = 0.0;
                        for b in 0..3 {
                            s += jac_inv.0[b][a] * local[i][b];
                        }
                        grad[i][a] = s;
                    }
                }
                grads.push(grad);
                weights.push(det);
            }
        }
        Ok(QuadCache {
            n_elements: n_el,
            grads,
            weights,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    #[inline]
    pub fn grad(&self, e: usize, q: usize) -> &[[f64; 3]; 8] {
        &self.grads[e * N_QP + q]
    }

    #[inline]
    pub fn weight(&self, e: usize, q: usize) -> f64 {
        self.weights[e * N_QP + q]
    }

    /// Reference volume of an element as seen by the quadrature rule.
    pub fn element_volume(&self, e: usize) -> f64 {
        (0..N_QP).map(|q| self.weight(e, q)).sum()
    }
}
