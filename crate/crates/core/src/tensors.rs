//! Small dense and Voigt-form tensor algebra.
//!
//! Voigt ordering is fixed as (11, 22, 33, 12, 23, 13) with stress-like
//! packing: no factor of two on shear components, for both [`SymTensor3`]
//! and the rows/columns of [`Stiffness3`]. Contractions that need the
//! shear duplication (the assembly scatter) loop over full index ranges
//! instead of baking factors into the storage.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use thiserror::Error;

/// Voigt index pairs in storage order.
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

/// Maps a (row, col) index pair of a symmetric tensor to its Voigt slot.
pub const VOIGT_INDEX: [[usize; 3]; 3] = [[0, 3, 5], [3, 1, 4], [5, 4, 2]];

pub type Vec3 = [f64; 3];

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("array length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix is singular (det = {det:e})")]
    Singular { det: f64 },
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Dense 3x3 matrix, row-major. Used for deformation gradients, rotations
/// and intermediate products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Mat3 {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Mat3, TensorError> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(TensorError::Singular { det });
        }
        let m = &self.0;
        let inv_det = 1.0 / det;
        Ok(Mat3([
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det,
            ],
        ]))
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Left Cauchy-Green tensor B = F F^T of `self` taken as F.
    pub fn b_tensor(&self) -> Mat3 {
        *self * self.transpose()
    }

    /// Right Cauchy-Green tensor C = F^T F of `self` taken as F.
    pub fn c_tensor(&self) -> Mat3 {
        self.transpose() * *self
    }

    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        out
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = s;
            }
        }
        out
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut out = self;
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        out
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

/// Symmetric second-order tensor in Voigt form (11, 22, 33, 12, 23, 13).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor3(pub [f64; 6]);

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3([0.0; 6]);

    pub fn identity() -> SymTensor3 {
        SymTensor3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    /// Packs a symmetric matrix by reading its upper triangle. Lossless for
    /// symmetric input; any skew part is silently dropped.
    pub fn from_mat3(m: &Mat3) -> SymTensor3 {
        SymTensor3([
            m.0[0][0], m.0[1][1], m.0[2][2], m.0[0][1], m.0[1][2], m.0[0][2],
        ])
    }

    pub fn to_mat3(&self) -> Mat3 {
        let v = &self.0;
        Mat3([[v[0], v[3], v[5]], [v[3], v[1], v[4]], [v[5], v[4], v[2]]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[VOIGT_INDEX[i][j]]
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        self.to_mat3().mul_vec(v)
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, rhs: SymTensor3) -> SymTensor3 {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
        out
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, rhs: SymTensor3) -> SymTensor3 {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(rhs.0.iter()) {
            *a -= b;
        }
        out
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, s: f64) -> SymTensor3 {
        let mut out = self;
        for a in out.0.iter_mut() {
            *a *= s;
        }
        out
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

/// Symmetric part of an outer product, sym(a (x) b) = (a_i b_j + a_j b_i) / 2.
pub fn sym_outer(a: &Vec3, b: &Vec3) -> SymTensor3 {
    let mut v = [0.0; 6];
    for (slot, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        v[slot] = 0.5 * (a[i] * b[j] + a[j] * b[i]);
    }
    SymTensor3(v)
}

/// Fourth-order tensor with minor symmetries, stored as a Voigt 6x6 matrix.
/// Major symmetry is not enforced by the type; it holds for hyperelastic
/// tangents and is asserted in tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stiffness3(pub [[f64; 6]; 6]);

impl Stiffness3 {
    pub const ZERO: Stiffness3 = Stiffness3([[0.0; 6]; 6]);

    /// Full-index access c_{ijkl} through the Voigt map.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[VOIGT_INDEX[i][j]][VOIGT_INDEX[k][l]]
    }

    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    /// Largest deviation from major symmetry, ||V - V^T||_inf.
    pub fn major_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..6 {
            for b in (a + 1)..6 {
                worst = worst.max((self.0[a][b] - self.0[b][a]).abs());
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        for row in self.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
    }
}

impl Add for Stiffness3 {
    type Output = Stiffness3;
    fn add(self, rhs: Stiffness3) -> Stiffness3 {
        let mut out = self;
        for (ra, rb) in out.0.iter_mut().zip(rhs.0.iter()) {
            for (a, b) in ra.iter_mut().zip(rb.iter()) {
                *a += b;
            }
        }
        out
    }
}

impl Sub for Stiffness3 {
    type Output = Stiffness3;
    fn sub(self, rhs: Stiffness3) -> Stiffness3 {
        let mut out = self;
        for (ra, rb) in out.0.iter_mut().zip(rhs.0.iter()) {
            for (a, b) in ra.iter_mut().zip(rb.iter()) {
                *a -= b;
            }
        }
        out
    }
}

impl Mul<f64> for Stiffness3 {
    type Output = Stiffness3;
    fn mul(self, s: f64) -> Stiffness3 {
        let mut out = self;
        out.scale(s);
        out
    }
}

impl AddAssign for Stiffness3 {
    fn add_assign(&mut self, rhs: Stiffness3) {
        for (ra, rb) in self.0.iter_mut().zip(rhs.0.iter()) {
            for (a, b) in ra.iter_mut().zip(rb.iter()) {
                *a += b;
            }
        }
    }
}

/// Tensor product (A (x) B)_{ijkl} = A_{ij} B_{kl}.
pub fn tensor_prod(a: &SymTensor3, b: &SymTensor3) -> Stiffness3 {
    let mut out = Stiffness3::ZERO;
    for p in 0..6 {
        for q in 0..6 {
            out.0[p][q] = a.0[p] * b.0[q];
        }
    }
    out
}

/// Symmetrized tensor product (A (x)bar B)_{ijkl} = (A_{ik} B_{jl} + A_{il} B_{kj}) / 2,
/// projected onto its minor-symmetric part so the Voigt representation is
/// well defined for A != B.
pub fn tensor_prod_bar(a: &SymTensor3, b: &SymTensor3) -> Stiffness3 {
    let am = a.to_mat3();
    let bm = b.to_mat3();
    let mut out = Stiffness3::ZERO;
    for (p, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        for (q, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
            out.0[p][q] = 0.25
                * (am.0[i][k] * bm.0[j][l]
                    + am.0[i][l] * bm.0[k][j]
                    + am.0[j][k] * bm.0[i][l]
                    + am.0[j][l] * bm.0[k][i]);
        }
    }
    out
}

/// Kirchhoff stress from inner-network gradient and kinematic push-forward
/// tensors: tau = 2 sum_m (dN/dK_m) G^m.
pub fn push_forward_stress(
    dpsi_dk: &[f64],
    g: &[SymTensor3],
) -> Result<SymTensor3, TensorError> {
    if dpsi_dk.len() != g.len() {
        return Err(TensorError::LengthMismatch {
            expected: dpsi_dk.len(),
            got: g.len(),
        });
    }
    let mut tau = SymTensor3::ZERO;
    for (coef, gm) in dpsi_dk.iter().zip(g.iter()) {
        tau += *gm * (2.0 * coef);
    }
    Ok(tau)
}

/// Spatial stiffness from inner-network derivatives and kinematic tensors:
///
/// c = 4 sum_{m,n} (d2N/dK_m dK_n) G^m (x) G^n + 4 sum_m (dN/dK_m) GG^m
///
/// `d2psi` is the m-by-m Hessian in row-major order.
pub fn push_forward_stiffness(
    dpsi_dk: &[f64],
    d2psi: &[f64],
    g: &[SymTensor3],
    gg: &[Stiffness3],
) -> Result<Stiffness3, TensorError> {
    let m = dpsi_dk.len();
    if g.len() != m {
        return Err(TensorError::LengthMismatch {
            expected: m,
            got: g.len(),
        });
    }
    if gg.len() != m {
        return Err(TensorError::LengthMismatch {
            expected: m,
            got: gg.len(),
        });
    }
    if d2psi.len() != m * m {
        return Err(TensorError::LengthMismatch {
            expected: m * m,
            got: d2psi.len(),
        });
    }
    let mut out = Stiffness3::ZERO;
    for mi in 0..m {
        for ni in 0..m {
            let coef = 4.0 * d2psi[mi * m + ni];
            if coef == 0.0 {
                continue;
            }
            for p in 0..6 {
                for q in 0..6 {
                    out.0[p][q] += coef * g[mi].0[p] * g[ni].0[q];
                }
            }
        }
    }
    for (coef, ggm) in dpsi_dk.iter().zip(gg.iter()) {
        out += *ggm * (4.0 * coef);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_outer(a: &Vec3, b: &Vec3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a[i] * b[j];
            }
        }
        m
    }

    /// Dense 81-entry construction of A (x) B, reduced to Voigt.
    fn dense_tensor_prod(a: &Mat3, b: &Mat3) -> Stiffness3 {
        let mut out = Stiffness3::ZERO;
        for (p, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            for (q, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
                out.0[p][q] = a.0[i][j] * b.0[k][l];
            }
        }
        out
    }

    /// Dense 81-entry construction of A (x)bar B, minor-symmetrized, reduced to Voigt.
    fn dense_tensor_prod_bar(a: &Mat3, b: &Mat3) -> Stiffness3 {
        let x = |i: usize, j: usize, k: usize, l: usize| {
            0.5 * (a.0[i][k] * b.0[j][l] + a.0[i][l] * b.0[k][j])
        };
        let mut out = Stiffness3::ZERO;
        for (p, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            for (q, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
                out.0[p][q] = 0.25 * (x(i, j, k, l) + x(j, i, k, l) + x(i, j, l, k) + x(j, i, l, k));
            }
        }
        out
    }

    fn lcg_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_sym(next: &mut impl FnMut() -> f64) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in i..3 {
                let v = next();
                m.0[i][j] = v;
                m.0[j][i] = v;
            }
        }
        m
    }

    #[test]
    fn sym_outer_aligned() {
        let e1 = [1.0, 0.0, 0.0];
        assert_eq!(sym_outer(&e1, &e1).0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sym_outer_off_diagonal() {
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        assert_eq!(sym_outer(&e1, &e2).0, [0.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn sym_outer_matches_dense() {
        let mut next = lcg_stream(7);
        for _ in 0..100 {
            let a = [next(), next(), next()];
            let b = [next(), next(), next()];
            let dense = (dense_outer(&a, &b) + dense_outer(&b, &a)) * 0.5;
            let got = sym_outer(&a, &b).to_mat3();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((dense.0[i][j] - got.0[i][j]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn voigt_round_trip_exact() {
        let mut next = lcg_stream(11);
        for _ in 0..50 {
            let m = random_sym(&mut next);
            let v = SymTensor3::from_mat3(&m);
            let back = SymTensor3::from_mat3(&v.to_mat3());
            assert_eq!(v.0, back.0);
        }
    }

    #[test]
    fn identity_tensor_products() {
        let i = SymTensor3::identity();
        let ixi = tensor_prod(&i, &i);
        for p in 0..6 {
            for q in 0..6 {
                let expect = if p < 3 && q < 3 { 1.0 } else { 0.0 };
                assert_eq!(ixi.0[p][q], expect);
            }
        }
        // I (x)bar I is the symmetric fourth-order identity: ones on normal
        // components, one half on the shear diagonal.
        let ibi = tensor_prod_bar(&i, &i);
        for p in 0..6 {
            for q in 0..6 {
                let expect = match (p, q) {
                    (p, q) if p == q && p < 3 => 1.0,
                    (p, q) if p == q => 0.5,
                    _ => 0.0,
                };
                assert_eq!(ibi.0[p][q], expect);
            }
        }
    }

    #[test]
    fn tensor_products_match_dense_oracle() {
        let mut next = lcg_stream(23);
        for _ in 0..100 {
            let am = random_sym(&mut next);
            let bm = random_sym(&mut next);
            let a = SymTensor3::from_mat3(&am);
            let b = SymTensor3::from_mat3(&bm);

            let p1 = tensor_prod(&a, &b);
            let o1 = dense_tensor_prod(&am, &bm);
            let p2 = tensor_prod_bar(&a, &b);
            let o2 = dense_tensor_prod_bar(&am, &bm);
            for r in 0..6 {
                for c in 0..6 {
                    assert!((p1.0[r][c] - o1.0[r][c]).abs() < 1e-15);
                    assert!((p2.0[r][c] - o2.0[r][c]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn push_forward_stress_zero_and_single_term() {
        let b = SymTensor3([1.3, 0.9, 1.1, 0.2, -0.1, 0.05]);
        let zero = push_forward_stress(&[0.0, 0.0], &[b, b]).unwrap();
        assert_eq!(zero.0, [0.0; 6]);

        // Coefficient 1/2 cancels the factor 2.
        let tau = push_forward_stress(&[0.5], &[b]).unwrap();
        assert_eq!(tau.0, b.0);
    }

    #[test]
    fn push_forward_stress_length_mismatch() {
        let err = push_forward_stress(&[1.0, 2.0], &[SymTensor3::ZERO]).unwrap_err();
        assert!(matches!(err, TensorError::LengthMismatch { .. }));
    }

    #[test]
    fn push_forward_stiffness_zero_derivatives() {
        let g = [SymTensor3::identity()];
        let gg = [tensor_prod(&SymTensor3::identity(), &SymTensor3::identity())];
        let c = push_forward_stiffness(&[0.0], &[0.0], &g, &gg).unwrap();
        assert_eq!(c.norm_inf(), 0.0);
    }

    #[test]
    fn push_forward_stiffness_quadratic_energy_at_identity() {
        // Psi = (I1 - 3)^2 at F = I: dN = 0, d2N = 2, G^1 = B = I, GG^1 = 0,
        // so c = 8 B (x) B, i.e. eights in the upper-left 3x3 block.
        let b = SymTensor3::identity();
        let c = push_forward_stiffness(&[0.0], &[2.0], &[b], &[Stiffness3::ZERO]).unwrap();
        for p in 0..6 {
            for q in 0..6 {
                let expect = if p < 3 && q < 3 { 8.0 } else { 0.0 };
                assert_eq!(c.0[p][q], expect);
            }
        }
    }

    #[test]
    fn push_forward_stiffness_major_symmetry() {
        let mut next = lcg_stream(31);
        for _ in 0..50 {
            let m = 3;
            let g: Vec<SymTensor3> = (0..m)
                .map(|_| SymTensor3::from_mat3(&random_sym(&mut next)))
                .collect();
            let gg: Vec<Stiffness3> = (0..m)
                .map(|_| {
                    let a = SymTensor3::from_mat3(&random_sym(&mut next));
                    tensor_prod_bar(&a, &a)
                })
                .collect();
            let dn: Vec<f64> = (0..m).map(|_| next()).collect();
            let mut d2: Vec<f64> = vec![0.0; m * m];
            for i in 0..m {
                for j in i..m {
                    let v = next();
                    d2[i * m + j] = v;
                    d2[j * m + i] = v;
                }
            }
            let c = push_forward_stiffness(&dn, &d2, &g, &gg).unwrap();
            assert!(c.major_asymmetry() < 1e-12 * c.norm_inf().max(1.0));
        }
    }
}
