//! Structure-of-arrays table for a contiguous run of quadrature points:
//! deformation gradients in, (Psi, tau, c) out. All four tables are single
//! contiguous blocks allocated once at the configured capacity and never
//! reallocated during a sweep, so the vectorized kernel works over stable
//! addresses and the hardware prefetcher sees pure streaming access.

use crate::tensors::{Mat3, Stiffness3, SymTensor3};

use super::PointEval;

#[derive(Debug, Clone)]
pub struct MaterialBatch {
    capacity: usize,
    n: usize,
    f: Vec<f64>,   // 9 per point, row-major
    psi: Vec<f64>, // 1 per point
    tau: Vec<f64>, // 6 per point, Voigt
    cc: Vec<f64>,  // 36 per point, Voigt row-major
}

impl MaterialBatch {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity >= 1, "batch capacity must be at least 1");
        MaterialBatch {
            capacity,
            n: 0,
            f: vec![0.0; 9 * capacity],
            psi: vec![0.0; capacity],
            tau: vec![0.0; 6 * capacity],
            cc: vec![0.0; 36 * capacity],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Drops the points without touching the allocations.
    pub fn clear(&mut self) {
        self.n = 0;
    }

    /// Appends a deformation gradient. Panics if the capacity is exceeded;
    /// the sweep logic sizes its chunks to fit.
    pub fn push_f(&mut self, f: &Mat3) {
        assert!(self.n < self.capacity, "material batch is full");
        let base = 9 * self.n;
        for i in 0..3 {
            for j in 0..3 {
                self.f[base + 3 * i + j] = f.0[i][j];
            }
        }
        self.n += 1;
    }

    pub fn f_at(&self, i: usize) -> Mat3 {
        assert!(i < self.n);
        let base = 9 * i;
        Mat3([
            [self.f[base], self.f[base + 1], self.f[base + 2]],
            [self.f[base + 3], self.f[base + 4], self.f[base + 5]],
            [self.f[base + 6], self.f[base + 7], self.f[base + 8]],
        ])
    }

    pub fn psi_at(&self, i: usize) -> f64 {
        assert!(i < self.n);
        self.psi[i]
    }

    pub fn tau_at(&self, i: usize) -> SymTensor3 {
        assert!(i < self.n);
        let base = 6 * i;
        let mut v = [0.0; 6];
        v.copy_from_slice(&self.tau[base..base + 6]);
        SymTensor3(v)
    }

    pub fn stiffness_at(&self, i: usize) -> Stiffness3 {
        assert!(i < self.n);
        let base = 36 * i;
        let mut m = [[0.0; 6]; 6];
        for (r, row) in m.iter_mut().enumerate() {
            row.copy_from_slice(&self.cc[base + 6 * r..base + 6 * r + 6]);
        }
        Stiffness3(m)
    }

    /// Raw output views, handy for checksumming a benchmark sweep.
    pub fn psi_table(&self) -> &[f64] {
        &self.psi[..self.n]
    }

    pub fn tau_table(&self) -> &[f64] {
        &self.tau[..6 * self.n]
    }

    pub fn stiffness_table(&self) -> &[f64] {
        &self.cc[..36 * self.n]
    }

    pub(crate) fn store(&mut self, i: usize, eval: &PointEval) {
        self.psi[i] = eval.psi;
        self.tau[6 * i..6 * i + 6].copy_from_slice(&eval.tau.0);
        let base = 36 * i;
        for (r, row) in eval.stiffness.0.iter().enumerate() {
            self.cc[base + 6 * r..base + 6 * r + 6].copy_from_slice(row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_f() {
        let mut batch = MaterialBatch::with_capacity(4);
        let f = Mat3([[1.0, 0.1, 0.2], [0.3, 1.1, 0.4], [0.5, 0.6, 0.9]]);
        batch.push_f(&Mat3::identity());
        batch.push_f(&f);
        assert_eq!(batch.len(), 2);
        assert_eq!(batch.f_at(1), f);
        batch.clear();
        assert!(batch.is_empty());
        assert_eq!(batch.capacity(), 4);
    }

    #[test]
    #[should_panic(expected = "material batch is full")]
    fn push_beyond_capacity_panics() {
        let mut batch = MaterialBatch::with_capacity(1);
        batch.push_f(&Mat3::identity());
        batch.push_f(&Mat3::identity());
    }
}
