//! Compressed sparse row matrix with a pattern built once from mesh
//! connectivity. Values are zeroed and re-accumulated every Newton
//! iteration; the pattern (and with it the slot of every block entry) never
//! changes, which is what makes the ordered scatter deterministic.

use super::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the 3-DOF-per-node pattern from element connectivity. The
    /// pattern is symmetric because node adjacency is.
    pub fn from_mesh(mesh: &Mesh) -> CsrMatrix {
        let n_nodes = mesh.n_nodes();
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for conn in &mesh.elements {
            for &a in conn {
                for &b in conn {
                    neighbors[a].push(b);
                }
            }
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }

        let n = 3 * n_nodes;
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0usize);
        let nnz: usize = neighbors.iter().map(|l| 3 * l.len()).sum::<usize>() * 3;
        let mut col_indices = Vec::with_capacity(nnz);
        for node in 0..n_nodes {
            for _dir in 0..3 {
                for &nb in &neighbors[node] {
                    for d in 0..3 {
                        col_indices.push(3 * nb + d);
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        let values = vec![0.0; col_indices.len()];
        CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn zero_values(&mut self) {
        for v in self.values.iter_mut() {
            *v = 0.0;
        }
    }

    /// Index into `values` for entry (row, col); None if outside the pattern.
    #[inline]
    pub fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_offsets[row];
        let end = self.row_offsets[row + 1];
        self.col_indices[start..end]
            .binary_search(&col)
            .ok()
            .map(|k| start + k)
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let slot = self
            .slot(row, col)
            .expect("entry outside the assembled sparsity pattern");
        self.values[slot] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |s| self.values[s])
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for row in 0..self.n {
            let mut s = 0.0;
            for k in self.row_offsets[row]..self.row_offsets[row + 1] {
                s += self.values[k] * x[self.col_indices[k]];
            }
            y[row] = s;
        }
    }

    pub fn diagonal(&self, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n, 0.0);
        for row in 0..self.n {
            out[row] = self.get(row, row);
        }
    }

    /// Extracts a dense column; used by the finite-difference tangent checks.
    pub fn column(&self, col: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n, 0.0);
        for row in 0..self.n {
            out[row] = self.get(row, col);
        }
    }

    /// Worst relative asymmetry max |A_ij - A_ji| / max |A|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for row in 0..self.n {
            for k in self.row_offsets[row]..self.row_offsets[row + 1] {
                let col = self.col_indices[k];
                if col > row {
                    let other = self.get(col, row);
                    worst = worst.max((self.values[k] - other).abs());
                }
            }
        }
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::mesh::build_structured_cube;

    #[test]
    fn pattern_is_symmetric_and_complete() {
        let mesh = build_structured_cube(2);
        let k = CsrMatrix::from_mesh(&mesh);
        assert_eq!(k.n, 81);
        // Every element node pair has a 3x3 block.
        for conn in &mesh.elements {
            for &a in conn {
                for &b in conn {
                    for i in 0..3 {
                        for j in 0..3 {
                            assert!(k.slot(3 * a + i, 3 * b + j).is_some());
                        }
                    }
                }
            }
        }
        // Pattern symmetry.
        for row in 0..k.n {
            for s in k.row_offsets[row]..k.row_offsets[row + 1] {
                let col = k.col_indices[s];
                assert!(k.slot(col, row).is_some());
            }
        }
    }

    #[test]
    fn matvec_against_dense() {
        let mesh = build_structured_cube(1);
        let mut k = CsrMatrix::from_mesh(&mesh);
        // Fill with a deterministic pattern.
        for row in 0..k.n {
            for s in k.row_offsets[row]..k.row_offsets[row + 1] {
                let col = k.col_indices[s];
                k.values[s] = ((row * 31 + col * 7) % 13) as f64 - 6.0;
            }
        }
        let x: Vec<f64> = (0..k.n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; k.n];
        k.matvec(&x, &mut y);
        for row in 0..k.n {
            let mut expect = 0.0;
            for col in 0..k.n {
                expect += k.get(row, col) * x[col];
            }
            assert!((y[row] - expect).abs() < 1e-12);
        }
    }
}
