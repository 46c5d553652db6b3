//! System assembly. Four algorithms produce the same (K, r) bit for bit:
//!
//! * traditional - one constitutive call per quadrature point;
//! * globally vectorized - one table over all quadrature points, one
//!   constitutive call, then the scatter loop;
//! * batch-vectorized - tables of a configured capacity (counted in
//!   quadrature points) processed chunk by chunk through one reused
//!   [`MaterialBatch`];
//! * partitioned - contiguous element ranges assigned to shared-memory
//!   workers, each running the batch-vectorized sweep into private triplet
//!   buffers that are merged in worker order.
//!
//! Bitwise equality holds because every algorithm runs the identical
//! per-point arithmetic in the identical order and accumulates into each
//! global slot in the identical order: elements ascending, quadrature
//! points ascending, then the fixed node-pair scatter order.

use std::ops::Range;
use std::time::Instant;

use crate::constitutive::{MaterialBatch, NcmDefinition};
use crate::tensors::{Mat3, Stiffness3, SymTensor3};

use super::csr::CsrMatrix;
use super::quadrature::{phi, N_QP};
use super::{FeError, FeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyMode {
    Traditional,
    Global,
    Batch { n_batch: usize },
    Partitioned { n_batch: usize, n_workers: usize },
}

impl AssemblyMode {
    pub fn label(&self) -> String {
        match self {
            AssemblyMode::Traditional => "trad".to_string(),
            AssemblyMode::Global => "global".to_string(),
            AssemblyMode::Batch { n_batch } => format!("batch{n_batch}"),
            AssemblyMode::Partitioned { n_batch, n_workers } => {
                format!("part{n_workers}x{n_batch}")
            }
        }
    }
}

/// Wall time split of one assembly: the constitutive updates versus
/// everything else (trial gradients, scatter, tractions). For partitioned
/// assembly the constitutive share is the worker maximum, i.e. the critical
/// path.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyPhases {
    pub constitutive_ns: u64,
    pub other_ns: u64,
}

impl AssemblyPhases {
    pub fn total_ns(&self) -> u64 {
        self.constitutive_ns + self.other_ns
    }
}

/// Reusable buffers held across Newton iterations so repeated assemblies do
/// not reallocate the state tables.
#[derive(Debug, Default)]
pub struct AssemblyWorkspace {
    batch: Option<MaterialBatch>,
}

impl AssemblyWorkspace {
    pub fn new() -> Self {
        AssemblyWorkspace::default()
    }

    fn batch_with_capacity(&mut self, capacity: usize) -> &mut MaterialBatch {
        let needs_new = self
            .batch
            .as_ref()
            .map_or(true, |b| b.capacity() != capacity);
        if needs_new {
            self.batch = Some(MaterialBatch::with_capacity(capacity));
        }
        self.batch.as_mut().unwrap()
    }
}

/// Trial deformation gradient F = I + sum_I u^I (x) Grad phi^I at one
/// quadrature point.
#[inline]
pub fn compute_trial_f(u: &[f64], conn: &[usize; 8], grads: &[[f64; 3]; 8]) -> Mat3 {
    let mut f = Mat3::identity();
    for (i, &node) in conn.iter().enumerate() {
        let ux = u[3 * node];
        let uy = u[3 * node + 1];
        let uz = u[3 * node + 2];
        let g = &grads[i];
        f.0[0][0] += ux * g[0];
        f.0[0][1] += ux * g[1];
        f.0[0][2] += ux * g[2];
        f.0[1][0] += uy * g[0];
        f.0[1][1] += uy * g[1];
        f.0[1][2] += uy * g[2];
        f.0[2][0] += uz * g[0];
        f.0[2][1] += uz * g[1];
        f.0[2][2] += uz * g[2];
    }
    f
}

/// The Voigt contraction of the quadrature-point stiffness with two spatial
/// shape gradients, including the geometric term:
///
/// block_ij = sum_kl gi_k (delta_ij tau_kl + c_ikjl) gj_l
///
/// The k,l loops run over the full index range, which performs the shear
/// duplication the stress-like Voigt storage leaves out.
#[inline]
pub fn qp_block(
    cc: &Stiffness3,
    tau: &SymTensor3,
    gi: &[f64; 3],
    gj: &[f64; 3],
) -> [[f64; 3]; 3] {
    let tau_m = tau.to_mat3();
    let mut geo = 0.0;
    for k in 0..3 {
        let mut row = 0.0;
        for l in 0..3 {
            row += tau_m.0[k][l] * gj[l];
        }
        geo += gi[k] * row;
    }
    let mut block = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += gi[k] * cc.get(i, k, j, l) * gj[l];
                }
            }
            block[i][j] = s + if i == j { geo } else { 0.0 };
        }
    }
    block
}

/// Value-array slots of the 24x24 element block, precomputed once per
/// element so the per-point scatter is lookup-free.
struct ElementSlots {
    slots: Vec<u32>, // [I * 8 + J][i * 3 + j]
    element: Option<usize>,
}

impl ElementSlots {
    fn new() -> Self {
        ElementSlots {
            slots: vec![0; 64 * 9],
            element: None,
        }
    }

    fn ensure(&mut self, pattern: &CsrMatrix, e: usize, conn: &[usize; 8]) {
        if self.element == Some(e) {
            return;
        }
        for (bi, &node_i) in conn.iter().enumerate() {
            for (bj, &node_j) in conn.iter().enumerate() {
                let base = (bi * 8 + bj) * 9;
                for i in 0..3 {
                    for j in 0..3 {
                        let slot = pattern
                            .slot(3 * node_i + i, 3 * node_j + j)
                            .expect("pattern covers element blocks");
                        self.slots[base + 3 * i + j] = slot as u32;
                    }
                }
            }
        }
        self.element = Some(e);
    }

    #[inline]
    fn get(&self, bi: usize, bj: usize, i: usize, j: usize) -> u32 {
        self.slots[(bi * 8 + bj) * 9 + 3 * i + j]
    }
}

/// Where scattered contributions go: straight into the global system, or
/// into a worker's private triplet buffers for an ordered merge later.
enum Sink<'a> {
    Direct {
        k_values: &'a mut [f64],
        r: &'a mut [f64],
    },
    Triplets {
        k: &'a mut Vec<(u32, f64)>,
        r: &'a mut Vec<(u32, f64)>,
    },
}

impl Sink<'_> {
    #[inline]
    fn add_k(&mut self, slot: u32, v: f64) {
        match self {
            Sink::Direct { k_values, .. } => k_values[slot as usize] += v,
            Sink::Triplets { k, .. } => k.push((slot, v)),
        }
    }

    #[inline]
    fn add_r(&mut self, dof: u32, v: f64) {
        match self {
            Sink::Direct { r, .. } => r[dof as usize] += v,
            Sink::Triplets { r, .. } => r.push((dof, v)),
        }
    }
}

/// Scatters one quadrature point: residual contributions first, then the
/// stiffness blocks, in fixed (I, then I x J) order.
fn scatter_qp(
    w: f64,
    f: &Mat3,
    tau: &SymTensor3,
    cc: &Stiffness3,
    conn: &[usize; 8],
    ref_grads: &[[f64; 3]; 8],
    slots: &ElementSlots,
    sink: &mut Sink<'_>,
) -> Result<(), FeError> {
    // Spatial gradients grad phi = F^-T Grad phi. F was accepted by the
    // constitutive update, so it is invertible here.
    let finv = f.inverse().expect("constitutive update accepted F");
    let mut g = [[0.0f64; 3]; 8];
    for i in 0..8 {
        for a in 0..3 {
            // (F^-T Grad)_a = sum_b finv[b][a] Grad_b
            g[i][a] = finv.0[0][a] * ref_grads[i][0]
                + finv.0[1][a] * ref_grads[i][1]
                + finv.0[2][a] * ref_grads[i][2];
        }
    }
    let tau_m = tau.to_mat3();
    for bi in 0..8 {
        let gi = &g[bi];
        let node = conn[bi];
        for i in 0..3 {
            let val = w * (tau_m.0[i][0] * gi[0] + tau_m.0[i][1] * gi[1] + tau_m.0[i][2] * gi[2]);
            sink.add_r((3 * node + i) as u32, val);
        }
        for bj in 0..8 {
            let block = qp_block(cc, tau, gi, &g[bj]);
            for i in 0..3 {
                for j in 0..3 {
                    sink.add_k(slots.get(bi, bj, i, j), w * block[i][j]);
                }
            }
        }
    }
    Ok(())
}

struct PhaseAcc {
    constitutive_ns: u64,
}

/// Traditional sweep: fresh per-point constitutive calls, scattered as they
/// are produced.
fn assemble_traditional_range(
    model: &NcmDefinition,
    fe: &FeModel,
    u: &[f64],
    elements: Range<usize>,
    pattern: &CsrMatrix,
    sink: &mut Sink<'_>,
    acc: &mut PhaseAcc,
) -> Result<(), FeError> {
    let mut slots = ElementSlots::new();
    for e in elements {
        let conn = &fe.mesh.elements[e];
        slots.ensure(pattern, e, conn);
        for q in 0..N_QP {
            let grads = fe.cache.grad(e, q);
            let f = compute_trial_f(u, conn, grads);
            let t0 = Instant::now();
            let eval = model
                .eval_point(&f)
                .map_err(|source| FeError::Constitutive {
                    element: e,
                    qp: q,
                    source,
                })?;
            acc.constitutive_ns += t0.elapsed().as_nanos() as u64;
            scatter_qp(
                fe.cache.weight(e, q),
                &f,
                &eval.tau,
                &eval.stiffness,
                conn,
                grads,
                &slots,
                sink,
            )?;
        }
    }
    Ok(())
}

/// Batch-vectorized sweep over a contiguous element range. The batch unit is
/// the quadrature point: chunks of `batch.capacity()` points are gathered,
/// evaluated in one vectorized call, and scattered.
fn assemble_batched_range(
    model: &NcmDefinition,
    fe: &FeModel,
    u: &[f64],
    elements: Range<usize>,
    batch: &mut MaterialBatch,
    pattern: &CsrMatrix,
    sink: &mut Sink<'_>,
    acc: &mut PhaseAcc,
) -> Result<(), FeError> {
    let qp_begin = elements.start * N_QP;
    let qp_end = elements.end * N_QP;
    let n_batch = batch.capacity();
    let mut slots = ElementSlots::new();

    let mut chunk_start = qp_begin;
    while chunk_start < qp_end {
        let chunk_end = (chunk_start + n_batch).min(qp_end);

        batch.clear();
        for idx in chunk_start..chunk_end {
            let (e, q) = (idx / N_QP, idx % N_QP);
            let f = compute_trial_f(u, &fe.mesh.elements[e], fe.cache.grad(e, q));
            batch.push_f(&f);
        }

        let t0 = Instant::now();
        model.eval_batch(batch).map_err(|err| {
            let idx = chunk_start + err.index;
            FeError::Constitutive {
                element: idx / N_QP,
                qp: idx % N_QP,
                source: err.source,
            }
        })?;
        acc.constitutive_ns += t0.elapsed().as_nanos() as u64;

        for (local, idx) in (chunk_start..chunk_end).enumerate() {
            let (e, q) = (idx / N_QP, idx % N_QP);
            let conn = &fe.mesh.elements[e];
            slots.ensure(pattern, e, conn);
            scatter_qp(
                fe.cache.weight(e, q),
                &batch.f_at(local),
                &batch.tau_at(local),
                &batch.stiffness_at(local),
                conn,
                fe.cache.grad(e, q),
                &slots,
                sink,
            )?;
        }
        chunk_start = chunk_end;
    }
    Ok(())
}

/// Splits `n_elements` into at most `n_workers` contiguous, near-equal
/// ranges. Empty ranges are dropped, so more workers than elements degrades
/// to one element per worker.
fn partition_elements(n_elements: usize, n_workers: usize) -> Vec<Range<usize>> {
    let workers = n_workers.max(1).min(n_elements.max(1));
    let base = n_elements / workers;
    let extra = n_elements % workers;
    let mut ranges = Vec::with_capacity(workers);
    let mut start = 0usize;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        if len == 0 {
            continue;
        }
        ranges.push(start..start + len);
        start += len;
    }
    ranges
}

/// Assembles the tangent matrix and residual for displacement state `u`.
/// `k` must carry the pattern built from this mesh; values are zeroed and
/// re-accumulated. The residual includes the traction term; Dirichlet
/// handling is a separate step (see [`apply_dirichlet`]).
pub fn assemble(
    model: &NcmDefinition,
    fe: &FeModel,
    u: &[f64],
    mode: AssemblyMode,
    k: &mut CsrMatrix,
    r: &mut [f64],
) -> Result<AssemblyPhases, FeError> {
    let mut ws = AssemblyWorkspace::new();
    assemble_with(model, fe, u, mode, k, r, &mut ws)
}

/// [`assemble`] with a caller-held workspace so the state tables are
/// allocated once and reused across Newton iterations.
pub fn assemble_with(
    model: &NcmDefinition,
    fe: &FeModel,
    u: &[f64],
    mode: AssemblyMode,
    k: &mut CsrMatrix,
    r: &mut [f64],
    ws: &mut AssemblyWorkspace,
) -> Result<AssemblyPhases, FeError> {
    let n_dofs = fe.n_dofs();
    if u.len() != n_dofs {
        return Err(FeError::DofLength {
            expected: n_dofs,
            got: u.len(),
        });
    }
    let total_start = Instant::now();
    k.zero_values();
    for x in r.iter_mut() {
        *x = 0.0;
    }

    let n_el = fe.mesh.n_elements();
    let total_qps = n_el * N_QP;
    let mut acc = PhaseAcc { constitutive_ns: 0 };

    match mode {
        AssemblyMode::Traditional => {
            // Split the values out so the pattern stays borrowable.
            let mut values = std::mem::take(&mut k.values);
            let mut sink = Sink::Direct {
                k_values: &mut values,
                r,
            };
            let result =
                assemble_traditional_range(model, fe, u, 0..n_el, k, &mut sink, &mut acc);
            k.values = values;
            result?;
        }
        AssemblyMode::Global | AssemblyMode::Batch { .. } => {
            let n_batch = match mode {
                AssemblyMode::Global => total_qps,
                AssemblyMode::Batch { n_batch } => {
                    assert!(n_batch >= 1, "batch size must be at least 1");
                    n_batch
                }
                _ => unreachable!(),
            };
            let batch = ws.batch_with_capacity(n_batch.min(total_qps).max(1));
            let mut values = std::mem::take(&mut k.values);
            let mut sink = Sink::Direct {
                k_values: &mut values,
                r,
            };
            let result =
                assemble_batched_range(model, fe, u, 0..n_el, batch, k, &mut sink, &mut acc);
            k.values = values;
            result?;
        }
        AssemblyMode::Partitioned { n_batch, n_workers } => {
            assert!(n_batch >= 1, "batch size must be at least 1");
            assert!(n_workers >= 1, "need at least one worker");
            let ranges = partition_elements(n_el, n_workers);

            struct WorkerOut {
                k: Vec<(u32, f64)>,
                r: Vec<(u32, f64)>,
                constitutive_ns: u64,
            }

            let pattern: &CsrMatrix = k;
            let results: Vec<Result<WorkerOut, FeError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = ranges
                    .iter()
                    .enumerate()
                    .map(|(worker, range)| {
                        let range = range.clone();
                        scope.spawn(move || -> Result<WorkerOut, FeError> {
                            let mut batch = MaterialBatch::with_capacity(
                                n_batch.min(range.len() * N_QP).max(1),
                            );
                            let mut kt = Vec::new();
                            let mut rt = Vec::new();
                            let mut sink = Sink::Triplets {
                                k: &mut kt,
                                r: &mut rt,
                            };
                            let mut acc = PhaseAcc { constitutive_ns: 0 };
                            assemble_batched_range(
                                model, fe, u, range, &mut batch, pattern, &mut sink, &mut acc,
                            )
                            .map_err(|source| FeError::Worker {
                                worker,
                                source: Box::new(source),
                            })?;
                            Ok(WorkerOut {
                                k: kt,
                                r: rt,
                                constitutive_ns: acc.constitutive_ns,
                            })
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("assembly worker panicked"))
                    .collect()
            });

            // Ordered merge: workers ascending, pushes in scatter order, so
            // every slot sees the same addition sequence as the sequential
            // sweep.
            for result in results {
                let out = result?;
                for (slot, v) in out.k {
                    k.values[slot as usize] += v;
                }
                for (dof, v) in out.r {
                    r[dof as usize] += v;
                }
                acc.constitutive_ns = acc.constitutive_ns.max(out.constitutive_ns);
            }
        }
    }

    apply_tractions(fe, r)?;

    let total_ns = total_start.elapsed().as_nanos() as u64;
    Ok(AssemblyPhases {
        constitutive_ns: acc.constitutive_ns,
        other_ns: total_ns.saturating_sub(acc.constitutive_ns),
    })
}

/// Subtracts the traction term from the residual: r_i^I -= integral of
/// phi^I tbar_i over each facet, with a 2x2 Gauss rule on the reference
/// geometry (dead load).
fn apply_tractions(fe: &FeModel, r: &mut [f64]) -> Result<(), FeError> {
    if fe.dofmap.tractions.is_empty() {
        return Ok(());
    }
    const GP: f64 = 0.577_350_269_189_625_8;
    const QUAD_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    for traction in &fe.dofmap.tractions {
        let facets = fe.mesh.facet_set(&traction.facet_set)?;
        for facet in facets {
            for gp in QUAD_CORNERS.iter() {
                let (xi, eta) = (gp[0] * GP, gp[1] * GP);
                let mut shape = [0.0f64; 4];
                let mut dxi = [0.0f64; 4];
                let mut deta = [0.0f64; 4];
                for (a, c) in QUAD_CORNERS.iter().enumerate() {
                    shape[a] = 0.25 * (1.0 + c[0] * xi) * (1.0 + c[1] * eta);
                    dxi[a] = 0.25 * c[0] * (1.0 + c[1] * eta);
                    deta[a] = 0.25 * (1.0 + c[0] * xi) * c[1];
                }
                let mut t_xi = [0.0f64; 3];
                let mut t_eta = [0.0f64; 3];
                for (a, &node) in facet.iter().enumerate() {
                    let x = fe.mesh.coords[node];
                    for d in 0..3 {
                        t_xi[d] += dxi[a] * x[d];
                        t_eta[d] += deta[a] * x[d];
                    }
                }
                let cross = [
                    t_xi[1] * t_eta[2] - t_xi[2] * t_eta[1],
                    t_xi[2] * t_eta[0] - t_xi[0] * t_eta[2],
                    t_xi[0] * t_eta[1] - t_xi[1] * t_eta[0],
                ];
                let da = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                for (a, &node) in facet.iter().enumerate() {
                    for d in 0..3 {
                        r[3 * node + d] -= shape[a] * traction.t[d] * da;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Row/column elimination with symmetric right-hand-side correction.
/// `deltas` are the prescribed increments of the constrained DOFs (zero in
/// the usual case where boundary values are imposed on the state before
/// assembly). The matrix stays symmetric, so CG remains applicable.
pub fn apply_dirichlet(
    k: &mut CsrMatrix,
    rhs: &mut [f64],
    fe: &FeModel,
    deltas: &[(usize, f64)],
) {
    let mut delta = vec![0.0f64; k.n];
    for &(dof, v) in deltas {
        delta[dof] = v;
    }
    for row in 0..k.n {
        let row_constrained = fe.dofmap.is_constrained(row);
        for s in k.row_offsets[row]..k.row_offsets[row + 1] {
            let col = k.col_indices[s];
            if row_constrained {
                k.values[s] = if col == row { 1.0 } else { 0.0 };
            } else if fe.dofmap.is_constrained(col) {
                rhs[row] -= k.values[s] * delta[col];
                k.values[s] = 0.0;
            }
        }
    }
    for row in 0..k.n {
        if fe.dofmap.is_constrained(row) {
            rhs[row] = delta[row];
        }
    }
}

/// Free-DOF Euclidean norm of a residual.
pub fn free_norm(fe: &FeModel, r: &[f64]) -> f64 {
    let mut s = 0.0;
    for (dof, &v) in r.iter().enumerate() {
        if !fe.dofmap.is_constrained(dof) {
            s += v * v;
        }
    }
    s.sqrt()
}

/// Largest trace of C = F^T F over all quadrature points at state `u`.
pub fn max_tr_c(fe: &FeModel, u: &[f64]) -> f64 {
    let mut worst = f64::MIN;
    for (e, conn) in fe.mesh.elements.iter().enumerate() {
        for q in 0..N_QP {
            let f = compute_trial_f(u, conn, fe.cache.grad(e, q));
            let tr = f.c_tensor().trace();
            worst = worst.max(tr);
        }
    }
    worst
}

/// Facet shape values used by the traction tests.
pub fn facet_shape(xi: f64, eta: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (a, c) in [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0f64, -0.0]]
        .iter()
        .enumerate()
    {
        let _ = (a, c);
    }
    out[0] = 0.25 * (1.0 - xi) * (1.0 - eta);
    out[1] = 0.25 * (1.0 + xi) * (1.0 - eta);
    out[2] = 0.25 * (1.0 + xi) * (1.0 + eta);
    out[3] = 0.25 * (1.0 - xi) * (1.0 + eta);
    out
}

// Keep the isoparametric value helper reachable for facet checks.
#[allow(unused_imports)]
use phi as _phi_for_tests;
