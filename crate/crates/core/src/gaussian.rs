//! Exact Gaussian-state simulation: cluster-state construction, homodyne
//! conditioning, reduction to the code state, arc-observable moments, and
//! string displacements.
//!
//! States are mean vector plus full covariance over quadratures ordered
//! `(q_1..q_N, p_1..p_N)` with hbar = 1, so the vacuum covariance is I/2.
//! Everything here is dense O(N^3) linear algebra, intended for lattices up
//! to [`ENGINE_MODE_CAP`] modes.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeSpec, NodeKind, OrientedPath};

/// Dense-engine size cap (cluster nodes). Larger systems should use the
/// closed-form covariance path.
pub const ENGINE_MODE_CAP: usize = 200;

/// Marginal-variance floor below which conditioning is refused.
const DEGENERACY_FLOOR: f64 = 1e-12;

/// Which quadrature of a mode an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Q,
    P,
}

/// Gaussian state: mean and covariance over 2N quadratures, qq..pp order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// N-mode vacuum, covariance I/2.
    pub fn vacuum(modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * modes),
            cov: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    /// Assemble a state from raw mean and covariance (qq..pp layout).
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.len() % 2 != 0 || cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Validation(format!(
                "mean length {} and covariance {}x{} do not describe 2N quadratures",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self { mean, cov })
    }

    /// N independent p-squeezed modes: Var(p) = 1/(2 s^2), Var(q) = s^2/2.
    pub fn p_squeezed_vacuum(modes: usize, s: f64) -> Result<Self> {
        if s <= 0.0 {
            return Err(Error::Domain(format!("squeezing factor must be > 0, got {s}")));
        }
        let mut cov = DMatrix::zeros(2 * modes, 2 * modes);
        for m in 0..modes {
            cov[(m, m)] = s * s / 2.0;
            cov[(modes + m, modes + m)] = 1.0 / (2.0 * s * s);
        }
        Ok(Self { mean: DVector::zeros(2 * modes), cov })
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Index of a quadrature in the qq..pp layout.
    pub fn index(&self, quad: Quadrature, mode: usize) -> usize {
        match quad {
            Quadrature::Q => mode,
            Quadrature::P => self.modes() + mode,
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::Index(format!(
                "mode {mode} out of range (modes = {})",
                self.modes()
            )));
        }
        Ok(())
    }

    /// Weight-1 controlled-phase gate: p_i += q_j, p_j += q_i.
    pub fn apply_cz(&mut self, i: usize, j: usize) {
        let n = self.modes();
        debug_assert!(i < n && j < n && i != j);
        let (qi, qj, pi, pj) = (i, j, n + i, n + j);
        let dim = 2 * n;
        for c in 0..dim {
            let a = self.cov[(qj, c)];
            let b = self.cov[(qi, c)];
            self.cov[(pi, c)] += a;
            self.cov[(pj, c)] += b;
        }
        for r in 0..dim {
            let a = self.cov[(r, qj)];
            let b = self.cov[(r, qi)];
            self.cov[(r, pi)] += a;
            self.cov[(r, pj)] += b;
        }
        let mq_j = self.mean[qj];
        let mq_i = self.mean[qi];
        self.mean[pi] += mq_j;
        self.mean[pj] += mq_i;
    }

    /// Phase-space displacement of one quadrature mean.
    pub fn displace(&mut self, quad: Quadrature, mode: usize, amount: f64) {
        let a = self.index(quad, mode);
        self.mean[a] += amount;
    }

    pub fn mean_of(&self, quad: Quadrature, mode: usize) -> f64 {
        self.mean[self.index(quad, mode)]
    }

    pub fn marginal_variance(&self, quad: Quadrature, mode: usize) -> f64 {
        let a = self.index(quad, mode);
        self.cov[(a, a)]
    }

    fn symmetrize(&mut self) {
        let d = self.cov.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (self.cov[(i, j)] + self.cov[(j, i)]);
                self.cov[(i, j)] = v;
                self.cov[(j, i)] = v;
            }
        }
    }

    /// Condition on a perfectly resolved quadrature measurement with a known
    /// outcome. The measured mode is removed from the state.
    pub fn homodyne_project(&self, mode: usize, quad: Quadrature, outcome: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let a = self.index(quad, mode);
        let sigma_aa = self.cov[(a, a)];
        if sigma_aa < DEGENERACY_FLOOR {
            return Err(Error::NumericalDegeneracy(format!(
                "marginal variance {sigma_aa:.3e} of measured quadrature is not positive"
            )));
        }
        let n = self.modes();
        let keep: Vec<usize> = (0..2 * n)
            .filter(|&k| k != mode && k != n + mode)
            .collect();
        let d = keep.len();
        let mut cov = DMatrix::zeros(d, d);
        for (bi, &i) in keep.iter().enumerate() {
            for (bj, &j) in keep.iter().enumerate() {
                cov[(bi, bj)] = self.cov[(i, j)] - self.cov[(i, a)] * self.cov[(a, j)] / sigma_aa;
            }
        }
        let shift = (outcome - self.mean[a]) / sigma_aa;
        let mut mean = DVector::zeros(d);
        for (bi, &i) in keep.iter().enumerate() {
            mean[bi] = self.mean[i] + self.cov[(i, a)] * shift;
        }
        Ok(Self { mean, cov })
    }

    /// Homodyne measurement of one quadrature. With `forced` the outcome is
    /// imposed; otherwise it is sampled from the marginal Gaussian.
    pub fn homodyne_measure<R: Rng + ?Sized>(
        &self,
        mode: usize,
        quad: Quadrature,
        forced: Option<f64>,
        rng: &mut R,
    ) -> Result<(f64, Self)> {
        self.check_mode(mode)?;
        let outcome = match forced {
            Some(m) => m,
            None => {
                let a = self.index(quad, mode);
                let var = self.cov[(a, a)];
                if var < DEGENERACY_FLOOR {
                    return Err(Error::NumericalDegeneracy(format!(
                        "marginal variance {var:.3e} of measured quadrature is not positive"
                    )));
                }
                let z: f64 = rng.sample(StandardNormal);
                self.mean[a] + var.sqrt() * z
            }
        };
        Ok((outcome, self.homodyne_project(mode, quad, outcome)?))
    }

    /// Smallest eigenvalue of the Hermitian matrix cov + (i/2) Omega.
    /// Non-negative (up to roundoff) iff the state satisfies the
    /// uncertainty relation.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let n = self.modes();
        let d = 2 * n;
        let m = DMatrix::<Complex<f64>>::from_fn(d, d, |i, j| {
            let omega = omega_entry(n, i, j);
            Complex::new(self.cov[(i, j)], 0.5 * omega)
        });
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Magnitudes of the eigenvalues of Omega * cov; each symplectic
    /// eigenvalue appears twice. A pure state has all values 1/2.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let n = self.modes();
        let d = 2 * n;
        let m = DMatrix::<f64>::from_fn(d, d, |i, j| {
            let mut acc = 0.0;
            for k in 0..d {
                let o = omega_entry(n, i, k);
                if o != 0.0 {
                    acc += o * self.cov[(k, j)];
                }
            }
            acc
        });
        let mut vals: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re * z.re + z.im * z.im).sqrt())
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    /// Max deviation of the symplectic eigenvalues from 1/2.
    pub fn purity_defect(&self) -> f64 {
        self.symplectic_eigenvalues()
            .iter()
            .map(|v| (v - 0.5).abs())
            .fold(0.0, f64::max)
    }

    /// JSON-ready form: mean array plus row-major covariance.
    pub fn to_document(&self) -> GaussianStateDocument {
        GaussianStateDocument {
            modes: self.modes(),
            mean: self.mean.iter().cloned().collect(),
            cov_row_major: self.cov.iter_rows_row_major(),
        }
    }
}

fn omega_entry(modes: usize, i: usize, j: usize) -> f64 {
    // Omega = [[0, I], [-I, 0]] in qq..pp ordering.
    if i < modes && j == modes + i {
        1.0
    } else if i >= modes && j == i - modes {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianStateDocument {
    pub modes: usize,
    pub mean: Vec<f64>,
    pub cov_row_major: Vec<f64>,
}

trait RowMajor {
    fn iter_rows_row_major(&self) -> Vec<f64>;
}

impl RowMajor for DMatrix<f64> {
    fn iter_rows_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nrows() * self.ncols());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                out.push(self[(i, j)]);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------
// Cluster-state construction and reduction
// ---------------------------------------------------------------------

/// Canonical cluster state on the parent grid of `spec`: p-squeezed modes
/// with a weight-1 controlled-phase gate per grid edge. Pure, zero mean.
pub fn build_canonical_cluster(spec: &LatticeSpec, s: f64) -> Result<GaussianState> {
    let nodes = spec.num_cluster_nodes();
    if nodes > ENGINE_MODE_CAP {
        return Err(Error::EngineCapacity { modes: nodes, cap: ENGINE_MODE_CAP });
    }
    let mut state = GaussianState::p_squeezed_vacuum(nodes, s)?;
    for (a, b) in spec.cluster_edges() {
        state.apply_cz(a, b);
    }
    state.symmetrize();
    Ok(state)
}

/// Cluster state on a path graph of `len` nodes.
pub fn line_cluster(len: usize, s: f64) -> Result<GaussianState> {
    if len == 0 || len > ENGINE_MODE_CAP {
        return Err(Error::Validation(format!("line length {len} unsupported")));
    }
    let mut state = GaussianState::p_squeezed_vacuum(len, s)?;
    for k in 0..len - 1 {
        state.apply_cz(k, k + 1);
    }
    state.symmetrize();
    Ok(state)
}

/// Outcome policy for the reduction measurements.
pub enum ReductionOutcomes<'a> {
    /// Force every measurement outcome to zero (deterministic reduction).
    ForceZero,
    /// Sample outcomes from the marginal Gaussians.
    Sample(&'a mut dyn rand::RngCore),
}

/// Reduced code state plus the measurement record of the preparation.
#[derive(Debug, Clone)]
pub struct CodePreparationRecord {
    pub state: GaussianState,
    /// Code edge id -> mode index in `state`.
    pub edge_modes: BTreeMap<usize, usize>,
    /// Cluster node -> recorded q outcome (face-type nodes only).
    pub q_outcomes: BTreeMap<usize, f64>,
    /// Accumulated shift of the vertical string mode (toroidal only).
    pub q1: Option<f64>,
    /// Accumulated shift of the broadcast string mode.
    pub q2: f64,
    /// Mode squeezing factor used in the construction.
    pub s: f64,
}

impl CodePreparationRecord {
    /// Mean offset of the reconstructed message caused by the preparation:
    /// sqrt(2) Q_2 / s. Subtracting it re-centers the broadcast at zero.
    pub fn q2_correction(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.q2 / self.s
    }

    pub fn mode_of_edge(&self, edge: usize) -> Result<usize> {
        self.edge_modes
            .get(&edge)
            .copied()
            .ok_or_else(|| Error::Index(format!("edge {edge} is not a surviving code mode")))
    }
}

/// Measure the cluster state down to the code state: p on vertex-type nodes,
/// q on face-type nodes, in the diagonally alternating pattern encoded by
/// the node classification. Records q outcomes and the string-mode shifts.
pub fn cluster_to_surface_code(
    cluster: &GaussianState,
    spec: &LatticeSpec,
    s: f64,
    outcomes: ReductionOutcomes<'_>,
) -> Result<CodePreparationRecord> {
    if cluster.modes() != spec.num_cluster_nodes() {
        return Err(Error::Pattern(format!(
            "cluster has {} modes but the lattice expects {}",
            cluster.modes(),
            spec.num_cluster_nodes()
        )));
    }
    let mut rng = match outcomes {
        ReductionOutcomes::ForceZero => None,
        ReductionOutcomes::Sample(r) => Some(r),
    };
    let mut state = cluster.clone();
    let mut alive: Vec<usize> = (0..cluster.modes()).collect();
    let mut q_outcomes = BTreeMap::new();
    for node in 0..cluster.modes() {
        let quad = match spec.cluster_node_kind(node)? {
            NodeKind::Vertex(..) => Quadrature::P,
            NodeKind::FaceNode(..) => Quadrature::Q,
            NodeKind::HEdge(..) | NodeKind::VEdge(..) => continue,
        };
        let pos = alive
            .binary_search(&node)
            .map_err(|_| Error::Pattern(format!("node {node} already measured")))?;
        let outcome = match rng.as_deref_mut() {
            None => {
                state = state.homodyne_project(pos, quad, 0.0)?;
                0.0
            }
            Some(r) => {
                let (m, next) = state.homodyne_measure(pos, quad, None, r)?;
                state = next;
                m
            }
        };
        if quad == Quadrature::Q {
            q_outcomes.insert(node, outcome);
        }
        alive.remove(pos);
    }

    let mut edge_modes = BTreeMap::new();
    for (pos, &node) in alive.iter().enumerate() {
        match spec.cluster_node_kind(node)? {
            NodeKind::HEdge(r, c) => {
                edge_modes.insert(spec.h_edge(r, c), pos);
            }
            NodeKind::VEdge(r, c) => {
                edge_modes.insert(spec.v_edge(r, c), pos);
            }
            _ => {
                return Err(Error::Pattern(format!(
                    "node {node} survived but is not an edge mode"
                )))
            }
        }
    }

    let q2 = string_shift(spec, &spec.primal_loop(spec.p2_row())?, &q_outcomes, s)?;
    let q1 = match spec.boundary() {
        Boundary::Toroidal => Some(string_shift(
            spec,
            &spec.primal_loop_vertical(spec.cols() / 2)?,
            &q_outcomes,
            s,
        )?),
        Boundary::Open => None,
    };

    Ok(CodePreparationRecord { state, edge_modes, q_outcomes, q1, q2, s })
}

/// Q_j = s / sqrt(2 |P_j|) * sum_k o(e_k) (q_left + q_right) over the faces
/// flanking each path edge. The recorded q outcomes displace the string
/// mode by exactly this amount.
fn string_shift(
    spec: &LatticeSpec,
    path: &OrientedPath,
    q_outcomes: &BTreeMap<usize, f64>,
    s: f64,
) -> Result<f64> {
    let len = path.edges.len() as f64;
    let mut acc = 0.0;
    for (&edge, &sign) in path.edges.iter().zip(path.signs.iter()) {
        let (kind, row, col) = spec.edge_info(edge)?;
        let (a, b) = match kind {
            crate::lattice::EdgeKind::Horizontal => spec.h_edge_face_nodes(row, col),
            crate::lattice::EdgeKind::Vertical => spec.v_edge_face_nodes(row, col),
        };
        let mut pair = 0.0;
        for node in [a, b].into_iter().flatten() {
            pair += q_outcomes.get(&node).copied().unwrap_or(0.0);
        }
        acc += f64::from(sign) * pair;
    }
    Ok(s / (2.0 * len).sqrt() * acc)
}

/// Minimal GHZ resource: the width-1 open line of `m` code modes, prepared
/// by measuring p on the interior nodes of a (2m-1)-node line cluster.
pub fn ghz_record(m: usize, s: f64) -> Result<CodePreparationRecord> {
    let spec = LatticeSpec::build(1, m, Boundary::Open)?;
    let cluster = build_canonical_cluster(&spec, s)?;
    cluster_to_surface_code(&cluster, &spec, s, ReductionOutcomes::ForceZero)
}

// ---------------------------------------------------------------------
// Arc observables and displacements
// ---------------------------------------------------------------------

/// A weighted sum of p quadratures, M = sum_e c_e p_e.
#[derive(Debug, Clone)]
pub struct ArcObservable {
    pub coeffs: Vec<(usize, f64)>,
}

impl ArcObservable {
    /// Observable w^{-1/2} sum o(e) p_e for an arc of code edges.
    pub fn from_arc(
        record: &CodePreparationRecord,
        edges: &[usize],
        signs: &[i8],
        width_norm: usize,
    ) -> Result<Self> {
        if edges.len() != signs.len() {
            return Err(Error::Validation("edge/sign length mismatch".into()));
        }
        let norm = 1.0 / (width_norm as f64).sqrt();
        let coeffs = edges
            .iter()
            .zip(signs.iter())
            .map(|(&e, &s)| Ok((record.mode_of_edge(e)?, f64::from(s) * norm)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs })
    }
}

/// Exact means and covariance of a set of arc observables under `state`.
pub fn measurement_covariance(
    state: &GaussianState,
    arcs: &[ArcObservable],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = state.modes();
    for arc in arcs {
        for &(mode, _) in &arc.coeffs {
            if mode >= n {
                return Err(Error::Index(format!(
                    "arc references mode {mode}, state has {n}"
                )));
            }
        }
    }
    let k = arcs.len();
    let mut means = DVector::zeros(k);
    for (j, arc) in arcs.iter().enumerate() {
        means[j] = arc
            .coeffs
            .iter()
            .map(|&(m, c)| c * state.mean()[state.index(Quadrature::P, m)])
            .sum();
    }
    let mut cov = DMatrix::zeros(k, k);
    for (j, aj) in arcs.iter().enumerate() {
        for (l, al) in arcs.iter().enumerate().skip(j) {
            let mut acc = 0.0;
            for &(mj, cj) in &aj.coeffs {
                let pj = state.index(Quadrature::P, mj);
                for &(ml, cl) in &al.coeffs {
                    let pl = state.index(Quadrature::P, ml);
                    acc += cj * cl * state.cov()[(pj, pl)];
                }
            }
            cov[(j, l)] = acc;
            cov[(l, j)] = acc;
        }
    }
    Ok((means, cov))
}

/// Apply the broadcast displacement: shift the mean of p_e by
/// sqrt(p2_len) * r * f(e) on every edge the dual loop crosses.
/// Covariance is untouched.
pub fn string_displacement(
    state: &GaussianState,
    crossed: &[(usize, i8)],
    p2_len: usize,
    r: f64,
) -> Result<GaussianState> {
    let mut out = state.clone();
    let amp = (p2_len as f64).sqrt() * r;
    for &(mode, sign) in crossed {
        out.check_mode(mode)?;
        out.displace(Quadrature::P, mode, f64::from(sign) * amp);
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Nullifiers
// ---------------------------------------------------------------------

/// Coefficients of a (generally non-Hermitian) linear form
/// N = (u + i v) . x over the 2N quadratures.
#[derive(Debug, Clone)]
pub struct LinearForm {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl LinearForm {
    fn zeros(state_modes: usize) -> Self {
        Self {
            u: DVector::zeros(2 * state_modes),
            v: DVector::zeros(2 * state_modes),
        }
    }

    /// <N> as (re, im).
    pub fn expectation(&self, state: &GaussianState) -> (f64, f64) {
        (self.u.dot(state.mean()), self.v.dot(state.mean()))
    }

    /// Normal-ordered excitation <dN^dag dN> = u'Su + v'Sv - u'Omega v.
    /// Zero exactly when the state is annihilated by N - <N>.
    pub fn excitation(&self, state: &GaussianState) -> f64 {
        let n = state.modes();
        let su = state.cov() * &self.u;
        let sv = state.cov() * &self.v;
        let mut omega_v = DVector::zeros(2 * n);
        for m in 0..n {
            omega_v[m] = self.v[n + m];
            omega_v[n + m] = -self.v[m];
        }
        self.u.dot(&su) + self.v.dot(&sv) - self.u.dot(&omega_v)
    }
}

/// Exact vertex nullifier of the measurement-prepared toroidal code state:
/// (1/sqrt 8) [ sum_star (st q_e + i/st p_e) + s^2/st sum_diamond q_e ]
/// with st = sqrt(5 s^2 + s^-2) and the diamond the 12-edge loop of
/// next-nearest edges. Overlapping positions on small tori accumulate.
pub fn vertex_nullifier(
    spec: &LatticeSpec,
    record: &CodePreparationRecord,
    row: usize,
    col: usize,
) -> Result<LinearForm> {
    if spec.boundary() != Boundary::Toroidal {
        return Err(Error::Validation(
            "vertex nullifier form is defined for the toroidal construction".into(),
        ));
    }
    let s = record.s;
    let st = (5.0 * s * s + 1.0 / (s * s)).sqrt();
    let norm = 1.0 / 8.0_f64.sqrt();
    let (ch, cw) = spec.cluster_shape();
    let (ci, cj) = (2 * row, 2 * col);
    let n = record.state.modes();
    let mut form = LinearForm::zeros(n);

    let add_q = |form: &mut LinearForm, di: isize, dj: isize, coeff: f64| -> Result<()> {
        let i = ((ci as isize + di).rem_euclid(ch as isize)) as usize;
        let j = ((cj as isize + dj).rem_euclid(cw as isize)) as usize;
        let node = spec.cluster_node(i, j);
        let mode = mode_of_cluster_node(spec, record, node)?;
        form.u[record.state.index(Quadrature::Q, mode)] += coeff;
        Ok(())
    };
    let star = [(0isize, 1isize), (0, -1), (1, 0), (-1, 0)];
    for (di, dj) in star {
        add_q(&mut form, di, dj, st * norm)?;
    }
    let diamond = [
        (0isize, 3isize), (0, -3), (3, 0), (-3, 0),
        (1, 2), (1, -2), (-1, 2), (-1, -2),
        (2, 1), (2, -1), (-2, 1), (-2, -1),
    ];
    for (di, dj) in diamond {
        add_q(&mut form, di, dj, s * s / st * norm)?;
    }
    for (di, dj) in star {
        let i = ((ci as isize + di).rem_euclid(ch as isize)) as usize;
        let j = ((cj as isize + dj).rem_euclid(cw as isize)) as usize;
        let node = spec.cluster_node(i, j);
        let mode = mode_of_cluster_node(spec, record, node)?;
        form.v[record.state.index(Quadrature::P, mode)] += norm / st;
    }
    Ok(form)
}

/// Face nullifier (1/sqrt 8) sum o(e,f) (s p_e - i/s q_e).
pub fn face_nullifier(
    spec: &LatticeSpec,
    record: &CodePreparationRecord,
    face: usize,
) -> Result<LinearForm> {
    let s = record.s;
    let norm = 1.0 / 8.0_f64.sqrt();
    let n = record.state.modes();
    let mut form = LinearForm::zeros(n);
    for (edge, sign) in spec.face_boundary(face)? {
        let mode = record.mode_of_edge(edge)?;
        form.u[record.state.index(Quadrature::P, mode)] += f64::from(sign) * s * norm;
        form.v[record.state.index(Quadrature::Q, mode)] -= f64::from(sign) / s * norm;
    }
    Ok(form)
}

/// String-mode annihilation operator along a primal path:
/// sum o(e) (s p_e - i/s q_e) / sqrt(2 |P|).
pub fn string_mode(record: &CodePreparationRecord, path: &OrientedPath) -> Result<LinearForm> {
    let s = record.s;
    let len = path.edges.len() as f64;
    let norm = 1.0 / (2.0 * len).sqrt();
    let n = record.state.modes();
    let mut form = LinearForm::zeros(n);
    for (&edge, &sign) in path.edges.iter().zip(path.signs.iter()) {
        let mode = record.mode_of_edge(edge)?;
        form.u[record.state.index(Quadrature::P, mode)] += f64::from(sign) * s * norm;
        form.v[record.state.index(Quadrature::Q, mode)] -= f64::from(sign) / s * norm;
    }
    Ok(form)
}

fn mode_of_cluster_node(
    spec: &LatticeSpec,
    record: &CodePreparationRecord,
    node: usize,
) -> Result<usize> {
    match spec.cluster_node_kind(node)? {
        NodeKind::HEdge(r, c) => record.mode_of_edge(spec.h_edge(r, c)),
        NodeKind::VEdge(r, c) => record.mode_of_edge(spec.v_edge(r, c)),
        other => Err(Error::Pattern(format!(
            "cluster node {node} is {other:?}, expected an edge mode"
        ))),
    }
}
