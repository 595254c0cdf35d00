//! End-to-end broadcast rounds on either computation path, message
//! reconstruction, and the discrete parity protocol as exact classical
//! statistics.
//!
//! All randomness is counter-based: every public entry point takes an
//! explicit seed and batch items use independent RNG streams, so runs are
//! reproducible and trivially parallel.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::closed_form::{CovarianceModel, ModelBoundary};
use crate::error::{Error, Result};
use crate::gaussian::{
    build_canonical_cluster, cluster_to_surface_code, string_displacement, ArcObservable,
    CodePreparationRecord, Quadrature, ReductionOutcomes, ENGINE_MODE_CAP,
};
use crate::lattice::{partition_wedges, Boundary, LatticeSpec};

/// Code rows used by the engine path; the broadcast statistics do not
/// depend on the short direction's extent.
const ENGINE_ROWS: usize = 2;

/// Configuration for broadcast rounds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProtocolConfig {
    pub model: CovarianceModel,
    /// Message standard deviation.
    pub tau: f64,
    /// Run the full Gaussian engine instead of the closed-form sampler.
    pub engine_path: bool,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(model: CovarianceModel, tau: f64, engine_path: bool, seed: u64) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
        }
        Ok(Self { model, tau, engine_path, seed })
    }
}

/// One broadcast round: sender, message, announcements, reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct BroadcastRun {
    /// 1-based sender index.
    pub sender: usize,
    pub message: f64,
    pub announcements: Vec<f64>,
    pub reconstructed: f64,
    /// Preparation-shift correction subtracted from the weighted sum
    /// (zero on the closed-form path).
    pub q2_correction: f64,
}

/// Weighted-sum reconstruction: with equal arc widths the estimator is
/// sum(m_j) / sqrt(n), minus the preparation correction.
pub fn reconstruct(announcements: &[f64], q2_correction: f64) -> f64 {
    let n = announcements.len() as f64;
    announcements.iter().sum::<f64>() / n.sqrt() - q2_correction
}

/// Run a single broadcast round with an explicit message value.
pub fn run_round(config: &ProtocolConfig, sender: usize, message: f64) -> Result<BroadcastRun> {
    round_with_stream(config, sender, message, 0)
}

/// Run a batch of rounds on independent RNG streams. When `message` is
/// `None`, each round draws its own message from N(0, tau^2).
pub fn run_batch(
    config: &ProtocolConfig,
    sender: usize,
    message: Option<f64>,
    rounds: usize,
) -> Result<Vec<BroadcastRun>> {
    (0..rounds)
        .map(|i| {
            let mut rng = seeded_rng(config.seed, i as u64);
            let r = message.unwrap_or_else(|| config.tau * rng.sample::<f64, _>(StandardNormal));
            round_inner(config, sender, r, rng)
        })
        .collect()
}

/// Counter-based RNG for a (seed, stream) pair; distinct streams are
/// independent, which is what makes batches reproducible and parallel.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn round_with_stream(
    config: &ProtocolConfig,
    sender: usize,
    message: f64,
    stream: u64,
) -> Result<BroadcastRun> {
    round_inner(config, sender, message, seeded_rng(config.seed, stream))
}

fn round_inner(
    config: &ProtocolConfig,
    sender: usize,
    message: f64,
    mut rng: ChaCha12Rng,
) -> Result<BroadcastRun> {
    let n = config.model.n;
    if sender == 0 || sender > n {
        return Err(Error::Index(format!("sender {sender} out of 1..={n}")));
    }
    if config.engine_path {
        engine_round(config, sender, message, &mut rng)
    } else {
        closed_form_round(config, sender, message, &mut rng)
    }
}

fn closed_form_round(
    config: &ProtocolConfig,
    sender: usize,
    message: f64,
    rng: &mut ChaCha12Rng,
) -> Result<BroadcastRun> {
    let model = &config.model;
    let n = model.n;
    let chol = model.sigma_bar().cholesky().ok_or_else(|| {
        Error::NumericalDegeneracy("pre-broadcast covariance not positive definite".into())
    })?;
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut m = chol.l() * z;
    m[sender - 1] += (n as f64).sqrt() * message;
    let announcements: Vec<f64> = m.iter().cloned().collect();
    let reconstructed = reconstruct(&announcements, 0.0);
    Ok(BroadcastRun {
        sender,
        message,
        announcements,
        reconstructed,
        q2_correction: 0.0,
    })
}

fn engine_round(
    config: &ProtocolConfig,
    sender: usize,
    message: f64,
    rng: &mut ChaCha12Rng,
) -> Result<BroadcastRun> {
    let model = &config.model;
    if model.boundary != ModelBoundary::Toroidal {
        return Err(Error::Validation(
            "the engine path runs on toroidal models; open-boundary moments are \
             available through the gaussian module directly"
                .into(),
        ));
    }
    let (n, w) = (model.n, model.w);
    let nw = n * w;
    let cluster_nodes = 4 * ENGINE_ROWS * nw;
    if cluster_nodes > ENGINE_MODE_CAP {
        return Err(Error::EngineCapacity { modes: cluster_nodes, cap: ENGINE_MODE_CAP });
    }
    let spec = LatticeSpec::build(ENGINE_ROWS, nw, Boundary::Toroidal)?;
    let cluster = build_canonical_cluster(&spec, model.s)?;
    let record = cluster_to_surface_code(&cluster, &spec, model.s, ReductionOutcomes::Sample(rng))?;
    let partition = partition_wedges(&spec, n, w)?;

    // Broadcast displacement along the dual loop through the sender's arc.
    let arc = &partition.arcs[sender - 1];
    let mid_edge = arc.edges[w / 2];
    let (_, _, col) = spec.edge_info(mid_edge)?;
    let dual = spec.dual_loop(col)?;
    let p2 = spec.primal_loop(spec.p2_row())?;
    // Sign convention at the intersection edge: o(e_A) f(e_A) must be +1;
    // otherwise the message acquires that sign.
    let shared_pos = dual
        .edges
        .iter()
        .position(|e| p2.edges.contains(e))
        .ok_or_else(|| Error::Pattern("dual loop misses the broadcast loop".into()))?;
    let shared_edge = dual.edges[shared_pos];
    let o = p2.signs[p2.edges.iter().position(|&e| e == shared_edge).unwrap()];
    let f = dual.signs[shared_pos];
    let oriented_message = f64::from(o * f) * message;
    let crossed: Vec<(usize, i8)> = dual
        .edges
        .iter()
        .zip(dual.signs.iter())
        .map(|(&e, &sg)| Ok((record.mode_of_edge(e)?, sg)))
        .collect::<Result<_>>()?;
    let displaced = string_displacement(&record.state, &crossed, nw, oriented_message)?;

    // Each player homodynes p along their arc; outcomes are sampled jointly
    // by conditioning mode by mode (all arc quadratures commute).
    let mut targets: Vec<(usize, usize, i8)> = Vec::with_capacity(nw); // (mode, player, sign)
    for (j, arc) in partition.arcs.iter().enumerate() {
        for (&e, &sg) in arc.edges.iter().zip(arc.signs.iter()) {
            targets.push((record.mode_of_edge(e)?, j, sg));
        }
    }
    targets.sort_by(|a, b| b.0.cmp(&a.0));
    let mut state = displaced;
    let mut sums = vec![0.0; n];
    for (mode, player, sign) in targets {
        let (outcome, next) = state.homodyne_measure(mode, Quadrature::P, None, rng)?;
        sums[player] += f64::from(sign) * outcome;
        state = next;
    }
    let wf = (w as f64).sqrt();
    let announcements: Vec<f64> = sums.iter().map(|s| s / wf).collect();
    let q2_correction = record.q2_correction();
    let reconstructed = reconstruct(&announcements, q2_correction);
    Ok(BroadcastRun {
        sender,
        message,
        announcements,
        reconstructed,
        q2_correction,
    })
}

/// Exact engine observables for a freshly prepared (zero-outcome) code
/// state: per-arc means and covariance. This is the oracle the closed-form
/// matrices are tested against.
pub fn engine_arc_moments(
    n: usize,
    w: usize,
    s: f64,
    rows: usize,
) -> Result<(DVector<f64>, nalgebra::DMatrix<f64>, CodePreparationRecord)> {
    let spec = LatticeSpec::build(rows, n * w, Boundary::Toroidal)?;
    let cluster = build_canonical_cluster(&spec, s)?;
    let record = cluster_to_surface_code(&cluster, &spec, s, ReductionOutcomes::ForceZero)?;
    let partition = partition_wedges(&spec, n, w)?;
    let arcs: Vec<ArcObservable> = partition
        .arcs
        .iter()
        .map(|a| ArcObservable::from_arc(&record, &a.edges, &a.signs, w))
        .collect::<Result<_>>()?;
    let (means, cov) = crate::gaussian::measurement_covariance(&record.state, &arcs)?;
    Ok((means, cov, record))
}

/// One round of the discrete parity protocol over Z_d: announcements are
/// uniform conditioned on their sum equaling the sum of the players'
/// messages mod d. Returns (announcements, total).
pub fn dv_round(n: usize, d: u64, messages: &[u64], seed: u64) -> Result<(Vec<u64>, u64)> {
    if d < 2 {
        return Err(Error::Validation(format!("alphabet size d must be >= 2, got {d}")));
    }
    if n < 2 {
        return Err(Error::Validation(format!("need n >= 2 players, got {n}")));
    }
    if messages.len() != n {
        return Err(Error::Validation(format!(
            "got {} messages for {n} players",
            messages.len()
        )));
    }
    if let Some(bad) = messages.iter().find(|&&r| r >= d) {
        return Err(Error::Validation(format!("message {bad} outside Z_{d}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut announcements: Vec<u64> = (0..n - 1).map(|_| rng.gen_range(0..d)).collect();
    let msg_sum: u64 = messages.iter().sum::<u64>() % d;
    let partial: u64 = announcements.iter().sum::<u64>() % d;
    announcements.push((msg_sum + d - partial) % d);
    let total = announcements.iter().sum::<u64>() % d;
    Ok((announcements, total))
}
