//! Error-resilience planning: percolation-based wedge sizing with a Monte
//! Carlo crossing validator, and the moment-ODE simulation of the
//! monitored-ancilla error-suppression regime.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::lattice::{reroute_path, EdgeKind, LatticeSpec, Reroute, Wedge};

/// Protocol failure probability from the percolation argument:
/// p_fail = exp(-(w/2) |p_err - 1/2|^(4/3)), valid below the bond
/// percolation threshold p_err < 1/2.
pub fn p_fail(w: usize, p_err: f64) -> Result<f64> {
    check_p_err(p_err)?;
    Ok((-(w as f64) / 2.0 * (p_err - 0.5).abs().powf(4.0 / 3.0)).exp())
}

/// Smallest wedge width with p_fail at or below the target:
/// ceil(2 ln(1/target) / |p_err - 1/2|^(4/3)).
pub fn min_width(p_fail_target: f64, p_err: f64) -> Result<usize> {
    check_p_err(p_err)?;
    if !(p_fail_target > 0.0 && p_fail_target < 1.0) {
        return Err(Error::Domain(format!(
            "target failure probability must be in (0, 1), got {p_fail_target}"
        )));
    }
    let w = 2.0 * (1.0 / p_fail_target).ln() / (p_err - 0.5).abs().powf(4.0 / 3.0);
    Ok((w.ceil() as usize).max(1))
}

fn check_p_err(p_err: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p_err) {
        return Err(Error::Domain(format!(
            "p_err = {p_err} is at or above the 50% toric-code tolerance"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of the wedge failure probability.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PercolationEstimate {
    pub failure_probability: f64,
    pub std_error: f64,
    pub trials: usize,
    pub width: usize,
    pub p_err: f64,
}

/// Tag each code mode in the wedge as lost independently with probability
/// `p_err` and count the trials in which no crossing arc with the agreed
/// endpoints survives. Trials use independent RNG streams.
pub fn percolation_mc(
    spec: &LatticeSpec,
    w: usize,
    p_err: f64,
    trials: usize,
    seed: u64,
) -> Result<PercolationEstimate> {
    if trials < 1000 {
        return Err(Error::Validation(format!(
            "need at least 1000 trials, got {trials}"
        )));
    }
    if !(0.0..=1.0).contains(&p_err) {
        return Err(Error::Domain(format!("p_err = {p_err} outside [0, 1]")));
    }
    if w > spec.cols() {
        return Err(Error::Validation(format!(
            "wedge width {w} exceeds lattice columns {}",
            spec.cols()
        )));
    }
    let wedge = Wedge { start_col: 0, width: w };
    // Code modes inside the wedge: horizontal edges in columns 0..w and
    // vertical edges in vertex columns 0..=w.
    let mut wedge_edges = Vec::new();
    for e in 0..spec.num_edges() {
        let (kind, _, col) = spec.edge_info(e)?;
        let inside = match kind {
            EdgeKind::Horizontal => col < w,
            EdgeKind::Vertical => col <= w,
        };
        if inside {
            wedge_edges.push(e);
        }
    }
    let mut failures = 0usize;
    for t in 0..trials {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let lost: std::collections::BTreeSet<usize> = wedge_edges
            .iter()
            .copied()
            .filter(|_| rng.gen::<f64>() < p_err)
            .collect();
        if matches!(reroute_path(spec, &lost, &wedge)?, Reroute::Percolated) {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    Ok(PercolationEstimate {
        failure_probability: rate,
        std_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
        trials,
        width: w,
        p_err,
    })
}

/// Toroidal lattice sized for a width-`w` percolation study: the wedge and
/// its circumference are comparable, with room to spare in columns.
pub fn percolation_lattice(w: usize) -> Result<LatticeSpec> {
    let rows = w.max(2);
    LatticeSpec::build(rows, 2 * w.max(2), crate::lattice::Boundary::Toroidal)
}

// ---------------------------------------------------------------------
// Monitored-decay (Zeno) regime
// ---------------------------------------------------------------------

/// Parameters of the minimal vertex cell: 4 code modes coupled to one
/// decaying ancilla, with local diffusion errors on the code modes.
/// Suppression works in the regime g << delta << g^2/gamma_err.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZenoConfig {
    /// Code-ancilla coupling rate.
    pub g: f64,
    /// Ancilla decay rate (the trace-preserving map decays at kappa = 2 delta).
    pub delta: f64,
    /// Local error rate: isotropic quadrature diffusion on code modes.
    pub gamma_err: f64,
    /// Integration horizon.
    pub horizon: f64,
    /// Number of uniformly spaced output samples.
    pub samples: usize,
}

impl ZenoConfig {
    pub fn new(g: f64, delta: f64, gamma_err: f64, horizon: f64) -> Result<Self> {
        if !(g > 0.0) || !(delta > 0.0) || !(horizon > 0.0) {
            return Err(Error::Validation(
                "g, delta, and horizon must be positive".into(),
            ));
        }
        if gamma_err < 0.0 {
            return Err(Error::Validation("gamma_err must be >= 0".into()));
        }
        Ok(Self { g, delta, gamma_err, horizon, samples: 200 })
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples.max(2);
        self
    }
}

/// Trajectory of the vertex-nullifier excitation and its steady state.
#[derive(Debug, Clone, Serialize)]
pub struct ZenoTrajectory {
    pub times: Vec<f64>,
    pub excitation: Vec<f64>,
    /// Steady-state excitation from the Lyapunov equation of the coupled
    /// collective-mode/ancilla block.
    pub steady_state: f64,
    /// Minimum uncertainty eigenvalue over the sampled covariances.
    pub min_uncertainty_eig: f64,
}

const CELL_MODES: usize = 5; // 4 code modes + ancilla
const ANCILLA: usize = 4;

/// Drift matrix A and diffusion D for the 10 cell quadratures (qq..pp).
fn cell_dynamics(config: &ZenoConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = 2 * CELL_MODES;
    let g = config.g;
    let kappa = 2.0 * config.delta;
    // H = (g/2) sum_e (q_c q_e + p_c p_e)
    let mut ham = DMatrix::<f64>::zeros(d, d);
    for e in 0..4 {
        ham[(ANCILLA, e)] += g / 2.0;
        ham[(e, ANCILLA)] += g / 2.0;
        ham[(CELL_MODES + ANCILLA, CELL_MODES + e)] += g / 2.0;
        ham[(CELL_MODES + e, CELL_MODES + ANCILLA)] += g / 2.0;
    }
    // A = Omega H - (kappa/2) on ancilla quadratures.
    let mut a = DMatrix::zeros(d, d);
    for col in 0..d {
        for m in 0..CELL_MODES {
            a[(m, col)] += ham[(CELL_MODES + m, col)];
            a[(CELL_MODES + m, col)] -= ham[(m, col)];
        }
    }
    a[(ANCILLA, ANCILLA)] -= kappa / 2.0;
    a[(CELL_MODES + ANCILLA, CELL_MODES + ANCILLA)] -= kappa / 2.0;
    let mut diff = DMatrix::zeros(d, d);
    for e in 0..4 {
        diff[(e, e)] = config.gamma_err;
        diff[(CELL_MODES + e, CELL_MODES + e)] = config.gamma_err;
    }
    diff[(ANCILLA, ANCILLA)] = kappa / 2.0;
    diff[(CELL_MODES + ANCILLA, CELL_MODES + ANCILLA)] = kappa / 2.0;
    (a, diff)
}

/// <a^dag a> of the collective vertex mode from a cell covariance:
/// (1/2)(<Q^2> + <P^2> - 1) with Q = sum q_e / 2, P = sum p_e / 2.
fn excitation_of(cov: &DMatrix<f64>) -> f64 {
    let mut qq = 0.0;
    let mut pp = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            qq += cov[(i, j)];
            pp += cov[(CELL_MODES + i, CELL_MODES + j)];
        }
    }
    0.5 * (qq / 4.0 + pp / 4.0 - 1.0)
}

fn rk4_run(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    sigma0: &DMatrix<f64>,
    h: f64,
    steps: usize,
    sample_every: usize,
) -> Vec<(f64, DMatrix<f64>)> {
    let rhs = |s: &DMatrix<f64>| a * s + s * a.transpose() + d;
    let mut sigma = sigma0.clone();
    let mut out = vec![(0.0, sigma.clone())];
    for k in 0..steps {
        let k1 = rhs(&sigma);
        let k2 = rhs(&(&sigma + &k1 * (h / 2.0)));
        let k3 = rhs(&(&sigma + &k2 * (h / 2.0)));
        let k4 = rhs(&(&sigma + &k3 * h));
        sigma += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if (k + 1) % sample_every == 0 || k + 1 == steps {
            out.push(((k + 1) as f64 * h, sigma.clone()));
        }
    }
    out
}

/// Integrate the first/second-moment equations of the vertex cell from the
/// nullifier vacuum and return the excitation trajectory plus the exact
/// steady state. Fails if halving the step changes the endpoint beyond
/// tolerance.
pub fn zeno_simulate(config: &ZenoConfig) -> Result<ZenoTrajectory> {
    let (a, d) = cell_dynamics(config);
    let sigma0 = DMatrix::identity(2 * CELL_MODES, 2 * CELL_MODES) * 0.5;
    let rate = config.g.max(config.delta).max(config.gamma_err);
    let h_max = 1e-2 / rate;
    let steps = ((config.horizon / h_max).ceil() as usize).max(config.samples);
    let h = config.horizon / steps as f64;
    let sample_every = (steps / config.samples).max(1);

    let coarse = rk4_run(&a, &d, &sigma0, h, steps, sample_every);
    let fine = rk4_run(&a, &d, &sigma0, h / 2.0, 2 * steps, 2 * steps);
    let end_coarse = excitation_of(&coarse.last().unwrap().1);
    let end_fine = excitation_of(&fine.last().unwrap().1);
    let tol = 1e-8_f64.max(1e-6 * end_fine.abs());
    if (end_coarse - end_fine).abs() > tol {
        return Err(Error::StepSize(format!(
            "half-step check failed: {end_coarse} vs {end_fine} at h = {h:.3e} \
             (g = {}, delta = {}, gamma_err = {})",
            config.g, config.delta, config.gamma_err
        )));
    }

    let mut min_eig = f64::INFINITY;
    let mut times = Vec::with_capacity(coarse.len());
    let mut excitation = Vec::with_capacity(coarse.len());
    for (t, cov) in &coarse {
        times.push(*t);
        excitation.push(excitation_of(cov));
        let state = GaussianState::from_parts(DVector::zeros(2 * CELL_MODES), cov.clone())?;
        min_eig = min_eig.min(state.min_uncertainty_eigenvalue());
    }

    Ok(ZenoTrajectory {
        times,
        excitation,
        steady_state: steady_excitation(config)?,
        min_uncertainty_eig: min_eig,
    })
}

/// Steady-state excitation of the coupled block (Q, q_c, P, p_c):
/// solves A S + S A^T + D = 0 directly.
pub fn steady_excitation(config: &ZenoConfig) -> Result<f64> {
    let g = config.g;
    let kappa = 2.0 * config.delta;
    let gamma = config.gamma_err;
    // x = (Q, q_c, P, p_c)
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 0.0, g,
        0.0, -kappa / 2.0, g, 0.0,
        0.0, -g, 0.0, 0.0,
        -g, 0.0, 0.0, -kappa / 2.0,
    ]);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![gamma, kappa / 2.0, gamma, kappa / 2.0]));
    let sigma = solve_lyapunov(&a, &d)?;
    Ok(0.5 * (sigma[(0, 0)] + sigma[(2, 2)] - 1.0))
}

/// Solve A S + S A^T = -D by vectorization.
fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = j * n + i;
            for k in 0..n {
                m[(row, j * n + k)] += a[(i, k)];
                m[(row, k * n + i)] += a[(j, k)];
            }
        }
    }
    let rhs = DVector::from_fn(n * n, |idx, _| -d[(idx % n, idx / n)]);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalDegeneracy("singular Lyapunov system".into()))?;
    Ok(DMatrix::from_fn(n, n, |i, j| sol[j * n + i]))
}
