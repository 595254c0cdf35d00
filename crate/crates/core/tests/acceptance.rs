//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (run with `--nocapture` to see
//! them). Tolerances are fixed here, not tuned at runtime.

use std::time::Instant;

use cvtoric::anonymity::{
    self, alpha_for_capacity, capacity_bits, cheb, empirical_attack, epsilon, figure2_grid,
    identification_probability, mutual_info_bound_bits, mutual_info_bound_bits_det,
    semi_anonymous_max_n, tau_for_alpha,
};
use cvtoric::calibration::{convert, Construction};
use cvtoric::closed_form::CovarianceModel;
use cvtoric::gaussian::{
    build_canonical_cluster, cluster_to_surface_code, measurement_covariance, ArcObservable,
    ReductionOutcomes,
};
use cvtoric::lattice::{partition_wedges, Boundary, LatticeSpec};
use cvtoric::protocol::{dv_round, engine_arc_moments, run_batch, ProtocolConfig};
use cvtoric::resilience::{min_width, p_fail, percolation_lattice, percolation_mc, steady_excitation, zeno_simulate, ZenoConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const ENTRY_TOL: f64 = 1e-9;

#[test]
fn criterion_01_engine_matches_closed_form_covariance() {
    let start = Instant::now();
    for (n, w) in [(2usize, 2usize), (2, 3), (4, 2), (3, 4)] {
        for s in [0.8, 1.0, 2.0] {
            let model = CovarianceModel::toroidal(n, w, s).unwrap();
            let reference = model.sigma_bar();
            let (means, cov, _) = engine_arc_moments(n, w, s, 2).unwrap();
            assert!(means.amax() < ENTRY_TOL, "n={n} w={w} s={s}: nonzero means");
            for i in 0..n {
                for j in 0..n {
                    let diff = (cov[(i, j)] - reference[(i, j)]).abs();
                    assert!(
                        diff < ENTRY_TOL,
                        "n={n} w={w} s={s} entry ({i},{j}): engine {} vs closed form {}",
                        cov[(i, j)],
                        reference[(i, j)]
                    );
                }
            }
            let global = cov.iter().sum::<f64>() / n as f64;
            assert!(
                (global - model.global_variance()).abs() < ENTRY_TOL,
                "n={n} w={w} s={s}: global variance {global}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "runtime {elapsed:?} exceeds 1 min");
    println!(
        "criterion 01: PASS - engine covariance matches closed forms to {ENTRY_TOL:.0e} \
         over 12 configurations in {elapsed:?}"
    );
}

#[test]
fn criterion_02_open_boundary_end_wedges() {
    for (n, w, s) in [(2usize, 2usize, 1.0), (2, 2, 1.3), (3, 2, 1.0), (3, 2, 0.8)] {
        let spec = LatticeSpec::build(3, n * w, Boundary::Open).unwrap();
        let cluster = build_canonical_cluster(&spec, s).unwrap();
        let record =
            cluster_to_surface_code(&cluster, &spec, s, ReductionOutcomes::ForceZero).unwrap();
        let partition = partition_wedges(&spec, n, w).unwrap();
        let arcs: Vec<ArcObservable> = partition
            .arcs
            .iter()
            .map(|a| ArcObservable::from_arc(&record, &a.edges, &a.signs, w).unwrap())
            .collect();
        let (_, cov) = measurement_covariance(&record.state, &arcs).unwrap();
        let model = CovarianceModel::open(n, w, s).unwrap();
        let reference = model.sigma_bar();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (cov[(i, j)] - reference[(i, j)]).abs() < ENTRY_TOL,
                    "open n={n} w={w} s={s} entry ({i},{j})"
                );
            }
        }
        // End wedges: 1/(2s^2) + s^2/(2w); global noise unchanged.
        let end = 1.0 / (2.0 * s * s) + s * s / (2.0 * w as f64);
        assert!((cov[(0, 0)] - end).abs() < ENTRY_TOL);
        assert!((cov[(n - 1, n - 1)] - end).abs() < ENTRY_TOL);
        let global = cov.iter().sum::<f64>() / n as f64;
        assert!((global - model.global_variance()).abs() < ENTRY_TOL);
    }
    println!("criterion 02: PASS - open-boundary end-wedge and global variances reproduced");
}

#[test]
fn criterion_03_chebyshev_determinant_identities() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=12usize);
        let x: f64 = rng.gen_range(-4.0..4.0);
        let a: f64 = rng.gen_range(-2.0..2.0);
        let dense_t = dense_toeplitz(n, x).determinant();
        let dense_c = dense_circulant(n, x, 0.0).determinant();
        let dense_p = dense_circulant(n, x, a).determinant();
        for (label, closed, dense) in [
            ("T", cheb::det_toeplitz(n, x), dense_t),
            ("C", cheb::det_circulant(n, x), dense_c),
            ("C'", cheb::det_circulant_perturbed(n, x, a), dense_p),
        ] {
            let rel = (closed - dense).abs() / dense.abs().max(1.0);
            worst = worst.max(rel);
            assert!(rel < 1e-8, "{label} n={n} x={x} a={a}: rel error {rel}");
        }
    }
    println!("criterion 03: PASS - determinant identities, worst relative error {worst:.2e}");
}

#[test]
fn criterion_04_bound_two_path_equality() {
    let mut worst = 0.0f64;
    for n in 3..=30usize {
        for eps in [1e-4, 1e-2, 0.2] {
            for alpha in [0.1, 1.0, 10.0] {
                let a = mutual_info_bound_bits(n, eps, alpha).unwrap();
                let b = mutual_info_bound_bits_det(n, eps, alpha).unwrap();
                let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                assert!(
                    rel < 1e-9,
                    "n={n} eps={eps} alpha={alpha}: cheb {a} vs det {b} (rel {rel:.2e})"
                );
            }
        }
    }
    println!("criterion 04: PASS - bound paths agree, worst relative deviation {worst:.2e}");
}

#[test]
fn criterion_05_paper_calibration_numbers() {
    let s5 = convert(5.0, Construction::SurfaceMacronode).unwrap();
    assert!(
        (s5.s_effective - 0.5965).abs() < 1e-4,
        "surface 5 dB: s = {}",
        s5.s_effective
    );
    assert!(
        (s5.effective_db - (-4.488)).abs() < 1e-3,
        "surface 5 dB: {} dB",
        s5.effective_db
    );

    let s10 = convert(10.0, Construction::SurfaceMacronode).unwrap();
    assert!(
        (s10.s_effective - 1.112).abs() < 1e-3,
        "surface 10 dB: s = {}",
        s10.s_effective
    );

    let l5 = convert(5.0, Construction::LinearMacronode).unwrap();
    assert!(
        (l5.s_effective - 1.006).abs() < 1e-3,
        "linear 5 dB: s = {}",
        l5.s_effective
    );
    // Published value +0.05297 dB. The full-precision conversion chain
    // gives 20 log10(sinh(2 xi)/sqrt 2) = +0.05395 dB; the published digits
    // are only reproduced when xi is first rounded to 4 decimals, which the
    // library does not do. This assertion is kept at the published
    // tolerance and fails by ~0.0005 dB.
    assert!(
        (l5.effective_db - 0.05297).abs() < 5e-4,
        "linear 5 dB effective level: computed {} dB vs published 0.05297 +/- 0.0005 \
         (exact-parameter conversion differs from the published rounding)",
        l5.effective_db
    );
    println!("criterion 05: PASS - calibration numbers reproduced");
}

#[test]
fn criterion_06_semi_anonymity_tables() {
    // Minimal linear resource: s = 1.006, w = 1.
    let eps = epsilon(1.006, 1, 1.0);
    let expected = [(0.25, 17usize), (0.5, 8), (0.75, 5), (1.0, 4)];
    for (c_bits, max_n) in expected {
        let a = alpha_for_capacity(c_bits);
        let got = semi_anonymous_max_n(eps, a).unwrap();
        assert_eq!(got, Some(max_n), "linear table at C = {c_bits}");
    }
    // Surface resource: s = 1.112, w = 6.
    let eps = epsilon(1.112, 6, 1.0);
    for (c_bits, max_n) in [(0.25, 11usize), (0.5, 5)] {
        let a = alpha_for_capacity(c_bits);
        let got = semi_anonymous_max_n(eps, a).unwrap();
        assert_eq!(got, Some(max_n), "surface table at C = {c_bits}");
    }
    println!("criterion 06: PASS - semi-anonymity tables match exactly");
}

#[test]
fn criterion_07_capacity_points() {
    assert!((capacity_bits(3.0) - 1.0).abs() < 1e-3);
    assert!((capacity_bits(1.0) - 0.5).abs() < 1e-3);
    assert!((capacity_bits(0.414) - 0.25).abs() < 1e-3);
    println!("criterion 07: PASS - capacity point checks");
}

#[test]
fn criterion_08_identification_grid_properties() {
    let start = Instant::now();
    let grid = figure2_grid(10.0, 6, 3, 100, 3.0, 0.05).unwrap();
    let cells = (3.0 / 0.05) as usize + 1;
    // Zero capacity identifies no better than guessing, exactly.
    for pt in grid.iter().filter(|p| p.c_bits == 0.0) {
        assert_eq!(pt.p_identify, 1.0 / pt.n as f64, "n = {}", pt.n);
    }
    // Monotone in capacity at fixed n.
    for chunk in grid.chunks(cells) {
        for k in 1..chunk.len() {
            assert!(
                chunk[k].p_identify + 1e-12 >= chunk[k - 1].p_identify,
                "monotonicity at n = {} C = {}",
                chunk[k].n,
                chunk[k].c_bits
            );
        }
    }
    // Contour levels 0.01, 0.02, 0.03 are crossed inside the grid.
    for level in [0.01, 0.02, 0.03] {
        let crossed = grid.chunks(cells).any(|chunk| {
            chunk
                .windows(2)
                .any(|w| w[0].p_identify <= level && level <= w[1].p_identify)
        }) || grid.iter().any(|p| (p.p_identify - level).abs() < 1e-12);
        assert!(crossed, "contour level {level} not attained");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "runtime {elapsed:?} exceeds 1 min");
    println!(
        "criterion 08: PASS - grid exact at C=0, monotone in C, contours 0.01/0.02/0.03 \
         attained ({} cells in {elapsed:?})",
        grid.len()
    );
}

#[test]
fn criterion_09_attacker_consistency() {
    let start = Instant::now();
    let (n, s, w) = (10usize, 10.0, 6usize);
    let alpha = alpha_for_capacity(1.0);
    let tau = tau_for_alpha(s, alpha, 1.0);
    let model = CovarianceModel::toroidal(n, w, s).unwrap();
    let eps = epsilon(s, w, 1.0);
    let bound = mutual_info_bound_bits(n, eps, alpha).unwrap();
    let p_identify = identification_probability(n, eps, alpha).unwrap();
    let summary = empirical_attack(&model, tau, 100_000, 90210).unwrap();
    assert!(
        summary.empirical_i_bits <= bound + 3.0 * summary.i_std_error,
        "plug-in I {} vs bound {} + 3 sigma {}",
        summary.empirical_i_bits,
        bound,
        3.0 * summary.i_std_error
    );
    // The identification probability tracked by the analytics is the
    // Shannon-entropy quantity 2^(I - log2 n). Optimal guessing success is
    // governed by min-entropy, which sits below Shannon entropy, so the MAP
    // rate can exceed this threshold; at these parameters it does, by about
    // 0.011 (confirmed against an independent implementation at 10^6
    // trials). The assertion is kept at the stated threshold and fails.
    assert!(
        summary.map_success_rate <= p_identify + 3.0 * summary.success_std_error,
        "MAP success {} vs p_identify {} + 3 sigma {} (Shannon-entropy threshold does not \
         cap min-entropy guessing)",
        summary.map_success_rate,
        p_identify,
        3.0 * summary.success_std_error
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "runtime {elapsed:?} exceeds 5 min");
    println!(
        "criterion 09: PASS - MAP success {:.5} <= {:.5}, plug-in I {:.3e} <= bound {:.3e} \
         ({elapsed:?})",
        summary.map_success_rate, p_identify, summary.empirical_i_bits, bound
    );
}

#[test]
fn criterion_10_percolation_planner() {
    let start = Instant::now();
    assert_eq!(min_width(1.0 / std::f64::consts::E, 0.06).unwrap(), 6);

    // Failure estimates monotone in p_err at fixed w = 6.
    let spec = percolation_lattice(6).unwrap();
    let trials = 4000;
    let sweeps: Vec<_> = [0.05, 0.15, 0.3, 0.45]
        .iter()
        .map(|&p| percolation_mc(&spec, 6, p, trials, 1234).unwrap())
        .collect();
    for pair in sweeps.windows(2) {
        let slack = 3.0 * (pair[0].std_error.powi(2) + pair[1].std_error.powi(2)).sqrt();
        assert!(
            pair[1].failure_probability + slack >= pair[0].failure_probability,
            "p_err {} -> {}: {} then {}",
            pair[0].p_err,
            pair[1].p_err,
            pair[0].failure_probability,
            pair[1].failure_probability
        );
    }
    // Failure decreases as w grows from 4 to 12 at p_err = 0.45.
    let mut widths = Vec::new();
    for w in [4usize, 8, 12] {
        let spec = percolation_lattice(w).unwrap();
        widths.push(percolation_mc(&spec, w, 0.45, trials, 77).unwrap());
    }
    for pair in widths.windows(2) {
        let slack = 3.0 * (pair[0].std_error.powi(2) + pair[1].std_error.powi(2)).sqrt();
        assert!(
            pair[1].failure_probability <= pair[0].failure_probability + slack,
            "w {} -> {}: {} then {}",
            pair[0].width,
            pair[1].width,
            pair[0].failure_probability,
            pair[1].failure_probability
        );
    }
    // Formula/MC ordering agreement where the formula separates clearly.
    for (a, b) in [(0usize, 2usize), (0, 3), (1, 3)] {
        let fa = p_fail(6, sweeps[a].p_err).unwrap();
        let fb = p_fail(6, sweeps[b].p_err).unwrap();
        if fb / fa >= 2.0 {
            let slack =
                3.0 * (sweeps[a].std_error.powi(2) + sweeps[b].std_error.powi(2)).sqrt();
            assert!(
                sweeps[b].failure_probability + slack >= sweeps[a].failure_probability,
                "formula ordering violated between p_err {} and {}",
                sweeps[a].p_err,
                sweeps[b].p_err
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "runtime {elapsed:?} exceeds 5 min");
    println!(
        "criterion 10: PASS - min_width(1/e, 0.06) = 6; monotone sweeps \
         (p_err: {:?}; w: {:?}) in {elapsed:?}",
        sweeps
            .iter()
            .map(|e| (e.p_err, e.failure_probability))
            .collect::<Vec<_>>(),
        widths
            .iter()
            .map(|e| (e.width, e.failure_probability))
            .collect::<Vec<_>>()
    );
}

#[test]
fn criterion_11_zeno_regime() {
    // Good regime g << delta << g^2/gamma_err versus a broken one.
    let good = ZenoConfig::new(1.0, 10.0, 0.01, 1.0).unwrap();
    let broken = ZenoConfig::new(1.0, 200.0, 0.01, 1.0).unwrap();
    let sg = steady_excitation(&good).unwrap();
    let sb = steady_excitation(&broken).unwrap();
    assert!(sg < sb, "good {sg} not strictly below broken {sb}");

    // No error drive: excitation stays at zero within integrator tolerance.
    let quiet = ZenoConfig::new(1.0, 10.0, 0.0, 5.0).unwrap().with_samples(20);
    let run = zeno_simulate(&quiet).unwrap();
    let max = run.excitation.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(max < 1e-9, "drift without errors: {max}");
    assert!(run.min_uncertainty_eig > -1e-8);
    println!(
        "criterion 11: PASS - steady excitation good {sg:.4} < broken {sb:.4}; \
         no-error drift {max:.1e}"
    );
}

#[test]
fn criterion_12_protocol_statistics() {
    let start = Instant::now();
    let (n, w, s, r) = (4usize, 6usize, 10.0, 1.0);
    let model = CovarianceModel::toroidal(n, w, s).unwrap();
    let config = ProtocolConfig::new(model, 1.0, false, 271828).unwrap();
    let rounds = 100_000;
    let runs = run_batch(&config, 2, Some(r), rounds).unwrap();
    let mean = runs.iter().map(|x| x.reconstructed).sum::<f64>() / rounds as f64;
    let var = runs
        .iter()
        .map(|x| (x.reconstructed - mean).powi(2))
        .sum::<f64>()
        / (rounds - 1) as f64;
    let expect_var = model.global_variance();
    let se = (expect_var / rounds as f64).sqrt();
    assert!(
        (mean - r).abs() < 3.0 * se,
        "mean {mean} vs {r} (3 SE = {})",
        3.0 * se
    );
    assert!(
        (var - expect_var).abs() < 0.03 * expect_var,
        "variance {var} vs {expect_var}"
    );

    // Any proper 3-subset of the parity announcements is jointly uniform.
    let dv_rounds = 100_000;
    let mut counts = [[0usize; 8]; 4];
    for i in 0..dv_rounds {
        let (ann, total) = dv_round(4, 2, &[1, 0, 0, 0], 555 + i as u64).unwrap();
        assert_eq!(total, 1);
        for (si, subset) in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]].iter().enumerate() {
            let cell = subset
                .iter()
                .fold(0usize, |acc, &j| (acc << 1) | ann[j] as usize);
            counts[si][cell] += 1;
        }
    }
    let chi2 = ChiSquared::new(7.0).unwrap();
    let expected = dv_rounds as f64 / 8.0;
    for (si, c) in counts.iter().enumerate() {
        let stat: f64 = c.iter().map(|&k| (k as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - chi2.cdf(stat);
        assert!(p > 0.01, "subset {si}: chi2 {stat:.2}, p {p:.4}");
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 12: PASS - mean {mean:.5}, variance {var:.6} vs {expect_var}; \
         parity subsets uniform ({elapsed:?})"
    );
}

fn dense_toeplitz(n: usize, x: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            x
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    })
}

fn dense_circulant(n: usize, x: f64, a: f64) -> DMatrix<f64> {
    let mut m = dense_toeplitz(n, x);
    if n >= 3 {
        m[(0, n - 1)] = 1.0;
        m[(n - 1, 0)] = 1.0;
    }
    m[(0, 0)] += a;
    m
}
