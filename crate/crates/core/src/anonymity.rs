//! Information-theoretic analytics: the anonymity parameters, channel
//! capacity, the Chebyshev-determinant bound on identity leakage, the
//! Bayesian attacker oracle, semi-anonymity thresholds, and the
//! identification-probability grid behind the capacity/players contour
//! plot.
//!
//! All quantities are in bits; use [`bits_to_nats`] for natural units.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::closed_form::CovarianceModel;
use crate::error::{Error, Result};

/// Ratio of global noise to the excess local noise: eps = w / (2 s^4 s2^2).
pub fn epsilon(s: f64, w: usize, s2: f64) -> f64 {
    w as f64 / (2.0 * s.powi(4) * s2 * s2)
}

/// Broadcast signal-to-noise ratio: alpha = 2 s^2 s2^2 tau^2.
pub fn alpha(s: f64, tau: f64, s2: f64) -> f64 {
    2.0 * s * s * s2 * s2 * tau * tau
}

/// Message standard deviation realizing a given SNR.
pub fn tau_for_alpha(s: f64, alpha: f64, s2: f64) -> f64 {
    (alpha / (2.0 * s * s * s2 * s2)).sqrt()
}

/// Variance-restricted channel capacity C = (1/2) log2(1 + alpha).
pub fn capacity_bits(alpha: f64) -> f64 {
    0.5 * (1.0 + alpha).log2()
}

/// SNR achieving a given capacity: alpha = 2^(2C) - 1.
pub fn alpha_for_capacity(c_bits: f64) -> f64 {
    (2.0 * c_bits).exp2() - 1.0
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

// ---------------------------------------------------------------------
// Chebyshev polynomials and tridiagonal/circulant determinants
// ---------------------------------------------------------------------

pub mod cheb {
    //! Chebyshev polynomials and the determinants of the symmetric
    //! tridiagonal Toeplitz matrix T_n(x), its circulant counterpart
    //! C_n(x), and the corner-perturbed circulant C_n(x, a).

    /// Chebyshev polynomial of the first kind, T_n(x), all real x.
    pub fn t(n: usize, x: f64) -> f64 {
        let nf = n as f64;
        if x >= 1.0 {
            (nf * x.acosh()).cosh()
        } else if x <= -1.0 {
            let v = (nf * (-x).acosh()).cosh();
            if n % 2 == 0 { v } else { -v }
        } else {
            (nf * x.acos()).cos()
        }
    }

    /// Chebyshev polynomial of the second kind, U_n(x), all real x.
    pub fn u(n: usize, x: f64) -> f64 {
        let k = (n + 1) as f64;
        if x > 1.0 {
            let t = x.acosh();
            (k * t).sinh() / t.sinh()
        } else if x < -1.0 {
            let t = (-x).acosh();
            let v = (k * t).sinh() / t.sinh();
            if n % 2 == 0 { v } else { -v }
        } else if x == 1.0 {
            k
        } else if x == -1.0 {
            if n % 2 == 0 { k } else { -k }
        } else {
            let t = x.acos();
            (k * t).sin() / t.sin()
        }
    }

    /// det T_n(x) = U_n(x/2) for the n x n tridiagonal Toeplitz matrix with
    /// diagonal x and unit off-diagonals. det T_0 = 1 by convention.
    pub fn det_toeplitz(n: usize, x: f64) -> f64 {
        if n == 0 {
            1.0
        } else {
            u(n, x / 2.0)
        }
    }

    /// det C_n(x) for the circulant counterpart:
    /// U_n(x/2) for n in {1, 2}, 2 (-1)^n [T_n(-x/2) - 1] for n >= 3.
    pub fn det_circulant(n: usize, x: f64) -> f64 {
        match n {
            0 => 1.0,
            1 | 2 => u(n, x / 2.0),
            _ => {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * sign * (t(n, -x / 2.0) - 1.0)
            }
        }
    }

    /// det C_n(x, a) with the (1,1) entry perturbed to x + a:
    /// det C_n(x) + a det T_{n-1}(x), the (1 + (a/n) d/dx) det C_n(x) form.
    pub fn det_circulant_perturbed(n: usize, x: f64, a: f64) -> f64 {
        det_circulant(n, x) + a * det_toeplitz(n.saturating_sub(1), x)
    }
}

// ---------------------------------------------------------------------
// Identity-leakage bound
// ---------------------------------------------------------------------

/// ln sinh(x) for x > 0 without overflow.
fn log_sinh(x: f64) -> f64 {
    if x > 33.0 {
        x - std::f64::consts::LN_2 + (-(2.0 * x)).exp().ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// arccosh(1 + e) evaluated without cancellation for small e.
fn acosh_1p(e: f64) -> f64 {
    (e + (e * (2.0 + e)).sqrt()).ln_1p()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn check_bound_args(n: usize, eps: f64, alpha: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!(
            "identity-leakage bound needs n >= 3 (circulant form), got {n}"
        )));
    }
    if eps <= 0.0 {
        return Err(Error::Domain(format!("eps must be > 0, got {eps}")));
    }
    if alpha < 0.0 {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(())
}

/// Upper bound on the identity leakage I(M; A) in bits:
/// (1/2) log2 [ (T_n(1+e+ea) - 1) / (T_n(1+e) - 1 + e a n U_{n-1}(1+e)) ].
///
/// Evaluated through T_n(cosh t) - 1 = 2 sinh^2(n t / 2) in log domain, so
/// it neither cancels at small eps nor overflows at large n.
pub fn mutual_info_bound_bits(n: usize, eps: f64, alpha: f64) -> Result<f64> {
    check_bound_args(n, eps, alpha)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let t1 = acosh_1p(eps * (1.0 + alpha));
    let t0 = acosh_1p(eps);
    let ln_num = std::f64::consts::LN_2 + 2.0 * log_sinh(nf * t1 / 2.0);
    let ln_a = std::f64::consts::LN_2 + 2.0 * log_sinh(nf * t0 / 2.0);
    let ln_b = (eps * alpha * nf).ln() + log_sinh(nf * t0) - log_sinh(t0);
    let ln_den = log_sum_exp(ln_a, ln_b);
    Ok(((ln_num - ln_den) / (2.0 * std::f64::consts::LN_2)).max(0.0))
}

/// Same bound evaluated as the determinant ratio
/// (1/2) log2 [ det(sigma_bar + tau^2 I) / det(sigma_bar + n tau^2 e_11) ]
/// on matrices assembled by [`CovarianceModel`], used for checking the
/// Chebyshev form.
///
/// The ratio is computed as det(I + E) with
/// E = (tau^2 I - n tau^2 e_11) (sigma_bar + n tau^2 e_11)^(-1)
/// and log1p over the eigenvalues of E, so the tiny-leakage regime keeps
/// full relative precision instead of cancelling two large log-dets.
pub fn mutual_info_bound_bits_det(n: usize, eps: f64, alpha: f64) -> Result<f64> {
    check_bound_args(n, eps, alpha)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    // Realize (eps, alpha) with a width-2 toroidal model.
    let w = 2usize;
    let s = (w as f64 / (2.0 * eps)).powf(0.25);
    let tau = tau_for_alpha(s, alpha, 1.0);
    let model = CovarianceModel::toroidal(n, w, s)?;
    let denom = model.sigma_given_sender(tau, 1)?;
    // C = numerator - denominator = tau^2 (I - n e_11).
    let mut c = DMatrix::<f64>::identity(n, n) * (tau * tau);
    c[(0, 0)] -= n as f64 * tau * tau;
    // E = C * denom^(-1), column by column through the LU of denom^T = denom.
    let lu = denom.clone().lu();
    let mut e = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let rhs = DVector::from_fn(n, |i, _| c[(j, i)]);
        let col = lu
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalDegeneracy("singular sender covariance".into()))?;
        for i in 0..n {
            e[(j, i)] = col[i];
        }
    }
    let mut ln_det = 0.0;
    for mu in e.complex_eigenvalues().iter() {
        // |1 + mu|^2 = 1 + (2 Re mu + |mu|^2), accumulated with log1p.
        ln_det += 0.5 * (2.0 * mu.re + mu.re * mu.re + mu.im * mu.im).ln_1p();
    }
    Ok((ln_det / (2.0 * std::f64::consts::LN_2)).max(0.0))
}

/// Probability the sender is identified from the full record,
/// p = 2^(I - log2 n). Values above 1 mean the bound is vacuous.
pub fn identification_probability(n: usize, eps: f64, alpha: f64) -> Result<f64> {
    let i = mutual_info_bound_bits(n, eps, alpha)?;
    Ok(i.exp2() / n as f64)
}

/// Largest n >= 3 that stays semi-anonymous (p < 2/n, i.e. leakage below
/// one bit); `None` when even n = 3 leaks a full bit. The bound is
/// monotone in n, so a forward scan terminates at the first failure.
pub fn semi_anonymous_max_n(eps: f64, alpha: f64) -> Result<Option<usize>> {
    const CAP: usize = 1_000_000;
    let mut last = None;
    for n in 3..=CAP {
        if mutual_info_bound_bits(n, eps, alpha)? < 1.0 {
            last = Some(n);
        } else {
            return Ok(last);
        }
    }
    Ok(last)
}

/// Both sides of the small-eps high-anonymity condition
/// n^2 >> 1 + (n^2 - 1) alpha^2 eps / (6 (1 + alpha)), with the summary
/// ratio alpha*eps/6. Documented validity eps < 0.05.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HighAnonymityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub satisfied: bool,
}

pub fn high_anonymity_condition(n: usize, eps: f64, alpha: f64) -> HighAnonymityCheck {
    let n2 = (n as f64) * (n as f64);
    let rhs = 1.0 + (n2 - 1.0) * alpha * alpha * eps / (6.0 * (1.0 + alpha));
    let ratio = alpha * eps / 6.0;
    // "Much less than" read as an order of magnitude.
    HighAnonymityCheck { lhs: n2, rhs, ratio, satisfied: ratio < 0.1 }
}

/// Full anonymity summary for one configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnonymityReport {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub capacity_bits: f64,
    pub i_bound_bits: f64,
    pub h_sender_given_record_bits: f64,
    pub p_identify: f64,
    pub alpha_epsilon: f64,
    pub high_anonymity: bool,
}

pub fn report(n: usize, s: f64, w: usize, s2: f64, alpha_snr: f64) -> Result<AnonymityReport> {
    let eps = epsilon(s, w, s2);
    let i = mutual_info_bound_bits(n, eps, alpha_snr)?;
    let nf = n as f64;
    Ok(AnonymityReport {
        n,
        epsilon: eps,
        alpha: alpha_snr,
        capacity_bits: capacity_bits(alpha_snr),
        i_bound_bits: i,
        h_sender_given_record_bits: nf.log2() - i,
        p_identify: i.exp2() / nf,
        alpha_epsilon: alpha_snr * eps,
        high_anonymity: high_anonymity_condition(n, eps, alpha_snr).satisfied,
    })
}

// ---------------------------------------------------------------------
// Bayesian attacker
// ---------------------------------------------------------------------

struct SenderLikelihoods {
    chols: Vec<Cholesky<f64, nalgebra::Dyn>>,
    log_dets: Vec<f64>,
}

impl SenderLikelihoods {
    fn new(model: &CovarianceModel, tau: f64) -> Result<Self> {
        let mut chols = Vec::with_capacity(model.n);
        let mut log_dets = Vec::with_capacity(model.n);
        for a in 1..=model.n {
            let sigma = model.sigma_given_sender(tau, a)?;
            let chol = sigma.cholesky().ok_or_else(|| {
                Error::NumericalDegeneracy(format!("sender-{a} covariance not positive definite"))
            })?;
            let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            chols.push(chol);
            log_dets.push(log_det);
        }
        Ok(Self { chols, log_dets })
    }

    /// Log posterior over senders under the flat prior, normalized.
    fn log_posterior(&self, m: &DVector<f64>) -> Vec<f64> {
        let mut logs: Vec<f64> = self
            .chols
            .iter()
            .zip(self.log_dets.iter())
            .map(|(chol, ld)| {
                let sol = chol.solve(m);
                -0.5 * (ld + m.dot(&sol))
            })
            .collect();
        let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z = mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
        for l in &mut logs {
            *l -= z;
        }
        logs
    }
}

/// Posterior over senders given the announcement vector, flat prior,
/// evaluated in log domain. Returned probabilities sum to one.
pub fn map_posterior(m: &[f64], model: &CovarianceModel, tau: f64) -> Result<Vec<f64>> {
    if m.len() != model.n {
        return Err(Error::Validation(format!(
            "record length {} does not match n = {}",
            m.len(),
            model.n
        )));
    }
    let lik = SenderLikelihoods::new(model, tau)?;
    let v = DVector::from_column_slice(m);
    Ok(lik.log_posterior(&v).iter().map(|l| l.exp()).collect())
}

/// Maximum-a-posteriori sender estimate (1-based), lowest index on ties.
pub fn map_attacker(m: &[f64], model: &CovarianceModel, tau: f64) -> Result<usize> {
    let post = map_posterior(m, model, tau)?;
    let mut best = 0;
    for (i, &p) in post.iter().enumerate() {
        if p > post[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// Monte Carlo attack statistics over simulated broadcast records.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AttackSummary {
    pub trials: usize,
    pub map_success_rate: f64,
    pub success_std_error: f64,
    /// Plug-in estimate of the identity leakage: mean of
    /// log2(n * posterior(true sender)). Biased low at finite samples;
    /// used as a consistency oracle against the closed-form bound.
    pub empirical_i_bits: f64,
    pub i_std_error: f64,
}

/// Run `trials` independent broadcast rounds (uniform sender, Gaussian
/// message of standard deviation `tau`) and attack each with the MAP rule.
pub fn empirical_attack(
    model: &CovarianceModel,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<AttackSummary> {
    if trials < 1000 {
        return Err(Error::Validation(format!(
            "need at least 1000 trials for stable statistics, got {trials}"
        )));
    }
    let lik = SenderLikelihoods::new(model, tau)?;
    let sigma_bar = model.sigma_bar();
    let noise_chol = sigma_bar.cholesky().ok_or_else(|| {
        Error::NumericalDegeneracy("pre-broadcast covariance not positive definite".into())
    })?;
    let n = model.n;
    let sqrt_n = (n as f64).sqrt();
    let mut successes = 0usize;
    let mut i_sum = 0.0;
    let mut i_sq_sum = 0.0;
    for t in 0..trials {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let a = rng.gen_range(0..n);
        let r: f64 = tau * rng.sample::<f64, _>(StandardNormal);
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut m = noise_chol.l() * z;
        m[a] += sqrt_n * r;
        let log_post = lik.log_posterior(&m);
        let mut best = 0;
        for (i, &p) in log_post.iter().enumerate() {
            if p > log_post[best] {
                best = i;
            }
        }
        if best == a {
            successes += 1;
        }
        let term = (n as f64).log2() + log_post[a] / std::f64::consts::LN_2;
        i_sum += term;
        i_sq_sum += term * term;
    }
    let tf = trials as f64;
    let rate = successes as f64 / tf;
    let mean_i = i_sum / tf;
    let var_i = (i_sq_sum / tf - mean_i * mean_i).max(0.0);
    Ok(AttackSummary {
        trials,
        map_success_rate: rate,
        success_std_error: (rate * (1.0 - rate) / tf).sqrt(),
        empirical_i_bits: mean_i,
        i_std_error: (var_i / tf).sqrt(),
    })
}

// ---------------------------------------------------------------------
// Identification-probability grid
// ---------------------------------------------------------------------

/// One cell of the players/capacity identification grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContourPoint {
    pub n: usize,
    pub c_bits: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub i_bound_bits: f64,
    pub p_identify: f64,
}

/// Identification probability over players n and capacity C for a fixed
/// resource (s, w). The C = 0 column is exact: p = 1/n. The grid plots
/// the leakage bound, read as the maximum identification probability.
pub fn figure2_grid(
    s: f64,
    w: usize,
    n_min: usize,
    n_max: usize,
    c_max: f64,
    c_step: f64,
) -> Result<Vec<ContourPoint>> {
    if n_min < 3 || n_max < n_min {
        return Err(Error::Validation(format!(
            "grid needs 3 <= n_min <= n_max, got {n_min}..={n_max}"
        )));
    }
    if !(c_step > 0.0) || c_max < 0.0 {
        return Err(Error::Validation("capacity grid requires c_step > 0".into()));
    }
    let eps = epsilon(s, w, 1.0);
    let cells = (c_max / c_step).round() as usize;
    let mut out = Vec::with_capacity((n_max - n_min + 1) * (cells + 1));
    for n in n_min..=n_max {
        for k in 0..=cells {
            let c_bits = (k as f64 * c_step).min(c_max);
            let a = alpha_for_capacity(c_bits);
            let i = if c_bits == 0.0 {
                0.0
            } else {
                mutual_info_bound_bits(n, eps, a)?
            };
            out.push(ContourPoint {
                n,
                c_bits,
                alpha: a,
                epsilon: eps,
                i_bound_bits: i,
                p_identify: i.exp2() / n as f64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

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
        // n in {1, 2} completes the definition with the tridiagonal form.
        let mut m = dense_toeplitz(n, x);
        if n >= 3 {
            m[(0, n - 1)] = 1.0;
            m[(n - 1, 0)] = 1.0;
        }
        m[(0, 0)] += a;
        m
    }

    #[test]
    fn epsilon_alpha_formulas() {
        assert!((epsilon(10.0, 6, 1.0) - 3e-4).abs() < 1e-18);
        assert_eq!(alpha(3.0, 0.0, 1.0), 0.0);
        // eps * alpha = tau^2 w / s^2 independent of the string squeezing.
        for s2 in [0.5, 1.0, 2.0] {
            let (s, w, tau) = (1.7, 5usize, 0.9);
            let prod = epsilon(s, w, s2) * alpha(s, tau, s2);
            assert!((prod - tau * tau * w as f64 / (s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn capacity_points_and_inverse() {
        assert!((capacity_bits(3.0) - 1.0).abs() < 1e-12);
        assert!((capacity_bits(1.0) - 0.5).abs() < 1e-12);
        assert!((capacity_bits(0.414) - 0.25).abs() < 1e-3);
        assert_eq!(capacity_bits(0.0), 0.0);
        for c in [0.0, 0.25, 1.0, 3.33, 10.0] {
            assert!((capacity_bits(alpha_for_capacity(c)) - c).abs() < 1e-12);
        }
    }

    #[test]
    fn chebyshev_determinant_identities() {
        assert_eq!(cheb::det_toeplitz(1, 1.75), 1.75);
        // det C_3(2) = 4, frozen from the dense 3x3 determinant.
        assert!((cheb::det_circulant(3, 2.0) - 4.0).abs() < 1e-12);
        assert!(
            (dense_circulant(3, 2.0, 0.0).determinant() - 4.0).abs() < 1e-12
        );
    }

    #[test]
    fn determinants_match_dense_oracle() {
        let mut state = 0x243f6a8885a308d3u64; // deterministic LCG draws
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let n = 1 + (next() * 12.0) as usize;
            let x = -4.0 + 8.0 * next();
            let a = -2.0 + 4.0 * next();
            let dt = dense_toeplitz(n, x).determinant();
            let dc = dense_circulant(n, x, 0.0).determinant();
            let dp = dense_circulant(n, x, a).determinant();
            let scale = |v: f64| v.abs().max(1.0);
            assert!((cheb::det_toeplitz(n, x) - dt).abs() / scale(dt) < 1e-8, "T n={n} x={x}");
            if n >= 1 {
                assert!((cheb::det_circulant(n, x) - dc).abs() / scale(dc) < 1e-8, "C n={n} x={x}");
                assert!(
                    (cheb::det_circulant_perturbed(n, x, a) - dp).abs() / scale(dp) < 1e-8,
                    "C' n={n} x={x} a={a}"
                );
            }
        }
    }

    #[test]
    fn bound_zero_cases() {
        assert_eq!(mutual_info_bound_bits(5, 0.3, 0.0).unwrap(), 0.0);
        // eps -> 0 at fixed alpha: bound vanishes.
        let tiny = mutual_info_bound_bits(8, 1e-10, 2.0).unwrap();
        assert!(tiny >= 0.0 && tiny < 1e-8, "got {tiny}");
        assert!(mutual_info_bound_bits(2, 0.1, 1.0).is_err());
    }

    #[test]
    fn bound_paths_agree_spot() {
        let a = mutual_info_bound_bits(5, 0.2, 1.0).unwrap();
        let b = mutual_info_bound_bits_det(5, 0.2, 1.0).unwrap();
        assert!((a - b).abs() / b < 1e-9, "cheb {a} vs det {b}");
    }

    #[test]
    fn bound_nonnegative_over_sweep() {
        for n in [3usize, 10, 50, 100] {
            for eps in [1e-6, 1e-3, 0.1, 1.0] {
                for alpha in [0.0, 0.01, 1.0, 100.0] {
                    let i = mutual_info_bound_bits(n, eps, alpha).unwrap();
                    assert!(i >= -1e-12, "n={n} eps={eps} alpha={alpha}: {i}");
                }
            }
        }
    }

    #[test]
    fn identification_probability_floor() {
        // Zero leakage identifies no better than guessing.
        for n in [3usize, 10, 64] {
            let p = identification_probability(n, 1e-9, 0.0).unwrap();
            assert!((p - 1.0 / n as f64).abs() < 1e-15);
        }
        for n in [3usize, 17, 40] {
            let p = identification_probability(n, 0.3, 2.0).unwrap();
            assert!(p >= 1.0 / n as f64 - 1e-15);
        }
    }

    #[test]
    fn high_anonymity_examples() {
        let c = high_anonymity_condition(10, epsilon(10.0, 6, 1.0), 3.0);
        assert!((c.ratio - 9e-4 / 6.0).abs() < 1e-12);
        assert!(c.satisfied);
        let c0 = high_anonymity_condition(10, 0.01, 0.0);
        assert!(c0.satisfied);
        assert_eq!(c0.rhs, 1.0);
    }

    #[test]
    fn expansion_tracks_exact_bound_at_small_eps() {
        // 2^(2I) vs 1 + (n^2-1) alpha^2 eps / (6 (1+alpha)) for moderate
        // SNR; the dropped O(eps^2) terms grow with n^2 alpha^2.
        for eps in [1e-4, 1e-3] {
            for n in [3usize, 10, 50] {
                for a in [0.414, 1.0] {
                    let exact = (2.0 * mutual_info_bound_bits(n, eps, a).unwrap()).exp2();
                    let c = high_anonymity_condition(n, eps, a);
                    let rel = (c.rhs - exact).abs() / exact;
                    assert!(rel < 0.05, "eps={eps} n={n} a={a}: rel={rel}");
                }
            }
        }
    }

    #[test]
    fn gaussian_input_beats_binary_input() {
        // The capacity formula assumes the Gaussian-input optimum. Check
        // numerically that a binary input of equal variance (delta peaks at
        // +/- tau) achieves strictly less mutual information through the
        // same additive-noise channel, approaching C only at low SNR.
        let sigma2: f64 = 0.005; // noise variance 1/(2 s^2) at s = 10
        for alpha in [0.25, 1.0, 3.0, 10.0] {
            let tau2 = alpha * sigma2;
            let tau = tau2.sqrt();
            // H(M) for the symmetric two-component mixture, by quadrature.
            let sigma = sigma2.sqrt();
            let lo = -(tau + 8.0 * sigma);
            let hi = tau + 8.0 * sigma;
            let steps = 20000;
            let h = (hi - lo) / steps as f64;
            let pdf = |m: f64| {
                let g = |mu: f64| {
                    (-(m - mu) * (m - mu) / (2.0 * sigma2)).exp()
                        / (2.0 * std::f64::consts::PI * sigma2).sqrt()
                };
                0.5 * (g(-tau) + g(tau))
            };
            let mut h_m = 0.0;
            for k in 0..=steps {
                let m = lo + k as f64 * h;
                let p = pdf(m);
                if p > 0.0 {
                    let weight = if k == 0 || k == steps { 0.5 } else { 1.0 };
                    h_m -= weight * p * p.log2() * h;
                }
            }
            let h_m_given_r = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma2).log2();
            let i_binary = h_m - h_m_given_r;
            let c = capacity_bits(alpha);
            assert!(
                i_binary <= c + 1e-6,
                "alpha={alpha}: binary {i_binary} exceeds Gaussian capacity {c}"
            );
            // Binary input cannot carry more than its one bit, so the gap
            // must open up once C > 1 bit.
            if c > 1.2 {
                assert!(i_binary < c - 0.1, "alpha={alpha}: gap missing ({i_binary} vs {c})");
            }
        }
    }

    #[test]
    fn zero_record_gives_uniform_posterior() {
        let model = CovarianceModel::toroidal(6, 2, 1.3).unwrap();
        let post = map_posterior(&[0.0; 6], &model, 0.8).unwrap();
        for p in &post {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
        assert_eq!(map_attacker(&[0.0; 6], &model, 0.8).unwrap(), 1);
    }

    #[test]
    fn strong_signal_is_identified() {
        // Tiny local noise relative to the broadcast: MAP nails the sender.
        let model = CovarianceModel::toroidal(4, 1, 1.0).unwrap();
        let summary = empirical_attack(&model, 10.0, 2000, 99).unwrap();
        assert!(summary.map_success_rate > 0.9, "rate {}", summary.map_success_rate);
    }

    #[test]
    fn grid_basics() {
        let grid = figure2_grid(10.0, 6, 3, 12, 1.0, 0.25).unwrap();
        for pt in &grid {
            if pt.c_bits == 0.0 {
                assert_eq!(pt.p_identify, 1.0 / pt.n as f64);
            }
            assert!(pt.p_identify >= 1.0 / pt.n as f64 - 1e-15);
        }
        // Monotone in capacity at fixed n.
        for n in 3..=12 {
            let ps: Vec<f64> = grid
                .iter()
                .filter(|p| p.n == n)
                .map(|p| p.p_identify)
                .collect();
            for k in 1..ps.len() {
                assert!(ps[k] + 1e-15 >= ps[k - 1]);
            }
        }
    }
}
