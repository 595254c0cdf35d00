//! Closed-form covariances of the players' arc measurements: local and
//! adjacent entries, the circulant pre-broadcast matrix, and its sender-
//! conditioned perturbation. These are the fast path the dense engine is
//! checked against.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Boundary variant of the covariance model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelBoundary {
    Toroidal,
    Open,
}

/// Parameters of the analytic arc-measurement covariance.
///
/// `s` is always the effective squeezing factor; hardware-dB conversions
/// live in [`crate::calibration`]. The optional string-mode squeezing `s2`
/// enters only the anonymity parameters, never these matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceModel {
    pub n: usize,
    pub w: usize,
    pub s: f64,
    pub boundary: ModelBoundary,
    pub s2: f64,
}

impl CovarianceModel {
    pub fn toroidal(n: usize, w: usize, s: f64) -> Result<Self> {
        Self::new(n, w, s, ModelBoundary::Toroidal)
    }

    pub fn open(n: usize, w: usize, s: f64) -> Result<Self> {
        Self::new(n, w, s, ModelBoundary::Open)
    }

    fn new(n: usize, w: usize, s: f64, boundary: ModelBoundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("need n >= 2 players, got {n}")));
        }
        if w < 1 {
            return Err(Error::Validation("wedge width must be >= 1".into()));
        }
        if n * w < 4 || (n * w) % 2 != 0 {
            return Err(Error::Validation(format!(
                "loop length n*w = {} must be even and >= 4",
                n * w
            )));
        }
        if s <= 0.0 {
            return Err(Error::Domain(format!("squeezing factor must be > 0, got {s}")));
        }
        Ok(Self { n, w, s, boundary, s2: 1.0 })
    }

    /// Additionally squeeze the string mode by `s2` (affects anonymity
    /// parameters only).
    pub fn with_string_squeeze(mut self, s2: f64) -> Result<Self> {
        if s2 <= 0.0 {
            return Err(Error::Domain(format!("string squeezing must be > 0, got {s2}")));
        }
        self.s2 = s2;
        Ok(self)
    }

    /// Pre-broadcast variance of player j's measurement (1-based):
    /// 1/(2 s^2) + s^2/w, except the end wedges of an open patch where the
    /// extra local noise halves to s^2/(2 w).
    pub fn local_variance(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.n {
            return Err(Error::Index(format!("player {j} out of 1..={}", self.n)));
        }
        let (s2, w) = (self.s * self.s, self.w as f64);
        let base = 1.0 / (2.0 * s2);
        Ok(match self.boundary {
            ModelBoundary::Open if j == 1 || j == self.n => base + s2 / (2.0 * w),
            _ => base + s2 / w,
        })
    }

    /// Covariance of neighboring arcs across one shared boundary: -s^2/(2w).
    pub fn adjacent_covariance(&self) -> f64 {
        -self.s * self.s / (2.0 * self.w as f64)
    }

    /// Variance of the reconstructed total measurement: 1/(2 s^2), for
    /// either boundary.
    pub fn global_variance(&self) -> f64 {
        1.0 / (2.0 * self.s * self.s)
    }

    /// Pre-broadcast covariance matrix of the announcement vector.
    ///
    /// Toroidal: circulant tridiagonal with wraparound corners; for n = 2
    /// the two arcs touch on both sides, so the off-diagonal doubles.
    /// Open: tridiagonal with the end variances reduced.
    pub fn sigma_bar(&self) -> DMatrix<f64> {
        let n = self.n;
        let adj = self.adjacent_covariance();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = self.local_variance(j + 1).expect("valid player");
        }
        match self.boundary {
            ModelBoundary::Toroidal => {
                if n == 2 {
                    m[(0, 1)] = 2.0 * adj;
                    m[(1, 0)] = 2.0 * adj;
                } else {
                    for j in 0..n {
                        let k = (j + 1) % n;
                        m[(j, k)] = adj;
                        m[(k, j)] = adj;
                    }
                }
            }
            ModelBoundary::Open => {
                for j in 0..n - 1 {
                    m[(j, j + 1)] = adj;
                    m[(j + 1, j)] = adj;
                }
            }
        }
        m
    }

    /// Covariance of the announcements conditioned on player `a` (1-based)
    /// broadcasting a message of standard deviation `tau`:
    /// sigma_bar + n tau^2 e_aa.
    pub fn sigma_given_sender(&self, tau: f64, a: usize) -> Result<DMatrix<f64>> {
        if a == 0 || a > self.n {
            return Err(Error::Index(format!("sender {a} out of 1..={}", self.n)));
        }
        if tau < 0.0 {
            return Err(Error::Domain(format!("tau must be >= 0, got {tau}")));
        }
        let mut m = self.sigma_bar();
        m[(a - 1, a - 1)] += self.n as f64 * tau * tau;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_variance_substitutions() {
        let m = CovarianceModel::toroidal(4, 6, 10.0).unwrap();
        let got = m.local_variance(1).unwrap();
        assert!((got - (0.005 + 100.0 / 6.0)).abs() < 1e-12);

        // Open n=2, w=2, s=1: end formula 1/2 + 1/4.
        let m = CovarianceModel::open(2, 2, 1.0).unwrap();
        assert!((m.local_variance(1).unwrap() - 0.75).abs() < 1e-12);
        assert!((m.local_variance(2).unwrap() - 0.75).abs() < 1e-12);

        // w -> large approaches the global floor 1/(2 s^2).
        let m = CovarianceModel::toroidal(2, 5000, 1.0).unwrap();
        assert!((m.local_variance(1).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn adjacent_and_global() {
        let m = CovarianceModel::toroidal(2, 2, 1.0).unwrap();
        assert!((m.adjacent_covariance() + 0.25).abs() < 1e-12);
        let m = CovarianceModel::toroidal(4, 6, 10.0).unwrap();
        assert!((m.global_variance() - 0.005).abs() < 1e-15);
        // Same global variance on the open patch.
        let o = CovarianceModel::open(4, 6, 10.0).unwrap();
        assert_eq!(m.global_variance(), o.global_variance());
    }

    #[test]
    fn sigma_bar_assembly() {
        let m = CovarianceModel::toroidal(4, 2, 1.0).unwrap();
        let sb = m.sigma_bar();
        for j in 0..4 {
            assert!((sb[(j, j)] - 1.0).abs() < 1e-12);
            assert!((sb[(j, (j + 1) % 4)] + 0.25).abs() < 1e-12);
            assert!((sb[(j, (j + 2) % 4)]).abs() < 1e-15);
        }
        // Conditioning on the sender adds n tau^2 at (a, a) only.
        let tau = 0.7;
        let sa = m.sigma_given_sender(tau, 2).unwrap();
        let diff = &sa - &sb;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == 1 && j == 1 { 4.0 * tau * tau } else { 0.0 };
                assert!((diff[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_sum_variance_cancels_exactly() {
        // Var((1/sqrt n) sum m_j) computed from sigma_bar collapses to the
        // global variance: the s^2 terms cancel exactly.
        for (n, w, s, boundary) in [
            (2usize, 2usize, 0.5, ModelBoundary::Toroidal),
            (3, 4, 1.5, ModelBoundary::Toroidal),
            (6, 4, 20.0, ModelBoundary::Toroidal),
            (2, 2, 1.0, ModelBoundary::Open),
            (5, 2, 3.0, ModelBoundary::Open),
        ] {
            let m = match boundary {
                ModelBoundary::Toroidal => CovarianceModel::toroidal(n, w, s).unwrap(),
                ModelBoundary::Open => CovarianceModel::open(n, w, s).unwrap(),
            };
            let sb = m.sigma_bar();
            let total: f64 = sb.iter().sum();
            let var = total / n as f64;
            assert!(
                (var - m.global_variance()).abs() < 1e-9 * m.global_variance().max(1.0),
                "n={n} w={w} s={s} {boundary:?}: {var} vs {}",
                m.global_variance()
            );
        }
    }

    #[test]
    fn sigma_bar_positive_definite_over_sweep() {
        for n in [2usize, 3, 8, 17, 64] {
            for s in [0.5, 1.0, 5.0, 20.0] {
                for w in [1usize, 2, 6] {
                    if n * w < 4 || (n * w) % 2 != 0 {
                        continue;
                    }
                    let m = CovarianceModel::toroidal(n, w, s).unwrap();
                    let chol = m.sigma_bar().cholesky();
                    assert!(chol.is_some(), "n={n} s={s} w={w} not PD");
                }
            }
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(CovarianceModel::toroidal(2, 1, 1.0).is_err()); // nw = 2
        assert!(CovarianceModel::toroidal(3, 1, 1.0).is_err()); // nw odd
        assert!(CovarianceModel::toroidal(4, 1, 0.0).is_err());
        assert!(CovarianceModel::toroidal(4, 1, 1.0)
            .unwrap()
            .with_string_squeeze(-1.0)
            .is_err());
    }
}
