//! Cross-path consistency: the dense engine and the closed-form sampler
//! must produce statistically indistinguishable reconstructed messages, and
//! the null broadcast must hide the sender exactly.

use cvtoric::closed_form::CovarianceModel;
use cvtoric::protocol::{run_batch, ProtocolConfig};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

#[test]
fn engine_and_closed_form_messages_agree() {
    let (n, w, s, r) = (4usize, 2usize, 1.5, 0.7);
    let model = CovarianceModel::toroidal(n, w, s).unwrap();
    let rounds = 1500;

    let engine_cfg = ProtocolConfig::new(model, 0.5, true, 2001).unwrap();
    let engine: Vec<f64> = run_batch(&engine_cfg, 2, Some(r), rounds)
        .unwrap()
        .iter()
        .map(|x| x.reconstructed)
        .collect();

    let closed_cfg = ProtocolConfig::new(model, 0.5, false, 2002).unwrap();
    let closed: Vec<f64> = run_batch(&closed_cfg, 2, Some(r), rounds)
        .unwrap()
        .iter()
        .map(|x| x.reconstructed)
        .collect();

    let d = ks_statistic(engine, closed);
    // Two-sample KS critical value at significance 0.01.
    let crit = 1.628 * ((2.0 / rounds as f64) as f64).sqrt();
    assert!(d < crit, "KS statistic {d:.4} at critical {crit:.4}");
    println!("engine vs closed-form KS: {d:.4} < {crit:.4}");
}

#[test]
fn engine_oracle_on_the_24_edge_torus() {
    // n = 6 players, w = 4: the largest-loop equivalence check, beyond the
    // acceptance grid.
    use cvtoric::protocol::engine_arc_moments;
    let (n, w, s) = (6usize, 4usize, 1.5);
    let model = CovarianceModel::toroidal(n, w, s).unwrap();
    let reference = model.sigma_bar();
    let (means, cov, _) = engine_arc_moments(n, w, s, 2).unwrap();
    assert!(means.amax() < 1e-9);
    for i in 0..n {
        for j in 0..n {
            assert!(
                (cov[(i, j)] - reference[(i, j)]).abs() < 1e-9,
                "entry ({i},{j}): {} vs {}",
                cov[(i, j)],
                reference[(i, j)]
            );
        }
    }
}

#[test]
fn null_broadcast_hides_the_sender_exactly() {
    // With r = 0 the announcement distribution cannot depend on the sender:
    // identical seeds give identical announcements for different senders.
    let model = CovarianceModel::toroidal(5, 2, 2.0).unwrap();
    let config = ProtocolConfig::new(model, 0.0, false, 77).unwrap();
    let a = run_batch(&config, 1, Some(0.0), 50).unwrap();
    let b = run_batch(&config, 4, Some(0.0), 50).unwrap();
    for (x, y) in a.iter().zip(b.iter()) {
        assert_eq!(x.announcements, y.announcements);
    }
}
