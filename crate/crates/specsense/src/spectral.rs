//! Convergence-rate analytics: Laplacian spectrum, the per-step contraction
//! factor α(ε), the spectral gap, and the mean-square contraction factor ρ
//! under random link failures.
//!
//! For a connected topology with Laplacian eigenvalues
//! `0 = λ1 < λ2 <= ... <= λn`, the iteration matrix `P = I - εL` contracts
//! the disagreement by `α(ε) = max{|1 - ελ2|, |1 - ελn|}` per step, and
//! `g(ε) = 1 - α(ε)` is its spectral gap. Under independent link failures
//! with probability `p`, the squared disagreement contracts in expectation
//! by ρ, the largest eigenvalue of `E[(I - εL(k))²] - (1/n)11ᵀ`. That
//! expectation has a closed form: with `L(k) = Σ_e b_e L_e` and
//! `b_e ~ Bernoulli(1-p)` i.i.d., single-edge Laplacians satisfy
//! `L_e² = 2 L_e`, giving `E[L(k)] = (1-p) L` and
//! `E[L(k)²] = (1-p)² L² + 2p(1-p) L`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use thiserror::Error;

use crate::consensus::epsilon_upper_bound;
use crate::graph::{sample_snapshot, LinkFailureModel, Topology};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (|a_ij - a_ji| up to {0:.3e})")]
    Asymmetric(f64),
    #[error("topology is disconnected; rho = 1 trivially")]
    Disconnected,
    #[error("epsilon {epsilon} outside (0, {bound})")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },
    #[error("failure probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("topology has no edges")]
    NoNeighbors,
}

/// Eigenvalues of a symmetric matrix, sorted ascending. Rejects asymmetric
/// input.
pub fn laplacian_spectrum(l: &DMatrix<f64>) -> Result<Vec<f64>, SpectralError> {
    let (rows, cols) = l.shape();
    if rows != cols {
        return Err(SpectralError::NotSquare { rows, cols });
    }
    let scale = l.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..rows {
        for j in (i + 1)..cols {
            worst = worst.max((l[(i, j)] - l[(j, i)]).abs());
        }
    }
    if worst > 1e-9 * scale {
        return Err(SpectralError::Asymmetric(worst));
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(l.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    Ok(eigenvalues)
}

/// Per-step disagreement contraction factor of `P = I - εL`:
/// `max{|1 - ελ2|, |1 - ελn|}` (the second largest absolute eigenvalue of
/// `P`).
pub fn alpha(epsilon: f64, lambda2: f64, lambda_n: f64) -> f64 {
    (1.0 - epsilon * lambda2)
        .abs()
        .max((1.0 - epsilon * lambda_n).abs())
}

/// Spectral gap `g(ε) = 1 - α(ε)`; larger means faster convergence.
pub fn spectral_gap(epsilon: f64, lambda2: f64, lambda_n: f64) -> f64 {
    1.0 - alpha(epsilon, lambda2, lambda_n)
}

/// `E[(I - εL(k))²] - (1/n)11ᵀ` in closed form under independent link
/// failures. ρ is this matrix's largest eigenvalue; the matrix itself is
/// exposed for verification against snapshot averaging.
pub fn expected_squared_iteration_matrix(
    t: &Topology,
    epsilon: f64,
    p: f64,
) -> Result<DMatrix<f64>, SpectralError> {
    check_rho_inputs(t, epsilon, p)?;
    let n = t.node_count();
    let l = t.laplacian();
    let q = 1.0 - p;
    let mut m = DMatrix::identity(n, n);
    // I - 2εqL + ε²(q²L² + 2pqL), with the rank-one average projector removed
    m += &l * (-2.0 * epsilon * q + 2.0 * epsilon * epsilon * p * q);
    m += (&l * &l) * (epsilon * epsilon * q * q);
    let projector = DMatrix::from_element(n, n, 1.0 / n as f64);
    m -= projector;
    Ok(m)
}

fn check_rho_inputs(t: &Topology, epsilon: f64, p: f64) -> Result<(), SpectralError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SpectralError::BadProbability(p));
    }
    let bound = epsilon_upper_bound(t).map_err(|_| SpectralError::NoNeighbors)?;
    if epsilon <= 0.0 || epsilon >= bound {
        return Err(SpectralError::EpsilonOutOfRange {
            epsilon,
            bound,
        });
    }
    if !t.is_connected() {
        return Err(SpectralError::Disconnected);
    }
    Ok(())
}

/// Mean-square contraction factor ρ(ε, p): the largest eigenvalue of the
/// closed-form expectation above. Satisfies `ρ(ε, 0) = α(ε)²` and
/// `ρ(ε, 1) = 1`.
pub fn rho_closed_form(t: &Topology, epsilon: f64, p: f64) -> Result<f64, SpectralError> {
    let m = expected_squared_iteration_matrix(t, epsilon, p)?;
    let spectrum = laplacian_spectrum(&m)?;
    Ok(*spectrum.last().expect("non-empty spectrum"))
}

/// Convergence analytics for one `(topology, ε, p)` configuration.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    pub gap: f64,
    pub failure_probability: Option<f64>,
    pub rho: Option<f64>,
}

impl SpectralReport {
    pub fn for_topology(
        t: &Topology,
        epsilon: f64,
        failure_probability: Option<f64>,
    ) -> Result<Self, SpectralError> {
        let eigenvalues = laplacian_spectrum(&t.laplacian())?;
        let lambda2 = eigenvalues[1.min(eigenvalues.len() - 1)];
        let lambda_n = *eigenvalues.last().expect("non-empty");
        let a = alpha(epsilon, lambda2, lambda_n);
        let rho = failure_probability
            .map(|p| rho_closed_form(t, epsilon, p))
            .transpose()?;
        Ok(Self {
            eigenvalues,
            epsilon,
            alpha: a,
            gap: 1.0 - a,
            failure_probability,
            rho,
        })
    }

    /// Upper endpoint of the admissible exponential-rate interval,
    /// `-ln α(ε)`; a bound, not an attained rate.
    pub fn delta_bound(&self) -> f64 {
        -self.alpha.ln()
    }
}

/// One row of the mean-square bound verification table.
#[derive(Debug, Clone, Copy)]
pub struct MsBoundRow {
    pub k: u32,
    pub empirical_mse: f64,
    /// `ρ^k · MSE(0)`.
    pub bound: f64,
}

/// Empirically verify the mean-square contraction bound: run `trials`
/// independent random-graph chains from the fixed start `x0` and tabulate
/// the average squared disagreement against `ρ^k · MSE(0)` for each
/// `k <= k_max`.
pub fn verify_ms_bound(
    t: &Topology,
    epsilon: f64,
    p: f64,
    x0: &[f64],
    k_max: u32,
    trials: u32,
    rng: &mut impl Rng,
) -> Result<Vec<MsBoundRow>, SpectralError> {
    let rho = rho_closed_form(t, epsilon, p)?;
    let n = t.node_count();
    assert_eq!(x0.len(), n, "state length must match node count");
    let avg = x0.iter().sum::<f64>() / n as f64;
    let mse0: f64 = x0.iter().map(|v| (v - avg).powi(2)).sum();

    let model = LinkFailureModel::new(p).expect("validated above");
    let mut sums = vec![0.0f64; k_max as usize + 1];
    let mut x = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    for _ in 0..trials {
        x.copy_from_slice(x0);
        sums[0] += mse0;
        for k in 1..=k_max {
            let snap = sample_snapshot(t, &model, rng);
            next.copy_from_slice(&x);
            for (i, j) in snap.active_edges() {
                let d = epsilon * (x[j] - x[i]);
                next[i] += d;
                next[j] -= d;
            }
            std::mem::swap(&mut x, &mut next);
            sums[k as usize] += x.iter().map(|v| (v - avg).powi(2)).sum::<f64>();
        }
    }

    Ok(sums
        .iter()
        .enumerate()
        .map(|(k, sum)| MsBoundRow {
            k: k as u32,
            empirical_mse: sum / trials as f64,
            bound: rho.powi(k as i32) * mse0,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_connected_topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Laplacian spectrum of the 10-node reference network used in the
    // convergence-rate studies (input fixture, not recomputed from a graph).
    const REFERENCE_SPECTRUM_10: [f64; 10] = [
        0.0, 0.3416, 0.8400, 1.4239, 2.0000, 2.0000, 3.0000, 3.1373, 4.9411, 6.3161,
    ];

    #[test]
    fn spectrum_of_k2_and_k4() {
        let k2 = Topology::new(2, [(0, 1)]).unwrap();
        let ev = laplacian_spectrum(&k2.laplacian()).unwrap();
        assert!((ev[0]).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);

        let k4 = Topology::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let ev = laplacian_spectrum(&k4.laplacian()).unwrap();
        let expected = [0.0, 4.0, 4.0, 4.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{ev:?}");
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(
            laplacian_spectrum(&m),
            Err(SpectralError::Asymmetric(_))
        ));
        let rect = DMatrix::zeros(2, 3);
        assert!(matches!(
            laplacian_spectrum(&rect),
            Err(SpectralError::NotSquare { .. })
        ));
    }

    #[test]
    fn eigensolver_reconstruction_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let t = random_connected_topology(10, 0.3, &mut rng);
            let l = t.laplacian();
            let eig = SymmetricEigen::new(l.clone());
            let residual = (&l * &eig.eigenvectors
                - &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues))
                .norm();
            assert!(residual <= 1e-8 * l.norm().max(1.0), "residual {residual}");
        }
    }

    #[test]
    fn alpha_on_reference_spectrum() {
        let l2 = REFERENCE_SPECTRUM_10[1];
        let ln = REFERENCE_SPECTRUM_10[9];
        let a = alpha(0.19, l2, ln);
        assert!((a - 0.93510).abs() < 1e-5, "alpha {a}");
        // On (0, 0.2) the slow mode dominates: alpha = 1 - 0.3416 eps.
        for i in 1..200 {
            let eps = i as f64 * 0.001;
            assert!((alpha(eps, l2, ln) - (1.0 - 0.3416 * eps)).abs() < 1e-9);
            assert!((spectral_gap(eps, l2, ln) - 0.3416 * eps).abs() < 1e-9);
        }
        assert!(spectral_gap(0.19, l2, ln) > spectral_gap(0.10, l2, ln));
    }

    #[test]
    fn alpha_balance_point_minimizes() {
        let (l2, ln) = (0.5, 6.0);
        let eps_star = 2.0 / (l2 + ln);
        let expected = (ln - l2) / (ln + l2);
        assert!((alpha(eps_star, l2, ln) - expected).abs() < 1e-12);
        assert!(alpha(eps_star * 0.9, l2, ln) > expected);
        assert!(alpha(eps_star * 1.1, l2, ln) > expected);
    }

    #[test]
    fn alpha_limits() {
        // epsilon -> 0: identity limit, alpha -> 1, gap -> 0
        assert!((alpha(1e-12, 0.5, 6.0) - 1.0).abs() < 1e-11);
        assert!(spectral_gap(1e-12, 0.5, 6.0).abs() < 1e-11);
    }

    #[test]
    fn rho_degenerate_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let t = random_connected_topology(8, 0.3, &mut rng);
            let ev = laplacian_spectrum(&t.laplacian()).unwrap();
            let eps = 0.7 / t.max_degree() as f64;
            let a = alpha(eps, ev[1], ev[7]);
            let rho0 = rho_closed_form(&t, eps, 0.0).unwrap();
            assert!((rho0 - a * a).abs() < 1e-9, "rho(0) {rho0} vs alpha^2 {}", a * a);
            let rho1 = rho_closed_form(&t, eps, 1.0).unwrap();
            assert!((rho1 - 1.0).abs() < 1e-9, "rho(1) {rho1}");
        }
    }

    #[test]
    fn rho_monotone_in_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let n = 4 + (rng.random::<u32>() % 9) as usize;
            let t = random_connected_topology(n, 0.3, &mut rng);
            let eps = 0.8 / t.max_degree() as f64;
            let mut last = -1.0;
            for step in 0..=10 {
                let p = step as f64 / 10.0;
                let rho = rho_closed_form(&t, eps, p).unwrap();
                assert!(rho >= last - 1e-12, "rho not monotone at p={p}");
                assert!((0.0..=1.0 + 1e-12).contains(&rho));
                last = rho;
            }
        }
    }

    #[test]
    fn expectation_matrix_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..15 {
            let t = random_connected_topology(9, 0.25, &mut rng);
            let eps = 0.6 / t.max_degree() as f64;
            let m = expected_squared_iteration_matrix(&t, eps, 0.4).unwrap();
            let ev = laplacian_spectrum(&m).unwrap();
            assert!(ev[0] >= -1e-9, "smallest eigenvalue {}", ev[0]);
        }
    }

    #[test]
    fn closed_form_second_moment_matches_snapshot_average() {
        // E[L(k)^2] = (1-p)^2 L^2 + 2p(1-p) L, checked entrywise against
        // 1e5 sampled snapshots within 4 standard errors.
        let t = Topology::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
        let p = 0.4;
        let q = 1.0 - p;
        let l = t.laplacian();
        let expected = (&l * &l) * (q * q) + &l * (2.0 * p * q);

        let model = LinkFailureModel::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 100_000;
        let n = t.node_count();
        let mut sum: DMatrix<f64> = DMatrix::zeros(n, n);
        let mut sum_sq: DMatrix<f64> = DMatrix::zeros(n, n);
        for _ in 0..trials {
            let snap = sample_snapshot(&t, &model, &mut rng);
            let mut lk = DMatrix::zeros(n, n);
            for (i, j) in snap.active_edges() {
                lk[(i, i)] += 1.0;
                lk[(j, j)] += 1.0;
                lk[(i, j)] -= 1.0;
                lk[(j, i)] -= 1.0;
            }
            let sq = &lk * &lk;
            sum += &sq;
            sum_sq += sq.map(|v| v * v);
        }
        for i in 0..n {
            for j in 0..n {
                let mean = sum[(i, j)] / trials as f64;
                let var = f64::max(sum_sq[(i, j)] / trials as f64 - mean * mean, 0.0);
                let stderr = (var / trials as f64).sqrt();
                assert!(
                    (mean - expected[(i, j)]).abs() <= 4.0 * stderr + 1e-12,
                    "entry ({i},{j}): {mean} vs {}",
                    expected[(i, j)]
                );
            }
        }
    }

    #[test]
    fn rho_rejects_bad_inputs() {
        let t = Topology::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            rho_closed_form(&t, 0.2, 0.4),
            Err(SpectralError::Disconnected)
        ));
        let t = crate::fixtures::ten_node();
        assert!(matches!(
            rho_closed_form(&t, 0.25, 0.4),
            Err(SpectralError::EpsilonOutOfRange { .. })
        ));
        assert!(matches!(
            rho_closed_form(&t, 0.19, 1.5),
            Err(SpectralError::BadProbability(_))
        ));
    }

    #[test]
    fn ms_bound_table_at_k0_and_p0() {
        let t = crate::fixtures::ten_node();
        let x0: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rows = verify_ms_bound(&t, 0.19, 0.0, &x0, 10, 50, &mut rng).unwrap();
        assert!((rows[0].empirical_mse - rows[0].bound).abs() < 1e-12);
        // p = 0 is the deterministic chain; MSE must sit below the bound.
        for row in &rows {
            assert!(
                row.empirical_mse <= row.bound * (1.0 + 1e-9) + 1e-12,
                "k={} mse {} bound {}",
                row.k,
                row.empirical_mse,
                row.bound
            );
        }
    }

    #[test]
    fn report_carries_rho_when_p_supplied() {
        let t = crate::fixtures::ten_node();
        let report = SpectralReport::for_topology(&t, 0.19, Some(0.4)).unwrap();
        assert_eq!(report.eigenvalues.len(), 10);
        assert!(report.rho.unwrap() < 1.0);
        assert!((report.gap - (1.0 - report.alpha)).abs() < 1e-15);
        assert!(report.delta_bound() > 0.0);
        let no_p = SpectralReport::for_topology(&t, 0.19, None).unwrap();
        assert!(no_p.rho.is_none());
    }
}
