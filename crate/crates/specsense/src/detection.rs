//! Decision rules on energies and analytic false-alarm oracles.
//!
//! All rules compare in linear scale with a strict `>` at the threshold;
//! ties decide `Absent`. The false-alarm probabilities under the no-signal
//! hypothesis have closed forms because the energies are chi-square with an
//! even number of degrees of freedom.

use crate::sensing::EnergyVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("empty energy vector")]
    EmptyEnergyVector,
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: u32, n: usize },
}

/// Decision threshold, configured in dB and compared in linear scale. The
/// two views are kept consistent by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    db: f64,
    linear: f64,
}

impl Threshold {
    pub fn from_db(db: f64) -> Self {
        Self {
            db,
            linear: 10f64.powf(db / 10.0),
        }
    }

    pub fn from_linear(linear: f64) -> Self {
        assert!(linear > 0.0, "threshold must be positive");
        Self {
            db: 10.0 * linear.log10(),
            linear,
        }
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }
}

/// Primary-user presence verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Absent,
    Present,
}

impl Decision {
    pub fn is_present(&self) -> bool {
        matches!(self, Decision::Present)
    }
}

/// Threshold the consensus value: `Present` iff `x* > λ` (strict).
pub fn decide_consensus(x_star: f64, threshold: &Threshold) -> Decision {
    if x_star > threshold.linear {
        Decision::Present
    } else {
        Decision::Absent
    }
}

/// OR-rule baseline: `Present` iff any user's raw energy exceeds the
/// threshold. Equivalent to max-consensus followed by [`decide_consensus`].
pub fn decide_or_rule(y: &EnergyVector, threshold: &Threshold) -> Result<Decision, DetectionError> {
    if y.is_empty() {
        return Err(DetectionError::EmptyEnergyVector);
    }
    Ok(decide_consensus(y.max(), threshold))
}

/// General k-out-of-n fusion: `Present` iff at least `k` users exceed the
/// threshold. `k = 1` is the OR-rule; `k = n` is the AND-rule.
pub fn decide_k_out_of_n(
    y: &EnergyVector,
    threshold: &Threshold,
    k: u32,
) -> Result<Decision, DetectionError> {
    if y.is_empty() {
        return Err(DetectionError::EmptyEnergyVector);
    }
    if k == 0 || k as usize > y.len() {
        return Err(DetectionError::KOutOfRange { k, n: y.len() });
    }
    let exceeding = y.values().iter().filter(|&&v| v > threshold.linear()).count();
    Ok(if exceeding >= k as usize {
        Decision::Present
    } else {
        Decision::Absent
    })
}

/// Survival function of a central chi-square with `2h` degrees of freedom:
/// `e^{-x/2} * sum_{j=0}^{h-1} (x/2)^j / j!`, exact for integer `h`.
fn chi_square_survival_even_dof(h: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let half = x / 2.0;
    let mut term = (-half).exp();
    let mut sum = term;
    for j in 1..h {
        term *= half / j as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// Single-user false-alarm probability: `P(chi^2_{2m} > λ)`.
pub fn analytic_pf_single(m: u32, threshold: &Threshold) -> f64 {
    chi_square_survival_even_dof(m, threshold.linear())
}

/// Consensus-rule false-alarm probability. The consensus limit is the mean
/// of `n` i.i.d. chi-square(2m) energies, so
/// `P(x* > λ) = P(chi^2_{2mn} > n λ)`.
pub fn analytic_pf_consensus(n: usize, m: u32, threshold: &Threshold) -> f64 {
    chi_square_survival_even_dof(m * n as u32, n as f64 * threshold.linear())
}

/// OR-rule false-alarm probability for `n` independent users:
/// `1 - (1 - pf_single)^n`.
pub fn analytic_pf_or(n: usize, m: u32, threshold: &Threshold) -> f64 {
    1.0 - (1.0 - analytic_pf_single(m, threshold)).powi(n as i32)
}
