//! Iterative average-consensus over fixed and randomly failing graphs.
//!
//! Each node repeatedly replaces its state with a convex combination of its
//! own and its neighbors' states. With the Laplacian rule the update is
//! `x_i(k+1) = x_i(k) + ε Σ_{j∈N_i} (x_j(k) - x_i(k))`, i.e. `x(k+1) = P x(k)`
//! with `P = I - εL`; the bound `0 < ε < 1/Δ` keeps `P` doubly stochastic
//! (the strict bound is enforced everywhere, even though some topologies
//! remain ergodic at `ε = 1/Δ`). The Metropolis rule instead weighs edge
//! `(i, j)` by `1/(1 + max{d_i, d_j})` and needs no knowledge of Δ.
//!
//! Under random link failures only the surviving edges contribute, and a
//! node whose whole neighborhood failed keeps its state. Every per-step
//! matrix is symmetric doubly stochastic, so the state average is preserved
//! exactly and the states converge to the average of the initial energies.
//! With Metropolis weights under link failures the weights are recomputed
//! on each snapshot subgraph, which keeps those properties.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::graph::{GraphSnapshot, LinkFailureModel, Topology};
use crate::sensing::EnergyVector;

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("topology has no edges, so no neighbor averaging is possible")]
    NoNeighbors,
    #[error("epsilon {epsilon} outside (0, {bound}) for this topology")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },
    #[error("state length {state} does not match node count {nodes}")]
    DimensionMismatch { state: usize, nodes: usize },
    #[error("stopping rule invalid: {0}")]
    BadStoppingRule(String),
}

/// The evolving consensus state: one value per node plus the iteration
/// counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusState {
    x: Vec<f64>,
    k: u32,
}

impl ConsensusState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, k: 0 }
    }

    /// Initial state of the second stage: `x_i(0) = Y_i`.
    pub fn from_energies(y: &EnergyVector) -> Self {
        Self::new(y.values().to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn iteration(&self) -> u32 {
        self.k
    }

    pub fn mean(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.x.len() as f64
    }
}

/// How the per-step averaging weights are built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    /// `P = I - εL`; requires `0 < ε < 1/Δ`.
    LaplacianEpsilon(f64),
    /// Metropolis weights `1/(1 + max{d_i, d_j})`; needs only local degrees.
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// Stop when `10·log10(max x / min x)` falls below the dB tolerance.
    SpreadDb,
    /// Stop when every state is within a relative tolerance of the initial
    /// average.
    ExactAverage,
}

/// Termination criterion for a consensus run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub mode: StopMode,
    pub spread_tolerance_db: f64,
    pub exact_tolerance: f64,
    pub max_iterations: u32,
}

impl StoppingRule {
    /// Spread criterion with the customary 1 dB tolerance.
    pub fn spread_db(max_iterations: u32) -> Self {
        Self {
            mode: StopMode::SpreadDb,
            spread_tolerance_db: 1.0,
            exact_tolerance: 1e-9,
            max_iterations,
        }
    }

    /// Exact-average criterion at 1e-9 relative tolerance.
    pub fn exact_average(max_iterations: u32) -> Self {
        Self {
            mode: StopMode::ExactAverage,
            spread_tolerance_db: 1.0,
            exact_tolerance: 1e-9,
            max_iterations,
        }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.spread_tolerance_db <= 0.0 || self.exact_tolerance <= 0.0 {
            return Err(ConsensusError::BadStoppingRule(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(ConsensusError::BadStoppingRule(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Exclusive upper bound `1/Δ` for the step size. Errors on an edgeless
/// topology.
pub fn epsilon_upper_bound(t: &Topology) -> Result<f64, ConsensusError> {
    let delta = t.max_degree();
    if delta == 0 {
        return Err(ConsensusError::NoNeighbors);
    }
    Ok(1.0 / delta as f64)
}

fn check_epsilon(t: &Topology, epsilon: f64) -> Result<(), ConsensusError> {
    let bound = epsilon_upper_bound(t)?;
    if epsilon <= 0.0 || epsilon >= bound {
        return Err(ConsensusError::EpsilonOutOfRange { epsilon, bound });
    }
    Ok(())
}

/// The doubly stochastic symmetric iteration matrix for a scheme on a
/// topology: `I - εL` or the Metropolis matrix.
pub fn weight_matrix(t: &Topology, scheme: WeightScheme) -> Result<DMatrix<f64>, ConsensusError> {
    let n = t.node_count();
    match scheme {
        WeightScheme::LaplacianEpsilon(epsilon) => {
            check_epsilon(t, epsilon)?;
            let mut w = DMatrix::identity(n, n);
            w -= t.laplacian() * epsilon;
            Ok(w)
        }
        WeightScheme::Metropolis => {
            let mut w = DMatrix::zeros(n, n);
            for &(i, j) in t.edges() {
                let p = 1.0 / (1.0 + t.degree(i).max(t.degree(j)) as f64);
                w[(i, j)] = p;
                w[(j, i)] = p;
            }
            for i in 0..n {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
                w[(i, i)] = 1.0 - off;
            }
            Ok(w)
        }
    }
}

/// One fixed-graph iteration: `x(k+1) = W x(k)`.
pub fn step_fixed(
    s: &ConsensusState,
    t: &Topology,
    scheme: WeightScheme,
) -> Result<ConsensusState, ConsensusError> {
    if s.x.len() != t.node_count() {
        return Err(ConsensusError::DimensionMismatch {
            state: s.x.len(),
            nodes: t.node_count(),
        });
    }
    let w = weight_matrix(t, scheme)?;
    let next = &w * DVector::from_column_slice(&s.x);
    Ok(ConsensusState {
        x: next.as_slice().to_vec(),
        k: s.k + 1,
    })
}

/// One random-graph iteration with the constant step size: only the
/// snapshot's surviving edges contribute, and an isolated node keeps its
/// state. `ε` must satisfy the bound of the *base* topology.
pub fn step_random(
    s: &ConsensusState,
    snap: &GraphSnapshot,
    epsilon: f64,
) -> Result<ConsensusState, ConsensusError> {
    let base = snap.base();
    if s.x.len() != base.node_count() {
        return Err(ConsensusError::DimensionMismatch {
            state: s.x.len(),
            nodes: base.node_count(),
        });
    }
    check_epsilon(base, epsilon)?;
    let mut next = s.x.clone();
    for (i, j) in snap.active_edges() {
        let d = epsilon * (s.x[j] - s.x[i]);
        next[i] += d;
        next[j] -= d;
    }
    Ok(ConsensusState { x: next, k: s.k + 1 })
}

/// Result of a full consensus run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_state: ConsensusState,
    pub iterations: u32,
    /// True when the stopping criterion (not the iteration cap) ended the
    /// run.
    pub converged: bool,
    /// Recorded state vectors `x(0), x(1), ...` when tracing was requested,
    /// capped in length.
    pub history: Option<Vec<Vec<f64>>>,
}

/// Global max/min spread in dB; `None` when some state is non-positive.
pub fn spread_db(x: &[f64]) -> Option<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in x {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo > 0.0).then(|| 10.0 * (hi / lo).log10())
}

struct Stopper {
    rule: StoppingRule,
    initial_mean: f64,
    fallback_scale: f64,
}

impl Stopper {
    fn new(rule: StoppingRule, x0: &[f64]) -> Self {
        let initial_mean = x0.iter().sum::<f64>() / x0.len() as f64;
        let fallback_scale = x0.iter().map(|v| v.abs()).sum::<f64>() / x0.len() as f64;
        Self {
            rule,
            initial_mean,
            fallback_scale,
        }
    }

    fn satisfied(&self, x: &[f64]) -> bool {
        match self.rule.mode {
            StopMode::SpreadDb => match spread_db(x) {
                Some(db) => db < self.rule.spread_tolerance_db,
                // Non-positive states make the dB spread undefined; fall
                // back to the absolute spread against the initial scale.
                None => {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &v in x {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    hi - lo < self.rule.spread_tolerance_db * self.fallback_scale
                }
            },
            StopMode::ExactAverage => {
                let worst = x
                    .iter()
                    .map(|v| (v - self.initial_mean).abs())
                    .fold(0.0, f64::max);
                if self.initial_mean == 0.0 {
                    worst < self.rule.exact_tolerance
                } else {
                    worst / self.initial_mean.abs() < self.rule.exact_tolerance
                }
            }
        }
    }
}

/// Run the consensus protocol from the measured energies until the stopping
/// criterion or the iteration cap. Link failures, when a model is given,
/// are resampled independently on every iteration. Tracing records up to
/// `history_cap` state vectors (including the initial one).
///
/// On a disconnected topology the run still executes (a warning is logged);
/// states then approach per-component averages and an `ExactAverage`
/// criterion will typically hit the iteration cap.
#[allow(clippy::too_many_arguments)]
pub fn run_to_consensus(
    y: &EnergyVector,
    t: &Topology,
    scheme: WeightScheme,
    failure: Option<&LinkFailureModel>,
    stop: &StoppingRule,
    rng: &mut impl Rng,
    history_cap: Option<usize>,
) -> Result<RunOutcome, ConsensusError> {
    stop.validate()?;
    if y.len() != t.node_count() {
        return Err(ConsensusError::DimensionMismatch {
            state: y.len(),
            nodes: t.node_count(),
        });
    }
    if !t.is_connected() {
        log::warn!("running consensus on a disconnected topology; states converge to per-component averages");
    }
    // Validate the scheme up front so errors surface before iterating.
    let fixed_weights = match failure {
        None => Some(weight_matrix(t, scheme)?),
        Some(_) => {
            if let WeightScheme::LaplacianEpsilon(eps) = scheme {
                check_epsilon(t, eps)?;
            }
            None
        }
    };

    let n = t.node_count();
    let stopper = Stopper::new(*stop, y.values());
    let mut x = DVector::from_column_slice(y.values());
    let mut buf = DVector::zeros(n);
    let mut active = vec![true; t.edges().len()];
    let mut degrees = vec![0usize; n];

    let mut history = history_cap.map(|cap| {
        let mut h = Vec::new();
        if cap > 0 {
            h.push(x.as_slice().to_vec());
        }
        h
    });

    let mut iterations = 0;
    let mut converged = stopper.satisfied(x.as_slice());
    while !converged && iterations < stop.max_iterations {
        match (&fixed_weights, failure) {
            (Some(w), None) => {
                buf.gemv(1.0, w, &x, 0.0);
                std::mem::swap(&mut x, &mut buf);
            }
            (None, Some(model)) => {
                let keep = 1.0 - model.failure_probability();
                for a in active.iter_mut() {
                    *a = rng.random::<f64>() < keep;
                }
                buf.copy_from(&x);
                match scheme {
                    WeightScheme::LaplacianEpsilon(eps) => {
                        for (&(i, j), &alive) in t.edges().iter().zip(&active) {
                            if alive {
                                let d = eps * (x[j] - x[i]);
                                buf[i] += d;
                                buf[j] -= d;
                            }
                        }
                    }
                    WeightScheme::Metropolis => {
                        degrees.fill(0);
                        for (&(i, j), &alive) in t.edges().iter().zip(&active) {
                            if alive {
                                degrees[i] += 1;
                                degrees[j] += 1;
                            }
                        }
                        for (&(i, j), &alive) in t.edges().iter().zip(&active) {
                            if alive {
                                let w = 1.0 / (1.0 + degrees[i].max(degrees[j]) as f64);
                                let d = w * (x[j] - x[i]);
                                buf[i] += d;
                                buf[j] -= d;
                            }
                        }
                    }
                }
                std::mem::swap(&mut x, &mut buf);
            }
            _ => unreachable!("weights precomputed iff no failure model"),
        }
        iterations += 1;
        if let (Some(h), Some(cap)) = (history.as_mut(), history_cap) {
            if h.len() < cap {
                h.push(x.as_slice().to_vec());
            }
        }
        converged = stopper.satisfied(x.as_slice());
    }

    Ok(RunOutcome {
        final_state: ConsensusState {
            x: x.as_slice().to_vec(),
            k: iterations,
        },
        iterations,
        converged,
        history,
    })
}

/// Write a recorded run history as delimited text: one row per iteration
/// with columns `k, x_0..x_{n-1}, spread_db`.
pub fn write_trace<W: Write>(history: &[Vec<f64>], out: &mut W) -> io::Result<()> {
    let n = history.first().map_or(0, Vec::len);
    write!(out, "k")?;
    for i in 0..n {
        write!(out, ",x_{i}")?;
    }
    writeln!(out, ",spread_db")?;
    for (k, x) in history.iter().enumerate() {
        write!(out, "{k}")?;
        for v in x {
            write!(out, ",{v:.8e}")?;
        }
        match spread_db(x) {
            Some(db) => writeln!(out, ",{db:.8e}")?,
            None => writeln!(out, ",nan")?,
        }
    }
    Ok(())
}
