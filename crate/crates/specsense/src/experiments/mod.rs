//! Monte Carlo harness for the detection experiments: ROC estimation,
//! detection-sensitivity sweeps, fixed-threshold robustness, and
//! convergence studies.
//!
//! Determinism: the random stream of trial `i` is a ChaCha8 generator keyed
//! by the 64-bit run seed and the 64-bit trial index (both embedded in the
//! 256-bit key), so trials are independent and parallelizable without
//! ordering effects; all reductions are over integer counts. Identical
//! `(config, seed)` give bit-identical outputs.
//!
//! H0 and H1 trials are allocated deterministically from the configured
//! prior (H1 count = round(trials x prior)); false-alarm and
//! missed-detection probabilities are estimated conditionally, so the prior
//! does not bias either estimate.

pub mod config;
pub mod output;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::consensus::{run_to_consensus, ConsensusError, StopMode};
use crate::detection::{
    analytic_pf_consensus, analytic_pf_or, decide_consensus, Decision, DetectionError, Threshold,
};
use crate::sensing::{measure_network, GroundTruth, SensingError};
pub use config::{
    ConfigError, ConvergenceSettings, DecisionRule, RobustnessObjective, RobustnessSettings,
    ScenarioConfig, SensitivitySettings, SnrCondition, SnrGrid,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("threshold calibration for {rule} failed to reach target {target}")]
    Calibration { rule: String, target: f64 },
    #[error("{rule}: no threshold on the grid satisfies the objective")]
    Infeasible { rule: String },
    #[error("convergence studies require the spread-db stopping mode")]
    RequiresSpreadDb,
    #[error("no calibratable rules in config (need consensus or or-rule)")]
    NoCalibratableRules,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Derive the independent random stream of one trial from the run seed and
/// the trial index: both words are embedded verbatim in the ChaCha8 key.
pub fn derive_trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Binomial proportion estimate with its normal-approximation standard
/// error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub trials_effective: u64,
}

impl Estimate {
    pub fn from_counts(count: u64, trials: u64) -> Self {
        assert!(trials > 0, "estimate needs at least one trial");
        let value = count as f64 / trials as f64;
        Self {
            value,
            stderr: (value * (1.0 - value) / trials as f64).sqrt(),
            trials_effective: trials,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            value: 1.0 - self.value,
            stderr: self.stderr,
            trials_effective: self.trials_effective,
        }
    }
}

/// Consensus-run diagnostics recorded by [`run_trial`].
#[derive(Debug, Clone)]
pub struct ConsensusDiagnostics {
    pub iterations: u32,
    pub converged: bool,
    /// The exact-average decision statistic `mean(Y)`.
    pub x_star: f64,
    pub final_state: Vec<f64>,
}

/// Outcome of one trial: the per-rule decision statistics (each rule's
/// decision at threshold λ is `statistic > λ`), plus consensus diagnostics.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub truth: GroundTruth,
    pub statistics: Vec<(DecisionRule, f64)>,
    pub consensus: Option<ConsensusDiagnostics>,
}

impl TrialOutcome {
    pub fn decision(&self, rule: DecisionRule, threshold: &Threshold) -> Option<Decision> {
        self.statistics
            .iter()
            .find(|(r, _)| *r == rule)
            .map(|(_, stat)| decide_consensus(*stat, threshold))
    }

    /// How many nodes' finite-time decisions `x_i(K) > λ` disagree with the
    /// exact-average decision.
    pub fn node_disagreements(&self, threshold: &Threshold) -> usize {
        let Some(diag) = &self.consensus else {
            return 0;
        };
        let reference = decide_consensus(diag.x_star, threshold);
        diag.final_state
            .iter()
            .filter(|&&xi| decide_consensus(xi, threshold) != reference)
            .count()
    }
}

/// Run one trial: draw the network measurement, run the consensus protocol
/// (when the consensus rule is configured), and compute every configured
/// rule's decision statistic on the raw energies.
pub fn run_trial(
    cfg: &ScenarioConfig,
    truth: GroundTruth,
    rng: &mut impl Rng,
) -> Result<TrialOutcome, ExperimentError> {
    let n = cfg.node_count();
    let snrs = cfg.snr_per_user();
    let y = measure_network(n, truth, &snrs, cfg.detector, rng)?;

    let mut consensus = None;
    if cfg.rules.contains(&DecisionRule::Consensus) {
        let outcome = run_to_consensus(
            &y,
            &cfg.topology,
            cfg.scheme,
            cfg.failure.as_ref(),
            &cfg.stopping,
            rng,
            None,
        )?;
        consensus = Some(ConsensusDiagnostics {
            iterations: outcome.iterations,
            converged: outcome.converged,
            x_star: y.mean(),
            final_state: outcome.final_state.values().to_vec(),
        });
    }

    let mut sorted_desc: Option<Vec<f64>> = None;
    let statistics = cfg
        .rules
        .iter()
        .map(|&rule| {
            let stat = match rule {
                DecisionRule::Consensus => y.mean(),
                DecisionRule::OrRule => y.max(),
                DecisionRule::KOutOfN(k) => {
                    if k == 0 || k as usize > n {
                        return Err(DetectionError::KOutOfRange { k, n });
                    }
                    let sorted = sorted_desc.get_or_insert_with(|| {
                        let mut v = y.values().to_vec();
                        v.sort_by(|a, b| b.total_cmp(a));
                        v
                    });
                    sorted[k as usize - 1]
                }
            };
            Ok((rule, stat))
        })
        .collect::<Result<Vec<_>, DetectionError>>()?;

    Ok(TrialOutcome {
        truth,
        statistics,
        consensus,
    })
}

// ---------------------------------------------------------------------------
// Count accumulation shared by the experiment drivers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Counts {
    n_thresholds: usize,
    false_alarms: Vec<u64>,
    misses: Vec<u64>,
    disagreeing_nodes: Vec<u64>,
    h0_trials: u64,
    h1_trials: u64,
    iterations_total: u64,
    converged_runs: u64,
    consensus_runs: u64,
}

impl Counts {
    fn new(n_rules: usize, n_thresholds: usize) -> Self {
        Self {
            n_thresholds,
            false_alarms: vec![0; n_rules * n_thresholds],
            misses: vec![0; n_rules * n_thresholds],
            disagreeing_nodes: vec![0; n_thresholds],
            h0_trials: 0,
            h1_trials: 0,
            iterations_total: 0,
            converged_runs: 0,
            consensus_runs: 0,
        }
    }

    fn absorb(&mut self, outcome: &TrialOutcome, thresholds: &[Threshold]) {
        match outcome.truth {
            GroundTruth::H0 => self.h0_trials += 1,
            GroundTruth::H1 => self.h1_trials += 1,
        }
        for (r_idx, (_, stat)) in outcome.statistics.iter().enumerate() {
            for (t_idx, threshold) in thresholds.iter().enumerate() {
                let present = *stat > threshold.linear();
                let slot = r_idx * self.n_thresholds + t_idx;
                match (outcome.truth, present) {
                    (GroundTruth::H0, true) => self.false_alarms[slot] += 1,
                    (GroundTruth::H1, false) => self.misses[slot] += 1,
                    _ => {}
                }
            }
        }
        if let Some(diag) = &outcome.consensus {
            self.consensus_runs += 1;
            self.iterations_total += u64::from(diag.iterations);
            self.converged_runs += u64::from(diag.converged);
            for (t_idx, threshold) in thresholds.iter().enumerate() {
                self.disagreeing_nodes[t_idx] += outcome.node_disagreements(threshold) as u64;
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.false_alarms.iter_mut().zip(&other.false_alarms) {
            *a += b;
        }
        for (a, b) in self.misses.iter_mut().zip(&other.misses) {
            *a += b;
        }
        for (a, b) in self.disagreeing_nodes.iter_mut().zip(&other.disagreeing_nodes) {
            *a += b;
        }
        self.h0_trials += other.h0_trials;
        self.h1_trials += other.h1_trials;
        self.iterations_total += other.iterations_total;
        self.converged_runs += other.converged_runs;
        self.consensus_runs += other.consensus_runs;
        self
    }

    fn false_alarm(&self, r_idx: usize, t_idx: usize) -> Estimate {
        Estimate::from_counts(self.false_alarms[r_idx * self.n_thresholds + t_idx], self.h0_trials)
    }

    fn miss(&self, r_idx: usize, t_idx: usize) -> Estimate {
        Estimate::from_counts(self.misses[r_idx * self.n_thresholds + t_idx], self.h1_trials)
    }
}

/// Run `n_h1` H1 trials followed by `n_h0` H0 trials (stream indices
/// `stream_base..`), scanning every configured rule against `thresholds`.
fn accumulate_trials(
    cfg: &ScenarioConfig,
    thresholds: &[Threshold],
    n_h0: u64,
    n_h1: u64,
    stream_base: u64,
) -> Result<Counts, ExperimentError> {
    let total = n_h0 + n_h1;
    (0..total)
        .into_par_iter()
        .try_fold(
            || Counts::new(cfg.rules.len(), thresholds.len()),
            |mut acc, i| {
                let truth = if i < n_h1 { GroundTruth::H1 } else { GroundTruth::H0 };
                let mut rng = derive_trial_rng(cfg.seed, stream_base + i);
                let outcome = run_trial(cfg, truth, &mut rng)?;
                acc.absorb(&outcome, thresholds);
                Ok::<_, ExperimentError>(acc)
            },
        )
        .try_reduce(
            || Counts::new(cfg.rules.len(), thresholds.len()),
            |a, b| Ok(a.merge(b)),
        )
}

// ---------------------------------------------------------------------------
// ROC estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RocPoint {
    pub threshold_db: f64,
    pub pf: Estimate,
    pub pm: Estimate,
}

#[derive(Debug, Clone)]
pub struct RocCurve {
    pub rule: DecisionRule,
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Clone)]
pub struct RocStudy {
    pub curves: Vec<RocCurve>,
    pub trials_h0: u64,
    pub trials_h1: u64,
    /// Mean consensus iterations per trial, when the consensus rule ran.
    pub mean_iterations: Option<f64>,
    pub converged_fraction: Option<f64>,
    /// Mean fraction of nodes whose finite-time decision disagrees with the
    /// exact-average decision, per threshold.
    pub disagreement_fraction: Option<Vec<(f64, f64)>>,
}

/// Estimate the full ROC: false-alarm and missed-detection probabilities
/// for every configured rule at every grid threshold.
pub fn estimate_roc(cfg: &ScenarioConfig) -> Result<RocStudy, ExperimentError> {
    let thresholds: Vec<Threshold> = cfg.thresholds_db.iter().map(|&db| Threshold::from_db(db)).collect();
    let (n_h0, n_h1) = cfg.trial_split();
    let counts = accumulate_trials(cfg, &thresholds, n_h0, n_h1, 0)?;

    let curves = cfg
        .rules
        .iter()
        .enumerate()
        .map(|(r_idx, &rule)| RocCurve {
            rule,
            points: thresholds
                .iter()
                .enumerate()
                .map(|(t_idx, threshold)| RocPoint {
                    threshold_db: threshold.db(),
                    pf: counts.false_alarm(r_idx, t_idx),
                    pm: counts.miss(r_idx, t_idx),
                })
                .collect(),
        })
        .collect();

    let has_consensus = counts.consensus_runs > 0;
    Ok(RocStudy {
        curves,
        trials_h0: counts.h0_trials,
        trials_h1: counts.h1_trials,
        mean_iterations: has_consensus
            .then(|| counts.iterations_total as f64 / counts.consensus_runs as f64),
        converged_fraction: has_consensus
            .then(|| counts.converged_runs as f64 / counts.consensus_runs as f64),
        disagreement_fraction: has_consensus.then(|| {
            let node_total = (counts.consensus_runs * cfg.node_count() as u64) as f64;
            thresholds
                .iter()
                .zip(&counts.disagreeing_nodes)
                .map(|(t, &d)| (t.db(), d as f64 / node_total))
                .collect()
        }),
    })
}

// ---------------------------------------------------------------------------
// Threshold calibration
// ---------------------------------------------------------------------------

/// Invert a decreasing false-alarm curve by bisection on the linear
/// threshold, to a relative interval width of 1e-10.
pub fn calibrate_threshold(
    pf: impl Fn(f64) -> f64,
    target: f64,
    rule_label: &str,
) -> Result<Threshold, ExperimentError> {
    let mut lo = 1e-12;
    let mut hi = 1.0;
    let mut guard = 0;
    while pf(hi) > target {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(ExperimentError::Calibration {
                rule: rule_label.to_string(),
                target,
            });
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pf(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Threshold::from_linear(0.5 * (lo + hi)))
}

fn analytic_pf_for(rule: DecisionRule, n: usize, m: u32) -> Option<Box<dyn Fn(f64) -> f64>> {
    match rule {
        DecisionRule::Consensus => Some(Box::new(move |lam| {
            analytic_pf_consensus(n, m, &Threshold::from_linear(lam))
        })),
        DecisionRule::OrRule => Some(Box::new(move |lam| {
            analytic_pf_or(n, m, &Threshold::from_linear(lam))
        })),
        DecisionRule::KOutOfN(_) => None,
    }
}

// ---------------------------------------------------------------------------
// Scenario two: detection sensitivity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SensitivityCell {
    pub rule: DecisionRule,
    pub lambda_db: f64,
    pub pd: Estimate,
    /// Measured false alarm of the calibrated threshold (should sit at the
    /// target).
    pub pf_check: Estimate,
}

#[derive(Debug, Clone)]
pub struct SensitivityRow {
    pub snr_db: f64,
    pub cells: Vec<SensitivityCell>,
}

#[derive(Debug, Clone)]
pub struct SensitivityTable {
    pub pf_target: f64,
    pub rows: Vec<SensitivityRow>,
}

/// Scenario-two sweep: calibrate each rule's threshold to the false-alarm
/// target by inverting its analytic oracle, then estimate the detection
/// probability across the average-SNR grid (all users uniform at each grid
/// point), re-checking the achieved false alarm by simulation.
pub fn sweep_detection_sensitivity(
    cfg: &ScenarioConfig,
    pf_target: f64,
) -> Result<SensitivityTable, ExperimentError> {
    let n = cfg.node_count();
    let m = cfg.detector.time_bandwidth();
    let settings = cfg.sensitivity;

    let mut rules = Vec::new();
    let mut lambdas = Vec::new();
    for &rule in &cfg.rules {
        match analytic_pf_for(rule, n, m) {
            Some(pf) => {
                rules.push(rule);
                lambdas.push(calibrate_threshold(pf, pf_target, &rule.label())?);
            }
            None => log::warn!(
                "sensitivity sweep skips {} (no analytic false-alarm oracle)",
                rule.label()
            ),
        }
    }
    if rules.is_empty() {
        return Err(ExperimentError::NoCalibratableRules);
    }

    let tpp = settings.trials_per_point;
    let rows = settings
        .grid
        .points()
        .iter()
        .enumerate()
        .map(|(g, &snr_db)| {
            let mut point_cfg = cfg.clone();
            point_cfg.snr = SnrCondition::Uniform { db: snr_db };
            point_cfg.rules = rules.clone();
            let counts = accumulate_trials(
                &point_cfg,
                &lambdas,
                tpp,
                tpp,
                g as u64 * 2 * tpp,
            )?;
            // lambdas are indexed by rule, so rule r reads threshold slot r
            let cells = rules
                .iter()
                .enumerate()
                .map(|(r_idx, &rule)| SensitivityCell {
                    rule,
                    lambda_db: lambdas[r_idx].db(),
                    pd: counts.miss(r_idx, r_idx).complement(),
                    pf_check: counts.false_alarm(r_idx, r_idx),
                })
                .collect();
            Ok(SensitivityRow { snr_db, cells })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    Ok(SensitivityTable {
        pf_target,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Scenario three: fixed-threshold robustness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RobustnessRow {
    pub snr_db: f64,
    pub pm: Estimate,
    pub pf: Estimate,
}

#[derive(Debug, Clone)]
pub struct RobustnessCurve {
    pub rule: DecisionRule,
    pub lambda_db: f64,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessCurve {
    pub fn worst_pm(&self) -> f64 {
        self.rows.iter().map(|r| r.pm.value).fold(0.0, f64::max)
    }

    pub fn worst_pf(&self) -> f64 {
        self.rows.iter().map(|r| r.pf.value).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessOutcome {
    pub objective: RobustnessObjective,
    pub curves: Vec<RobustnessCurve>,
}

/// Scenario-three study: choose one fixed threshold per rule according to
/// the objective and tabulate its missed-detection and false-alarm
/// probabilities across the average-SNR grid.
///
/// * `CapPm(level)`: the largest grid threshold whose estimated missed
///   detection stays below `level` at every grid SNR (this minimizes the
///   false alarm subject to the cap).
/// * `CapPf(level)`: the smallest grid threshold whose analytic false alarm
///   is at most `level`.
/// * `Balanced`: evaluate the supplied per-rule pair as given.
pub fn fixed_threshold_robustness(
    cfg: &ScenarioConfig,
    objective: RobustnessObjective,
) -> Result<RobustnessOutcome, ExperimentError> {
    let n = cfg.node_count();
    let m = cfg.detector.time_bandwidth();
    let settings = cfg.robustness.unwrap_or(RobustnessSettings {
        objective,
        ..Default::default()
    });
    let snr_points = settings.grid.points();
    let tpp = settings.trials_per_point;

    let rules: Vec<DecisionRule> = cfg
        .rules
        .iter()
        .copied()
        .filter(|r| {
            let usable = !matches!(r, DecisionRule::KOutOfN(_));
            if !usable {
                log::warn!("robustness study skips {} (objectives are defined for consensus and or-rule)", r.label());
            }
            usable
        })
        .collect();
    if rules.is_empty() {
        return Err(ExperimentError::NoCalibratableRules);
    }

    let thresholds: Vec<Threshold> = match objective {
        RobustnessObjective::Balanced { consensus_db, or_db } => {
            let mut dbs = vec![consensus_db, or_db];
            dbs.sort_by(f64::total_cmp);
            dbs.dedup();
            dbs.into_iter().map(Threshold::from_db).collect()
        }
        _ => cfg.thresholds_db.iter().map(|&db| Threshold::from_db(db)).collect(),
    };

    // Per-SNR H1 pools, then one H0 pool (false alarm is SNR-independent).
    let mut scan_cfg = cfg.clone();
    scan_cfg.rules = rules.clone();
    let mut per_snr = Vec::with_capacity(snr_points.len());
    for (g, &snr_db) in snr_points.iter().enumerate() {
        let mut point_cfg = scan_cfg.clone();
        point_cfg.snr = SnrCondition::Uniform { db: snr_db };
        per_snr.push(accumulate_trials(&point_cfg, &thresholds, 0, tpp, g as u64 * tpp)?);
    }
    let h0_counts = accumulate_trials(
        &scan_cfg,
        &thresholds,
        tpp,
        0,
        snr_points.len() as u64 * tpp,
    )?;

    let pick_lambda = |r_idx: usize, rule: DecisionRule| -> Result<usize, ExperimentError> {
        match objective {
            RobustnessObjective::CapPm(level) => (0..thresholds.len())
                .rev()
                .find(|&t_idx| {
                    per_snr
                        .iter()
                        .all(|counts| counts.miss(r_idx, t_idx).value < level)
                })
                .ok_or(ExperimentError::Infeasible { rule: rule.label() }),
            RobustnessObjective::CapPf(level) => {
                let pf = analytic_pf_for(rule, n, m).expect("k-out-of-n filtered out above");
                (0..thresholds.len())
                    .find(|&t_idx| pf(thresholds[t_idx].linear()) <= level)
                    .ok_or(ExperimentError::Infeasible { rule: rule.label() })
            }
            RobustnessObjective::Balanced { consensus_db, or_db } => {
                let want = match rule {
                    DecisionRule::Consensus => consensus_db,
                    _ => or_db,
                };
                Ok(thresholds
                    .iter()
                    .position(|t| t.db() == want)
                    .expect("balanced thresholds were inserted above"))
            }
        }
    };

    let curves = rules
        .iter()
        .enumerate()
        .map(|(r_idx, &rule)| {
            let t_idx = pick_lambda(r_idx, rule)?;
            let rows = snr_points
                .iter()
                .zip(&per_snr)
                .map(|(&snr_db, counts)| RobustnessRow {
                    snr_db,
                    pm: counts.miss(r_idx, t_idx),
                    pf: h0_counts.false_alarm(r_idx, t_idx),
                })
                .collect();
            Ok(RobustnessCurve {
                rule,
                lambda_db: thresholds[t_idx].db(),
                rows,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    Ok(RobustnessOutcome { objective, curves })
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub failure_probability: f64,
    pub repetitions: u32,
    pub median_iterations: f64,
    pub q1_iterations: f64,
    pub q3_iterations: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// One sample run history per epsilon, for trace output.
    pub traces: Vec<(f64, Vec<Vec<f64>>)>,
}

fn quantile(sorted: &[u32], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 * (1.0 - frac) + sorted[hi] as f64 * frac
}

/// Iteration-count study under the spread-dB stopping rule: for each step
/// size, repeat measurement + consensus (H1 energies under the configured
/// SNR condition) and report median and quartile iteration counts.
pub fn convergence_study(
    cfg: &ScenarioConfig,
    epsilons: &[f64],
) -> Result<ConvergenceStudy, ExperimentError> {
    if cfg.stopping.mode != StopMode::SpreadDb {
        return Err(ExperimentError::RequiresSpreadDb);
    }
    let reps = cfg.convergence.repetitions;
    let snrs = cfg.snr_per_user();
    let p = cfg
        .failure
        .map(|f| f.failure_probability())
        .unwrap_or(0.0);

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (e_idx, &epsilon) in epsilons.iter().enumerate() {
        let scheme = crate::consensus::WeightScheme::LaplacianEpsilon(epsilon);
        crate::consensus::weight_matrix(&cfg.topology, scheme)?;

        let outcomes: Vec<(u32, bool)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let stream = e_idx as u64 * reps as u64 + r as u64;
                let mut rng = derive_trial_rng(cfg.seed, stream);
                let y = measure_network(cfg.node_count(), GroundTruth::H1, &snrs, cfg.detector, &mut rng)?;
                let out = run_to_consensus(
                    &y,
                    &cfg.topology,
                    scheme,
                    cfg.failure.as_ref(),
                    &cfg.stopping,
                    &mut rng,
                    None,
                )?;
                Ok::<_, ExperimentError>((out.iterations, out.converged))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut iterations: Vec<u32> = outcomes.iter().map(|&(it, _)| it).collect();
        iterations.sort_unstable();
        let converged = outcomes.iter().filter(|&&(_, c)| c).count();
        rows.push(ConvergenceRow {
            epsilon,
            failure_probability: p,
            repetitions: reps,
            median_iterations: quantile(&iterations, 0.5),
            q1_iterations: quantile(&iterations, 0.25),
            q3_iterations: quantile(&iterations, 0.75),
            converged_fraction: converged as f64 / reps as f64,
        });

        // One traced sample run per epsilon (stream index past the study's).
        let mut rng = derive_trial_rng(cfg.seed, u64::MAX - e_idx as u64);
        let y = measure_network(cfg.node_count(), GroundTruth::H1, &snrs, cfg.detector, &mut rng)?;
        let traced = run_to_consensus(
            &y,
            &cfg.topology,
            scheme,
            cfg.failure.as_ref(),
            &cfg.stopping,
            &mut rng,
            Some(cfg.stopping.max_iterations as usize + 1),
        )?;
        traces.push((epsilon, traced.history.expect("tracing was requested")));
    }

    Ok(ConvergenceStudy { rows, traces })
}
