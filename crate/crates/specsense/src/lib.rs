//! Distributed consensus-based cooperative spectrum sensing.
//!
//! Secondary users in a cognitive-radio ad hoc network each measure the
//! energy in a licensed band, then agree on the network-wide average by
//! iterating neighbor-only exchanges; comparing that average against a
//! threshold decides whether the primary user is present. This crate
//! simulates the whole pipeline:
//!
//! * [`graph`] — network topologies, Laplacians, random link-failure
//!   snapshots;
//! * [`sensing`] — energy-detector output laws (chi-square families,
//!   Rayleigh fading), sampled directly at the decision-statistic level;
//! * [`consensus`] — the average-consensus iteration over fixed and random
//!   graphs with Laplacian-ε or Metropolis weights and finite-time stopping;
//! * [`spectral`] — convergence-rate analytics (α(ε), spectral gap, and the
//!   mean-square contraction factor ρ under link failures);
//! * [`detection`] — consensus/OR/k-out-of-n decision rules and analytic
//!   false-alarm oracles;
//! * [`experiments`] — a deterministic, parallel Monte Carlo harness for
//!   ROC curves, sensitivity sweeps, threshold-robustness studies, and
//!   convergence studies.

pub mod consensus;
pub mod detection;
pub mod experiments;
pub mod fixtures;
pub mod graph;
pub mod sensing;
pub mod spectral;

pub use consensus::{
    epsilon_upper_bound, run_to_consensus, step_fixed, step_random, weight_matrix, ConsensusState,
    RunOutcome, StopMode, StoppingRule, WeightScheme,
};
pub use detection::{
    analytic_pf_consensus, analytic_pf_or, analytic_pf_single, decide_consensus,
    decide_k_out_of_n, decide_or_rule, Decision, Threshold,
};
pub use experiments::{
    convergence_study, estimate_roc, fixed_threshold_robustness, run_trial,
    sweep_detection_sensitivity, DecisionRule, Estimate, RobustnessObjective, ScenarioConfig,
    SnrCondition,
};
pub use graph::{sample_snapshot, GraphSnapshot, LinkFailureModel, Topology};
pub use sensing::{
    measure_network, sample_energy_h0, sample_energy_h1_awgn, sample_energy_h1_rayleigh,
    snr_db_to_linear, DetectorConfig, EnergyVector, GroundTruth, SnrSpec,
};
pub use spectral::{
    alpha, laplacian_spectrum, rho_closed_form, spectral_gap, verify_ms_bound, SpectralReport,
};
