//! Experiment configuration: a TOML file with flat sections mirroring the
//! scenario parameters. Unknown keys are rejected. Relative topology paths
//! resolve against the config file's directory.
//!
//! ```toml
//! topology = "data/topology_10.txt"
//! m = 5
//! trials = 400000            # total; split across H0/H1 by `prior`
//! seed = 1
//! prior = 0.5
//! rules = ["consensus", "or-rule"]    # also "k-out-of-n:<k>"
//!
//! [thresholds]               # either an explicit list...
//! # list_db = [11.0, 11.5]
//! start_db = 11.0            # ...or an inclusive range
//! stop_db = 15.2
//! step_db = 0.1
//!
//! [snr]
//! kind = "uniform"           # or "range-even" with lo_db/hi_db
//! db = 10.0
//!
//! [scheme]
//! kind = "laplacian-epsilon" # or "metropolis"
//! epsilon = 0.19
//!
//! [stopping]
//! mode = "exact-average"     # or "spread-db"
//! max_iterations = 500
//!
//! # optional sections: [failure], [sensitivity], [robustness], [convergence]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::consensus::{weight_matrix, StopMode, StoppingRule, WeightScheme};
use crate::graph::{GraphError, LinkFailureModel, Topology};
use crate::sensing::{DetectorConfig, SnrSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("{path}: {source}")]
    Topology { path: PathBuf, source: GraphError },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Which fusion rules the experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionRule {
    Consensus,
    OrRule,
    KOutOfN(u32),
}

impl DecisionRule {
    pub fn label(&self) -> String {
        match self {
            DecisionRule::Consensus => "consensus".into(),
            DecisionRule::OrRule => "or-rule".into(),
            DecisionRule::KOutOfN(k) => format!("k-out-of-n:{k}"),
        }
    }

    fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "consensus" => Ok(DecisionRule::Consensus),
            "or-rule" => Ok(DecisionRule::OrRule),
            other => {
                if let Some(k) = other.strip_prefix("k-out-of-n:") {
                    let k: u32 = k.parse().map_err(|_| {
                        ConfigError::Invalid(format!("bad k in rule {other:?}"))
                    })?;
                    if k == 0 {
                        return Err(ConfigError::Invalid("k-out-of-n needs k >= 1".into()));
                    }
                    Ok(DecisionRule::KOutOfN(k))
                } else {
                    Err(ConfigError::Invalid(format!(
                        "unknown rule {other:?} (expected \"consensus\", \"or-rule\", or \"k-out-of-n:<k>\")"
                    )))
                }
            }
        }
    }
}

/// Per-user average-SNR assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrCondition {
    /// Every user has the same average SNR.
    Uniform { db: f64 },
    /// User `i` of `n` gets `lo + i (hi - lo)/(n - 1)` dB (evenly spaced).
    RangeEven { lo_db: f64, hi_db: f64 },
}

impl SnrCondition {
    pub fn per_user(&self, n: usize) -> Vec<SnrSpec> {
        match *self {
            SnrCondition::Uniform { db } => vec![SnrSpec::from_db(db); n],
            SnrCondition::RangeEven { lo_db, hi_db } => (0..n)
                .map(|i| {
                    let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                    SnrSpec::from_db(lo_db + frac * (hi_db - lo_db))
                })
                .collect(),
        }
    }
}

/// Threshold-robustness goal (scenario-three style).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RobustnessObjective {
    /// Largest grid threshold keeping missed detection below `level` across
    /// the whole SNR grid; reports the resulting worst-case false alarm.
    CapPm(f64),
    /// Smallest grid threshold whose analytic false alarm is at most
    /// `level`; reports the resulting worst-case missed detection.
    CapPf(f64),
    /// Evaluate a supplied fixed pair (consensus, OR) of thresholds.
    Balanced { consensus_db: f64, or_db: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SnrGrid {
    pub lo_db: f64,
    pub hi_db: f64,
    pub step_db: f64,
}

impl SnrGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi_db - self.lo_db) / self.step_db).round() as usize + 1;
        (0..count).map(|i| self.lo_db + i as f64 * self.step_db).collect()
    }
}

/// Settings for the detection-sensitivity sweep (scenario two).
#[derive(Debug, Clone, Copy)]
pub struct SensitivitySettings {
    pub pf_target: f64,
    pub grid: SnrGrid,
    pub trials_per_point: u64,
}

impl Default for SensitivitySettings {
    fn default() -> Self {
        Self {
            pf_target: 0.1,
            grid: SnrGrid {
                lo_db: 5.0,
                hi_db: 10.0,
                step_db: 0.2,
            },
            trials_per_point: 100_000,
        }
    }
}

/// Settings for the fixed-threshold robustness study (scenario three).
#[derive(Debug, Clone, Copy)]
pub struct RobustnessSettings {
    pub objective: RobustnessObjective,
    pub grid: SnrGrid,
    pub trials_per_point: u64,
}

impl Default for RobustnessSettings {
    fn default() -> Self {
        Self {
            objective: RobustnessObjective::CapPm(1e-2),
            grid: SnrGrid {
                lo_db: 5.0,
                hi_db: 10.0,
                step_db: 1.0,
            },
            trials_per_point: 200_000,
        }
    }
}

/// Settings for the convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceSettings {
    pub epsilons: Vec<f64>,
    pub repetitions: u32,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.19],
            repetitions: 301,
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub detector: DetectorConfig,
    pub snr: SnrCondition,
    pub scheme: WeightScheme,
    pub failure: Option<LinkFailureModel>,
    pub stopping: StoppingRule,
    pub rules: Vec<DecisionRule>,
    pub thresholds_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub prior: f64,
    pub sensitivity: SensitivitySettings,
    pub robustness: Option<RobustnessSettings>,
    pub convergence: ConvergenceSettings,
}

impl ScenarioConfig {
    /// Load and validate a config file; `seed_override` (CLI flag) takes
    /// precedence over the file's seed, which takes precedence over 0.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_file(file, base, seed_override)
    }

    fn from_file(
        file: ScenarioFile,
        base: &Path,
        seed_override: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let topo_path = base.join(&file.topology);
        let topo_text = fs::read_to_string(&topo_path).map_err(|source| ConfigError::Io {
            path: topo_path.clone(),
            source,
        })?;
        let topology = Topology::parse(&topo_text).map_err(|source| ConfigError::Topology {
            path: topo_path,
            source,
        })?;

        let detector = DetectorConfig::new(file.m)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let rules = file
            .rules
            .iter()
            .map(|s| DecisionRule::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        if rules.is_empty() {
            return Err(ConfigError::Invalid("rules must be non-empty".into()));
        }
        for rule in &rules {
            if let DecisionRule::KOutOfN(k) = rule {
                if *k as usize > topology.node_count() {
                    return Err(ConfigError::Invalid(format!(
                        "k-out-of-n rule with k={k} exceeds node count {}",
                        topology.node_count()
                    )));
                }
            }
        }

        let thresholds_db = file.thresholds.resolve()?;
        let snr = file.snr.resolve()?;
        let scheme = file.scheme.resolve()?;
        // Surface an invalid epsilon/topology pairing at load time.
        weight_matrix(&topology, scheme).map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let failure = file
            .failure
            .map(|f| LinkFailureModel::new(f.probability))
            .transpose()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let stopping = file.stopping.resolve()?;

        if file.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        let prior = file.prior.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&prior) {
            return Err(ConfigError::Invalid(format!("prior {prior} outside [0, 1]")));
        }

        Ok(Self {
            topology,
            detector,
            snr,
            scheme,
            failure,
            stopping,
            rules,
            thresholds_db,
            trials: file.trials,
            seed: seed_override.or(file.seed).unwrap_or(0),
            prior,
            sensitivity: file
                .sensitivity
                .map(|s| s.resolve())
                .transpose()?
                .unwrap_or_default(),
            robustness: file.robustness.map(|r| r.resolve()).transpose()?,
            convergence: file
                .convergence
                .map(|c| c.resolve())
                .transpose()?
                .unwrap_or_default(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    /// Per-user SNR declarations under the configured condition.
    pub fn snr_per_user(&self) -> Vec<SnrSpec> {
        self.snr.per_user(self.node_count())
    }

    /// Deterministic split of `trials` into H1/H0 counts by the prior.
    pub fn trial_split(&self) -> (u64, u64) {
        let h1 = (self.trials as f64 * self.prior).round() as u64;
        (self.trials - h1, h1)
    }
}

fn grid_from(lo: f64, hi: f64, step: f64, what: &str) -> Result<Vec<f64>, ConfigError> {
    if !(step > 0.0) || hi < lo {
        return Err(ConfigError::Invalid(format!(
            "{what}: need lo <= hi and step > 0 (got {lo}, {hi}, {step})"
        )));
    }
    let count = ((hi - lo) / step).round() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

// ---------------------------------------------------------------------------
// Raw TOML layer
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    topology: String,
    m: u32,
    trials: u64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    prior: Option<f64>,
    rules: Vec<String>,
    thresholds: ThresholdsFile,
    snr: SnrFile,
    scheme: SchemeFile,
    #[serde(default)]
    failure: Option<FailureFile>,
    stopping: StoppingFile,
    #[serde(default)]
    sensitivity: Option<SensitivityFile>,
    #[serde(default)]
    robustness: Option<RobustnessFile>,
    #[serde(default)]
    convergence: Option<ConvergenceFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdsFile {
    #[serde(default)]
    list_db: Option<Vec<f64>>,
    #[serde(default)]
    start_db: Option<f64>,
    #[serde(default)]
    stop_db: Option<f64>,
    #[serde(default)]
    step_db: Option<f64>,
}

impl ThresholdsFile {
    fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        let grid = match (self.list_db.as_ref(), self.start_db, self.stop_db, self.step_db) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                grid_from(start, stop, step, "thresholds")?
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "thresholds: give either list_db or start_db/stop_db/step_db".into(),
                ))
            }
        };
        if grid.is_empty() {
            return Err(ConfigError::Invalid("thresholds: empty grid".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(
                "thresholds: grid must be strictly increasing".into(),
            ));
        }
        Ok(grid)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SnrFile {
    Uniform { db: f64 },
    RangeEven { lo_db: f64, hi_db: f64 },
}

impl SnrFile {
    fn resolve(&self) -> Result<SnrCondition, ConfigError> {
        match *self {
            SnrFile::Uniform { db } => Ok(SnrCondition::Uniform { db }),
            SnrFile::RangeEven { lo_db, hi_db } => {
                if lo_db > hi_db {
                    return Err(ConfigError::Invalid(format!(
                        "snr range-even: lo_db {lo_db} > hi_db {hi_db}"
                    )));
                }
                Ok(SnrCondition::RangeEven { lo_db, hi_db })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SchemeFile {
    LaplacianEpsilon { epsilon: f64 },
    Metropolis,
}

impl SchemeFile {
    fn resolve(&self) -> Result<WeightScheme, ConfigError> {
        match *self {
            SchemeFile::LaplacianEpsilon { epsilon } => {
                Ok(WeightScheme::LaplacianEpsilon(epsilon))
            }
            SchemeFile::Metropolis => Ok(WeightScheme::Metropolis),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FailureFile {
    probability: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoppingFile {
    mode: String,
    #[serde(default)]
    spread_tolerance_db: Option<f64>,
    #[serde(default)]
    exact_tolerance: Option<f64>,
    max_iterations: u32,
}

impl StoppingFile {
    fn resolve(&self) -> Result<StoppingRule, ConfigError> {
        let mode = match self.mode.as_str() {
            "spread-db" => StopMode::SpreadDb,
            "exact-average" => StopMode::ExactAverage,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "stopping mode {other:?} (expected \"spread-db\" or \"exact-average\")"
                )))
            }
        };
        let rule = StoppingRule {
            mode,
            spread_tolerance_db: self.spread_tolerance_db.unwrap_or(1.0),
            exact_tolerance: self.exact_tolerance.unwrap_or(1e-9),
            max_iterations: self.max_iterations,
        };
        rule.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(rule)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensitivityFile {
    #[serde(default)]
    pf_target: Option<f64>,
    #[serde(default)]
    snr_lo_db: Option<f64>,
    #[serde(default)]
    snr_hi_db: Option<f64>,
    #[serde(default)]
    snr_step_db: Option<f64>,
    #[serde(default)]
    trials_per_point: Option<u64>,
}

impl SensitivityFile {
    fn resolve(&self) -> Result<SensitivitySettings, ConfigError> {
        let d = SensitivitySettings::default();
        let s = SensitivitySettings {
            pf_target: self.pf_target.unwrap_or(d.pf_target),
            grid: SnrGrid {
                lo_db: self.snr_lo_db.unwrap_or(d.grid.lo_db),
                hi_db: self.snr_hi_db.unwrap_or(d.grid.hi_db),
                step_db: self.snr_step_db.unwrap_or(d.grid.step_db),
            },
            trials_per_point: self.trials_per_point.unwrap_or(d.trials_per_point),
        };
        if !(s.pf_target > 0.0 && s.pf_target < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "sensitivity pf_target {} outside (0, 1)",
                s.pf_target
            )));
        }
        grid_from(s.grid.lo_db, s.grid.hi_db, s.grid.step_db, "sensitivity snr grid")?;
        if s.trials_per_point == 0 {
            return Err(ConfigError::Invalid("sensitivity trials_per_point must be >= 1".into()));
        }
        Ok(s)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobustnessFile {
    objective: String,
    #[serde(default)]
    level: Option<f64>,
    #[serde(default)]
    balanced_consensus_db: Option<f64>,
    #[serde(default)]
    balanced_or_db: Option<f64>,
    #[serde(default)]
    snr_lo_db: Option<f64>,
    #[serde(default)]
    snr_hi_db: Option<f64>,
    #[serde(default)]
    snr_step_db: Option<f64>,
    #[serde(default)]
    trials_per_point: Option<u64>,
}

impl RobustnessFile {
    fn resolve(&self) -> Result<RobustnessSettings, ConfigError> {
        let objective = match self.objective.as_str() {
            "cap-pm" => RobustnessObjective::CapPm(self.level.ok_or_else(|| {
                ConfigError::Invalid("robustness cap-pm needs `level`".into())
            })?),
            "cap-pf" => RobustnessObjective::CapPf(self.level.ok_or_else(|| {
                ConfigError::Invalid("robustness cap-pf needs `level`".into())
            })?),
            "balanced" => RobustnessObjective::Balanced {
                consensus_db: self.balanced_consensus_db.ok_or_else(|| {
                    ConfigError::Invalid("robustness balanced needs `balanced_consensus_db`".into())
                })?,
                or_db: self.balanced_or_db.ok_or_else(|| {
                    ConfigError::Invalid("robustness balanced needs `balanced_or_db`".into())
                })?,
            },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "robustness objective {other:?} (expected \"cap-pm\", \"cap-pf\", or \"balanced\")"
                )))
            }
        };
        if let RobustnessObjective::CapPm(level) | RobustnessObjective::CapPf(level) = objective {
            if !(level > 0.0 && level < 1.0) {
                return Err(ConfigError::Invalid(format!("robustness level {level} outside (0, 1)")));
            }
        }
        let d = RobustnessSettings::default();
        let s = RobustnessSettings {
            objective,
            grid: SnrGrid {
                lo_db: self.snr_lo_db.unwrap_or(d.grid.lo_db),
                hi_db: self.snr_hi_db.unwrap_or(d.grid.hi_db),
                step_db: self.snr_step_db.unwrap_or(d.grid.step_db),
            },
            trials_per_point: self.trials_per_point.unwrap_or(d.trials_per_point),
        };
        grid_from(s.grid.lo_db, s.grid.hi_db, s.grid.step_db, "robustness snr grid")?;
        if s.trials_per_point == 0 {
            return Err(ConfigError::Invalid("robustness trials_per_point must be >= 1".into()));
        }
        Ok(s)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvergenceFile {
    #[serde(default)]
    epsilons: Option<Vec<f64>>,
    #[serde(default)]
    repetitions: Option<u32>,
}

impl ConvergenceFile {
    fn resolve(&self) -> Result<ConvergenceSettings, ConfigError> {
        let d = ConvergenceSettings::default();
        let s = ConvergenceSettings {
            epsilons: self.epsilons.clone().unwrap_or(d.epsilons),
            repetitions: self.repetitions.unwrap_or(d.repetitions),
        };
        if s.epsilons.is_empty() {
            return Err(ConfigError::Invalid("convergence epsilons must be non-empty".into()));
        }
        if s.repetitions == 0 {
            return Err(ConfigError::Invalid("convergence repetitions must be >= 1".into()));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_files(config_body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let topo = crate::fixtures::ten_node();
        fs::write(dir.path().join("topo.txt"), topo.to_text()).unwrap();
        let cfg_path = dir.path().join("scenario.toml");
        let mut f = fs::File::create(&cfg_path).unwrap();
        f.write_all(config_body.as_bytes()).unwrap();
        (dir, cfg_path)
    }

    const BASE: &str = r#"
topology = "topo.txt"
m = 5
trials = 1000
seed = 7
rules = ["consensus", "or-rule", "k-out-of-n:6"]

[thresholds]
start_db = 11.0
stop_db = 12.0
step_db = 0.5

[snr]
kind = "uniform"
db = 10.0

[scheme]
kind = "laplacian-epsilon"
epsilon = 0.19

[stopping]
mode = "exact-average"
max_iterations = 500
"#;

    #[test]
    fn parses_full_config() {
        let (_dir, path) = write_files(BASE);
        let cfg = ScenarioConfig::load(&path, None).unwrap();
        assert_eq!(cfg.node_count(), 10);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.thresholds_db, vec![11.0, 11.5, 12.0]);
        assert_eq!(cfg.rules.len(), 3);
        assert_eq!(cfg.trial_split(), (500, 500));
        assert_eq!(cfg.sensitivity.pf_target, 0.1);
    }

    #[test]
    fn seed_precedence_flag_over_file() {
        let (_dir, path) = write_files(BASE);
        assert_eq!(ScenarioConfig::load(&path, Some(99)).unwrap().seed, 99);
        let no_seed = BASE.replace("seed = 7\n", "");
        let (_dir2, path2) = write_files(&no_seed);
        assert_eq!(ScenarioConfig::load(&path2, None).unwrap().seed, 0);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = BASE.replace("m = 5", "m = 5\nbogus_key = 1");
        let (_dir, path) = write_files(&bad);
        let err = ScenarioConfig::load(&path, None).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn missing_config_names_path() {
        let err = ScenarioConfig::load(Path::new("/nonexistent/x.toml"), None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.toml"));
    }

    #[test]
    fn rejects_invalid_epsilon_for_topology() {
        let bad = BASE.replace("epsilon = 0.19", "epsilon = 0.25");
        let (_dir, path) = write_files(&bad);
        let err = ScenarioConfig::load(&path, None).unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");
    }

    #[test]
    fn rejects_oversized_k() {
        let bad = BASE.replace("k-out-of-n:6", "k-out-of-n:11");
        let (_dir, path) = write_files(&bad);
        assert!(ScenarioConfig::load(&path, None).is_err());
    }

    #[test]
    fn range_even_assignment() {
        let cond = SnrCondition::RangeEven {
            lo_db: 5.0,
            hi_db: 9.0,
        };
        let snrs = cond.per_user(10);
        assert_eq!(snrs.len(), 10);
        assert!((snrs[0].db() - 5.0).abs() < 1e-12);
        assert!((snrs[9].db() - 9.0).abs() < 1e-12);
        assert!((snrs[1].db() - (5.0 + 4.0 / 9.0)).abs() < 1e-12);
        // single user degenerates to the low end
        assert!((cond.per_user(1)[0].db() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_list_alternative() {
        let alt = BASE.replace(
            "[thresholds]\nstart_db = 11.0\nstop_db = 12.0\nstep_db = 0.5",
            "[thresholds]\nlist_db = [10.0, 11.0, 14.8]",
        );
        let (_dir, path) = write_files(&alt);
        let cfg = ScenarioConfig::load(&path, None).unwrap();
        assert_eq!(cfg.thresholds_db, vec![10.0, 11.0, 14.8]);

        let bad = BASE.replace(
            "[thresholds]\nstart_db = 11.0\nstop_db = 12.0\nstep_db = 0.5",
            "[thresholds]\nlist_db = [12.0, 11.0]",
        );
        let (_dir2, path2) = write_files(&bad);
        assert!(ScenarioConfig::load(&path2, None).is_err());
    }

    #[test]
    fn optional_sections_resolve() {
        let extended = format!(
            "{BASE}\n[failure]\nprobability = 0.4\n\n[sensitivity]\npf_target = 0.1\ntrials_per_point = 1000\n\n[robustness]\nobjective = \"cap-pm\"\nlevel = 0.01\n\n[convergence]\nepsilons = [0.1, 0.19]\nrepetitions = 11\n"
        );
        let (_dir, path) = write_files(&extended);
        let cfg = ScenarioConfig::load(&path, None).unwrap();
        assert!((cfg.failure.unwrap().failure_probability() - 0.4).abs() < 1e-15);
        assert_eq!(cfg.sensitivity.trials_per_point, 1000);
        assert!(matches!(
            cfg.robustness.unwrap().objective,
            RobustnessObjective::CapPm(level) if (level - 0.01).abs() < 1e-15
        ));
        assert_eq!(cfg.convergence.repetitions, 11);
    }
}
