//! Statistical model of the energy-detector output, sampled directly at the
//! decision-statistic level (no waveform simulation).
//!
//! With time-bandwidth product `m`, the detector output is
//!
//! * primary absent:  central chi-square with `2m` degrees of freedom;
//! * primary present, AWGN with SNR γ: non-central chi-square, `2m` degrees
//!   of freedom, non-centrality `2γ`;
//! * primary present, Rayleigh fading with average SNR γ̄: the sum of a
//!   central chi-square with `2m - 2` degrees of freedom and an independent
//!   exponential with mean `2(γ̄ + 1)`.
//!
//! The exponential "parameter" is the mean, so the Rayleigh-average energy
//! `(2m - 2) + 2(γ̄ + 1) = 2m + 2γ̄` agrees with the AWGN mean in expectation
//! over the fading. Everything is generated and iterated in linear scale; dB
//! appears only at configuration boundaries.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("time-bandwidth product must be at least 1")]
    ZeroTimeBandwidth,
    #[error("Rayleigh model requires m >= 2 (got m = {0})")]
    RayleighRequiresM2(u32),
    #[error("SNR list has {got} entries for {expected} users")]
    SnrLengthMismatch { got: usize, expected: usize },
}

/// Energy-detector configuration: the integer time-bandwidth product `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorConfig {
    m: u32,
}

impl DetectorConfig {
    pub fn new(m: u32) -> Result<Self, SensingError> {
        if m == 0 {
            return Err(SensingError::ZeroTimeBandwidth);
        }
        Ok(Self { m })
    }

    pub fn time_bandwidth(&self) -> u32 {
        self.m
    }

    /// Degrees of freedom of the no-signal energy distribution (`2m`).
    pub fn degrees_of_freedom(&self) -> u32 {
        2 * self.m
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { m: 5 }
    }
}

/// Average SNR of one user, configured in dB; the linear value is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    db: f64,
}

impl SnrSpec {
    pub fn from_db(db: f64) -> Self {
        Self { db }
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn linear(&self) -> f64 {
        snr_db_to_linear(self.db)
    }
}

/// Whether the primary user is actually transmitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruth {
    H0,
    H1,
}

/// Per-user energy-detector outputs in linear scale; the consensus initial
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVector(Vec<f64>);

impl EnergyVector {
    /// Wrap raw energies; all entries must be non-negative and finite.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "energies must be finite and non-negative"
        );
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Standard dB convention: `10^(db/10)`.
pub fn snr_db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One no-signal energy draw: central chi-square with `2m` degrees of
/// freedom, realized as Gamma(shape `m`, scale 2).
pub fn sample_energy_h0(cfg: DetectorConfig, rng: &mut impl Rng) -> f64 {
    Gamma::new(cfg.m as f64, 2.0)
        .expect("m >= 1 enforced by DetectorConfig")
        .sample(rng)
}

/// One signal-present draw under a fixed (non-fading) channel: non-central
/// chi-square with `2m` degrees of freedom and non-centrality `2γ`, realized
/// as the square of one normal with mean `sqrt(2γ)` plus an independent
/// chi-square with `2m - 1` degrees of freedom.
pub fn sample_energy_h1_awgn(cfg: DetectorConfig, snr_linear: f64, rng: &mut impl Rng) -> f64 {
    let shifted: f64 = Normal::new((2.0 * snr_linear).sqrt(), 1.0)
        .expect("finite mean")
        .sample(rng);
    let rest = Gamma::new((2 * cfg.m - 1) as f64 / 2.0, 2.0)
        .expect("m >= 1")
        .sample(rng);
    shifted * shifted + rest
}

/// One signal-present draw under Rayleigh fading with average SNR γ̄:
/// chi-square(`2m - 2`) plus an independent exponential with mean
/// `2(γ̄ + 1)`. Requires `m >= 2`.
pub fn sample_energy_h1_rayleigh(
    cfg: DetectorConfig,
    snr: SnrSpec,
    rng: &mut impl Rng,
) -> Result<f64, SensingError> {
    if cfg.m < 2 {
        return Err(SensingError::RayleighRequiresM2(cfg.m));
    }
    let chi = Gamma::new((cfg.m - 1) as f64, 2.0)
        .expect("m >= 2")
        .sample(rng);
    let mean = 2.0 * (snr.linear() + 1.0);
    let exp = Exp::new(1.0 / mean).expect("positive rate").sample(rng);
    Ok(chi + exp)
}

/// Draw the whole network's measurement vector: i.i.d. across users (no
/// spatial correlation). Under `H0` every user draws the no-signal law
/// regardless of `snrs`; under `H1` user `i` draws the Rayleigh law at
/// `snrs[i]`.
pub fn measure_network(
    n: usize,
    truth: GroundTruth,
    snrs: &[SnrSpec],
    cfg: DetectorConfig,
    rng: &mut impl Rng,
) -> Result<EnergyVector, SensingError> {
    if snrs.len() != n {
        return Err(SensingError::SnrLengthMismatch {
            got: snrs.len(),
            expected: n,
        });
    }
    let values = match truth {
        GroundTruth::H0 => (0..n).map(|_| sample_energy_h0(cfg, rng)).collect(),
        GroundTruth::H1 => snrs
            .iter()
            .map(|&snr| sample_energy_h1_rayleigh(cfg, snr, rng))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(EnergyVector::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N_SAMPLES: usize = 1_000_000;

    fn cfg5() -> DetectorConfig {
        DetectorConfig::new(5).unwrap()
    }

    fn moments(samples: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let values: Vec<f64> = samples.collect();
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var, n)
    }

    #[test]
    fn db_conversions() {
        assert_eq!(snr_db_to_linear(0.0), 1.0);
        assert_eq!(snr_db_to_linear(10.0), 10.0);
        assert!((snr_db_to_linear(5.0) - 3.16228).abs() < 1e-5);
    }

    #[test]
    fn h0_moments_and_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let values: Vec<f64> = (0..N_SAMPLES)
            .map(|_| sample_energy_h0(cfg5(), &mut rng))
            .collect();
        assert!(values.iter().all(|&v| v >= 0.0));
        let mean = values.iter().sum::<f64>() / N_SAMPLES as f64;
        // chi-square(10): mean 10, variance 20
        let mean_tol = 3.0 * (20f64 / N_SAMPLES as f64).sqrt();
        assert!((mean - 10.0).abs() < mean_tol, "mean {mean}");
        // 18.307 is the chi-square(10) 95th percentile
        let above = values.iter().filter(|&&v| v > 18.307).count() as f64 / N_SAMPLES as f64;
        let tail_tol = 3.0 * (0.05 * 0.95 / N_SAMPLES as f64).sqrt();
        assert!((above - 0.05).abs() < tail_tol, "tail fraction {above}");
    }

    #[test]
    fn h0_matches_incomplete_gamma_cdf_by_ks() {
        // Kolmogorov-Smirnov against the regularized incomplete gamma CDF,
        // 1% critical value 1.628/sqrt(n).
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut values: Vec<f64> = (0..n).map(|_| sample_energy_h0(cfg5(), &mut rng)).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        let cdf = |x: f64| statrs::function::gamma::gamma_lr(5.0, x / 2.0);
        let mut ks: f64 = 0.0;
        for (i, &x) in values.iter().enumerate() {
            let f = cdf(x);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let crit = 1.628 / (n as f64).sqrt();
        assert!(ks < crit, "KS statistic {ks} above 1% critical value {crit}");
    }

    #[test]
    fn awgn_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let (mean, var, n) = moments((0..N_SAMPLES).map(|_| {
            sample_energy_h1_awgn(cfg5(), 10.0, &mut rng)
        }));
        // non-central chi-square(10, nc=20): mean 30, variance 2*10+4*20 = 100
        let mean_tol = 3.0 * (100f64 / n as f64).sqrt();
        assert!((mean - 30.0).abs() < mean_tol, "mean {mean}");
        // 4 standard errors of the variance estimator, from the fourth
        // central moment 48(k+4nc) + 12(k+2nc)^2 = 34320
        let var_tol = 4.0 * ((34_320f64 - 10_000.0) / n as f64).sqrt();
        assert!((var - 100.0).abs() < var_tol, "variance {var}");
    }

    #[test]
    fn awgn_zero_snr_limit_recovers_h0_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let (mean, _, n) = moments((0..N_SAMPLES).map(|_| {
            sample_energy_h1_awgn(cfg5(), 1e-12, &mut rng)
        }));
        let tol = 3.0 * (20f64 / n as f64).sqrt();
        assert!((mean - 10.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn rayleigh_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let snr = SnrSpec::from_db(10.0); // linear 10
        let (mean, var, n) = moments((0..N_SAMPLES).map(|_| {
            sample_energy_h1_rayleigh(cfg5(), snr, &mut rng).unwrap()
        }));
        // (2m-2) + 2(10+1) = 30; variance 2(2m-2) + (2*11)^2 = 16 + 484 = 500
        let mean_tol = 3.0 * (500f64 / n as f64).sqrt();
        assert!((mean - 30.0).abs() < mean_tol, "mean {mean}");
        // mu4 = mu4_chi2(8) + mu4_exp(22) + 6*var_chi*var_exp = 2_155_920
        let var_tol = 4.0 * ((2_155_920f64 - 250_000.0) / n as f64).sqrt();
        assert!((var - 500.0).abs() < var_tol, "variance {var}");
    }

    #[test]
    fn rayleigh_zero_snr_mean_equals_h0_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        let snr = SnrSpec::from_db(-120.0); // essentially zero linear SNR
        let (mean, _, n) = moments((0..200_000).map(|_| {
            sample_energy_h1_rayleigh(cfg5(), snr, &mut rng).unwrap()
        }));
        // (2m-2) + 2(0+1) = 2m = 10
        let tol = 4.0 * (24f64 / n as f64).sqrt();
        assert!((mean - 10.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn rayleigh_rejects_small_m() {
        let cfg = DetectorConfig::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_energy_h1_rayleigh(cfg, SnrSpec::from_db(10.0), &mut rng).unwrap_err();
        assert!(matches!(err, SensingError::RayleighRequiresM2(1)));
    }

    #[test]
    fn measure_network_checks_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = measure_network(3, GroundTruth::H0, &[SnrSpec::from_db(10.0)], cfg5(), &mut rng);
        assert!(matches!(
            err,
            Err(SensingError::SnrLengthMismatch { got: 1, expected: 3 })
        ));
    }

    #[test]
    fn h0_measurement_ignores_snrs() {
        // Same seed, different SNR declarations: bit-identical H0 output.
        let snrs_a = vec![SnrSpec::from_db(10.0); 10];
        let snrs_b: Vec<SnrSpec> = (0..10).map(|i| SnrSpec::from_db(i as f64)).collect();
        let mut rng_a = ChaCha8Rng::seed_from_u64(99);
        let mut rng_b = ChaCha8Rng::seed_from_u64(99);
        let ya = measure_network(10, GroundTruth::H0, &snrs_a, cfg5(), &mut rng_a).unwrap();
        let yb = measure_network(10, GroundTruth::H0, &snrs_b, cfg5(), &mut rng_b).unwrap();
        assert_eq!(ya, yb);
    }

    #[test]
    fn network_means_match_single_user_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let trials = 100_000;
        let snrs = vec![SnrSpec::from_db(10.0); 10];

        let mut total_h0 = 0.0;
        let mut total_h1 = 0.0;
        for _ in 0..trials {
            let y0 = measure_network(10, GroundTruth::H0, &snrs, cfg5(), &mut rng).unwrap();
            total_h0 += y0.values().iter().sum::<f64>();
            let y1 = measure_network(10, GroundTruth::H1, &snrs, cfg5(), &mut rng).unwrap();
            total_h1 += y1.values().iter().sum::<f64>();
        }
        let n_draws = (trials * 10) as f64;
        let mean_h0 = total_h0 / n_draws;
        let mean_h1 = total_h1 / n_draws;
        assert!((mean_h0 - 10.0).abs() < 3.0 * (20f64 / n_draws).sqrt(), "H0 mean {mean_h0}");
        assert!((mean_h1 - 30.0).abs() < 3.0 * (500f64 / n_draws).sqrt(), "H1 mean {mean_h1}");
    }
}
