//! Convergence classification from the growth of truncated norms.
//!
//! Each trial samples one field at the largest `J` and reads off the nested
//! partial norms. The primary statistic is the least-squares slope of
//! `log2(norm)` against `J` over the last four truncations. Slopes between
//! the two thresholds fall back to the log-log slope of `norm^q` against `J`,
//! which separates logarithmic divergence (power-law growth of `norm^q`) from
//! slow convergence.

use std::fmt;

use crate::error::{input, Result};
use crate::priors::PriorSpec;
use crate::seqspace::{CapPolicy, Exponent, SpaceSpec, Truncation};

use super::{ls_slope, median, run_trials, trial_norm};

pub const CONVERGENT_SLOPE: f64 = 0.02;
pub const DIVERGENT_SLOPE: f64 = 0.10;
pub const CONVERGENT_KAPPA: f64 = 0.25;
pub const DIVERGENT_KAPPA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Convergent,
    Divergent,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Convergent => "convergent",
            Classification::Divergent => "divergent",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    /// Increasing truncation levels, at least four.
    pub j_list: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub cap: CapPolicy,
}

impl PhaseConfig {
    pub fn new(j_list: Vec<u32>, trials: usize, seed: u64) -> Self {
        PhaseConfig {
            j_list,
            trials,
            seed,
            cap: CapPolicy::Default,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPhase {
    pub trial: usize,
    /// Partial norms at each `J` of the configuration.
    pub partial_norms: Vec<f64>,
    /// `+inf` when a partial norm overflowed.
    pub slope: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVerdict {
    pub classification: Classification,
    /// Median primary slope.
    pub slope: f64,
    /// Median log-log slope.
    pub kappa: f64,
    /// Whether the log-log diagnostic decided the classification.
    pub used_log_diagnostic: bool,
    pub per_trial: Vec<TrialPhase>,
    pub prior: PriorSpec,
    pub spec: SpaceSpec,
    pub config: PhaseConfig,
}

/// Slopes of one trial's partial norm sequence.
pub fn trial_slopes(j_list: &[u32], norms: &[f64], q: Exponent) -> (f64, f64) {
    if norms.iter().any(|v| !v.is_finite()) {
        return (f64::INFINITY, f64::INFINITY);
    }
    if norms.iter().any(|v| *v <= 0.0) {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    let tail = j_list.len() - 4;
    let x: Vec<f64> = j_list[tail..].iter().map(|&j| j as f64).collect();
    let y: Vec<f64> = norms[tail..].iter().map(|v| v.log2()).collect();
    let slope = ls_slope(&x, &y);
    let power = q.finite().unwrap_or(1.0);
    let lx: Vec<f64> = j_list.iter().map(|&j| (j as f64).ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| power * v.ln()).collect();
    (slope, ls_slope(&lx, &ly))
}

pub fn classify(slope: f64, kappa: f64) -> (Classification, bool) {
    if slope < CONVERGENT_SLOPE {
        (Classification::Convergent, false)
    } else if slope > DIVERGENT_SLOPE {
        (Classification::Divergent, false)
    } else if kappa > DIVERGENT_KAPPA {
        (Classification::Divergent, true)
    } else if kappa < CONVERGENT_KAPPA {
        (Classification::Convergent, true)
    } else {
        (Classification::Inconclusive, true)
    }
}

/// Classifies almost-sure convergence of the prior in the given space by
/// the median growth of truncated norms over independent trials.
pub fn phase_classify(
    prior: &PriorSpec,
    spec: &SpaceSpec,
    config: &PhaseConfig,
) -> Result<PhaseVerdict> {
    let j_list = &config.j_list;
    if j_list.len() < 4 || j_list.windows(2).any(|w| w[0] >= w[1]) {
        return input("J list must be strictly increasing with at least four entries");
    }
    if j_list[0] == 0 {
        return input("J list entries must be positive");
    }
    if config.trials < 20 {
        return input("at least 20 trials are required");
    }
    prior.validate()?;
    spec.validate()?;
    let j_top = *j_list.last().expect("nonempty");
    let truncation = Truncation::new(spec.d, j_top, config.cap.clone())?;
    let per_trial = run_trials(config.trials, config.seed, |trial, seed| {
        let report = trial_norm(prior, spec, &truncation, seed)?;
        let partial_norms: Vec<f64> = j_list.iter().map(|&j| report.total_up_to(j)).collect();
        let (slope, kappa) = trial_slopes(j_list, &partial_norms, spec.q);
        Ok(TrialPhase {
            trial,
            partial_norms,
            slope,
            kappa,
        })
    })?;
    let slopes: Vec<f64> = per_trial.iter().map(|t| t.slope).collect();
    let kappas: Vec<f64> = per_trial.iter().map(|t| t.kappa).collect();
    let slope = median(&slopes);
    let kappa = median(&kappas);
    let (classification, used_log_diagnostic) = classify(slope, kappa);
    Ok(PhaseVerdict {
        classification,
        slope,
        kappa,
        used_log_diagnostic,
        per_trial,
        prior: prior.clone(),
        spec: *spec,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_synthetic_sequences() {
        let j: Vec<u32> = (4..=12).collect();
        let growing: Vec<f64> = j.iter().map(|&j| (0.5 * j as f64).exp2()).collect();
        let (s, _) = trial_slopes(&j, &growing, Exponent::Finite(2.0));
        assert!((s - 0.5).abs() < 1e-12);
        let harmonic: Vec<f64> = j.iter().map(|&j| (j as f64).sqrt()).collect();
        let (_, k) = trial_slopes(&j, &harmonic, Exponent::Finite(2.0));
        assert!((k - 1.0).abs() < 1e-12);
        let (s, k) = trial_slopes(&j, &[f64::INFINITY; 9], Exponent::Finite(2.0));
        assert_eq!((s, k), (f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn thresholds() {
        assert_eq!(classify(0.0, 5.0).0, Classification::Convergent);
        assert_eq!(classify(0.3, 0.0).0, Classification::Divergent);
        assert_eq!(classify(0.05, 0.9), (Classification::Divergent, true));
        assert_eq!(classify(0.05, 0.1), (Classification::Convergent, true));
        assert_eq!(classify(0.05, 0.4), (Classification::Inconclusive, true));
    }

    #[test]
    fn rejects_bad_configs() {
        let prior = PriorSpec::besov(
            -1.0,
            -1.5,
            -1.5,
            0.0,
            crate::priors::TemplateDistribution::Gaussian,
        );
        let spec = SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap();
        assert!(phase_classify(&prior, &spec, &PhaseConfig::new(vec![4, 5, 6], 20, 0)).is_err());
        assert!(phase_classify(&prior, &spec, &PhaseConfig::new(vec![4, 5, 6, 7], 5, 0)).is_err());
    }
}
