//! Monte Carlo experiments and numeric verifiers built on the samplers.

pub mod inequalities;
pub mod moments;
pub mod phase;
pub mod xi;

use rayon::prelude::*;

use crate::error::{input, Result};
use crate::lattice::Neumaier;
use crate::priors::{sample_field_with_budget, PriorSpec, DEFAULT_BUDGET};
use crate::rng::trial_seed;
use crate::seqspace::{seq_norm, NormReport, SpaceSpec, Truncation};

pub use inequalities::{
    binomial_moment, sup_gaussian_oracle, verify_binomial_bound, verify_paley_zygmund,
    verify_sup_gaussian, FiniteDistribution, SupGaussianResult,
};
pub use moments::{
    closed_form_second_moment, estimate_mgf, estimate_moment, mgf_from_norms, mgf_scan,
    sample_norms, MgfEstimate, MgfScan, MgfValue, MomentEstimate, MonteCarlo,
};
pub use phase::{phase_classify, Classification, PhaseConfig, PhaseVerdict, TrialPhase};
pub use xi::{
    default_delta, master_bound_ratio, verify_xi_moment_stability, xi_statistic,
    xi_tilde_statistic, MasterBound, XiKind, XiMomentConfig, XiMomentReport, XiStatistic,
    XiTildeParams,
};

/// Runs `f(trial, seed_for_trial)` for every trial in parallel and returns
/// the results in trial order.
pub fn run_trials<T: Send>(
    trials: usize,
    seed: u64,
    f: impl Fn(usize, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, trial_seed(seed, i as u64)))
        .collect()
}

/// Samples one field per trial and returns its norm report.
pub fn trial_norm(
    prior: &PriorSpec,
    spec: &SpaceSpec,
    truncation: &Truncation,
    seed: u64,
) -> Result<NormReport> {
    let field = sample_field_with_budget(prior, truncation, seed, DEFAULT_BUDGET)?;
    seq_norm(&field, spec)
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().copied().collect::<Neumaier>().total() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values
        .iter()
        .map(|v| (v - mean).powi(2))
        .collect::<Neumaier>()
        .total()
        / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Median; infinities sort to the ends.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Heavy-tail diagnostics of a nonnegative sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTail {
    /// Largest summand over the total.
    pub max_to_sum: f64,
    /// Hill estimate of the tail index from the top 10% of the sample.
    pub hill_index: f64,
    /// `max_to_sum > 0.5` or `hill_index < 1`.
    pub flagged: bool,
}

pub const MAX_TO_SUM_THRESHOLD: f64 = 0.5;
pub const HILL_THRESHOLD: f64 = 1.0;

pub fn heavy_tail(values: &[f64]) -> Result<HeavyTail> {
    if values.len() < 20 {
        return input("heavy-tail diagnostics need at least 20 values");
    }
    if values.iter().any(|v| *v < 0.0 || v.is_nan()) {
        return input("heavy-tail diagnostics need nonnegative values");
    }
    let total: f64 = values.iter().copied().collect::<Neumaier>().total();
    let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let max_to_sum = if total > 0.0 { max / total } else { 0.0 };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = (values.len() / 10).max(2);
    let threshold = sorted[k];
    let hill_index = if threshold > 0.0 && max.is_finite() {
        let mean_log = sorted[..k]
            .iter()
            .map(|v| (v / threshold).ln())
            .sum::<f64>()
            / k as f64;
        if mean_log > 0.0 {
            1.0 / mean_log
        } else {
            f64::INFINITY
        }
    } else if max.is_infinite() {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(HeavyTail {
        max_to_sum,
        hill_index,
        flagged: max_to_sum > MAX_TO_SUM_THRESHOLD || hill_index < HILL_THRESHOLD,
    })
}
