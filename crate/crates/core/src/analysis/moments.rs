//! Monte Carlo moments and moment generating functions of truncated norms.

use crate::error::{input, Result};
use crate::lattice::{types_at, BoxIter, Neumaier};
use crate::priors::{bernoulli_prob, Family, PriorSpec};
use crate::seqspace::{weight_w_sigma, CapPolicy, Exponent, SpaceSpec, Truncation};

use super::{heavy_tail, mean_se, run_trials, trial_norm, HeavyTail};

/// Truncation and replication settings shared by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub j_max: u32,
    pub cap: CapPolicy,
    pub trials: usize,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(j_max: u32, trials: usize, seed: u64) -> Self {
        MonteCarlo {
            j_max,
            cap: CapPolicy::Default,
            trials,
            seed,
        }
    }
}

/// Truncated norms of independent fields, in trial order.
pub fn sample_norms(prior: &PriorSpec, spec: &SpaceSpec, mc: &MonteCarlo) -> Result<Vec<f64>> {
    let truncation = Truncation::new(spec.d, mc.j_max, mc.cap.clone())?;
    run_trials(mc.trials, mc.seed, |_, seed| {
        Ok(trial_norm(prior, spec, &truncation, seed)?.total)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub r: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `norm^r` per trial.
    pub values: Vec<f64>,
    pub heavy_tail: HeavyTail,
}

/// Sample mean and standard error of `norm^r`.
pub fn estimate_moment(
    prior: &PriorSpec,
    spec: &SpaceSpec,
    r: f64,
    mc: &MonteCarlo,
) -> Result<MomentEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return input("moment order r must be positive and finite");
    }
    if mc.trials < 30 {
        return input("at least 30 trials are required");
    }
    let values: Vec<f64> = sample_norms(prior, spec, mc)?
        .into_iter()
        .map(|n| n.powf(r))
        .collect();
    let (mean, std_error) = mean_se(&values);
    let heavy_tail = heavy_tail(&values)?;
    Ok(MomentEstimate {
        r,
        mean,
        std_error,
        values,
        heavy_tail,
    })
}

/// `E ||a||^2` of the truncated field for `p = q = 2`, summed in closed form.
pub fn closed_form_second_moment(
    prior: &PriorSpec,
    spec: &SpaceSpec,
    truncation: &Truncation,
) -> Result<f64> {
    if spec.p != Exponent::Finite(2.0) || spec.q != Exponent::Finite(2.0) {
        return input("the closed form needs p = q = 2");
    }
    if spec.d != truncation.d {
        return input("dimension mismatch between space and truncation");
    }
    let Some(second) = prior.template.abs_moment(2.0) else {
        return input("the template has no finite second moment");
    };
    let d = spec.d;
    let mut total = Neumaier::default();
    for j in 0..=truncation.j_max {
        let cap = truncation.cap.cap(j) as i64;
        let types = types_at(j, d).len() as f64;
        let level = (2.0 * j as f64 * spec.level_exponent()).exp2();
        let shift = if j == 0 { 0.0 } else { ((j - 1) as f64).exp2() };
        for m in BoxIter::new(vec![-cap; d], vec![cap; d]) {
            let mut a2 = prior.factor(j, &m).powi(2) * second;
            if let Family::BernoulliBesov { mu, nu } = prior.family {
                a2 *= bernoulli_prob(mu, nu, j, &m)?;
            }
            if spec.sigma != 0.0 {
                let x: Vec<f64> = m.iter().map(|&c| c as f64 / shift.max(1.0)).collect();
                a2 *= weight_w_sigma(&x, spec.sigma).powi(2);
            }
            total.add(types * level * a2);
        }
    }
    Ok(total.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MgfValue {
    Finite { mean: f64, std_error: f64 },
    Overflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgfEstimate {
    pub c: f64,
    pub r: f64,
    /// Fraction of trials whose exponent `c norm^r` overflows `f64`.
    pub overflow_fraction: f64,
    pub value: MgfValue,
    /// Largest term over the sum of terms.
    pub max_to_sum: f64,
}

impl MgfEstimate {
    /// Finite, relative standard error below 5% and no single trial
    /// carrying more than 5% of the sum.
    pub fn is_stable(&self) -> bool {
        match self.value {
            MgfValue::Finite { mean, std_error } => {
                std_error <= 0.05 * mean && self.max_to_sum <= 0.05
            }
            MgfValue::Overflow => false,
        }
    }
}

const EXP_LIMIT: f64 = 709.78;

/// `E exp(c norm^r)` from precomputed norms.
pub fn mgf_from_norms(norms: &[f64], c: f64, r: f64) -> Result<MgfEstimate> {
    if !(c > 0.0 && c.is_finite()) {
        return input(format!("c must be positive, got {c}"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return input("r must be positive and finite");
    }
    let exponents: Vec<f64> = norms.iter().map(|n| c * n.powf(r)).collect();
    let overflowed = exponents
        .iter()
        .filter(|e| e.is_nan() || **e > EXP_LIMIT)
        .count();
    let overflow_fraction = overflowed as f64 / norms.len().max(1) as f64;
    if overflowed > 0 {
        return Ok(MgfEstimate {
            c,
            r,
            overflow_fraction,
            value: MgfValue::Overflow,
            max_to_sum: 1.0,
        });
    }
    let terms: Vec<f64> = exponents.iter().map(|e| e.exp()).collect();
    let (mean, std_error) = mean_se(&terms);
    let sum: f64 = terms.iter().sum();
    let max = terms.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(MgfEstimate {
        c,
        r,
        overflow_fraction,
        value: MgfValue::Finite { mean, std_error },
        max_to_sum: max / sum,
    })
}

/// Sample mean of `exp(c norm^r)`.
pub fn estimate_mgf(
    prior: &PriorSpec,
    spec: &SpaceSpec,
    c: f64,
    r: f64,
    mc: &MonteCarlo,
) -> Result<MgfEstimate> {
    mgf_from_norms(&sample_norms(prior, spec, mc)?, c, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgfScan {
    /// Estimates for `c_k = c0 * factor^k`, in scan order.
    pub estimates: Vec<MgfEstimate>,
    /// First `c` of the scan with a stable estimate.
    pub stable_c: Option<f64>,
}

/// Scans `c` downward geometrically from `c0` until the estimate is stable.
pub fn mgf_scan(
    prior: &PriorSpec,
    spec: &SpaceSpec,
    c0: f64,
    factor: f64,
    steps: usize,
    r: f64,
    mc: &MonteCarlo,
) -> Result<MgfScan> {
    if !(factor > 0.0 && factor < 1.0) {
        return input("scan factor must lie in (0, 1)");
    }
    let norms = sample_norms(prior, spec, mc)?;
    let mut estimates = Vec::new();
    let mut stable_c = None;
    let mut c = c0;
    for _ in 0..steps.max(1) {
        let est = mgf_from_norms(&norms, c, r)?;
        let stable = est.is_stable();
        estimates.push(est);
        if stable {
            stable_c = Some(c);
            break;
        }
        c *= factor;
    }
    Ok(MgfScan {
        estimates,
        stable_c,
    })
}
