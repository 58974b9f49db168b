//! The supremum-of-averages statistics `Xi` and `Xi~` of raw template draws.
//!
//! `Xi_t = sup_j ( S_{j,t} + sup_{l >= j} S_{j,t,l} )` where `S_{j,t}` averages
//! `|xi_{j,t,m}|^p` over the cube `|m|_inf <= 2^j` and `S_{j,t,l}` over the
//! shell `2^l < |m|_inf <= 2^{l+1}`. Only blocks that lie completely inside
//! the stored cube of level `j` are used, so the result is a lower bound of
//! the untruncated statistic that never decreases as the truncation grows.

use crate::error::{input, Error, Result};
use crate::lattice::{points_up_to, shell_count};
use crate::priors::{bernoulli_prob, sample_draws, Draws, Family, PriorSpec};
use crate::seqspace::{CapPolicy, Level, SpaceSpec, Truncation};

use super::{heavy_tail, mean_se, run_trials, HeavyTail};

#[derive(Debug, Clone, PartialEq)]
pub struct XiStatistic {
    /// `(t, Xi_t)` in increasing `t`.
    pub per_type: Vec<(u32, f64)>,
    pub overall: f64,
    pub j_max: u32,
    pub cap: CapPolicy,
}

/// Parameters of the sparsity-reweighted statistic `Xi~`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiTildeParams {
    pub p: f64,
    pub r: f64,
    pub delta: f64,
    pub mu: f64,
    pub nu: f64,
    pub beta: f64,
}

impl XiTildeParams {
    fn exponent(&self) -> f64 {
        self.p / self.r.max(self.p) * (self.delta - 1.0)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return input("Xi~ needs a finite p > 0");
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return input("Xi~ needs a finite r > 0");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return input(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.mu > 0.0 || self.nu > 0.0 {
            return input("mu and nu must be <= 0");
        }
        let lhs = self.beta * self.p
            + d as f64
            + self.nu * self.p * (1.0 - self.delta) / self.r.max(self.p);
        if lhs >= 0.0 {
            return Err(Error::Precondition(format!(
                "beta p + d + nu p (1 - delta) / max(r, p) < 0 fails (value {lhs})"
            )));
        }
        Ok(())
    }
}

/// Sums of `value(m)` grouped by `|m|_inf`, for radii `0..=cap`.
fn radial_sums<T: Copy + Default>(
    level: &Level<T>,
    mut value: impl FnMut(usize, T) -> f64,
) -> Vec<f64> {
    let d = level.dim();
    let cap = level.cap as i64;
    let mut sums = vec![0.0; level.cap as usize + 1];
    let mut m = vec![-cap; d];
    for &v in level.values() {
        let r = m.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as usize;
        sums[r] += value(r, v);
        for k in (0..d).rev() {
            if m[k] < cap {
                m[k] += 1;
                break;
            }
            m[k] = -cap;
        }
    }
    sums
}

/// `S_{j} + sup_l S_{j,l}` from radial sums, or `None` when the cube block is
/// not completely stored.
fn level_term(j: u32, d: usize, radial: &[f64]) -> Result<Option<f64>> {
    let cap = radial.len() as u64 - 1;
    let inner = 1u64 << j;
    if inner > cap {
        return Ok(None);
    }
    let cube: f64 = radial[..=inner as usize].iter().sum();
    let mut best = 0.0f64;
    let mut l = j;
    while (2u64 << l) <= cap {
        let (lo, hi) = ((1u64 << l) as usize, (2u64 << l) as usize);
        let shell: f64 = radial[lo + 1..=hi].iter().sum();
        best = best.max(shell / shell_count(l, d)? as f64);
        l += 1;
    }
    Ok(Some(cube / points_up_to(j, d)? as f64 + best))
}

fn finish(per: Vec<(u32, f64)>, truncation: &Truncation, j_limit: u32) -> XiStatistic {
    let overall = per.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
    XiStatistic {
        per_type: per,
        overall,
        j_max: j_limit.min(truncation.j_max),
        cap: truncation.cap.clone(),
    }
}

fn accumulate(per: &mut Vec<(u32, f64)>, t: u32, value: f64) {
    match per.iter_mut().find(|(tt, _)| *tt == t) {
        Some(entry) => entry.1 = entry.1.max(value),
        None => {
            per.push((t, value));
            per.sort_by_key(|(tt, _)| *tt);
        }
    }
}

fn xi_up_to(draws: &Draws, p: f64, j_limit: u32) -> Result<XiStatistic> {
    if !(p > 0.0 && p.is_finite()) {
        return input("Xi is defined for finite p > 0 only");
    }
    let d = draws.truncation.d;
    let mut per = Vec::new();
    for level in draws.xi.iter().filter(|l| l.j <= j_limit) {
        let radial = radial_sums(level, |_, v| v.abs().powf(p));
        if let Some(term) = level_term(level.j, d, &radial)? {
            accumulate(&mut per, level.t, term);
        }
    }
    Ok(finish(per, &draws.truncation, j_limit))
}

/// `Xi` over the stored truncation of the raw draws.
pub fn xi_statistic(draws: &Draws, p: f64) -> Result<XiStatistic> {
    xi_up_to(draws, p, draws.truncation.j_max)
}

fn xi_tilde_up_to(draws: &Draws, params: &XiTildeParams, j_limit: u32) -> Result<XiStatistic> {
    let d = draws.truncation.d;
    params.validate(d)?;
    let e = params.exponent();
    let mut per = Vec::new();
    for (i, level) in draws.xi.iter().enumerate().filter(|(_, l)| l.j <= j_limit) {
        let j = level.j;
        let weights: Vec<f64> = (0..=level.cap)
            .map(|r| bernoulli_prob(params.mu, params.nu, j, &[r as i64]).map(|rho| rho.powf(e)))
            .collect::<Result<_>>()?;
        let radial = match draws.lambda.as_ref().map(|l| &l[i]) {
            Some(lambda) => {
                let mut it = lambda.values().iter();
                radial_sums(level, |r, v| {
                    let on = *it.next().expect("lambda matches xi");
                    if on {
                        weights[r] * v.abs().powf(params.p)
                    } else {
                        0.0
                    }
                })
            }
            None => radial_sums(level, |r, v| weights[r] * v.abs().powf(params.p)),
        };
        if let Some(term) = level_term(j, d, &radial)? {
            accumulate(&mut per, level.t, term);
        }
    }
    Ok(finish(per, &draws.truncation, j_limit))
}

/// `Xi~`: the statistic of `lambda |xi|^p` reweighted by
/// `rho_{j,m}^{(p / max(r,p)) (delta - 1)}`.
pub fn xi_tilde_statistic(draws: &Draws, params: &XiTildeParams) -> Result<XiStatistic> {
    xi_tilde_up_to(draws, params, draws.truncation.j_max)
}

/// Midpoint of the admissible `delta` interval for `Xi~`, which is
/// `(0, delta_max)` under the strict Bernoulli conditions with moment order `r`.
pub fn default_delta(spec: &SpaceSpec, prior: &PriorSpec, r: f64) -> Result<f64> {
    let Family::BernoulliBesov { mu, nu } = prior.family else {
        return input("delta is only defined for the Bernoulli-Besov family");
    };
    let Some(p) = spec.p.finite() else {
        return input("delta needs a finite p");
    };
    if !(r > 0.0 && r.is_finite()) {
        return input("moment order r must be positive and finite");
    }
    let big = r.max(p);
    let d = spec.d as f64;
    let level = spec.s + d / 2.0 + prior.alpha;
    // each constraint reads c0 + k (1 - delta) < 0 with k <= 0
    let constraints = [
        (prior.beta * p + d, nu * p / big),
        (prior.gamma * p + d, nu * p / big),
        (level, mu / big),
    ];
    let mut delta_max = 1.0f64;
    for (c0, k) in constraints {
        if c0 + k >= 0.0 {
            return Err(Error::Precondition(
                "the strict Bernoulli conditions fail, so no delta is admissible".into(),
            ));
        }
        if c0 >= 0.0 {
            delta_max = delta_max.min(1.0 + c0 / k);
        }
    }
    Ok(delta_max / 2.0)
}

/// `Z_{j,t} / (2^{j d/p} Xi^{1/p})` for every stored level.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterBound {
    /// `(j, t, ratio)`.
    pub per_level: Vec<(u32, u32, f64)>,
    pub max: f64,
    pub xi: f64,
}

impl MasterBound {
    /// Largest ratio over types at each level `0..=j_max`.
    pub fn profile(&self) -> Vec<f64> {
        let j_max = self.per_level.iter().map(|e| e.0).max().unwrap_or(0);
        (0..=j_max)
            .map(|j| {
                self.per_level
                    .iter()
                    .filter(|e| e.0 == j)
                    .fold(0.0f64, |m, e| m.max(e.2))
            })
            .collect()
    }
}

/// Empirical constant of the bound `Z_{j,t} <~ 2^{j d/p} Xi^{1/p}` where
/// `Z_{j,t} = || ((1 + |m|_inf/2^j)^beta |xi_{j,t,m}|)_m ||_p`.
pub fn master_bound_ratio(draws: &Draws, p: f64, beta: f64) -> Result<MasterBound> {
    let d = draws.truncation.d as f64;
    if !(p > 0.0 && p.is_finite()) {
        return input("the master bound needs a finite p > 0");
    }
    if beta >= -d / p {
        return Err(Error::Precondition(format!(
            "beta < -d/p fails: beta = {beta}, -d/p = {}",
            -d / p
        )));
    }
    let xi = xi_statistic(draws, p)?.overall;
    let mut per_level = Vec::new();
    for level in &draws.xi {
        let scale = (level.j as f64).exp2();
        let radial = radial_sums(level, |r, v| {
            (1.0 + r as f64 / scale).powf(beta * p) * v.abs().powf(p)
        });
        let z = radial.iter().sum::<f64>().powf(1.0 / p);
        let bound = (level.j as f64 * d / p).exp2() * xi.powf(1.0 / p);
        let ratio = if bound > 0.0 { z / bound } else { 0.0 };
        per_level.push((level.j, level.t, ratio));
    }
    let max = per_level.iter().fold(0.0f64, |m, e| m.max(e.2));
    Ok(MasterBound { per_level, max, xi })
}

/// Which statistic to track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiKind {
    Plain,
    Tilde(XiTildeParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct XiMomentReport {
    pub j_list: Vec<u32>,
    /// Sample means of `Xi^sigma` at each `J`.
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// The last two means differ by more than 3 combined standard errors.
    pub trend: bool,
    /// Diagnostics of `Xi^sigma` at the largest `J`.
    pub heavy_tail: HeavyTail,
    pub stable: bool,
    /// `Xi^sigma` per trial (rows) and `J` (columns).
    pub samples: Vec<Vec<f64>>,
}

/// Setup of a `Xi^sigma` stability run.
#[derive(Debug, Clone, PartialEq)]
pub struct XiMomentConfig {
    pub d: usize,
    pub p: f64,
    pub sigma: f64,
    pub kind: XiKind,
    pub j_list: Vec<u32>,
    pub cap: CapPolicy,
    pub trials: usize,
    pub seed: u64,
}

/// Sample means of `Xi^sigma` over nested truncations `J in j_list`.
pub fn verify_xi_moment_stability(
    prior: &PriorSpec,
    cfg: &XiMomentConfig,
) -> Result<XiMomentReport> {
    let XiMomentConfig {
        d,
        p,
        sigma,
        kind,
        ref j_list,
        ref cap,
        trials,
        seed,
    } = *cfg;
    if j_list.len() < 2 || j_list.windows(2).any(|w| w[0] >= w[1]) {
        return input("J list must be strictly increasing with at least two entries");
    }
    if trials < 20 {
        return input("at least 20 trials are required");
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return input("sigma must be positive");
    }
    let j_top = *j_list.last().expect("nonempty");
    let truncation = Truncation::new(d, j_top, cap.clone())?;
    let samples = run_trials(trials, seed, |_, s| {
        let draws = sample_draws(prior, &truncation, s)?;
        j_list
            .iter()
            .map(|&j| {
                let stat = match kind {
                    XiKind::Plain => xi_up_to(&draws, p, j)?,
                    XiKind::Tilde(params) => xi_tilde_up_to(&draws, &params, j)?,
                };
                Ok(stat.overall.powf(sigma))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut means = Vec::new();
    let mut std_errors = Vec::new();
    for col in 0..j_list.len() {
        let values: Vec<f64> = samples.iter().map(|row| row[col]).collect();
        let (m, se) = mean_se(&values);
        means.push(m);
        std_errors.push(se);
    }
    let n = means.len();
    let trend = (means[n - 1] - means[n - 2]).abs()
        > 3.0 * (std_errors[n - 1].powi(2) + std_errors[n - 2].powi(2)).sqrt();
    let last: Vec<f64> = samples.iter().map(|row| row[n - 1]).collect();
    let heavy_tail = heavy_tail(&last)?;
    Ok(XiMomentReport {
        j_list: j_list.to_vec(),
        means,
        std_errors,
        trend,
        heavy_tail,
        stable: !trend && !heavy_tail.flagged,
        samples,
    })
}
