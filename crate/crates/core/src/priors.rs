//! Besov and Bernoulli-Besov sequence priors.
//!
//! Coefficients are
//! `a_{j,t,m} = 2^{j alpha} (j+1)^theta (1 + |m|_inf/2^j)^{beta or gamma} xi_{j,t,m}`
//! with `gamma` used at `j = 0`. The Bernoulli variant drops the `theta` factor
//! and multiplies by an independent `lambda ~ Bernoulli(2^{j mu}(1+|m|_inf/2^j)^nu)`.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{input, require_finite, Error, Result};
use crate::lattice::{sup_norm, types_at, BasisIndex};
use crate::manifest::Manifest;
use crate::rng::{key, uniform, Stream};
use crate::seqspace::{CapPolicy, CoefficientField, FieldOrigin, Level, Truncation};

/// Default memory budget for materialized fields, in coefficients.
pub const DEFAULT_BUDGET: u128 = 1 << 26;

/// Distribution of the i.i.d. template variables `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateDistribution {
    Gaussian,
    /// Uniform on `(-1, 1)`.
    Uniform,
    Rademacher,
    /// Symmetrized Pareto: `P(|X| > x) = x^{-tail}` for `x >= 1`, random sign.
    /// Moments of order `tail` and above are infinite.
    Pareto {
        tail: f64,
    },
    /// Standard normal conditioned on `|X| <= radius`.
    TruncatedGaussian {
        radius: f64,
    },
    /// Point mass; a test hook for forcing `xi` (zero is allowed here only).
    Constant(f64),
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * u)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl TemplateDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TemplateDistribution::Pareto { tail } if !(tail > 0.0 && tail.is_finite()) => {
                input(format!("Pareto tail index must be positive, got {tail}"))
            }
            TemplateDistribution::TruncatedGaussian { radius }
                if !(radius > 0.0 && radius.is_finite()) =>
            {
                input(format!("truncation radius must be positive, got {radius}"))
            }
            TemplateDistribution::Constant(c) if !c.is_finite() => {
                input("constant template must be finite")
            }
            _ => Ok(()),
        }
    }

    /// Draw from two uniforms `u1, u2` in `(0, 1)`.
    #[inline]
    pub fn from_uniforms(&self, u1: f64, u2: f64) -> f64 {
        match *self {
            TemplateDistribution::Gaussian => normal_quantile(u1),
            TemplateDistribution::Uniform => 2.0 * u1 - 1.0,
            TemplateDistribution::Rademacher => {
                if u1 < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            TemplateDistribution::Pareto { tail } => {
                let magnitude = u1.powf(-1.0 / tail);
                if u2 < 0.5 {
                    -magnitude
                } else {
                    magnitude
                }
            }
            TemplateDistribution::TruncatedGaussian { radius } => {
                let lo = normal_cdf(-radius);
                let hi = normal_cdf(radius);
                normal_quantile(lo + u1 * (hi - lo)).clamp(-radius, radius)
            }
            TemplateDistribution::Constant(c) => c,
        }
    }

    /// Draw keyed by a precomputed index key.
    #[inline]
    pub fn sample_keyed(&self, key: u64) -> f64 {
        self.from_uniforms(uniform(key, 0), uniform(key, 1))
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            TemplateDistribution::Pareto { tail } if tail <= 1.0 => None,
            TemplateDistribution::Constant(c) => Some(c),
            _ => Some(0.0),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match *self {
            TemplateDistribution::Gaussian | TemplateDistribution::Rademacher => Some(1.0),
            TemplateDistribution::Uniform => Some(1.0 / 3.0),
            TemplateDistribution::Pareto { tail } => (tail > 2.0).then(|| tail / (tail - 2.0)),
            TemplateDistribution::TruncatedGaussian { radius } => {
                let mass = 2.0 * normal_cdf(radius) - 1.0;
                Some(1.0 - 2.0 * radius * normal_pdf(radius) / mass)
            }
            TemplateDistribution::Constant(_) => Some(0.0),
        }
    }

    /// `E|X|^t`, if finite, for `t > 0`.
    pub fn abs_moment(&self, t: f64) -> Option<f64> {
        match *self {
            TemplateDistribution::Gaussian => Some(
                2f64.powf(t / 2.0) * statrs::function::gamma::gamma((t + 1.0) / 2.0)
                    / std::f64::consts::PI.sqrt(),
            ),
            TemplateDistribution::Uniform => Some(1.0 / (t + 1.0)),
            TemplateDistribution::Rademacher => Some(1.0),
            TemplateDistribution::Pareto { tail } => (t < tail).then(|| tail / (tail - t)),
            TemplateDistribution::TruncatedGaussian { radius } => {
                // Simpson's rule on the truncated density
                let n = 20_000;
                let h = radius / n as f64;
                let mass = 2.0 * normal_cdf(radius) - 1.0;
                let mut acc = 0.0;
                for i in 0..=n {
                    let x = i as f64 * h;
                    let w = match i {
                        0 => 1.0,
                        _ if i == n => 1.0,
                        _ if i % 2 == 1 => 4.0,
                        _ => 2.0,
                    };
                    acc += w * x.powf(t) * normal_pdf(x);
                }
                Some(2.0 * acc * h / 3.0 / mass)
            }
            TemplateDistribution::Constant(c) => Some(c.abs().powf(t)),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            TemplateDistribution::Uniform
                | TemplateDistribution::Rademacher
                | TemplateDistribution::TruncatedGaussian { .. }
                | TemplateDistribution::Constant(_)
        )
    }
}

impl fmt::Display for TemplateDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateDistribution::Gaussian => f.write_str("gaussian"),
            TemplateDistribution::Uniform => f.write_str("uniform"),
            TemplateDistribution::Rademacher => f.write_str("rademacher"),
            TemplateDistribution::Pareto { tail } => write!(f, "pareto:{tail}"),
            TemplateDistribution::TruncatedGaussian { radius } => {
                write!(f, "truncated-gaussian:{radius}")
            }
            TemplateDistribution::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for TemplateDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.trim().split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::Input(format!("template '{s}' needs a parameter")))?;
            crate::parse_real(a)
        };
        let template = match head {
            "gaussian" | "normal" => TemplateDistribution::Gaussian,
            "uniform" => TemplateDistribution::Uniform,
            "rademacher" => TemplateDistribution::Rademacher,
            "pareto" => TemplateDistribution::Pareto { tail: num(arg)? },
            "truncated-gaussian" => TemplateDistribution::TruncatedGaussian { radius: num(arg)? },
            "constant" => TemplateDistribution::Constant(num(arg)?),
            _ => return input(format!("unknown template distribution '{s}'")),
        };
        template.validate()?;
        Ok(template)
    }
}

/// Integrability requirement on the template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentCondition {
    /// `E|X|^order < inf`.
    Moment { order: f64 },
    /// `E exp(C |X|^power) < inf` for some `C > 0`.
    Exponential { power: f64 },
    /// `E[|X|^p log2+(|X|)] < inf`.
    PLog { p: f64 },
    /// `|X| <= R` almost surely.
    Bounded,
}

impl MomentCondition {
    /// `E|X|^{p(1+eps)} < inf`.
    pub fn power(p: f64, eps: f64) -> Self {
        MomentCondition::Moment {
            order: p * (1.0 + eps),
        }
    }

    /// `E|X|^{(1+eps) max(r,p)} < inf`.
    pub fn mixed(p: f64, r: f64, eps: f64) -> Self {
        MomentCondition::Moment {
            order: (1.0 + eps) * r.max(p),
        }
    }

    /// `E exp(C |X|^{max(r,p)}) < inf`.
    pub fn exponential(p: f64, r: f64) -> Self {
        MomentCondition::Exponential { power: r.max(p) }
    }
}

/// Analytic truth value of `condition` for `template`.
pub fn template_moment_ok(template: &TemplateDistribution, condition: MomentCondition) -> bool {
    use TemplateDistribution as T;
    match condition {
        MomentCondition::Bounded => template.is_bounded(),
        MomentCondition::Moment { order } => match template {
            T::Pareto { tail } => order < *tail,
            _ => true,
        },
        MomentCondition::PLog { p } => match template {
            T::Pareto { tail } => p < *tail,
            _ => true,
        },
        MomentCondition::Exponential { power } => match template {
            T::Gaussian => power <= 2.0,
            T::Pareto { .. } => false,
            _ => true,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Besov { theta: f64 },
    BernoulliBesov { mu: f64, nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Smoothness order of the wavelet system.
    pub k: u32,
    pub template: TemplateDistribution,
}

impl PriorSpec {
    pub fn besov(
        alpha: f64,
        beta: f64,
        gamma: f64,
        theta: f64,
        template: TemplateDistribution,
    ) -> Self {
        PriorSpec {
            family: Family::Besov { theta },
            alpha,
            beta,
            gamma,
            k: 1,
            template,
        }
    }

    pub fn bernoulli(
        alpha: f64,
        beta: f64,
        gamma: f64,
        mu: f64,
        nu: f64,
        template: TemplateDistribution,
    ) -> Result<Self> {
        let prior = PriorSpec {
            family: Family::BernoulliBesov { mu, nu },
            alpha,
            beta,
            gamma,
            k: 1,
            template,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("alpha", self.alpha)?;
        require_finite("beta", self.beta)?;
        require_finite("gamma", self.gamma)?;
        match self.family {
            Family::Besov { theta } => require_finite("theta", theta)?,
            Family::BernoulliBesov { mu, nu } => {
                require_finite("mu", mu)?;
                require_finite("nu", nu)?;
                if mu > 0.0 || nu > 0.0 {
                    return input(format!("mu and nu must be <= 0, got mu={mu}, nu={nu}"));
                }
            }
        }
        if self.k == 0 {
            return input("smoothness order k must be at least 1");
        }
        self.template.validate()
    }

    pub fn theta(&self) -> f64 {
        match self.family {
            Family::Besov { theta } => theta,
            Family::BernoulliBesov { .. } => 0.0,
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self.family, Family::BernoulliBesov { .. })
    }

    /// Deterministic factor of `a_{j,t,m}`, i.e. the coefficient with `xi = 1`
    /// and `lambda = 1`.
    pub fn factor(&self, j: u32, m: &[i64]) -> f64 {
        let decay = if j == 0 { self.gamma } else { self.beta };
        let scale = (j as f64 * self.alpha).exp2() * ((j + 1) as f64).powf(self.theta());
        scale * (1.0 + sup_norm(m) as f64 / (j as f64).exp2()).powf(decay)
    }

    pub fn write_manifest(&self, manifest: &mut Manifest) {
        match self.family {
            Family::Besov { theta } => {
                manifest.set("family", "besov");
                manifest.set("theta", theta);
            }
            Family::BernoulliBesov { mu, nu } => {
                manifest.set("family", "bernoulli-besov");
                manifest.set("mu", mu);
                manifest.set("nu", nu);
            }
        }
        manifest
            .set("alpha", self.alpha)
            .set("beta", self.beta)
            .set("gamma", self.gamma)
            .set("k", self.k)
            .set("template", self.template);
    }

    pub fn from_manifest(manifest: &Manifest) -> Result<Self> {
        let family = match manifest.require("family")? {
            "besov" => Family::Besov {
                theta: manifest.parse_value("theta")?,
            },
            "bernoulli-besov" => Family::BernoulliBesov {
                mu: manifest.parse_value("mu")?,
                nu: manifest.parse_value("nu")?,
            },
            other => return input(format!("unknown prior family '{other}'")),
        };
        let prior = PriorSpec {
            family,
            alpha: manifest.parse_value("alpha")?,
            beta: manifest.parse_value("beta")?,
            gamma: manifest.parse_value("gamma")?,
            k: manifest.parse_value("k")?,
            template: manifest.require("template")?.parse()?,
        };
        prior.validate()?;
        Ok(prior)
    }
}

/// `2^{j mu} (1 + |m|_inf / 2^j)^nu`.
pub fn bernoulli_prob(mu: f64, nu: f64, j: u32, m: &[i64]) -> Result<f64> {
    if !(mu <= 0.0 && nu <= 0.0) {
        return input(format!("mu and nu must be <= 0, got mu={mu}, nu={nu}"));
    }
    Ok(prob(mu, nu, j, m))
}

#[inline]
fn prob(mu: f64, nu: f64, j: u32, m: &[i64]) -> f64 {
    (j as f64 * mu).exp2() * (1.0 + sup_norm(m) as f64 / (j as f64).exp2()).powf(nu)
}

/// Template draw `xi_{j,t,m}`.
#[inline]
pub fn draw_xi(template: &TemplateDistribution, seed: u64, j: u32, t: u32, m: &[i64]) -> f64 {
    template.sample_keyed(key(seed, Stream::Xi, j, t, m))
}

/// Sparsity indicator `lambda_{j,t,m}`.
#[inline]
pub fn draw_lambda(mu: f64, nu: f64, seed: u64, j: u32, t: u32, m: &[i64]) -> bool {
    uniform(key(seed, Stream::Lambda, j, t, m), 0) < prob(mu, nu, j, m)
}

/// The coefficient `a_{j,t,m}` for `seed`. For the Bernoulli family `xi` is
/// only drawn where `lambda = 1`; the value does not depend on that shortcut.
pub fn deterministic_coeff(prior: &PriorSpec, idx: &BasisIndex, seed: u64) -> f64 {
    coeff(prior, seed, idx.j, idx.t, &idx.m)
}

#[inline]
fn coeff(prior: &PriorSpec, seed: u64, j: u32, t: u32, m: &[i64]) -> f64 {
    if let Family::BernoulliBesov { mu, nu } = prior.family {
        if !draw_lambda(mu, nu, seed, j, t, m) {
            return 0.0;
        }
    }
    prior.factor(j, m) * draw_xi(&prior.template, seed, j, t, m)
}

fn decode(mut pos: usize, cap: u64, out: &mut [i64]) {
    let side = 2 * cap as usize + 1;
    for k in (0..out.len()).rev() {
        out[k] = (pos % side) as i64 - cap as i64;
        pos /= side;
    }
}

fn fill_level<T: Copy + Default + Send>(
    j: u32,
    t: u32,
    cap: u64,
    d: usize,
    f: impl Fn(&[i64]) -> T + Sync,
) -> Level<T> {
    let len = (2 * cap as usize + 1).pow(d as u32);
    let values: Vec<T> = (0..len)
        .into_par_iter()
        .with_min_len(1024)
        .map(|pos| {
            let mut buf = [0i64; 8];
            decode(pos, cap, &mut buf[..d]);
            f(&buf[..d])
        })
        .collect();
    Level::from_values(j, t, cap, d, values).expect("length matches cube")
}

/// Materializes the prior over `truncation`.
pub fn sample_field(
    prior: &PriorSpec,
    truncation: &Truncation,
    seed: u64,
) -> Result<CoefficientField> {
    sample_field_with_budget(prior, truncation, seed, DEFAULT_BUDGET)
}

pub fn sample_field_with_budget(
    prior: &PriorSpec,
    truncation: &Truncation,
    seed: u64,
    budget: u128,
) -> Result<CoefficientField> {
    prior.validate()?;
    truncation.check_budget(budget)?;
    let d = truncation.d;
    let mut levels = Vec::new();
    for j in 0..=truncation.j_max {
        let cap = truncation.cap.cap(j);
        for t in types_at(j, d) {
            levels.push(fill_level(j, t, cap, d, |m| coeff(prior, seed, j, t, m)));
        }
    }
    CoefficientField::from_levels(
        truncation.clone(),
        FieldOrigin::Prior {
            prior: prior.clone(),
            seed,
        },
        levels,
    )
}

/// Raw `xi` (and `lambda`) draws over a truncation.
#[derive(Debug, Clone)]
pub struct Draws {
    pub truncation: Truncation,
    pub xi: Vec<Level<f64>>,
    pub lambda: Option<Vec<Level<bool>>>,
}

/// Materializes the raw draws behind `sample_field` for the same seed.
pub fn sample_draws(prior: &PriorSpec, truncation: &Truncation, seed: u64) -> Result<Draws> {
    prior.validate()?;
    truncation.check_budget(DEFAULT_BUDGET)?;
    let d = truncation.d;
    let mut xi = Vec::new();
    let mut lambda = prior.is_bernoulli().then(Vec::new);
    for j in 0..=truncation.j_max {
        let cap = truncation.cap.cap(j);
        for t in types_at(j, d) {
            xi.push(fill_level(j, t, cap, d, |m| {
                draw_xi(&prior.template, seed, j, t, m)
            }));
            if let (Some(out), Family::BernoulliBesov { mu, nu }) = (lambda.as_mut(), prior.family)
            {
                out.push(fill_level(j, t, cap, d, |m| {
                    draw_lambda(mu, nu, seed, j, t, m)
                }));
            }
        }
    }
    Ok(Draws {
        truncation: truncation.clone(),
        xi,
        lambda,
    })
}

/// Default truncation for a prior in dimension `d`.
pub fn default_truncation(d: usize, j_max: u32) -> Result<Truncation> {
    Truncation::new(d, j_max, CapPolicy::Default)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(j: u32, t: u32, m: &[i64]) -> BasisIndex {
        BasisIndex::new(j, t, m.to_vec()).unwrap()
    }

    #[test]
    fn bernoulli_prob_examples() {
        assert_eq!(bernoulli_prob(0.0, 0.0, 5, &[17]).unwrap(), 1.0);
        assert!((bernoulli_prob(-1.0, -1.0, 1, &[2]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(bernoulli_prob(-2.0, 0.0, 3, &[-9, 4]).unwrap(), 0.015625);
        assert!(bernoulli_prob(0.5, 0.0, 1, &[0]).is_err());
        assert!(bernoulli_prob(0.0, 0.1, 1, &[0]).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let one = TemplateDistribution::Constant(1.0);
        let p = PriorSpec::besov(0.0, 0.0, 0.0, 0.0, one);
        assert_eq!(deterministic_coeff(&p, &idx(0, 0, &[0]), 3), 1.0);
        let p = PriorSpec::besov(-1.0, -1.0, -1.0, 1.0, one);
        assert!((deterministic_coeff(&p, &idx(1, 1, &[2]), 3) - 0.5).abs() < 1e-15);

        let p = PriorSpec::bernoulli(0.0, 0.0, 0.0, -50.0, 0.0, TemplateDistribution::Gaussian)
            .unwrap();
        let nonzero = (0..20_000)
            .filter(|&s| deterministic_coeff(&p, &idx(1, 1, &[0]), s) != 0.0)
            .count();
        assert_eq!(nonzero, 0);
    }

    #[test]
    fn sample_field_counts_and_determinism() {
        let p = PriorSpec::besov(-1.0, -1.0, -1.0, 0.0, TemplateDistribution::Gaussian);
        let t = Truncation::new(1, 0, CapPolicy::Constant(0)).unwrap();
        assert_eq!(sample_field(&p, &t, 1).unwrap().len(), 1);

        let t = Truncation::new(1, 2, CapPolicy::PerLevel(vec![16, 16, 32])).unwrap();
        let f = sample_field(&p, &t, 9).unwrap();
        let counts: Vec<usize> = f.levels().iter().map(|l| l.len()).collect();
        assert_eq!(counts, vec![33, 33, 65]);
        assert_eq!(f, sample_field(&p, &t, 9).unwrap());
        assert_ne!(f, sample_field(&p, &t, 10).unwrap());
    }

    #[test]
    fn gamma_only_affects_level_zero() {
        let a = PriorSpec::besov(-0.5, -1.0, -1.0, 0.0, TemplateDistribution::Gaussian);
        let mut b = a.clone();
        b.gamma = -3.0;
        let t = Truncation::new(1, 3, CapPolicy::Constant(5)).unwrap();
        let fa = sample_field(&a, &t, 4).unwrap();
        let fb = sample_field(&b, &t, 4).unwrap();
        for (la, lb) in fa.levels().iter().zip(fb.levels()) {
            let differs = la.values().iter().zip(lb.values()).any(|(x, y)| x != y);
            assert_eq!(differs, la.j == 0, "level {}", la.j);
        }
    }

    #[test]
    fn moment_condition_examples() {
        use TemplateDistribution as T;
        assert!(template_moment_ok(
            &T::Gaussian,
            MomentCondition::power(2.0, 0.01)
        ));
        assert!(!template_moment_ok(
            &T::Pareto { tail: 1.5 },
            MomentCondition::power(2.0, 0.01)
        ));
        assert!(!template_moment_ok(&T::Gaussian, MomentCondition::Bounded));
        assert!(template_moment_ok(
            &T::TruncatedGaussian { radius: 2.0 },
            MomentCondition::Bounded
        ));
        assert!(template_moment_ok(
            &T::Gaussian,
            MomentCondition::exponential(2.0, 1.0)
        ));
        assert!(!template_moment_ok(
            &T::Gaussian,
            MomentCondition::exponential(2.0, 3.0)
        ));
        assert!(template_moment_ok(
            &T::Pareto { tail: 2.5 },
            MomentCondition::PLog { p: 2.0 }
        ));
    }

    #[test]
    fn template_parsing() {
        for t in [
            TemplateDistribution::Gaussian,
            TemplateDistribution::Uniform,
            TemplateDistribution::Rademacher,
            TemplateDistribution::Pareto { tail: 1.9 },
            TemplateDistribution::TruncatedGaussian { radius: 3.0 },
            TemplateDistribution::Constant(1.0),
        ] {
            assert_eq!(t.to_string().parse::<TemplateDistribution>().unwrap(), t);
        }
        assert!("pareto:-1".parse::<TemplateDistribution>().is_err());
        assert!("cauchy".parse::<TemplateDistribution>().is_err());
    }

    #[test]
    fn gaussian_abs_moments() {
        let g = TemplateDistribution::Gaussian;
        assert!((g.abs_moment(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.abs_moment(4.0).unwrap() - 3.0).abs() < 1e-12);
        let tg = TemplateDistribution::TruncatedGaussian { radius: 1.5 };
        assert!((tg.abs_moment(2.0).unwrap() - tg.variance().unwrap()).abs() < 1e-9);
    }
}
