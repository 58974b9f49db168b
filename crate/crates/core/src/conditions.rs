//! Regularity conditions A, A', A'', B and B' as exact predicates.
//!
//! Inputs that are small rationals (denominator up to 10^6) are evaluated in
//! exact arithmetic, so boundary cases such as `s + d/2 + alpha = 0` are
//! decided exactly. Anything else falls back to floating point, where slacks
//! within `EQUALITY_BAND` of zero count as zero.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, ToPrimitive, Zero};

use crate::error::{input, Result};
use crate::priors::{Family, PriorSpec};
use crate::seqspace::{Exponent, SpaceSpec};

pub const EQUALITY_BAND: f64 = 1e-12;
const MAX_DENOMINATOR: i128 = 1_000_000;

/// A real number carried exactly when possible.
#[derive(Debug, Clone, Copy)]
pub enum Real {
    Exact(Ratio<i128>),
    Approx(f64),
}

impl Real {
    pub fn int(n: i64) -> Self {
        Real::Exact(Ratio::from_integer(n as i128))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Real::Exact(Ratio::new(n as i128, d as i128))
    }

    /// Recovers an exact rational when `x` is one with a small denominator.
    pub fn from_f64(x: f64) -> Self {
        if !x.is_finite() {
            return Real::Approx(x);
        }
        // continued fraction convergents
        let (mut h0, mut h1): (i128, i128) = (0, 1);
        let (mut k0, mut k1): (i128, i128) = (1, 0);
        let mut r = x;
        for _ in 0..64 {
            let a = r.floor();
            if a.abs() > 1e15 {
                break;
            }
            let a = a as i128;
            let (h2, k2) = (a * h1 + h0, a * k1 + k0);
            if k2 > MAX_DENOMINATOR {
                break;
            }
            if h2 as f64 / k2 as f64 == x {
                return Real::Exact(Ratio::new(h2, k2));
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = r - a as f64;
            if frac == 0.0 {
                break;
            }
            r = 1.0 / frac;
        }
        Real::Approx(x)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Real::Approx(x) => *x,
        }
    }

    /// Sign, with the floating band collapsing near-zero values to `Equal`.
    pub fn sign(&self) -> Ordering {
        match self {
            Real::Exact(r) => r.numer().cmp(&0),
            Real::Approx(x) if x.abs() <= EQUALITY_BAND => Ordering::Equal,
            Real::Approx(x) => x.partial_cmp(&0.0).unwrap_or(Ordering::Equal),
        }
    }

    fn combine(
        self,
        other: Real,
        exact: impl Fn(&Ratio<i128>, &Ratio<i128>) -> Option<Ratio<i128>>,
        approx: impl Fn(f64, f64) -> f64,
    ) -> Real {
        if let (Real::Exact(a), Real::Exact(b)) = (self, other) {
            if let Some(r) = exact(&a, &b) {
                return Real::Exact(r);
            }
        }
        Real::Approx(approx(self.to_f64(), other.to_f64()))
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real::from_f64(x)
    }
}

impl Add for Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        self.combine(rhs, |a, b| a.checked_add(b), |a, b| a + b)
    }
}

impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        self.combine(rhs, |a, b| a.checked_sub(b), |a, b| a - b)
    }
}

impl Mul for Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        self.combine(rhs, |a, b| a.checked_mul(b), |a, b| a * b)
    }
}

impl Div for Real {
    type Output = Real;
    fn div(self, rhs: Real) -> Real {
        self.combine(
            rhs,
            |a, b| if b.is_zero() { None } else { a.checked_div(b) },
            |a, b| a / b,
        )
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Exact(r) => Real::Exact(-r),
            Real::Approx(x) => Real::Approx(-x),
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Real::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Real::Approx(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Less,
    LessEq,
    Greater,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Less => "<",
            Relation::LessEq => "<=",
            Relation::Greater => ">",
        })
    }
}

/// One inequality `lhs REL 0`, described by its slack `lhs`.
#[derive(Debug, Clone)]
pub struct Margin {
    pub label: String,
    pub relation: Relation,
    pub slack: Real,
    pub satisfied: bool,
    /// Decided inside the floating equality band.
    pub near_boundary: bool,
}

impl Margin {
    fn new(label: impl Into<String>, slack: Real, relation: Relation) -> Self {
        let sign = slack.sign();
        let satisfied = match relation {
            Relation::Less => sign == Ordering::Less,
            Relation::LessEq => sign != Ordering::Greater,
            Relation::Greater => sign == Ordering::Greater,
        };
        let near_boundary = !slack.is_exact() && sign == Ordering::Equal;
        Margin {
            label: label.into(),
            relation,
            slack,
            satisfied,
            near_boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    A,
    APrime,
    ADoublePrime,
    B,
    BPrime,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::A => "A",
            Property::APrime => "A'",
            Property::ADoublePrime => "A''",
            Property::B => "B",
            Property::BPrime => "B'",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PropertyVerdict {
    pub property: Property,
    pub holds: bool,
    pub branch: &'static str,
    pub margins: Vec<Margin>,
}

impl PropertyVerdict {
    fn new(property: Property, branch: &'static str, margins: Vec<Margin>) -> Self {
        PropertyVerdict {
            property,
            holds: margins.iter().all(|m| m.satisfied),
            branch,
            margins,
        }
    }

    pub fn margin(&self, label: &str) -> Option<&Margin> {
        self.margins.iter().find(|m| m.label == label)
    }
}

impl fmt::Display for PropertyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "property={}", self.property)?;
        writeln!(f, "holds={}", self.holds)?;
        writeln!(f, "branch={}", self.branch)?;
        for m in &self.margins {
            write!(f, "{} {} 0: slack={}", m.label, m.relation, m.slack)?;
            if m.near_boundary {
                f.write_str(" (within equality band)")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn recip(e: Exponent) -> Option<Real> {
    e.finite().map(|v| Real::int(1) / Real::from_f64(v))
}

fn level_sum(spec: &SpaceSpec, alpha: f64) -> Real {
    Real::from_f64(spec.s) + Real::ratio(spec.d as i64, 2) + Real::from_f64(alpha)
}

fn decay_margins(prior: &PriorSpec, shift: Option<Real>) -> Vec<Margin> {
    let (beta, gamma) = (Real::from_f64(prior.beta), Real::from_f64(prior.gamma));
    match shift {
        Some(shift) => vec![
            Margin::new("gamma + d/p", gamma + shift, Relation::Less),
            Margin::new("beta + d/p", beta + shift, Relation::Less),
        ],
        None => vec![
            Margin::new("gamma", gamma, Relation::LessEq),
            Margin::new("beta", beta, Relation::LessEq),
        ],
    }
}

/// Property A, for the Besov family.
pub fn property_a(spec: &SpaceSpec, prior: &PriorSpec) -> Result<PropertyVerdict> {
    spec.validate()?;
    let Family::Besov { theta } = prior.family else {
        return input("Property A applies to the Besov family; use A' or A'' for Bernoulli priors");
    };
    let d = Real::int(spec.d as i64);
    let mut margins = decay_margins(prior, recip(spec.p).map(|r| d * r));
    let c = level_sum(spec, prior.alpha);
    if c.sign() == Ordering::Equal {
        margins.push(Margin::new("s + d/2 + alpha", c, Relation::LessEq));
        let theta = Real::from_f64(theta);
        match recip(spec.q) {
            Some(rq) => margins.push(Margin::new("theta + 1/q", theta + rq, Relation::Less)),
            None => margins.push(Margin::new("theta", theta, Relation::LessEq)),
        }
        Ok(PropertyVerdict::new(Property::A, "A-boundary", margins))
    } else {
        margins.push(Margin::new("s + d/2 + alpha", c, Relation::Less));
        Ok(PropertyVerdict::new(Property::A, "A-strict", margins))
    }
}

/// Property A', for the Bernoulli family.
pub fn property_a_prime(spec: &SpaceSpec, prior: &PriorSpec) -> Result<PropertyVerdict> {
    spec.validate()?;
    let Family::BernoulliBesov { mu, nu } = prior.family else {
        return input("Property A' applies to the Bernoulli-Besov family");
    };
    let c = level_sum(spec, prior.alpha);
    let (beta, gamma) = (Real::from_f64(prior.beta), Real::from_f64(prior.gamma));
    let q_finite = !spec.q.is_infinite();
    let last = if q_finite {
        Relation::Less
    } else {
        Relation::LessEq
    };
    let (branch, margins) = match recip(spec.p) {
        Some(rp) => {
            let shift = (Real::int(spec.d as i64) + Real::from_f64(nu)) * rp;
            let margins = vec![
                Margin::new("gamma + (d+nu)/p", gamma + shift, Relation::Less),
                Margin::new("beta + (d+nu)/p", beta + shift, Relation::Less),
                Margin::new("s + d/2 + alpha + mu/p", c + Real::from_f64(mu) * rp, last),
            ];
            (if q_finite { "A'-(a)" } else { "A'-(b)" }, margins)
        }
        None => {
            let margins = vec![
                Margin::new("gamma", gamma, Relation::LessEq),
                Margin::new("beta", beta, Relation::LessEq),
                Margin::new("s + d/2 + alpha", c, last),
            ];
            (if q_finite { "A'-(c)" } else { "A'-(d)" }, margins)
        }
    };
    Ok(PropertyVerdict::new(Property::APrime, branch, margins))
}

/// Property A'' with moment order `r`, for the Bernoulli family.
pub fn property_a_dprime(spec: &SpaceSpec, prior: &PriorSpec, r: f64) -> Result<PropertyVerdict> {
    spec.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return input(format!(
            "moment order r must be positive and finite, got {r}"
        ));
    }
    let Family::BernoulliBesov { mu, nu } = prior.family else {
        return input("Property A'' applies to the Bernoulli-Besov family");
    };
    let c = level_sum(spec, prior.alpha);
    let (beta, gamma) = (Real::from_f64(prior.beta), Real::from_f64(prior.gamma));
    match spec.p.finite() {
        Some(p) => {
            let rp = Real::int(1) / Real::from_f64(p);
            let inv_max = Real::int(1) / Real::from_f64(r.max(p));
            let shift = Real::int(spec.d as i64) * rp + Real::from_f64(nu) * inv_max;
            let margins = vec![
                Margin::new("gamma + d/p + nu/max(r,p)", gamma + shift, Relation::Less),
                Margin::new("beta + d/p + nu/max(r,p)", beta + shift, Relation::Less),
                Margin::new(
                    "s + d/2 + alpha + mu/max(r,p)",
                    c + Real::from_f64(mu) * inv_max,
                    Relation::Less,
                ),
            ];
            Ok(PropertyVerdict::new(
                Property::ADoublePrime,
                "A''-(a)",
                margins,
            ))
        }
        None => {
            let margins = vec![
                Margin::new("gamma", gamma, Relation::LessEq),
                Margin::new("beta", beta, Relation::LessEq),
                Margin::new("s + d/2 + alpha", c, Relation::LessEq),
            ];
            Ok(PropertyVerdict::new(
                Property::ADoublePrime,
                "A''-(b)",
                margins,
            ))
        }
    }
}

fn below_one(p: Exponent) -> bool {
    matches!(p, Exponent::Finite(v) if v < 1.0)
}

/// `d (1/p - 1)`, used only for `p < 1`.
fn sub_one_gap(d: usize, p: Exponent) -> Real {
    let rp = recip(p).unwrap_or(Real::int(0));
    Real::int(d as i64) * (rp - Real::int(1))
}

/// Property B for smoothness order `k`.
pub fn property_b(spec: &SpaceSpec, k: u32) -> Result<PropertyVerdict> {
    spec.validate()?;
    if k == 0 {
        return input("smoothness order k must be at least 1");
    }
    let k = Real::int(k as i64);
    let s = Real::from_f64(spec.s);
    if below_one(spec.p) {
        let other = sub_one_gap(spec.d, spec.p) - s;
        let margins = vec![
            Margin::new("k - s", k - s, Relation::Greater),
            Margin::new("k - (d(1/p-1) - s)", k - other, Relation::Greater),
        ];
        Ok(PropertyVerdict::new(Property::B, "B-(a)", margins))
    } else {
        let abs = if s.sign() == Ordering::Less { -s } else { s };
        let margins = vec![Margin::new("k - |s|", k - abs, Relation::Greater)];
        Ok(PropertyVerdict::new(Property::B, "B-(b)", margins))
    }
}

/// Property B' for smoothness order `k`.
pub fn property_b_prime(d: usize, p: Exponent, alpha: f64, k: u32) -> Result<PropertyVerdict> {
    if d == 0 {
        return input("dimension must be at least 1");
    }
    if k == 0 {
        return input("smoothness order k must be at least 1");
    }
    let k = Real::int(k as i64);
    let base = Real::ratio(d as i64, 2) + Real::from_f64(alpha);
    if below_one(p) {
        let bound = sub_one_gap(d, p) + base;
        let margins = vec![Margin::new(
            "k - (d(1/p-1) + d/2 + alpha)",
            k - bound,
            Relation::Greater,
        )];
        Ok(PropertyVerdict::new(Property::BPrime, "B'-(a)", margins))
    } else {
        let margins = vec![Margin::new(
            "k - (d/2 + alpha)",
            k - base,
            Relation::Greater,
        )];
        Ok(PropertyVerdict::new(Property::BPrime, "B'-(b)", margins))
    }
}

/// Smallest `k >= 1` for which both B and B' hold.
pub fn min_k(spec: &SpaceSpec, alpha: f64) -> Result<u32> {
    spec.validate()?;
    let s = Real::from_f64(spec.s);
    let base = Real::ratio(spec.d as i64, 2) + Real::from_f64(alpha);
    let abs_s = if s.sign() == Ordering::Less { -s } else { s };
    let bounds = if below_one(spec.p) {
        let gap = sub_one_gap(spec.d, spec.p);
        vec![s, gap - s, gap + base]
    } else {
        vec![abs_s, base]
    };
    let mut k: i64 = 1;
    for b in bounds {
        let floor = match b {
            Real::Exact(r) => r.floor().to_integer() as i64,
            Real::Approx(x) if (x - x.round()).abs() <= EQUALITY_BAND => x.round() as i64,
            Real::Approx(x) => x.floor() as i64,
        };
        k = k.max(floor + 1);
    }
    Ok(k as u32)
}

/// Rationals recovered from the inputs stay rational, so this is exact on
/// rational grids.
pub fn is_exact_input(values: &[f64]) -> bool {
    values.iter().all(|&v| Real::from_f64(v).is_exact())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::TemplateDistribution::Gaussian;

    fn spec(d: usize, s: f64, p: f64, q: f64) -> SpaceSpec {
        SpaceSpec::unweighted(d, s, p, q).unwrap()
    }

    fn bern(alpha: f64, beta: f64, gamma: f64, mu: f64, nu: f64) -> PriorSpec {
        PriorSpec::bernoulli(alpha, beta, gamma, mu, nu, Gaussian).unwrap()
    }

    #[test]
    fn rational_recovery() {
        assert!(Real::from_f64(-0.5).is_exact());
        assert!(Real::from_f64(1.0 / 3.0).is_exact());
        assert!(Real::from_f64(0.1).is_exact());
        assert!(!Real::from_f64(std::f64::consts::PI).is_exact());
        let x = Real::from_f64(0.1) + Real::from_f64(0.2) - Real::from_f64(0.3);
        assert_eq!(x.sign(), Ordering::Equal);
        assert!(x.is_exact());
    }

    #[test]
    fn property_a_examples() {
        let v = property_a(
            &spec(1, 0.0, 2.0, 2.0),
            &PriorSpec::besov(-1.0, -1.0, -1.0, 0.0, Gaussian),
        )
        .unwrap();
        assert!(v.holds);
        assert_eq!(v.branch, "A-strict");
        assert_eq!(v.margin("s + d/2 + alpha").unwrap().slack.to_f64(), -0.5);

        let v = property_a(
            &spec(1, -0.5, 2.0, 2.0),
            &PriorSpec::besov(0.0, -1.0, -1.0, -1.0, Gaussian),
        )
        .unwrap();
        assert!(v.holds);
        assert_eq!(v.branch, "A-boundary");

        let v = property_a(
            &spec(1, 0.0, f64::INFINITY, 2.0),
            &PriorSpec::besov(-1.0, 0.1, 0.0, 0.0, Gaussian),
        )
        .unwrap();
        assert!(!v.holds);
        assert!(!v.margin("beta").unwrap().satisfied);

        assert!(property_a(&spec(1, 0.0, 2.0, 2.0), &bern(-1.0, -1.0, -1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn property_a_prime_examples() {
        // s + d/2 + alpha = 0.4
        let p = bern(-0.1, -0.3, -0.3, -1.0, -1.0);
        let v = property_a_prime(&spec(1, 0.0, 2.0, 2.0), &p).unwrap();
        assert!(v.holds, "{v}");
        assert_eq!(v.branch, "A'-(a)");
        assert!((v.margins[0].slack.to_f64() + 0.3).abs() < 1e-15);
        assert!((v.margins[2].slack.to_f64() + 0.1).abs() < 1e-15);

        let p = bern(0.0, -0.3, -0.3, -1.0, -1.0);
        let v = property_a_prime(&spec(1, 0.0, 2.0, f64::INFINITY), &p).unwrap();
        assert!(v.holds);
        assert_eq!(v.branch, "A'-(b)");

        let p = bern(-0.5, 0.0, 0.0, 0.0, 0.0);
        let v = property_a_prime(&spec(1, 0.0, f64::INFINITY, f64::INFINITY), &p).unwrap();
        assert!(v.holds);
        assert_eq!(v.branch, "A'-(d)");

        assert!(property_a_prime(
            &spec(1, 0.0, 2.0, 2.0),
            &PriorSpec::besov(0.0, 0.0, 0.0, 0.0, Gaussian)
        )
        .is_err());
    }

    #[test]
    fn property_a_dprime_examples() {
        let p = bern(-0.1, -1.0, -1.0, -1.0, 0.0);
        let s = spec(1, 0.0, 2.0, 2.0);
        let v = property_a_dprime(&s, &p, 2.0).unwrap();
        assert!(v.holds);
        assert_eq!(v.branch, "A''-(a)");
        assert!(!property_a_dprime(&s, &p, 4.0).unwrap().holds);
        let p = bern(-0.5, 0.0, 0.0, -1.0, 0.0);
        let v = property_a_dprime(&spec(1, 0.0, f64::INFINITY, 2.0), &p, 1.0).unwrap();
        assert!(v.holds);
        assert_eq!(v.branch, "A''-(b)");
        assert!(property_a_dprime(&s, &p, 0.0).is_err());
    }

    #[test]
    fn property_b_examples() {
        assert!(property_b(&spec(1, 1.5, 2.0, 2.0), 2).unwrap().holds);
        let v = property_b(&spec(1, 0.0, 0.5, 2.0), 1).unwrap();
        assert!(!v.holds);
        assert_eq!(v.branch, "B-(a)");
        assert!(
            property_b_prime(1, Exponent::Finite(2.0), -0.5, 1)
                .unwrap()
                .holds
        );
        assert_eq!(min_k(&spec(1, 0.0, 0.5, 2.0), -0.5).unwrap(), 2);
        assert_eq!(min_k(&spec(1, 1.5, 2.0, 2.0), 0.0).unwrap(), 2);
        assert_eq!(min_k(&spec(1, 1.0, 2.0, 2.0), 0.0).unwrap(), 2);
    }

    #[test]
    fn verdict_renders_in_fixed_order() {
        let v = property_a(
            &spec(1, 0.0, 2.0, 2.0),
            &PriorSpec::besov(-1.0, -1.0, -1.0, 0.0, Gaussian),
        )
        .unwrap();
        let text = v.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "property=A");
        assert_eq!(lines[2], "branch=A-strict");
        assert!(lines[3].starts_with("gamma + d/p < 0"));
        assert!(lines[5].starts_with("s + d/2 + alpha < 0: slack=-1/2"));
    }
}
