//! Weighted Besov sequence norms over truncated coefficient fields.
//!
//! The norm is
//! `|| ( 2^{j(s+d/2-d/p)} || (w(2^{-(j - [j!=0])} m) |a_{j,t,m}|)_m ||_p )_{j,t} ||_q`
//! with the polynomial weight `w_sigma(x) = (1 + |x|_2^2)^{sigma/2}`. Only the
//! stored truncation is summed; nothing is extrapolated.

use std::fmt;
use std::str::FromStr;

use crate::error::{input, require_finite, Error, Result};
use crate::lattice::{cube_count, sup_norm, type_is_valid, types_at, BasisIndex, Neumaier};
use crate::priors::PriorSpec;

/// An exponent in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value <= 0.0 {
            return input(format!("exponent must lie in (0, inf], got {value}"));
        }
        Ok(if value.is_infinite() {
            Exponent::Infinite
        } else {
            Exponent::Finite(value)
        })
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `1/p`, zero for `p = inf`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinite => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "INF" => Ok(Exponent::Infinite),
            other => Exponent::new(crate::parse_real(other)?),
        }
    }
}

/// Target space `b^s_{p,q}(R^d, w_sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceSpec {
    pub d: usize,
    pub s: f64,
    pub p: Exponent,
    pub q: Exponent,
    /// Weight exponent, 0 for the unweighted space.
    pub sigma: f64,
}

impl SpaceSpec {
    pub fn new(d: usize, s: f64, p: Exponent, q: Exponent, sigma: f64) -> Result<Self> {
        let spec = SpaceSpec { d, s, p, q, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn unweighted(d: usize, s: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(d, s, Exponent::new(p)?, Exponent::new(q)?, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return input("dimension must be at least 1");
        }
        require_finite("smoothness s", self.s)?;
        require_finite("weight exponent sigma", self.sigma)?;
        for (name, e) in [("p", self.p), ("q", self.q)] {
            if let Exponent::Finite(v) = e {
                if !(v.is_finite() && v > 0.0) {
                    return input(format!("{name} must lie in (0, inf], got {v}"));
                }
            }
        }
        Ok(())
    }

    /// Exponent `s + d/2 - d/p` of the level factor.
    pub fn level_exponent(&self) -> f64 {
        self.s + self.d as f64 / 2.0 - self.d as f64 * self.p.recip()
    }
}

/// `w_sigma(x) = (1 + |x|_2^2)^{sigma/2}`.
pub fn weight_w_sigma(x: &[f64], sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (1.0 + r2).powf(sigma / 2.0)
}

/// How many shifts are stored per level.
#[derive(Debug, Clone, PartialEq)]
pub enum CapPolicy {
    /// `cap(j) = max(2^{j+2}, 32)`.
    Default,
    Constant(u64),
    /// The default, widened so that every basis function touching
    /// `[-radius, radius]^d` is stored (`support` is the wavelet support length).
    Covering {
        radius: f64,
        support: u64,
    },
    PerLevel(Vec<u64>),
}

impl CapPolicy {
    pub fn cap(&self, j: u32) -> u64 {
        let default = (1u64 << (j + 2).min(62)).max(32);
        match self {
            CapPolicy::Default => default,
            CapPolicy::Constant(c) => *c,
            CapPolicy::Covering { radius, support } => {
                let scale = if j == 0 { 1.0 } else { ((j - 1) as f64).exp2() };
                default.max((scale * radius).ceil() as u64 + support)
            }
            CapPolicy::PerLevel(caps) => caps.get(j as usize).copied().unwrap_or(0),
        }
    }
}

impl fmt::Display for CapPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapPolicy::Default => f.write_str("default"),
            CapPolicy::Constant(c) => write!(f, "constant:{c}"),
            CapPolicy::Covering { radius, support } => write!(f, "covering:{radius}:{support}"),
            CapPolicy::PerLevel(caps) => {
                f.write_str("per-level:")?;
                let parts: Vec<String> = caps.iter().map(u64::to_string).collect();
                f.write_str(&parts.join(";"))
            }
        }
    }
}

impl FromStr for CapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("unrecognized cap policy '{s}'"));
        let mut parts = s.trim().splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        match (head, rest) {
            ("default", None) => Ok(CapPolicy::Default),
            ("constant", Some(c)) => Ok(CapPolicy::Constant(c.parse().map_err(|_| bad())?)),
            ("covering", Some(rest)) => {
                let (r, sup) = rest.split_once(':').ok_or_else(bad)?;
                let radius: f64 = r.parse().map_err(|_| bad())?;
                if !radius.is_finite() || radius < 0.0 {
                    return Err(bad());
                }
                Ok(CapPolicy::Covering {
                    radius,
                    support: sup.parse().map_err(|_| bad())?,
                })
            }
            ("per-level", Some(list)) => {
                let caps = if list.is_empty() {
                    Vec::new()
                } else {
                    list.split(';')
                        .map(|c| c.parse().map_err(|_| bad()))
                        .collect::<Result<_>>()?
                };
                Ok(CapPolicy::PerLevel(caps))
            }
            _ => Err(bad()),
        }
    }
}

/// Stored index range: levels `0..=j_max`, shifts `|m|_inf <= cap(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub d: usize,
    pub j_max: u32,
    pub cap: CapPolicy,
}

impl Truncation {
    pub fn new(d: usize, j_max: u32, cap: CapPolicy) -> Result<Self> {
        if d == 0 || d > 8 {
            return input(format!("dimension must be in 1..=8, got {d}"));
        }
        if j_max > 40 {
            return input(format!("J_max {j_max} is beyond the supported range"));
        }
        Ok(Truncation { d, j_max, cap })
    }

    /// Total number of stored coefficients, checked.
    pub fn size(&self) -> Result<u128> {
        let mut total: u128 = 0;
        for j in 0..=self.j_max {
            let per = cube_count(self.d, self.cap.cap(j))?;
            let n = per * types_at(j, self.d).len() as u128;
            total = total.checked_add(n).ok_or(Error::Overflow("field size"))?;
        }
        Ok(total)
    }

    /// Fails with a resource error naming the first level that breaks `budget`.
    pub fn check_budget(&self, budget: u128) -> Result<()> {
        let mut total: u128 = 0;
        for j in 0..=self.j_max {
            let per = cube_count(self.d, self.cap.cap(j)).map_err(|_| Error::Resource {
                level: j,
                requested: u128::MAX,
                budget,
            })?;
            total = total.saturating_add(per.saturating_mul(types_at(j, self.d).len() as u128));
            if total > budget {
                return Err(Error::Resource {
                    level: j,
                    requested: total,
                    budget,
                });
            }
        }
        Ok(())
    }
}

/// Dense values of one `(j, t)` block over the cube `|m|_inf <= cap`,
/// stored in lexicographic shift order.
#[derive(Debug, Clone, PartialEq)]
pub struct Level<T = f64> {
    pub j: u32,
    pub t: u32,
    pub cap: u64,
    d: usize,
    values: Vec<T>,
}

impl<T: Copy + Default> Level<T> {
    pub fn filled(j: u32, t: u32, cap: u64, d: usize, fill: impl Fn(&[i64]) -> T) -> Self {
        let side = 2 * cap as usize + 1;
        let len = side.pow(d as u32);
        let mut values = Vec::with_capacity(len);
        let mut m = vec![-(cap as i64); d];
        for _ in 0..len {
            values.push(fill(&m));
            for k in (0..d).rev() {
                if m[k] < cap as i64 {
                    m[k] += 1;
                    break;
                }
                m[k] = -(cap as i64);
            }
        }
        Level {
            j,
            t,
            cap,
            d,
            values,
        }
    }

    pub fn from_values(j: u32, t: u32, cap: u64, d: usize, values: Vec<T>) -> Result<Self> {
        if values.len() as u128 != cube_count(d, cap)? {
            return input("level value count does not match its cube");
        }
        Ok(Level {
            j,
            t,
            cap,
            d,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn offset(&self, m: &[i64]) -> Option<usize> {
        let cap = self.cap as i64;
        let side = 2 * cap + 1;
        let mut pos: i64 = 0;
        for &c in m {
            if c < -cap || c > cap {
                return None;
            }
            pos = pos * side + (c + cap);
        }
        Some(pos as usize)
    }

    pub fn shift_at(&self, mut pos: usize) -> Vec<i64> {
        let side = 2 * self.cap as usize + 1;
        let mut m = vec![0; self.d];
        for k in (0..self.d).rev() {
            m[k] = (pos % side) as i64 - self.cap as i64;
            pos /= side;
        }
        m
    }

    /// Value at `m`, default outside the stored cube.
    pub fn get(&self, m: &[i64]) -> T {
        self.offset(m).map(|i| self.values[i]).unwrap_or_default()
    }

    /// `(shift, value)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.shift_at(i), v))
    }
}

/// Where a field came from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldOrigin {
    Explicit,
    Prior { prior: PriorSpec, seed: u64 },
}

/// Truncated coefficient sequence `a_{j,t,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub truncation: Truncation,
    pub origin: FieldOrigin,
    levels: Vec<Level>,
}

impl CoefficientField {
    pub fn from_levels(
        truncation: Truncation,
        origin: FieldOrigin,
        levels: Vec<Level>,
    ) -> Result<Self> {
        for level in &levels {
            if level.d != truncation.d || !type_is_valid(level.j, level.t, truncation.d) {
                return input(format!("invalid level (j={}, t={})", level.j, level.t));
            }
            if level.j > truncation.j_max {
                return input(format!(
                    "level {} exceeds J_max {}",
                    level.j, truncation.j_max
                ));
            }
            if level.values.iter().any(|v| !v.is_finite()) {
                return input(format!("non-finite coefficient at level {}", level.j));
            }
        }
        Ok(CoefficientField {
            truncation,
            origin,
            levels,
        })
    }

    /// A field without any stored coefficient.
    pub fn empty(d: usize) -> Result<Self> {
        Ok(CoefficientField {
            truncation: Truncation::new(d, 0, CapPolicy::PerLevel(Vec::new()))?,
            origin: FieldOrigin::Explicit,
            levels: Vec::new(),
        })
    }

    /// Field holding exactly the listed coefficients (zeros elsewhere in the
    /// smallest cubes containing them).
    pub fn explicit(d: usize, entries: &[(BasisIndex, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Self::empty(d);
        }
        for (idx, v) in entries {
            idx.validate(d)?;
            require_finite("coefficient", *v)?;
        }
        let j_max = entries.iter().map(|(i, _)| i.j).max().unwrap_or(0);
        let mut caps = vec![0u64; j_max as usize + 1];
        for (idx, _) in entries {
            let c = &mut caps[idx.j as usize];
            *c = (*c).max(sup_norm(&idx.m));
        }
        let truncation = Truncation::new(d, j_max, CapPolicy::PerLevel(caps.clone()))?;
        let mut levels = Vec::new();
        for j in 0..=j_max {
            for t in types_at(j, d) {
                if !entries.iter().any(|(i, _)| i.j == j && i.t == t) {
                    continue;
                }
                let mut level = Level::filled(j, t, caps[j as usize], d, |_| 0.0);
                for (idx, v) in entries.iter().filter(|(i, _)| i.j == j && i.t == t) {
                    let pos = level.offset(&idx.m).expect("cap covers entry");
                    level.values[pos] += *v;
                }
                levels.push(level);
            }
        }
        Ok(CoefficientField {
            truncation,
            origin: FieldOrigin::Explicit,
            levels,
        })
    }

    pub fn d(&self) -> usize {
        self.truncation.d
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, j: u32, t: u32) -> Option<&Level> {
        self.levels.iter().find(|l| l.j == j && l.t == t)
    }

    pub fn get(&self, idx: &BasisIndex) -> f64 {
        self.level(idx.j, idx.t)
            .map(|l| l.get(&idx.m))
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The field multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for level in out.levels.iter_mut() {
            for v in level.values.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Restriction to levels `j <= j_max`.
    pub fn restrict(&self, j_max: u32) -> Self {
        let mut out = self.clone();
        out.levels.retain(|l| l.j <= j_max);
        out.truncation.j_max = self.truncation.j_max.min(j_max);
        out
    }
}

/// `l_p` norm with a rescaling pass, so huge or tiny magnitudes do not
/// overflow or underflow in `x^p`.
pub(crate) fn lp_norm(values: &[f64], p: Exponent) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 || !max.is_finite() {
        return max;
    }
    match p {
        Exponent::Infinite => max,
        Exponent::Finite(p) => {
            let s: Neumaier = values.iter().map(|v| (v.abs() / max).powf(p)).collect();
            max * s.total().powf(1.0 / p)
        }
    }
}

fn level_weight(j: u32, m: &[i64], sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let shift = if j == 0 { 0 } else { j - 1 };
    let scale = (-(shift as f64)).exp2();
    let x: Vec<f64> = m.iter().map(|&c| c as f64 * scale).collect();
    weight_w_sigma(&x, sigma)
}

/// Weighted `l_p` norm of one stored `(j, t)` block; zero if not stored.
pub fn level_norm(field: &CoefficientField, j: u32, t: u32, spec: &SpaceSpec) -> f64 {
    match field.level(j, t) {
        Some(level) => block_norm(level, spec),
        None => 0.0,
    }
}

fn block_norm(level: &Level, spec: &SpaceSpec) -> f64 {
    let weighted: Vec<f64> = if spec.sigma == 0.0 {
        level.values.clone()
    } else {
        level
            .iter()
            .map(|(m, v)| level_weight(level.j, &m, spec.sigma) * v)
            .collect()
    };
    lp_norm(&weighted, spec.p)
}

/// One `(j, t)` term of the outer `l_q` sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelTerm {
    pub j: u32,
    pub t: u32,
    /// Weighted `l_p` norm over shifts.
    pub level_norm: f64,
    /// `2^{j(s+d/2-d/p)} * level_norm`.
    pub term: f64,
}

/// Norm together with its low/high frequency split.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub total: f64,
    /// The `j = 0` block.
    pub eta1: f64,
    /// `l_q` over the `j >= 1` blocks.
    pub eta2: f64,
    pub per_level: Vec<LevelTerm>,
    pub q: Exponent,
    pub j_max: u32,
    pub cap: CapPolicy,
}

impl NormReport {
    /// Norm of the restriction to levels `j <= j_max`.
    pub fn total_up_to(&self, j_max: u32) -> f64 {
        let terms: Vec<f64> = self
            .per_level
            .iter()
            .filter(|l| l.j <= j_max)
            .map(|l| l.term)
            .collect();
        lp_norm(&terms, self.q)
    }

    /// Sum of `term^q` over levels `j <= j_max` (`q < inf`).
    pub fn power_sum_up_to(&self, j_max: u32) -> f64 {
        match self.q {
            Exponent::Finite(q) => self
                .per_level
                .iter()
                .filter(|l| l.j <= j_max)
                .map(|l| l.term.powf(q))
                .collect::<Neumaier>()
                .total(),
            Exponent::Infinite => self.total_up_to(j_max),
        }
    }
}

/// Weighted Besov sequence (quasi-)norm of a truncated field.
pub fn seq_norm(field: &CoefficientField, spec: &SpaceSpec) -> Result<NormReport> {
    spec.validate()?;
    if field.d() != spec.d {
        return input(format!(
            "field dimension {} does not match space dimension {}",
            field.d(),
            spec.d
        ));
    }
    let exponent = spec.level_exponent();
    let per_level: Vec<LevelTerm> = field
        .levels
        .iter()
        .map(|level| {
            let norm = block_norm(level, spec);
            LevelTerm {
                j: level.j,
                t: level.t,
                level_norm: norm,
                term: (level.j as f64 * exponent).exp2() * norm,
            }
        })
        .collect();
    let low: Vec<f64> = per_level
        .iter()
        .filter(|l| l.j == 0)
        .map(|l| l.term)
        .collect();
    let high: Vec<f64> = per_level
        .iter()
        .filter(|l| l.j > 0)
        .map(|l| l.term)
        .collect();
    let all: Vec<f64> = per_level.iter().map(|l| l.term).collect();
    Ok(NormReport {
        total: lp_norm(&all, spec.q),
        eta1: lp_norm(&low, spec.q),
        eta2: lp_norm(&high, spec.q),
        per_level,
        q: spec.q,
        j_max: field.truncation.j_max,
        cap: field.truncation.cap.clone(),
    })
}

/// Prior whose unweighted norm matches the `w_sigma`-weighted norm of
/// `prior` up to constants: `beta -> beta + sigma`, `gamma -> gamma + sigma`.
pub fn weight_shift(prior: &PriorSpec, sigma: f64) -> PriorSpec {
    let mut out = prior.clone();
    out.beta += sigma;
    out.gamma += sigma;
    out
}
