//! Run configuration and its manifest form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rws_core::seqspace::Exponent;
use rws_core::{
    parse_real, BasisIndex, CapPolicy, Error, Manifest, PriorSpec, Result, SpaceSpec,
    TemplateDistribution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sample,
    Norm,
    Check,
    Phase,
    Moments,
    Mgf,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Sample,
        Command::Norm,
        Command::Check,
        Command::Phase,
        Command::Moments,
        Command::Mgf,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Norm => "norm",
            Command::Check => "check",
            Command::Phase => "phase",
            Command::Moments => "moments",
            Command::Mgf => "mgf",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown command '{s}'")))
    }
}

/// Numeric check run by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    PaleyZygmund,
    Binomial,
    SupGaussian,
    XiMoment,
    MasterBound,
}

impl Lemma {
    pub const ALL: [Lemma; 5] = [
        Lemma::PaleyZygmund,
        Lemma::Binomial,
        Lemma::SupGaussian,
        Lemma::XiMoment,
        Lemma::MasterBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::PaleyZygmund => "paley-zygmund",
            Lemma::Binomial => "binomial",
            Lemma::SupGaussian => "sup-gaussian",
            Lemma::XiMoment => "xi-moment",
            Lemma::MasterBound => "master-bound",
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lemma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown lemma '{s}'")))
    }
}

/// Evaluation grid of `sample`: `points` equispaced values per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Input(format!(
                "grid range needs lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.points < 2 {
            return Err(Error::Input("grid needs at least 2 points".into()));
        }
        Ok(())
    }

    pub fn axis(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.hi
                } else {
                    self.lo + i as f64 * step
                }
            })
            .collect()
    }
}

/// Everything a command needs. The output directory and thread count are
/// not part of the manifest, since they do not affect results.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Option<String>,
    pub prior: PriorSpec,
    pub space: SpaceSpec,
    pub j_max: u32,
    pub cap: CapPolicy,
    pub trials: usize,
    pub seed: u64,
    /// Daubechies order `N`.
    pub order: usize,
    pub depth: u32,
    pub grid: Grid,
    pub j_list: Vec<u32>,
    /// Moment order for `moments`, `mgf`, `check` (A'') and `xi-moment`.
    pub r: f64,
    pub c0: f64,
    pub c_factor: f64,
    pub c_steps: usize,
    pub lemma: Lemma,
    /// Dimension of the `sup-gaussian` check.
    pub n: u64,
    pub coefficients: Vec<(BasisIndex, f64)>,
    pub output: PathBuf,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Defaults: the first published Besov panel measured in `b^0_{2,2}`.
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            preset: None,
            prior: PriorSpec::besov(-1.0, -1.0, -1.0, 0.0, TemplateDistribution::Gaussian),
            space: SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).expect("valid"),
            j_max: 10,
            cap: CapPolicy::Default,
            trials: 100,
            seed: 0,
            order: 10,
            depth: 10,
            grid: Grid {
                lo: -25.0,
                hi: 25.0,
                points: 1001,
            },
            j_list: (4..=12).collect(),
            r: 2.0,
            c0: 1.0,
            c_factor: 0.5,
            c_steps: 20,
            lemma: Lemma::PaleyZygmund,
            n: 1 << 16,
            coefficients: Vec::new(),
            output: PathBuf::from("."),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        self.space.validate()?;
        self.grid.validate()?;
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Input(format!("r must be positive, got {}", self.r)));
        }
        for (idx, v) in &self.coefficients {
            idx.validate(self.space.d)?;
            if !v.is_finite() {
                return Err(Error::Input(format!("coefficient {v} is not finite")));
            }
        }
        Ok(())
    }

    /// File stem of the main artifact.
    pub fn stem(&self) -> String {
        match (&self.preset, self.command) {
            (Some(p), Command::Sample) => p.clone(),
            _ => self.command.name().to_string(),
        }
    }

    pub fn to_manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        m.set("command", self.command);
        if let Some(p) = &self.preset {
            m.set("preset", p);
        }
        self.prior.write_manifest(&mut m);
        m.set("d", self.space.d)
            .set("s", self.space.s)
            .set("p", self.space.p)
            .set("q", self.space.q)
            .set("sigma", self.space.sigma)
            .set("j_max", self.j_max)
            .set("cap", &self.cap)
            .set("trials", self.trials)
            .set("seed", self.seed)
            .set("order", self.order)
            .set("depth", self.depth)
            .set("grid_lo", self.grid.lo)
            .set("grid_hi", self.grid.hi)
            .set("grid_points", self.grid.points)
            .set("j_list", join(self.j_list.iter(), ";"))
            .set("r", self.r)
            .set("c0", self.c0)
            .set("c_factor", self.c_factor)
            .set("c_steps", self.c_steps)
            .set("lemma", self.lemma)
            .set("n", self.n)
            .set(
                "coefficients",
                join(
                    self.coefficients.iter().map(|(i, v)| format_coeff(i, *v)),
                    ";",
                ),
            );
        m
    }

    /// Inverse of [`RunConfig::to_manifest`]; unknown keys are ignored.
    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let real = |k: &str| parse_real(m.require(k)?);
        let exponent = |k: &str| m.parse_value::<Exponent>(k);
        let space = SpaceSpec::new(
            m.parse_value("d")?,
            real("s")?,
            exponent("p")?,
            exponent("q")?,
            real("sigma")?,
        )?;
        let j_list = split(m.require("j_list")?)
            .map(|v| v.parse().map_err(|_| Error::Input(format!("bad J '{v}'"))))
            .collect::<Result<_>>()?;
        let coefficients = split(m.require("coefficients")?)
            .map(parse_coeff)
            .collect::<Result<_>>()?;
        let config = RunConfig {
            command: m.parse_value("command")?,
            preset: m.get("preset").map(str::to_string),
            prior: PriorSpec::from_manifest(m)?,
            space,
            j_max: m.parse_value("j_max")?,
            cap: m.parse_value("cap")?,
            trials: m.parse_value("trials")?,
            seed: m.parse_value("seed")?,
            order: m.parse_value("order")?,
            depth: m.parse_value("depth")?,
            grid: Grid {
                lo: real("grid_lo")?,
                hi: real("grid_hi")?,
                points: m.parse_value("grid_points")?,
            },
            j_list,
            r: real("r")?,
            c0: real("c0")?,
            c_factor: real("c_factor")?,
            c_steps: m.parse_value("c_steps")?,
            lemma: m.parse_value("lemma")?,
            n: m.parse_value("n")?,
            coefficients,
            output: PathBuf::from("."),
            threads: None,
        };
        config.validate()?;
        Ok(config)
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>, sep: &str) -> String {
    items.map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

fn split(list: &str) -> impl Iterator<Item = &str> {
    list.split(';').map(str::trim).filter(|s| !s.is_empty())
}

pub fn format_coeff(idx: &BasisIndex, value: f64) -> String {
    format!("{}:{}:{}={}", idx.j, idx.t, join(idx.m.iter(), ","), value)
}

/// Parses `j:t:m1,...,md=value`.
pub fn parse_coeff(text: &str) -> Result<(BasisIndex, f64)> {
    let bad = || {
        Error::Input(format!(
            "coefficient '{text}' is not of the form j:t:m1,..,md=value"
        ))
    };
    let (index, value) = text.split_once('=').ok_or_else(bad)?;
    let mut parts = index.split(':');
    let (Some(j), Some(t), Some(m), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(bad());
    };
    let j = j.trim().parse().map_err(|_| bad())?;
    let t = t.trim().parse().map_err(|_| bad())?;
    let m = m
        .split(',')
        .map(|c| c.trim().parse().map_err(|_| bad()))
        .collect::<Result<Vec<i64>>>()?;
    Ok((BasisIndex::new(j, t, m)?, parse_real(value)?))
}
