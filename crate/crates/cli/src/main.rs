use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rws_cli::config::parse_coeff;
use rws_cli::presets::{preset, presets, PANEL_J_MAX, PANEL_ORDER, PANEL_WINDOW};
use rws_cli::{run, Command, Lemma, RunConfig};
use rws_core::seqspace::Exponent;
use rws_core::wavelets::default_smoothness;
use rws_core::{parse_real, CapPolicy, Family, Manifest, SpaceSpec, TemplateDistribution};

#[derive(Parser)]
#[command(
    name = "rws",
    version,
    about = "Random wavelet series priors: sampling, norms, conditions and Monte Carlo checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Synthesize one sample path on a grid.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sequence norm of a sampled or explicit coefficient field.
    Norm {
        #[command(flatten)]
        common: Common,
        /// Explicit coefficient `j:t:m1,..,md=value`; repeatable.
        #[arg(long = "coeff", value_name = "J:T:M=V")]
        coefficients: Vec<String>,
    },
    /// Evaluate the convergence and smoothness conditions.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = real)]
        r: Option<f64>,
    },
    /// Classify convergence from the growth of truncated norms.
    Phase {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        j_list: Option<Vec<u32>>,
    },
    /// Estimate E[norm^r].
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = real)]
        r: Option<f64>,
    },
    /// Scan E[exp(c norm^r)] over a geometric grid of c.
    Mgf {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = real)]
        r: Option<f64>,
        #[arg(long, value_parser = real)]
        c0: Option<f64>,
        #[arg(long, value_parser = real)]
        c_factor: Option<f64>,
        #[arg(long)]
        c_steps: Option<usize>,
    },
    /// Numeric checks of the auxiliary inequalities.
    Verify {
        #[command(flatten)]
        common: Common,
        /// paley-zygmund, binomial, sup-gaussian, xi-moment or master-bound.
        #[arg(long)]
        lemma: Lemma,
        /// Sample size of the sup-gaussian check.
        #[arg(long)]
        n: Option<u64>,
        /// Moment order of the xi-moment check.
        #[arg(long, value_parser = real)]
        r: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        j_list: Option<Vec<u32>>,
    },
    /// Re-run the configuration recorded in an artifact's header.
    Rerun {
        file: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// List the built-in figure presets.
    Presets,
}

#[derive(Args)]
struct IoArgs {
    /// Output directory.
    #[arg(long, env = "RWS_OUTPUT_DIR", default_value = ".")]
    output: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// One of the figure panels, e.g. besov00 or bernoulli12.
    #[arg(long)]
    preset: Option<String>,
    /// besov or bernoulli-besov.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    nu: Option<f64>,
    /// gaussian, uniform, rademacher, pareto:T, truncated-gaussian:R or constant:C.
    #[arg(long)]
    template: Option<TemplateDistribution>,
    /// Smoothness order of the wavelets; derived from the order by default.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long)]
    p: Option<Exponent>,
    #[arg(long)]
    q: Option<Exponent>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long)]
    j_max: Option<u32>,
    /// default, constant:C, covering:R:S or per-level:C0;C1;...
    #[arg(long)]
    cap: Option<CapPolicy>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Daubechies order N.
    #[arg(long)]
    order: Option<usize>,
    /// Cascade depth.
    #[arg(long)]
    depth: Option<u32>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    grid_lo: Option<f64>,
    #[arg(long, value_parser = real, allow_hyphen_values = true)]
    grid_hi: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

fn real(text: &str) -> std::result::Result<f64, String> {
    parse_real(text).map_err(|e| e.to_string())
}

fn build(command: Command, c: Common) -> Result<RunConfig> {
    let mut config = RunConfig::new(command);
    if let Some(name) = &c.preset {
        let p = preset(name).with_context(|| format!("unknown preset '{name}'"))?;
        config.prior = p.prior;
        config.order = PANEL_ORDER;
        config.j_max = PANEL_J_MAX;
        config.grid.lo = PANEL_WINDOW.0;
        config.grid.hi = PANEL_WINDOW.1;
        config.preset = Some(name.clone());
    }
    let prior = &mut config.prior;
    match c.family.as_deref() {
        None => {}
        Some("besov") => {
            prior.family = Family::Besov {
                theta: prior.theta(),
            }
        }
        Some("bernoulli-besov") => {
            if !prior.is_bernoulli() {
                prior.family = Family::BernoulliBesov { mu: 0.0, nu: 0.0 };
            }
        }
        Some(other) => anyhow::bail!("unknown family '{other}'"),
    }
    match &mut prior.family {
        Family::Besov { theta } => {
            if c.mu.is_some() || c.nu.is_some() {
                anyhow::bail!("--mu and --nu need --family bernoulli-besov");
            }
            *theta = c.theta.unwrap_or(*theta);
        }
        Family::BernoulliBesov { mu, nu } => {
            if c.theta.is_some() {
                anyhow::bail!("--theta applies to the besov family only");
            }
            *mu = c.mu.unwrap_or(*mu);
            *nu = c.nu.unwrap_or(*nu);
        }
    }
    prior.alpha = c.alpha.unwrap_or(prior.alpha);
    prior.beta = c.beta.unwrap_or(prior.beta);
    prior.gamma = c.gamma.unwrap_or(prior.gamma);
    if let Some(t) = c.template {
        prior.template = t;
    }
    let s = config.space;
    config.space = SpaceSpec::new(
        c.d.unwrap_or(s.d),
        c.s.unwrap_or(s.s),
        c.p.unwrap_or(s.p),
        c.q.unwrap_or(s.q),
        c.sigma.unwrap_or(s.sigma),
    )?;
    config.j_max = c.j_max.unwrap_or(config.j_max);
    config.trials = c.trials.unwrap_or(config.trials);
    config.seed = c.seed.unwrap_or(config.seed);
    config.order = c.order.unwrap_or(config.order);
    config.depth = c.depth.unwrap_or(config.depth);
    config.prior.k =
        c.k.unwrap_or_else(|| default_smoothness(config.order).max(1));
    if let Some(cap) = c.cap {
        config.cap = cap;
    }
    config.output = c.io.output;
    config.threads = c.io.threads;
    Ok(config)
}

fn configure(sub: Sub) -> Result<Option<RunConfig>> {
    let config = match sub {
        Sub::Sample { common, grid } => {
            let explicit_cap = common.cap.is_some();
            let mut c = build(Command::Sample, common)?;
            c.grid.lo = grid.grid_lo.unwrap_or(c.grid.lo);
            c.grid.hi = grid.grid_hi.unwrap_or(c.grid.hi);
            c.grid.points = grid.grid_points.unwrap_or(c.grid.points);
            if !explicit_cap {
                c.cap = CapPolicy::Covering {
                    radius: c.grid.lo.abs().max(c.grid.hi.abs()),
                    support: 2 * c.order as u64,
                };
            }
            c
        }
        Sub::Norm {
            common,
            coefficients,
        } => {
            let mut c = build(Command::Norm, common)?;
            c.coefficients = coefficients
                .iter()
                .map(|t| parse_coeff(t))
                .collect::<rws_core::Result<_>>()?;
            c
        }
        Sub::Check { common, r } => {
            let mut c = build(Command::Check, common)?;
            c.r = r.unwrap_or(c.r);
            c
        }
        Sub::Phase { common, j_list } => {
            let mut c = build(Command::Phase, common)?;
            c.j_list = j_list.unwrap_or(c.j_list);
            c
        }
        Sub::Moments { common, r } => {
            let mut c = build(Command::Moments, common)?;
            c.r = r.unwrap_or(c.r);
            c
        }
        Sub::Mgf {
            common,
            r,
            c0,
            c_factor,
            c_steps,
        } => {
            let mut c = build(Command::Mgf, common)?;
            c.r = r.unwrap_or(c.r);
            c.c0 = c0.unwrap_or(c.c0);
            c.c_factor = c_factor.unwrap_or(c.c_factor);
            c.c_steps = c_steps.unwrap_or(c.c_steps);
            c
        }
        Sub::Verify {
            common,
            lemma,
            n,
            r,
            j_list,
        } => {
            let mut c = build(Command::Verify, common)?;
            c.lemma = lemma;
            c.n = n.unwrap_or(c.n);
            c.r = r.unwrap_or(1.0);
            c.j_list = j_list.unwrap_or_else(|| vec![4, 6, 8, 10]);
            c
        }
        Sub::Rerun { file, io } => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            let mut c = RunConfig::from_manifest(&Manifest::parse(&text)?)?;
            c.output = io.output;
            c.threads = io.threads;
            c
        }
        Sub::Presets => {
            for p in presets() {
                println!("{}: {:?}", p.name, p.prior);
            }
            return Ok(None);
        }
    };
    Ok(Some(config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure(cli.command).and_then(|config| {
        let Some(config) = config else { return Ok(()) };
        if let Some(n) = config.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("cannot configure the thread pool")?;
        }
        let outcome = run(&config)?;
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
        for f in &outcome.files {
            eprintln!("wrote {}", f.display());
        }
        println!("{}", outcome.summary);
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<rws_core::Error>() {
                Some(rws_core::Error::Input(_) | rws_core::Error::Precondition(_)) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}
