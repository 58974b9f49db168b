//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns a short human-readable summary.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use rws_core::analysis::{
    closed_form_second_moment, estimate_moment, master_bound_ratio, mgf_scan, phase_classify,
    run_trials, sup_gaussian_oracle, verify_binomial_bound, verify_paley_zygmund,
    verify_sup_gaussian, verify_xi_moment_stability, FiniteDistribution, MgfValue, MonteCarlo,
    PhaseConfig, XiKind, XiMomentConfig,
};
use rws_core::conditions::Property;
use rws_core::rng::KeyedStream;
use rws_core::seqspace::Exponent;
use rws_core::{
    property_a, property_a_dprime, property_a_prime, property_b, property_b_prime, sample_draws,
    sample_field, seq_norm, CoefficientField, Manifest, PropertyVerdict, Truncation, WaveletSystem,
};

use crate::config::{Command, Lemma, RunConfig};
use crate::csv::{format_real, CsvWriter};

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub warnings: Vec<String>,
}

/// Convergence property of the prior's family plus B and B'.
pub fn verdicts(config: &RunConfig) -> Result<Vec<PropertyVerdict>> {
    let (space, prior) = (&config.space, &config.prior);
    let mut out = if prior.is_bernoulli() {
        vec![
            property_a_prime(space, prior)?,
            property_a_dprime(space, prior, config.r)?,
        ]
    } else {
        vec![property_a(space, prior)?]
    };
    out.push(property_b(space, prior.k)?);
    out.push(property_b_prime(space.d, space.p, prior.alpha, prior.k)?);
    Ok(out)
}

fn record_verdicts(manifest: &mut Manifest, verdicts: &[PropertyVerdict]) {
    for v in verdicts {
        let key = format!("verdict.{}", v.property);
        manifest.set(&key, if v.holds { "holds" } else { "fails" });
        manifest.set(format!("{key}.branch"), v.branch);
        for m in &v.margins {
            manifest.set(format!("{key}.margin.{}", m.label), m.slack);
        }
    }
}

fn smoothness_warnings(config: &RunConfig, verdicts: &[PropertyVerdict]) -> Vec<String> {
    verdicts
        .iter()
        .filter(|v| !v.holds && matches!(v.property, Property::B | Property::BPrime))
        .map(|v| {
            let failing: Vec<String> = v
                .margins
                .iter()
                .filter(|m| !m.satisfied)
                .map(|m| format!("{} {} 0 (slack {})", m.label, m.relation, m.slack))
                .collect();
            format!(
                "Property {} fails for N={} (k={}): {}",
                v.property,
                config.order,
                config.prior.k,
                failing.join(", ")
            )
        })
        .collect()
}

fn mc(config: &RunConfig) -> MonteCarlo {
    MonteCarlo {
        j_max: config.j_max,
        cap: config.cap.clone(),
        trials: config.trials,
        seed: config.seed,
    }
}

fn finite_p(config: &RunConfig) -> Result<f64> {
    match config.space.p {
        Exponent::Finite(p) => Ok(p),
        Exponent::Infinite => bail!("this check needs a finite p"),
    }
}

fn set_real(m: &mut Manifest, key: &str, x: f64) {
    m.set(key, format_real(x));
}

/// Runs the configured command.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    std::fs::create_dir_all(&config.output)
        .with_context(|| format!("cannot create {}", config.output.display()))?;
    let verdicts = verdicts(config)?;
    let warnings = smoothness_warnings(config, &verdicts);
    let mut manifest = config.to_manifest();
    record_verdicts(&mut manifest, &verdicts);
    let path = config.output.join(format!("{}.csv", config.stem()));
    let summary = match config.command {
        Command::Sample => sample(config, &mut manifest, &path)?,
        Command::Norm => norm(config, &mut manifest, &path)?,
        Command::Check => check(&verdicts, &mut manifest, &path)?,
        Command::Phase => phase(config, &mut manifest, &path)?,
        Command::Moments => moments(config, &mut manifest, &path)?,
        Command::Mgf => mgf(config, &mut manifest, &path)?,
        Command::Verify => verify(config, &mut manifest, &path)?,
    };
    Ok(Outcome {
        files: vec![path],
        summary,
        warnings,
    })
}

fn create(
    path: &Path,
    manifest: &Manifest,
) -> Result<CsvWriter<std::io::BufWriter<std::fs::File>>> {
    CsvWriter::create(path, manifest).with_context(|| format!("cannot write {}", path.display()))
}

fn grid_points(config: &RunConfig) -> Result<Vec<Vec<f64>>> {
    let axis = config.grid.axis();
    let d = config.space.d as u32;
    let total = (axis.len() as u128)
        .checked_pow(d)
        .filter(|n| *n <= 10_000_000);
    let Some(total) = total else {
        bail!("grid of {}^{d} points exceeds 10^7", axis.len());
    };
    let mut points = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; d as usize];
    loop {
        points.push(idx.iter().map(|&i| axis[i]).collect());
        let mut k = d as usize;
        loop {
            if k == 0 {
                return Ok(points);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn sample(config: &RunConfig, manifest: &mut Manifest, path: &Path) -> Result<String> {
    let d = config.space.d;
    let system = WaveletSystem::daubechies(config.order, config.depth, d)?;
    let truncation = Truncation::new(d, config.j_max, config.cap.clone())?;
    let field = sample_field(&config.prior, &truncation, config.seed)?;
    let grid = grid_points(config)?;
    let values = system.synthesize(&field, &grid)?;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let axes: Vec<String> = (1..=d)
        .map(|k| if d == 1 { "x".into() } else { format!("x{k}") })
        .collect();
    manifest.set("columns", format!("{},y", axes.join(",")));
    set_real(manifest, "result.min", lo);
    set_real(manifest, "result.max", hi);
    let mut w = create(path, manifest)?;
    let mut row = Vec::with_capacity(d + 1);
    for (x, y) in grid.iter().zip(&values) {
        row.clear();
        row.extend_from_slice(x);
        row.push(*y);
        w.row(&row)?;
    }
    w.finish()?;
    Ok(format!(
        "{} points, values in [{}, {}]",
        values.len(),
        format_real(lo),
        format_real(hi)
    ))
}

fn norm(config: &RunConfig, manifest: &mut Manifest, path: &Path) -> Result<String> {
    let field = if config.coefficients.is_empty() {
        let truncation = Truncation::new(config.space.d, config.j_max, config.cap.clone())?;
        sample_field(&config.prior, &truncation, config.seed)?
    } else {
        CoefficientField::explicit(config.space.d, &config.coefficients)?
    };
    let report = seq_norm(&field, &config.space)?;
    manifest.set("columns", "j,t,level_norm,term");
    set_real(manifest, "result.total", report.total);
    set_real(manifest, "result.eta1", report.eta1);
    set_real(manifest, "result.eta2", report.eta2);
    let mut w = create(path, manifest)?;
    for term in &report.per_level {
        w.row(&[term.j as f64, term.t as f64, term.level_norm, term.term])?;
    }
    w.finish()?;
    Ok(format_real(report.total))
}

fn check(verdicts: &[PropertyVerdict], manifest: &mut Manifest, path: &Path) -> Result<String> {
    manifest.set("columns", "property,margin,slack,satisfied");
    let mut w = create(path, manifest)?;
    for (i, v) in verdicts.iter().enumerate() {
        for (k, m) in v.margins.iter().enumerate() {
            w.row(&[
                i as f64,
                k as f64,
                m.slack.to_f64(),
                m.satisfied as u8 as f64,
            ])?;
        }
    }
    w.finish()?;
    Ok(verdicts
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("\n"))
}

fn phase(config: &RunConfig, manifest: &mut Manifest, path: &Path) -> Result<String> {
    let phase_config = PhaseConfig {
        j_list: config.j_list.clone(),
        trials: config.trials,
        seed: config.seed,
        cap: config.cap.clone(),
    };
    let v = phase_classify(&config.prior, &config.space, &phase_config)?;
    manifest.set("columns", "trial,J,partial_norm,slope,kappa");
    manifest.set("result.classification", v.classification);
    set_real(manifest, "result.slope", v.slope);
    set_real(manifest, "result.kappa", v.kappa);
    manifest.set("result.used_log_diagnostic", v.used_log_diagnostic);
    let mut w = create(path, manifest)?;
    for t in &v.per_trial {
        for (j, norm) in config.j_list.iter().zip(&t.partial_norms) {
            w.row(&[t.trial as f64, *j as f64, *norm, t.slope, t.kappa])?;
        }
    }
    w.finish()?;
    Ok(format!(
        "{} (median slope {}, log-log slope {})",
        v.classification,
        format_real(v.slope),
        format_real(v.kappa)
    ))
}

fn moments(config: &RunConfig, manifest: &mut Manifest, path: &Path) -> Result<String> {
    let est = estimate_moment(&config.prior, &config.space, config.r, &mc(config))?;
    manifest.set("columns", "trial,norm_pow_r");
    set_real(manifest, "result.mean", est.mean);
    set_real(manifest, "result.std_error", est.std_error);
    set_real(manifest, "result.max_to_sum", est.heavy_tail.max_to_sum);
    set_real(manifest, "result.hill_index", est.heavy_tail.hill_index);
    manifest.set("result.heavy_tail", est.heavy_tail.flagged);
    let is_two = |e: Exponent| e == Exponent::Finite(2.0);
    if config.r == 2.0 && is_two(config.space.p) && is_two(config.space.q) {
        let truncation = Truncation::new(config.space.d, config.j_max, config.cap.clone())?;
        if let Ok(exact) = closed_form_second_moment(&config.prior, &config.space, &truncation) {
            set_real(manifest, "result.closed_form", exact);
        }
    }
    let mut w = create(path, manifest)?;
    for (i, v) in est.values.iter().enumerate() {
        w.row(&[i as f64, *v])?;
    }
    w.finish()?;
    Ok(format!(
        "mean {} +- {}, heavy tail {}",
        format_real(est.mean),
        format_real(est.std_error),
        est.heavy_tail.flagged
    ))
}

fn mgf(config: &RunConfig, manifest: &mut Manifest, path: &Path) -> Result<String> {
    let scan = mgf_scan(
        &config.prior,
        &config.space,
        config.c0,
        config.c_factor,
        config.c_steps,
        config.r,
        &mc(config),
    )?;
    manifest.set(
        "columns",
        "c,mean,std_error,overflow_fraction,max_to_sum,stable",
    );
    let stable = scan.stable_c.map_or("none".to_string(), format_real);
    manifest.set("result.stable_c", &stable);
    let mut w = create(path, manifest)?;
    for e in &scan.estimates {
        let (mean, se) = match e.value {
            MgfValue::Finite { mean, std_error } => (mean, std_error),
            MgfValue::Overflow => (f64::INFINITY, f64::INFINITY),
        };
        w.row(&[
            e.c,
            mean,
            se,
            e.overflow_fraction,
            e.max_to_sum,
            e.is_stable() as u8 as f64,
        ])?;
    }
    w.finish()?;
    Ok(format!("first stable c: {stable}"))
}

fn verify(config: &RunConfig, manifest: &mut Manifest, path: &Path) -> Result<String> {
    match config.lemma {
        Lemma::PaleyZygmund => {
            let rows: Vec<[f64; 3]> = (0..config.trials)
                .into_par_iter()
                .map(|i| {
                    let mut stream = KeyedStream::new(config.seed, i as u64);
                    let dist = FiniteDistribution::random(&mut stream);
                    let tenths = (stream.next_uniform() * 11.0) as i64;
                    let sigma = BigRational::new(BigInt::from(tenths), BigInt::from(10));
                    let slack = verify_paley_zygmund(&dist, &sigma)?;
                    Ok([
                        i as f64,
                        tenths as f64 / 10.0,
                        slack.to_f64().unwrap_or(f64::NAN),
                    ])
                })
                .collect::<rws_core::Result<_>>()?;
            let min = rows.iter().fold(f64::INFINITY, |m, r| m.min(r[2]));
            manifest.set("columns", "case,sigma,slack");
            set_real(manifest, "result.min_slack", min);
            write_rows(path, manifest, &rows)?;
            Ok(format!(
                "{} distributions, smallest slack {}",
                rows.len(),
                format_real(min)
            ))
        }
        Lemma::Binomial => {
            let mut rows = Vec::new();
            for n in [2u32, 8, 32, 64] {
                for rho in [0.01, 0.1, 0.5, 0.9] {
                    for sigma in [0.5, 1.5, 2.0, 3.0] {
                        rows.push([n as f64, rho, sigma, verify_binomial_bound(n, rho, sigma)?]);
                    }
                }
            }
            let worst = rows
                .iter()
                .filter(|r| r[2] == 2.0)
                .fold(0.0f64, |m, r| m.max(r[3]));
            manifest.set("columns", "n,rho,sigma,ratio");
            set_real(manifest, "result.max_ratio_sigma2", worst);
            write_rows(path, manifest, &rows)?;
            Ok(format!("largest ratio at sigma=2: {}", format_real(worst)))
        }
        Lemma::SupGaussian => {
            let r = verify_sup_gaussian(config.n, config.trials, config.seed)?;
            let oracle = sup_gaussian_oracle(config.n);
            manifest.set("columns", "n,trials,fraction,std_error,oracle");
            set_real(manifest, "result.fraction", r.fraction);
            write_rows(
                path,
                manifest,
                &[[r.n as f64, r.trials as f64, r.fraction, r.std_error, oracle]],
            )?;
            Ok(format!(
                "fraction {} (exact {})",
                format_real(r.fraction),
                format_real(oracle)
            ))
        }
        Lemma::XiMoment => {
            let cfg = XiMomentConfig {
                d: config.space.d,
                p: finite_p(config)?,
                sigma: config.r,
                kind: XiKind::Plain,
                j_list: config.j_list.clone(),
                cap: config.cap.clone(),
                trials: config.trials,
                seed: config.seed,
            };
            let report = verify_xi_moment_stability(&config.prior, &cfg)?;
            manifest.set("columns", "J,mean,std_error");
            manifest.set("result.stable", report.stable);
            manifest.set("result.trend", report.trend);
            manifest.set("result.heavy_tail", report.heavy_tail.flagged);
            let rows: Vec<[f64; 3]> = report
                .j_list
                .iter()
                .zip(report.means.iter().zip(&report.std_errors))
                .map(|(j, (m, s))| [*j as f64, *m, *s])
                .collect();
            write_rows(path, manifest, &rows)?;
            Ok(format!("stable under truncation: {}", report.stable))
        }
        Lemma::MasterBound => {
            let p = finite_p(config)?;
            let truncation = Truncation::new(config.space.d, config.j_max, config.cap.clone())?;
            let profiles = run_trials(config.trials, config.seed, |_, seed| {
                let draws = sample_draws(&config.prior, &truncation, seed)?;
                Ok(master_bound_ratio(&draws, p, config.prior.beta)?.profile())
            })?;
            let mut envelope = vec![0.0f64; config.j_max as usize + 1];
            let mut rows = Vec::new();
            for (trial, profile) in profiles.iter().enumerate() {
                for (j, r) in profile.iter().enumerate() {
                    envelope[j] = envelope[j].max(*r);
                    rows.push([trial as f64, j as f64, *r]);
                }
            }
            let hi = envelope.iter().fold(0.0f64, |m, v| m.max(*v));
            let lo = envelope.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            manifest.set("columns", "trial,j,ratio");
            set_real(manifest, "result.max_ratio", hi);
            set_real(manifest, "result.profile_spread", hi / lo);
            write_rows(path, manifest, &rows)?;
            Ok(format!(
                "largest ratio {}, spread across levels {}",
                format_real(hi),
                format_real(hi / lo)
            ))
        }
    }
}

fn write_rows<const N: usize>(path: &Path, manifest: &Manifest, rows: &[[f64; N]]) -> Result<()> {
    let mut w = create(path, manifest)?;
    for r in rows {
        w.row(r)?;
    }
    w.finish()?;
    Ok(())
}
