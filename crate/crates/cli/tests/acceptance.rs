//! Acceptance checks, one line per criterion.

use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use rws_core::analysis::{
    closed_form_second_moment, estimate_moment, master_bound_ratio, phase_classify,
    verify_binomial_bound, verify_paley_zygmund, verify_sup_gaussian, xi_statistic, Classification,
    FiniteDistribution, MonteCarlo, PhaseConfig,
};
use rws_core::rng::{trial_seed, KeyedStream};
use rws_core::{
    points_up_to, sample_draws, scaling_filter, shell_count, weight_sum, BasisIndex, CapPolicy,
    PriorSpec, SpaceSpec, TemplateDistribution, Truncation, WaveletSystem,
};

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Counts `|m|_inf <= r` in `[-R, R]^d` point by point.
fn brute_count(d: usize, r: i64, outer: i64) -> (u128, u128) {
    let side = (2 * outer + 1) as usize;
    let total = side.pow(d as u32);
    let inside = (0..total)
        .into_par_iter()
        .filter(|&pos| {
            let mut p = pos;
            (0..d).all(|_| {
                let c = (p % side) as i64 - outer;
                p /= side;
                c.abs() <= r
            })
        })
        .count() as u128;
    (inside, total as u128 - inside)
}

fn criterion_1() -> Outcome {
    let mut checked = 0;
    for d in 1..=3 {
        for j in 0..=6u32 {
            let (inside, shell) = brute_count(d, 1 << j, 2 << j);
            if points_up_to(j, d).unwrap() != inside || shell_count(j, d).unwrap() != shell {
                return outcome(false, format!("mismatch at j={j}, d={d}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} (j, d) pairs exact"))
}

fn criterion_2() -> Outcome {
    for d in 1..=3usize {
        let df = d as f64;
        for e in [-df - 1.0, -df - 0.1, -df, -df + 0.5] {
            for a in [1.0, 7.0, 64.0] {
                let finite = weight_sum(d, a, e).unwrap().value().is_some();
                if finite != (e < -df) {
                    return outcome(false, format!("d={d} a={a} e={e}: finite={finite}"));
                }
            }
        }
    }
    let mut worst: f64 = 1.0;
    for d in 1..=3usize {
        let ratios: Vec<f64> = (1..=64)
            .map(|a| {
                let a = a as f64;
                weight_sum(d, a, -(d as f64) - 1.0)
                    .unwrap()
                    .value()
                    .unwrap()
                    / a.powi(d as i32)
            })
            .collect();
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi / lo);
    }
    outcome(
        worst <= 4.0,
        format!("finiteness exact; worst spread of sum/a^d is {worst:.3}"),
    )
}

fn orthonormality_pairs(support: i64) -> Vec<(BasisIndex, BasisIndex)> {
    let scale = |j: u32| if j == 0 { 1 } else { 1i64 << (j - 1) };
    let t = |j: u32| u32::from(j > 0);
    let mut pairs = Vec::new();
    for j1 in 0..=4u32 {
        for j2 in j1..=4u32 {
            let ratio = scale(j2) / scale(j1);
            for m2 in -support..=ratio * support {
                let a = BasisIndex::new(j1, t(j1), vec![0]).unwrap();
                let b = BasisIndex::new(j2, t(j2), vec![m2]).unwrap();
                pairs.push((a, b));
            }
        }
    }
    pairs
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [1usize, 2, 4, 10] {
        let filters = scaling_filter(n).unwrap();
        let system = WaveletSystem::daubechies(n, 10, 1).unwrap();
        let orth = filters.orthonormality_residual();
        let sum = filters.sum_residual();
        let integral = (system.scaling_integral() - 1.0).abs();
        let moments = system.check_vanishing_moments(n - 1).unwrap();
        let pairs = system.check_orthonormality(&orthonormality_pairs(2 * n as i64 - 1));
        pass &= orth < 1e-10 && sum < 1e-12 && integral < 1e-4 && moments < 1e-4 && pairs < 1e-3;
        lines.push(format!(
            "N={n}: filter {orth:.1e}, sum {sum:.1e}, integral {integral:.1e}, moments {moments:.1e}, pairs {pairs:.1e}"
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_4() -> Outcome {
    let spec = SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for (i, alpha) in [-1.0, -0.5, 0.5].into_iter().enumerate() {
        let prior = PriorSpec::besov(alpha, -1.5, -1.5, 0.0, TemplateDistribution::Gaussian);
        let mc = MonteCarlo::new(8, 200, 100 + i as u64);
        let truncation = Truncation::new(1, 8, CapPolicy::Default).unwrap();
        let exact = closed_form_second_moment(&prior, &spec, &truncation).unwrap();
        let est = estimate_moment(&prior, &spec, 2.0, &mc).unwrap();
        let z = (est.mean - exact) / est.std_error;
        pass &= z.abs() <= 3.0;
        lines.push(format!("alpha={alpha}: z={z:.2}"));
    }
    outcome(pass, lines.join(", "))
}

fn phase(alpha: f64, theta: f64) -> rws_core::analysis::PhaseVerdict {
    let spec = SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap();
    let prior = PriorSpec::besov(alpha, -1.5, -1.5, theta, TemplateDistribution::Gaussian);
    phase_classify(&prior, &spec, &PhaseConfig::new((4..=12).collect(), 50, 0)).unwrap()
}

fn criterion_5() -> Outcome {
    let strict = phase(-1.0, 0.0);
    let divergent = phase(0.0, 0.0);
    let boundary_conv = phase(-0.5, -1.0);
    let boundary_div = phase(-0.5, 0.0);
    let pass = strict.classification == Classification::Convergent
        && divergent.classification == Classification::Divergent
        && (0.4..=0.6).contains(&divergent.slope)
        && boundary_conv.classification == Classification::Convergent
        && boundary_div.classification == Classification::Divergent
        && boundary_div.used_log_diagnostic;
    outcome(
        pass,
        format!(
            "alpha=-1 {} (slope {:.4}); alpha=0 {} (slope {:.3}); theta=-1 {} (slope {:.4}); theta=0 {} (slope {:.3}, log-log {:.2}, log diagnostic {})",
            strict.classification,
            strict.slope,
            divergent.classification,
            divergent.slope,
            boundary_conv.classification,
            boundary_conv.slope,
            boundary_div.classification,
            boundary_div.slope,
            boundary_div.kappa,
            boundary_div.used_log_diagnostic
        ),
    )
}

fn criterion_6() -> Outcome {
    let spec = SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap();
    let tmpl = TemplateDistribution::Gaussian;
    let sparse = PriorSpec::bernoulli(-0.1, -1.5, -1.5, -1.0, 0.0, tmpl).unwrap();
    let dense = PriorSpec::besov(-0.1, -1.5, -1.5, 0.0, tmpl);
    let config = PhaseConfig::new((8..=16).collect(), 50, 0);
    let s = phase_classify(&sparse, &spec, &config).unwrap();
    let d = phase_classify(&dense, &spec, &PhaseConfig::new((4..=12).collect(), 50, 0)).unwrap();
    outcome(
        s.classification == Classification::Convergent
            && d.classification == Classification::Divergent,
        format!(
            "Bernoulli mu=-1 {} (slope {:.4}, J 8..16); dense prior {} (slope {:.3})",
            s.classification, s.slope, d.classification, d.slope
        ),
    )
}

fn criterion_7() -> Outcome {
    let spec = SpaceSpec::unweighted(1, 0.0, 2.0, 2.0).unwrap();
    let mc = MonteCarlo::new(6, 1000, 0);
    let run = |t| {
        let prior = PriorSpec::besov(-1.0, -1.5, -1.5, 0.0, t);
        estimate_moment(&prior, &spec, 2.0, &mc).unwrap().heavy_tail
    };
    let pareto = run(TemplateDistribution::Pareto { tail: 1.5 });
    let gauss = run(TemplateDistribution::Gaussian);
    outcome(
        pareto.flagged && !gauss.flagged,
        format!(
            "Pareto 1.5 flagged={} (max/sum {:.3}, Hill {:.2}); Gaussian flagged={} (max/sum {:.4}, Hill {:.2})",
            pareto.flagged, pareto.max_to_sum, pareto.hill_index, gauss.flagged, gauss.max_to_sum, gauss.hill_index
        ),
    )
}

fn criterion_8() -> Outcome {
    let min_slack = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = KeyedStream::new(8, i);
            let dist = FiniteDistribution::random(&mut stream);
            let tenths = (stream.next_uniform() * 11.0) as i64;
            let sigma = BigRational::new(BigInt::from(tenths), BigInt::from(10));
            verify_paley_zygmund(&dist, &sigma)
                .unwrap()
                .to_f64()
                .unwrap()
        })
        .reduce(|| f64::INFINITY, f64::min);
    let mut worst: f64 = 0.0;
    for n in [2u32, 8, 32, 64] {
        for rho in [0.01, 0.1, 0.5, 0.9] {
            for sigma in [0.5, 1.5, 2.0, 3.0] {
                let ratio = verify_binomial_bound(n, rho, sigma).unwrap();
                if sigma == 2.0 {
                    worst = worst.max(ratio);
                }
            }
        }
    }
    let sup = verify_sup_gaussian(1 << 16, 1000, 8).unwrap();
    outcome(
        min_slack >= -1e-12 && worst <= 2.0 && sup.fraction >= 0.99,
        format!(
            "min Paley-Zygmund slack {min_slack:.3e}; max binomial ratio at sigma=2 {worst:.4}; sup-Gaussian fraction {}",
            sup.fraction
        ),
    )
}

fn criterion_9() -> Outcome {
    let prior = PriorSpec::besov(0.0, -1.5, -1.5, 0.0, TemplateDistribution::Gaussian);
    let results: Vec<(Vec<f64>, bool)> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let seed = trial_seed(0, s);
            let full = Truncation::new(1, 8, CapPolicy::Default).unwrap();
            let draws = sample_draws(&prior, &full, seed).unwrap();
            let profile = master_bound_ratio(&draws, 2.0, -1.5).unwrap().profile();
            let xis: Vec<f64> = (0..=8)
                .map(|j| {
                    let t = Truncation::new(1, j, CapPolicy::Default).unwrap();
                    xi_statistic(&sample_draws(&prior, &t, seed).unwrap(), 2.0)
                        .unwrap()
                        .overall
                })
                .collect();
            (profile, xis.windows(2).all(|w| w[0] <= w[1]))
        })
        .collect();
    let mut envelope = [0.0f64; 9];
    for (profile, _) in &results {
        for (e, r) in envelope.iter_mut().zip(profile) {
            *e = e.max(*r);
        }
    }
    let monotone = results.iter().all(|r| r.1);
    let hi = envelope.iter().cloned().fold(0.0, f64::max);
    let lo = envelope.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        hi / lo < 4.0 && monotone,
        format!(
            "per-level max ratio spread {:.3} over j<=8; Xi nondecreasing in J: {monotone}",
            hi / lo
        ),
    )
}

fn rws(args: &[&str], out: &Path, threads: Option<&str>) -> Result<(), String> {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_rws"));
    cmd.args(args).arg("--output").arg(out);
    if let Some(t) = threads {
        cmd.args(["--threads", t]);
    }
    let result = cmd.output().map_err(|e| e.to_string())?;
    if !result.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&result.stderr)
        ));
    }
    Ok(())
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let cases: Vec<Vec<&str>> = vec![
        vec!["sample", "--preset", "besov00", "--grid-points", "401"],
        vec![
            "sample",
            "--preset",
            "bernoulli11",
            "--grid-points",
            "401",
            "--seed",
            "4",
        ],
        vec!["norm", "--j-max", "7", "--seed", "3"],
        vec!["check", "--preset", "bernoulli10"],
        vec!["phase", "--j-list", "3,4,5,6", "--trials", "20"],
        vec!["moments", "--j-max", "6", "--trials", "60"],
        vec!["mgf", "--j-max", "5", "--trials", "40", "--c0", "4"],
        vec!["verify", "--lemma", "paley-zygmund", "--trials", "500"],
        vec!["verify", "--lemma", "binomial"],
        vec![
            "verify",
            "--lemma",
            "sup-gaussian",
            "--n",
            "4096",
            "--trials",
            "200",
        ],
        vec![
            "verify",
            "--lemma",
            "xi-moment",
            "--trials",
            "40",
            "--j-list",
            "3,4,5",
            "--beta",
            "-1.5",
        ],
        vec![
            "verify",
            "--lemma",
            "master-bound",
            "--beta",
            "-1.5",
            "--j-max",
            "5",
            "--trials",
            "20",
        ],
    ];
    let root = tempfile::tempdir().unwrap();
    for (i, args) in cases.iter().enumerate() {
        let dirs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|s| root.path().join(format!("{i}{s}")))
            .collect();
        let run = || -> Result<(), String> {
            rws(args, &dirs[0], None)?;
            rws(args, &dirs[1], Some("8"))?;
            let first = std::fs::read_dir(&dirs[0])
                .unwrap()
                .next()
                .unwrap()
                .unwrap()
                .path();
            rws(&["rerun", first.to_str().unwrap()], &dirs[2], Some("3"))
        };
        if let Err(e) = run() {
            return outcome(false, e);
        }
        let a = dir_contents(&dirs[0]);
        if a != dir_contents(&dirs[1]) || a != dir_contents(&dirs[2]) {
            return outcome(false, format!("{args:?} differs between runs"));
        }
    }
    outcome(true, format!("{} configurations byte-identical across default threads, 8 threads and manifest re-run", cases.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("lattice counts", Duration::from_secs(1), criterion_1),
        ("weight sum boundary", Duration::from_secs(5), criterion_2),
        ("wavelet system", Duration::from_secs(30), criterion_3),
        ("second moment oracle", Duration::from_secs(60), criterion_4),
        ("phase dichotomy", Duration::from_secs(300), criterion_5),
        ("Bernoulli shift", Duration::from_secs(300), criterion_6),
        (
            "heavy-tail detection",
            Duration::from_secs(120),
            criterion_7,
        ),
        (
            "auxiliary inequalities",
            Duration::from_secs(120),
            criterion_8,
        ),
        ("master bound profile", Duration::from_secs(60), criterion_9),
        ("CLI reproducibility", Duration::from_secs(60), criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] criterion {}: {name}: {} ({:.2} s of {} s{})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
