use std::path::Path;
use std::process::{Command, Output};

use rws_cli::{emit_csv, RunConfig};
use rws_core::Manifest;

fn rws(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rws"))
        .args(args)
        .arg("--output")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn norm_of_single_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let o = rws(&["norm", "--coeff", "0:0:0=2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "2");
    let text = std::fs::read_to_string(dir.path().join("norm.csv")).unwrap();
    let m = Manifest::parse(&text).unwrap();
    assert_eq!(m.get("result.total"), Some("2"));
    assert_eq!(m.get("coefficients"), Some("0:0:0=2"));
}

#[test]
fn check_prints_margins() {
    let dir = tempfile::tempdir().unwrap();
    let o = rws(
        &[
            "check", "--preset", "besov00", "--s", "0", "--p", "2", "--q", "2",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(
        out.starts_with("property=A\nholds=true\nbranch=A-strict\n"),
        "{out}"
    );
    assert!(out.contains("s + d/2 + alpha < 0: slack=-1/2"));
    let m =
        Manifest::parse(&std::fs::read_to_string(dir.path().join("check.csv")).unwrap()).unwrap();
    assert_eq!(m.get("verdict.A"), Some("holds"));
    assert_eq!(m.get("verdict.A.margin.gamma + d/p"), Some("-1/2"));
}

#[test]
fn sample_preset_writes_xy_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let o = rws(&["sample", "--preset", "besov00"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("besov00.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r.len() == 2));
    assert_eq!((rows[0][0], rows[1000][0]), (-25.0, 25.0));
    let peak = rows.iter().fold(0.0f64, |m, r| m.max(r[1].abs()));
    assert!(peak > 0.3 && peak < 3.0, "sample amplitude {peak}");
    let config = RunConfig::from_manifest(&Manifest::parse(&text).unwrap()).unwrap();
    assert_eq!(config.order, 10);
    assert_eq!(config.j_max, 10);
}

#[test]
fn rerun_reproduces_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let o = rws(
        &[
            "moments",
            "--j-max",
            "5",
            "--trials",
            "40",
            "--template",
            "pareto:3",
        ],
        &first,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let file = first.join("moments.csv");
    let o = rws(&["rerun", file.to_str().unwrap()], &second);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&file).unwrap(),
        std::fs::read(second.join("moments.csv")).unwrap()
    );
}

#[test]
fn invalid_parameters_name_the_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let o = rws(
        &[
            "verify",
            "--lemma",
            "master-bound",
            "--beta",
            "-0.25",
            "--trials",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta < -d/p fails"), "{}", stderr(&o));
    let o = rws(&["moments", "--template", "pareto:-1"], dir.path());
    assert!(!o.status.success());
    let o = rws(&["sample", "--preset", "besov99"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn smoothness_warning() {
    let dir = tempfile::tempdir().unwrap();
    let o = rws(&["check", "--s", "1.5", "--order", "2"], dir.path());
    assert!(o.status.success());
    assert!(
        stderr(&o).contains("warning: Property B fails for N=2 (k=1): k - |s| > 0"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rws"))
        .args(["verify", "--lemma", "binomial"])
        .env("RWS_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let m =
        Manifest::parse(&std::fs::read_to_string(dir.path().join("verify.csv")).unwrap()).unwrap();
    let worst: f64 = m.parse_value("result.max_ratio_sigma2").unwrap();
    assert!(worst <= 2.0);
}

#[test]
fn phase_reports_classification() {
    let dir = tempfile::tempdir().unwrap();
    let o = rws(
        &[
            "phase",
            "--alpha",
            "0",
            "--beta",
            "-1.5",
            "--gamma",
            "-1.5",
            "--trials",
            "20",
            "--j-list",
            "4,5,6,7,8",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("divergent"), "{}", stdout(&o));
}

#[test]
fn million_rows_stream() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.csv");
    let mut m = Manifest::new();
    m.set("rows", 1_000_000);
    let n = emit_csv(&path, &m, (0..1_000_000).map(|i| [i as f64, 0.5])).unwrap();
    assert_eq!(n, 1_000_000);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# rows=1000000\n0,0.5\n1,0.5\n"));
    assert!(text.ends_with("999999,0.5\n"));
}
