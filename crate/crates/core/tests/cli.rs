use std::process::{Command, Output};

fn sparsesig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsesig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no {key} in {text}"));
    line.rsplit('=').next().unwrap().trim().parse().unwrap()
}

#[test]
fn boundary_values() {
    let o = sparsesig(&["boundary", "--family", "normal", "--beta", "0.9", "--sigma0", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((value(&s, "r*") - 0.135_088_935_932_648_27).abs() < 1e-12);
    assert!(s.contains("case = IV"));
    let o = sparsesig(&["boundary", "--family", "dense", "--beta", "0.1"]);
    assert!((value(&stdout(&o), "r*") - 0.4).abs() < 1e-12);
}

#[test]
fn header_records_the_seed() {
    let o = sparsesig(&["--seed", "42", "boundary", "--beta", "0.75"]);
    let s = stdout(&o);
    assert!(s.starts_with("# sparsesig boundary\n"));
    assert!(s.contains("# seed = 42\n"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(sparsesig(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sparsesig(&["boundary", "--beta", "0.7", "--wat"]).status.code(), Some(2));
    assert_eq!(sparsesig(&["boundary", "--family", "nope", "--beta", "0.7"]).status.code(), Some(2));
    assert_eq!(sparsesig(&["boundary"]).status.code(), Some(2));
    assert_eq!(sparsesig(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_1() {
    let o = sparsesig(&["boundary", "--beta", "0.3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));
    let o = sparsesig(&["--reps", "10", "critical", "--beta", "0.7", "--r", "0.5", "--n", "1000"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nseed = 7\nbeta = 0.8\nfamily = chimeric\n").unwrap();
    let o = sparsesig(&["--config", cfg.to_str().unwrap(), "--seed", "9", "boundary"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("# seed = 9\n"));
    assert!(s.contains("# beta = 0.8\n"));
    assert!((value(&s, "r*") - 0.6).abs() < 1e-12);
    std::fs::write(&cfg, "not a config line\n").unwrap();
    assert_eq!(sparsesig(&["--config", cfg.to_str().unwrap(), "boundary"]).status.code(), Some(2));
}

#[test]
fn power_is_thread_independent() {
    let run = |t: &str| {
        let o = sparsesig(&[
            "--n", "2000", "--reps", "200", "--seed", "5", "--threads", t, "power", "--beta", "0.6", "--r", "0.4",
        ]);
        assert!(o.status.success());
        stdout(&o).lines().filter(|l| !l.contains("threads")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsesig(&[
        "--out",
        dir.path().to_str().unwrap(),
        "sweep",
        "--betas",
        "0.6,0.8",
        "--rs",
        "0.05,0.9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = sparsesig::io::parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].label, Some(sparsesig::detectability::Region::Undetectable));
    assert_eq!(rows[1].label, Some(sparsesig::detectability::Region::CompletelyDetectable));
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.contains(r#"id="boundary""#) && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn limits_writes_ecdf_and_cf_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsesig(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--reps",
        "5000",
        "limits",
        "--kind",
        "beta1",
        "--shape",
        "const",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("t,")).count(), 2);
    let ecdf = std::fs::read_to_string(dir.path().join("limit_null_ecdf.csv")).unwrap();
    assert!(ecdf.starts_with("x,ecdf\n"));
}

#[test]
fn are_matches_closed_form() {
    let o = sparsesig(&["are", "--h1", "const", "--h2", "linear2x", "--beta", "0.75", "--r", "0.5"]);
    let s = stdout(&o);
    assert!((value(&s, "ARE (closed form)") - 0.75).abs() < 1e-12);
    assert!((value(&s, "mismatched power") - 0.218).abs() < 1e-3);
}

#[test]
fn normal_beta_one_power_reports_null_mean() {
    let o = sparsesig(&[
        "--reps", "300", "--n", "1000000", "power", "--family", "normal", "--beta", "1", "--r", "1", "--test", "llr",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let row = s.lines().find(|l| l.starts_with("llr,")).unwrap();
    let mean: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
    assert!(mean < -0.2 && mean > -0.8, "{mean}");
}
