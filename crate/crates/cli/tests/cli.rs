use std::fs;
use std::process::{Command, Output};

use birman_cli::{
    aggregate, emit_report, problem_params, render, Cli, Format, KindArg, ProblemArgs, Report, Results, SideArg,
    EXIT_USAGE,
};
use birman_core::verifier::Status;
use clap::Parser;
use proptest::prelude::*;

fn birman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_birman")).args(args).output().expect("spawn birman")
}

#[test]
fn constants_table_contains_third_order_value() {
    let out = birman(&["constants", "--m", "3", "--alpha", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "birman-report/1");
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["a"], "225/64");
    assert_eq!(rows[0]["a"], "1/4");
    assert_eq!(rows[1]["a"], "9/16");
}

#[test]
fn first_depth_interior_anchor_at_e_is_accepted() {
    let out = birman(&[
        "verify", "--m", "1", "--l", "1", "--N", "1", "--alpha", "0", "--rho", "1", "--gamma", "2.7182818284",
        "--side", "interior", "--variant", "ln",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "PASS");
    // The anchor is echoed exactly.
    assert_eq!(v["config"]["params"]["anchor"], "6795704571/2500000000");
}

#[test]
fn hypothesis_violation_is_a_usage_error() {
    let out = birman(&[
        "verify", "--m", "1", "--l", "1", "--N", "3", "--alpha", "0", "--rho", "1", "--gamma", "10", "--side",
        "interior", "--variant", "ln",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("interior-ln requires γ ≥ e_N·ρ"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_arguments_exit_64() {
    assert_eq!(birman(&["verify", "--m", "1"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(birman(&["constants", "--m", "0", "--alpha", "0"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(birman(&["constants", "--m", "2", "--alpha", "x"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(birman(&["nonsense"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(birman(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_has_one_row_per_function_with_slack_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    fs::write(&corpus, r#"[{"kind":"bump","a":0.2,"b":0.7}]"#).unwrap();
    let path = dir.path().join("r.csv");
    let out = birman(&[
        "verify", "--m", "2", "--l", "1", "--alpha", "1/2", "--rho", "1", "--side", "interior", "--variant", "ln",
        "--corpus", corpus.to_str().unwrap(), "--format", "csv", "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let slack = headers.iter().position(|h| h == "slack").unwrap();
    let budget = headers.iter().position(|h| h == "error_budget").unwrap();
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let s: f64 = rows[0][slack].parse().unwrap();
    let b: f64 = rows[0][budget].parse().unwrap();
    assert!(s > b);
    assert_eq!(&rows[0][headers.len() - 1], "PASS");
    // Only the report itself is left in the directory.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn corpus_outside_interval_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    fs::write(&corpus, r#"[{"kind":"bump","a":0.5,"b":1.5}]"#).unwrap();
    let out = birman(&[
        "verify", "--m", "1", "--l", "1", "--alpha", "0", "--rho", "1", "--side", "interior", "--variant", "ln",
        "--corpus", corpus.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["json", "csv"] {
        let mut files = Vec::new();
        for k in 0..2 {
            let p = dir.path().join(format!("r{k}.{format}"));
            let out = birman(&[
                "verify", "--m", "2", "--l", "2", "--N", "inf", "--alpha", "-1/2", "--rho", "2", "--tau", "2",
                "--side", "exterior", "--variant", "L", "--d", "2", "--format", format, "--output",
                p.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
            files.push(fs::read(&p).unwrap());
        }
        assert_eq!(files[0], files[1]);
    }
}

#[test]
fn sharpness_sweep_file_reports_fit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    let out = birman(&["sharpness", "--m", "1", "--l", "1", "--alpha", "0", "--rho", "4", "--output", p.to_str().unwrap()]);
    // The ratio stays above one and the scaled excess is bounded; the
    // linear extrapolation of the limit overshoots on this grid.
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
    let fit = &v["results"]["sweep"]["fit"];
    assert!((fit["rational_limit"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let limit = fit["limit"].as_f64().unwrap();
    assert!(limit > 1.0 && limit < 1.2, "{limit}");
    let checks = v["results"]["checks"].as_array().unwrap();
    assert_eq!(checks[0]["status"], "PASS");
    assert_eq!(checks[2]["status"], "PASS");
    assert_eq!(v["results"]["sweep"]["ratios"].as_array().unwrap().len(), 7);
}

#[test]
fn identities_battery_passes() {
    let out = birman(&["identities", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 80 + 84 + 126);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",PASS")));
}

#[test]
fn empty_report_is_valid() {
    let report = Report::new(serde_json::json!({}), Results::Verify(Vec::new()));
    assert_eq!(report.status, Status::Pass);
    let json: serde_json::Value = serde_json::from_slice(&render(&report, Format::Json).unwrap()).unwrap();
    assert_eq!(json["results"], serde_json::json!([]));
    let csv = String::from_utf8(render(&report, Format::Csv).unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.contains("slack,error_budget"));
}

#[test]
fn failed_write_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let report = Report::new(serde_json::json!({}), Results::Verify(Vec::new()));
    // The target is an existing directory, so the final rename fails.
    let target = dir.path().join("taken");
    fs::create_dir(&target).unwrap();
    fs::write(target.join("x"), b"x").unwrap();
    assert!(emit_report(&report, Format::Json, Some(&target)).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn status_aggregation() {
    use Status::*;
    assert_eq!(aggregate(&[Pass, Equality]), Pass);
    assert_eq!(aggregate(&[Pass, Unsupported]), Unsupported);
    assert_eq!(aggregate(&[Unsupported, Inconclusive]), Inconclusive);
    assert_eq!(aggregate(&[Inconclusive, Fail, Pass]), Fail);
}

#[test]
fn clap_accepts_negative_alpha() {
    let cli = Cli::try_parse_from(["birman", "constants", "--m", "2", "--alpha", "-1/2"]).unwrap();
    assert!(birman_cli::RunConfig::from_cli(&cli).is_ok());
}

/// Independent statement of the admissibility rules.
fn admissible(m: u32, ell: u32, n: Option<u32>, interior: bool, ln: bool, rho: f64, anchor: f64) -> bool {
    // e_0 = 0, e_{j+1} = exp(e_j)
    let e = |j: u32| (0..j).fold(0f64, |acc, _| acc.exp());
    if !(1..=m).contains(&ell) {
        return false;
    }
    match (ln, n) {
        (true, None) => false,
        (true, Some(n)) if n > 4 => false,
        (true, Some(0)) | (false, Some(0)) => true,
        (true, Some(n)) if interior => anchor >= e(n) * rho,
        (true, Some(n)) => rho >= e(n) * anchor,
        (false, _) if interior => anchor >= rho,
        (false, _) => rho >= anchor,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn validation_matches_hypotheses(
        m in 1u32..=3,
        ell in 0u32..=4,
        n in prop::option::of(0u32..=6),
        interior: bool,
        ln: bool,
        rho in 1u32..=400,
        anchor in 1u32..=400,
    ) {
        // Quarter steps keep every value exactly representable.
        let (rho_f, anchor_f) = (rho as f64 / 4.0, anchor as f64 / 4.0);
        let expected = admissible(m, ell, n, interior, ln, rho_f, anchor_f);
        // Avoid ties with the transcendental thresholds.
        let e = |j: u32| (0..j).fold(0f64, |acc, _| acc.exp());
        if let Some(k) = n.filter(|&k| ln && (1..=4).contains(&k)) {
            let ratio = if interior { anchor_f / rho_f } else { rho_f / anchor_f };
            prop_assume!((ratio - e(k)).abs() > 1e-9 * e(k));
        }
        let args = ProblemArgs {
            m,
            ell,
            depth: n.map(|k| k.to_string()).unwrap_or_else(|| "inf".into()),
            alpha: "0".into(),
            rho: format!("{rho}/4"),
            gamma: ln.then(|| format!("{anchor}/4")),
            tau: (!ln).then(|| format!("{anchor}/4")),
            side: if interior { SideArg::Interior } else { SideArg::Exterior },
            variant: if ln { KindArg::Ln } else { KindArg::L },
            d: 1,
        };
        let got = problem_params(&args);
        prop_assert_eq!(got.is_ok(), expected, "{:?}", got.err().map(|e| e.to_string()));
        if let Err(e) = got {
            prop_assert_eq!(e.exit_code(), EXIT_USAGE);
        }
    }
}
