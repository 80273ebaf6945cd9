use std::process::{Command, Output};

fn workchar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workchar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Numeric rows of a CSV output: (column names, rows).
fn csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn sweep_chi_protocol_matches_closed_form_on_400_points() {
    let o = workchar(&["sweep-chi", "--delta-lambda", "0.3", "--nbar", "1.5", "--u-max", "40", "--u-points", "400"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(h, ["u", "re", "im", "deviation"]);
    assert_eq!(rows.len(), 400);
    let d = column(&h, "deviation");
    assert!(rows.iter().all(|r| r[d] < 1e-9));
    assert_eq!(rows.last().unwrap()[0], 40.0);
}

#[test]
fn header_records_configuration() {
    let o = workchar(&["sweep-chi", "--delta-lambda", "0.3", "--nbar", "1.5", "--u-points", "3"]);
    let text = stdout(&o);
    assert!(text.starts_with("# workchar "));
    for key in ["# seed = none", "# eps-tail = 1e-12", "# delta-lambda = 0.3", "# nbar = 1.5", "# mode = protocol"] {
        assert!(text.contains(key), "missing {key:?} in\n{text}");
    }
}

#[test]
fn zero_quench_gives_unit_chi() {
    for mode in ["protocol", "direct", "closed"] {
        let o = workchar(&["sweep-chi", "--delta-lambda", "0", "--nbar", "2", "--u-points", "25", "--mode", mode]);
        assert!(o.status.success());
        let (_, rows) = csv(&stdout(&o));
        for r in rows {
            assert!((r[1] - 1.0).abs() < 1e-12 && r[2].abs() < 1e-12, "{mode}: {r:?}");
        }
    }
}

#[test]
fn zero_temperature_chi_is_a_pure_phase() {
    let o = workchar(&["sweep-chi", "--delta-lambda", "2", "--nbar", "0", "--u-points", "50", "--u-max", "10"]);
    let (_, rows) = csv(&stdout(&o));
    for r in rows {
        let u = r[0];
        assert!((r[1] - u.cos()).abs() < 1e-12);
        assert!((r[2] - u.sin()).abs() < 1e-12);
    }
}

#[test]
fn json_rows_carry_named_fields() {
    let o = workchar(&["--format", "json", "sweep-chi", "--delta-lambda", "0.3", "--nbar", "1.5", "--u-points", "5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert!(v["rows"][4]["re"].is_f64());
    assert_eq!(v["meta"]["params"]["nbar"], "1.5");
    assert_eq!(v["meta"]["eps_tail"], 1e-12);
}

#[test]
fn work_dist_agrees_with_two_point_measurement() {
    let o = workchar(&["work-dist", "--delta-lambda", "0.3", "--nbar", "1.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&stdout(&o));
    let (p, tpm) = (column(&h, "p"), column(&h, "p_tpm"));
    let total: f64 = rows.iter().map(|r| r[p]).sum();
    assert!((total - 1.0).abs() < 1e-11);
    assert!(rows.iter().all(|r| (r[p] - r[tpm]).abs() < 1e-10));
    // (n + ½)Δλ with weight n̄ⁿ/(1+n̄)^{n+1}
    assert!((rows[2][0] - 0.75).abs() < 1e-15);
    assert!((rows[2][p] - 1.5f64.powi(2) / 2.5f64.powi(3)).abs() < 1e-15);
}

#[test]
fn inversion_formula_matches_quadrature_and_skips_peaks() {
    // W = 0.15 and 0.45 sit on peaks and must be skipped.
    let o = workchar(&[
        "inversion", "--delta-lambda", "0.3", "--nbar", "1.5", "--eps", "4", "--w-min", "0", "--w-max", "0.6",
        "--w-points", "5", "--check-tol", "1e-8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv(&stdout(&o));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[4] < 1e-8));
}

#[test]
fn dispersive_default_run_agrees_up_to_sigma_z() {
    let o = workchar(&["dispersive", "--u-points", "6", "--check-tol", "1e-10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&stdout(&o));
    let d = column(&h, "deviation");
    let id = column(&h, "identity_deviation");
    assert!(rows.iter().all(|r| r[d] < 1e-10 && r[id] < 1e-10));
}

#[test]
fn open_decoupled_matches_closed_columns() {
    let o = workchar(&["open", "--hse-scale", "0", "--u-points", "6", "--check-tol", "1e-10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# seed = 42"));
    let (h, rows) = csv(&text);
    let (re, im) = (column(&h, "re"), column(&h, "im"));
    let (rc, ic) = (column(&h, "re_closed"), column(&h, "im_closed"));
    for r in rows {
        assert!((r[re] - r[rc]).abs() < 1e-10 && (r[im] - r[ic]).abs() < 1e-10, "{r:?}");
    }
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let a = workchar(&["verify", "--seed", "7"]);
    let b = workchar(&["verify", "--seed", "7"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["meta"]["seed"], 7);
}

#[test]
fn verify_with_impossible_tolerance_exits_3() {
    let o = workchar(&["verify", "--force-tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(3));
    // The report is still written.
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["all_passed"], false);
}

#[test]
fn failing_check_tol_exits_3() {
    let o = workchar(&["inversion", "--delta-lambda", "0.3", "--nbar", "1.5", "--w-points", "3", "--check-tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_parameters_exit_2() {
    let cases: &[&[&str]] = &[
        &["sweep-chi", "--nbar", "1"],
        &["sweep-chi", "--delta-lambda", "1", "--nbar", "-1"],
        &["sweep-chi", "--delta-lambda", "1", "--nbar", "1", "--u-points", "0"],
        &["sweep-chi", "--delta-lambda", "1", "--nbar", "1", "--u-min", "5", "--u-max", "1"],
        &["inversion", "--delta-lambda", "0", "--nbar", "1"],
        &["open", "--ds", "0"],
        &["--eps-tail", "2", "sweep-chi", "--delta-lambda", "1", "--nbar", "1"],
        &["no-such-command"],
    ];
    for args in cases {
        assert_eq!(workchar(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn heavy_tail_beyond_cap_exits_2() {
    let o = workchar(&["--nmax-cap", "10", "sweep-chi", "--delta-lambda", "1", "--nbar", "50"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# quench\ndelta_lambda = 0.3\nnbar = 4\nu-points = 7\nmode = closed\n").unwrap();
    let out = dir.path().join("out.csv");
    let o = workchar(&[
        "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(),
        "sweep-chi", "--nbar", "1.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# nbar = 1.5"));
    assert!(text.contains("# delta-lambda = 0.3"));
    assert!(text.contains("# mode = closed"));
    assert_eq!(csv(&text).1.len(), 7);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "nbar 1.5\n").unwrap();
    let o = workchar(&["--config", cfg.to_str().unwrap(), "sweep-chi", "--delta-lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
