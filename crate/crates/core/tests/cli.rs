use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logistic-discount"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn bounded_saddle_curve() {
    let o = bin(&[
        "curve",
        "--model",
        "bounded-saddle",
        "--alpha",
        "0.1",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
        "--dg",
        "0.0012",
        "--t-max",
        "500",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "t,y,ln_growth"));
    let r = rows(&text);
    assert_eq!(r.len(), 500);
    let at100 = r.iter().find(|row| row[0] == 100.0).unwrap();
    assert!((at100[1] - 0.029098).abs() < 1e-6);
}

#[test]
fn deterministic_ramsey_curve_is_flat() {
    let o = bin(&[
        "curve",
        "--model",
        "deterministic",
        "--alpha",
        "0",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for row in rows(&stdout(&o)) {
        assert!((row[1] - 0.04).abs() < 1e-15);
    }
}

#[test]
fn unbounded_markov_long_end() {
    let o = bin(&[
        "curve",
        "--model",
        "unbounded-markov",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.0182",
        "--rho2",
        "0.0022",
        "--tau",
        "1.87",
        "--t-max",
        "1000",
    ]);
    let r = rows(&stdout(&o));
    let last = r.last().unwrap();
    assert_eq!(last[0], 1000.0);
    assert!((last[1] - 0.0199).abs() < 1e-4);
}

#[test]
fn other_curve_models_run() {
    for args in [
        vec![
            "--model",
            "unbounded-ou",
            "--gamma",
            "2",
            "--delta",
            "0",
            "--mg",
            "0.02",
            "--sigma2",
            "0.0024",
            "--alphag",
            "1",
        ],
        vec![
            "--model",
            "asymptotic-short",
            "--alpha",
            "0.01",
            "--gamma",
            "2",
            "--delta",
            "0",
            "--mg",
            "0.02",
            "--dg",
            "0.0012",
        ],
        vec![
            "--model",
            "asymptotic-long",
            "--alpha",
            "0.1",
            "--gamma",
            "2",
            "--delta",
            "0",
            "--mg",
            "0.02",
            "--dg",
            "0.0012",
        ],
        vec![
            "--model",
            "bounded-saddle",
            "--alpha",
            "0.1",
            "--gamma",
            "2",
            "--delta",
            "0",
            "--mg",
            "0.02",
            "--rho2",
            "0.0006",
            "--tau",
            "1",
        ],
    ] {
        let mut full = vec!["curve"];
        full.extend(args);
        let o = bin(&full);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{full:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert_eq!(rows(&stdout(&o)).len(), 500);
    }
    let long = bin(&[
        "curve",
        "--model",
        "asymptotic-long",
        "--alpha",
        "0.1",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
        "--dg",
        "0.0012",
    ]);
    assert!(stdout(&long).contains("# warning: "));
}

#[test]
fn exit_codes() {
    let bad = bin(&[
        "curve",
        "--model",
        "deterministic",
        "--alpha",
        "1.5",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8(bad.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert_eq!(bin(&["curve", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(
        bin(&["curve", "--model", "deterministic"]).status.code(),
        Some(2)
    );
    let strict = bin(&[
        "curve",
        "--model",
        "bounded-saddle",
        "--alpha",
        "0.1",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
        "--rho2",
        "0.0012",
        "--tau",
        "10",
        "--strict-validity",
    ]);
    assert_eq!(strict.status.code(), Some(3));
    let lenient = bin(&[
        "curve",
        "--model",
        "bounded-saddle",
        "--alpha",
        "0.1",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
        "--rho2",
        "0.0012",
        "--tau",
        "10",
    ]);
    assert_eq!(lenient.status.code(), Some(0));
    assert!(stdout(&lenient).contains("# warning: validity parameter"));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn outputs_reproduce_from_their_own_header() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let args = [
        "curve",
        "--model",
        "bounded-saddle",
        "--alpha",
        "0.03",
        "--gamma",
        "2",
        "--delta",
        "0.001",
        "--mg",
        "0.02",
        "--dg",
        "0.0012",
        "--t-max",
        "50",
        "--output",
    ];
    let mut a: Vec<&str> = args.to_vec();
    a.push(first.to_str().unwrap());
    assert_eq!(bin(&a).status.code(), Some(0));
    let o = bin(&[
        "curve",
        "--config",
        first.to_str().unwrap(),
        "--output",
        second.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let json = dir.path().join("c.json");
    let third = dir.path().join("d.json");
    let mut j: Vec<&str> = args[..args.len() - 1].to_vec();
    j.extend(["--format", "json", "--output", json.to_str().unwrap()]);
    assert_eq!(bin(&j).status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(doc["config"]["alpha"], 0.03);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 50);
    assert!(doc["version"]
        .as_str()
        .unwrap()
        .starts_with("logistic-discount "));
    bin(&[
        "curve",
        "--config",
        json.to_str().unwrap(),
        "--output",
        third.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&json).unwrap(), fs::read(&third).unwrap());

    // flags win over the file
    let o = bin(&[
        "curve",
        "--config",
        first.to_str().unwrap(),
        "--alpha",
        "0.1",
    ]);
    assert!(stdout(&o).contains("\"alpha\":0.1,"));
    // a config for another subcommand is refused
    assert_eq!(
        bin(&["calibrate", "--config", first.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn calibrate_report() {
    let o = bin(&[
        "calibrate",
        "--split",
        "1949",
        "--target",
        "2009",
        "--gamma",
        "2",
        "--delta",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let tau = d["calibration"]["tau_g"].as_f64().unwrap();
    assert!((1.75..=1.95).contains(&tau));
    let y = d["implied_rate"]["y_infinity"].as_f64().unwrap();
    assert!((0.0195..=0.0205).contains(&y));
    assert!((d["moments"]["m_g"].as_f64().unwrap() - 0.020).abs() < 0.001);
    assert!((d["moments"]["rho_sq"].as_f64().unwrap() / 0.00123 - 1.0).abs() < 0.05);
    assert!(d["validity"].as_f64().unwrap() > 0.0);
    assert!(d["diagnostics"]["jarque_bera"]["p"].as_f64().unwrap() < 0.05);
}

#[test]
fn calibrate_degenerate_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let exact = dir.path().join("exact.csv");
    let mut text = String::from("year,consumption\n");
    for k in 0..40 {
        text.push_str(&format!(
            "{},{}\n",
            1970 + k,
            100.0 * (0.02 * f64::from(k)).exp()
        ));
    }
    fs::write(&exact, text).unwrap();
    let o = bin(&[
        "calibrate",
        "--input",
        exact.to_str().unwrap(),
        "--split",
        "1989",
        "--target",
        "2009",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["calibration"]["tau_g"], 0.0);
    assert_eq!(d["degenerate"], true);
    assert!(d["diagnostics"].is_null());

    let gap = dir.path().join("gap.csv");
    fs::write(&gap, "year,consumption\n1929,1\n1931,2\n").unwrap();
    let o = bin(&["calibrate", "--input", gap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("missing year 1930"));
    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "year,consumption\n1929,1\n1930,x\n").unwrap();
    let o = bin(&["calibrate", "--input", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 3"));
}

#[test]
fn validate_contract() {
    let o = bin(&[
        "validate", "--alpha", "0.1", "--gamma", "2", "--delta", "0", "--mg", "0.02", "--rho2",
        "0", "--tau", "1", "--paths", "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for row in rows(&stdout(&o)) {
        assert!((row[1] - row[2]).abs() <= 1e-15 && (row[3] - row[2]).abs() <= 1e-15);
    }

    // alpha = 0 OU: the quadrature column is the closed-form unbounded curve
    let o = bin(&[
        "validate",
        "--alpha",
        "0",
        "--gamma",
        "2",
        "--delta",
        "0",
        "--mg",
        "0.02",
        "--sigma2",
        "0.0024",
        "--alphag",
        "1",
        "--paths",
        "2000",
        "--horizons",
        "5,20",
    ]);
    let u = logistic_discount::UtilityParams::new(0.0, 2.0).unwrap();
    for row in rows(&stdout(&o)) {
        let closed =
            logistic_discount::term_structure::discount_unbounded_ou(&u, 0.02, 0.0024, 1.0, row[0])
                .unwrap();
        assert!((row[2] - closed).abs() <= 1e-8);
    }

    // exit 4 exactly when some row disagrees
    let o = bin(&[
        "validate", "--alpha", "0.1", "--gamma", "2", "--delta", "0", "--mg", "0.02", "--rho2",
        "0.0006", "--tau", "1",
    ]);
    let r = rows(&stdout(&o));
    let any_disagree = r.iter().any(|row| row[8] == 0.0);
    assert_eq!(o.status.code(), Some(if any_disagree { 4 } else { 0 }));
}

#[test]
fn figures_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("figs");
    assert_eq!(
        bin(&["figures", "--output-dir", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let read = |name: &str| rows(&fs::read_to_string(Path::new(&out).join(name)).unwrap());
    let fig5 = read("fig5.csv");
    let at100 = fig5.iter().find(|r| r[0] == 100.0).unwrap();
    assert!((at100[2] - 0.030119).abs() < 1e-6 && (at100[1] - 0.029098).abs() < 1e-6);
    let fig4 = read("fig4.csv");
    let last = fig4.last().unwrap();
    assert_eq!(last[0], 2009.0);
    assert!((last[2] / 23932.0 - 1.0).abs() < 0.01 && (last[3] / 30509.0 - 1.0).abs() < 0.01);
    let fig2 = read("fig2.csv");
    assert!(fig2
        .iter()
        .all(|r| r[3] == fig2[0][3] && (r[3] - 0.021).abs() < 0.001));
    assert_eq!(read("fig3.csv").len(), 101);

    let again = dir.path().join("again");
    bin(&["figures", "--output-dir", again.to_str().unwrap()]);
    for f in ["fig2.csv", "fig3.csv", "fig4.csv", "fig5.csv"] {
        assert_eq!(
            fs::read(out.join(f)).unwrap(),
            fs::read(again.join(f)).unwrap()
        );
    }
}
