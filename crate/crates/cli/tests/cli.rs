use std::process::{Command, Output};

fn ipres(args: &[&str]) -> Output {
    ipres_env(args, &[])
}

fn ipres_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ipres"));
    c.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("IPRES_")) {
        c.env_remove(k);
    }
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("spawn ipres")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn parse_ratio(s: &str) -> f64 {
    s.split_whitespace().nth(1).unwrap().parse().unwrap()
}

fn scan_rows(csv_text: &str) -> Vec<Vec<String>> {
    let mut lines = csv_text.lines();
    assert!(lines.next().unwrap().starts_with("# generated "));
    let body: String = lines.collect::<Vec<_>>().join("\n");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["p", "threshold_flag", "F_plus", "lb_probe", "lb_sf", "ub_eb", "sandwich_lo", "sandwich_hi"]
    );
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn jm_builtins_report_visibility() {
    let o = ipres(&["jm", "--builtin", "pauli-xz"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("INCOMPATIBLE") && s.contains("0.7071"), "{s}");

    let o = ipres(&["jm", "--builtin", "pauli-xyz", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["jm"], false);
    assert!((v["visibility"].as_f64().unwrap() - 3f64.sqrt().recip()).abs() < 1e-4);
}

#[test]
fn jm_file_input_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let commuting = dir.path().join("commuting.json");
    let z0 = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]];
    let z1 = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]];
    let doc = serde_json::json!({"dim": 2, "settings": [[z0, z1], [z0, z1]]});
    std::fs::write(&commuting, doc.to_string()).unwrap();
    let o = ipres(&["jm", "--file", commuting.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("COMPATIBLE"), "{}", stdout(&o));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(code(&ipres(&["jm", "--file", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&ipres(&["jm", "--builtin", "nope"])), 1);
    assert_eq!(code(&ipres(&["--dim", "7", "jm", "--builtin", "pauli-xz"])), 1);
    assert_eq!(code(&ipres(&["frobnicate"])), 1);
    assert_eq!(code(&ipres(&["--help"])), 0);
}

#[test]
fn depol_scan_default_grid() {
    let o = ipres(&["--jobs", "2", "depol-scan"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = scan_rows(&stdout(&o));
    assert_eq!(rows.len(), 21);
    let at = |p: f64| rows.iter().find(|r| (num(&r[0]) - p).abs() < 1e-9).unwrap();

    let one = at(1.0);
    assert!((num(&one[2]) - 1.0).abs() < 1e-12);
    assert!((num(&one[6]) - 0.6).abs() < 1e-9 && (num(&one[7]) - 1.0).abs() < 1e-9);
    assert!((num(&one[5]) - 1.0).abs() < 1e-6);

    let half = at(0.5);
    assert_eq!(half[1], "true");
    assert!(num(&half[3]).abs() < 1e-6 && num(&half[4]).abs() < 1e-6);

    let p8 = at(0.8);
    assert!((num(&p8[6]) - 0.36).abs() < 1e-9 && (num(&p8[7]) - 0.6).abs() < 1e-9);
    assert!((num(&p8[5]) - 0.7).abs() < 1e-6);
    for r in &rows {
        let ub = num(&r[5]);
        assert!(num(&r[3]) <= ub + 1e-6 && num(&r[4]) <= ub + 1e-6, "{r:?}");
    }
}

#[test]
fn depol_scan_is_reproducible_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["--p-grid", "0.6,0.9", "--cache-dir", cache.to_str().unwrap(), "depol-scan"];
    let first = stdout(&ipres(&args));
    let fresh = stdout(&ipres(&["--p-grid", "0.6,0.9", "depol-scan"]));
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&first), body(&fresh));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    let second = stdout(&ipres(&args));
    assert_eq!(body(&first), body(&second));
}

#[test]
fn depol_scan_d3_leaves_upper_bound_blank() {
    let o = ipres(&["--dim", "3", "--p-grid", "0.4,1", "depol-scan"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = scan_rows(&stdout(&o));
    assert_eq!(rows[0][1], "true");
    assert!(rows.iter().all(|r| r[5].is_empty()));
    assert!(num(&rows[1][3]) > 0.0);
}

#[test]
fn output_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.json");
    let o = ipres(&["--p-grid", "1", "--format", "json", "--output", out.to_str().unwrap(), "depol-scan"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert!((v[0]["F_plus"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn env_and_config_file_layering() {
    let o = ipres_env(&["depol-scan"], &[("IPRES_P_GRID", "0.2,0.4,1")]);
    assert_eq!(scan_rows(&stdout(&o)).len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"dimension": 2, "p_grid": [0.5, 1.0], "tolerances": {"psd": 1e-9}}"#).unwrap();
    let o = ipres(&["--config", cfg.to_str().unwrap(), "depol-scan"]);
    assert_eq!(scan_rows(&stdout(&o)).len(), 2);
    // Flags beat the file.
    let o = ipres(&["--config", cfg.to_str().unwrap(), "--p-grid", "1", "depol-scan"]);
    assert_eq!(scan_rows(&stdout(&o)).len(), 1);

    std::fs::write(&cfg, r#"{"dimenson": 2}"#).unwrap();
    assert_eq!(code(&ipres(&["--config", cfg.to_str().unwrap(), "depol-scan"])), 1);
    assert_eq!(code(&ipres_env(&["depol-scan"], &[("IPRES_TOL", "nonsense=1")])), 1);
}

#[test]
fn verify_suites_pass() {
    let o = ipres(&["verify", "gamma", "--trials", "30"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("PASS gamma: 30 trials"), "{}", stdout(&o));

    let o = ipres(&["verify", "golden-rule", "--trials", "50"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS golden-rule"));
}

#[test]
fn verify_all_with_channel_file() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("ch.json");
    let ident = ipres_core::Channel::identity(2);
    std::fs::write(&ch, serde_json::to_string(&ident).unwrap()).unwrap();
    let o = ipres(&["--seeds", "0..3", "verify", "all", "--channel", ch.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 4);

    std::fs::write(&ch, r#"{"dim_in": 2, "dim_out": 2, "kraus": [[[1"#).unwrap();
    assert_eq!(code(&ipres(&["verify", "all", "--channel", ch.to_str().unwrap()])), 1);
}

#[test]
fn game_identity_ratios() {
    let o = ipres(&["game", "--denominator", "analytic"]);
    assert_eq!(code(&o), 0);
    let r = parse_ratio(&stdout(&o));
    assert!((r - 1.6).abs() < 1e-4, "{r}");

    let o = ipres(&["--probes", "xyz", "game"]);
    let r = parse_ratio(&stdout(&o));
    assert!((r - 4.0 / (3f64.sqrt() + 1.0)).abs() < 1e-4, "{r}");

    let o = ipres(&["game", "--builtin-filter", "witness", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["ratio_lb"].as_f64().unwrap() > 1.4);
}

#[test]
fn game_free_channel_and_bad_inputs() {
    let o = ipres(&["game", "--builtin-channel", "depol:0.4"]);
    assert_eq!(code(&o), 0);
    assert!(parse_ratio(&stdout(&o)) <= 1.0 + 1e-5);

    assert_eq!(code(&ipres(&["game", "--builtin-channel", "depol:x"])), 1);
    assert_eq!(code(&ipres(&["game", "--builtin-channel", "swap"])), 1);
    assert_eq!(code(&ipres(&["game", "--builtin-filter", "witness", "--denominator", "analytic"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("k.json");
    // Effect 2·I exceeds the identity.
    let two = |i: usize, j: usize| if i == j { [2.0f64.sqrt(), 0.0] } else { [0.0, 0.0] };
    let k: Vec<Vec<[f64; 2]>> = (0..4).map(|i| (0..4).map(|j| two(i, j)).collect()).collect();
    std::fs::write(&f, serde_json::json!({"dim": 4, "kraus": [k]}).to_string()).unwrap();
    assert_eq!(code(&ipres(&["game", "--filter", f.to_str().unwrap()])), 1);
    assert_eq!(code(&ipres(&["game", "--filter", "/nonexistent/k.json"])), 1);
}
