use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn csmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csmg"))
        .args(args)
        .env_remove("CSMG_THREADS")
        .output()
        .expect("spawn csmg")
}

fn ok(args: &[&str]) -> Output {
    let out = csmg(args);
    assert!(
        out.status.success(),
        "csmg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn header(count: u64, burn_in: u64) -> Vec<u8> {
    let mut h = b"CSMG\x01".to_vec();
    h.extend_from_slice(&count.to_le_bytes());
    h.extend_from_slice(&burn_in.to_le_bytes());
    h
}

fn csv_rows(path: impl AsRef<Path>) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn simulate_is_reproducible_and_well_formed() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csmg"), p(&dir, "b.csmg"));
    let args = ["--pd", "0.6", "--pzz", "0.02", "--psigma", "0.01", "--photons", "20000", "--seed", "9"];
    for out in [&a, &b] {
        let mut v = vec!["simulate"];
        v.extend(args);
        v.extend(["--out", out]);
        ok(&v);
    }
    let (ra, rb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ra, rb);
    assert_eq!(ra.len(), 21 + 20_000);
    assert_eq!(&ra[..21], &header(20_000, 100)[..]);

    let c = p(&dir, "c.csmg");
    ok(&["simulate", "--pd", "0.6", "--photons", "20000", "--seed", "10", "--out", &c]);
    assert_ne!(fs::read(&c).unwrap(), ra);
}

#[test]
fn zero_detection_gives_all_lost() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "lost.csmg");
    ok(&["simulate", "--pd", "0", "--photons", "5000", "--burn-in", "0", "--out", &f]);
    let bytes = fs::read(&f).unwrap();
    assert_eq!(&bytes[5..13], &5000u64.to_le_bytes());
    assert!(bytes[21..].iter().all(|&b| b == 0));
}

#[test]
fn crafted_record_has_one_positive_instance() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "c.csmg");
    let mut bytes = header(4, 0);
    bytes.extend([0x06, 0x04, 0x04, 0x06]);
    fs::write(&f, bytes).unwrap();
    let out = ok(&["scan", &f, "--lmax", "2", "--families", "gamma1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..6], ["gamma1", "2", "1", "1", "0", "1.0"]);
}

#[test]
fn truncated_record_is_a_data_error_with_offset() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "t.csmg");
    let mut bytes = header(10, 0);
    bytes.extend([0x06, 0x04, 0x04]);
    fs::write(&f, bytes).unwrap();
    for extra in [&[][..], &["--chunk-size", "2"][..]] {
        let mut args = vec!["scan", f.as_str()];
        args.extend(extra);
        let out = csmg(&args);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("offset 24"), "{err}");
    }
    let out = csmg(&["scan", &p(&dir, "missing.csmg")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chunked_scan_matches_streaming_scan() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "r.csmg");
    ok(&["simulate", "--pd", "0.8", "--pzz", "0.01", "--photons", "200000", "--seed", "4", "--out", &f]);
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    ok(&["scan", &f, "--lmax", "11", "--out", &a]);
    ok(&["scan", &f, "--lmax", "11", "--chunk-size", "777", "--out", &b]);
    let ta = fs::read_to_string(&a).unwrap();
    assert_eq!(ta, fs::read_to_string(&b).unwrap());
    assert!(csv_rows(&a).iter().any(|r| r[2] != "0"));

    let g = p(&dir, "greedy.csv");
    ok(&["scan", &f, "--lmax", "11", "--mode", "non-overlapping", "--out", &g]);
    for r in csv_rows(&g) {
        assert_eq!(r[4], "0");
    }
}

#[test]
fn plan_reports_reach() {
    let out = ok(&["plan", "--pd", "0.5", "--photons", "1e10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "method,layout,p_d,n_photons,max_l");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "naive-tomography");
    let g2 = rows.iter().find(|r| r[0] == "gamma2").unwrap();
    let l: i64 = g2[4].parse().unwrap();
    assert!((l - 20).abs() <= 3, "gamma2 reach {l}");
}

#[test]
fn verify_passes() {
    let out = ok(&["verify", "--lmax", "50", "--trials", "16"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 34);
    assert!(text.lines().all(|l| l.contains(": ok")));
}

#[test]
fn analyze_noiseless_gives_unit_eof() {
    let dir = TempDir::new().unwrap();
    let (rec, est, rep) = (p(&dir, "n.csmg"), p(&dir, "n.csv"), p(&dir, "out"));
    ok(&["simulate", "--pd", "0.8", "--photons", "300000", "--out", &rec]);
    ok(&["scan", &rec, "--lmax", "8", "--out", &est]);
    ok(&["analyze", &est, "--out", &rep]);
    let rows = csv_rows(Path::new(&rep).join("bounds.csv"));
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r[1], "direct");
        assert_eq!(r[6].parse::<f64>().unwrap(), 1.0);
    }
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&rep).join("fit.json")).unwrap()).unwrap();
    assert!(fit["fit"].is_null());
}

#[test]
fn analyze_noisy_run_fits_rates() {
    let dir = TempDir::new().unwrap();
    let (rec, est, rep) = (p(&dir, "m.csmg"), p(&dir, "m.csv"), p(&dir, "out"));
    ok(&[
        "simulate", "--pd", "0.7", "--psigma", "0.01", "--pzz", "0.03", "--qx", "0.25", "--qy", "0.5", "--qz", "0.25",
        "--photons", "2e6", "--seed", "3", "--out", &rec,
    ]);
    ok(&["scan", &rec, "--lmax", "8", "--out", &est]);
    ok(&["analyze", &est, "--out", &rep, "--lmax", "20"]);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&rep).join("fit.json")).unwrap()).unwrap();
    let pz = fit["fit"]["p_zz"].as_f64().unwrap();
    let sz = fit["fit"]["p_zz_stderr"].as_f64().unwrap();
    assert!((pz - 0.03).abs() < 5.0 * sz, "p_zz {pz} +- {sz}");
    let rows = csv_rows(Path::new(&rep).join("bounds.csv"));
    assert_eq!(rows.iter().filter(|r| r[1] == "indirect").count(), 7);
}

#[test]
fn report_writes_tables() {
    let dir = TempDir::new().unwrap();
    let rep = p(&dir, "rep");
    ok(&["report", "--out", &rep]);
    for (name, n) in [("reach_curve.csv", 91), ("naive.csv", 91), ("xi_curve.csv", 400)] {
        assert_eq!(csv_rows(Path::new(&rep).join(name)).len(), n, "{name}");
    }
}

#[test]
fn config_file_drives_runs_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let rec = p(&dir, "cfg.csmg");
    let cfg = p(&dir, "run.toml");
    fs::write(
        &cfg,
        format!("[experiment]\np_d = 0.5\nn_photons = 1000\nburn_in = 10\n\n[output]\nrecord = {rec:?}\n"),
    )
    .unwrap();
    ok(&["--config", &cfg, "simulate"]);
    assert_eq!(fs::read(&rec).unwrap().len(), 21 + 1000);
    ok(&["simulate", "--config", &cfg, "--photons", "500"]);
    assert_eq!(fs::read(&rec).unwrap().len(), 21 + 500);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.toml");
    fs::write(&bad, "[experiment]\npd = 0.5\n").unwrap();
    let out = p(&dir, "x.csmg");
    let cases: Vec<Vec<&str>> = vec![
        vec!["frobnicate"],
        vec!["simulate", "--pd", "abc", "--out", &out],
        vec!["simulate", "--pd", "1.5", "--out", &out],
        vec!["simulate", "--qx", "0.5", "--out", &out],
        vec!["simulate"],
        vec!["--config", &bad, "plan"],
        vec!["scan", &out, "--families", "gamma3"],
    ];
    for args in cases {
        assert_eq!(csmg(&args).status.code(), Some(1), "{args:?}");
    }
    let t = Command::new(env!("CARGO_BIN_EXE_csmg"))
        .args(["plan"])
        .env("CSMG_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(t.status.code(), Some(1));
    assert_eq!(csmg(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "r.csmg");
    ok(&["simulate", "--pd", "0.8", "--photons", "50000", "--out", &f]);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_csmg"))
            .args(["scan", &f, "--chunk-size", "1000"])
            .env("CSMG_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}
