use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orbitphase::config::SceneConfig;
use orbitphase::report::compare_reports;
use tempfile::TempDir;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitphase")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Writes a modified copy of a bundled config.
fn variant(dir: &Path, name: &str, tag: &str, edit: impl FnOnce(&mut SceneConfig)) -> PathBuf {
    let mut cfg = SceneConfig::load(&config_path(name)).unwrap();
    edit(&mut cfg);
    let path = dir.join(format!("{tag}.json"));
    std::fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn malformed_json_exits_with_config_error_and_no_artifacts() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"obstacles\": [ {\"kind\": \"circle\", ").unwrap();
    let out_dir = dir.path().join("out");
    for cmd in ["orbit", "phase", "report"] {
        let out = run(&[cmd, "--config", s(&bad), "--out", s(&out_dir)]);
        assert_eq!(out.status.code(), Some(2));
        assert!(!out_dir.exists());
    }
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"obstacles": [], "wavenumber": 1, "extra": true}"#).unwrap();
    assert_eq!(run(&["orbit", "--config", s(&unknown)]).status.code(), Some(2));
    assert_eq!(run(&["orbit", "--config", s(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn phase_table_has_two_disk_c2() {
    let dir = TempDir::new().unwrap();
    run_ok(&["phase", "--config", s(&config_path("twodisks")), "--out", s(dir.path())]);
    let mut rdr = csv::Reader::from_path(dir.path().join("fphase.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), ["order", "obstacle", "c", "a"]);
    let row = rdr
        .records()
        .map(|r| r.unwrap())
        .find(|r| &r[0] == "2" && &r[1] == "0")
        .unwrap();
    let c2: f64 = row[2].parse().unwrap();
    assert!((c2 - SQRT_2 * PI * PI).abs() <= 1e-12 * c2);
    assert_eq!(row[2].len(), "1.3957728399277759e1".len());
}

#[test]
fn subcommands_write_their_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(dir.path(), "twodisks", "small", |c| c.wavenumber = 16.0);
    for (cmd, file) in [
        ("orbit", "orbit.csv"),
        ("fseries", "fseries.csv"),
        ("twodisk", "twodisk.csv"),
        ("mode", "mode.csv"),
        ("iterate", "fiter.csv"),
    ] {
        run_ok(&[cmd, "--config", s(&cfg), "--out", s(dir.path())]);
        assert!(dir.path().join(file).exists(), "{cmd}");
    }
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn sections_required_by_subcommands() {
    let pair = config_path("ellipse_pair");
    assert_eq!(run(&["twodisk", "--config", s(&pair)]).status.code(), Some(2));
    assert_eq!(run(&["iterate", "--config", s(&pair)]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    // concentric circles: every radial segment is an orbit, so none is isolated
    let cfg = dir.path().join("ring.json");
    std::fs::write(
        &cfg,
        r#"{"obstacles": [
            {"kind": "circle", "center": [0, 0], "radius": 0.5},
            {"kind": "circle", "center": [0, 0], "radius": 2.0}
        ], "wavenumber": 4}"#,
    )
    .unwrap();
    let out = run(&["orbit", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = run(&["orbit", "--config", s(&config_path("twodisks")), "--out", s(&blocker)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn report_is_deterministic_and_self_consistent() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(dir.path(), "twodisks", "k16", |c| c.wavenumber = 16.0);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["report", "--config", s(&cfg), "--out", s(&a)]);
    run_ok(&["report", "--config", s(&cfg), "--out", s(&b)]);
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
    let out = run_ok(&["compare", s(&a), s(&b)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fconv"));
    let summary = compare_reports(&a, &b, None).unwrap();
    assert!(summary.pass && summary.tables.iter().all(|t| t.max_rel_diff == 0.0));
    let header = std::fs::read_to_string(a.join("fconv.csv")).unwrap();
    assert!(header.starts_with("offset,err_T2,err_T4,err_T6,err_T8,err_bem\n"));
}

#[test]
fn compare_detects_scene_mismatch() {
    let dir = TempDir::new().unwrap();
    let c1 = variant(dir.path(), "twodisks", "one", |c| c.bem.enabled = false);
    let c2 = variant(dir.path(), "ellipse_pair", "two", |c| c.bem.enabled = false);
    run_ok(&["report", "--config", s(&c1), "--out", s(&dir.path().join("one"))]);
    run_ok(&["report", "--config", s(&c2), "--out", s(&dir.path().join("two"))]);
    let out = run(&["compare", s(&dir.path().join("one")), s(&dir.path().join("two"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lower_taylor_order_reproduces_leading_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(dir.path(), "ellipse_pair", "nobem", |c| c.bem.enabled = false);
    let (hi, lo) = (dir.path().join("hi"), dir.path().join("lo"));
    run_ok(&["report", "--config", s(&cfg), "--out", s(&hi), "--order", "8"]);
    run_ok(&["report", "--config", s(&cfg), "--out", s(&lo), "--order", "6"]);
    let summary = compare_reports(&lo, &hi, Some(1e-12)).unwrap();
    let fphase = summary.table("fphase").unwrap();
    assert_eq!(fphase.row_count, [14, 18]);
    assert!(fphase.pass, "{fphase:?}");
}

#[test]
fn doubling_collocation_moves_lambda_little() {
    let dir = TempDir::new().unwrap();
    let coarse = variant(dir.path(), "twodisks", "coarse", |c| {
        c.wavenumber = 16.0;
        c.bem.points = Some(96);
    });
    let fine = variant(dir.path(), "twodisks", "fine", |c| {
        c.wavenumber = 16.0;
        c.bem.points = Some(192);
    });
    let (a, b) = (dir.path().join("n"), dir.path().join("2n"));
    run_ok(&["report", "--config", s(&coarse), "--out", s(&a)]);
    run_ok(&["report", "--config", s(&fine), "--out", s(&b)]);
    let summary = compare_reports(&a, &b, None).unwrap();
    let t = summary.table("summary").unwrap();
    assert!(t.max_rel_diff <= 1e-3, "{t:?}");
    // per-node tables differ in size and are expected to fail at default tolerance
    assert_eq!(summary.table("mode").unwrap().row_count, [192, 384]);
}

#[test]
fn bundled_configs_round_trip() {
    for name in ["twodisks", "ellipse_pair", "three_obstacles"] {
        let cfg = SceneConfig::load(&config_path(name)).unwrap();
        assert_eq!(SceneConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
