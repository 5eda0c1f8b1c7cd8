use std::fs;
use std::path::Path;
use std::process::Command;

use hypgauss_cli::pipeline::{BRANCH_FILE, CHECKPOINT_DIR, MESH_FILE, REPORT_FILE};
use hypgauss_cli::{RunConfig, Session, WeightSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypgauss"))
}

fn constant(level: usize, out: &Path) -> RunConfig {
    RunConfig { refinement_level: level, out_dir: out.to_path_buf(), ..RunConfig::new(WeightSpec::Constant { c: 1.0 }) }
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, cfg.to_json()).unwrap();
    p
}

fn status(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn mesh_command_summary_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let s0 = Session::new(constant(0, &dir.path().join("l0"))).unwrap().cmd_mesh().unwrap();
    assert_eq!(s0.euler_characteristic, -2);
    let s3 = Session::new(constant(3, &dir.path().join("a"))).unwrap().cmd_mesh().unwrap();
    assert!(s3.area_defect <= 1e-4);
    assert_eq!(s3.vertices, 510);
    Session::new(constant(3, &dir.path().join("b"))).unwrap().cmd_mesh().unwrap();
    let a = fs::read(dir.path().join("a").join(MESH_FILE)).unwrap();
    let b = fs::read(dir.path().join("b").join(MESH_FILE)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(status(&["mesh", "--refine", "9", "--out", out]).0, 2);
    assert_eq!(status(&["frobnicate"]).0, 2);
    let (code, err) = status(&["mpass", "--refine", "1", "--out", out]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("run `continue` first"));
    assert_eq!(status(&["report", "--refine", "1", "--out", out]).0, 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"weight": {"kind": "constant", "c": 1.0}, "newtonTol": 2.0}"#).unwrap();
    assert_eq!(status(&["mesh", "--config", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn continuation_abort_exits_with_three_and_keeps_partial_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = constant(1, &dir.path().join("out"));
    cfg.continuation.max_steps = 5;
    let path = write_config(dir.path(), &cfg);
    let (code, err) = status(&["continue", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    let csv = fs::read_to_string(dir.path().join("out").join(BRANCH_FILE)).unwrap();
    assert!(csv.lines().count() > 3);
    assert!(fs::read_dir(dir.path().join("out").join(CHECKPOINT_DIR)).unwrap().count() > 1);
}

#[test]
fn mountain_pass_beyond_the_fold_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(status(&["continue", "--refine", "1", "--out", o]).0, 0);
    let (code, err) = status(&["mpass", "--refine", "1", "--out", o, "--t-list", "0.4,1.5"]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("t = 1.5") && err.contains("certified bound"), "{err}");
    let table = fs::read_to_string(out.join("mpass.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn constant_weight_mountain_pass_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { t_list: vec![0.4], ..constant(2, dir.path()) };
    let s = Session::new(cfg).unwrap();
    let fold = s.cmd_continue(false).unwrap();
    assert!((fold.tau0 - 0.5).abs() < 1e-6 && (fold.bound - 1.0).abs() < 1e-10 && (fold.ratio - 0.5).abs() < 1e-6);
    let rep = s.cmd_mpass().unwrap();
    let p = &rep.pairs[0];
    assert!((p.stable.sup_norm - 0.5 * 0.8f64.ln().abs()).abs() < 1e-9);
    assert!((p.mountain_pass.sup_norm - 0.5 * 0.2f64.ln().abs()).abs() < 1e-9);
    assert!((p.stable.mu1 - 1.2).abs() < 1e-6 && (p.mountain_pass.mu1 + 1.2).abs() < 1e-6);
    assert!(p.mountain_pass.energy > p.stable.energy);
}

#[test]
fn resumed_continuation_matches_a_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let full = Session::new(constant(1, &dir.path().join("full"))).unwrap();
    let report = full.cmd_continue(false).unwrap();
    let part = dir.path().join("part");
    fs::create_dir_all(part.join(CHECKPOINT_DIR)).unwrap();
    for i in 0..report.points / 2 {
        let name = format!("point_{i:05}.json");
        fs::copy(dir.path().join("full").join(CHECKPOINT_DIR).join(&name), part.join(CHECKPOINT_DIR).join(&name)).unwrap();
    }
    let resumed = Session::new(constant(1, &part)).unwrap().cmd_continue(true).unwrap();
    assert_eq!(resumed, report);
    assert_eq!(fs::read(dir.path().join("full").join(BRANCH_FILE)).unwrap(), fs::read(part.join(BRANCH_FILE)).unwrap());
    let empty = Session::new(constant(1, &dir.path().join("empty"))).unwrap();
    assert_eq!(hypgauss_cli::exit_code(&empty.cmd_continue(true).unwrap_err()), 2);
}

#[test]
fn foreign_artifacts_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let one = Session::new(constant(1, dir.path())).unwrap();
    one.cmd_qdiff().unwrap();
    one.cmd_continue(false).unwrap();
    let two = RunConfig { weight: WeightSpec::Constant { c: 2.0 }, ..constant(1, dir.path()) };
    let err = Session::new(two).unwrap().cmd_mpass().unwrap_err();
    assert!(format!("{err:#}").contains("refusing"), "{err:#}");
    let finer = Session::new(constant(2, dir.path())).unwrap();
    let err = finer.cmd_continue(false).unwrap_err();
    assert_eq!(hypgauss_cli::exit_code(&err), 2, "{err:#}");
}

#[test]
fn report_is_idempotent_and_shows_one_fold() {
    let dir = tempfile::tempdir().unwrap();
    let s = Session::new(constant(1, dir.path())).unwrap();
    s.cmd_continue(false).unwrap();
    s.cmd_mpass().unwrap();
    s.cmd_geom().unwrap();
    let r = s.cmd_report().unwrap();
    let first = fs::read(dir.path().join(REPORT_FILE)).unwrap();
    s.cmd_report().unwrap();
    assert_eq!(first, fs::read(dir.path().join(REPORT_FILE)).unwrap());
    let flips = r.bifurcation.windows(2).filter(|w| w[0].stable != w[1].stable).count();
    assert_eq!(flips, 1);
    assert!(r.stable_points > 0 && r.unstable_points > 0);
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["schema_version"], hypgauss_cli::pipeline::SCHEMA_VERSION);
}

#[test]
fn file_weight_roundtrips_through_qdiff() {
    let dir = tempfile::tempdir().unwrap();
    let src = Session::new(RunConfig {
        weight: WeightSpec::Poincare { m: 0, depth: 6.0 },
        ..constant(1, &dir.path().join("src"))
    })
    .unwrap();
    let summary = src.cmd_qdiff().unwrap();
    let file = dir.path().join("src").join("weight.json");
    let dst = Session::new(RunConfig { weight: WeightSpec::File { path: file }, ..constant(1, &dir.path().join("dst")) })
        .unwrap();
    let again = dst.cmd_qdiff().unwrap();
    assert_eq!(again, summary);
}
