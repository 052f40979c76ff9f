use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .join(format!("{name}.asm.json"))
}

fn mateforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mateforge")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn svg_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".svg"))
        .collect();
    names.sort();
    names
}

#[test]
fn check_exit_codes() {
    let ok = mateforge(&["check", fixture("scissors").to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(ok.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let asm = dir.path().join("broken.asm.json");
    fs::write(
        &asm,
        r#"{"parts": [], "links": [{"name": "a", "part": "ghost", "grounded": true}], "joints": []}"#,
    )
    .unwrap();
    let bad = mateforge(&["check", asm.to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    let line = String::from_utf8(bad.stdout).unwrap();
    let d: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(d["code"], "UnresolvedReference");

    assert_eq!(code(&mateforge(&["check", "/nonexistent/x.asm.json"])), 2);
}

#[test]
fn solve_two_cube() {
    let dir = tempfile::tempdir().unwrap();
    let out = mateforge(&["solve", fixture("two_cube").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--stl"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    let top = report["poses"].as_array().unwrap().iter().find(|p| p["link"] == "top").unwrap();
    let pos: Vec<f64> = top["position"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(pos, vec![0.0, 0.0, 30.0]);
    assert!(fs::read_to_string(dir.path().join("assembly.stl")).unwrap().starts_with("solid"));
}

#[test]
fn solve_conflict_still_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = mateforge(&["solve", fixture("conflict").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report = fs::read_to_string(dir.path().join("solve.json")).unwrap();
    assert!(report.contains("InconsistentConstraints"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("InconsistentConstraints"));
    assert_eq!(code(&mateforge(&["solve", "missing.asm.json"])), 2);
}

#[test]
fn solve_with_pin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let asm = fixture("scissors");
    let asm = asm.to_str().unwrap();
    assert_eq!(code(&mateforge(&["solve", asm, "--pin", "hinge=30", "--out", d])), 0);
    assert_eq!(code(&mateforge(&["solve", asm, "--pin", "hinge=90", "--out", d])), 1);
    assert_eq!(code(&mateforge(&["solve", asm, "--pin", "hinge", "--out", d])), 2);
}

#[test]
fn render_views_and_legend() {
    let dir = tempfile::tempdir().unwrap();
    let out = mateforge(&["render", fixture("scissors").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(svg_files(dir.path()), ["front.svg", "iso.svg", "right.svg", "top.svg"]);
    let legend: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("legend.json")).unwrap()).unwrap();
    assert_eq!(legend.as_array().unwrap().len(), 5 * (6 + 12));
    assert_eq!(code(&mateforge(&["render", fixture("scissors").to_str().unwrap(), "--views", "side"])), 2);
}

#[test]
fn render_conflict_has_banner() {
    let dir = tempfile::tempdir().unwrap();
    let out = mateforge(&["render", fixture("conflict").to_str().unwrap(), "--views", "front", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(fs::read_to_string(dir.path().join("front.svg")).unwrap().contains("failure-banner"));
}

#[test]
fn sweep_scissors() {
    let dir = tempfile::tempdir().unwrap();
    let out = mateforge(&[
        "sweep",
        fixture("scissors").to_str().unwrap(),
        "--joint",
        "hinge",
        "--angles",
        "0,20,40,60",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(
        svg_files(dir.path()),
        [
            "sweep_hinge_0deg_iso.svg",
            "sweep_hinge_20deg_iso.svg",
            "sweep_hinge_40deg_iso.svg",
            "sweep_hinge_60deg_iso.svg"
        ]
    );
    assert!(dir.path().join("legend.json").is_file());
}

#[test]
fn sweep_edge_cases() {
    let asm = fixture("scissors");
    let asm = asm.to_str().unwrap();
    let empty = tempfile::tempdir().unwrap();
    let out = mateforge(&["sweep", asm, "--joint", "hinge", "--angles", "", "--out", empty.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(svg_files(empty.path()).is_empty());

    let skip = tempfile::tempdir().unwrap();
    let out = mateforge(&["sweep", asm, "--joint", "hinge", "--angles", "30,75", "--out", skip.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert_eq!(svg_files(skip.path()), ["sweep_hinge_30deg_iso.svg"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("LimitViolation"));
}

#[test]
fn ids_prints_legend() {
    let out = mateforge(&["ids", fixture("two_cube").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let legend: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = legend.as_array().unwrap();
    assert_eq!(rows.len(), 2 * 18);
    assert_eq!(rows[0]["label"], "Cube1");
}

fn scripted_task(dir: &Path, judge: &str, iterations: usize) -> PathBuf {
    let asm = fs::read_to_string(fixture("two_cube")).unwrap();
    let part = fs::read_to_string(fixture("two_cube").parent().unwrap().join("parts/cube.part.json")).unwrap();
    let task = serde_json::json!({
        "description": "two stacked cubes",
        "budget": {"iterations": iterations},
        "client": {"kind": "scripted",
            "agent": [
                {"text": "", "tool_calls": [
                    {"id": "1", "name": "write_file", "arguments": {"path": "parts/cube.part.json", "content": part}},
                    {"id": "2", "name": "write_file", "arguments": {"path": "assembly.asm.json", "content": asm}}],
                 "usage": {"input_tokens": 100, "output_tokens": 20}},
                {"text": "done"}],
            "judge": [{"text": judge}],
            "cycle": true},
        "clock": {"kind": "manual", "tick": 1.0},
        "views": ["iso"]
    });
    let path = dir.join("task.json");
    fs::write(&path, serde_json::to_string_pretty(&task).unwrap()).unwrap();
    path
}

#[test]
fn agent_accepts_and_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let task = scripted_task(dir.path(), "YES", 4);
    let first = dir.path().join("first");
    let out = mateforge(&["agent", task.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "accepted");
    for f in ["transcript.jsonl", "telemetry.json", "assembly.asm.json", "renders/iter1_iso.svg"] {
        assert!(first.join(f).is_file(), "{f}");
    }

    let replay = serde_json::json!({
        "description": "two stacked cubes",
        "budget": {"iterations": 4},
        "client": {"kind": "replay", "transcript": "first/transcript.jsonl"},
        "clock": {"kind": "manual", "tick": 1.0},
        "views": ["iso"]
    });
    let replay_task = dir.path().join("replay.json");
    fs::write(&replay_task, replay.to_string()).unwrap();
    let second = dir.path().join("second");
    let out = mateforge(&["agent", replay_task.to_str().unwrap(), "--out", second.to_str().unwrap(), "-q"]);
    assert_eq!(code(&out), 0);
    for f in ["transcript.jsonl", "telemetry.json", "assembly.asm.json", "parts/cube.part.json", "renders/iter1_iso.svg"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn agent_budget_exits() {
    let dir = tempfile::tempdir().unwrap();
    let task = scripted_task(dir.path(), "NO: needs a third cube", 40);
    let out = mateforge(&["agent", task.to_str().unwrap(), "--out", dir.path().join("s").to_str().unwrap(), "--budget", "0"]);
    assert_eq!(code(&out), 1);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "budget_exhausted");

    let out = mateforge(&["agent", task.to_str().unwrap(), "--out", dir.path().join("t").to_str().unwrap(), "--budget", "2", "-q"]);
    assert_eq!(code(&out), 1);
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t/telemetry.json")).unwrap()).unwrap();
    assert_eq!(t["iterations"].as_array().unwrap().len(), 2);
}

#[test]
fn agent_abort_and_bad_task() {
    let dir = tempfile::tempdir().unwrap();
    let task = dir.path().join("task.json");
    fs::write(&task, r#"{"description": "x", "client": {"kind": "scripted"}}"#).unwrap();
    let out = mateforge(&["agent", task.to_str().unwrap(), "--out", dir.path().join("s").to_str().unwrap(), "-q"]);
    assert_eq!(code(&out), 2);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "aborted");

    fs::write(&task, r#"{"client": {"kind": "scripted"}}"#).unwrap();
    assert_eq!(code(&mateforge(&["agent", task.to_str().unwrap(), "--out", dir.path().join("u").to_str().unwrap()])), 2);
}
