use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fanmarch"));
    cmd.env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// A small copy of the simple-obstacle layout on a coarse grid.
fn write_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("wall.json");
    let text = r#"{
  "name": "wall",
  "grid": { "h": 0.02 },
  "speed": { "type": "constant", "value": 1.0 },
  "obstacles": [{ "lo": [0.0, 0.2], "hi": [0.2, 1.0] }],
  "sources": [[0.0, 0.0]],
  "solver": { "method": "just-in-time", "radius": 0.18 },
  "study": {
    "h0": 0.05,
    "levels": 3,
    "truth": { "kind": "visibility" },
    "methods": [{ "method": "original" }, { "method": "just-in-time", "radius": 0.18 }]
  },
  "outputs": { "trajectories": [[0.4, 0.9]] }
}"#;
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let prefix = dir.path().join("run");
    let out = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("51x51 nodes"), "{text}");
    assert!(text.contains("1 corner fans"), "{text}");
    assert!(text.contains("fan at (0.2, 0.2)"), "{text}");

    let field = std::fs::read_to_string(dir.path().join("run_field.csv")).unwrap();
    let lines: Vec<&str> = field.lines().collect();
    assert_eq!(lines[0], "i,j,x,y,u");
    assert_eq!(lines.len(), 1 + 51 * 51);
    assert!(
        lines[1].ends_with(",0.0000000000000000e0"),
        "source row {}",
        lines[1]
    );
    assert!(field.contains(",inf\n"), "wall interior should be infinite");

    let pgm = std::fs::read(dir.path().join("run_heatmap.pgm")).unwrap();
    let header = b"P5\n51 51\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert_eq!(pgm.len(), header.len() + 51 * 51);

    let path = std::fs::read_to_string(dir.path().join("run_trajectory_0.csv")).unwrap();
    let last = path.lines().last().unwrap();
    assert_eq!(last, "0.0000000000000000e0,0.0000000000000000e0");
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let mut fields = Vec::new();
    for k in 0..2 {
        let prefix = dir.path().join(format!("run{k}"));
        let out = run(&[
            "solve",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out-prefix",
            prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        fields.push(std::fs::read(dir.path().join(format!("run{k}_field.csv"))).unwrap());
    }
    assert_eq!(fields[0], fields[1]);
}

#[test]
fn converge_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let out = run(&[
        "converge",
        "--scenario",
        scenario.to_str().unwrap(),
        "--tail",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,h,linf,l1,order_tail");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(
        lines[1].starts_with("original,5.0000000000000003e-2,"),
        "{}",
        lines[1]
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("over the last 2 levels"));

    let again = run(&[
        "converge",
        "--scenario",
        scenario.to_str().unwrap(),
        "--tail",
        "2",
    ]);
    // the runtime is not part of the CSV, so reruns match byte for byte
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn trajectory_reaches_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let out = run(&[
        "trajectory",
        "--scenario",
        scenario.to_str().unwrap(),
        "--from",
        "0.4,0.9",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("x,y"));
    assert_eq!(
        text.lines().nth(1),
        Some("4.0000000000000002e-1,9.0000000000000002e-1")
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("ReachedSource"));
}

#[test]
fn trajectory_inside_the_wall_fails() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let out = run(&[
        "trajectory",
        "--scenario",
        scenario.to_str().unwrap(),
        "--from",
        "0.1,0.5",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("inside obstacle"));
}

#[test]
fn snell_prints_angles() {
    let out = run(&[
        "snell",
        "--alpha",
        "0.7853981633974483",
        "--upsilon",
        "1.118033988749895",
    ]);
    assert!(out.status.success());
    let values: Vec<f64> = stdout(&out)
        .lines()
        .map(|l| l.split(" = ").nth(1).unwrap().parse().unwrap())
        .collect();
    let pi = std::f64::consts::PI;
    assert!((values[0] - pi / 3.0).abs() < 1e-12);
    assert!((values[1] - pi / 12.0).abs() < 1e-12);
    assert!((values[2] - (0.5f64.sqrt() / 1.118033988749895).asin()).abs() < 1e-12);
    assert!((values[3] - pi / 3.0).abs() < 1e-12);
}

#[test]
fn fast_ratio_saturates_beta() {
    let out = run(&["snell", "--alpha", "0.5", "--upsilon", "2"]);
    assert!(stdout(&out).contains("beta = 1.5707963267948966e0"));
}

#[test]
fn snell_rejects_bad_input() {
    for args in [
        ["--alpha", "2.0", "--upsilon", "1.5"],
        ["--alpha", "0.5", "--upsilon", "0.5"],
    ] {
        let out = bin().arg("snell").args(args).output().unwrap();
        assert!(!out.status.success());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn bad_scenario_reports_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{ "grid": { "n": 11 }, "speed": { "type": "constant", "value": -1 }, "sources": [[0, 0]] }"#).unwrap();
    let out = run(&[
        "solve",
        "--scenario",
        path.to_str().unwrap(),
        "--out-prefix",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed.value"));

    let missing = run(&[
        "solve",
        "--scenario",
        "/nonexistent/scenario.json",
        "--out-prefix",
        "x",
    ]);
    assert!(!missing.status.success());
}

#[test]
fn bundled_scenarios_load() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        fanmarch::Scenario::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
