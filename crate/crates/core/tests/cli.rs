use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rps-ocp"))
}

#[test]
fn invalid_nc_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["convergence", "--nc", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nc"));
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["solve", "--nc", "4", "--refine", "2", "--layers", "2", "--export-basis", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["config.toml", "state.csv", "control.csv", "trace.csv", "errors.csv", "basis.csv", "fine_mesh.txt"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let state = std::fs::read_to_string(dir.path().join("state.csv")).unwrap();
    assert_eq!(state.lines().count(), 1 + 17 * 17);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "nc = [2, 4]\nrefine = 2\nlayers = [1, 2]\nconstraint = \"box:0,1\"\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["convergence", "--basis", "rps,grps", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("box:0.0,1.0"));
}

#[test]
fn decay_writes_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["decay", "--nc", "8", "--refine", "2", "--layers", "1,2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let profile = std::fs::read_to_string(dir.path().join("decay_grps_nc8.csv")).unwrap();
    let first: Vec<&str> = profile.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
}
