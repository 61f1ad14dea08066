use std::process::Command;

fn leofuse(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_leofuse"))
        .args(args)
        .output()
        .unwrap()
}

fn wad(summary: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("wad_s="))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn zero_load_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = leofuse(&["run", "--out", dir.path().to_str().unwrap(), "load=0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "tasks=0");
    let csv = std::fs::read_to_string(dir.path().join("tasks.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = leofuse(&["run", "--out", d, "--scheme", "orbital_dance"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scheme"));
    assert_eq!(
        leofuse(&["run", "--out", d, "warp_factor=9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        leofuse(&["run", "--out", d, "--eta", "file:/nonexistent.csv"])
            .status
            .code(),
        Some(2)
    );
    let out = leofuse(&["sweep", "--out", d, "--param", "gravity", "--values", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown param"));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    std::fs::write(&cfg, "# small run\nload=20\nduration_s=1\nscheme=ground\n").unwrap();
    let out = leofuse(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--scheme",
        "visible",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("scheme=visible"), "{text}");
}

#[test]
fn sweep_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = leofuse(&[
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--param",
        "load",
        "--values",
        "5,10",
        "--seeds",
        "1,2",
        "--schemes",
        "fusion,ground",
        "duration_s=1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn validate_passes() {
    let out = leofuse(&["validate", "--seed", "4"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout)
        .trim_end()
        .ends_with("PASS"));
}

#[test]
fn fusion_beats_ground_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let run = |scheme: &str| {
        let out = leofuse(&[
            "run",
            "--scheme",
            scheme,
            "--seed",
            "7",
            "--out",
            dir.path().join(scheme).to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        wad(&String::from_utf8_lossy(&out.stdout))
    };
    let (f, g) = (run("fusion"), run("ground"));
    assert!(f <= g, "fusion {f} ground {g}");
}
