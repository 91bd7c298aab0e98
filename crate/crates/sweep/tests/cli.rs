use std::path::Path;
use std::process::Command;

fn ramanmag(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ramanmag"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const CONFIG: &str = r#"{
    "sweep": "laser_curve",
    "drive": {"rabi": {"values": [0, 18], "unit": "MHz"}, "detuning": {"values": [0, 200], "unit": "MHz"}},
    "pump": {"grid": {"values": [0, 300, 340, 345, 400], "unit": "mW"}},
    "output": {"stem": "curve"}
}"#;

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), CONFIG).unwrap();
    let (code, stdout, stderr) = ramanmag(
        &["run", "cfg.json", "--out", "res", "--workers", "2"],
        dir.path(),
    );
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("curve.csv"));
    for f in ["curve.csv", "curve.summary.json", "curve.manifest.json"] {
        assert!(dir.path().join("res").join(f).is_file(), "{f}");
    }
    let (code, stdout, _) = ramanmag(&["verify", "cfg.json", "res/curve.csv"], dir.path());
    assert_eq!(code, 0);
    assert!(stdout.starts_with("PASS"), "{stdout}");

    let perturbed = CONFIG.replace(
        "\"output\"",
        "\"cavity\": {\"raman_gain\": {\"value\": 14.8975, \"unit\": \"cm/GW\"}}, \"output\"",
    );
    std::fs::write(dir.path().join("bad.json"), perturbed).unwrap();
    let (code, stdout, _) = ramanmag(&["verify", "bad.json", "res/curve.csv"], dir.path());
    assert_eq!(code, 1);
    assert!(stdout.contains("output_power_w"), "{stdout}");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("empty.json"),
        CONFIG.replace("[0, 18]", "[]"),
    )
    .unwrap();
    let (code, _, stderr) = ramanmag(&["run", "empty.json"], dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("drive.rabi: empty"), "{stderr}");

    std::fs::write(
        dir.path().join("typo.json"),
        CONFIG.replace("\"pump\"", "\"pmup\""),
    )
    .unwrap();
    assert_eq!(ramanmag(&["run", "typo.json"], dir.path()).0, 2);
    assert_eq!(ramanmag(&["run", "missing.json"], dir.path()).0, 2);
    assert_eq!(ramanmag(&["preset", "figure9"], dir.path()).0, 2);
    assert_eq!(
        ramanmag(&["run", "empty.json", "--workers", "0"], dir.path()).0,
        2
    );

    std::fs::write(dir.path().join("ok.json"), CONFIG).unwrap();
    assert_eq!(
        ramanmag(&["verify", "ok.json", "nope.csv"], dir.path()).0,
        2
    );
}

#[test]
fn preset_writes_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = ramanmag(&["preset", "figure4a", "--out", "o"], dir.path());
    assert_eq!(code, 0, "{stderr}");
    let csv = std::fs::read_to_string(dir.path().join("o/figure4a.csv")).unwrap();
    assert!(csv.starts_with("rabi_hz,gamma_g_hz,detuning_hz,output_power_w,eta_t_per_sqrt_hz\n"));

    let (code, stdout, _) = ramanmag(&["preset", "figure3a", "--print-config"], dir.path());
    assert_eq!(code, 0);
    std::fs::write(dir.path().join("p.json"), stdout).unwrap();
    let (code, _, stderr) = ramanmag(&["run", "p.json", "--out", "p"], dir.path());
    assert_eq!(code, 0, "{stderr}");
    assert!(dir.path().join("p/figure3a.csv").is_file());
}
