use std::path::Path;
use std::process::Command;

fn ibshell(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ibshell"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

#[test]
fn checks_exit_zero_and_print_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["kernel-check", "plate-check", "geometry-check"] {
        let o = ibshell(dir.path(), &[cmd]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stdout));
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(text.contains("PASS") && !text.contains("FAIL"), "{text}");
    }
}

#[test]
fn run_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "n = 8\nn1 = 40\nn2 = 6\ndt = 4e-8\nt0 = 1.2e-7\n").unwrap();
    let o = ibshell(dir.path(), &["--config", cfg.to_str().unwrap(), "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut rd = csv::Reader::from_path(dir.path().join("run_summary.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["step", "t", "max_displacement", "max_speed", "mean_omega"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        for cell in row.iter().skip(1) {
            cell.parse::<f64>().unwrap();
        }
    }
    let snap = dir.path().join("snapshot_000003.bin");
    assert!(snap.exists());
    assert!(dir.path().join("omega_000003.pgm").exists());

    let rendered = dir.path().join("rendered");
    let o = ibshell(&rendered, &["render", snap.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pgm = std::fs::read(rendered.join("snapshot_000003.pgm")).unwrap();
    assert!(pgm.starts_with(b"P"));
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = ibshell(dir.path(), &["render", dir.path().join("missing.bin").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n = 24\n").unwrap();
    let o = ibshell(dir.path(), &["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ibshell(dir.path(), &["--norm", "3", "study"]);
    assert!(!o.status.success());
}
