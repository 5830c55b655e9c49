use std::process::Command;

fn qglow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qglow"))
}

#[test]
fn list_presets_names_every_figure() {
    let out = qglow().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig5a", "fig8", "fig10", "fig11f", "fig12"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = qglow()
        .args(["run", "--preset", "fig5c", "--agents", "2", "--budget", "200", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let exp = dir.path().join("fig5c");
    let csv = std::fs::read_to_string(exp.join("fig5c.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("cycle,reward_mean,reward_sem"));
    assert_eq!(csv.lines().count(), 3);
    assert!(exp.join("fig5c.manifest.json").exists());
    assert!(exp.join("summary.csv").exists());
}

#[test]
fn unknown_preset_is_a_config_error() {
    let out = qglow().args(["run", "--preset", "fig99"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_arguments_are_config_errors() {
    let out = qglow().args(["run", "--preset", "fig5a", "--agents", "many"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = qglow().args(["run", "--preset", "fig5a", "--agents", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = qglow()
        .args(["run", "--preset", "fig5a", "--agents", "1", "--budget", "100", "--out"])
        .arg(&blocker)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn policy_dump_rejects_invasion_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = qglow()
        .args(["policy-dump", "--preset", "fig5a", "--out"])
        .arg(dir.path().join("p.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn policy_dump_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.csv");
    let out = qglow()
        .args(["policy-dump", "--preset", "fig10", "--budget", "20", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cell,right,down,left,up"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let fields: Vec<&str> = row.rsplitn(5, ',').collect();
        let total: f64 = fields[..4].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
