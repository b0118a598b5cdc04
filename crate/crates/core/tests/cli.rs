use std::path::Path;
use std::process::Command;

fn evenshape(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_evenshape")).args(args).output().expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().expect("exit code"), text)
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const TINY: &str = r#"
[physics]
grid = 32
beam_radius = 12.0

[physics.diffuser]
corr_len = 8.0

[optimizer]
generations = 4
superpixel = 4

[seeds]
runs = 2
"#;

#[test]
fn successful_run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.toml", &format!("{TINY}\n[custom]\nmodes = [\"sga\"]\n"));
    let out = dir.path().join("out");
    let (code, text) = evenshape(&["custom", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code, 0, "{text}");
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 3"), "{manifest}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "unknown.toml", "[physics]\ngrid_size = 32\n");
    assert_eq!(evenshape(&["fig3", "--config", &unknown]).0, 2);
    let other = write_config(dir.path(), "other.toml", "experiment = \"fig4\"\n");
    assert_eq!(evenshape(&["fig3", "--config", &other]).0, 2);
    assert_eq!(evenshape(&["fig3", "--runs", "0"]).0, 2);
}

#[test]
fn physics_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "full.toml",
        "[physics]\ngrid = 96\n\n[custom]\nrate_model = \"full\"\nmodes = [\"ga\"]\n",
    );
    let out = dir.path().join("out");
    let (code, text) = evenshape(&["custom", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{text}");
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let out = file.join("out");
    let (code, text) = evenshape(&["appendix-b", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4, "{text}");
}

#[test]
fn failed_checks_exit_5_only_with_assert() {
    let dir = tempfile::tempdir().unwrap();
    // Decreasing integration times cannot give an increasing trend.
    let cfg = write_config(dir.path(), "fig4.toml", &format!("{TINY}\n[fig4]\nt_ints = [1.0, 0.05]\n"));
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let (code, text) = evenshape(&["fig4", "--config", &cfg, "--out", out, "--quiet"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("FAIL"), "{text}");
    let (code, text) = evenshape(&["fig4", "--config", &cfg, "--out", out, "--assert"]);
    assert_eq!(code, 5, "{text}");
}
