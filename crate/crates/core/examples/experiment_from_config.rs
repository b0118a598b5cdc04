// Drive the experiment harness from a TOML document and list what it
// writes. The same files come out of the `evenshape` binary.
//
// ```text
// cargo run --release --example experiment_from_config -- out/example
// ```

use evenshape::harness::{execute, ExperimentConfig};
use evenshape::Result;

const CONFIG: &str = r#"
experiment = "fig4"

[physics]
grid = 48
beam_radius = 20.0

[physics.diffuser]
corr_len = 16.0

[optimizer]
generations = 20
superpixel = 4

[seeds]
master = 7
runs = 3

[fig4]
t_ints = [0.2, 1.0]
"#;

pub fn run_example() -> Result<()> {
    run_into(&std::env::temp_dir().join("evenshape-example"))
}

fn run_into(out: &std::path::Path) -> Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let report = execute(&cfg, out)?;
    println!("status {} (config {})", report.manifest.status, &report.manifest.config_digest[..12]);
    for f in &report.manifest.files {
        println!("  {:<20} {:>8} bytes", f.name, f.bytes);
    }
    for check in report.outcome?.checks() {
        println!("{} {}: {}", if check.passed { "pass" } else { "fail" }, check.name, check.detail);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run_into(std::path::Path::new(&dir)),
        None => run_example(),
    }
}
