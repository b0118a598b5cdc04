// The two-photon speckle behind a diffuser: the coincidence rate as a
// function of detector separation, computed two ways.
//
// The direct sum over the pair state and the advanced-wave picture, where
// one detector is replaced by a source and the light passes the phase
// plate twice, give the same numbers.
//
// ```text
// cargo run --release --example two_photon_speckle
// ```

use evenshape::physics::{make_diffuser, rate_delta, rate_klyshko, DiffuserSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{GridSpec, Result};

pub fn run_example() -> Result<()> {
    let spec = GridSpec::new(64, 1.0)?;
    let model = TwinPhotonModel::standard(spec, 26.0, DEFAULT_SIGMA_RATIO)?;
    let flat = evenshape::make_screen(spec, 0.0)?;
    let diffuser = make_diffuser(&model, &DiffuserSpec::new(3, 20.0, 2.5)?);
    let step = 2.0 * model.sigma_minus();

    println!("{:>6} {:>10} {:>10} {:>10}", "dx", "flat", "diffuser", "klyshko");
    for i in -6i32..=6 {
        let dx = (f64::from(i) * step, 0.0);
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>10.5}",
            i,
            rate_delta(&model, &flat, dx),
            rate_delta(&model, &diffuser, dx),
            rate_klyshko(&model, &diffuser, dx)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
