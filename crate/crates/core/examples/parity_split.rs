// Split a diffuser into even and odd parts about the beam center and show
// that only the even part changes the coincidence rate.
//
// ```text
// cargo run --release --example parity_split
// ```

use evenshape::physics::{make_diffuser, rate_delta, DiffuserSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{parity_decompose, GridSpec, Result};

pub fn run_example() -> Result<()> {
    let spec = GridSpec::new(96, 1.0)?;
    let model = TwinPhotonModel::standard(spec, 40.0, DEFAULT_SIGMA_RATIO)?;
    let diffuser = make_diffuser(&model, &DiffuserSpec::new(7, 32.0, 2.5)?);
    let (even, odd) = parity_decompose(&diffuser, model.beam_center())?;

    let on_axis = (0.0, 0.0);
    let full = rate_delta(&model, &diffuser, on_axis);
    let even_only = rate_delta(&model, &even, on_axis);
    let odd_only = rate_delta(&model, &odd, on_axis);
    println!("energy: even {:.1}  odd {:.1} rad^2", even.energy(), odd.energy());
    println!("rate with full diffuser  {full:.6}");
    println!("rate with even part only {even_only:.6}");
    println!("rate with odd part only  {odd_only:.6}  (no diffuser: 1)");

    // Cancelling the even part is enough to restore the correlation.
    let corrected = rate_delta(&model, &diffuser.add(&even.scale(-1.0))?, on_axis);
    println!("rate after adding -even  {corrected:.6}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
