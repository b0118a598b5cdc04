// Simulated photon-counting camera frames and the background-subtracted
// coincidence map, before and after correcting the even part of the
// diffuser on a 16-level SLM.
//
// ```text
// cargo run --release --example emccd_maps -- 100000
// ```

use evenshape::optim::quantize_screen;
use evenshape::physics::{contrast, emccd_capture, make_diffuser, DiffuserSpec, EmccdSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{expand_genome, parity_decompose, GridSpec, Result, SlmGenome, Stream};

pub fn run_example() -> Result<()> {
    capture(20_000)
}

fn capture(frames: usize) -> Result<()> {
    let spec = GridSpec::new(96, 1.0)?;
    let model = TwinPhotonModel::standard(spec, 40.0, DEFAULT_SIGMA_RATIO)?;
    let diffuser = make_diffuser(&model, &DiffuserSpec::new(7, 32.0, 2.5)?);
    let (even, _) = parity_decompose(&diffuser, model.beam_center())?;
    let slm = quantize_screen(&SlmGenome::for_grid(&spec, 8, 16)?, &even.scale(-1.0))?;
    let corrected = diffuser.add(&expand_genome(&slm, spec)?)?;

    let camera = EmccdSpec::for_model(&model, frames);
    for (name, phase) in [("uncorrected", &diffuser), ("corrected", &corrected)] {
        let map = emccd_capture(&model, phase, &camera, Stream::root(1).label(name))?;
        let r = map.radius() as isize;
        let row: Vec<String> = (-4..=4).map(|dx| format!("{:7.4}", map.at(dx, 0))).collect();
        println!("{name}: contrast {:.2}, peak at {:?}", contrast(&map, 1)?, map.argmax());
        println!("  row dy=0, dx=-4..4 of +-{r}: {}", row.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    match std::env::args().nth(1) {
        Some(a) => capture(a.parse().map_err(|_| evenshape::Error::Config(format!("bad argument {a}")))?),
        None => run_example(),
    }
}
