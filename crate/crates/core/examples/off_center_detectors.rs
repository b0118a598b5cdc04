// Move both detectors off the beam axis and evaluate the finite pump
// width model on a line of SLM pixels. A linear phase can steer the pairs
// back, and that tilt is odd, so only the unconstrained GA can use it.
//
// ```text
// cargo run --release --example off_center_detectors
// ```

use evenshape::optim::{evolve, CoincidenceObjective, Feedback, GaConfig, Mode, RateModel};
use evenshape::physics::{make_diffuser, rate_full, single_rate, DetectionModel, DiffuserSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{expand_genome, parity_decompose, Center, GridSpec, Result, Stream};

pub fn run_example() -> Result<()> {
    let spec = GridSpec::line(256, 1.0)?;
    let model = TwinPhotonModel::standard(spec, 80.0, DEFAULT_SIGMA_RATIO)?;
    let diffuser = make_diffuser(&model, &DiffuserSpec::new(7, 32.0, 2.5)?);
    let axis = Center::new(0.0, 0.0);
    let x = Center::new(model.detector_beam_radius() / 2.0, 0.0);

    println!("singles       on axis {:.4}  displaced {:.4}", single_rate(&model, &diffuser, axis)?, single_rate(&model, &diffuser, x)?);
    println!("coincidences  on axis {:.4}  displaced {:.4}", rate_full(&model, &diffuser, axis, axis)?, rate_full(&model, &diffuser, x, x)?);

    let det = DetectionModel::new(x, x, 200.0, 1.0, 50.0)?;
    let objective = CoincidenceObjective::new(model.clone(), diffuser, det, RateModel::Full, Feedback::Poisson)?;
    let cfg = GaConfig {
        generations: 60,
        runs: 1,
        ..GaConfig::default()
    };
    for mode in [Mode::Ga, Mode::Sga(model.beam_center())] {
        let out = evolve(&cfg, mode, &objective, Stream::root(8).label(mode.name()))?;
        let (_, odd) = parity_decompose(&expand_genome(&out.best, spec)?, model.beam_center())?;
        println!(
            "{:>3}: final enhancement {:.2}, odd-part energy {:.1}",
            mode.name(),
            out.trace.final_enhancement,
            odd.energy()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
