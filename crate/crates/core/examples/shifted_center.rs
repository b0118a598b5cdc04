// Run the symmetrized GA about a center displaced from the beam center.
// The constraint then pairs super-pixels whose phases the two photons do
// not share.
//
// ```text
// cargo run --release --example shifted_center
// ```

use evenshape::optim::{evolve, CoincidenceObjective, Feedback, GaConfig, Mode, RateModel};
use evenshape::physics::{make_diffuser, DetectionModel, DiffuserSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{free_parameter_count, GridSpec, Result, SlmGenome, Stream};

pub fn run_example() -> Result<()> {
    let spec = GridSpec::new(96, 1.0)?;
    let model = TwinPhotonModel::standard(spec, 40.0, DEFAULT_SIGMA_RATIO)?;
    let diffuser = make_diffuser(&model, &DiffuserSpec::new(7, 32.0, 2.5)?);
    let det = DetectionModel::on_axis(200.0, 1.0, 50.0)?;
    let beam = model.beam_center();
    let objective = CoincidenceObjective::new(model, diffuser, det, RateModel::Delta, Feedback::Exact)?;
    let cfg = GaConfig {
        generations: 40,
        runs: 1,
        ..GaConfig::default()
    };
    let template = SlmGenome::for_grid(&spec, cfg.superpixel, cfg.levels)?;

    for shift in [0.0, 5.0, 10.0, 20.0] {
        let c = beam.offset(shift, 0.0);
        let genes = free_parameter_count(&template.symmetrize(c));
        let out = evolve(&cfg, Mode::Sga(c), &objective, Stream::root(11))?;
        println!("shift {shift:>4} px: {genes:>3} genes, final enhancement {:.2}", out.trace.final_enhancement);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
