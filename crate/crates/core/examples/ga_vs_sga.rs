// Optimize an SLM behind a diffuser twice: with the plain genetic
// algorithm, where every super-pixel is a gene, and with the symmetrized
// one, where a gene sets a super-pixel and its mirror image together.
//
// ```text
// cargo run --release --example ga_vs_sga -- 100
// ```

use evenshape::optim::{evolve, CoincidenceObjective, Feedback, GaConfig, Mode, RateModel};
use evenshape::physics::{make_diffuser, DetectionModel, DiffuserSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{GridSpec, Result, Stream};

pub fn run_example() -> Result<()> {
    compare(30)
}

fn compare(generations: usize) -> Result<()> {
    let spec = GridSpec::new(96, 1.0)?;
    let model = TwinPhotonModel::standard(spec, 40.0, DEFAULT_SIGMA_RATIO)?;
    let diffuser = make_diffuser(&model, &DiffuserSpec::new(7, 32.0, 2.5)?);
    let det = DetectionModel::on_axis(200.0, 1.0, 50.0)?;
    let center = model.beam_center();
    let objective = CoincidenceObjective::new(model, diffuser, det, RateModel::Delta, Feedback::Poisson)?;
    let cfg = GaConfig {
        generations,
        runs: 3,
        ..GaConfig::default()
    };

    for mode in [Mode::Ga, Mode::Sga(center)] {
        let mut finals = Vec::new();
        for run in 0..cfg.runs {
            let out = evolve(&cfg, mode, &objective, Stream::root(2024).label(mode.name()).index(run as u64))?;
            let curve = &out.trace.records;
            println!(
                "{:>3} run {run}: gen 1 {:5.2}  gen {} {:5.2}  final {:5.2}",
                mode.name(),
                curve[0].best_enhancement,
                curve.len(),
                curve[curve.len() - 1].best_enhancement,
                out.trace.final_enhancement
            );
            finals.push(out.trace.final_enhancement);
        }
        println!("{:>3} mean final enhancement {:.2}", mode.name(), finals.iter().sum::<f64>() / finals.len() as f64);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    match std::env::args().nth(1) {
        Some(a) => compare(a.parse().map_err(|_| evenshape::Error::Config(format!("bad argument {a}")))?),
        None => run_example(),
    }
}
