// Find the beam center on the SLM by scanning odd coma patterns. The
// pattern leaves the coincidence rate untouched only when it is odd about
// the true center, so the rate peaks there.
//
// ```text
// cargo run --release --example center_scan
// ```

use evenshape::center::{default_schedule, locate_center, Scene};
use evenshape::optim::Feedback;
use evenshape::physics::{DetectionModel, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{Center, GridSpec, Result, Stream};

pub fn run_example() -> Result<()> {
    let spec = GridSpec::new(1024, 1.0)?;
    let truth = Center::new(468.0, 493.0);
    let model = TwinPhotonModel::standard(spec, 40.0, DEFAULT_SIGMA_RATIO)?.with_beam_center(truth)?;
    let det = DetectionModel::on_axis(200.0, 1.0, 50.0)?;
    let schedule = default_schedule();

    for feedback in [Feedback::Exact, Feedback::Poisson] {
        let scene = Scene::new(model.clone(), det, 6.0, feedback)?;
        let est = locate_center(&schedule, &scene, Stream::root(5))?;
        println!("{feedback:?}: center ({}, {}), true ({}, {})", est.center.cx, est.center.cy, truth.cx, truth.cy);
        for (stage, maps) in est.maps.chunks(2).enumerate() {
            let (x, y) = (maps[0].axis_argmax().0, maps[1].axis_argmax().0);
            println!("  stage {} (r = {}): {} + {} points, estimate ({x}, {y})", stage + 1, maps[0].r, maps[0].values.len(), maps[1].values.len());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
