//! Every example in `examples/` runs to completion.

mod parity_split {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/parity_split.rs"));
}

#[test]
fn parity_split_runs() {
    parity_split::run_example().expect("parity_split example should run");
}

mod two_photon_speckle {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/two_photon_speckle.rs"));
}

#[test]
fn two_photon_speckle_runs() {
    two_photon_speckle::run_example().expect("two_photon_speckle example should run");
}

mod emccd_maps {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/emccd_maps.rs"));
}

#[test]
fn emccd_maps_runs() {
    emccd_maps::run_example().expect("emccd_maps example should run");
}

mod ga_vs_sga {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ga_vs_sga.rs"));
}

#[test]
fn ga_vs_sga_runs() {
    ga_vs_sga::run_example().expect("ga_vs_sga example should run");
}

mod center_scan {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/center_scan.rs"));
}

#[test]
fn center_scan_runs() {
    center_scan::run_example().expect("center_scan example should run");
}

mod shifted_center {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/shifted_center.rs"));
}

#[test]
fn shifted_center_runs() {
    shifted_center::run_example().expect("shifted_center example should run");
}

mod off_center_detectors {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/off_center_detectors.rs"));
}

#[test]
fn off_center_detectors_runs() {
    off_center_detectors::run_example().expect("off_center_detectors example should run");
}

mod experiment_from_config {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/experiment_from_config.rs"));
}

#[test]
fn experiment_from_config_runs() {
    experiment_from_config::run_example().expect("experiment_from_config example should run");
}
