use evenshape::center::{default_schedule, ScanRegion, ScanStage};
use evenshape::physics::{rate_delta, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
use evenshape::{expand_genome, parity_decompose, zernike_screen, GridSpec, PhaseScreen, SlmGenome, Stream, ZernikeKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn screen(spec: GridSpec, seed: u64, scale: f64) -> PhaseScreen {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.len()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    PhaseScreen::from_values(spec, values).unwrap()
}

fn model(n: usize, radius: f64, shift: (f64, f64)) -> TwinPhotonModel {
    let spec = GridSpec::new(n, 1.0).unwrap();
    let m = TwinPhotonModel::standard(spec, radius, DEFAULT_SIGMA_RATIO).unwrap();
    let c = m.beam_center().offset(shift.0, shift.1);
    m.with_beam_center(c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parity_parts_have_their_symmetry(seed in any::<u64>(), half in 4usize..20, sx in -3i32..4, sy in -3i32..4) {
        let n = 2 * half;
        let spec = GridSpec::new(n, 1.0).unwrap();
        let c = spec.midpoint().offset(sx as f64 * 0.5, sy as f64 * 0.5);
        let s = screen(spec, seed, 3.0);
        let (even, odd) = parity_decompose(&s, c).unwrap();
        for row in 0..n {
            for col in 0..n {
                let i = spec.index(row, col);
                if let Some(m) = spec.mirror(row, col, c) {
                    prop_assert_eq!(even.values()[i], even.values()[m]);
                    prop_assert_eq!(odd.values()[i], -odd.values()[m]);
                }
                let back = even.values()[i] + odd.values()[i];
                prop_assert!((back - s.values()[i]).abs() <= 4.0 * f64::EPSILON * s.values()[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn odd_phase_leaves_the_rate_unchanged(seed in any::<u64>(), sx in -4i32..5, sy in -4i32..5, scale in 0.0f64..6.0) {
        let m = model(40, 12.0, (sx as f64, sy as f64 * 0.5));
        let base = screen(*m.spec(), seed, 3.0);
        let (_, odd) = parity_decompose(&screen(*m.spec(), seed ^ 0x9e37, scale), m.beam_center()).unwrap();
        let a = rate_delta(&m, &base, (0.0, 0.0));
        let b = rate_delta(&m, &base.add(&odd).unwrap(), (0.0, 0.0));
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
    }

    #[test]
    fn rate_is_bounded_by_the_flat_value(seed in any::<u64>(), dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let m = model(32, 10.0, (0.0, 0.0));
        let r = rate_delta(&m, &screen(*m.spec(), seed, 4.0), (dx, dy));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn coma_about_the_beam_center_is_odd(r in 4.0f64..60.0, amp in -8.0f64..8.0, sx in -4i32..5) {
        let m = model(48, 16.0, (sx as f64 * 0.5, 0.0));
        for kind in [ZernikeKind::ComaX, ZernikeKind::ComaY] {
            let z = zernike_screen(*m.spec(), kind, r, m.beam_center(), amp).unwrap();
            let (even, _) = parity_decompose(&z, m.beam_center()).unwrap();
            for row in 0..48 {
                for col in 0..48 {
                    if m.spec().mirror(row, col, m.beam_center()).is_some() {
                        prop_assert!(even.get(row, col).abs() <= 1e-12 * amp.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetrized_genomes_expand_to_even_screens(seed in any::<u64>(), blocks in 2usize..9) {
        let spec = GridSpec::new(blocks * 4, 1.0).unwrap();
        let mut g = SlmGenome::for_grid(&spec, 4, 16).unwrap();
        g.randomize(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let c = spec.midpoint();
        let s = expand_genome(&g.symmetrize(c), spec).unwrap();
        let (_, odd) = parity_decompose(&s, c).unwrap();
        prop_assert_eq!(odd.max_abs(), 0.0);
    }

    #[test]
    fn streams_are_pure_functions_of_their_path(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let s = Stream::root(seed).label("x").index(a);
        prop_assert_eq!(s.index(b).key(), Stream::root(seed).label("x").index(a).index(b).key());
        let mut r1 = s.rng();
        let mut r2 = s.rng();
        prop_assert_eq!(r1.random::<u64>(), r2.random::<u64>());
        if a != b {
            prop_assert_ne!(Stream::root(seed).index(a).key(), Stream::root(seed).index(b).key());
        }
    }

    #[test]
    fn disk_regions_are_point_symmetric(radius in 0i64..40, step in 1i64..9, cx in -50i64..50, cy in -50i64..50) {
        let stage = ScanStage { region: ScanRegion::Disk { radius }, step, ..default_schedule()[0] };
        let pts = stage.points((cx, cy));
        prop_assert!(pts.contains(&(cx, cy)));
        for &(x, y) in &pts {
            prop_assert!((x - cx).pow(2) + (y - cy).pow(2) <= radius * radius);
            prop_assert!(pts.contains(&(2 * cx - x, 2 * cy - y)));
        }
    }
}
