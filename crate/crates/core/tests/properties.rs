use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use selforg::dynamics::{drift, noise_covariance, NoiseMode, SystemState};
use selforg::harness::Config;
use selforg::meanfield::{canonical_update, DensityProfile};
use selforg::model::{derive_params, PhysicalParams};
use selforg::observables::{localization, sample, Axis};

fn positions(n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(
        (-20.0..20.0f64, -20.0..20.0f64).prop_map(|(x, z)| [x, z]),
        n,
    )
}

fn state(max_atoms: usize) -> impl Strategy<Value = SystemState> {
    (1..=max_atoms).prop_flat_map(|n| {
        (
            -30.0..30.0f64,
            -30.0..30.0f64,
            positions(n),
            prop::collection::vec(
                (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| [a, b]),
                n,
            ),
        )
            .prop_map(|(re, im, pos, mom)| SystemState::new(Complex64::new(re, im), pos, mom))
    })
}

fn params(n: usize, eta: f64) -> PhysicalParams {
    PhysicalParams {
        n_atoms: n,
        eta,
        ..PhysicalParams::default()
    }
}

proptest! {
    #[test]
    fn order_parameter_bounded_by_bunching(s in state(30)) {
        let o = sample(&s, &params(s.n_atoms(), 50.0));
        prop_assert!(o.theta * o.theta <= o.bunching + 1e-12);
        prop_assert!((0.0..=1.0).contains(&o.bunching));
        prop_assert!((0.0..=0.5).contains(&o.defect_ratio_2d));
    }

    #[test]
    fn observables_are_lattice_periodic(s in state(20), kx in -3i32..3, kz in -3i32..3) {
        let p = params(s.n_atoms(), 50.0);
        let mut shifted = s.clone();
        for q in &mut shifted.pos {
            q[0] += 2.0 * PI * kx as f64;
            q[1] += 2.0 * PI * kz as f64;
        }
        let a = sample(&s, &p).values();
        let b = sample(&shifted, &p).values();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        prop_assert!((localization(&s, Axis::X) - localization(&shifted, Axis::X)).abs() < 1e-9);
    }

    #[test]
    fn covariance_is_psd(s in state(10), eta in 0.0..200.0f64) {
        let p = params(s.n_atoms(), eta);
        let d = derive_params(&p).unwrap();
        prop_assert!(noise_covariance(&s, &p, &d, NoiseMode::Full).is_ok());
        prop_assert!(noise_covariance(&s, &p, &d, NoiseMode::NoCross).is_ok());
    }

    #[test]
    fn drift_is_odd_under_half_period_shift_in_z(s in state(15)) {
        let p = params(s.n_atoms(), 50.0);
        let d = derive_params(&p).unwrap();
        let mut mirrored = s.clone();
        mirrored.alpha = -s.alpha;
        for q in &mut mirrored.pos {
            q[1] += PI;
        }
        let a = drift(&s, &p, &d).unwrap();
        let b = drift(&mirrored, &p, &d).unwrap();
        prop_assert!((a.d_alpha + b.d_alpha).norm() <= 1e-9 * a.d_alpha.norm().max(1.0));
        for (f, g) in a.d_mom.iter().zip(&b.d_mom) {
            prop_assert!((f[0] - g[0]).abs() <= 1e-9 * f[0].abs().max(1.0));
            prop_assert!((f[1] - g[1]).abs() <= 1e-9 * f[1].abs().max(1.0));
        }
    }

    #[test]
    fn canonical_update_is_normalized_and_positive(
        eps in -0.5..0.5f64,
        eta in 0.0..200.0f64,
        kt in 0.05..5.0f64,
    ) {
        let p = PhysicalParams::mean_field_example(40, eta);
        let d = derive_params(&p).unwrap();
        let next = canonical_update(&DensityProfile::cosine(256, eps, 0.0), &p, &d, kt);
        prop_assert!((next.total() - 1.0).abs() < 1e-12);
        prop_assert!(next.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn config_overrides_round_trip(eta in 0.0..500.0f64, n in 1usize..1000, seed in any::<u64>()) {
        let c = Config::load(None, &[format!("eta={eta:?}"), format!("n_atoms={n}"), format!("seed={seed}")]).unwrap();
        prop_assert_eq!(c.physical().eta, eta);
        prop_assert_eq!(c.physical().n_atoms, n);
        let text = toml::to_string(&c).unwrap();
        prop_assert_eq!(Config::parse(&text).unwrap(), c);
    }

    #[test]
    fn holding_keeps_the_invariant(n in 1usize..5000, power in 1i32..5) {
        let p = PhysicalParams::default();
        let q = p.with_atoms_holding(n, power);
        let before = p.n_atoms as f64 * p.g.powi(power);
        let after = q.n_atoms as f64 * q.g.powi(power);
        prop_assert!((before / after - 1.0).abs() < 1e-12);
    }
}
