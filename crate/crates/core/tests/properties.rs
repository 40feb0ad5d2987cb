use proptest::prelude::*;

use exo_design::gait::{load_gait_csv, DEFAULT_SAMPLES, phase_bounds, synth_gait_with_samples, uniform_grid, write_gait_csv, GaitPhase};
use exo_design::kinematics::{torque_map, velocity_map};
use exo_design::overlay::{browning_mass_delta, maf, regen_adjust_values, InertiaSpec, OverlayParams};
use exo_design::pareto::non_dominated;
use exo_design::stats::median_iqr;
use exo_design::{Condition, JointVec};

fn brute_force(objs: &[(f64, f64)]) -> Vec<usize> {
    (0..objs.len())
        .filter(|&i| {
            let (ri, pi) = objs[i];
            !objs.iter().any(|&(rj, pj)| rj >= ri && pj <= pi && (rj > ri || pj < pi))
        })
        .collect()
}

/// Objectives on a coarse lattice so ties and duplicates are common.
fn objectives() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0..12i32, 0..12i32), 1..60).prop_map(|v| v.into_iter().map(|(r, p)| (r as f64, p as f64 * 0.5)).collect())
}

fn spec() -> impl Strategy<Value = InertiaSpec> {
    (0.0..10.0f64, 0.0..5.0f64, 0.0..5.0f64, 0.0..2.0f64, 0.0..0.5f64, 0.0..0.5f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(
        |(waist_mass, thigh_mass, shank_mass, foot_mass, thigh_com, shank_com, thigh_inertia, shank_inertia)| InertiaSpec {
            waist_mass,
            thigh_mass,
            shank_mass,
            foot_mass,
            thigh_com,
            shank_com,
            thigh_inertia,
            shank_inertia,
        },
    )
}

proptest! {
    #[test]
    fn phases_partition_the_cycle(toe_off in 50.5..74.5f64, n in 11usize..400) {
        let table = phase_bounds(toe_off).unwrap();
        let grid = uniform_grid(n);
        let mut seen = vec![0usize; n];
        for phase in GaitPhase::ALL {
            for i in table.sample_indices(&grid, phase) {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert!(table.bounds.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(table.bounds[4], toe_off);
    }

    #[test]
    fn joint_maps_conserve_power(t in prop::array::uniform2(-500.0..500.0f64), w in prop::array::uniform2(-10.0..10.0f64)) {
        let tau = JointVec::new(t[0], t[1]);
        let omega = JointVec::new(w[0], w[1]);
        let p_mono = tau.dot(velocity_map(omega));
        let p_bi = torque_map(tau).dot(omega);
        prop_assert!((p_mono - p_bi).abs() <= 1e-12 * (1.0 + p_mono.abs()));
    }

    #[test]
    fn filter_matches_brute_force(objs in objectives()) {
        prop_assert_eq!(non_dominated(&objs).unwrap(), brute_force(&objs));
    }

    #[test]
    fn filter_is_idempotent(objs in objectives()) {
        let front = non_dominated(&objs).unwrap();
        let kept: Vec<_> = front.iter().map(|&i| objs[i]).collect();
        prop_assert_eq!(non_dominated(&kept).unwrap(), (0..kept.len()).collect::<Vec<_>>());
    }

    #[test]
    fn filter_is_permutation_invariant(objs in objectives(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..objs.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<_> = order.iter().map(|&i| objs[i]).collect();
        let mut a: Vec<usize> = non_dominated(&shuffled).unwrap().into_iter().map(|i| order[i]).collect();
        a.sort_unstable();
        prop_assert_eq!(a, non_dominated(&objs).unwrap());
    }

    #[test]
    fn regen_is_affine_and_non_increasing(neg in 0.0..5.0f64, pos in 0.0..5.0f64, e1 in 0.0..=0.65f64, e2 in 0.0..=0.65f64) {
        let abs = pos + neg;
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = regen_adjust_values(abs, neg, lo).unwrap();
        let b = regen_adjust_values(abs, neg, hi).unwrap();
        prop_assert!(b <= a);
        prop_assert_eq!(regen_adjust_values(abs, neg, 0.0).unwrap(), abs);
        let mid = regen_adjust_values(abs, neg, 0.5 * (lo + hi)).unwrap();
        prop_assert!((mid - 0.5 * (a + b)).abs() < 1e-12);
    }

    #[test]
    fn mass_delta_is_additive(a in spec(), b in spec()) {
        let sum = browning_mass_delta(&(a + b)).total;
        let parts = browning_mass_delta(&a).total + browning_mass_delta(&b).total;
        prop_assert!((sum - parts).abs() < 1e-12);
    }

    #[test]
    fn median_iqr_ignores_order(mut v in prop::collection::vec(-1e3..1e3f64, 1..50)) {
        let (m, iqr) = median_iqr(&v).unwrap();
        v.reverse();
        let k = v.len() / 3;
        v.rotate_left(k);
        prop_assert_eq!(median_iqr(&v).unwrap(), (m, iqr));
        prop_assert!(iqr >= 0.0);
    }

    #[test]
    fn maf_is_continuous_across_the_gate(p in 0.0..5.0f64, masses in prop::array::uniform4(0.0..3.0f64), inertias in prop::array::uniform3(0.0..0.5f64)) {
        let params = OverlayParams::default();
        let at = maf(p, p, masses, inertias, 75.0, &params);
        for eps in [1e-9, -1e-9] {
            let near = maf(p, p + eps, masses, inertias, 75.0, &params);
            prop_assert!((near - at).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gait_csv_round_trip(seed in 0u64..1000, loaded in any::<bool>(), n in 21usize..202) {
        let condition = if loaded { Condition::Loaded } else { Condition::NoLoad };
        let gait = synth_gait_with_samples(seed, condition, n);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gait.csv");
        write_gait_csv(&gait, &path).unwrap();
        // The loader always returns the standard grid.
        let back = load_gait_csv(&path).unwrap();
        let gait = gait.resample(DEFAULT_SAMPLES);
        prop_assert_eq!(back.len(), gait.len());
        // Nine significant digits on a non-decimal grid shift the
        // interpolation nodes slightly before resampling.
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-6 * (1.0 + x.abs()));
        prop_assert!(close(&back.pct, &gait.pct));
        for j in 0..3 {
            prop_assert!(close(&back.angles[j], &gait.angles[j]));
            prop_assert!(close(&back.velocities[j], &gait.velocities[j]));
            prop_assert!(close(&back.moments[j], &gait.moments[j]));
        }
        prop_assert!(close(&back.grf_x, &gait.grf_x));
        prop_assert!(close(&back.grf_y, &gait.grf_y));
        prop_assert!((back.toe_off - gait.toe_off).abs() < 1e-8);
    }
}
