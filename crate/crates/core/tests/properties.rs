//! Structural invariants over randomly drawn grasps, inertias and states.

use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rigidmanip::control::{control_law, desired_trajectory, Gains, TrajectorySpec};
use rigidmanip::forces::{internal_from_interaction, internal_projector, snapshot_interaction_closed};
use rigidmanip::grasp::{agent_velocities, right_inverse, RightInverseKind};
use rigidmanip::linalg::{column_space_basis, numerical_rank, DEFAULT_PINV_TOL};
use rigidmanip::rigidity::{rigidity_jacobian, trivial_motion_basis};
use rigidmanip::verify::{random_trial, Trial};

fn trial(n: usize, seed: u64) -> Trial {
    random_trial(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn trajectory(base: Vector3<f64>) -> TrajectorySpec {
    TrajectorySpec {
        base_position: base,
        base_euler: Vector3::zeros(),
        position_amplitude: Vector3::new(0.2, 0.2, 0.1),
        position_offset: Vector3::new(0.0, 0.0, 0.09),
        orientation_amplitude: Vector3::repeat(0.15),
        w_p: 1.0,
        w_eta: Vector3::new(1.0, 0.5, 1.0),
        phase: std::f64::consts::FRAC_PI_6,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rigidity_matrix_shape_and_trivial_motions(n in 3usize..7, seed in any::<u64>()) {
        let t = trial(n, seed);
        let snap = t.system.snapshot(&t.pose, &t.twist).unwrap();
        let fw = snap.framework().unwrap();
        let r = rigidity_jacobian(&fw).unwrap();
        prop_assert_eq!(r.shape(), (n * (n - 1) / 2 + 3 * n * (n - 1), 6 * n));
        let annihilated = (&r * trivial_motion_basis(&fw).basis).norm();
        prop_assert!(annihilated <= 1e-8 * r.norm(), "{annihilated:e}");
        prop_assert_eq!(numerical_rank(&r, DEFAULT_PINV_TOL), 6 * n - 6);
    }

    #[test]
    fn grasp_velocities_are_rigid(n in 3usize..7, seed in any::<u64>()) {
        let t = trial(n, seed);
        let snap = t.system.snapshot(&t.pose, &t.twist).unwrap();
        let r = rigidity_jacobian(&snap.framework().unwrap()).unwrap();
        let v = agent_velocities(&snap.g, &t.twist);
        prop_assert!((&r * v).norm() < 1e-8);
    }

    #[test]
    fn right_inverses(n in 3usize..7, seed in any::<u64>()) {
        let t = trial(n, seed);
        let snap = t.system.snapshot(&t.pose, &t.twist).unwrap();
        prop_assert_eq!(numerical_rank(&snap.g, DEFAULT_PINV_TOL), 6);
        for kind in [RightInverseKind::InertiaWeighted, RightInverseKind::MoorePenrose] {
            let g_star = right_inverse(&snap.g, &snap.agents.m, kind).unwrap();
            prop_assert!((&snap.g * g_star - DMatrix::identity(6, 6)).norm() < 1e-9);
        }
    }

    #[test]
    fn internal_projector_is_a_projector(n in 3usize..7, seed in any::<u64>()) {
        let t = trial(n, seed);
        let snap = t.system.snapshot(&t.pose, &t.twist).unwrap();
        let m = &snap.agents.m;
        let q = internal_projector(m, &snap.g).unwrap();
        prop_assert!((&q * &q - &q).norm() < 1e-9 * q.norm());
        let g1 = right_inverse(&snap.g, m, RightInverseKind::InertiaWeighted).unwrap();
        let range = column_space_basis(&g1, DEFAULT_PINV_TOL);
        prop_assert!((&q * range.matrix()).norm() < 1e-9);
        prop_assert!((&snap.g * &q).norm() < 1e-9 * snap.g.norm());
    }

    #[test]
    fn tracking_law_commands_the_object_acceleration(n in 3usize..6, seed in any::<u64>(), time in 0.0f64..15.0) {
        let t = trial(n, seed);
        let snap = t.system.snapshot(&t.pose, &t.twist).unwrap();
        let desired = desired_trajectory(time, &trajectory(t.pose.position)).unwrap();
        let gains = Gains::diagonal([15.0; 3], 75.0, [40.0; 6]).unwrap();
        let g1 = right_inverse(&snap.g, &snap.agents.m, RightInverseKind::InertiaWeighted).unwrap();
        let Ok(out) = control_law(&snap, &desired, &gains, &g1, None) else {
            // antipodal orientations are refused
            return Ok(());
        };
        let achieved = snap.object_acceleration(&out.u).unwrap();
        prop_assert!((achieved - out.commanded).norm() < 1e-8 * (1.0 + out.commanded.norm()));

        let h = snapshot_interaction_closed(&snap, &out.u).unwrap();
        let h_int = internal_from_interaction(&snap.agents.m, &snap.g, &h).unwrap();
        prop_assert!(h_int.norm() < 1e-6 * (1.0 + out.u.norm()));

        let z = DVector::from_fn(6 * n, |i, _| ((i * 7919 + seed as usize) % 13) as f64 - 6.0);
        let squeeze = internal_projector(&snap.agents.m, &snap.g).unwrap() * z;
        let with = control_law(&snap, &desired, &gains, &g1, Some(&squeeze)).unwrap();
        let h = snapshot_interaction_closed(&snap, &with.u).unwrap();
        let h_int = internal_from_interaction(&snap.agents.m, &snap.g, &h).unwrap();
        prop_assert!((h_int - &squeeze).norm() < 1e-8 * (1.0 + with.u.norm()));
        prop_assert!((snap.object_acceleration(&with.u).unwrap() - with.commanded).norm() < 1e-8 * (1.0 + with.commanded.norm()));
    }
}
