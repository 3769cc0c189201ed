use proptest::prelude::*;

use cdpr_core::allocation::{allocate, AllocationConfig};
use cdpr_core::attitude::{dcm_error, dcm_from_quat, dcm_from_rotvec, error_angle, quat_from_dcm, Quat};
use cdpr_core::control::ControllerKind;
use cdpr_core::dynamics::{wrench_matrix, CdprGeometry, PayloadParams, Pose};
use cdpr_core::harness::{rms_split, run_scenario, write_csv, CableMode, Scenario};
use cdpr_core::{Vec3, Vec6};

fn vec3(a: f64) -> impl Strategy<Value = Vec3> {
    (-a..a, -a..a, -a..a).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quaternion_round_trip_up_to_sign(phi in vec3(2.0)) {
        let c = dcm_from_rotvec(&phi);
        let q = quat_from_dcm(&c);
        prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        let back = dcm_from_quat(&q);
        prop_assert!((back.matrix() - c.matrix()).abs().max() < 1e-12);
        let neg = dcm_from_quat(&Quat::new(-q.eps, -q.eta));
        prop_assert!((neg.matrix() - c.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn error_angle_is_the_rotation_between(axis in vec3(1.0), angle in 0.0..3.1f64, base in vec3(2.0)) {
        prop_assume!(axis.norm() > 1e-3);
        let c_da = dcm_from_rotvec(&base);
        let c_pd = dcm_from_rotvec(&(axis.normalize() * angle));
        let c_pa = c_pd.compose(&c_da);
        let e = error_angle(&dcm_error(&c_pa, &c_da));
        prop_assert!((e - angle).abs() < 1e-9, "{e} vs {angle}");
        let rev = error_angle(&dcm_error(&c_da, &c_pa));
        prop_assert!((rev - e).abs() < 1e-9);
    }

    #[test]
    fn gentle_wrenches_are_reproduced_within_limits(
        r in vec3(0.08),
        att in vec3(0.2),
        force in vec3(15.0),
        torque in vec3(1.5),
    ) {
        let geom = CdprGeometry::reference();
        let pose = Pose::from_euler321(r + Vec3::new(0.0, 0.0, 0.465), att);
        let pi = wrench_matrix(&geom, &pose).unwrap();
        let g = PayloadParams::reference().gravity_wrench();
        let f = g + Vec6::new(force.x, force.y, force.z, torque.x, torque.y, torque.z);
        let cfg = AllocationConfig::default();
        let a = allocate(&pi, &f, &cfg, &geom.radii()).unwrap();
        prop_assert!((pi.transpose() * a.torques - f).norm() < 1e-9);
        for &t in a.tensions.iter() {
            prop_assert!(t >= cfg.limits[0] - 1e-9 && t <= cfg.limits[1] + 1e-9);
        }
    }

    #[test]
    fn rms_scales_with_the_signal(k in -5.0..5.0f64, n in 3usize..200, split in 0.0..2.0f64) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|x| (7.0 * x).sin() + 0.2).collect();
        let kv: Vec<f64> = v.iter().map(|x| k * x).collect();
        let (a, b) = rms_split(&t, &v, split);
        let (ka, kb) = rms_split(&t, &kv, split);
        for (x, y) in [(a, ka), (b, kb)] {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((y - k.abs() * x).abs() < 1e-12 * (1.0 + y)),
                (None, None) => {}
                _ => prop_assert!(false, "windows differ"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Short closed-loop runs: uniform grid, finite rows, bit-identical reruns.
    #[test]
    fn short_runs_are_clean_and_deterministic(k in 0usize..7, elastic in any::<bool>(), steps in 1usize..40) {
        let mut sc = Scenario::default_config();
        sc.controller = ControllerKind::ALL[k];
        sc.cables = if elastic { CableMode::Elastic } else { CableMode::Rigid };
        sc.duration = steps as f64 * sc.dt() * sc.log_interval() as f64;
        let a = run_scenario(&sc).unwrap();
        prop_assert!(a.completed());
        prop_assert_eq!(a.log.rows.len(), steps + 1);
        let spacing = sc.dt() * sc.log_interval() as f64;
        for (i, row) in a.log.rows.iter().enumerate() {
            prop_assert!((row.t - i as f64 * spacing).abs() < 1e-12);
            prop_assert!(row.is_finite());
        }
        let b = run_scenario(&sc).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_csv(&a.log, &mut ca).unwrap();
        write_csv(&b.log, &mut cb).unwrap();
        prop_assert_eq!(ca, cb);
    }
}
