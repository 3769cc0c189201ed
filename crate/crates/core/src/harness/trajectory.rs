use serde::{Deserialize, Serialize};

use crate::control::DesiredPose;
use crate::Vec3;

/// Circular position reference and phase-shifted sinusoidal Euler angles:
///
/// `r_d = A [cos Ωt, sin Ωt, cos Ωt] + r₀`,
/// `q_d,i = a cos(ω t + φ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// m
    pub position_amplitude: f64,
    /// m
    pub position_offset: [f64; 3],
    /// rad/s
    pub position_rate: f64,
    pub attitude_amplitude_deg: f64,
    /// rad/s
    pub attitude_rate: f64,
    pub attitude_phase_deg: [f64; 3],
}

impl TrajectoryConfig {
    pub fn reference() -> Self {
        use std::f64::consts::PI;
        TrajectoryConfig {
            position_amplitude: 0.1,
            position_offset: [0.0, 0.0, 0.465],
            position_rate: 0.6 * PI,
            attitude_amplitude_deg: 20.0,
            attitude_rate: 0.4 * PI,
            attitude_phase_deg: [-90.0, -45.0, 0.0],
        }
    }
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self::reference()
    }
}

/// Desired pose with analytic first and second derivatives at time `t`.
pub fn desired_trajectory(cfg: &TrajectoryConfig, t: f64) -> DesiredPose {
    let (a, w) = (cfg.position_amplitude, cfg.position_rate);
    let (s, c) = (w * t).sin_cos();
    let offset = Vec3::from_column_slice(&cfg.position_offset);

    let amp = cfg.attitude_amplitude_deg.to_radians();
    let om = cfg.attitude_rate;
    let phase = |i: usize| om * t + cfg.attitude_phase_deg[i].to_radians();
    let cosv = Vec3::from_fn(|i, _| phase(i).cos());
    let sinv = Vec3::from_fn(|i, _| phase(i).sin());

    DesiredPose {
        r: Vec3::new(c, s, c) * a + offset,
        r_dot: Vec3::new(-s, c, -s) * (a * w),
        r_ddot: Vec3::new(c, s, c) * (-a * w * w),
        euler: cosv * amp,
        euler_dot: sinv * (-amp * om),
        euler_ddot: cosv * (-amp * om * om),
    }
}
