//! Adaptive passivity-based pose tracking for over-constrained cable-driven
//! parallel robots (CDPRs).
//!
//! The crate is organized bottom-up:
//!
//! - [`attitude`]: cross/uncross operators, DCM and quaternion types, the
//!   three-parameter attitude sets and their kinematic mapping matrices.
//! - [`dynamics`]: CDPR geometry, wrench matrix, rigid-body payload
//!   equations of motion, lumped elastic cables and forward kinematics.
//! - [`control`]: pose-error construction for every supported attitude
//!   description, the regressor, adaptive update and SPR feedback.
//! - [`allocation`]: closed-form tension distribution with pretension and
//!   limit clamping.
//! - [`harness`]: scenarios, desired trajectories, the fixed-step closed loop,
//!   logging, metrics and the runtime check suites behind the `cdpr` CLI.

pub mod allocation;
pub mod attitude;
pub mod control;
pub mod dynamics;
pub mod harness;

use nalgebra::{Matrix3, Matrix6, SMatrix, SVector, Vector3, Vector6};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat6 = Matrix6<f64>;
/// Per-cable quantities (winch angles, tensions, torques).
pub type Vec8 = SVector<f64, 8>;
/// Wrench matrix: winch rates as a linear function of payload velocity.
pub type Mat8x6 = SMatrix<f64, 8, 6>;
/// Inertial parameter vector `[m, I11, I22, I33, I12, I13, I23]`.
pub type Vec7 = SVector<f64, 7>;
pub type Mat7 = SMatrix<f64, 7, 7>;
pub type Regressor = SMatrix<f64, 6, 7>;

/// Number of cables on the supported CDPR layout.
pub const NUM_CABLES: usize = 8;

/// Standard gravity (m/s^2).
pub const GRAVITY: f64 = 9.81;

/// Unit vector along inertial z; gravity acts along its negative.
pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

pub(crate) fn block_diag(upper: &Mat3, lower: &Mat3) -> Mat6 {
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(upper);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(lower);
    m
}

pub(crate) fn stack(upper: &Vec3, lower: &Vec3) -> Vec6 {
    let mut v = Vec6::zeros();
    v.fixed_rows_mut::<3>(0).copy_from(upper);
    v.fixed_rows_mut::<3>(3).copy_from(lower);
    v
}

pub(crate) fn top(v: &Vec6) -> Vec3 {
    v.fixed_rows::<3>(0).into_owned()
}

pub(crate) fn bottom(v: &Vec6) -> Vec3 {
    v.fixed_rows::<3>(3).into_owned()
}
