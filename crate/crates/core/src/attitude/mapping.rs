//! Kinematic mapping matrices `S(q)` with `ω = S(q) q̇`, and their time
//! derivatives along a given parameter rate.

use super::{cross, AttitudeError, ParamKind, UnconstrainedAttitude};
use crate::{Mat3, Vec3};

/// Default distance (rad) kept from a kinematic singularity.
pub const DEFAULT_SINGULARITY_MARGIN: f64 = 1e-3;

fn check_singularity(att: &UnconstrainedAttitude, margin: f64) -> Result<(), AttitudeError> {
    let q = &att.params;
    let singular = match att.kind {
        // |cos θ| ≤ sin(margin) is |θ| ≥ π/2 - margin on the principal branch
        ParamKind::Euler321 => q.y.cos().abs() <= margin.sin(),
        ParamKind::RotationVector => q.norm() >= 2.0 * std::f64::consts::PI - margin,
        ParamKind::Mrp => !q.norm_squared().is_finite(),
    };
    if singular || !q.iter().all(|x| x.is_finite()) {
        return Err(AttitudeError::Singular { kind: att.kind, params: [q.x, q.y, q.z] });
    }
    Ok(())
}

/// `S(q)` for the default singularity margin.
pub fn mapping_matrix(att: &UnconstrainedAttitude) -> Result<Mat3, AttitudeError> {
    mapping_matrix_with_margin(att, DEFAULT_SINGULARITY_MARGIN)
}

pub fn mapping_matrix_with_margin(
    att: &UnconstrainedAttitude,
    margin: f64,
) -> Result<Mat3, AttitudeError> {
    check_singularity(att, margin)?;
    let q = &att.params;
    Ok(match att.kind {
        ParamKind::Euler321 => {
            let (sphi, cphi) = q.x.sin_cos();
            let (sth, cth) = q.y.sin_cos();
            Mat3::new(1.0, 0.0, -sth, 0.0, cphi, sphi * cth, 0.0, -sphi, cphi * cth)
        }
        ParamKind::RotationVector => {
            let (a, b) = rotvec_coeffs(q.norm());
            let k = cross(q);
            Mat3::identity() - k * a + k * k * b
        }
        ParamKind::Mrp => {
            let n = q.norm_squared();
            let bt = Mat3::identity() * (1.0 - n) - cross(q) * 2.0 + q * q.transpose() * 2.0;
            bt * (4.0 / ((1.0 + n) * (1.0 + n)))
        }
    })
}

/// `Ṡ = Σ_k (∂S/∂q_k) q̇_k`.
pub fn mapping_matrix_rate(
    att: &UnconstrainedAttitude,
    q_dot: &Vec3,
) -> Result<Mat3, AttitudeError> {
    check_singularity(att, DEFAULT_SINGULARITY_MARGIN)?;
    let q = &att.params;
    Ok(match att.kind {
        ParamKind::Euler321 => {
            let (sphi, cphi) = q.x.sin_cos();
            let (sth, cth) = q.y.sin_cos();
            let (dphi, dth) = (q_dot.x, q_dot.y);
            Mat3::new(
                0.0,
                0.0,
                -cth * dth,
                0.0,
                -sphi * dphi,
                cphi * cth * dphi - sphi * sth * dth,
                0.0,
                -cphi * dphi,
                -sphi * cth * dphi - cphi * sth * dth,
            )
        }
        ParamKind::RotationVector => {
            let angle = q.norm();
            let (a, b) = rotvec_coeffs(angle);
            let (da_over, db_over) = rotvec_coeff_derivs_over_angle(angle);
            // d(angle)/dt = qᵀq̇ / angle, folded into the "/angle" coefficients
            let proj = q.dot(q_dot);
            let (da, db) = (da_over * proj, db_over * proj);
            let k = cross(q);
            let kd = cross(q_dot);
            -k * da - kd * a + k * k * db + (kd * k + k * kd) * b
        }
        ParamKind::Mrp => {
            let n = q.norm_squared();
            let dn = 2.0 * q.dot(q_dot);
            let bt = Mat3::identity() * (1.0 - n) - cross(q) * 2.0 + q * q.transpose() * 2.0;
            let dbt = -Mat3::identity() * dn - cross(q_dot) * 2.0
                + (q_dot * q.transpose() + q * q_dot.transpose()) * 2.0;
            let d = 1.0 + n;
            dbt * (4.0 / (d * d)) - bt * (8.0 * dn / (d * d * d))
        }
    })
}

/// `a = (1 - cos α)/α²`, `b = (α - sin α)/α³`.
fn rotvec_coeffs(angle: f64) -> (f64, f64) {
    if angle < 1e-3 {
        let x2 = angle * angle;
        (0.5 - x2 / 24.0 + x2 * x2 / 720.0, 1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0)
    } else {
        let (s, c) = angle.sin_cos();
        ((1.0 - c) / (angle * angle), (angle - s) / (angle * angle * angle))
    }
}

/// `a'(α)/α` and `b'(α)/α`.
fn rotvec_coeff_derivs_over_angle(angle: f64) -> (f64, f64) {
    if angle < 1e-3 {
        let x2 = angle * angle;
        (-1.0 / 12.0 + x2 / 180.0, -1.0 / 60.0 + x2 / 1260.0)
    } else {
        let (s, c) = angle.sin_cos();
        let a2 = angle * angle;
        let da = (angle * s - 2.0 * (1.0 - c)) / (a2 * angle);
        let db = ((1.0 - c) * angle - 3.0 * (angle - s)) / (a2 * a2);
        (da / angle, db / angle)
    }
}
