//! Pose-error construction: `p̃`, `P`, `ν_d` and their rates for each
//! attitude description, assembled so that `ν̃_r = P s`.

use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::attitude::{
    antisym_project, cross, dcm_from_euler321, mapping_matrix, mapping_matrix_rate, quat_error,
    quat_from_dcm, uncross_unchecked, Dcm, ParamKind, UnconstrainedAttitude,
    DEFAULT_SINGULARITY_MARGIN,
};
use crate::dynamics::PayloadState;
use crate::{block_diag, stack, Mat3, Mat6, Vec3, Vec6};

/// Singularity guard on `|δη|` for the quaternion error.
pub const QUAT_ETA_MIN: f64 = 1e-6;
/// Singularity guard on `|tr(C_pd) - 1|` for the DCM error.
pub const SO3_TRACE_MARGIN: f64 = 1e-6;

/// Desired pose and its first two derivatives. The attitude is a 3-2-1
/// Euler sequence, `C_da = C1(φ) C2(θ) C3(ψ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesiredPose {
    pub r: Vec3,
    pub r_dot: Vec3,
    pub r_ddot: Vec3,
    pub euler: Vec3,
    pub euler_dot: Vec3,
    pub euler_ddot: Vec3,
}

impl DesiredPose {
    /// Holds `pose` still.
    pub fn stationary(r: Vec3, euler: Vec3) -> Self {
        DesiredPose {
            r,
            r_dot: Vec3::zeros(),
            r_ddot: Vec3::zeros(),
            euler,
            euler_dot: Vec3::zeros(),
            euler_ddot: Vec3::zeros(),
        }
    }

    pub fn dcm(&self) -> Dcm {
        dcm_from_euler321(&self.euler)
    }

    /// `(ω^da, ω̇^da)`, resolved in the desired frame.
    pub fn angular_velocity(&self) -> Result<(Vec3, Vec3), ControlError> {
        let att = UnconstrainedAttitude::new(ParamKind::Euler321, self.euler);
        let s = mapping_matrix(&att)?;
        let s_dot = mapping_matrix_rate(&att, &self.euler_dot)?;
        Ok((s * self.euler_dot, s_dot * self.euler_dot + s * self.euler_ddot))
    }

    /// Desired parameters of `kind` with first and second rates.
    pub fn unconstrained(&self, kind: ParamKind) -> Result<(Vec3, Vec3, Vec3), ControlError> {
        if kind == ParamKind::Euler321 {
            return Ok((self.euler, self.euler_dot, self.euler_ddot));
        }
        let (w, w_dot) = self.angular_velocity()?;
        let att = UnconstrainedAttitude::from_dcm(kind, &self.dcm(), DEFAULT_SINGULARITY_MARGIN)?;
        let s_inv = invert(&mapping_matrix(&att)?, "desired mapping matrix")?;
        let q_dot = s_inv * w;
        let s_dot = mapping_matrix_rate(&att, &q_dot)?;
        Ok((att.params, q_dot, s_inv * (w_dot - s_dot * q_dot)))
    }
}

/// The error signals of one controller evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBlock {
    pub p_tilde: Vec6,
    pub p_tilde_dot: Vec6,
    pub p: Mat6,
    pub p_dot: Mat6,
    pub nu_d: Vec6,
    pub nu_d_dot: Vec6,
    /// `s = ṗ̃ + Λ p̃`
    pub s: Vec6,
    pub nu_r: Vec6,
    pub nu_r_dot: Vec6,
    /// `ν̃_r = ν - ν_r`
    pub nu_tilde_r: Vec6,
}

impl ErrorBlock {
    /// `‖ν̃_r - P s‖`
    pub fn contract_residual(&self) -> f64 {
        (self.nu_tilde_r - self.p * self.s).norm()
    }
}

fn invert(m: &Mat3, what: &'static str) -> Result<Mat3, ControlError> {
    m.try_inverse().ok_or(ControlError::Singular { what, value: m.determinant() })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    p_tilde: Vec6,
    p_tilde_dot: Vec6,
    p: Mat6,
    p_dot: Mat6,
    nu_d: Vec6,
    nu_d_dot: Vec6,
    nu: &Vec6,
    lambda: &Mat6,
) -> ErrorBlock {
    let lp = lambda * p_tilde;
    let nu_r = nu_d - p * lp;
    let nu_r_dot = nu_d_dot - p_dot * lp - p * (lambda * p_tilde_dot);
    ErrorBlock {
        s: p_tilde_dot + lp,
        nu_tilde_r: nu - nu_r,
        p_tilde,
        p_tilde_dot,
        p,
        p_dot,
        nu_d,
        nu_d_dot,
        nu_r,
        nu_r_dot,
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI { PI } else { y }
}

/// Error block for a three-parameter attitude set: `P = blkdiag(1, S(q))`,
/// `p̃ = [r̃; q - q_d]`, `ν_d = P [ṙ_d; q̇_d]`.
pub fn error_block_unconstrained(
    kind: ParamKind,
    state: &PayloadState,
    desired: &DesiredPose,
    lambda: &Mat6,
) -> Result<ErrorBlock, ControlError> {
    let att = UnconstrainedAttitude::from_dcm(kind, &state.pose.c, DEFAULT_SINGULARITY_MARGIN)?;
    let s = mapping_matrix(&att)?;
    let q_dot = invert(&s, "mapping matrix")? * state.omega();
    let s_dot = mapping_matrix_rate(&att, &q_dot)?;
    let (q_d, q_d_dot, q_d_ddot) = desired.unconstrained(kind)?;

    let mut q_err = att.params - q_d;
    if kind == ParamKind::Euler321 {
        q_err = q_err.map(wrap_angle);
    }
    Ok(assemble(
        stack(&(state.pose.r - desired.r), &q_err),
        stack(&(state.velocity() - desired.r_dot), &(q_dot - q_d_dot)),
        block_diag(&Mat3::identity(), &s),
        block_diag(&Mat3::zeros(), &s_dot),
        stack(&desired.r_dot, &(s * q_d_dot)),
        stack(&desired.r_ddot, &(s_dot * q_d_dot + s * q_d_ddot)),
        &state.nu,
        lambda,
    ))
}

/// Quaternion error block: `P = blkdiag(1, 2(δη 1 + δε^×)⁻¹)`, `p̃ = [r̃; δε]`.
/// The error quaternion representative with `δη ≥ 0` is used.
pub fn error_block_quaternion(
    state: &PayloadState,
    desired: &DesiredPose,
    lambda: &Mat6,
) -> Result<ErrorBlock, ControlError> {
    let dq = quat_error(&quat_from_dcm(&state.pose.c), &quat_from_dcm(&desired.dcm()));
    let (de, dn) = if dq.eta < 0.0 { (-dq.eps, -dq.eta) } else { (dq.eps, dq.eta) };
    if dn.abs() <= QUAT_ETA_MIN {
        return Err(ControlError::Singular { what: "quaternion error (δη = 0)", value: dn });
    }
    let (w_d, w_d_dot) = desired.angular_velocity()?;
    let w_tilde = state.omega() - w_d;

    let a = Mat3::identity() * dn + cross(&de);
    let a_inv = invert(&a, "quaternion error matrix")?;
    let de_dot = -cross(&w_d) * de + a * w_tilde * 0.5;
    let dn_dot = -0.5 * de.dot(&w_tilde);
    let a_dot = Mat3::identity() * dn_dot + cross(&de_dot);

    let p_att = a_inv * 2.0;
    let p_att_dot = -(a_inv * a_dot * a_inv) * 2.0;
    let nu_d_att = w_d + p_att * (cross(&w_d) * de);
    let nu_d_att_dot = w_d_dot
        + p_att_dot * (cross(&w_d) * de)
        + p_att * (cross(&w_d_dot) * de + cross(&w_d) * de_dot);

    Ok(assemble(
        stack(&(state.pose.r - desired.r), &de),
        stack(&(state.velocity() - desired.r_dot), &de_dot),
        block_diag(&Mat3::identity(), &p_att),
        block_diag(&Mat3::zeros(), &p_att_dot),
        stack(&desired.r_dot, &nu_d_att),
        stack(&desired.r_ddot, &nu_d_att_dot),
        &state.nu,
        lambda,
    ))
}

/// DCM error block: `P = blkdiag(1, -2 Γ)` with `Γ = (tr(C_pd) 1 - C_pd)⁻¹`,
/// `p̃ = [r̃; P_a(C_pd)^∨]`.
///
/// The desired angular velocity enters resolved in the payload frame,
/// `C_pd ω^da`, so that `ω̃ = ω^pd`.
pub fn error_block_so3(
    state: &PayloadState,
    desired: &DesiredPose,
    lambda: &Mat6,
) -> Result<ErrorBlock, ControlError> {
    let c = *crate::attitude::dcm_error(&state.pose.c, &desired.dcm()).matrix();
    let tr = c.trace();
    if (tr - 1.0).abs() <= SO3_TRACE_MARGIN {
        return Err(ControlError::Singular { what: "DCM error (trace = 1)", value: tr });
    }
    let g_inv = Mat3::identity() * tr - c;
    let g = invert(&g_inv, "DCM error matrix")?;
    let (w_d, w_d_dot) = desired.angular_velocity()?;
    let w_d_p = c * w_d;
    let w_tilde = state.omega() - w_d_p;
    let c_dot = -cross(&w_tilde) * c;

    let p_att = g * -2.0;
    let p_att_dot = g * (Mat3::identity() * c_dot.trace() - c_dot) * g * 2.0;

    Ok(assemble(
        stack(&(state.pose.r - desired.r), &uncross_unchecked(&antisym_project(&c))),
        stack(&(state.velocity() - desired.r_dot), &(g_inv * w_tilde * -0.5)),
        block_diag(&Mat3::identity(), &p_att),
        block_diag(&Mat3::zeros(), &p_att_dot),
        stack(&desired.r_dot, &w_d_p),
        stack(&desired.r_ddot, &(c_dot * w_d + c * w_d_dot)),
        &state.nu,
        lambda,
    ))
}

/// Small-angle Euler error block: `S(q)` replaced by the identity, so
/// `ω ≈ q̇`, `P = 1`, `ν_d = [ṙ_d; q̇_d]`.
pub fn error_block_simplified(
    state: &PayloadState,
    desired: &DesiredPose,
    lambda: &Mat6,
) -> Result<ErrorBlock, ControlError> {
    let q = crate::attitude::euler321_from_dcm(&state.pose.c, DEFAULT_SINGULARITY_MARGIN)?;
    Ok(assemble(
        stack(&(state.pose.r - desired.r), &(q - desired.euler).map(wrap_angle)),
        stack(&(state.velocity() - desired.r_dot), &(state.omega() - desired.euler_dot)),
        Mat6::identity(),
        Mat6::zeros(),
        stack(&desired.r_dot, &desired.euler_dot),
        stack(&desired.r_ddot, &desired.euler_ddot),
        &state.nu,
        lambda,
    ))
}
