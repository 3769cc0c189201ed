//! Attitude descriptions and the operators shared by every controller.
//!
//! Conventions: `C_pa` is the direction cosine matrix (DCM) taking
//! components in the inertial frame `a` to components in the payload frame
//! `p`. Angular velocity `ω` is that of `p` relative to `a`, resolved in `p`,
//! and Poisson's equation reads `Ċ_pa = -ω^× C_pa`.

mod convert;
mod mapping;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Mat3, Vec3};

pub use convert::{
    dcm_from_euler321, dcm_from_mrp, dcm_from_quat, dcm_from_rotvec, euler321_from_dcm,
    mrp_from_dcm, quat_from_dcm, rotvec_from_dcm,
};
pub use mapping::{mapping_matrix, mapping_matrix_rate, DEFAULT_SINGULARITY_MARGIN};

/// Tolerance used to accept a matrix as antisymmetric in [`uncross`].
pub const ANTISYMMETRY_TOL: f64 = 1e-9;

/// Tolerance on `CᵀC = 1` and `det C = 1` for [`Dcm::new`].
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttitudeError {
    #[error("matrix is not antisymmetric (max |A + Aᵀ| = {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("matrix is not a proper rotation (orthonormality error {orthonormality:.3e}, det {det})")]
    NotRotation { orthonormality: f64, det: f64 },
    #[error("{kind} parameters {params:?} are at a kinematic singularity")]
    Singular { kind: ParamKind, params: [f64; 3] },
}

/// `v^×`, the matrix with `v^× w = v × w`.
pub fn cross(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`cross`]; rejects matrices that are not antisymmetric.
pub fn uncross(a: &Mat3) -> Result<Vec3, AttitudeError> {
    let asym = (a + a.transpose()).abs().max();
    if asym > ANTISYMMETRY_TOL {
        return Err(AttitudeError::NotAntisymmetric(asym));
    }
    Ok(uncross_unchecked(a))
}

/// Reads the axial vector of the antisymmetric part of `a` without checking.
pub(crate) fn uncross_unchecked(a: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (a[(2, 1)] - a[(1, 2)]),
        0.5 * (a[(0, 2)] - a[(2, 0)]),
        0.5 * (a[(1, 0)] - a[(0, 1)]),
    )
}

/// `½(U - Uᵀ)`.
pub fn antisym_project(u: &Mat3) -> Mat3 {
    0.5 * (u - u.transpose())
}

/// Direction cosine matrix, an element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dcm(Mat3);

impl Dcm {
    pub fn identity() -> Self {
        Dcm(Mat3::identity())
    }

    /// Validates `m` against the SO(3) invariants.
    pub fn new(m: Mat3) -> Result<Self, AttitudeError> {
        let d = Dcm(m);
        let orthonormality = d.orthonormality_error();
        let det = m.determinant();
        if orthonormality > ORTHONORMALITY_TOL || (det - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(AttitudeError::NotRotation { orthonormality, det });
        }
        Ok(d)
    }

    /// Wraps `m` without validation. Used for intermediate integrator
    /// stages, which sit within truncation error of SO(3).
    pub fn new_unchecked(m: Mat3) -> Self {
        Dcm(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Dcm(self.0.transpose())
    }

    /// `self · other`.
    pub fn compose(&self, other: &Dcm) -> Self {
        Dcm(self.0 * other.0)
    }

    /// Frobenius norm of `CᵀC - 1`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Nearest rotation in the Frobenius sense (polar decomposition).
    pub fn reorthonormalize(&self) -> Self {
        let svd = self.0.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Dcm(r)
    }

    /// Principal rotation about axis 1.
    pub fn c1(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Dcm(Mat3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c))
    }

    /// Principal rotation about axis 2.
    pub fn c2(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Dcm(Mat3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c))
    }

    /// Principal rotation about axis 3.
    pub fn c3(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Dcm(Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0))
    }
}

/// Unit quaternion `[εᵀ η]ᵀ` with vector part `ε` and scalar part `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub eps: Vec3,
    pub eta: f64,
}

impl Quat {
    pub fn new(eps: Vec3, eta: f64) -> Self {
        Quat { eps, eta }
    }

    pub fn identity() -> Self {
        Quat { eps: Vec3::zeros(), eta: 1.0 }
    }

    pub fn norm(&self) -> f64 {
        (self.eps.norm_squared() + self.eta * self.eta).sqrt()
    }

    pub fn normalize(&self) -> Self {
        let n = self.norm();
        Quat { eps: self.eps / n, eta: self.eta / n }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.eps.x, self.eps.y, self.eps.z, self.eta]
    }
}

/// The supported three-parameter attitude sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// 3-2-1 Euler sequence `[φ, θ, ψ]`: `C = C1(φ) C2(θ) C3(ψ)`.
    Euler321,
    /// Rotation vector `α·a` (angle times unit axis).
    RotationVector,
    /// Modified Rodrigues parameters `σ = ε / (1 + η)`.
    Mrp,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Euler321 => "euler321",
            ParamKind::RotationVector => "rotation-vector",
            ParamKind::Mrp => "mrp",
        })
    }
}

/// An attitude stored in one of the unconstrained three-parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedAttitude {
    pub kind: ParamKind,
    pub params: Vec3,
}

impl UnconstrainedAttitude {
    pub fn new(kind: ParamKind, params: Vec3) -> Self {
        UnconstrainedAttitude { kind, params }
    }

    pub fn to_dcm(&self) -> Dcm {
        match self.kind {
            ParamKind::Euler321 => dcm_from_euler321(&self.params),
            ParamKind::RotationVector => dcm_from_rotvec(&self.params),
            ParamKind::Mrp => dcm_from_mrp(&self.params),
        }
    }

    /// Extracts parameters of `kind` from `c`. Only the Euler sequence can
    /// fail (gimbal lock).
    pub fn from_dcm(kind: ParamKind, c: &Dcm, margin: f64) -> Result<Self, AttitudeError> {
        let params = match kind {
            ParamKind::Euler321 => euler321_from_dcm(c, margin)?,
            ParamKind::RotationVector => rotvec_from_dcm(c),
            ParamKind::Mrp => mrp_from_dcm(c),
        };
        Ok(UnconstrainedAttitude { kind, params })
    }
}

/// Multiplicative quaternion error `δq`, the quaternion of `C_pd = C_pa C_daᵀ`.
pub fn quat_error(q_pa: &Quat, q_da: &Quat) -> Quat {
    let (eps, eta) = (&q_pa.eps, q_pa.eta);
    let (eps_d, eta_d) = (&q_da.eps, q_da.eta);
    let d_eps = (Mat3::identity() * eta - cross(eps)) * (-eps_d) + eps * eta_d;
    let d_eta = eps.dot(eps_d) + eta * eta_d;
    Quat::new(d_eps, d_eta)
}

/// `C_pd = C_pa C_daᵀ`.
pub fn dcm_error(c_pa: &Dcm, c_da: &Dcm) -> Dcm {
    c_pa.compose(&c_da.transpose())
}

/// Angle of the axis-angle form of `c`, in `[0, π]`.
pub fn error_angle(c: &Dcm) -> f64 {
    // atan2 form keeps full precision near zero, unlike acos of the trace
    let m = c.matrix();
    let sin = 0.5 * uncross_unchecked(&(m - m.transpose())).norm();
    sin.atan2((c.trace() - 1.0) / 2.0)
}

/// Advances `C` through `Ċ = -ω^× C` for a constant `ω` over `dt` using the
/// exponential map, then re-orthonormalizes.
pub fn poisson_step(c: &Dcm, omega: &Vec3, dt: f64) -> Dcm {
    Dcm(expm_so3(&(-omega * dt)) * c.0).reorthonormalize()
}

/// `exp(φ^×)` via Rodrigues' formula.
pub(crate) fn expm_so3(phi: &Vec3) -> Mat3 {
    let angle = phi.norm();
    let k = cross(phi);
    let (a, b) = if angle < 1e-4 {
        let a2 = angle * angle;
        (1.0 - a2 / 6.0 + a2 * a2 / 120.0, 0.5 - a2 / 24.0 + a2 * a2 / 720.0)
    } else {
        (angle.sin() / angle, (1.0 - angle.cos()) / (angle * angle))
    };
    Mat3::identity() + k * a + k * k * b
}
