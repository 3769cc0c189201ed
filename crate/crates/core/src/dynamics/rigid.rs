use serde::{Deserialize, Serialize};

use super::{DynamicsError, Pose};
use crate::attitude::cross;
use crate::{block_diag, bottom, e3, stack, top, Mat3, Mat6, Vec3, Vec6, Vec7, GRAVITY};

/// Rigid-body payload parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadParams {
    /// kg
    pub mass: f64,
    /// Inertia about the CoM in the payload frame (kg m^2).
    pub inertia: Mat3,
    /// m/s^2
    pub gravity: f64,
}

impl PayloadParams {
    pub fn reference() -> Self {
        PayloadParams {
            mass: 6.75,
            inertia: Mat3::from_diagonal(&Vec3::new(15.8e-3, 5.2e-3, 14.7e-3)),
            gravity: GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass > 0.0) {
            return Err(DynamicsError::InvalidPayload("mass must be positive".into()));
        }
        if (self.inertia - self.inertia.transpose()).abs().max() > 1e-12 {
            return Err(DynamicsError::InvalidPayload("inertia must be symmetric".into()));
        }
        if self.inertia.symmetric_eigenvalues().min() <= 0.0 {
            return Err(DynamicsError::InvalidPayload("inertia must be positive definite".into()));
        }
        Ok(())
    }

    /// The true parameter vector `[m, I11, I22, I33, I12, I13, I23]`.
    pub fn parameter_vector(&self) -> Vec7 {
        let e = super::inertia_entries(&self.inertia);
        Vec7::from_column_slice(&[self.mass, e[0], e[1], e[2], e[3], e[4], e[5]])
    }

    /// `M = blkdiag(m 1, I_p)`.
    pub fn mass_matrix(&self) -> Mat6 {
        block_diag(&(Mat3::identity() * self.mass), &self.inertia)
    }

    /// Skew-symmetric factorization `D(ν) = blkdiag(0, -(I_p ω)^×)` of the
    /// gyroscopic term, so that `D(ν) ν = [0; ω^× I_p ω]`.
    pub fn coriolis_matrix(&self, omega: &Vec3) -> Mat6 {
        block_diag(&Mat3::zeros(), &(-cross(&(self.inertia * omega))))
    }

    /// `g = [m g 1₃; 0]`, the generalized gravity term.
    pub fn gravity_wrench(&self) -> Vec6 {
        stack(&(e3() * (self.mass * self.gravity)), &Vec3::zeros())
    }

    pub fn kinetic_energy(&self, nu: &Vec6) -> f64 {
        0.5 * nu.dot(&(self.mass_matrix() * nu))
    }

    /// Gravitational potential with the datum at inertial `z = 0`.
    pub fn potential_energy(&self, r: &Vec3) -> f64 {
        self.mass * self.gravity * r.z
    }
}

impl Default for PayloadParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadState {
    pub pose: Pose,
    /// `ν = [ṙ; ω]`: inertial translational velocity, payload-frame angular
    /// velocity.
    pub nu: Vec6,
}

impl PayloadState {
    pub fn at_rest(pose: Pose) -> Self {
        PayloadState { pose, nu: Vec6::zeros() }
    }

    pub fn omega(&self) -> Vec3 {
        bottom(&self.nu)
    }

    pub fn velocity(&self) -> Vec3 {
        top(&self.nu)
    }

    /// Angular momentum about the CoM, resolved in the inertial frame.
    pub fn angular_momentum_inertial(&self, params: &PayloadParams) -> Vec3 {
        self.pose.c.matrix().transpose() * (params.inertia * self.omega())
    }
}

/// `ν̇ = M⁻¹ (f - D(ν) ν - g)` for a wrench `f` (force in the inertial frame,
/// torque in the payload frame).
pub fn task_space_dynamics(params: &PayloadParams, state: &PayloadState, f: &Vec6) -> Vec6 {
    let omega = state.omega();
    let accel = (top(f) - e3() * (params.mass * params.gravity)) / params.mass;
    let torque = bottom(f) - omega.cross(&(params.inertia * omega));
    let alpha = params
        .inertia
        .cholesky()
        .expect("payload inertia must be positive definite")
        .solve(&torque);
    stack(&accel, &alpha)
}
