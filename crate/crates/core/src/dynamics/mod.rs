//! CDPR geometry, payload equations of motion, cable models and kinematics.

mod elastic;
mod kinematics;
mod rigid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{
    dcm_from_euler321, dcm_from_mrp, dcm_from_quat, dcm_from_rotvec, Dcm, Quat,
    UnconstrainedAttitude,
};
use crate::{Mat3, Vec3, Vec6, Vec8, NUM_CABLES};

pub use elastic::{
    elastic_cable_forces, rayleigh_damping_coefficient, CableState, ElasticCableModel,
    ElasticForces,
};
pub use kinematics::{
    cable_lengths, cable_vectors, forward_kinematics, wrench_matrix, wrench_matrix_unchecked,
    CableVector, FkSolution, WinchDatum, FK_MAX_ITERATIONS, FK_STEP_TOL,
};
pub use rigid::{task_space_dynamics, PayloadParams, PayloadState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("cable {index} has zero length")]
    DegenerateCable { index: usize },
    #[error("wrench matrix lost rank (rank {rank}, smallest singular value {sigma_min:.3e})")]
    RankDeficient { rank: usize, sigma_min: f64 },
    #[error("forward kinematics did not converge after {iterations} iterations (residual rms {residual_rms:.3e} m)")]
    FkNotConverged { iterations: usize, residual_rms: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid payload parameters: {0}")]
    InvalidPayload(String),
}

/// Payload pose: inertial position of the center of mass and attitude
/// `C_pa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub r: Vec3,
    pub c: Dcm,
}

impl Pose {
    pub fn new(r: Vec3, c: Dcm) -> Self {
        Pose { r, c }
    }

    pub fn from_euler321(r: Vec3, angles: Vec3) -> Self {
        Pose { r, c: dcm_from_euler321(&angles) }
    }

    pub fn from_quat(r: Vec3, q: &Quat) -> Self {
        Pose { r, c: dcm_from_quat(q) }
    }

    pub fn from_unconstrained(r: Vec3, att: &UnconstrainedAttitude) -> Self {
        Pose { r, c: att.to_dcm() }
    }

    pub fn from_rotvec(r: Vec3, phi: Vec3) -> Self {
        Pose { r, c: dcm_from_rotvec(&phi) }
    }

    pub fn from_mrp(r: Vec3, sigma: Vec3) -> Self {
        Pose { r, c: dcm_from_mrp(&sigma) }
    }

    /// Applies a position increment and a payload-frame rotation increment
    /// `δθ`, i.e. `C ← exp(-δθ^×) C`.
    pub fn perturbed(&self, dr: &Vec3, dtheta: &Vec3) -> Self {
        Pose {
            r: self.r + dr,
            c: Dcm::new_unchecked(crate::attitude::expm_so3(&(-dtheta)) * self.c.matrix()),
        }
    }

    /// Advances the pose along the augmented velocity `ν = [ṙ; ω]` for `dt`.
    pub fn advanced(&self, nu: &Vec6, dt: f64) -> Self {
        self.perturbed(&(crate::top(nu) * dt), &(crate::bottom(nu) * dt))
    }
}

/// Winch and attachment layout plus cable material properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdprGeometry {
    /// Winch exit points `a_i`, inertial frame (m).
    pub winch_positions: [Vec3; NUM_CABLES],
    /// Cable attachment points `b_i`, payload frame relative to the CoM (m).
    pub attachment_points: [Vec3; NUM_CABLES],
    /// Winch drum radii (m).
    pub winch_radii: [f64; NUM_CABLES],
    /// Winch rotor inertias (kg m^2).
    pub winch_inertias: [f64; NUM_CABLES],
    /// Linear cable density (kg/m).
    pub cable_density: f64,
    /// Young's modulus of the cable (N/m^2).
    pub cable_youngs_modulus: f64,
    /// Cable cross-section radius (m).
    pub cable_radius: f64,
    /// Admissible tension range `[t_min, t_max]` (N).
    pub tension_limits: [f64; 2],
}

impl CdprGeometry {
    /// The eight-cable crossed layout with an aramid cable.
    pub fn reference() -> Self {
        let cm = |x: f64, y: f64, z: f64| Vec3::new(x, y, z) * 0.01;
        CdprGeometry {
            winch_positions: [
                cm(71.0, 38.0, 93.0),
                cm(-71.0, 38.0, 93.0),
                cm(-71.0, -38.0, 93.0),
                cm(71.0, -38.0, 93.0),
                cm(-71.0, -38.0, 0.0),
                cm(71.0, 38.0, 0.0),
                cm(-71.0, 38.0, 0.0),
                cm(71.0, -38.0, 0.0),
            ],
            attachment_points: [
                cm(3.0, 7.5, -3.75),
                cm(-3.0, 7.5, -3.75),
                cm(-3.0, -7.5, -3.75),
                cm(3.0, -7.5, -3.75),
                cm(-1.5, -7.5, 3.75),
                cm(1.5, 7.5, 3.75),
                cm(-1.5, 7.5, 3.75),
                cm(1.5, -7.5, 3.75),
            ],
            winch_radii: [0.0254; NUM_CABLES],
            winch_inertias: [0.025e-3; NUM_CABLES],
            cable_density: 4.6e-3,
            cable_youngs_modulus: 127e9,
            cable_radius: 1e-3,
            tension_limits: [7.9, 3937.0],
        }
    }

    /// `EA`, the axial stiffness of the cable cross-section (N).
    pub fn axial_stiffness(&self) -> f64 {
        self.cable_youngs_modulus * std::f64::consts::PI * self.cable_radius * self.cable_radius
    }

    pub fn radii(&self) -> Vec8 {
        Vec8::from_column_slice(&self.winch_radii)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::InvalidGeometry(msg.to_string()));
        if self.winch_radii.iter().any(|&r| !(r > 0.0)) {
            return bad("winch radii must be positive");
        }
        if self.winch_inertias.iter().any(|&j| !(j > 0.0)) {
            return bad("winch inertias must be positive");
        }
        if !(self.tension_limits[0] < self.tension_limits[1]) {
            return bad("tension limits must satisfy t_min < t_max");
        }
        if !(self.cable_density >= 0.0 && self.cable_youngs_modulus > 0.0 && self.cable_radius > 0.0) {
            return bad("cable material properties must be positive");
        }
        let finite = self
            .winch_positions
            .iter()
            .chain(self.attachment_points.iter())
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return bad("non-finite winch or attachment coordinates");
        }
        Ok(())
    }
}

impl Default for CdprGeometry {
    fn default() -> Self {
        Self::reference()
    }
}

/// Upper-triangle packing `[I11, I22, I33, I12, I13, I23]` of a symmetric
/// inertia matrix.
pub fn inertia_from_entries(e: &[f64; 6]) -> Mat3 {
    Mat3::new(e[0], e[3], e[4], e[3], e[1], e[5], e[4], e[5], e[2])
}

pub fn inertia_entries(i: &Mat3) -> [f64; 6] {
    [i[(0, 0)], i[(1, 1)], i[(2, 2)], i[(0, 1)], i[(0, 2)], i[(1, 2)]]
}
