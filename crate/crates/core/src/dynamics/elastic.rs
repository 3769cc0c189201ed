//! Lumped axial spring-damper cables driven by winch rotors.
//!
//! Each cable is a massless axial spring of unstretched length
//! `l₀ = l₀(θ=0) - r θ` between its winch and the payload. It carries
//! `t = max(0, (EA/l₀)(l - l₀) + c (l̇ - l̇₀))`, so a slack cable never pushes.
//! The winch rotor obeys `J θ̈ = τ - r t`.

use nalgebra::SymmetricEigen;

use super::kinematics::{cable_vectors, unit_wrench};
use super::{CdprGeometry, DynamicsError, PayloadParams, PayloadState, Pose};
use crate::{block_diag, Mat3, Mat6, Vec6, Vec8, NUM_CABLES};

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticCableModel {
    /// Unstretched cable lengths at zero winch angle (m).
    pub unstretched_at_zero: Vec8,
    /// Stiffness-proportional damping factor β (s): `c_i = β EA / l₀_i`.
    pub damping_factor: f64,
    /// Lump a third of each cable's mass onto the payload's translational
    /// inertia.
    pub include_cable_mass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableState {
    /// Winch angles θ (rad), positive when reeling in.
    pub winch_angles: Vec8,
    /// rad/s
    pub winch_rates: Vec8,
}

impl CableState {
    pub fn zero() -> Self {
        CableState { winch_angles: Vec8::zeros(), winch_rates: Vec8::zeros() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticForces {
    /// N
    pub tensions: Vec8,
    /// Payload wrench generated by the tensions.
    pub wrench: Vec6,
    /// θ̈ (rad/s^2)
    pub winch_accels: Vec8,
    /// Current unstretched lengths (m).
    pub unstretched: Vec8,
    /// Lumped cable mass added to the payload (kg); zero unless enabled.
    pub extra_mass: f64,
}

impl ElasticCableModel {
    pub fn unstretched_lengths(&self, geom: &CdprGeometry, cables: &CableState) -> Vec8 {
        self.unstretched_at_zero - geom.radii().component_mul(&cables.winch_angles)
    }

    /// Strain energy `Σ ½ (EA/l₀)(l - l₀)²` over taut cables.
    pub fn strain_energy(
        &self,
        geom: &CdprGeometry,
        pose: &Pose,
        cables: &CableState,
    ) -> Result<f64, DynamicsError> {
        let ea = geom.axial_stiffness();
        let l0 = self.unstretched_lengths(geom, cables);
        let cv = cable_vectors(geom, pose)?;
        Ok((0..NUM_CABLES)
            .map(|i| {
                let stretch = (cv[i].length - l0[i]).max(0.0);
                0.5 * ea / l0[i] * stretch * stretch
            })
            .sum())
    }

    /// Winch rotor kinetic energy.
    pub fn winch_kinetic_energy(&self, geom: &CdprGeometry, cables: &CableState) -> f64 {
        (0..NUM_CABLES)
            .map(|i| 0.5 * geom.winch_inertias[i] * cables.winch_rates[i].powi(2))
            .sum()
    }
}

pub fn elastic_cable_forces(
    geom: &CdprGeometry,
    model: &ElasticCableModel,
    state: &PayloadState,
    cables: &CableState,
    torques: &Vec8,
) -> Result<ElasticForces, DynamicsError> {
    let ea = geom.axial_stiffness();
    let unstretched = model.unstretched_lengths(geom, cables);
    let cv = cable_vectors(geom, &state.pose)?;
    let mut tensions = Vec8::zeros();
    let mut wrench = Vec6::zeros();
    let mut winch_accels = Vec8::zeros();
    let mut extra_mass = 0.0;
    for i in 0..NUM_CABLES {
        let l0 = unstretched[i];
        if !(l0 > 0.0) {
            return Err(DynamicsError::DegenerateCable { index: i });
        }
        let g = unit_wrench(geom, &state.pose, i, &cv[i].direction);
        let l_dot = -g.dot(&state.nu);
        let l0_dot = -geom.winch_radii[i] * cables.winch_rates[i];
        let k = ea / l0;
        let t = (k * (cv[i].length - l0) + model.damping_factor * k * (l_dot - l0_dot)).max(0.0);
        tensions[i] = t;
        wrench += g * t;
        winch_accels[i] = (torques[i] - geom.winch_radii[i] * t) / geom.winch_inertias[i];
        if model.include_cable_mass {
            extra_mass += geom.cable_density * cv[i].length / 3.0;
        }
    }
    Ok(ElasticForces { tensions, wrench, winch_accels, unstretched, extra_mass })
}

/// Stiffness-proportional damping factor giving damping ratio `zeta` on the
/// lowest payload axial mode (winches held) at `pose`.
pub fn rayleigh_damping_coefficient(
    geom: &CdprGeometry,
    params: &PayloadParams,
    pose: &Pose,
    zeta: f64,
) -> Result<f64, DynamicsError> {
    let ea = geom.axial_stiffness();
    let cv = cable_vectors(geom, pose)?;
    let mut k = Mat6::zeros();
    for (i, c) in cv.iter().enumerate() {
        let g = unit_wrench(geom, pose, i, &c.direction);
        k += g * g.transpose() * (ea / c.length);
    }
    let inertia_eig = SymmetricEigen::new(params.inertia);
    let inv_sqrt_inertia = inertia_eig.eigenvectors
        * Mat3::from_diagonal(&inertia_eig.eigenvalues.map(|x| 1.0 / x.sqrt()))
        * inertia_eig.eigenvectors.transpose();
    let m_inv_sqrt = block_diag(&(Mat3::identity() / params.mass.sqrt()), &inv_sqrt_inertia);
    let lambda_min = SymmetricEigen::new(m_inv_sqrt * k * m_inv_sqrt).eigenvalues.min();
    if !(lambda_min > 0.0) {
        return Err(DynamicsError::RankDeficient { rank: 5, sigma_min: lambda_min.max(0.0) });
    }
    Ok(2.0 * zeta / lambda_min.sqrt())
}
