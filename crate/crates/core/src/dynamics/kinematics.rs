//! Inverse kinematics (cable vectors, wrench matrix) and Gauss-Newton
//! forward kinematics from measured cable lengths.

use nalgebra::{SMatrix, SVector};

use super::{CdprGeometry, DynamicsError, Pose};
use crate::attitude::cross;
use crate::{stack, Mat8x6, Vec3, Vec6, Vec8, NUM_CABLES};

/// Forward kinematics stops once the Gauss-Newton step norm drops below this.
pub const FK_STEP_TOL: f64 = 1e-10;
pub const FK_MAX_ITERATIONS: usize = 50;

/// Relative singular-value threshold used for rank decisions.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableVector {
    /// Straight-line length from attachment to winch (m).
    pub length: f64,
    /// Unit direction from the attachment toward the winch, inertial frame.
    pub direction: Vec3,
}

pub fn cable_vectors(
    geom: &CdprGeometry,
    pose: &Pose,
) -> Result<[CableVector; NUM_CABLES], DynamicsError> {
    let ct = pose.c.matrix().transpose();
    let mut out = [CableVector { length: 0.0, direction: Vec3::zeros() }; NUM_CABLES];
    for (i, cv) in out.iter_mut().enumerate() {
        let span = geom.winch_positions[i] - (pose.r + ct * geom.attachment_points[i]);
        let length = span.norm();
        if !(length > 0.0) {
            return Err(DynamicsError::DegenerateCable { index: i });
        }
        *cv = CableVector { length, direction: span / length };
    }
    Ok(out)
}

pub fn cable_lengths(geom: &CdprGeometry, pose: &Pose) -> Result<Vec8, DynamicsError> {
    let cables = cable_vectors(geom, pose)?;
    Ok(Vec8::from_fn(|i, _| cables[i].length))
}

/// Unit wrench of cable `i`: `[u_i; b_i^× C_pa u_i]`, i.e. the payload
/// wrench per newton of tension.
pub(crate) fn unit_wrench(geom: &CdprGeometry, pose: &Pose, i: usize, u: &Vec3) -> Vec6 {
    stack(u, &(cross(&geom.attachment_points[i]) * (pose.c.matrix() * u)))
}

/// `Π(ρ)` without the rank check. Row `i` is `(1/r_i) [u_iᵀ, (b_i^× C_pa u_i)ᵀ]`,
/// so `θ̇ = Π ν` with winch angles increasing as cable is reeled in, and a
/// winch torque vector `τ` produces the payload wrench `Πᵀ τ`.
pub fn wrench_matrix_unchecked(geom: &CdprGeometry, pose: &Pose) -> Result<Mat8x6, DynamicsError> {
    let cables = cable_vectors(geom, pose)?;
    let mut pi = Mat8x6::zeros();
    for (i, cv) in cables.iter().enumerate() {
        let w = unit_wrench(geom, pose, i, &cv.direction) / geom.winch_radii[i];
        pi.row_mut(i).copy_from(&w.transpose());
    }
    Ok(pi)
}

/// `Π(ρ)`, rejecting poses where it has lost rank (outside the
/// wrench-feasible workspace).
pub fn wrench_matrix(geom: &CdprGeometry, pose: &Pose) -> Result<Mat8x6, DynamicsError> {
    let pi = wrench_matrix_unchecked(geom, pose)?;
    check_rank(&pi)?;
    Ok(pi)
}

pub(crate) fn check_rank(m: &Mat8x6) -> Result<(), DynamicsError> {
    let sv = m.svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(min > RANK_TOL * max.max(1e-300)) {
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * max).count();
        return Err(DynamicsError::RankDeficient { rank, sigma_min: min });
    }
    Ok(())
}

/// Maps winch angles to the cable lengths a rigid, inextensible cable would
/// have: `l_i = l_i(0) - r_i θ_i`, where `l_i(0)` is the length at the
/// configuration that defines `θ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WinchDatum {
    pub lengths: Vec8,
    pub radii: Vec8,
}

impl WinchDatum {
    pub fn at_pose(geom: &CdprGeometry, pose: &Pose) -> Result<Self, DynamicsError> {
        Ok(WinchDatum { lengths: cable_lengths(geom, pose)?, radii: geom.radii() })
    }

    pub fn lengths(&self, winch_angles: &Vec8) -> Vec8 {
        self.lengths - self.radii.component_mul(winch_angles)
    }

    pub fn angles(&self, lengths: &Vec8) -> Vec8 {
        (self.lengths - lengths).component_div(&self.radii)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkSolution {
    pub pose: Pose,
    /// `sqrt(mean_i (l_i(pose) - l_i)^2)` at the solution (m).
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Gauss-Newton least-squares pose matching the given cable lengths.
///
/// The attitude is updated multiplicatively, `C ← exp(-δθ^×) C`, so the
/// iterate never leaves SO(3).
pub fn forward_kinematics(
    geom: &CdprGeometry,
    lengths: &Vec8,
    initial_guess: &Pose,
) -> Result<FkSolution, DynamicsError> {
    let mut pose = *initial_guess;
    for iter in 1..=FK_MAX_ITERATIONS {
        let cables = cable_vectors(geom, &pose)?;
        let mut jac = SMatrix::<f64, NUM_CABLES, 6>::zeros();
        let mut residual = SVector::<f64, NUM_CABLES>::zeros();
        for (i, cv) in cables.iter().enumerate() {
            // ∂l_i/∂[δr; δθ] = -[u_iᵀ, (b_i^× C u_i)ᵀ]
            jac.row_mut(i).copy_from(&(-unit_wrench(geom, &pose, i, &cv.direction)).transpose());
            residual[i] = cv.length - lengths[i];
        }
        check_rank(&jac)?;
        let step = jac
            .svd(true, true)
            .solve(&(-residual), 0.0)
            .map_err(|e| DynamicsError::InvalidGeometry(e.to_string()))?;
        let step = Vec6::from_column_slice(step.as_slice());
        pose = pose.perturbed(&crate::top(&step), &crate::bottom(&step));
        if step.norm() < FK_STEP_TOL {
            pose.c = pose.c.reorthonormalize();
            let residual_rms = rms(&(cable_lengths(geom, &pose)? - lengths));
            return Ok(FkSolution { pose, residual_rms, iterations: iter });
        }
    }
    let residual_rms = rms(&(cable_lengths(geom, &pose)? - lengths));
    Err(DynamicsError::FkNotConverged { iterations: FK_MAX_ITERATIONS, residual_rms })
}

fn rms(v: &Vec8) -> f64 {
    (v.norm_squared() / v.len() as f64).sqrt()
}
