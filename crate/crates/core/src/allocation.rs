//! Wrench-to-torque distribution with pretension and tension-limit clamping.
//!
//! `τ = τ_pt + Uᵀ(f - Πᵀτ_pt)` with `U = (ΠᵀΠ)⁻¹Πᵀ`. Cables whose tension
//! leaves the admissible band are pinned at the violated limit one at a time
//! (worst first), their rows removed, and the remaining cables re-solved for the
//! residual wrench.

use nalgebra::{DMatrix, DVector, SMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Mat8x6, Vec6, Vec8, NUM_CABLES};

/// Tolerance on the admissible tension band (N).
pub const TENSION_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationConfig {
    /// N
    pub pretension: f64,
    /// `[t_min, t_max]` (N).
    pub limits: [f64; 2],
    pub max_iterations: usize,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        AllocationConfig { pretension: 59.0, limits: [7.9, 3937.0], max_iterations: 8 }
    }
}

impl AllocationConfig {
    pub fn validate(&self) -> Result<(), AllocationError> {
        let [lo, hi] = self.limits;
        if !(lo <= self.pretension && self.pretension <= hi && lo < hi) {
            return Err(AllocationError::InvalidConfig(format!(
                "need t_min <= pretension <= t_max, got {lo} <= {} <= {hi}",
                self.pretension
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Winch torques (N m).
    pub torques: Vec8,
    /// Cable tensions `τ_i / r_i` (N).
    pub tensions: Vec8,
    /// Cables pinned at a limit.
    pub clamped: [bool; NUM_CABLES],
}

impl Allocation {
    pub fn clamp_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("wrench matrix rank {rank} < 6 (smallest singular value {sigma_min:.3e})")]
    RankDeficient { rank: usize, sigma_min: f64 },
    #[error("tension limits cannot be met: worst violation {worst_violation:.3e} N on cable {cable}")]
    Infeasible {
        worst_violation: f64,
        cable: usize,
        /// Last iterate with every tension saturated into the admissible band.
        saturated: Allocation,
    },
    #[error("invalid allocation config: {0}")]
    InvalidConfig(String),
}

fn pinv_dyn(pi: &DMatrix<f64>) -> Result<DMatrix<f64>, AllocationError> {
    let svd = pi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cols = pi.ncols();
    if !(smin > RANK_TOL * smax) {
        let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count();
        return Err(AllocationError::RankDeficient { rank: rank.min(cols - 1), sigma_min: smin });
    }
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let s_inv = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    Ok(v_t.transpose() * s_inv * u.transpose())
}

/// Left inverse `U = (ΠᵀΠ)⁻¹Πᵀ` via SVD, so `UΠ = 1₆`.
pub fn pseudo_inverse(pi: &Mat8x6) -> Result<SMatrix<f64, 6, 8>, AllocationError> {
    let u = pinv_dyn(&DMatrix::from_column_slice(8, 6, pi.as_slice()))?;
    Ok(SMatrix::<f64, 6, 8>::from_column_slice(u.as_slice()))
}

fn violation(t: f64, lo: f64, hi: f64) -> f64 {
    (lo - t).max(t - hi).max(0.0)
}

pub fn allocate(
    pi: &Mat8x6,
    f: &Vec6,
    cfg: &AllocationConfig,
    radii: &Vec8,
) -> Result<Allocation, AllocationError> {
    cfg.validate()?;
    let [lo, hi] = cfg.limits;
    let mut clamped = [false; NUM_CABLES];
    let mut tensions = Vec8::zeros();
    // wrench already supplied by pinned cables
    let mut pinned_wrench = Vec6::zeros();

    for iteration in 0..=cfg.max_iterations {
        let free: Vec<usize> = (0..NUM_CABLES).filter(|&i| !clamped[i]).collect();
        let pi_free = DMatrix::from_fn(free.len(), 6, |r, c| pi[(free[r], c)]);
        let u = pinv_dyn(&pi_free)?;
        let tau_pt = DVector::from_iterator(free.len(), free.iter().map(|&i| radii[i] * cfg.pretension));
        let residual = DVector::from_column_slice((f - pinned_wrench).as_slice());
        let tau = &tau_pt + u.transpose() * (residual - pi_free.transpose() * &tau_pt);
        for (k, &i) in free.iter().enumerate() {
            tensions[i] = tau[k] / radii[i];
        }

        let worst = free
            .iter()
            .map(|&i| (i, violation(tensions[i], lo, hi)))
            .filter(|&(_, v)| v > TENSION_TOL)
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            });
        let Some((cable, worst_violation)) = worst else {
            return Ok(Allocation { torques: tensions.component_mul(radii), tensions, clamped });
        };
        if iteration == cfg.max_iterations || free.len() <= 6 {
            let sat = tensions.map(|t| t.clamp(lo, hi));
            return Err(AllocationError::Infeasible {
                worst_violation,
                cable,
                saturated: Allocation { torques: sat.component_mul(radii), tensions: sat, clamped },
            });
        }
        let pinned = tensions[cable].clamp(lo, hi);
        tensions[cable] = pinned;
        clamped[cable] = true;
        pinned_wrench += pi.row(cable).transpose() * (pinned * radii[cable]);
    }
    unreachable!("loop returns on its final iteration")
}
