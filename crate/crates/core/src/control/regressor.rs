use serde::{Deserialize, Serialize};

use crate::attitude::cross;
use crate::dynamics::inertia_from_entries;
use crate::{bottom, e3, stack, top, Regressor, Vec3, Vec7};

/// Factorization of the gyroscopic term used inside the feedforward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoriolisForm {
    /// `D(ν) = blkdiag(0, -(I_p ω)^×)`, skew-symmetric, so `Ṁ - 2D` is skew.
    #[default]
    Skew,
    /// `D(ν) = blkdiag(0, ω^× I_p)`, as printed alongside the feedforward.
    OmegaCrossI,
}

/// `L(v)` with `L(v) [I11, I22, I33, I12, I13, I23]ᵀ = I v`.
pub fn inertia_action(v: &Vec3) -> nalgebra::SMatrix<f64, 3, 6> {
    nalgebra::SMatrix::<f64, 3, 6>::from_row_slice(&[
        v.x, 0.0, 0.0, v.y, v.z, 0.0, //
        0.0, v.y, 0.0, v.x, 0.0, v.z, //
        0.0, 0.0, v.z, 0.0, v.x, v.y,
    ])
}

/// `W(ν_r, ν̇_r, ω)` with `W a = f_d(a)`; columns follow
/// `[m, I11, I22, I33, I12, I13, I23]`.
pub fn regressor(
    nu_r: &crate::Vec6,
    nu_r_dot: &crate::Vec6,
    omega: &Vec3,
    gravity: f64,
    form: CoriolisForm,
) -> Regressor {
    let mut w = Regressor::zeros();
    let lin = top(nu_r_dot) + e3() * gravity;
    w.fixed_view_mut::<3, 1>(0, 0).copy_from(&lin);
    let omega_r = bottom(nu_r);
    let alpha_r = bottom(nu_r_dot);
    let rot = match form {
        CoriolisForm::Skew => inertia_action(&alpha_r) + cross(&omega_r) * inertia_action(omega),
        CoriolisForm::OmegaCrossI => {
            inertia_action(&alpha_r) + cross(omega) * inertia_action(&omega_r)
        }
    };
    w.fixed_view_mut::<3, 6>(3, 1).copy_from(&rot);
    w
}

/// Direct evaluation of `f_d = M ν̇_r + D(ν) ν_r + g` for parameters `a`.
pub fn feedforward(
    a: &Vec7,
    nu_r: &crate::Vec6,
    nu_r_dot: &crate::Vec6,
    omega: &Vec3,
    gravity: f64,
    form: CoriolisForm,
) -> crate::Vec6 {
    let m = a[0];
    let inertia = inertia_from_entries(&[a[1], a[2], a[3], a[4], a[5], a[6]]);
    let omega_r = bottom(nu_r);
    let gyro = match form {
        CoriolisForm::Skew => -cross(&(inertia * omega)) * omega_r,
        CoriolisForm::OmegaCrossI => cross(omega) * inertia * omega_r,
    };
    stack(
        &((top(nu_r_dot) + e3() * gravity) * m),
        &(inertia * bottom(nu_r_dot) + gyro),
    )
}
