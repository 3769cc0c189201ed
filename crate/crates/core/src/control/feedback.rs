use crate::{Mat6, Mat7, Regressor, Vec6, Vec7};

use super::ControlError;

/// First-order low-pass SPR filter, one channel per error component:
/// `ẋ_c = -ω_c x_c + ω_c s`, `y_c = K_d x_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SprFilter {
    pub kd: Mat6,
    pub omega_c: f64,
}

/// `(P_c, Q_c)` with `P_c A_c + A_cᵀ P_c = -Q_c` and `P_c B_c = C_cᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SprCertificate {
    pub p_c: Mat6,
    pub q_c: Mat6,
}

impl SprFilter {
    /// Builds the filter and checks its SPR certificate.
    pub fn new(kd: Mat6, omega_c: f64) -> Result<Self, ControlError> {
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(ControlError::InvalidGains(format!("omega_c must be positive, got {omega_c}")));
        }
        let filter = SprFilter { kd, omega_c };
        let cert = filter.certificate();
        let a_c = Mat6::identity() * -omega_c;
        let b_c = Mat6::identity() * omega_c;
        let residual = (cert.p_c * b_c - kd.transpose()).abs().max();
        if residual > 1e-12 * kd.abs().max().max(1.0) {
            return Err(ControlError::InvalidGains(format!("P_c B_c != C_cᵀ (residual {residual:e})")));
        }
        let lyap = cert.p_c * a_c + a_c.transpose() * cert.p_c + cert.q_c;
        if lyap.abs().max() > 1e-12 * kd.abs().max().max(1.0) {
            return Err(ControlError::InvalidGains("Lyapunov equation not satisfied".into()));
        }
        if cert.q_c.symmetric_eigenvalues().min() <= 0.0 {
            return Err(ControlError::InvalidGains("K_d must be positive definite".into()));
        }
        Ok(filter)
    }

    /// `P_c = K_d / ω_c`, `Q_c = 2 K_d`.
    pub fn certificate(&self) -> SprCertificate {
        SprCertificate { p_c: self.kd / self.omega_c, q_c: self.kd * 2.0 }
    }

    pub fn output(&self, x_c: &Vec6) -> Vec6 {
        self.kd * x_c
    }

    pub fn derivative(&self, x_c: &Vec6, s: &Vec6) -> Vec6 {
        (s - x_c) * self.omega_c
    }

    /// Exact update over `dt` with `s` held constant.
    pub fn step_exact(&self, x_c: &Vec6, s: &Vec6, dt: f64) -> Vec6 {
        let decay = (-self.omega_c * dt).exp();
        s + (x_c - s) * decay
    }

    /// `½ x_cᵀ P_c x_c`.
    pub fn storage(&self, x_c: &Vec6) -> f64 {
        0.5 * x_c.dot(&(self.certificate().p_c * x_c))
    }
}

/// `dâ/dt = -Υ Wᵀ ν̃_r`.
pub fn adaptation_rate(upsilon: &Mat7, w: &Regressor, nu_tilde_r: &Vec6) -> Vec7 {
    -(upsilon * (w.transpose() * nu_tilde_r))
}

/// One explicit step of the update law.
pub fn adaptive_update(a_hat: &Vec7, w: &Regressor, nu_tilde_r: &Vec6, upsilon: &Mat7, dt: f64) -> Vec7 {
    a_hat + adaptation_rate(upsilon, w, nu_tilde_r) * dt
}
