//! Adaptive passivity-based pose tracking.
//!
//! The wrench is `f = W(ν_r, ν̇_r, ω) â - P⁻ᵀ y_c`, where `y_c` is the output
//! of an SPR filter driven by `s` and `â` follows `dâ/dt = -Υ Wᵀ ν̃_r`.

mod error;
mod feedback;
mod regressor;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{AttitudeError, ParamKind};
use crate::dynamics::{PayloadParams, PayloadState};
use crate::{Mat3, Mat6, Mat7, Vec6, Vec7};

pub use error::{
    error_block_quaternion, error_block_simplified, error_block_so3, error_block_unconstrained,
    DesiredPose, ErrorBlock, QUAT_ETA_MIN, SO3_TRACE_MARGIN,
};
pub(crate) use error::wrap_angle;
pub use feedback::{adaptation_rate, adaptive_update, SprCertificate, SprFilter};
pub use regressor::{feedforward, inertia_action, regressor, CoriolisForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Attitude(#[from] AttitudeError),
    #[error("singular {what} ({value:.3e})")]
    Singular { what: &'static str, value: f64 },
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerKind {
    #[serde(rename = "euler321")]
    Euler321,
    #[serde(rename = "rotvec")]
    RotationVector,
    #[serde(rename = "mrp")]
    Mrp,
    #[serde(rename = "quat")]
    Quaternion,
    #[serde(rename = "so3")]
    So3,
    /// Euler sequence with `ω ≈ q̇` everywhere.
    #[serde(rename = "simplified-euler")]
    SimplifiedEuler,
    /// Euler sequence with `ω ≈ q̇` in the feedback path only.
    #[serde(rename = "simplified-fb-euler")]
    SimplifiedFbEuler,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 7] = [
        ControllerKind::Euler321,
        ControllerKind::RotationVector,
        ControllerKind::Mrp,
        ControllerKind::Quaternion,
        ControllerKind::So3,
        ControllerKind::SimplifiedEuler,
        ControllerKind::SimplifiedFbEuler,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Euler321 => "euler321",
            ControllerKind::RotationVector => "rotvec",
            ControllerKind::Mrp => "mrp",
            ControllerKind::Quaternion => "quat",
            ControllerKind::So3 => "so3",
            ControllerKind::SimplifiedEuler => "simplified-euler",
            ControllerKind::SimplifiedFbEuler => "simplified-fb-euler",
        }
    }

    pub fn is_simplified(&self) -> bool {
        matches!(self, ControllerKind::SimplifiedEuler | ControllerKind::SimplifiedFbEuler)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ControllerKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = ControllerKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown controller '{s}'; valid names: {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub lambda: Mat6,
    pub upsilon: Mat7,
    pub kd: Mat6,
    /// rad/s
    pub omega_c: f64,
}

impl ControllerGains {
    /// Gains used with rigid cables.
    pub fn reference() -> Self {
        ControllerGains {
            lambda: Mat6::identity() * 10.0,
            upsilon: Mat7::identity() * 5.0,
            kd: Mat6::from_diagonal(&Vec6::new(125.0, 125.0, 125.0, 50.0 / 3.0, 50.0 / 3.0, 50.0 / 3.0)),
            omega_c: 2.0 * std::f64::consts::PI,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        fn spd<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>, name: &str, strict: bool) -> Result<(), ControlError>
        where
            nalgebra::Const<N>: nalgebra::DimMin<nalgebra::Const<N>, Output = nalgebra::Const<N>>
                + nalgebra::DimSub<nalgebra::U1>,
            nalgebra::DefaultAllocator: nalgebra::allocator::Allocator<<nalgebra::Const<N> as nalgebra::DimSub<nalgebra::U1>>::Output>,
        {
            if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
                return Err(ControlError::InvalidGains(format!("{name} must be symmetric")));
            }
            let min = m.symmetric_eigenvalues().min();
            if min < 0.0 || (strict && min <= 0.0) || !min.is_finite() {
                return Err(ControlError::InvalidGains(format!("{name} must be positive definite")));
            }
            Ok(())
        }
        spd(&self.lambda, "Lambda", true)?;
        // Υ = 0 is allowed: it freezes the estimate
        spd(&self.upsilon, "Upsilon", false)?;
        spd(&self.kd, "K_d", true)?;
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(ControlError::InvalidGains("omega_c must be positive".into()));
        }
        Ok(())
    }

    /// Gains with `K_d` divided by `kd_div` and `Λ` by `lambda_div`.
    pub fn reduced(&self, kd_div: f64, lambda_div: f64) -> Self {
        ControllerGains { lambda: self.lambda / lambda_div, kd: self.kd / kd_div, ..self.clone() }
    }
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerOptions {
    pub coriolis: CoriolisForm,
    /// Multiplies the attitude block of `K_d` for the quaternion controller.
    pub quat_kd_scale: f64,
    pub gravity: f64,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        ControllerOptions { coriolis: CoriolisForm::Skew, quat_kd_scale: 2.0, gravity: crate::GRAVITY }
    }
}

/// Integrated controller states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub a_hat: Vec7,
    pub x_c: Vec6,
}

impl ControllerState {
    /// Zero filter state and an estimate with the mass scaled by
    /// `mass_factor` and zero inertia.
    pub fn initial(params: &PayloadParams, mass_factor: f64) -> Self {
        let mut a_hat = Vec7::zeros();
        a_hat[0] = mass_factor * params.mass;
        ControllerState { a_hat, x_c: Vec6::zeros() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    /// Commanded wrench `f = f_ff + f_fb`.
    pub wrench: Vec6,
    pub f_ff: Vec6,
    pub f_fb: Vec6,
    /// Block driving the feedforward and adaptation.
    pub block: ErrorBlock,
    /// `s` fed to the SPR filter.
    pub s: Vec6,
    /// `P` used to map the filter output to a wrench.
    pub p_fb: Mat6,
    pub y_c: Vec6,
    pub a_hat_dot: Vec7,
    pub x_c_dot: Vec6,
    /// `sᵀ f̄_fb` with `f̄_fb = Pᵀ f_fb`.
    pub passivity_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Controller {
    pub kind: ControllerKind,
    pub gains: ControllerGains,
    pub options: ControllerOptions,
    filter: SprFilter,
    upsilon_inv: Option<Mat7>,
}

impl Controller {
    /// Validates gains and applies the quaternion `K_d` scaling.
    pub fn new(kind: ControllerKind, gains: ControllerGains, options: ControllerOptions) -> Result<Self, ControlError> {
        gains.validate()?;
        let mut gains = gains;
        if kind == ControllerKind::Quaternion {
            let att = gains.kd.fixed_view::<3, 3>(3, 3) * options.quat_kd_scale;
            gains.kd.fixed_view_mut::<3, 3>(3, 3).copy_from(&att);
            gains.validate()?;
        }
        let filter = SprFilter::new(gains.kd, gains.omega_c)?;
        let upsilon_inv = gains.upsilon.try_inverse();
        Ok(Controller { kind, gains, options, filter, upsilon_inv })
    }

    pub fn filter(&self) -> &SprFilter {
        &self.filter
    }

    fn block(&self, kind: ControllerKind, state: &PayloadState, desired: &DesiredPose) -> Result<ErrorBlock, ControlError> {
        let l = &self.gains.lambda;
        match kind {
            ControllerKind::Euler321 | ControllerKind::SimplifiedFbEuler => {
                error_block_unconstrained(ParamKind::Euler321, state, desired, l)
            }
            ControllerKind::RotationVector => error_block_unconstrained(ParamKind::RotationVector, state, desired, l),
            ControllerKind::Mrp => error_block_unconstrained(ParamKind::Mrp, state, desired, l),
            ControllerKind::Quaternion => error_block_quaternion(state, desired, l),
            ControllerKind::So3 => error_block_so3(state, desired, l),
            ControllerKind::SimplifiedEuler => error_block_simplified(state, desired, l),
        }
    }

    pub fn evaluate(
        &self,
        state: &PayloadState,
        desired: &DesiredPose,
        cs: &ControllerState,
    ) -> Result<ControlOutput, ControlError> {
        let block = self.block(self.kind, state, desired)?;
        let (s, p_fb) = if self.kind == ControllerKind::SimplifiedFbEuler {
            let fb = error_block_simplified(state, desired, &self.gains.lambda)?;
            (fb.s, fb.p)
        } else {
            (block.s, block.p)
        };

        let w = regressor(&block.nu_r, &block.nu_r_dot, &state.omega(), self.options.gravity, self.options.coriolis);
        let f_ff = w * cs.a_hat;
        let y_c = self.filter.output(&cs.x_c);
        let p_t_inv = p_fb
            .transpose()
            .try_inverse()
            .ok_or(ControlError::Singular { what: "P", value: p_fb.determinant() })?;
        let f_fb = -(p_t_inv * y_c);
        Ok(ControlOutput {
            wrench: f_ff + f_fb,
            f_ff,
            f_fb,
            a_hat_dot: adaptation_rate(&self.gains.upsilon, &w, &block.nu_tilde_r),
            x_c_dot: self.filter.derivative(&cs.x_c, &s),
            passivity_rate: s.dot(&(p_fb.transpose() * f_fb)),
            block,
            s,
            p_fb,
            y_c,
        })
    }

    /// `V₁ = ½ ν̃_rᵀ M ν̃_r + ½ ãᵀ Υ⁻¹ ã` and `V₂ = V₁ + ½ x_cᵀ P_c x_c`. With a
    /// singular `Υ` the estimate is frozen and its term is omitted.
    pub fn storage(&self, truth: &PayloadParams, out: &ControlOutput, cs: &ControllerState) -> (f64, f64) {
        let nut = &out.block.nu_tilde_r;
        let mut v1 = 0.5 * nut.dot(&(truth.mass_matrix() * nut));
        if let Some(ui) = &self.upsilon_inv {
            let a_tilde = cs.a_hat - truth.parameter_vector();
            v1 += 0.5 * a_tilde.dot(&(ui * a_tilde));
        }
        (v1, v1 + self.filter.storage(&cs.x_c))
    }
}

/// Attitude block of `K_d`.
pub fn attitude_gain(kd: &Mat6) -> Mat3 {
    kd.fixed_view::<3, 3>(3, 3).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{task_space_dynamics, Pose};
    use crate::{stack, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctrl(kind: ControllerKind) -> Controller {
        Controller::new(kind, ControllerGains::reference(), ControllerOptions::default()).unwrap()
    }

    fn truth_state(a: &PayloadParams) -> ControllerState {
        ControllerState { a_hat: a.parameter_vector(), x_c: Vec6::zeros() }
    }

    #[test]
    fn names_round_trip() {
        for k in ControllerKind::ALL {
            assert_eq!(k.name().parse::<ControllerKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        let err = "bogus".parse::<ControllerKind>().unwrap_err();
        assert!(err.contains("so3") && err.contains("simplified-fb-euler"));
    }

    #[test]
    fn hover_with_true_parameters_is_gravity_compensation() {
        let p = PayloadParams::reference();
        let d = DesiredPose::stationary(Vec3::new(0.0, 0.0, 0.465), Vec3::new(0.1, -0.05, 0.2));
        let state = PayloadState::at_rest(Pose::new(d.r, d.dcm()));
        for k in ControllerKind::ALL {
            let out = ctrl(k).evaluate(&state, &d, &truth_state(&p)).unwrap();
            assert!((out.wrench - p.gravity_wrench()).norm() < 1e-12, "{k}");
        }
    }

    #[test]
    fn perfect_tracking_feedforward_reproduces_plant() {
        // with zero error and â = a, the commanded wrench makes ν̇ = ν̇_d
        let p = PayloadParams::reference();
        let d = DesiredPose {
            r: Vec3::new(0.1, 0.0, 0.5),
            r_dot: Vec3::new(0.0, 0.2, 0.0),
            r_ddot: Vec3::new(-0.3, 0.0, 0.1),
            euler: Vec3::new(0.1, 0.2, -0.1),
            euler_dot: Vec3::new(0.2, -0.3, 0.4),
            euler_ddot: Vec3::new(0.5, 0.1, -0.2),
        };
        let (w, w_dot) = d.angular_velocity().unwrap();
        let state = PayloadState { pose: Pose::new(d.r, d.dcm()), nu: stack(&d.r_dot, &w) };
        for k in [ControllerKind::Euler321, ControllerKind::RotationVector, ControllerKind::Mrp, ControllerKind::Quaternion, ControllerKind::So3] {
            let out = ctrl(k).evaluate(&state, &d, &truth_state(&p)).unwrap();
            let nu_dot = task_space_dynamics(&p, &state, &out.wrench);
            assert!((nu_dot - stack(&d.r_ddot, &w_dot)).norm() < 1e-9, "{k}");
        }
    }

    #[test]
    fn wrench_matches_independent_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = ctrl(ControllerKind::So3);
        for _ in 0..100 {
            let d = DesiredPose::stationary(Vec3::new(0.0, 0.0, 0.5), Vec3::from_fn(|_, _| rng.gen_range(-0.3..0.3)));
            let pose = Pose::new(d.r + Vec3::from_fn(|_, _| rng.gen_range(-0.05..0.05)), d.dcm())
                .perturbed(&Vec3::zeros(), &Vec3::from_fn(|_, _| rng.gen_range(-0.3..0.3)));
            let state = PayloadState { pose, nu: Vec6::from_fn(|_, _| rng.gen_range(-1.0..1.0)) };
            let cs = ControllerState {
                a_hat: Vec7::from_fn(|_, _| rng.gen_range(0.0..1.0)),
                x_c: Vec6::from_fn(|_, _| rng.gen_range(-1.0..1.0)),
            };
            let out = c.evaluate(&state, &d, &cs).unwrap();
            let b = error_block_so3(&state, &d, &c.gains.lambda).unwrap();
            let f_d = feedforward(&cs.a_hat, &b.nu_r, &b.nu_r_dot, &state.omega(), crate::GRAVITY, CoriolisForm::Skew);
            let f_fb = -b.p.transpose().lu().solve(&(c.gains.kd * cs.x_c)).unwrap();
            assert!((out.wrench - (f_d + f_fb)).norm() < 1e-10 * (1.0 + out.wrench.norm()));
            // f̄_fb = -y_c
            assert!((out.passivity_rate + out.s.dot(&out.y_c)).abs() < 1e-9);
        }
    }

    #[test]
    fn quaternion_doubles_attitude_gain_only() {
        let q = ctrl(ControllerKind::Quaternion);
        let base = ControllerGains::reference();
        assert_eq!(attitude_gain(&q.gains.kd), attitude_gain(&base.kd) * 2.0);
        assert_eq!(q.gains.kd.fixed_view::<3, 3>(0, 0), base.kd.fixed_view::<3, 3>(0, 0));
    }

    /// Wrench of each controller at a small attitude error, with the filter
    /// at its DC steady state `x_c = s`.
    fn small_angle_wrenches(scale: f64) -> Vec<(ControllerKind, Vec6, Vec6)> {
        let p = PayloadParams::reference();
        let d = DesiredPose::stationary(Vec3::new(0.0, 0.0, 0.465), Vec3::zeros());
        let pose = Pose::new(d.r + Vec3::new(1e-3, -2e-3, 1e-3), d.dcm())
            .perturbed(&Vec3::zeros(), &Vec3::new(4e-3, -3e-3, 5e-3));
        let state = PayloadState { pose, nu: Vec6::new(0.01, 0.0, -0.01, 0.02, -0.01, 0.015) };
        let opts = ControllerOptions { quat_kd_scale: scale, ..Default::default() };
        [ControllerKind::Euler321, ControllerKind::RotationVector, ControllerKind::Mrp, ControllerKind::So3, ControllerKind::Quaternion]
            .into_iter()
            .map(|k| {
                let c = Controller::new(k, ControllerGains::reference(), opts.clone()).unwrap();
                let probe = c.evaluate(&state, &d, &truth_state(&p)).unwrap();
                let cs = ControllerState { a_hat: p.parameter_vector(), x_c: probe.s };
                let out = c.evaluate(&state, &d, &cs).unwrap();
                (k, out.wrench, out.f_fb)
            })
            .collect()
    }

    fn attitude_fb_ratio(w: &[(ControllerKind, Vec6, Vec6)], k: ControllerKind) -> f64 {
        let euler = crate::bottom(&w[0].2);
        let other = w.iter().find(|x| x.0 == k).unwrap();
        crate::bottom(&other.2).dot(&euler) / euler.norm_squared()
    }

    #[test]
    fn small_angle_wrenches_agree_for_gain_matched_parameterizations() {
        let w = small_angle_wrenches(2.0);
        let reference = w[0].1;
        for (k, f, _) in w.iter().filter(|x| matches!(x.0, ControllerKind::RotationVector | ControllerKind::So3)) {
            let rel = (f - reference).norm() / reference.norm();
            assert!(rel < 0.01, "{k}: {rel}");
        }
        assert!((attitude_fb_ratio(&w, ControllerKind::RotationVector) - 1.0).abs() < 0.01);
        assert!((attitude_fb_ratio(&w, ControllerKind::So3) - 1.0).abs() < 0.01);
    }

    #[test]
    fn small_angle_feedback_scaling_of_quaternion_and_mrp() {
        // δε ≈ φ/2 with P⁻ᵀ ≈ ½, and σ ≈ φ/4 with S⁻ᵀ ≈ ¼: the same K_d gives
        // a quarter (quaternion) and a sixteenth (MRP) of the Euler feedback
        let doubled = small_angle_wrenches(2.0);
        let q = attitude_fb_ratio(&doubled, ControllerKind::Quaternion);
        assert!((q - 0.5).abs() < 0.01, "{q}");
        let m = attitude_fb_ratio(&doubled, ControllerKind::Mrp);
        assert!((m - 1.0 / 16.0).abs() < 0.01, "{m}");
        let quadrupled = small_angle_wrenches(4.0);
        let q4 = attitude_fb_ratio(&quadrupled, ControllerKind::Quaternion);
        assert!((q4 - 1.0).abs() < 0.01, "{q4}");
    }

    #[test]
    fn simplified_variants_match_full_euler_at_zero_attitude() {
        let p = PayloadParams::reference();
        let d = DesiredPose::stationary(Vec3::new(0.0, 0.0, 0.465), Vec3::zeros());
        let state = PayloadState {
            pose: Pose::new(d.r + Vec3::new(0.01, 0.0, -0.02), d.dcm()),
            nu: Vec6::new(0.1, -0.2, 0.05, 0.0, 0.0, 0.0),
        };
        let cs = ControllerState { a_hat: p.parameter_vector() * 0.9, x_c: Vec6::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6) };
        let full = ctrl(ControllerKind::Euler321).evaluate(&state, &d, &cs).unwrap();
        for k in [ControllerKind::SimplifiedEuler, ControllerKind::SimplifiedFbEuler] {
            let out = ctrl(k).evaluate(&state, &d, &cs).unwrap();
            assert!((out.wrench - full.wrench).norm() < 1e-12, "{k}");
            assert!((out.a_hat_dot - full.a_hat_dot).norm() < 1e-12, "{k}");
        }
    }

    #[test]
    fn simplified_variants_differ_away_from_zero() {
        let p = PayloadParams::reference();
        let d = DesiredPose {
            euler_dot: Vec3::new(0.2, 0.1, -0.3),
            ..DesiredPose::stationary(Vec3::new(0.0, 0.0, 0.465), Vec3::new(0.0, 30f64.to_radians(), 0.0))
        };
        let state = PayloadState {
            pose: Pose::from_euler321(d.r, Vec3::new(0.05, 0.5, -0.05)),
            nu: Vec6::new(0.0, 0.0, 0.0, 0.3, -0.2, 0.1),
        };
        let cs = ControllerState { a_hat: p.parameter_vector(), x_c: Vec6::new(0.0, 0.0, 0.0, 0.4, 0.5, 0.6) };
        let full = ctrl(ControllerKind::Euler321).evaluate(&state, &d, &cs).unwrap();
        let simp = ctrl(ControllerKind::SimplifiedEuler).evaluate(&state, &d, &cs).unwrap();
        let fb = ctrl(ControllerKind::SimplifiedFbEuler).evaluate(&state, &d, &cs).unwrap();
        assert!((full.wrench - simp.wrench).norm() > 1e-3);
        assert!((full.wrench - fb.wrench).norm() > 1e-3);
        assert!((simp.a_hat_dot - fb.a_hat_dot).norm() > 1e-6);
        // the fb-only variant keeps the correct feedforward and adaptation
        assert_eq!(fb.f_ff, full.f_ff);
        assert_eq!(fb.a_hat_dot, full.a_hat_dot);
    }

    #[test]
    fn storage_functions() {
        let p = PayloadParams::reference();
        let c = ctrl(ControllerKind::So3);
        let d = DesiredPose::stationary(Vec3::new(0.0, 0.0, 0.465), Vec3::zeros());
        let state = PayloadState::at_rest(Pose::new(d.r, d.dcm()));
        let cs = truth_state(&p);
        let out = c.evaluate(&state, &d, &cs).unwrap();
        assert_eq!(c.storage(&p, &out, &cs), (0.0, 0.0));
        let cs = ControllerState::initial(&p, 0.8);
        let (v1, v2) = c.storage(&p, &out, &cs);
        let a_t = cs.a_hat - p.parameter_vector();
        assert!((v1 - 0.5 * a_t.norm_squared() / 5.0).abs() < 1e-12);
        assert_eq!(v1, v2);
    }

    #[test]
    fn rejects_invalid_gains() {
        let mut g = ControllerGains::reference();
        g.lambda[(0, 1)] = 1.0;
        assert!(Controller::new(ControllerKind::So3, g, ControllerOptions::default()).is_err());
        let g = ControllerGains { omega_c: -1.0, ..ControllerGains::reference() };
        assert!(g.validate().is_err());
        let g = ControllerGains { upsilon: Mat7::zeros(), ..ControllerGains::reference() };
        assert!(g.validate().is_ok());
    }
}
