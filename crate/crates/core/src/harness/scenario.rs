use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::trajectory::TrajectoryConfig;
use super::HarnessError;
use crate::allocation::AllocationConfig;
use crate::control::{ControllerGains, ControllerKind, ControllerOptions, CoriolisForm};
use crate::dynamics::{inertia_entries, inertia_from_entries, CdprGeometry, PayloadParams, Pose};
use crate::{Mat6, Mat7, Vec3, Vec6, Vec7};

/// Shipped configuration; mirrors [`Scenario::reference`].
pub const DEFAULT_CONFIG: &str = include_str!("../../config/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CableMode {
    Rigid,
    Elastic,
}

impl CableMode {
    pub const ALL: [CableMode; 2] = [CableMode::Rigid, CableMode::Elastic];

    pub fn name(&self) -> &'static str {
        match self {
            CableMode::Rigid => "rigid",
            CableMode::Elastic => "elastic",
        }
    }

    pub fn default_dt(&self) -> f64 {
        match self {
            CableMode::Rigid => 2e-4,
            CableMode::Elastic => 1e-4,
        }
    }
}

impl fmt::Display for CableMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CableMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rigid" => Ok(CableMode::Rigid),
            "elastic" => Ok(CableMode::Elastic),
            _ => Err(format!("unknown cable mode '{s}'; valid modes: rigid, elastic")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadConfig {
    /// kg
    pub mass: f64,
    /// `[I11, I22, I33, I12, I13, I23]` (kg m^2)
    pub inertia: [f64; 6],
    /// m/s^2
    pub gravity: f64,
}

impl PayloadConfig {
    pub fn params(&self) -> PayloadParams {
        PayloadParams { mass: self.mass, inertia: inertia_from_entries(&self.inertia), gravity: self.gravity }
    }
}

impl From<&PayloadParams> for PayloadConfig {
    fn from(p: &PayloadParams) -> Self {
        PayloadConfig { mass: p.mass, inertia: inertia_entries(&p.inertia), gravity: p.gravity }
    }
}

/// Diagonal gains for rigid cables plus the elastic-mode reductions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainConfig {
    pub lambda: [f64; 6],
    pub upsilon: [f64; 7],
    pub kd: [f64; 6],
    /// rad/s
    pub omega_c: f64,
    pub elastic_kd_divisor: f64,
    pub elastic_lambda_divisor: f64,
    /// Attitude `K_d` multiplier for the quaternion controller.
    pub quat_kd_scale: f64,
    #[serde(default)]
    pub coriolis: CoriolisForm,
}

impl GainConfig {
    pub fn reference() -> Self {
        let g = ControllerGains::reference();
        GainConfig {
            lambda: diag6(&g.lambda),
            upsilon: std::array::from_fn(|i| g.upsilon[(i, i)]),
            kd: diag6(&g.kd),
            omega_c: g.omega_c,
            elastic_kd_divisor: 5.0,
            elastic_lambda_divisor: 2.0,
            quat_kd_scale: 2.0,
            coriolis: CoriolisForm::Skew,
        }
    }

    /// Gains for `mode`, before any per-controller scaling.
    pub fn gains(&self, mode: CableMode) -> ControllerGains {
        let g = ControllerGains {
            lambda: Mat6::from_diagonal(&Vec6::from_column_slice(&self.lambda)),
            upsilon: Mat7::from_diagonal(&Vec7::from_column_slice(&self.upsilon)),
            kd: Mat6::from_diagonal(&Vec6::from_column_slice(&self.kd)),
            omega_c: self.omega_c,
        };
        match mode {
            CableMode::Rigid => g,
            CableMode::Elastic => g.reduced(self.elastic_kd_divisor, self.elastic_lambda_divisor),
        }
    }
}

fn diag6(m: &Mat6) -> [f64; 6] {
    std::array::from_fn(|i| m[(i, i)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// m
    pub position: [f64; 3],
    /// 3-2-1 Euler angles (deg).
    pub euler_deg: [f64; 3],
    /// `[ṙ; ω]` (m/s, rad/s)
    pub velocity: [f64; 6],
    /// `m̂(0) / m`; the inertia estimates start at zero.
    pub mass_estimate_factor: f64,
}

impl InitialConfig {
    pub fn reference() -> Self {
        InitialConfig {
            position: [0.0, 0.0, 0.465],
            euler_deg: [-15.0; 3],
            velocity: [0.0; 6],
            mass_estimate_factor: 0.8,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::from_euler321(
            Vec3::from_column_slice(&self.position),
            Vec3::from_column_slice(&self.euler_deg).map(f64::to_radians),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticConfig {
    /// Damping ratio of the lowest payload axial mode.
    pub damping_ratio: f64,
    pub include_cable_mass: bool,
    /// Start the cables stretched to the static allocated tensions instead of
    /// unstretched.
    pub prestretch: bool,
}

impl ElasticConfig {
    pub fn reference() -> Self {
        ElasticConfig { damping_ratio: 0.005, include_cable_mass: false, prestretch: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Steps between logged rows; defaults to 5 (rigid) and 10 (elastic).
    #[serde(default)]
    pub log_interval: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub controller: ControllerKind,
    pub cables: CableMode,
    /// s; defaults to 2e-4 (rigid) and 1e-4 (elastic).
    #[serde(default)]
    pub dt: Option<f64>,
    /// s
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Abort when `‖â‖` exceeds this bound.
    pub max_estimate_norm: f64,
    pub geometry: CdprGeometry,
    pub payload: PayloadConfig,
    pub gains: GainConfig,
    pub allocation: AllocationConfig,
    pub initial: InitialConfig,
    pub trajectory: TrajectoryConfig,
    pub elastic: ElasticConfig,
    pub output: OutputConfig,
}

impl Scenario {
    /// Rigid cables, DCM controller, 10 s.
    pub fn reference() -> Self {
        Scenario {
            controller: ControllerKind::So3,
            cables: CableMode::Rigid,
            dt: None,
            duration: 10.0,
            seed: 0,
            max_estimate_norm: 1e6,
            geometry: CdprGeometry::reference(),
            payload: PayloadConfig::from(&PayloadParams::reference()),
            gains: GainConfig::reference(),
            allocation: AllocationConfig::default(),
            initial: InitialConfig::reference(),
            trajectory: TrajectoryConfig::reference(),
            elastic: ElasticConfig::reference(),
            output: OutputConfig { log_interval: None },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("shipped config parses")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn with(mut self, controller: ControllerKind, cables: CableMode) -> Self {
        self.controller = controller;
        self.cables = cables;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(self.cables.default_dt())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt()).round() as usize
    }

    pub fn log_interval(&self) -> usize {
        self.output.log_interval.unwrap_or(match self.cables {
            CableMode::Rigid => 5,
            CableMode::Elastic => 10,
        })
    }

    pub fn payload_params(&self) -> PayloadParams {
        self.payload.params()
    }

    pub fn controller_gains(&self) -> ControllerGains {
        self.gains.gains(self.cables)
    }

    pub fn controller_options(&self) -> ControllerOptions {
        ControllerOptions {
            coriolis: self.gains.coriolis,
            quat_kd_scale: self.gains.quat_kd_scale,
            gravity: self.payload.gravity,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let dt = self.dt();
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("dt must be positive, got {dt}"));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be non-negative, got {}", self.duration));
        }
        if self.duration > 0.0 && self.duration < dt {
            return bad(format!("duration {} is shorter than dt {dt}", self.duration));
        }
        if self.log_interval() == 0 {
            return bad("log_interval must be at least 1".into());
        }
        if !(self.max_estimate_norm > 0.0) {
            return bad("max_estimate_norm must be positive".into());
        }
        if !(self.gains.elastic_kd_divisor > 0.0 && self.gains.elastic_lambda_divisor > 0.0 && self.gains.quat_kd_scale > 0.0) {
            return bad("gain divisors and scales must be positive".into());
        }
        if !(self.elastic.damping_ratio >= 0.0) {
            return bad("damping_ratio must be non-negative".into());
        }
        self.geometry.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.payload_params().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.allocation.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.controller_gains().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self::reference()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_reference() {
        let shipped = Scenario::default_config();
        let reference = Scenario::reference();
        // float literals in the file may differ in the last ulp
        assert_eq!(shipped.controller, reference.controller);
        assert_eq!(shipped.cables, reference.cables);
        assert_eq!(shipped.geometry.winch_radii, reference.geometry.winch_radii);
        for i in 0..8 {
            assert!((shipped.geometry.winch_positions[i] - reference.geometry.winch_positions[i]).norm() < 1e-12);
            assert!((shipped.geometry.attachment_points[i] - reference.geometry.attachment_points[i]).norm() < 1e-12);
        }
        assert_eq!(shipped.payload, reference.payload);
        assert_eq!(shipped.allocation, reference.allocation);
        assert_eq!(shipped.initial, reference.initial);
        assert_eq!(shipped.elastic, reference.elastic);
        let (a, b) = (&shipped.gains, &reference.gains);
        assert_eq!((a.lambda, a.upsilon), (b.lambda, b.upsilon));
        assert!(a.kd.iter().zip(b.kd.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
        assert!((a.omega_c - b.omega_c).abs() < 1e-12);
        assert!((shipped.trajectory.position_rate - reference.trajectory.position_rate).abs() < 1e-12);
        assert!((shipped.trajectory.attitude_rate - reference.trajectory.attitude_rate).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let sc = Scenario::reference();
        assert_eq!(Scenario::from_toml(&sc.to_toml()).unwrap(), sc);
    }

    #[test]
    fn elastic_gains_are_reduced() {
        let sc = Scenario::reference().with(ControllerKind::So3, CableMode::Elastic);
        let g = sc.controller_gains();
        assert_eq!(g.kd[(0, 0)], 25.0);
        assert_eq!(g.lambda[(0, 0)], 5.0);
        assert_eq!(sc.dt(), 1e-4);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut sc = Scenario::reference();
        sc.dt = Some(0.0);
        assert!(sc.validate().is_err());
        let mut sc = Scenario::reference();
        sc.duration = 1e-4;
        assert!(sc.validate().is_err());
        assert!(Scenario::from_toml("controller = \"so3\"").is_err());
        let text = DEFAULT_CONFIG.replace("controller = \"so3\"", "controller = \"bogus\"");
        assert!(Scenario::from_toml(&text).is_err());
    }

    #[test]
    fn initial_pose() {
        let pose = InitialConfig::reference().pose();
        assert_eq!(pose.r, Vec3::new(0.0, 0.0, 0.465));
        let e = crate::attitude::euler321_from_dcm(&pose.c, 1e-3).unwrap();
        assert!((e - Vec3::repeat(-15f64.to_radians())).norm() < 1e-14);
    }
}
