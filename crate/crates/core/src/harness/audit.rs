//! Plant-only conservation audits.

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::allocation::allocate;
use crate::attitude::{cross, Dcm};
use crate::dynamics::{
    cable_lengths, elastic_cable_forces, task_space_dynamics, wrench_matrix, CableState,
    DynamicsError, ElasticCableModel, PayloadParams, PayloadState, Pose,
};
use crate::{Mat3, Vec3, Vec6, Vec8};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub name: String,
    /// Largest `|x(t) - x(0)| / |x(0)|` over the run.
    pub max_relative_drift: f64,
    pub initial_value: f64,
    pub duration: f64,
    pub dt: f64,
}

#[derive(Clone, Copy)]
struct Body {
    r: Vec3,
    c: Mat3,
    nu: Vec6,
    theta: Vec8,
    theta_dot: Vec8,
    /// Strain energy carried onto the drums by reeled-in cable (J).
    spooled: f64,
}

impl Body {
    fn offset(&self, k: &Body, h: f64) -> Body {
        Body {
            r: self.r + k.r * h,
            c: self.c + k.c * h,
            nu: self.nu + k.nu * h,
            theta: self.theta + k.theta * h,
            theta_dot: self.theta_dot + k.theta_dot * h,
            spooled: self.spooled + k.spooled * h,
        }
    }

    fn payload(&self) -> PayloadState {
        PayloadState { pose: Pose::new(self.r, Dcm::new_unchecked(self.c)), nu: self.nu }
    }

    fn cables(&self) -> CableState {
        CableState { winch_angles: self.theta, winch_rates: self.theta_dot }
    }
}

fn rk4<F>(x: &Body, dt: f64, f: &F) -> Result<Body, DynamicsError>
where
    F: Fn(&Body) -> Result<Body, DynamicsError>,
{
    let k1 = f(x)?;
    let k2 = f(&x.offset(&k1, 0.5 * dt))?;
    let k3 = f(&x.offset(&k2, 0.5 * dt))?;
    let k4 = f(&x.offset(&k3, dt))?;
    let mut next = x
        .offset(&k1, dt / 6.0)
        .offset(&k2, dt / 3.0)
        .offset(&k3, dt / 3.0)
        .offset(&k4, dt / 6.0);
    next.c = *Dcm::new_unchecked(next.c).reorthonormalize().matrix();
    Ok(next)
}

fn rigid_rate(params: &PayloadParams, x: &Body, f: &Vec6) -> Body {
    let p = x.payload();
    Body {
        r: p.velocity(),
        c: -cross(&p.omega()) * x.c,
        nu: task_space_dynamics(params, &p, f),
        theta: Vec8::zeros(),
        theta_dot: Vec8::zeros(),
        spooled: 0.0,
    }
}

/// Torque-free tumbling with gravity off: the inertially resolved angular
/// momentum `C_paᵀ I_p ω` must stay constant.
pub fn angular_momentum_audit(
    params: &PayloadParams,
    pose: &Pose,
    omega0: &Vec3,
    duration: f64,
    dt: f64,
) -> AuditReport {
    let params = PayloadParams { gravity: 0.0, ..params.clone() };
    let mut x = Body {
        r: pose.r,
        c: *pose.c.matrix(),
        nu: Vec6::new(0.0, 0.0, 0.0, omega0.x, omega0.y, omega0.z),
        theta: Vec8::zeros(),
        theta_dot: Vec8::zeros(),
        spooled: 0.0,
    };
    let h0 = x.payload().angular_momentum_inertial(&params);
    let mut drift: f64 = 0.0;
    let f = |b: &Body| Ok(rigid_rate(&params, b, &Vec6::zeros()));
    for _ in 0..(duration / dt).round() as usize {
        x = rk4(&x, dt, &f).expect("rigid rates never fail");
        let h = x.payload().angular_momentum_inertial(&params);
        drift = drift.max((h - h0).norm() / h0.norm());
    }
    AuditReport {
        name: "angular-momentum".into(),
        max_relative_drift: drift,
        initial_value: h0.norm(),
        duration,
        dt,
    }
}

/// Elastic cables with zero damping, winches driven by the constant torques
/// that hold the payload statically at the scenario's initial pose, and an
/// initial velocity disturbance. Conserved quantity: payload kinetic and
/// gravitational energy, strain energy of the free spans, winch kinetic
/// energy, the work potential `-Σ τ_i θ_i` of the constant torques, and the
/// strain energy that cable material carries across the drum contact.
///
/// With `t = (EA/l₀)(l - l₀)` and `l₀` paid out by the winch, the span
/// energy `½ EA (l - l₀)²/l₀` changes with `l₀` by `-t - ½ t ε` while the
/// drum only feels `-t`; the difference `½ t ε r θ̇` per cable is the
/// strain energy transported with the reeled material.
pub fn elastic_energy_audit(sc: &Scenario, nu0: &Vec6, duration: f64, dt: f64) -> Result<AuditReport, String> {
    let geom = &sc.geometry;
    let params = sc.payload_params();
    let pose = sc.initial.pose();
    let pi = wrench_matrix(geom, &pose).map_err(|e| e.to_string())?;
    let stat = allocate(&pi, &params.gravity_wrench(), &sc.allocation, &geom.radii()).map_err(|e| e.to_string())?;
    let lengths = cable_lengths(geom, &pose).map_err(|e| e.to_string())?;
    let ea = geom.axial_stiffness();
    let model = ElasticCableModel {
        unstretched_at_zero: Vec8::from_fn(|i, _| lengths[i] * ea / (ea + stat.tensions[i])),
        damping_factor: 0.0,
        include_cable_mass: false,
    };
    let torques = stat.torques;

    let energy = |b: &Body| -> Result<f64, DynamicsError> {
        let p = b.payload();
        Ok(params.kinetic_energy(&p.nu)
            + params.potential_energy(&p.pose.r)
            + model.strain_energy(geom, &p.pose, &b.cables())?
            + model.winch_kinetic_energy(geom, &b.cables())
            - torques.dot(&b.theta)
            - b.spooled)
    };
    let rate = |b: &Body| -> Result<Body, DynamicsError> {
        let forces = elastic_cable_forces(geom, &model, &b.payload(), &b.cables(), &torques)?;
        let mut d = rigid_rate(&params, b, &forces.wrench);
        d.theta = b.theta_dot;
        d.theta_dot = forces.winch_accels;
        // strain ε = t / EA
        d.spooled = (0..forces.tensions.len())
            .map(|i| 0.5 * forces.tensions[i].powi(2) / ea * geom.winch_radii[i] * b.theta_dot[i])
            .sum();
        Ok(d)
    };

    let mut x = Body { r: pose.r, c: *pose.c.matrix(), nu: *nu0, theta: Vec8::zeros(), theta_dot: Vec8::zeros(), spooled: 0.0 };
    let e0 = energy(&x).map_err(|e| e.to_string())?;
    let mut drift: f64 = 0.0;
    for _ in 0..(duration / dt).round() as usize {
        x = rk4(&x, dt, &rate).map_err(|e| e.to_string())?;
        let e = energy(&x).map_err(|e| e.to_string())?;
        drift = drift.max((e - e0).abs() / e0.abs());
    }
    Ok(AuditReport { name: "elastic-energy".into(), max_relative_drift: drift, initial_value: e0, duration, dt })
}
