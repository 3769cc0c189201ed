use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attitude::Quat;
use crate::{Vec3, Vec6, Vec7, Vec8};

pub const CSV_HEADER: &str = "t,rx,ry,rz,rdx,rdy,rdz,q1,q2,q3,q4,err_angle_rad,rtil_x,rtil_y,rtil_z,\
t1,t2,t3,t4,t5,t6,t7,t8,tau1,tau2,tau3,tau4,tau5,tau6,tau7,tau8,\
ahat1,ahat2,ahat3,ahat4,ahat5,ahat6,ahat7,s1,s2,s3,s4,s5,s6,passivity_integral,V1,V2";

pub const CSV_COLUMNS: usize = 47;

/// One logged sample. Errors are those of the true payload pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub r: Vec3,
    pub r_d: Vec3,
    /// Quaternion of `C_pa`.
    pub q: Quat,
    pub err_angle: f64,
    pub r_tilde: Vec3,
    /// Wrapped 3-2-1 angle errors (rad); not written to the CSV.
    pub euler_error: Vec3,
    pub tensions: Vec8,
    pub torques: Vec8,
    pub a_hat: Vec7,
    pub s: Vec6,
    pub passivity_integral: f64,
    pub v1: f64,
    pub v2: f64,
    /// The allocator could not realize the commanded wrench at some stage
    /// of the integration step starting at this sample; saturated tensions
    /// were applied. Not written to the CSV.
    pub saturated: bool,
}

impl LogRow {
    /// Values in CSV column order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.t)
            .chain(self.r.iter().copied())
            .chain(self.r_d.iter().copied())
            .chain(self.q.to_array())
            .chain(std::iter::once(self.err_angle))
            .chain(self.r_tilde.iter().copied())
            .chain(self.tensions.iter().copied())
            .chain(self.torques.iter().copied())
            .chain(self.a_hat.iter().copied())
            .chain(self.s.iter().copied())
            .chain([self.passivity_integral, self.v1, self.v2])
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    /// Integration step (s); rows are spaced by `dt * interval`.
    pub dt: f64,
    pub interval: usize,
    pub rows: Vec<LogRow>,
    /// Integration steps on which the allocator pinned at least one cable.
    pub clamp_events: usize,
}

impl SimLog {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// Writes the fixed-header CSV. `{}` formatting round-trips every float
/// exactly, so identical logs give identical files.
pub fn write_csv<W: Write>(log: &SimLog, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let mut line = String::new();
    for row in &log.rows {
        line.clear();
        for (k, v) in row.values().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
