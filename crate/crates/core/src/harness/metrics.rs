use serde::{Deserialize, Serialize};

use super::log::SimLog;

/// End of the transient window (s). The sample at exactly this time belongs
/// to the transient window.
pub const TRANSIENT_WINDOW: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// rad
    pub rms_err_angle_transient: f64,
    /// rad; `None` when the run ends inside the transient window.
    pub rms_err_angle_steady: Option<f64>,
    /// m, over the whole run.
    pub rms_position_error: f64,
    /// m
    pub rms_position_error_steady: Option<f64>,
    pub final_err_angle: f64,
    pub final_position_error: f64,
    /// N
    pub max_tension: f64,
    pub min_tension: f64,
    pub clamp_events: usize,
    pub final_a_hat: [f64; 7],
}

/// Trapezoidal RMS of `values` over its samples. A single sample gives its
/// magnitude.
fn trapezoid_rms(times: &[f64], values: &[f64]) -> Option<f64> {
    match values.len() {
        0 => None,
        1 => Some(values[0].abs()),
        _ => {
            let mut integral = 0.0;
            for k in 1..values.len() {
                integral += 0.5 * (values[k] * values[k] + values[k - 1] * values[k - 1]) * (times[k] - times[k - 1]);
            }
            let span = times[times.len() - 1] - times[0];
            Some((integral / span).sqrt())
        }
    }
}

/// RMS over `t ≤ split` and over `t > split`.
pub fn rms_split(times: &[f64], values: &[f64], split: f64) -> (Option<f64>, Option<f64>) {
    let k = times.partition_point(|&t| t <= split);
    (trapezoid_rms(&times[..k], &values[..k]), trapezoid_rms(&times[k..], &values[k..]))
}

pub fn metrics(log: &SimLog) -> Metrics {
    assert!(!log.rows.is_empty(), "metrics need at least one logged row");
    let times = log.times();
    let angle: Vec<f64> = log.rows.iter().map(|r| r.err_angle).collect();
    let pos: Vec<f64> = log.rows.iter().map(|r| r.r_tilde.norm()).collect();
    let (transient, steady) = rms_split(&times, &angle, TRANSIENT_WINDOW);
    let (_, pos_steady) = rms_split(&times, &pos, TRANSIENT_WINDOW);
    let last = log.rows.last().unwrap();
    let tensions = log.rows.iter().flat_map(|r| r.tensions.iter().copied());
    let (min_tension, max_tension) =
        tensions.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    Metrics {
        rms_err_angle_transient: transient.unwrap(),
        rms_err_angle_steady: steady,
        rms_position_error: trapezoid_rms(&times, &pos).unwrap(),
        rms_position_error_steady: pos_steady,
        final_err_angle: last.err_angle,
        final_position_error: last.r_tilde.norm(),
        max_tension,
        min_tension,
        clamp_events: log.clamp_events,
        final_a_hat: std::array::from_fn(|i| last.a_hat[i]),
    }
}
