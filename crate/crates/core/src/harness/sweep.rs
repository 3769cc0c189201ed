use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::log::write_csv;
use super::metrics::{metrics, Metrics};
use super::scenario::{CableMode, Scenario};
use super::sim::{run_scenario, Failure, Monitors, SimResult};
use super::HarnessError;
use crate::control::ControllerKind;

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub controller: ControllerKind,
    pub cables: CableMode,
    pub status: String,
    pub duration: f64,
    pub dt: f64,
    pub metrics: Option<Metrics>,
    pub monitors: Monitors,
    pub failure: Option<Failure>,
}

impl Summary {
    pub fn new(sc: &Scenario, res: &SimResult) -> Self {
        Summary {
            controller: sc.controller,
            cables: sc.cables,
            status: if res.completed() { "ok".into() } else { "failed".into() },
            duration: sc.duration,
            dt: sc.dt(),
            metrics: (!res.log.rows.is_empty()).then(|| metrics(&res.log)),
            monitors: res.monitors.clone(),
            failure: res.failure.clone(),
        }
    }
}

/// Writes `trajectory.csv` and `summary.json` into `dir`.
pub fn write_run(dir: &Path, sc: &Scenario, res: &SimResult) -> Result<Summary, HarnessError> {
    fs::create_dir_all(dir)?;
    write_csv(&res.log, BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
    let summary = Summary::new(sc, res);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub dir: PathBuf,
    pub summary: Summary,
}

/// Every controller in both cable modes, in parallel. Outputs go to
/// `out/<controller>-<mode>/` plus `out/comparison.md`; the
/// returned entries are in controller-major order.
pub fn run_sweep(base: &Scenario, out: &Path) -> Result<Vec<SweepEntry>, HarnessError> {
    let jobs: Vec<(ControllerKind, CableMode)> = ControllerKind::ALL
        .iter()
        .flat_map(|&k| CableMode::ALL.iter().map(move |&m| (k, m)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(kind, mode)| {
            let mut sc = base.clone().with(kind, mode);
            // per-mode step and log defaults apply unless the base pins them
            if base.cables != mode {
                sc.dt = None;
                sc.output.log_interval = None;
            }
            let res = run_scenario(&sc)?;
            let dir = out.join(format!("{}-{}", kind.name(), mode.name()));
            let summary = write_run(&dir, &sc, &res)?;
            Ok(SweepEntry { dir, summary })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    fs::write(out.join("comparison.md"), comparison_table(&entries))?;
    Ok(entries)
}

fn deg(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{:.4}", v.to_degrees()))
}

/// Markdown table of RMS error angles (deg) keyed by controller.
pub fn comparison_table(entries: &[SweepEntry]) -> String {
    let mut s = String::from(
        "| controller | rigid transient | rigid steady | elastic transient | elastic steady |\n|---|---|---|---|---|\n",
    );
    for kind in ControllerKind::ALL {
        let cell = |mode: CableMode| {
            let e = entries.iter().find(|e| e.summary.controller == kind && e.summary.cables == mode);
            match e.map(|e| (&e.summary.metrics, &e.summary.failure)) {
                Some((Some(m), None)) => (deg(Some(m.rms_err_angle_transient)), deg(m.rms_err_angle_steady)),
                Some((_, Some(_))) => ("failed".into(), "failed".into()),
                _ => ("-".into(), "-".into()),
            }
        };
        let (rt, rs) = cell(CableMode::Rigid);
        let (et, es) = cell(CableMode::Elastic);
        s.push_str(&format!("| {} | {rt} | {rs} | {et} | {es} |\n", kind.name()));
    }
    s
}
