use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cdpr_core::control::ControllerKind;
use cdpr_core::harness::{
    comparison_table, run_checks, run_scenario, run_sweep, write_run, CableMode, CheckSuite, HarnessError, Scenario,
};

#[derive(Parser)]
#[command(name = "cdpr", version, about = "Adaptive pose-tracking simulations for an 8-cable CDPR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trajectory.csv and summary.json.
    Run(ScenarioArgs),
    /// Every controller in both cable modes plus comparison.md.
    Sweep(ScenarioArgs),
    /// Randomized invariant suites.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML); the shipped defaults otherwise.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    controller: Option<ControllerKind>,
    #[arg(long, value_name = "MODE")]
    cables: Option<CableMode>,
    /// s
    #[arg(long, value_name = "S")]
    duration: Option<f64>,
    /// s
    #[arg(long, value_name = "S")]
    dt: Option<f64>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Multiplier on K_d's attitude block for the quaternion controller.
    #[arg(long, value_name = "X")]
    quat_kd_scale: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Identity,
    Lemma,
    Regressor,
    Allocation,
}

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario, HarnessError> {
        let mut sc = match &self.config {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default_config(),
        };
        if let Some(k) = self.controller {
            sc.controller = k;
        }
        if let Some(m) = self.cables {
            if m != sc.cables {
                // the file's step and log interval were chosen for the other mode
                sc.dt = None;
                sc.output.log_interval = None;
            }
            sc.cables = m;
        }
        if let Some(d) = self.duration {
            sc.duration = d;
        }
        if self.dt.is_some() {
            sc.dt = self.dt;
        }
        if let Some(s) = self.seed {
            sc.seed = s;
        }
        if let Some(x) = self.quat_kd_scale {
            sc.gains.quat_kd_scale = x;
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn failed(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_FAILED)
}

fn run(args: &ScenarioArgs) -> ExitCode {
    let sc = match args.scenario() {
        Ok(sc) => sc,
        Err(e) => return usage(e),
    };
    let res = match run_scenario(&sc) {
        Ok(r) => r,
        Err(HarnessError::Config(m)) => return usage(m),
        Err(e) => return failed(e),
    };
    let summary = match write_run(&args.out, &sc, &res) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    match (&summary.failure, &summary.metrics) {
        (Some(f), _) => {
            eprintln!("{}", serde_json::to_string_pretty(f).unwrap());
            ExitCode::from(EXIT_FAILED)
        }
        (None, Some(m)) => {
            println!(
                "{} {}: rms error angle {:.4} deg (0-2 s), {} deg (after 2 s); output in {}",
                sc.controller,
                sc.cables,
                m.rms_err_angle_transient.to_degrees(),
                m.rms_err_angle_steady.map_or("-".into(), |v| format!("{:.4}", v.to_degrees())),
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        (None, None) => ExitCode::SUCCESS,
    }
}

fn sweep(args: &ScenarioArgs) -> ExitCode {
    if args.controller.is_some() || args.cables.is_some() {
        return usage("sweep covers every controller and cable mode; drop --controller/--cables");
    }
    let sc = match args.scenario() {
        Ok(sc) => sc,
        Err(e) => return usage(e),
    };
    let entries = match run_sweep(&sc, &args.out) {
        Ok(e) => e,
        Err(HarnessError::Config(m)) => return usage(m),
        Err(e) => return failed(e),
    };
    print!("{}", comparison_table(&entries));
    let bad: Vec<_> = entries.iter().filter(|e| e.summary.failure.is_some()).collect();
    for e in &bad {
        eprintln!("{}: {}", e.dir.display(), serde_json::to_string(&e.summary.failure).unwrap());
    }
    if bad.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn check(suite: SuiteArg, seed: u64) -> ExitCode {
    let suites: Vec<CheckSuite> = match suite {
        SuiteArg::All => CheckSuite::ALL.to_vec(),
        SuiteArg::Identity => vec![CheckSuite::Identity],
        SuiteArg::Lemma => vec![CheckSuite::Lemma],
        SuiteArg::Regressor => vec![CheckSuite::Regressor],
        SuiteArg::Allocation => vec![CheckSuite::Allocation],
    };
    let mut ok = true;
    for s in suites {
        let rep = run_checks(s, seed);
        for i in &rep.items {
            println!(
                "{} {:?}/{}: {} samples, max residual {:.3e} (tol {:.0e})",
                if i.passed { "PASS" } else { "FAIL" },
                rep.suite,
                i.name,
                i.samples,
                i.max_residual,
                i.tolerance
            );
        }
        ok &= rep.passed();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Check { suite, seed } => check(*suite, *seed),
    }
}
