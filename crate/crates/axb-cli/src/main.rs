use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use axb_cli::config::ScenarioConfig;
use axb_cli::report::{Format, Report};
use axb_cli::scenarios::{self, RepAction, Scenario};
use axb_cli::{CliError, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_PASS};

#[derive(Parser)]
#[command(name = "axb", version, about = "Numerical checks for the quantum ax+b group")]
struct Cli {
    /// TOML scenario config; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Special functions, M-pair exactness and the z-transform round trip.
    Selftest,
    /// Residual-vs-N sweep for one scenario.
    Converge {
        #[arg(value_enum)]
        scenario: Option<Scenario>,
    },
    /// Build, verify or decompose the representation given by [rep].
    Rep {
        #[arg(value_enum)]
        action: RepAction,
    },
    /// Evaluate the quantum exponential F(r, rho).
    Qexp {
        #[command(subcommand)]
        cmd: QexpCmd,
    },
}

#[derive(Subcommand)]
enum QexpCmd {
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        rho: i8,
        #[arg(long)]
        k: Option<i64>,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.run.out = Some(o);
    }
    let report: Report = match cli.cmd {
        Cmd::Selftest => scenarios::selftest(&cfg)?,
        Cmd::Converge { scenario } => {
            let s = match (scenario, &cfg.run.scenario) {
                (Some(s), _) => s,
                (None, Some(name)) => Scenario::parse(name)?,
                (None, None) => return Err(CliError::Config("no scenario given on the command line or in run.scenario".into())),
            };
            scenarios::converge(&cfg, s)?
        }
        Cmd::Rep { action } => scenarios::rep(&cfg, action)?,
        Cmd::Qexp { cmd: QexpCmd::Eval { r, rho, k } } => {
            if let Some(k) = k {
                cfg.deformation.k = k;
            }
            cfg.validate()?;
            let (v, rep) = scenarios::qexp_eval(&cfg, r, rho)?;
            eprintln!("F({r}, {rho}) = {} {:+}i  (|F| = {})", v.re, v.im, v.norm());
            rep
        }
    };
    match &cfg.run.out {
        Some(p) => report.emit(p, cli.format)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&report.render(cli.format)?).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: residual {:?}, tolerance {:e}{}", c.name, c.residual, c.tolerance, c.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default());
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("axb: {e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
