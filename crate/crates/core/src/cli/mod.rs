//! Command-line front end: `subgeom <simulate|phases|density|verify|sweep> --model run.toml`.

pub mod commands;
pub mod output;
pub mod runspec;
pub mod verify;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use log::error;

use crate::error::{Error, Result};
use crate::model::SplitMode;
pub use commands::{Prepared, SweepParam};
pub use runspec::{Overrides, RunSpec};

/// Exit status when `verify` finds a failing check.
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "subgeom",
    version,
    about = "Sub-geometric, Berry and Aharonov-Anandan phases of driven quantum systems"
)]
pub struct Cli {
    /// Run specification (TOML).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Override the Hamiltonian split.
    #[arg(long, global = true)]
    pub split: Option<SplitMode>,
    /// Override the number of time steps.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Override the end time of the grid.
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    /// Override the channel masking threshold.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the channel coefficients; write the trajectory CSV and phase report.
    Simulate,
    /// Compute total, dynamical, AA and Berry phases and print the report.
    Phases,
    /// Assemble channel-resolved density matrices (and mixtures).
    Density,
    /// Run the invariant suite; exit status 3 if any check fails.
    Verify,
    /// Repeat the run over a list of parameter values.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            split: self.split,
            n_steps: self.steps,
            t_end: self.tmax,
            threshold: self.threshold,
        }
    }

    fn prepare(&self) -> Result<Prepared> {
        let path = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Validation("--model <run spec> is required".into()))?;
        let mut spec = RunSpec::load(path)?;
        spec.apply(&self.overrides());
        Prepared::new(spec)
    }
}

fn dispatch(cli: &Cli, stdout: &mut String) -> Result<i32> {
    let p = cli.prepare()?;
    let out = &cli.out_dir;
    match &cli.command {
        Command::Simulate => {
            let r = commands::simulate(&p, out)?;
            writeln!(
                stdout,
                "phi = {:.12}  alpha = {:.12}  beta_AA = {:.12}",
                r.phases.total_phi, r.phases.dynamical_alpha, r.phases.aa_beta
            )
            .unwrap();
        }
        Command::Phases => {
            let r = commands::phases(&p, out)?;
            stdout.push_str(&output::to_json(&r.phases)?);
        }
        Command::Density => {
            let r = commands::density(&p, out)?;
            for e in &r.entries {
                writeln!(
                    stdout,
                    "t = {:.6}  purity = {:.12}  oracle residual = {:.3e}",
                    e.snapshot.t, e.snapshot.purity, e.oracle_residual
                )
                .unwrap();
            }
        }
        Command::Verify => {
            let r = verify::verify(&p);
            output::write_json(&out.join(&p.spec.outputs.verify), &r)?;
            for c in &r.checks {
                let status = match (c.skipped, c.passed) {
                    (true, _) => "SKIP",
                    (false, true) => "PASS",
                    (false, false) => "FAIL",
                };
                let residual = c
                    .residual
                    .map(|x| format!("{x:.3e}"))
                    .unwrap_or_else(|| "-".into());
                let tol = c
                    .tolerance
                    .map(|x| format!("{x:.0e}"))
                    .unwrap_or_else(|| "-".into());
                writeln!(
                    stdout,
                    "{status} {:<34} residual {residual:>10}  tol {tol:>6}  {}",
                    c.name,
                    c.note.as_deref().unwrap_or("")
                )
                .unwrap();
            }
            if !r.passed {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
        Command::Sweep { param, values } => {
            let values = commands::parse_values(values)?;
            stdout.push_str(&commands::sweep(&p, *param, &values, out)?);
        }
    }
    Ok(0)
}

/// Parses `args`; usage errors exit with the validation status.
pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            1
        } else {
            0
        }
    })
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let mut stdout = String::new();
    let result = dispatch(cli, &mut stdout);
    // a closed pipe downstream is not an error of ours
    let _ = std::io::stdout().lock().write_all(stdout.as_bytes());
    match result {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
