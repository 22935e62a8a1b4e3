//! Command-line parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{FileConfig, Format, PhiList, RunConfig};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "wqed", version, about = "Two-photon spectra of chiral waveguide-QED atom arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Bound, antibound and resonance branches over the K grid.
    Sweep,
    /// Exceptional-point position for each phase.
    Ep,
    /// Dense-oracle cross-checks.
    Verify,
    /// Small-K and band-edge asymptotes on the K grid.
    Asymptotes,
    /// Sweep of the fully chiral array.
    Chiral,
}

/// Every config-file key, as a flag. Angles in units of pi.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with any of the keys below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// phi / pi; a comma-separated list for `ep`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub phi: Option<Vec<f64>>,
    /// gamma_l / gamma_r.
    #[arg(long, global = true)]
    pub xi: Option<f64>,
    /// Total waveguide decay rate; sets the energy unit.
    #[arg(long = "gamma-1d", global = true)]
    pub gamma_1d: Option<f64>,
    /// First K / pi of the grid.
    #[arg(long, global = true)]
    pub kmin: Option<f64>,
    /// Last K / pi of the grid.
    #[arg(long, global = true)]
    pub kmax: Option<f64>,
    /// Number of grid points.
    #[arg(long, global = true)]
    pub kn: Option<usize>,
    /// Half-width / pi of the skipped windows around singular K.
    #[arg(long, global = true)]
    pub window: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true, env = "WQED_JOBS")]
    pub jobs: Option<usize>,
    /// Output file format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Directory for output files.
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// Truncation of the dense oracle.
    #[arg(long = "oracle-n", global = true)]
    pub oracle_n: Option<usize>,
    /// Emit antibound states (`--emit-antibound false` to drop them).
    #[arg(long = "emit-antibound", global = true, num_args = 0..=1, default_missing_value = "true")]
    pub emit_antibound: Option<bool>,
    /// Scale the solver's row-1 edge hopping (fault injection).
    #[arg(long = "corrupt-dt1", global = true, hide = true)]
    pub corrupt_dt1: Option<f64>,
}

impl Flags {
    fn as_file(&self) -> FileConfig {
        FileConfig {
            phi: self.phi.clone().map(PhiList::Many),
            xi: self.xi,
            gamma_1d: self.gamma_1d,
            kmin: self.kmin,
            kmax: self.kmax,
            kn: self.kn,
            window: self.window,
            jobs: self.jobs,
            format: self.format,
            out_dir: self.out_dir.clone(),
            oracle_n: self.oracle_n,
            emit_antibound: self.emit_antibound,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        RunConfig::resolve(file.merge(self.as_file()), self.corrupt_dt1)
    }
}

/// Runs one command and returns its summary.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = cli.flags.resolve()?;
    match cli.command {
        Command::Sweep => commands::cmd_sweep(&cfg),
        Command::Ep => commands::cmd_ep(&cfg),
        Command::Verify => commands::cmd_verify(&cfg),
        Command::Asymptotes => commands::cmd_asymptotes(&cfg),
        Command::Chiral => commands::cmd_chiral(&cfg),
    }
}

/// Parses `args`, runs, and maps the outcome to `(exit code, stdout, stderr)`.
pub fn main_with<I, T>(args: I) -> (u8, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { (0, text, String::new()) } else { (code, String::new(), text) };
        }
    };
    match run(&cli) {
        Ok(summary) => (0, format!("{summary}\n"), String::new()),
        Err(Error::Verify { failed, table }) => (1, format!("{table}\n"), format!("error: failed checks: {failed}\n")),
        Err(e) => (e.exit_code(), String::new(), format!("error: {e}\n")),
    }
}
