//! Run configuration: command-line flags merged over an optional JSON file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use levy_chaos::{LevyModel, Rational};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Coeffs,
    Expand,
    Ortho,
    Simulate,
    Verify,
    Convergence,
    ExactVerify,
    Taylor,
}

impl Command {
    fn simulates(self) -> bool {
        matches!(
            self,
            Command::Simulate | Command::Verify | Command::Convergence | Command::Taylor
        )
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    /// Compensated power jump processes.
    Y,
    /// Orthogonalized martingales.
    H,
    /// Raw power brackets, moment-free.
    #[value(alias = "noncompensated")]
    #[serde(alias = "noncompensated")]
    Jamshidian,
    /// Compensated Poisson random measure integrands.
    Prm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Substrate {
    Exact,
    Grid,
}

/// Flags shared by every subcommand. Each one is also a key of the
/// `--config` file; flags win over the file.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opts {
    /// Model spec, e.g. `gamma:a=10,b=20` or `brownian:sigma=0.01+gamma:a=10,b=20`.
    #[arg(long)]
    pub model: Option<String>,
    /// Power / expansion order.
    #[arg(long)]
    pub n: Option<usize>,
    /// Start of the window.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Window length after `t0`.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Step sizes for `convergence`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dts: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of simulated paths.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where `verify`/`convergence` write the JSON report when `--out` holds the CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Relative threshold for jump detection in diff series.
    #[arg(long)]
    pub jump_threshold: Option<f64>,
    /// JumpPath JSON for `exact-verify`.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Jump count of the random `exact-verify` fixture.
    #[arg(long)]
    pub jumps: Option<usize>,
    /// FunctionalSpec JSON for `taylor`.
    #[arg(long)]
    pub functional: Option<PathBuf>,
    /// Truncation orders for `taylor`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub substrate: Option<Substrate>,
}

/// File form of a run: `{"command": "verify", "model": ..., ...}`.
#[derive(Debug, Deserialize)]
struct ConfigFile {
    command: Option<Command>,
    #[serde(flatten)]
    opts: Opts,
}

impl Opts {
    fn or(self, file: Opts) -> Opts {
        Opts {
            model: self.model.or(file.model),
            n: self.n.or(file.n),
            t0: self.t0.or(file.t0),
            t: self.t.or(file.t),
            dt: self.dt.or(file.dt),
            dts: self.dts.or(file.dts),
            seed: self.seed.or(file.seed),
            paths: self.paths.or(file.paths),
            basis: self.basis.or(file.basis),
            mode: self.mode.or(file.mode),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            report: self.report.or(file.report),
            jump_threshold: self.jump_threshold.or(file.jump_threshold),
            fixture: self.fixture.or(file.fixture),
            jumps: self.jumps.or(file.jumps),
            functional: self.functional.or(file.functional),
            orders: self.orders.or(file.orders),
            substrate: self.substrate.or(file.substrate),
        }
    }
}

/// Validated run with defaults filled in.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<LevyModel>,
    pub n: usize,
    pub t0: f64,
    pub t: f64,
    pub dt: f64,
    pub dts: Vec<f64>,
    pub seed: u64,
    pub paths: usize,
    pub basis: BasisArg,
    pub mode: Mode,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub jump_threshold: f64,
    pub fixture: Option<PathBuf>,
    pub jumps: usize,
    pub functional: Option<PathBuf>,
    pub orders: Vec<usize>,
    pub substrate: Substrate,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::config(msg)
}

impl RunConfig {
    /// Defaults: `t0 = 0`, `t = 1`, `dt = 1e-4`, `dts = 1e-2,1e-3,1e-4`,
    /// `seed = 1`, `paths = 1`, `basis = y`, `jump_threshold = 0.01`,
    /// `jumps = 8`, `substrate = exact`. Mode is `rational` for the algebraic
    /// commands and `float` for the simulating ones; format is `csv` for
    /// `simulate`, `verify` and `convergence`, `json` otherwise.
    pub fn resolve(
        command: Option<Command>,
        flags: Opts,
        config: Option<&std::path::Path>,
    ) -> Result<Self, CliError> {
        let (file_command, opts) = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::io(format!("cannot read config {}: {e}", path.display()))
                })?;
                let file: ConfigFile = serde_json::from_str(&text).map_err(|e| {
                    invalid(format!("config {}: {e}", path.display()))
                })?;
                (file.command, flags.or(file.opts))
            }
            None => (None, flags),
        };
        let command = match (command, file_command) {
            (Some(c), Some(f)) if c != f => {
                return Err(invalid(format!(
                    "subcommand {c} disagrees with config command {f}"
                )))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(invalid("no subcommand given")),
        };

        let model = opts
            .model
            .as_deref()
            .map(LevyModel::from_str)
            .transpose()
            .map_err(CliError::Core)?;
        let mode = opts.mode.unwrap_or(if command.simulates() {
            Mode::Float
        } else {
            Mode::Rational
        });
        let format = opts.format.unwrap_or(match command {
            Command::Simulate | Command::Verify | Command::Convergence => Format::Csv,
            _ => Format::Json,
        });
        let cfg = RunConfig {
            command,
            model,
            n: opts.n.unwrap_or(0),
            t0: opts.t0.unwrap_or(0.0),
            t: opts.t.unwrap_or(1.0),
            dt: opts.dt.unwrap_or(1e-4),
            dts: opts.dts.unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]),
            seed: opts.seed.unwrap_or(1),
            paths: opts.paths.unwrap_or(1),
            basis: opts.basis.unwrap_or(BasisArg::Y),
            mode,
            format,
            out: opts.out,
            report: opts.report,
            jump_threshold: opts.jump_threshold.unwrap_or(0.01),
            fixture: opts.fixture,
            jumps: opts.jumps.unwrap_or(8),
            functional: opts.functional,
            orders: opts.orders.unwrap_or_default(),
            substrate: opts.substrate.unwrap_or(Substrate::Exact),
        };
        cfg.validate(opts.n.is_some())?;
        Ok(cfg)
    }

    fn validate(&self, has_n: bool) -> Result<(), CliError> {
        use Command::*;
        if self.command.simulates() && self.mode == Mode::Rational {
            return Err(invalid(format!(
                "{} simulates paths and runs in float mode only",
                self.command
            )));
        }
        let needs_n = matches!(self.command, Coeffs | Expand | Ortho | Verify | Convergence | ExactVerify);
        if needs_n && !has_n {
            return Err(invalid(format!("{} requires --n", self.command)));
        }
        if matches!(self.command, Ortho) && self.n == 0 {
            return Err(invalid("ortho requires --n >= 1"));
        }
        let needs_model = match self.command {
            Expand => self.basis != BasisArg::Jamshidian,
            Coeffs | Ortho | Simulate | Verify | Convergence | Taylor => true,
            ExactVerify => self.basis == BasisArg::H && self.fixture.is_none(),
        };
        if needs_model && self.model.is_none() {
            return Err(invalid(format!("{} requires --model", self.command)));
        }
        if self.command.simulates() && self.command != Taylor {
            if !(self.t > 0.0 && self.t.is_finite()) {
                return Err(invalid(format!("--t must be > 0, got {}", self.t)));
            }
            if !(self.t0 >= 0.0 && self.t0.is_finite()) {
                return Err(invalid(format!("--t0 must be >= 0, got {}", self.t0)));
            }
        }
        if self.command == Convergence {
            if self.dts.is_empty() {
                return Err(invalid("--dts is empty"));
            }
            if self.dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(invalid("--dts entries must be > 0"));
            }
        }
        if matches!(self.command, Verify | Convergence | ExactVerify) && self.basis == BasisArg::Prm {
            return Err(invalid("the PRM form has no pathwise evaluator; use y, h or jamshidian"));
        }
        if self.command == Taylor && self.functional.is_none() {
            return Err(invalid("taylor requires --functional <spec.json>"));
        }
        if self.command == ExactVerify && self.format == Format::Csv {
            return Err(invalid("exact-verify writes JSON only"));
        }
        if self.paths == 0 {
            return Err(invalid("--paths must be >= 1"));
        }
        if self.report.is_some() && !matches!(self.command, Verify | Convergence) {
            return Err(invalid("--report applies to verify and convergence"));
        }
        Ok(())
    }

    /// `t0` and `t` as exact rationals (decimal reading of the floats).
    pub fn window_rational(&self) -> (Rational, Rational) {
        use levy_chaos::Scalar;
        let t0 = Rational::from_f64(self.t0).expect("finite t0");
        let t = Rational::from_f64(self.t).expect("finite t");
        (t0.clone(), t0 + t)
    }
}
