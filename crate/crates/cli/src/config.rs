//! Run configuration: assembled from an optional JSON config file and
//! command-line flags (flags win), then validated once.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pseudospline::analysis::DEFAULT_ZERO_RANGE;
use pseudospline::cascade::{DEFAULT_LEVELS, DEFAULT_STEP, DEFAULT_WINDOW};
use pseudospline::frames::DEFAULT_TRUNCATION_EPS;
use pseudospline::symbol::{format_complex, parse_complex};
use pseudospline::{ComplexScalar, PseudoSplineOrder};

use crate::error::{CliError, CliResult};

/// Environment variable naming the directory for outputs when `--output`
/// is absent.
pub const OUTPUT_DIR_ENV: &str = "PSEUDOSPLINE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Filter,
    Cascade,
    Framelets,
    Transform,
    Verify,
    Analyze,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Filter => "filter",
            Command::Cascade => "cascade",
            Command::Framelets => "framelets",
            Command::Transform => "transform",
            Command::Verify => "verify",
            Command::Analyze => "analyze",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Fourier,
    Time,
}

/// Everything a run needs. Serializes to the same JSON accepted by `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub z_re: f64,
    pub z_im: f64,
    pub ell: u32,
    pub shift: f64,
    /// Admit `ell > floor(alpha - 1/2)`.
    pub extended_ell: bool,
    pub levels: u32,
    pub window: f64,
    pub step: f64,
    pub grid: usize,
    pub eps: f64,
    pub max_k: Option<usize>,
    pub decay_range: Option<[f64; 2]>,
    pub zero_range: [f64; 2],
    /// Filter (0..=3) or framelet (1..=3) index.
    pub filter: Option<usize>,
    pub domain: Domain,
    pub time_window: f64,
    pub dt: f64,
    pub accuracy: f64,
    /// Sweep list such as `1/0,3.2+1i/0..3`.
    pub orders: Option<String>,
    pub bank: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub roundtrip: bool,
    pub seed: u64,
    pub signals: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Filter,
            z_re: 1.0,
            z_im: 0.0,
            ell: 0,
            shift: 0.0,
            extended_ell: false,
            levels: DEFAULT_LEVELS,
            window: DEFAULT_WINDOW,
            step: DEFAULT_STEP,
            grid: 1024,
            eps: DEFAULT_TRUNCATION_EPS,
            max_k: None,
            decay_range: None,
            zero_range: DEFAULT_ZERO_RANGE,
            filter: None,
            domain: Domain::Fourier,
            time_window: 8.0,
            dt: 1.0 / 64.0,
            accuracy: 1e-3,
            orders: None,
            bank: None,
            input: None,
            output: None,
            format: Format::Csv,
            roundtrip: false,
            seed: 0,
            signals: 4,
        }
    }
}

impl RunConfig {
    pub fn z(&self) -> ComplexScalar {
        ComplexScalar::new(self.z_re, self.z_im)
    }

    /// The validated order; quotes the `ell` constraint when it is violated.
    pub fn order(&self) -> CliResult<PseudoSplineOrder> {
        let build = if self.extended_ell {
            PseudoSplineOrder::new_extended
        } else {
            PseudoSplineOrder::new
        };
        build(self.z(), self.ell, self.shift).map_err(|e| {
            let hint = if self.extended_ell { "" } else { " (use --extended-ell to override)" };
            CliError::Config(format!("{e}{hint}"))
        })
    }

    /// Short tag used in default output file names, e.g. `z3.2+1i_l2`.
    pub fn tag(&self) -> String {
        let mut tag = format!("z{}_l{}", format_complex(self.z()), self.ell);
        if self.shift != 0.0 {
            tag.push_str(&format!("_u{}", self.shift));
        }
        tag
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Checks that do not need any numerical work.
    pub fn validate(&self) -> CliResult<()> {
        self.order()?;
        let positive = [
            ("window", self.window),
            ("step", self.step),
            ("eps", self.eps),
            ("time-window", self.time_window),
            ("dt", self.dt),
            ("accuracy", self.accuracy),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("--{name} must be positive, got {v}")));
            }
        }
        if self.levels == 0 {
            return Err(CliError::Config("--levels must be at least 1".into()));
        }
        if !self.grid.is_power_of_two() || self.grid < 4 {
            return Err(CliError::Config(format!(
                "--grid must be a power of two >= 4, got {}",
                self.grid
            )));
        }
        for (name, range) in [("decay-range", self.decay_range), ("zero-range", Some(self.zero_range))] {
            if let Some([lo, hi]) = range {
                if !(lo > 0.0 && hi > lo) {
                    return Err(CliError::Config(format!("--{name} needs 0 < lo < hi, got {lo},{hi}")));
                }
            }
        }
        Ok(())
    }
}

fn parse_range(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected LO,HI, got {text:?}"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok([num(parts[0])?, num(parts[1])?])
}

/// Flags shared by all subcommands; unset flags keep the config-file value.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Order z as `a`, `a+bi` or `a-bi`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long)]
    pub ell: Option<u32>,
    /// Shift u of the symbol phase e^{-2 pi i u gamma}.
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// Accept ell beyond floor(alpha - 1/2).
    #[arg(long)]
    pub extended_ell: bool,
    /// Cascade levels.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Half-width of the frequency window.
    #[arg(long)]
    pub window: Option<f64>,
    /// Frequency step of the cascade grid.
    #[arg(long)]
    pub step: Option<f64>,
    /// Torus grid resolution (power of two).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Coefficient truncation tolerance (l2 tail).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest coefficient index kept.
    #[arg(long)]
    pub max_k: Option<usize>,
    /// Decay fit range LO,HI.
    #[arg(long, value_parser = parse_range)]
    pub decay_range: Option<[f64; 2]>,
    /// Zero-order fit range LO,HI.
    #[arg(long, value_parser = parse_range)]
    pub zero_range: Option<[f64; 2]>,
    /// Filter index (0..=3 for `filter`, 1..=3 for `framelets`).
    #[arg(long)]
    pub filter: Option<usize>,
    #[arg(long, value_enum)]
    pub domain: Option<Domain>,
    /// Half-width of the time-domain output.
    #[arg(long)]
    pub time_window: Option<f64>,
    /// Time-domain sample spacing.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Largest acceptable spectral tail error for time-domain output.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Sweep list, e.g. `1/0,2/1,3.2+1i/0..3`.
    #[arg(long)]
    pub orders: Option<String>,
    /// Bank JSON written by `framelets --format json`.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Resynthesize and report the reconstruction error.
    #[arg(long)]
    pub roundtrip: bool,
    /// Seed for the random test signals of `verify`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random signals `verify` transforms.
    #[arg(long)]
    pub signals: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Sub {
    /// Sample H0 (or H1..H3) on the torus grid.
    Filter(Flags),
    /// Run the Fourier-domain cascade; optionally invert to the time domain.
    Cascade(Flags),
    /// Build the framelet bank (JSON) or sample a framelet (CSV).
    Framelets(Flags),
    /// Analyze a periodic signal with a framelet bank.
    Transform(Flags),
    /// Run the invariant checks and report margins.
    Verify(Flags),
    /// Regularity and approximation quantities as JSON.
    Analyze(Flags),
    /// Aggregate partition, UEP and lowpass data over a list of orders.
    Sweep(Flags),
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::Filter(f) => (Command::Filter, f),
            Sub::Cascade(f) => (Command::Cascade, f),
            Sub::Framelets(f) => (Command::Framelets, f),
            Sub::Transform(f) => (Command::Transform, f),
            Sub::Verify(f) => (Command::Verify, f),
            Sub::Analyze(f) => (Command::Analyze, f),
            Sub::Sweep(f) => (Command::Sweep, f),
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "pseudospline", version, about = "Complex and fractional pseudo-splines and their framelets")]
pub struct Cli {
    #[command(subcommand)]
    pub sub: Option<Sub>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

impl Cli {
    /// Merges config file and flags into a validated [`RunConfig`].
    pub fn resolve(self) -> CliResult<RunConfig> {
        let from_file = match &self.config {
            Some(path) => Some(RunConfig::from_json(&read_file(path)?)?),
            None => None,
        };
        let (command, flags) = match self.sub {
            Some(sub) => sub.split(),
            None => (
                from_file
                    .as_ref()
                    .map(|c| c.command)
                    .ok_or_else(|| CliError::Config("no subcommand given (see --help)".into()))?,
                Flags::default(),
            ),
        };
        let mut cfg = from_file.unwrap_or_default();
        cfg.command = command;
        apply(&mut cfg, flags)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply(cfg: &mut RunConfig, f: Flags) -> CliResult<()> {
    if let Some(z) = f.z {
        let z = parse_complex(&z).map_err(|e| CliError::Config(format!("--z: {e}")))?;
        cfg.z_re = z.re;
        cfg.z_im = z.im;
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = f.$field { cfg.$field = v; })* };
    }
    set!(ell, shift, levels, window, step, grid, eps, zero_range, domain, time_window, dt, accuracy, format, seed, signals);
    macro_rules! set_opt {
        ($($field:ident),*) => { $(if f.$field.is_some() { cfg.$field = f.$field; })* };
    }
    set_opt!(max_k, decay_range, filter, orders, bank, input, output);
    cfg.extended_ell |= f.extended_ell;
    cfg.roundtrip |= f.roundtrip;
    Ok(())
}
