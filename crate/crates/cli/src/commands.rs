use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pseudospline::analysis::{
    approximation_order, full_report, holder_exponent, kappa, lowpass_condition, ReportParams,
    DEFAULT_NEIGHBORHOOD,
};
use pseudospline::cascade::{refinement_residual, run_cascade, to_time_domain, CONVERGENCE_SUP_CHANGE};
use pseudospline::frames::{
    analyze, build_bank_with, energy, eval_hn, framelet_hat_samples, framelet_time, synthesize,
    FilterCoeffs, PeriodicSignal,
};
use pseudospline::io::{
    bank_from_json, complex_csv, parse_complex_csv, to_json_string, ProfileJson, SymbolJson,
    TimeProfileJson,
};
use pseudospline::symbol::{
    eval_h0, eval_p, eval_q, eval_q_prime, parse_complex, partition_extrema, sample_h0, theta_bound,
    OrderSpec, PForm, SampledSymbol,
};
use pseudospline::{ComplexScalar, PseudoSplineOrder, TorusGrid};

use crate::config::{Command, Domain, Format, RunConfig, OUTPUT_DIR_ENV};
use crate::error::{CliError, CliResult};

/// One output file. `suffix` distinguishes several files of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub suffix: Option<String>,
    pub extension: &'static str,
    pub content: String,
}

/// Result of a command before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Human-readable summary.
    pub summary: String,
    /// When true the summary is the main product and goes to stdout, while
    /// artifacts are only written if an output location is known.
    pub summary_is_primary: bool,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn data(artifact: Artifact, summary: String) -> Self {
        Self {
            artifacts: vec![artifact],
            summary,
            summary_is_primary: false,
            failure: None,
        }
    }
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.command {
        Command::Filter => cmd_filter(cfg),
        Command::Cascade => cmd_cascade(cfg),
        Command::Framelets => cmd_framelets(cfg),
        Command::Transform => cmd_transform(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Analyze => cmd_analyze(cfg),
        Command::Sweep => cmd_sweep(cfg),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(to_json_string(value)?)
}

fn artifact(format: Format, content: String) -> Artifact {
    Artifact {
        suffix: None,
        extension: format.extension(),
        content,
    }
}

fn filter_index(cfg: &RunConfig, default: usize, range: std::ops::RangeInclusive<usize>) -> CliResult<usize> {
    let n = cfg.filter.unwrap_or(default);
    if range.contains(&n) {
        Ok(n)
    } else {
        Err(CliError::Config(format!(
            "--filter {n} is not in {}..={} for {}",
            range.start(),
            range.end(),
            cfg.command.name()
        )))
    }
}

fn bank(cfg: &RunConfig, order: &PseudoSplineOrder) -> CliResult<pseudospline::frames::FrameletBank> {
    let grid = TorusGrid::new(cfg.grid)?;
    Ok(build_bank_with(order, grid, cfg.max_k.unwrap_or(cfg.grid / 2), cfg.eps)?)
}

pub fn cmd_filter(cfg: &RunConfig) -> CliResult<Outcome> {
    let order = cfg.order()?;
    let grid = TorusGrid::new(cfg.grid)?;
    let n = filter_index(cfg, 0, 0..=3)?;
    let symbol = if n == 0 {
        sample_h0(&order, grid)
    } else {
        let values = grid
            .points()
            .map(|g| eval_hn(&order, n, g))
            .collect::<pseudospline::Result<Vec<_>>>()?;
        SampledSymbol {
            order: order.clone(),
            grid,
            values,
        }
    };
    let content = match cfg.format {
        Format::Csv => complex_csv("gamma", symbol.rows()),
        Format::Json => {
            let mut value = serde_json::to_value(SymbolJson::from_symbol(&symbol))
                .map_err(|e| CliError::Config(e.to_string()))?;
            value["filter"] = n.into();
            json(&value)?
        }
    };
    let summary = format!("H{n} of order {order} sampled on {} points", grid.resolution());
    Ok(Outcome::data(artifact(cfg.format, content), summary))
}

pub fn cmd_cascade(cfg: &RunConfig) -> CliResult<Outcome> {
    let order = cfg.order()?;
    let (profile, diag) = run_cascade(&order, cfg.levels, cfg.window, cfg.step)?;
    let mut summary = format!(
        "cascade of order {order}: {} levels, converged at {}, L2 monotone {}, refinement residual {:e}",
        cfg.levels,
        diag.converged_at.map_or("never".to_string(), |m| m.to_string()),
        diag.l2_monotone,
        refinement_residual(&profile)
    );
    let content = match cfg.domain {
        Domain::Fourier => match cfg.format {
            Format::Csv => complex_csv("gamma", profile.rows()),
            Format::Json => json(&ProfileJson::new(&profile, Some(&diag)))?,
        },
        Domain::Time => {
            let time = to_time_domain(&profile, cfg.time_window, cfg.dt, cfg.accuracy)?;
            write!(summary, ", tail error estimate {:e}", time.tail_error_estimate).unwrap();
            match cfg.format {
                Format::Csv => complex_csv("t", time.rows()),
                Format::Json => json(&TimeProfileJson::new(&time))?,
            }
        }
    };
    Ok(Outcome::data(artifact(cfg.format, content), summary))
}

pub fn cmd_framelets(cfg: &RunConfig) -> CliResult<Outcome> {
    let order = cfg.order()?;
    let bank = bank(cfg, &order)?;
    if cfg.format == Format::Json {
        let summary = format!(
            "framelet bank of order {order}: grid {}, truncation eps {:e}, UEP defects {:e} / {:e}",
            cfg.grid,
            bank.filters.truncation_eps,
            bank.diagonal_defect(),
            bank.off_diagonal_defect()
        );
        return Ok(Outcome::data(artifact(Format::Json, json(&bank.filters)?), summary));
    }
    let n = filter_index(cfg, 1, 1..=3)?;
    let (profile, _) = run_cascade(&order, cfg.levels, cfg.window, cfg.step)?;
    let content = match cfg.domain {
        Domain::Fourier => complex_csv("gamma", framelet_hat_samples(&bank, &profile, n)?),
        Domain::Time => {
            let phi = to_time_domain(&profile, cfg.time_window, cfg.dt, cfg.accuracy)?;
            let psi = framelet_time(&bank, &phi, n)?;
            complex_csv("t", psi.rows())
        }
    };
    let summary = format!("framelet psi{n} of order {order} ({:?} domain)", cfg.domain).to_lowercase();
    Ok(Outcome::data(artifact(Format::Csv, content), summary))
}

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Relative errors of the energy identity and of perfect reconstruction.
pub fn transform_errors(filters: &FilterCoeffs, signal: &PeriodicSignal) -> CliResult<(f64, f64)> {
    let bands = analyze(filters, signal)?;
    let sub: f64 = bands.iter().map(|b| energy(b)).sum();
    let back = synthesize(filters, &bands)?;
    let diff: Vec<ComplexScalar> = back
        .samples()
        .iter()
        .zip(signal.samples())
        .map(|(a, b)| a - b)
        .collect();
    let e = signal.energy();
    Ok((relative((sub - e).abs(), e), relative(energy(&diff).sqrt(), e.sqrt())))
}

pub fn cmd_transform(cfg: &RunConfig) -> CliResult<Outcome> {
    let filters = match &cfg.bank {
        Some(path) => bank_from_json(&read_file(path)?)?,
        None => bank(cfg, &cfg.order()?)?.filters,
    };
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("transform needs --input signal.csv".into()))?;
    let rows = parse_complex_csv(&read_file(input)?)?;
    let signal = PeriodicSignal::new(rows.into_iter().map(|(_, v)| v).collect())?;
    let bands = analyze(&filters, &signal)?;
    let artifacts = match cfg.format {
        Format::Csv => bands
            .iter()
            .enumerate()
            .map(|(n, band)| Artifact {
                suffix: Some(format!("band{n}")),
                extension: "csv",
                content: complex_csv("t", band.iter().enumerate().map(|(m, v)| (m as f64, *v))),
            })
            .collect(),
        Format::Json => {
            let map: BTreeMap<String, Vec<[f64; 2]>> = bands
                .iter()
                .enumerate()
                .map(|(n, b)| (n.to_string(), b.iter().map(|v| [v.re, v.im]).collect()))
                .collect();
            vec![artifact(Format::Json, json(&serde_json::json!({ "bands": map }))?)]
        }
    };
    let mut summary = format!("analyzed {} samples into 4 subbands of length {}", signal.len(), signal.len() / 2);
    let mut failure = None;
    if cfg.roundtrip {
        let (parseval, pr) = transform_errors(&filters, &signal)?;
        write!(summary, "\nrelative Parseval error: {parseval:e}\nrelative PR error: {pr:e}").unwrap();
        if pr >= 1e-6 || parseval >= 1e-6 {
            failure = Some(CliError::Tolerance(format!(
                "round trip errors {pr:e} (PR) / {parseval:e} (Parseval) exceed 1e-6"
            )));
        }
    }
    Ok(Outcome {
        artifacts,
        summary,
        summary_is_primary: cfg.roundtrip,
        failure,
    })
}

/// One verified quantity: `value` must not exceed `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    fn new(suite: &'static str, name: &'static str, value: f64, tol: f64) -> Self {
        Self {
            suite,
            name,
            value,
            tol,
            margin: tol - value,
            pass: value <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub order: OrderSpec,
    pub theta: f64,
    pub partition_min: f64,
    pub partition_argmin: f64,
    pub partition_max: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> PeriodicSignal {
    let samples = (0..len)
        .map(|_| ComplexScalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    PeriodicSignal::new(samples).expect("power-of-two length")
}

/// Runs the symbol, cascade and frame invariant suites for one order.
pub fn verify_order(cfg: &RunConfig, order: &PseudoSplineOrder) -> CliResult<VerifyReport> {
    let grid = TorusGrid::new(cfg.grid)?;
    let mut checks = Vec::new();

    let theta = theta_bound(order);
    let ext = partition_extrema(order, grid)?;
    checks.push(Check::new("symbol", "partition_min_equals_theta", (ext.min - theta).abs(), 1e-10));
    checks.push(Check::new("symbol", "partition_max_equals_one", (ext.max - 1.0).abs(), 1e-12));

    let mut p_forms: f64 = 0.0;
    let mut q_prime: f64 = 0.0;
    let h = 1e-5;
    for i in 0..64 {
        let x = (i as f64 + 0.5) / 64.0;
        let a = eval_p(order, x, PForm::Definition)?;
        let b = eval_p(order, x, PForm::Taylor)?;
        p_forms = p_forms.max((a - b).norm() / b.norm());
        if (0.05..=0.95).contains(&x) {
            let exact = eval_q_prime(order, x)?;
            let fd = (eval_q(order, x + h)? - eval_q(order, x - h)?) / (2.0 * h);
            q_prime = q_prime.max((fd - exact).norm() / exact.norm().max(1e-12));
        }
    }
    checks.push(Check::new("symbol", "p_forms_agree", p_forms, 1e-12));
    checks.push(Check::new("symbol", "q_prime_finite_difference", q_prime, 1e-6));
    if order.shift_u() != 0.0 {
        let base = order.with_shift(0.0)?;
        let phase = grid
            .points()
            .map(|g| {
                let rot = ComplexScalar::from_polar(1.0, -2.0 * std::f64::consts::PI * order.shift_u() * g);
                (eval_h0(order, g) - rot * eval_h0(&base, g)).norm()
            })
            .fold(0.0, f64::max);
        checks.push(Check::new("symbol", "shift_phase_identity", phase, 1e-13));
    }

    let (profile, diag) = run_cascade(order, cfg.levels, cfg.window, cfg.step)?;
    let increase = diag
        .l2_norms
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let excess = diag.l2_norms.iter().map(|n| n - 1.0).fold(0.0, f64::max);
    checks.push(Check::new("cascade", "l2_non_increasing", increase, 1e-10));
    checks.push(Check::new("cascade", "l2_at_most_one", excess, 1e-10));
    checks.push(Check::new("cascade", "refinement_residual", refinement_residual(&profile), 1e-6));
    // the shift phase converges only like 2^{-m}, so the sup-change threshold
    // is meaningful for unshifted orders alone
    if order.shift_u() == 0.0 {
        let last_change = diag.sup_changes.last().copied().unwrap_or(f64::INFINITY);
        checks.push(Check::new("cascade", "final_sup_change", last_change, CONVERGENCE_SUP_CHANGE));
    }

    let bank = bank(cfg, order)?;
    checks.push(Check::new("frames", "uep_diagonal", bank.diagonal_defect(), 1e-10));
    checks.push(Check::new("frames", "uep_off_diagonal", bank.off_diagonal_defect(), 1e-10));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut parseval, mut pr): (f64, f64) = (0.0, 0.0);
    for _ in 0..cfg.signals {
        let signal = random_signal(&mut rng, cfg.grid.min(1024));
        let (a, b) = transform_errors(&bank.filters, &signal)?;
        parseval = parseval.max(a);
        pr = pr.max(b);
    }
    checks.push(Check::new("frames", "parseval_relative", parseval, 1e-6));
    checks.push(Check::new("frames", "reconstruction_relative", pr, 1e-6));

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        order: order.spec(),
        theta,
        partition_min: ext.min,
        partition_argmin: ext.argmin,
        partition_max: ext.max,
        checks,
        pass,
    })
}

pub fn render_verify(report: &VerifyReport) -> String {
    let o = report.order;
    let mut out = format!(
        "order z = {} ell = {} u = {}\ntheta = {:?}\npartition min = {:?} at gamma = {:?}\npartition max = {:?}\n",
        pseudospline::symbol::format_complex(ComplexScalar::new(o.z_re, o.z_im)),
        o.ell,
        o.u,
        report.theta,
        report.partition_min,
        report.partition_argmin,
        report.partition_max
    );
    for c in &report.checks {
        writeln!(
            out,
            "[{}] {}/{}: value = {:e}, tol = {:e}, margin = {:e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.value,
            c.tol,
            c.margin
        )
        .unwrap();
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    writeln!(out, "{} of {} checks passed", report.checks.len() - failed, report.checks.len()).unwrap();
    out
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let order = cfg.order()?;
    let report = verify_order(cfg, &order)?;
    let failure = (!report.pass).then(|| {
        let names: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}/{}", c.suite, c.name))
            .collect();
        CliError::Verification(names.join(", "))
    });
    Ok(Outcome {
        artifacts: vec![artifact(Format::Json, json(&report)?)],
        summary: render_verify(&report),
        summary_is_primary: true,
        failure,
    })
}

pub fn cmd_analyze(cfg: &RunConfig) -> CliResult<Outcome> {
    let order = cfg.order()?;
    let params = ReportParams {
        levels: cfg.levels,
        window: cfg.window,
        step: cfg.step,
        decay_range: cfg.decay_range,
        zero_range: cfg.zero_range,
        neighborhood: DEFAULT_NEIGHBORHOOD,
    };
    let report = full_report(&order, &params)?;
    let summary = format!(
        "analysis of order {order}: approximation order {}, kappa {}",
        report.approx_order.map_or("n/a".into(), |v| v.to_string()),
        report.kappa.map_or("n/a".into(), |v| format!("{v:.6}"))
    );
    Ok(Outcome::data(artifact(Format::Json, json(&report)?), summary))
}

/// The default sweep: orders used throughout the figures and checks. The
/// complex and `alpha = 3.5, 4.2` families go up to `ell = 3`.
pub const DEFAULT_SWEEP: &str = "1/0,1.5/0,2/0,2/1,3.5/0..3,3.2+1i/0..3,4.2/0..3";

/// Parses `z/ell` items separated by commas; `ell` may be a range `a..b`.
pub fn parse_orders(list: &str, shift: f64, extended: bool) -> CliResult<Vec<PseudoSplineOrder>> {
    let mut orders = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (z, ell) = item
            .split_once('/')
            .ok_or_else(|| CliError::Config(format!("sweep item {item:?} is not z/ell")))?;
        let z = parse_complex(z).map_err(|e| CliError::Config(format!("sweep item {item:?}: {e}")))?;
        let num = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| CliError::Config(format!("sweep item {item:?}: bad ell {s:?}")))
        };
        let (lo, hi) = match ell.split_once("..") {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(ell)?, num(ell)?),
        };
        for ell in lo..=hi {
            let order = if extended {
                PseudoSplineOrder::new_extended(z, ell, shift)
            } else {
                PseudoSplineOrder::new(z, ell, shift)
            };
            orders.push(order.map_err(|e| CliError::Config(format!("sweep item {item:?}: {e}")))?);
        }
    }
    if orders.is_empty() {
        return Err(CliError::Config("empty sweep list".into()));
    }
    Ok(orders)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub order: OrderSpec,
    pub extended_ell: bool,
    pub theta: f64,
    pub partition_min: f64,
    pub partition_max: f64,
    pub uep_diagonal: f64,
    pub uep_off_diagonal: f64,
    pub lowpass_ok: bool,
    pub lowpass_arctan_sum: f64,
    pub kappa: Option<f64>,
    pub holder_s: Option<f64>,
    pub approx_order: Option<f64>,
}

pub fn sweep_entry(cfg: &RunConfig, order: &PseudoSplineOrder) -> CliResult<SweepEntry> {
    let grid = TorusGrid::new(cfg.grid)?;
    let ext = partition_extrema(order, grid)?;
    let bank = bank(cfg, order)?;
    let verdict = lowpass_condition(order);
    let fractional = order.is_fractional();
    Ok(SweepEntry {
        order: order.spec(),
        extended_ell: order.is_extended(),
        theta: theta_bound(order),
        partition_min: ext.min,
        partition_max: ext.max,
        uep_diagonal: bank.diagonal_defect(),
        uep_off_diagonal: bank.off_diagonal_defect(),
        lowpass_ok: verdict.ok,
        lowpass_arctan_sum: verdict.arctan_sum,
        kappa: fractional.then(|| kappa(order)).transpose()?,
        holder_s: fractional.then(|| holder_exponent(order)).transpose()?,
        approx_order: fractional.then(|| approximation_order(order)).transpose()?,
    })
}

pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    // the built-in list deliberately includes ell beyond floor(alpha - 1/2)
    let orders = match &cfg.orders {
        Some(list) => parse_orders(list, cfg.shift, cfg.extended_ell)?,
        None => parse_orders(DEFAULT_SWEEP, cfg.shift, true)?,
    };
    let entries = orders
        .iter()
        .map(|o| sweep_entry(cfg, o))
        .collect::<CliResult<Vec<_>>>()?;
    let summary = format!("swept {} orders on a {}-point grid", entries.len(), cfg.grid);
    Ok(Outcome::data(artifact(Format::Json, json(&entries)?), summary))
}

/// Where the artifacts of a run go: an explicit path, the directory from
/// [`OUTPUT_DIR_ENV`], or nowhere (stdout).
pub fn destination(cfg: &RunConfig, env_dir: Option<PathBuf>) -> Option<PathBuf> {
    cfg.output.clone().or_else(|| {
        env_dir.map(|dir| {
            let ext = match cfg.command {
                Command::Verify | Command::Analyze | Command::Sweep => "json",
                _ => cfg.format.extension(),
            };
            dir.join(format!("{}_{}.{ext}", cfg.command.name(), cfg.tag()))
        })
    })
}

/// Path of one artifact: `<stem>_<suffix>.<ext>` for suffixed artifacts.
pub fn artifact_path(base: &Path, art: &Artifact) -> PathBuf {
    match &art.suffix {
        None => base.to_path_buf(),
        Some(suffix) => {
            let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            base.with_file_name(format!("{stem}_{suffix}.{}", art.extension))
        }
    }
}

/// Writes artifacts, prints summary/data, and returns the exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    match run(cfg).and_then(|outcome| emit(cfg, outcome, env_dir)) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn emit(cfg: &RunConfig, outcome: Outcome, env_dir: Option<PathBuf>) -> CliResult<()> {
    match destination(cfg, env_dir) {
        Some(base) => {
            for art in &outcome.artifacts {
                let path = artifact_path(&base, art);
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
                }
                std::fs::write(&path, &art.content)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            println!("{}", outcome.summary.trim_end());
        }
        None if outcome.summary_is_primary => println!("{}", outcome.summary.trim_end()),
        None => {
            for art in &outcome.artifacts {
                print!("{}", art.content);
            }
            eprintln!("{}", outcome.summary.trim_end());
        }
    }
    outcome.failure.map_or(Ok(()), Err)
}
