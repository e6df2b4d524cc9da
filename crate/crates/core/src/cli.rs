//! Command line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::conditions::{condition_reports, ConditionReport};
use crate::config::{parse_config, parse_grid, parse_tau_range, ConfigError, Preset, RunConfig, SchemeEntry};
use crate::error::Error;
use crate::experiments::output::{
    convergence_csv, convergence_svg, slopes_csv, sweep_csv, sweep_svg, trajectory_csv,
};
use crate::experiments::{convergence_study, default_reference, scheme_label, sharpness_sweep, CellClass};
use crate::fem::export::matrix_market;
use crate::steppers::{run, RunStatus, Scheme, SchemeConfig, Startup};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },

    #[error(transparent)]
    Numerics(#[from] Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "thermoporo", version, about = "Time stepping experiments for linear thermo-poroelasticity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the system matrices in MatrixMarket format
    Assemble(CommonArgs),
    /// Evaluate the weak coupling conditions
    CheckConditions(CommonArgs),
    /// Integrate with each configured scheme
    Run(CommonArgs),
    /// Temporal convergence study against a fine reference
    Convergence(CommonArgs),
    /// The (alpha, c0_tilde) sweep on the toy system
    Sharpness(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// problem preset: geothermal or toy
    #[arg(long)]
    pub preset: Option<Preset>,
    /// TOML configuration file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// mesh subdivisions per side
    #[arg(long)]
    pub n: Option<usize>,
    /// final time
    #[arg(long = "final-time")]
    pub final_time: Option<f64>,
    /// sharpness grid `RxC`
    #[arg(long)]
    pub grid: Option<String>,
    /// a step size, or `start:halve:count`
    #[arg(long)]
    pub tau: Option<String>,
    /// comma separated scheme ids
    #[arg(long = "schemes", alias = "scheme", value_delimiter = ',')]
    pub schemes: Vec<Scheme>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "Lp")]
    pub l_p: Option<f64>,
    #[arg(long = "Ltheta")]
    pub l_theta: Option<f64>,
    /// inner iterations
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// constant_history or implicit_euler_step
    #[arg(long)]
    pub startup: Option<Startup>,
    /// exit with status 2 when a run diverges
    #[arg(long)]
    pub strict: bool,
}

fn spanned<T>(v: T) -> toml::Spanned<T> {
    toml::Spanned::new(0..0, v)
}

/// Merges the configuration file and the flags into one configuration.
pub fn resolve_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text).map_err(|source| CliError::Config {
                path: path.display().to_string(),
                source,
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = args.preset {
        cfg.problem.preset = p;
    }
    if let Some(n) = args.n {
        cfg.problem.n = Some(spanned(n));
    }
    if let Some(t) = args.final_time {
        cfg.problem.final_time = Some(spanned(t));
    }
    if let Some(g) = &args.grid {
        parse_grid(g).map_err(CliError::Usage)?;
        cfg.experiment.grid = Some(spanned(g.clone()));
    }
    let mut single_tau = None;
    if let Some(t) = &args.tau {
        if t.contains(':') {
            parse_tau_range(t).map_err(CliError::Usage)?;
            cfg.experiment.tau_range = Some(spanned(t.clone()));
            cfg.experiment.taus = None;
        } else {
            let v: f64 = t.parse().map_err(|_| CliError::Usage(format!("bad --tau `{t}`")))?;
            single_tau = Some(v);
            cfg.experiment.taus = Some(spanned(vec![v]));
        }
    }
    if !args.schemes.is_empty() {
        cfg.schemes = args.schemes.iter().map(|&s| SchemeEntry::new(s)).collect();
    }
    for e in &mut cfg.schemes {
        if let Some(v) = single_tau {
            e.tau = Some(spanned(v));
        }
        if let Some(v) = args.sigma {
            e.sigma = Some(spanned(v));
        }
        if let Some(v) = args.l_p {
            e.l_p = Some(spanned(v));
        }
        if let Some(v) = args.l_theta {
            e.l_theta = Some(spanned(v));
        }
        if let Some(v) = args.k {
            e.k = Some(spanned(v));
        }
        if let Some(v) = args.startup {
            e.startup = Some(v);
        }
    }
    if let Some(o) = &args.out {
        cfg.experiment.out = Some(o.clone());
    }
    if args.strict {
        cfg.experiment.strict = Some(true);
    }
    cfg.validate().map_err(|source| CliError::Config {
        path: "command line".into(),
        source,
    })?;
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.experiment.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Scheme configurations, or `defaults` when none are configured.
fn schemes_or(cfg: &RunConfig, defaults: &[Scheme]) -> Vec<SchemeConfig> {
    let mut s = cfg.scheme_configs();
    if s.is_empty() {
        s = defaults
            .iter()
            .map(|&sc| {
                let mut c = SchemeConfig::new(sc, SchemeConfig::default().tau);
                c.final_time = cfg.problem.final_time.as_ref().map(|t| *t.get_ref());
                c
            })
            .collect();
    }
    s
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
    };
}

/// Exit status `0` on success, `2` for divergence under `--strict`.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<u8, CliError> {
    let (args, kind) = match command {
        Command::Assemble(a) => (a, 0),
        Command::CheckConditions(a) => (a, 1),
        Command::Run(a) => (a, 2),
        Command::Convergence(a) => (a, 3),
        Command::Sharpness(a) => (a, 4),
    };
    let cfg = resolve_config(args)?;
    match kind {
        0 => assemble(&cfg, out),
        1 => check_conditions(&cfg, out),
        2 => run_schemes(&cfg, out),
        3 => convergence(&cfg, out),
        _ => sharpness(&cfg, out),
    }
}

fn assemble(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let (sys, _) = cfg.build_problem()?;
    let dir = out_dir(cfg);
    let blocks = [
        ("A", &sys.a),
        ("B", &sys.b),
        ("B_tilde", &sys.b_tilde),
        ("C", &sys.c),
        ("C_hat", &sys.c_hat),
        ("C_tilde", &sys.c_tilde),
        ("D", &sys.d),
        ("D_tilde", &sys.d_tilde),
        ("M", &sys.mass),
    ];
    say!(out, "n_u = {}, n_p = {}, n_theta = {}", sys.n_u(), sys.n_p(), sys.n_theta())?;
    for (name, m) in blocks {
        let path = write_file(&dir, &format!("{name}.mtx"), &matrix_market(m))?;
        say!(out, "{name:8} {:>5} x {:<5} nnz {:>7}  {}", m.nrows(), m.ncols(), m.nnz(), path.display())?;
    }
    Ok(0)
}

fn check_conditions(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let (sys, _) = cfg.build_problem()?;
    let reports = condition_reports(&sys)?;
    let mut csv = format!("{}\n", ConditionReport::CSV_HEADER);
    for r in &reports {
        say!(out, "{r}")?;
        say!(
            out,
            "{} mode: omega_HD = {:.3}, omega_FD = {:.3}\n",
            r.constants.provenance,
            r.omega_hd,
            r.omega_fd
        )?;
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let path = write_file(&out_dir(cfg), "conditions.csv", &csv)?;
    say!(out, "wrote {}", path.display())?;
    Ok(0)
}

fn run_schemes(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let (sys, data) = cfg.build_problem()?;
    let dir = out_dir(cfg);
    let mut diverged = false;
    for c in schemes_or(cfg, &[Scheme::ImplicitEuler]) {
        let traj = run(&sys, &data, &c)?;
        let label = scheme_label(&c);
        let path = write_file(&dir, &format!("trajectory_{}.csv", file_label(&label)), &trajectory_csv(&traj, &sys)?)?;
        let status = match traj.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::Diverged { step } => {
                diverged = true;
                format!("DIVERGED at step {step}")
            }
        };
        say!(
            out,
            "{label}: tau = {}, {} steps, t = {}, {status}  {}",
            c.tau,
            traj.states.len() - 1,
            traj.final_time(),
            path.display()
        )?;
    }
    Ok(if diverged && cfg.experiment.strict == Some(true) { 2 } else { 0 })
}

fn convergence(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let (sys, data) = cfg.build_problem()?;
    let taus = cfg.taus().unwrap_or_else(|| {
        let start = match cfg.problem.preset {
            Preset::Geothermal => 0.125,
            Preset::Toy => data.final_time / 8.0,
        };
        crate::experiments::halving_taus(start, 6)
    });
    let schemes = schemes_or(
        cfg,
        &[Scheme::ImplicitEuler, Scheme::SemiExplicitHalf, Scheme::SemiExplicitFull],
    );
    let mut reference = default_reference(&taus);
    if let Some(s) = cfg.experiment.reference_scheme {
        reference.scheme = s;
    }
    if let Some(t) = &cfg.experiment.reference_tau {
        reference.tau = *t.get_ref();
    }
    reference.final_time = cfg.problem.final_time.as_ref().map(|t| *t.get_ref());
    let table = convergence_study(&sys, &data, &schemes, &taus, &reference)?;
    let dir = out_dir(cfg);
    let p1 = write_file(&dir, "convergence.csv", &convergence_csv(&table))?;
    let p2 = write_file(&dir, "slopes.csv", &slopes_csv(&table))?;
    let p3 = write_file(&dir, "convergence.svg", &convergence_svg(&table))?;
    say!(out, "reference: {} with tau = {}", reference.scheme, reference.tau)?;
    say!(out, "{:<36} {:>14} {:>14}", "scheme", "tau", "e_T")?;
    for r in &table.rows {
        say!(out, "{:<36} {:>14.6e} {:>14.6e}", r.label, r.tau, r.errors.e_total)?;
    }
    let mut diverged = table.rows.iter().any(|r| r.diverged);
    for (label, slope) in &table.slopes {
        match slope {
            Some(s) => say!(out, "slope {label}: {s:.3}")?,
            None => {
                diverged = true;
                say!(out, "slope {label}: not enough points below the fit cutoff")?
            }
        }
    }
    say!(out, "wrote {}, {}, {}", p1.display(), p2.display(), p3.display())?;
    Ok(if diverged && cfg.experiment.strict == Some(true) { 2 } else { 0 })
}

fn sharpness(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let schemes: Vec<Scheme> = match cfg.schemes.is_empty() {
        true => vec![Scheme::SemiExplicitHalf, Scheme::SemiExplicitFull],
        false => cfg.scheme_configs().iter().map(|c| c.scheme).collect(),
    };
    let dir = out_dir(cfg);
    let mut diverged = false;
    for scheme in schemes {
        let sc = cfg.sweep_config(scheme);
        let cells = sharpness_sweep(&sc)?;
        let count = |c: CellClass| cells.iter().filter(|x| x.class == c).count();
        let bad = cells
            .iter()
            .filter(|c| c.omega <= 1.0 && c.class == CellClass::Diverged)
            .count();
        diverged |= count(CellClass::Diverged) > 0;
        let p1 = write_file(&dir, &format!("sharpness_{scheme}.csv"), &sweep_csv(&cells))?;
        let p2 = write_file(&dir, &format!("sharpness_{scheme}.svg"), &sweep_svg(&cells, sc.rows, sc.cols))?;
        say!(
            out,
            "{scheme} {}x{}: guaranteed {}, converged {}, diverged {} (diverged with omega <= 1: {bad})",
            sc.rows,
            sc.cols,
            count(CellClass::Guaranteed),
            count(CellClass::Converged),
            count(CellClass::Diverged)
        )?;
        say!(out, "wrote {}, {}", p1.display(), p2.display())?;
    }
    Ok(if diverged && cfg.experiment.strict == Some(true) { 2 } else { 0 })
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli.command, &mut lock) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
