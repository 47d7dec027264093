//! Command-line driver: one subcommand per operation, CSV on the way out.
//!
//! Every parameter is a long flag. `--config FILE` reads `key = value` lines
//! using the same names without the dashes; flags win over the file.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 convergence or fit failure.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adiabaticity::{adiabaticity_series, max_adiabaticity};
use crate::error::CtapError;
use crate::evolution::{ensure_converged, propagate, Integrator, Network, PropagateOptions, StateVector, Stepper, Steps};
use crate::model::{build_ring, Detuning, PulseSchedule, RingSite, RING_DIM};
use crate::spectrum::eigendecompose;
use crate::sweeps::{
    antidiagonal_trace, default_sensitivity_step, fit_fringes, fringe_window, population_map, sensitivity_map,
    time_detuning_sweep, Axis, ConvergenceCheck, SweepOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

const UNITS: &str = "energies in Ω_max units, times in 1/Ω_max";

#[derive(Parser, Debug)]
#[command(name = "ctap", version, about = "Six-site CTAP interferometer simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Spectrum,
    Evolve,
    Map,
    Timesweep,
    Sensitivity,
    Fringes,
    Adiabaticity,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues (and optionally eigenvectors) of the ring against time.
    Spectrum(Params),
    /// Site populations against time from |1⟩.
    Evolve(Params),
    /// Final ρ₅₅ over Δu × Δd.
    Map(Params),
    /// Final ρ₅₅ over t_max × Δ with Δu = −Δd = Δ.
    Timesweep(Params),
    /// ∂ρ₅₅/∂Δu over Δu × Δd.
    Sensitivity(Params),
    /// Fidelity maxima along Δu = −Δd and the fitted fringe factor.
    Fringes(Params),
    /// Maximum adiabaticity of the five-site chain against detuning.
    Adiabaticity(Params),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Magnus4,
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Off,
    Spot,
    Every,
}

/// Raw flags; `None` falls back to the config file, then to the default.
#[derive(Args, Debug, Default, Clone)]
pub struct Params {
    /// key = value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write CSV here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_d: Option<f64>,
    /// Integration steps, or "auto".
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
    /// Output time samples (spectrum, evolve).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Add eigenvector components to the spectrum output.
    #[arg(long)]
    pub vectors: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub du_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub du_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dd_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dd_max: Option<f64>,
    /// Points per axis for map and sensitivity.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub delta_points: Option<usize>,
    #[arg(long)]
    pub t_from: Option<f64>,
    #[arg(long)]
    pub t_to: Option<f64>,
    #[arg(long)]
    pub t_points: Option<usize>,
    /// Finite-difference step for sensitivity.
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Step-doubling checks in sweeps.
    #[arg(long, value_enum)]
    pub check: Option<CheckArg>,
}

const KEYS: &[&str] = &[
    "omega_max",
    "t_max",
    "delta_u",
    "delta_d",
    "steps",
    "integrator",
    "samples",
    "vectors",
    "du_min",
    "du_max",
    "dd_min",
    "dd_max",
    "resolution",
    "delta_min",
    "delta_max",
    "delta_points",
    "t_from",
    "t_to",
    "t_points",
    "fd_step",
    "workers",
    "check",
    "output",
];

/// Fully resolved parameters of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub omega_max: f64,
    pub t_max: f64,
    pub delta_u: f64,
    pub delta_d: f64,
    pub steps: Steps,
    pub integrator: Integrator,
    pub samples: usize,
    pub vectors: bool,
    pub du: (f64, f64),
    pub dd: (f64, f64),
    pub resolution: usize,
    pub delta: (f64, f64, usize),
    pub t_range: (f64, f64, usize),
    pub fd_step: Option<f64>,
    pub workers: Option<usize>,
    pub check: ConvergenceCheck,
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(CtapError),
    Io(io::Error),
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Failure(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<CtapError> for CliError {
    fn from(e: CtapError) -> Self {
        match e {
            CtapError::NotConverged { .. }
            | CtapError::InsufficientFringes { .. }
            | CtapError::UnderResolved { .. }
            | CtapError::FringeTrackingLost { .. }
            | CtapError::DegenerateGap { .. } => CliError::Failure(e),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", k + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key '{key}'", k + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct Layer<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Layer<'_> {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => s.parse().map_err(|_| CliError::Usage(format!("config: bad value '{s}' for {key}"))),
            None => Ok(default),
        }
    }

    fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match (flag, self.file.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => s.parse().map(Some).map_err(|_| CliError::Usage(format!("config: bad value '{s}' for {key}"))),
            (None, None) => Ok(None),
        }
    }

    fn pick_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => T::from_str(s, true).map_err(|_| CliError::Usage(format!("config: bad value '{s}' for {key}"))),
            None => Ok(default),
        }
    }
}

fn parse_steps(s: &str) -> Result<Steps, CliError> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Steps::Auto);
    }
    s.parse().map(Steps::Fixed).map_err(|_| CliError::Usage(format!("steps must be an integer or 'auto', got '{s}'")))
}

impl RunConfig {
    /// Resolves flags over file values over the documented defaults.
    pub fn resolve(command: CommandKind, p: &Params, file: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let l = Layer { file };
        let omega_max = l.pick(p.omega_max, "omega_max", 1.0)?;
        let t_max = l.pick(p.t_max, "t_max", 1000.0 / omega_max)?;
        let steps = parse_steps(&l.pick(p.steps.clone(), "steps", "auto".to_string())?)?;
        let integrator = match l.pick_enum(p.integrator, "integrator", IntegratorArg::Magnus4)? {
            IntegratorArg::Magnus4 => Integrator::Magnus4,
            IntegratorArg::Midpoint => Integrator::Midpoint,
        };
        let vectors = p.vectors || l.pick(None, "vectors", false)?;
        let (d_lo, d_hi, d_n) = match command {
            CommandKind::Timesweep => (-0.2 * omega_max, 0.2 * omega_max, 201),
            CommandKind::Adiabaticity => (0.0, 0.1 * omega_max, 21),
            _ => {
                let w = fringe_window(t_max).map_err(|e| CliError::Usage(e.to_string()))?;
                (w.lo, w.hi, w.n)
            }
        };
        let workers = match l.pick_opt(p.workers, "workers")? {
            Some(0) | None => None,
            Some(k) => Some(k),
        };
        let check = match l.pick_enum(p.check, "check", CheckArg::Spot)? {
            CheckArg::Off => ConvergenceCheck::Off,
            CheckArg::Spot => ConvergenceCheck::Spot,
            CheckArg::Every => ConvergenceCheck::Every,
        };
        let cfg = RunConfig {
            command,
            omega_max,
            t_max,
            delta_u: l.pick(p.delta_u, "delta_u", 0.0)?,
            delta_d: l.pick(p.delta_d, "delta_d", 0.0)?,
            steps,
            integrator,
            samples: l.pick(p.samples, "samples", 500)?,
            vectors,
            du: (l.pick(p.du_min, "du_min", -omega_max)?, l.pick(p.du_max, "du_max", omega_max)?),
            dd: (l.pick(p.dd_min, "dd_min", -omega_max)?, l.pick(p.dd_max, "dd_max", omega_max)?),
            resolution: l.pick(p.resolution, "resolution", 201)?,
            delta: (
                l.pick(p.delta_min, "delta_min", d_lo)?,
                l.pick(p.delta_max, "delta_max", d_hi)?,
                l.pick(p.delta_points, "delta_points", d_n)?,
            ),
            t_range: (
                l.pick(p.t_from, "t_from", 200.0 / omega_max)?,
                l.pick(p.t_to, "t_to", 2000.0 / omega_max)?,
                l.pick(p.t_points, "t_points", 91)?,
            ),
            fd_step: l.pick_opt(p.fd_step, "fd_step")?,
            workers,
            check,
            output: match &p.output {
                Some(o) => Some(o.clone()),
                None => l.pick_opt(None, "output")?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let finite = [
            self.omega_max,
            self.t_max,
            self.delta_u,
            self.delta_d,
            self.du.0,
            self.du.1,
            self.dd.0,
            self.dd.1,
            self.delta.0,
            self.delta.1,
            self.t_range.0,
            self.t_range.1,
            self.fd_step.unwrap_or(1.0),
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Usage("all numeric parameters must be finite".into()));
        }
        for n in [self.resolution, self.delta.2, self.t_range.2, self.samples] {
            if n < 2 {
                return Err(CliError::Usage(format!("resolution {n} too small (need at least 2)")));
            }
        }
        PulseSchedule::new(self.omega_max, self.t_max)?;
        Ok(())
    }

    fn schedule(&self) -> Result<PulseSchedule, CtapError> {
        PulseSchedule::new(self.omega_max, self.t_max)
    }

    fn stepper(&self) -> Stepper {
        Stepper::new(self.integrator, self.steps)
    }

    fn sweep(&self) -> SweepOptions {
        SweepOptions { stepper: self.stepper(), workers: self.workers, convergence: self.check }
    }

    /// Parameters relevant to the command, in echo order.
    fn echo(&self) -> Vec<(&'static str, String)> {
        let steps = match self.steps {
            Steps::Auto => "auto".to_string(),
            Steps::Fixed(n) => n.to_string(),
        };
        let integrator = match self.integrator {
            Integrator::Magnus4 => "magnus4",
            Integrator::Midpoint => "midpoint",
        };
        let check = match self.check {
            ConvergenceCheck::Off => "off",
            ConvergenceCheck::Spot => "spot",
            ConvergenceCheck::Every => "every",
        };
        let mut v = vec![
            ("omega_max", num(self.omega_max)),
            ("t_max", num(self.t_max)),
            ("steps", steps),
            ("integrator", integrator.to_string()),
        ];
        use CommandKind::*;
        match self.command {
            Spectrum | Evolve => {
                v.push(("delta_u", num(self.delta_u)));
                v.push(("delta_d", num(self.delta_d)));
                v.push(("samples", self.samples.to_string()));
                if self.command == Spectrum {
                    v.push(("vectors", self.vectors.to_string()));
                } else {
                    v.push(("check", check.to_string()));
                }
            }
            Map | Sensitivity => {
                v.push(("du_min", num(self.du.0)));
                v.push(("du_max", num(self.du.1)));
                v.push(("dd_min", num(self.dd.0)));
                v.push(("dd_max", num(self.dd.1)));
                v.push(("resolution", self.resolution.to_string()));
                if let Some(h) = self.fd_step.filter(|_| self.command == Sensitivity) {
                    v.push(("fd_step", num(h)));
                }
                v.push(("check", check.to_string()));
            }
            Timesweep | Fringes | Adiabaticity => {
                v.push(("delta_min", num(self.delta.0)));
                v.push(("delta_max", num(self.delta.1)));
                v.push(("delta_points", self.delta.2.to_string()));
                if self.command == Timesweep {
                    v.push(("t_from", num(self.t_range.0)));
                    v.push(("t_to", num(self.t_range.1)));
                    v.push(("t_points", self.t_range.2.to_string()));
                }
                if self.command != Adiabaticity {
                    v.push(("check", check.to_string()));
                }
            }
        }
        if self.command == Adiabaticity {
            v.retain(|(k, _)| !matches!(*k, "steps" | "integrator"));
        }
        v
    }
}

/// Fixed 12-significant-digit formatting used for every value.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn axis(lo: f64, hi: f64, n: usize) -> Result<Axis, CtapError> {
    Axis::linear(lo, hi, n)
}

/// Header block plus CSV rows.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<(String, String)>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    fn write(&self, cfg: &RunConfig, name: &str, out: &mut dyn Write) -> Result<(), CliError> {
        writeln!(out, "# ctap {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command: {name}")?;
        writeln!(out, "# units: {UNITS}")?;
        for (k, v) in cfg.echo() {
            writeln!(out, "# {k} = {v}")?;
        }
        for (k, v) in &self.notes {
            writeln!(out, "# {k} = {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = cfg.schedule()?;
    let det = Detuning::new(cfg.delta_u, cfg.delta_d)?;
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=RING_DIM).map(|k| format!("E{k}")));
    if cfg.vectors {
        for k in 1..=RING_DIM {
            cols.extend(RingSite::ALL.iter().map(|site| format!("v{k}_{}", site.label())));
        }
    }
    let mut table = Table { columns: cols, rows: Vec::new(), notes: Vec::new() };
    for j in 0..cfg.samples {
        let t = s.t_max() * j as f64 / (cfg.samples - 1) as f64;
        let eig = eigendecompose(&build_ring(t, &s, det)?)?;
        let mut row = vec![num(t)];
        row.extend(eig.eigenvalues.iter().map(|&e| num(e)));
        if cfg.vectors {
            for v in &eig.eigenvectors {
                row.extend(v.iter().map(|&c| num(c)));
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn cmd_evolve(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = cfg.schedule()?;
    let det = Detuning::new(cfg.delta_u, cfg.delta_d)?;
    let opts = PropagateOptions { stepper: cfg.stepper(), samples: cfg.samples };
    let traj = propagate(&s, Network::Ring(det), &opts, &StateVector::site(RING_DIM, 0)?)?;
    if cfg.check != ConvergenceCheck::Off {
        ensure_converged(&s, det, cfg.stepper())?;
    }
    let mut table = Table::new(&["t", "rho_1", "rho_2", "rho_3u", "rho_3d", "rho_4", "rho_5", "norm"]);
    for (t, p) in traj.times.iter().zip(&traj.populations) {
        let mut row = vec![num(*t)];
        row.extend(p.iter().map(|&x| num(x)));
        row.push(num(p.iter().sum()));
        table.rows.push(row);
    }
    Ok(table)
}

fn cmd_map(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = cfg.schedule()?;
    let du = axis(cfg.du.0, cfg.du.1, cfg.resolution)?;
    let dd = axis(cfg.dd.0, cfg.dd.1, cfg.resolution)?;
    let map = population_map(&s, &du, &dd, &cfg.sweep())?;
    let mut table = Table::new(&["delta_u", "delta_d", "rho_55"]);
    for (i, a) in map.axis1.iter().enumerate() {
        for (j, b) in map.axis2.iter().enumerate() {
            table.rows.push(vec![num(*a), num(*b), num(map.get(i, j))]);
        }
    }
    Ok(table)
}

fn cmd_timesweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let t = axis(cfg.t_range.0, cfg.t_range.1, cfg.t_range.2)?;
    let d = axis(cfg.delta.0, cfg.delta.1, cfg.delta.2)?;
    let map = time_detuning_sweep(cfg.omega_max, &t, &d, &cfg.sweep())?;
    let mut table = Table::new(&["t_max", "delta", "rho_55"]);
    for (i, a) in map.axis1.iter().enumerate() {
        for (j, b) in map.axis2.iter().enumerate() {
            table.rows.push(vec![num(*a), num(*b), num(map.get(i, j))]);
        }
    }
    Ok(table)
}

fn cmd_sensitivity(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = cfg.schedule()?;
    let du = axis(cfg.du.0, cfg.du.1, cfg.resolution)?;
    let dd = axis(cfg.dd.0, cfg.dd.1, cfg.resolution)?;
    let step = cfg.fd_step.unwrap_or_else(|| default_sensitivity_step(&s));
    let map = sensitivity_map(&s, &du, &dd, step, &cfg.sweep())?;
    let mut table = Table::new(&["delta_u", "delta_d", "drho_55_ddelta_u"]);
    table.notes.push(("fd_step_used".into(), num(step)));
    for (i, a) in map.axis1.iter().enumerate() {
        for (j, b) in map.axis2.iter().enumerate() {
            table.rows.push(vec![num(*a), num(*b), num(map.get(i, j))]);
        }
    }
    Ok(table)
}

fn cmd_fringes(cfg: &RunConfig, err: &mut dyn Write) -> Result<Table, CliError> {
    let s = cfg.schedule()?;
    let d = axis(cfg.delta.0, cfg.delta.1, cfg.delta.2)?;
    let trace = antidiagonal_trace(&s, &d, &cfg.sweep())?;
    let fit = fit_fringes(&trace, s.t_max())?;
    let _ = writeln!(err, "fringe factor f = {:.4}", fit.factor);
    let mut table = Table::new(&["n", "delta_n", "residual"]);
    table.notes.push(("fringe_factor".into(), num(fit.factor)));
    table.notes.push(("mean_spacing".into(), num(fit.mean_spacing)));
    table.notes.push(("max_residual".into(), num(fit.max_residual())));
    for ((n, p), r) in fit.orders.iter().zip(&fit.positions).zip(&fit.residuals) {
        table.rows.push(vec![n.to_string(), num(*p), num(*r)]);
    }
    Ok(table)
}

fn cmd_adiabaticity(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = cfg.schedule()?;
    let d = axis(cfg.delta.0, cfg.delta.1, cfg.delta.2)?;
    let mut table = Table::new(&["delta", "a_max_numeric", "a_series", "t_at_max"]);
    for delta in d.values() {
        let peak = max_adiabaticity(&s, delta)?;
        table.rows.push(vec![num(delta), num(peak.value), num(adiabaticity_series(&s, delta)), num(peak.t)]);
    }
    Ok(table)
}

fn dispatch(cmd: &Command) -> (CommandKind, &Params) {
    match cmd {
        Command::Spectrum(p) => (CommandKind::Spectrum, p),
        Command::Evolve(p) => (CommandKind::Evolve, p),
        Command::Map(p) => (CommandKind::Map, p),
        Command::Timesweep(p) => (CommandKind::Timesweep, p),
        Command::Sensitivity(p) => (CommandKind::Sensitivity, p),
        Command::Fringes(p) => (CommandKind::Fringes, p),
        Command::Adiabaticity(p) => (CommandKind::Adiabaticity, p),
    }
}

fn name(kind: CommandKind) -> &'static str {
    match kind {
        CommandKind::Spectrum => "spectrum",
        CommandKind::Evolve => "evolve",
        CommandKind::Map => "map",
        CommandKind::Timesweep => "timesweep",
        CommandKind::Sensitivity => "sensitivity",
        CommandKind::Fringes => "fringes",
        CommandKind::Adiabaticity => "adiabaticity",
    }
}

/// Runs an already-resolved configuration, writing CSV to `out` unless an
/// output path is set.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let table = match cfg.command {
        CommandKind::Spectrum => cmd_spectrum(cfg)?,
        CommandKind::Evolve => cmd_evolve(cfg)?,
        CommandKind::Map => cmd_map(cfg)?,
        CommandKind::Timesweep => cmd_timesweep(cfg)?,
        CommandKind::Sensitivity => cmd_sensitivity(cfg)?,
        CommandKind::Fringes => cmd_fringes(cfg, err)?,
        CommandKind::Adiabaticity => cmd_adiabaticity(cfg)?,
    };
    match &cfg.output {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            table.write(cfg, name(cfg.command), &mut f)?;
            f.flush()?;
        }
        None => table.write(cfg, name(cfg.command), out)?,
    }
    Ok(())
}

/// Full entry point: parse, resolve, run. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (kind, params) = dispatch(&cli.command);
    let result = (|| {
        let file = match &params.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let cfg = RunConfig::resolve(kind, params, &file)?;
        execute(&cfg, out, err)
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("ctap").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn rows(csv: &str) -> Vec<Vec<String>> {
        csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
    }

    #[test]
    fn number_format_has_twelve_significant_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(num(0.25).parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn config_parsing() {
        let m = parse_config("# comment\nt_max = 50\nomega-max=2 # trailing\n\n").unwrap();
        assert_eq!(m["t_max"], "50");
        assert_eq!(m["omega_max"], "2");
        assert!(matches!(parse_config("bogus = 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("t_max 50"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_file_and_defaults_fill_the_rest() {
        let file = parse_config("t_max = 50\ndelta_u = 0.3").unwrap();
        let p = Params { t_max: Some(80.0), ..Default::default() };
        let cfg = RunConfig::resolve(CommandKind::Evolve, &p, &file).unwrap();
        assert_eq!(cfg.t_max, 80.0);
        assert_eq!(cfg.delta_u, 0.3);
        assert_eq!(cfg.omega_max, 1.0);
        assert_eq!(cfg.steps, Steps::Auto);
        assert_eq!(cfg.samples, 500);
        let map = RunConfig::resolve(CommandKind::Map, &Params::default(), &BTreeMap::new()).unwrap();
        assert_eq!((map.du, map.dd, map.resolution, map.t_max), ((-1.0, 1.0), (-1.0, 1.0), 201, 1000.0));
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        let bad = |p: Params| RunConfig::resolve(CommandKind::Map, &p, &BTreeMap::new()).unwrap_err().exit_code();
        assert_eq!(bad(Params { resolution: Some(1), ..Default::default() }), EXIT_USAGE);
        assert_eq!(bad(Params { t_max: Some(-1.0), ..Default::default() }), EXIT_USAGE);
        assert_eq!(bad(Params { du_min: Some(f64::NAN), ..Default::default() }), EXIT_USAGE);
        assert_eq!(bad(Params { steps: Some("many".into()), ..Default::default() }), EXIT_USAGE);
        assert_eq!(run_str(&["map", "--resolution", "x"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["nonsense"]).0, EXIT_USAGE);
    }

    #[test]
    fn spectrum_rows_and_degenerate_middle() {
        let (code, out, _) = run_str(&["spectrum", "--t-max", "10", "--samples", "7"]);
        assert_eq!(code, 0);
        assert!(out.contains("# units: energies in Ω_max units, times in 1/Ω_max"));
        let r = rows(&out);
        assert_eq!(r.len(), 7);
        for row in &r {
            assert_eq!(row.len(), 7);
            assert!(row[3].parse::<f64>().unwrap().abs() < 1e-12);
            assert!(row[4].parse::<f64>().unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_midpoint_gap() {
        let (_, out, _) = run_str(&["spectrum", "--t-max", "10", "--samples", "3", "--delta-u", "0.25", "--delta-d", "-0.25", "--vectors"]);
        let mid = &rows(&out)[1];
        assert_eq!(mid.len(), 1 + 6 + 36);
        let gap = mid[4].parse::<f64>().unwrap() - mid[3].parse::<f64>().unwrap();
        assert!((gap - 0.5 / 5f64.sqrt()).abs() < 0.01, "{gap}");
    }

    #[test]
    fn evolve_first_and_last_rows() {
        let (code, out, _) = run_str(&["evolve", "--t-max", "200", "--samples", "50"]);
        assert_eq!(code, 0);
        let r = rows(&out);
        assert_eq!(r.len(), 50);
        let first: Vec<f64> = r[0][1..7].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(first, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(r[49][6].parse::<f64>().unwrap() >= 0.999);
        assert!(r.iter().all(|row| (row[7].parse::<f64>().unwrap() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn convergence_failure_exits_with_three() {
        let (code, _, err) = run_str(&["evolve", "--t-max", "300", "--steps", "30", "--delta-u", "0.7", "--delta-d", "-0.7"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("not converged"), "{err}");
    }

    #[test]
    fn fringe_fit_failure_exits_with_three() {
        let (code, _, err) = run_str(&["fringes", "--t-max", "1000", "--delta-max", "1", "--delta-points", "20"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("samples per expected fringe period"), "{err}");
    }

    #[test]
    fn adiabaticity_zero_detuning_columns_agree() {
        let (code, out, _) = run_str(&["adiabaticity", "--t-max", "100", "--delta-points", "3", "--delta-max", "0.02"]);
        assert_eq!(code, 0);
        let r = rows(&out);
        let (a, b): (f64, f64) = (r[0][1].parse().unwrap(), r[0][2].parse().unwrap());
        assert!((a - b).abs() / b < 1e-6);
        assert_eq!(r.len(), 3);
    }
}
