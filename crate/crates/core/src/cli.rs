//! Front end for the `tfse` binary: configuration, experiment dispatch and
//! CSV / SVG output.
//!
//! Configuration comes from a flat `key = value` file (`--config PATH`, or
//! `tfse.conf` in the working directory) overlaid by command-line flags.
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::caputo::truncation_probe;
use crate::experiments::{
    convergence_table, default_space_steps, grid_ratio_study, manufactured_errors, stability_experiment,
    two_mesh_table, Example,
};
use crate::grid::MeshSpec;
use crate::linsolve::{Backend, DENSE_MAX_M};
use crate::rates::log2_rate;
use crate::stepper::{run_with, RunOptions, DEFAULT_MEMORY_CAP};

/// Config file looked up in the working directory when `--config` is absent.
pub const DEFAULT_CONFIG_FILE: &str = "tfse.conf";

/// Extra ladder entry enabled by `--extended` for `table1`.
pub const EXTENDED_STEPS: usize = 8192;

/// Default `(τ, h)` cells of the grid-ratio study.
pub const DEFAULT_PAIRS: [(f64, f64); 4] = [(0.01, 0.1), (0.005, 0.05), (0.1, 0.01), (0.05, 0.005)];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Help(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

fn usage(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{key}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Run one example for each (alpha, N)
    Solve,
    /// Local/global errors of the manufactured solution, M = ceil(sqrt(N))
    Table1,
    /// Manufactured solution on explicit (tau, h) pairs
    Table2,
    /// Two-mesh error estimates (examples 2 and 3)
    TwoMesh,
    /// Sensitivity to perturbed initial data
    Stability,
    /// L1 truncation error for u(t) = t^gamma
    ProbeKernel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::TwoMesh => "two-mesh",
            Command::Stability => "stability",
            Command::ProbeKernel => "probe-kernel",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tfse", version, about = "Linearized L1 solver for the 2D time-fractional nonlinear Schrödinger equation")]
struct Flags {
    #[arg(value_enum)]
    command: Command,
    /// Comma-separated fractional orders in (0, 1)
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated step counts N (two-mesh: finer count of each pair)
    #[arg(long)]
    nsteps: Option<String>,
    /// Spatial subdivisions per axis
    #[arg(long)]
    mgrid: Option<String>,
    /// Test problem: 1, 2 or 3
    #[arg(long)]
    example: Option<String>,
    /// Linear solver: dst or dense
    #[arg(long)]
    backend: Option<String>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG convergence plot
    #[arg(long)]
    plot: bool,
    /// Add the N = 8192 row to table1
    #[arg(long)]
    extended: bool,
    /// Cap on stored history in bytes
    #[arg(long = "memory-cap")]
    memory_cap: Option<String>,
    /// Comma-separated perturbation sizes for `stability`
    #[arg(long)]
    epsilon: Option<String>,
    /// Comma-separated exponents for `probe-kernel` (default: gamma = alpha)
    #[arg(long)]
    gamma: Option<String>,
    /// Comma-separated tau:h pairs for `table2`
    #[arg(long)]
    pairs: Option<String>,
    /// Config file of key = value lines
    #[arg(long)]
    config: Option<PathBuf>,
}

const CONFIG_KEYS: [&str; 12] = [
    "alpha", "nsteps", "mgrid", "example", "backend", "out", "plot", "extended", "memory_cap_bytes", "epsilon",
    "gamma", "pairs",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: Vec<f64>,
    pub nsteps: Vec<usize>,
    pub mgrid: Option<usize>,
    pub example: Example,
    pub backend: Backend,
    pub out: Option<PathBuf>,
    pub plot: bool,
    pub extended: bool,
    pub memory_cap_bytes: u64,
    pub epsilon: Vec<f64>,
    /// Empty means `γ = α`.
    pub gamma: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
}

impl RunConfig {
    pub fn run_options(&self) -> RunOptions {
        RunOptions { backend: self.backend, memory_cap_bytes: self.memory_cap_bytes, precompute_forcing: false }
    }

    fn solve_m(&self, n: usize) -> usize {
        self.mgrid.unwrap_or(match self.example {
            Example::Manufactured => default_space_steps(n),
            _ => 50,
        })
    }

    /// Largest spatial M any run of this configuration uses.
    fn max_m(&self) -> usize {
        match self.command {
            Command::Solve => self.nsteps.iter().map(|&n| self.solve_m(n)).max().unwrap_or(2),
            Command::Table1 => self
                .mgrid
                .unwrap_or_else(|| self.nsteps.iter().map(|&n| default_space_steps(n)).max().unwrap_or(2)),
            Command::Table2 => self.pairs.iter().map(|&(_, h)| (1.0 / h).round() as usize).max().unwrap_or(2),
            Command::TwoMesh => self.mgrid.unwrap_or(50),
            Command::Stability => self.mgrid.unwrap_or(32),
            Command::ProbeKernel => 0,
        }
    }
}

fn parse_list<T, F>(key: &str, raw: &str, item: F) -> Result<Vec<T>, CliError>
where
    F: Fn(&str) -> Result<T, String>,
{
    let out: Result<Vec<T>, CliError> =
        raw.split(',').map(|s| item(s.trim()).map_err(|e| usage(key, e))).collect();
    let out = out?;
    if out.is_empty() {
        return Err(usage(key, "empty list"));
    }
    Ok(out)
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("'{s}' is not a number")).and_then(|v| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("'{s}' is not finite"))
        }
    })
}

fn parse_bool(key: &str, s: &str) -> Result<bool, CliError> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(usage(key, format!("'{other}' is not a boolean"))),
    }
}

/// Parses a flat `key = value` file. `#` starts a comment line.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", lineno + 1)));
        };
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(usage(&key, "unknown config key"));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Builds a [`RunConfig`] from `argv` (program name first) and the text of an
/// optional config file. Flags take precedence over file keys.
pub fn parse_config<I, T>(argv: I, config_file: Option<&str>) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Help(e.to_string())
        }
        _ => CliError::Usage(e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string()),
    })?;
    let mut map = match config_file {
        Some(text) => parse_config_file(text)?,
        None => BTreeMap::new(),
    };
    let overlay = [
        ("alpha", flags.alpha.clone()),
        ("nsteps", flags.nsteps.clone()),
        ("mgrid", flags.mgrid.clone()),
        ("example", flags.example.clone()),
        ("backend", flags.backend.clone()),
        ("out", flags.out.as_ref().map(|p| p.to_string_lossy().into_owned())),
        ("memory_cap_bytes", flags.memory_cap.clone()),
        ("epsilon", flags.epsilon.clone()),
        ("gamma", flags.gamma.clone()),
        ("pairs", flags.pairs.clone()),
        ("plot", flags.plot.then(|| "true".to_string())),
        ("extended", flags.extended.then(|| "true".to_string())),
    ];
    for (key, value) in overlay {
        if let Some(v) = value {
            map.insert(key.to_string(), v);
        }
    }
    build_config(flags.command, &map)
}

fn build_config(command: Command, map: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let get = |k: &str| map.get(k).map(String::as_str);

    let alpha = match get("alpha") {
        Some(raw) => parse_list("alpha", raw, parse_f64)?,
        None => vec![0.5],
    };
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(usage("alpha", format!("{a} is outside (0, 1)")));
    }

    let mut nsteps = match get("nsteps") {
        Some(raw) => parse_list("nsteps", raw, |s| {
            s.parse::<usize>().map_err(|_| format!("'{s}' is not a positive integer"))
        })?,
        None => match command {
            Command::TwoMesh => vec![64, 128, 256, 512, 1024],
            Command::ProbeKernel => vec![64, 128, 256, 512, 1024],
            Command::Stability => vec![64, 128, 256],
            _ => vec![512],
        },
    };
    if nsteps.contains(&0) {
        return Err(usage("nsteps", "N must be at least 1"));
    }

    let mgrid = match get("mgrid") {
        Some(raw) => {
            let m = raw.parse::<usize>().map_err(|_| usage("mgrid", format!("'{raw}' is not an integer")))?;
            if m < 2 {
                return Err(usage("mgrid", "M must be at least 2"));
            }
            Some(m)
        }
        None => None,
    };

    let example: Example = match get("example") {
        Some(raw) => raw.parse().map_err(|e| usage("example", e))?,
        None => match command {
            Command::TwoMesh => Example::SmoothInitial,
            _ => Example::Manufactured,
        },
    };
    if command == Command::TwoMesh && example == Example::Manufactured {
        return Err(usage("example", "two-mesh needs example 2 or 3"));
    }
    if command == Command::TwoMesh {
        if let Some(n) = nsteps.iter().find(|n| **n < 2 || **n % 2 == 1) {
            return Err(usage("nsteps", format!("two-mesh step counts must be even, got {n}")));
        }
    }

    let backend: Backend = match get("backend") {
        Some(raw) => raw.parse().map_err(|e| usage("backend", e))?,
        None => Backend::Dst,
    };

    let memory_cap_bytes = match get("memory_cap_bytes") {
        Some(raw) => raw.parse::<u64>().map_err(|_| usage("memory_cap_bytes", format!("'{raw}' is not an integer")))?,
        None => DEFAULT_MEMORY_CAP,
    };

    let epsilon = match get("epsilon") {
        Some(raw) => parse_list("epsilon", raw, parse_f64)?,
        None => vec![1e-3, 1e-6],
    };
    if epsilon.iter().any(|e| *e < 0.0) {
        return Err(usage("epsilon", "perturbations must be non-negative"));
    }

    let gamma = match get("gamma") {
        Some(raw) => parse_list("gamma", raw, parse_f64)?,
        None => Vec::new(),
    };
    if gamma.iter().any(|g| *g <= 0.0) {
        return Err(usage("gamma", "exponents must be positive"));
    }

    let pairs = match get("pairs") {
        Some(raw) => parse_list("pairs", raw, |s| {
            let (t, h) = s.split_once(':').ok_or_else(|| format!("'{s}' is not tau:h"))?;
            Ok((parse_f64(t)?, parse_f64(h)?))
        })?,
        None => DEFAULT_PAIRS.to_vec(),
    };
    for &(tau, h) in &pairs {
        MeshSpec::from_steps(alpha[0], 1.0, 1.0, h, tau).map_err(|e| usage("pairs", e))?;
    }

    let plot = get("plot").map(|v| parse_bool("plot", v)).transpose()?.unwrap_or(false);
    let extended = get("extended").map(|v| parse_bool("extended", v)).transpose()?.unwrap_or(false);
    if extended && command == Command::Table1 && !nsteps.contains(&EXTENDED_STEPS) {
        nsteps.push(EXTENDED_STEPS);
    }

    let cfg = RunConfig {
        command,
        alpha,
        nsteps,
        mgrid,
        example,
        backend,
        out: get("out").map(PathBuf::from),
        plot,
        extended,
        memory_cap_bytes,
        epsilon,
        gamma,
        pairs,
    };
    if cfg.backend == Backend::Dense && cfg.max_m() > DENSE_MAX_M {
        return Err(usage(
            "backend",
            format!("dense backend supports M <= {DENSE_MAX_M}, this run needs M = {}", cfg.max_m()),
        ));
    }
    Ok(cfg)
}

/// Parses `argv`, reading `--config` or `tfse.conf` from the working
/// directory when present.
pub fn load_config(argv: Vec<String>) -> Result<RunConfig, CliError> {
    let explicit = argv.iter().position(|a| a == "--config").and_then(|i| argv.get(i + 1)).cloned().or_else(|| {
        argv.iter().find_map(|a| a.strip_prefix("--config=").map(str::to_string))
    });
    let text = match explicit {
        Some(path) => Some(std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{path}: {e}")))?),
        None => {
            let p = Path::new(DEFAULT_CONFIG_FILE);
            if p.is_file() {
                Some(std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{DEFAULT_CONFIG_FILE}: {e}")))?)
            } else {
                None
            }
        }
    };
    parse_config(argv, text.as_deref())
}

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(usize),
    /// Input parameter, printed in shortest round-trip form.
    Param(f64),
    /// Measured quantity, printed with 6 significant digits.
    Value(f64),
    Blank,
}

impl Cell {
    fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Blank, Cell::Value)
    }

    fn render(&self) -> String {
        match *self {
            Cell::Int(i) => i.to_string(),
            Cell::Param(p) => format!("{p}"),
            Cell::Value(v) => format_sci(v),
            Cell::Blank => String::new(),
        }
    }
}

/// `d.ddddde±XX`: 6 significant digits, lowercase `e`, at least two exponent
/// digits.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// A labelled series for the convergence plot: `(N, error)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Draw a reference line of this log-log slope.
    pub guide_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub plot: PlotSpec,
}

pub fn render_csv(table: &Table) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Header plus rows; to `out`, or stdout when `out` is `None`.
pub fn emit_csv(table: &Table, out: Option<&Path>) -> Result<(), CliError> {
    let text = render_csv(table)?;
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// SVG of `log₂ error` against `log₂ N`, one polyline per series. Series
/// with fewer than two positive points are skipped.
pub fn render_svg(plot: &PlotSpec) -> String {
    let series: Vec<(&str, Vec<(f64, f64)>)> = plot
        .series
        .iter()
        .map(|s| {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|(_, e)| *e > 0.0 && e.is_finite())
                .map(|&(n, e)| ((n as f64).log2(), e.log2()))
                .collect();
            (s.label.as_str(), pts)
        })
        .filter(|(_, p)| p.len() >= 2)
        .collect();

    let all = series.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let (y0, y1) = (y0 - 0.5, y1 + 0.5);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let py = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#, SVG_W / 2.0, plot.title);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">log2 N</text>"#, SVG_W / 2.0, SVG_H - 18.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {:.1})">log2 {}</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0,
        plot.y_label
    );
    for tick in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = px(tick as f64);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="11">{tick}</text>"#, SVG_H - MARGIN + 16.0);
    }
    for tick in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let y = py(tick as f64);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end" font-size="11">{tick}</text>"#, MARGIN - 6.0);
    }
    if let (Some(slope), Some((_, first))) = (plot.guide_slope, series.first()) {
        let (gx, gy) = first[0];
        let (ex, ey) = (x1, gy + slope * (x1 - gx) + 0.3);
        let _ = writeln!(
            s,
            r#"<line class="guide" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            px(gx),
            py(gy + 0.3),
            px(ex),
            py(ey)
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="gray">slope {slope}</text>"#, px(ex) - 50.0, py(ey) - 6.0);
    }
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{label}</text>"#,
            SVG_W - MARGIN - 110.0,
            MARGIN + 18.0 + 16.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the SVG for `plot`; returns whether a file was written (nothing is
/// drawn without at least one two-point series).
pub fn emit_plot(plot: &PlotSpec, path: &Path) -> Result<bool, CliError> {
    let drawable = plot.series.iter().any(|s| s.points.iter().filter(|(_, e)| *e > 0.0).count() >= 2);
    if !drawable {
        return Ok(false);
    }
    write_atomic(path, render_svg(plot).as_bytes())?;
    Ok(true)
}

/// SVG path next to the CSV, or `<command>.svg` when writing to stdout.
pub fn plot_path(cfg: &RunConfig) -> PathBuf {
    match &cfg.out {
        Some(p) => p.with_extension("svg"),
        None => PathBuf::from(format!("{}.svg", cfg.command.name())),
    }
}

fn series_by_alpha<T>(rows: &[T], alpha: impl Fn(&T) -> f64, point: impl Fn(&T) -> (usize, f64)) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let label = format!("alpha = {}", alpha(r));
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point(r)),
            None => out.push(Series { label, points: vec![point(r)] }),
        }
    }
    out
}

/// Runs the configured command and returns its table.
pub fn execute(cfg: &RunConfig) -> Result<Table, CliError> {
    let opts = cfg.run_options();
    let table = match cfg.command {
        Command::Table1 => {
            let rows = convergence_table(&cfg.alpha, &cfg.nsteps, cfg.mgrid, &opts)?;
            Table {
                header: vec!["alpha", "N", "M", "E_l", "rate_l", "E_g", "rate_g"],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            Cell::Param(r.alpha),
                            Cell::Int(r.n),
                            Cell::Int(r.m),
                            Cell::Value(r.local_error),
                            Cell::opt(r.local_rate),
                            Cell::Value(r.global_error),
                            Cell::opt(r.global_rate),
                        ]
                    })
                    .collect(),
                plot: PlotSpec {
                    title: "Local error, manufactured solution".into(),
                    y_label: "E_l".into(),
                    series: series_by_alpha(&rows, |r| r.alpha, |r| (r.n, r.local_error)),
                    guide_slope: Some(-1.0),
                },
            }
        }
        Command::Table2 => {
            let mut rows = Vec::new();
            for &alpha in &cfg.alpha {
                rows.extend(grid_ratio_study(alpha, &cfg.pairs, &opts)?);
            }
            Table {
                header: vec!["alpha", "tau", "h", "N", "M", "E_l"],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            Cell::Param(r.alpha),
                            Cell::Param(r.tau),
                            Cell::Param(r.h),
                            Cell::Int(r.n),
                            Cell::Int(r.m),
                            Cell::Value(r.local_error),
                        ]
                    })
                    .collect(),
                plot: PlotSpec {
                    title: "Local error across grid ratios".into(),
                    y_label: "E_l".into(),
                    series: series_by_alpha(&rows, |r| r.alpha, |r| (r.n, r.local_error)),
                    guide_slope: None,
                },
            }
        }
        Command::TwoMesh => {
            let m = cfg.mgrid.unwrap_or(50);
            let coarse: Vec<usize> = cfg.nsteps.iter().map(|n| n / 2).collect();
            let rows = two_mesh_table(cfg.example, &cfg.alpha, &coarse, m, &opts)?;
            Table {
                header: vec!["alpha", "N", "M", "e_L", "rate"],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![Cell::Param(r.alpha), Cell::Int(2 * r.n), Cell::Int(r.m), Cell::Value(r.e_l), Cell::opt(r.rate)]
                    })
                    .collect(),
                plot: PlotSpec {
                    title: format!("Two-mesh error, example {}", cfg.example),
                    y_label: "e_L".into(),
                    series: series_by_alpha(&rows, |r| r.alpha, |r| (2 * r.n, r.e_l)),
                    guide_slope: Some(-1.0),
                },
            }
        }
        Command::Stability => {
            let m = cfg.mgrid.unwrap_or(32);
            let mut rows = Vec::new();
            let mut series = Vec::new();
            for &alpha in &cfg.alpha {
                for &eps in &cfg.epsilon {
                    let mut pts = Vec::new();
                    for &n in &cfg.nsteps {
                        let amp = stability_experiment(alpha, n, m, eps, &opts)?;
                        rows.push(vec![Cell::Param(alpha), Cell::Int(n), Cell::Int(m), Cell::Param(eps), Cell::Value(amp)]);
                        pts.push((n, amp));
                    }
                    series.push(Series { label: format!("alpha = {alpha}, eps = {eps}"), points: pts });
                }
            }
            Table {
                header: vec!["alpha", "N", "M", "epsilon", "amplification"],
                rows,
                plot: PlotSpec { title: "Initial-value amplification".into(), y_label: "amplification".into(), series, guide_slope: None },
            }
        }
        Command::ProbeKernel => {
            let mut rows = Vec::new();
            let mut series = Vec::new();
            for &alpha in &cfg.alpha {
                let gammas = if cfg.gamma.is_empty() { vec![alpha] } else { cfg.gamma.clone() };
                for g in gammas {
                    let mut prev: Option<f64> = None;
                    let mut pts = Vec::new();
                    for &n in &cfg.nsteps {
                        let err = truncation_probe(alpha, g, 1.0, n)?;
                        let rate = prev.and_then(|p| log2_rate(p, err));
                        prev = Some(err);
                        rows.push(vec![Cell::Param(alpha), Cell::Param(g), Cell::Int(n), Cell::Value(err), Cell::opt(rate)]);
                        pts.push((n, err));
                    }
                    series.push(Series { label: format!("alpha = {alpha}, gamma = {g}"), points: pts });
                }
            }
            Table {
                header: vec!["alpha", "gamma", "N", "probe_error", "rate"],
                rows,
                plot: PlotSpec { title: "L1 truncation error at t = T".into(), y_label: "|r^N|".into(), series, guide_slope: None },
            }
        }
        Command::Solve => {
            let mut rows = Vec::new();
            let mut series = Vec::new();
            for &alpha in &cfg.alpha {
                let mut pts = Vec::new();
                for &n in &cfg.nsteps {
                    let m = cfg.solve_m(n);
                    let mesh = MeshSpec::unit(alpha, m, n).map_err(CliError::Numeric)?;
                    let problem = cfg.example.problem_on(mesh)?;
                    let history = run_with(&problem, &opts)?;
                    let final_norm = crate::grid::interior_l2_norm(history.last(), mesh.h());
                    let linf = crate::experiments::max_linf(&history);
                    let (el, eg) = if cfg.example == Example::Manufactured {
                        let r = manufactured_errors(mesh, &opts)?;
                        pts.push((n, r.local_error));
                        (Cell::Value(r.local_error), Cell::Value(r.global_error))
                    } else {
                        (Cell::Blank, Cell::Blank)
                    };
                    rows.push(vec![
                        Cell::Param(alpha),
                        Cell::Int(n),
                        Cell::Int(m),
                        Cell::Value(final_norm),
                        Cell::Value(linf),
                        el,
                        eg,
                    ]);
                }
                series.push(Series { label: format!("alpha = {alpha}"), points: pts });
            }
            Table {
                header: vec!["alpha", "N", "M", "final_l2", "max_linf", "E_l", "E_g"],
                rows,
                plot: PlotSpec { title: format!("Example {}", cfg.example), y_label: "E_l".into(), series, guide_slope: Some(-1.0) },
            }
        }
    };
    Ok(table)
}

/// Full CLI flow: parse, run, write CSV and optional plot.
pub fn main_with_args(argv: Vec<String>) -> Result<(), CliError> {
    let cfg = load_config(argv)?;
    let table = execute(&cfg)?;
    emit_csv(&table, cfg.out.as_deref())?;
    if cfg.plot {
        let path = plot_path(&cfg);
        if !emit_plot(&table.plot, &path)? {
            eprintln!("plot skipped: no series with at least two points");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("tfse").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn table1_flags() {
        let cfg = parse_config(args("table1 --alpha 0.3,0.5,0.7 --nsteps 512,1024,2048,4096"), None).unwrap();
        assert_eq!(cfg.command, Command::Table1);
        assert_eq!(cfg.alpha, vec![0.3, 0.5, 0.7]);
        assert_eq!(cfg.nsteps, vec![512, 1024, 2048, 4096]);
        assert!(!cfg.extended);

        let cfg = parse_config(args("table1 --nsteps 512,1024 --extended"), None).unwrap();
        assert_eq!(cfg.nsteps, vec![512, 1024, 8192]);
    }

    #[test]
    fn two_mesh_flags() {
        let cfg = parse_config(args("two-mesh --example 2 --alpha 0.5 --nsteps 256 --mgrid 50"), None).unwrap();
        assert_eq!((cfg.example, cfg.mgrid, cfg.nsteps.clone()), (Example::SmoothInitial, Some(50), vec![256]));
        let err = parse_config(args("two-mesh --example 1"), None).unwrap_err();
        assert!(err.to_string().contains("example"));
        let err = parse_config(args("two-mesh --nsteps 33"), None).unwrap_err();
        assert!(err.to_string().contains("nsteps"));
    }

    #[test]
    fn defaults() {
        let cfg = parse_config(args("solve"), None).unwrap();
        assert_eq!(cfg.alpha, vec![0.5]);
        assert_eq!(cfg.nsteps, vec![512]);
        assert_eq!(cfg.backend, Backend::Dst);
        assert_eq!(cfg.example, Example::Manufactured);
        assert_eq!(cfg.memory_cap_bytes, DEFAULT_MEMORY_CAP);
    }

    #[test]
    fn usage_errors_name_the_key() {
        let err = parse_config(args("solve --alpha 1.5"), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("alpha"));
        let err = parse_config(args("solve --nsteps 0"), None).unwrap_err();
        assert!(err.to_string().contains("nsteps"));
        let err = parse_config(args("frobnicate"), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse_config(args("solve --bogus 3"), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!err.to_string().contains('\n'));
    }

    #[test]
    fn dense_rejected_for_large_meshes() {
        let err = parse_config(args("table1 --backend dense --nsteps 1024"), None).unwrap_err();
        assert!(err.to_string().contains("backend"));
        assert!(parse_config(args("table1 --backend dense --nsteps 64,256"), None).is_ok());
        assert!(parse_config(args("two-mesh --backend dense"), None).is_err());
    }

    #[test]
    fn config_file_and_precedence() {
        let text = "# experiment\nalpha = 0.3,0.7\nnsteps=64\nbackend = dense\nplot = true\n";
        let cfg = parse_config(args("table1 --nsteps 128"), Some(text)).unwrap();
        assert_eq!(cfg.alpha, vec![0.3, 0.7]);
        assert_eq!(cfg.nsteps, vec![128]);
        assert_eq!(cfg.backend, Backend::Dense);
        assert!(cfg.plot);

        let err = parse_config(args("table1"), Some("colour = blue\n")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("colour"));
        assert!(parse_config(args("table1"), Some("just words\n")).is_err());
    }

    #[test]
    fn pairs_parse() {
        let cfg = parse_config(args("table2 --pairs 0.01:0.1,0.1:0.01"), None).unwrap();
        assert_eq!(cfg.pairs, vec![(0.01, 0.1), (0.1, 0.01)]);
        assert!(parse_config(args("table2 --pairs 0.3:0.1"), None).is_err());
    }

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(2.0332e-5), "2.03320e-05");
        assert_eq!(format_sci(6.5287e-3), "6.52870e-03");
        assert_eq!(format_sci(0.96602), "9.66020e-01");
        assert_eq!(format_sci(1234.5), "1.23450e+03");
        assert_eq!(format_sci(0.0), "0.00000e+00");
        assert_eq!(format_sci(1e-300), "1.00000e-300");
    }

    fn sample_table(rows: Vec<Vec<Cell>>) -> Table {
        Table {
            header: vec!["alpha", "N", "M", "E_l", "rate_l", "E_g", "rate_g"],
            rows,
            plot: PlotSpec { title: String::new(), y_label: "E_l".into(), series: vec![], guide_slope: None },
        }
    }

    #[test]
    fn csv_rows() {
        let t = sample_table(vec![vec![
            Cell::Param(0.5),
            Cell::Int(512),
            Cell::Int(23),
            Cell::Value(2.0332e-5),
            Cell::Blank,
            Cell::Value(6.5287e-3),
            Cell::Blank,
        ]]);
        assert_eq!(render_csv(&t).unwrap(), "alpha,N,M,E_l,rate_l,E_g,rate_g\n0.5,512,23,2.03320e-05,,6.52870e-03,\n");
        assert_eq!(render_csv(&sample_table(vec![])).unwrap(), "alpha,N,M,E_l,rate_l,E_g,rate_g\n");
    }

    #[test]
    fn svg_series_and_determinism() {
        let plot = PlotSpec {
            title: "t".into(),
            y_label: "E_l".into(),
            series: vec![Series { label: "alpha = 0.5".into(), points: vec![(64, 1e-3), (128, 5e-4), (256, 2.5e-4)] }],
            guide_slope: Some(-1.0),
        };
        let a = render_svg(&plot);
        assert_eq!(a, render_svg(&plot));
        assert_eq!(a.matches(r#"class="series""#).count(), 1);
        assert_eq!(a.matches(r#"class="guide""#).count(), 1);
    }

    #[test]
    fn plot_skipped_without_two_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.svg");
        let plot = PlotSpec {
            title: "t".into(),
            y_label: "e".into(),
            series: vec![Series { label: "a".into(), points: vec![(64, 1e-3)] }],
            guide_slope: None,
        };
        assert!(!emit_plot(&plot, &path).unwrap());
        assert!(!path.exists());
    }
}
