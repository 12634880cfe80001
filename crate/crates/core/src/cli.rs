//! Batch front end: `spectrum`, `gaps`, `project`, `norms`, `simulate`, `verify`.
//!
//! Settings come from defaults, then an optional `--config` file (JSON object
//! or `key=value` lines), then flags. Every output embeds the resolved
//! configuration and the library version. Exit codes: 0 success, 1 invalid
//! input, 2 partial or degraded result, 3 internal failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifier::{resolve_gaps, theta, verify_region, vertical_line_check, GapResolution};
use crate::projections::{
    aux_projection, contour_projection, fit_line, gap_projection, norm_growth_experiment, parseval_partial_sums,
    partial_sum, perturbation_sweep, residue_projection, Kind, ProjectionOperator,
};
use crate::rootfinder::{enumerate_eigenvalues_with, Eigenvalue, Spectrum};
use crate::simulator::{dichotomy_check, integrate, DichotomySettings};
use crate::{Error, GridFunction, NeutralParams, Result, Tolerances};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n_max: u32,
    pub m_max: usize,
    pub grid: usize,
    pub tolerances: Tolerances,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub gap: usize,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 2.0,
            c: 0.5,
            n_max: 20,
            m_max: 3,
            grid: 1024,
            tolerances: Tolerances::default(),
            format: Format::Json,
            out: None,
            seed: 0,
            gap: 1,
            horizon: 25.0,
            dt: 1.0 / 64.0,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<NeutralParams> {
        NeutralParams::new(self.a, self.b, self.c)
    }

    /// Checks every field; the message names the violated invariant.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.tolerances.validate()?;
        if self.grid < 8 || self.grid % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid must be even and >= 8, got {}",
                self.grid
            )));
        }
        if self.n_max == 0 || self.n_max > 2048 {
            return Err(Error::InvalidInput(format!(
                "n_max must lie in 1..=2048, got {}",
                self.n_max
            )));
        }
        if self.m_max == 0 {
            return Err(Error::InvalidInput("m_max must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon <= crate::simulator::MAX_HORIZON) {
            return Err(Error::InvalidInput(format!(
                "horizon must lie in (0, 50], got {}",
                self.horizon
            )));
        }
        let m = (1.0 / self.dt).round();
        if !(self.dt > 0.0 && self.dt <= crate::simulator::MAX_DT) || (m * self.dt - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "dt must be 1/M with M >= 64, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("cannot parse {key} = {v:?}")))
        }
        match key.replace('-', "_").as_str() {
            "a" => self.a = num(key, value)?,
            "b" => self.b = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "n_max" => self.n_max = num(key, value)?,
            "m_max" => self.m_max = num(key, value)?,
            "grid" => self.grid = num(key, value)?,
            "tol_root" => self.tolerances.root = num(key, value)?,
            "tol_quad" => self.tolerances.quad = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "gap" => self.gap = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "format" => {
                self.format = match value.trim() {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    other => return Err(Error::InvalidInput(format!("unknown format {other:?}"))),
                }
            }
            _ => return Err(Error::InvalidInput(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a JSON object or `key=value` lines (`#` starts a comment).
    pub fn apply_file_contents(&mut self, text: &str) -> Result<()> {
        if text.trim_start().starts_with('{') {
            let obj: serde_json::Map<String, Value> = serde_json::from_str(text)?;
            for (k, v) in obj {
                match (k.as_str(), v) {
                    ("tolerances", v) => self.tolerances = serde_json::from_value(v)?,
                    ("out", Value::Null) => self.out = None,
                    (_, Value::String(s)) => self.set(&k, &s)?,
                    (_, v) => self.set(&k, &v.to_string())?,
                }
            }
            return Ok(());
        }
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got {line:?}")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    fn comment_lines(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# neutral-dichotomy {VERSION}");
        let flat = [
            ("a", self.a.to_string()),
            ("b", self.b.to_string()),
            ("c", self.c.to_string()),
            ("n_max", self.n_max.to_string()),
            ("m_max", self.m_max.to_string()),
            ("grid", self.grid.to_string()),
            ("tol_root", self.tolerances.root.to_string()),
            ("tol_quad", self.tolerances.quad.to_string()),
            ("seed", self.seed.to_string()),
            ("gap", self.gap.to_string()),
            ("horizon", self.horizon.to_string()),
            ("dt", self.dt.to_string()),
        ];
        for (k, v) in flat {
            let _ = writeln!(s, "# config {k}={v}");
        }
        s
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "neutral-dichotomy",
    version,
    about = "Spectra, gaps and dichotomy projections of x'(t) + cx'(t-1) + ax(t) + bx(t-1) = 0"
)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Flags {
    /// Settings file: a JSON object or key=value lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long = "n-max", global = true)]
    n_max: Option<u32>,
    #[arg(long = "m-max", global = true)]
    m_max: Option<usize>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long = "tol-root", global = true)]
    tol_root: Option<f64>,
    #[arg(long = "tol-quad", global = true)]
    tol_quad: Option<f64>,
    /// Output file, or directory for `project` and `simulate`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    gap: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certified root table.
    Spectrum,
    /// Configuration of the resolvent set and the spectral gaps.
    Gaps,
    /// Split a history at a gap.
    Project {
        /// GridFunction CSV.
        #[arg(long)]
        phi: PathBuf,
    },
    /// Projection norm growth and perturbation decay.
    Norms,
    /// Integrate and compare measured rates with a gap.
    Simulate {
        /// GridFunction CSV; a seeded random smooth history when absent.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Invariant battery with a JUnit report.
    Verify,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file_contents(&fs::read_to_string(path)?)?;
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        over!(a, b, c, n_max, m_max, grid, seed, gap, horizon, dt);
        if let Some(v) = self.tol_root {
            cfg.tolerances.root = v;
        }
        if let Some(v) = self.tol_quad {
            cfg.tolerances.quad = v;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let cfg = match cli.flags.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let outcome = match &cli.command {
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Gaps => cmd_gaps(&cfg),
        Command::Project { phi } => cmd_project(&cfg, phi),
        Command::Norms => cmd_norms(&cfg),
        Command::Simulate { phi } => cmd_simulate(&cfg, phi.as_deref()),
        Command::Verify => cmd_verify(&cfg),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::InvalidInput(_) | Error::InconsistentHistory { .. } => EXIT_INVALID,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_INVALID,
        Error::InsufficientRoots { .. } | Error::Incomplete { .. } | Error::SignalUnderflow { .. } => EXIT_PARTIAL,
        _ => EXIT_INTERNAL,
    }
}

/// A named table of stringified cells.
struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a JSON document or CSV tables to `--out` or stdout.
fn emit(cfg: &RunConfig, command: &str, body: Value, tables: &[Table]) -> Result<()> {
    let text = match cfg.format {
        Format::Json => {
            let mut doc = json!({
                "tool": "neutral-dichotomy",
                "version": VERSION,
                "command": command,
                "config": cfg,
            });
            if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
                d.extend(b);
            }
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => {
            let mut s = cfg.comment_lines();
            let _ = writeln!(s, "# command={command}");
            for t in tables {
                let _ = writeln!(s, "# table={}", t.name);
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&t.header)?;
                for r in &t.rows {
                    w.write_record(r)?;
                }
                s.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"));
            }
            s
        }
    };
    write_out(cfg.out.as_deref(), &text)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn spectrum_of(cfg: &RunConfig) -> Result<Spectrum> {
    enumerate_eigenvalues_with(&cfg.params()?, cfg.n_max, &cfg.tolerances)
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<i32> {
    let spec = spectrum_of(cfg)?;
    let rows: Vec<Vec<String>> = spec
        .roots()
        .iter()
        .map(|e| {
            vec![
                opt(e.index),
                e.value.re.to_string(),
                e.value.im.to_string(),
                e.residual.to_string(),
                e.multiplicity.to_string(),
                e.certified.to_string(),
                opt(e.ball_radius),
                opt(e.index.and_then(|n| spec.scaled_deviation(n))),
            ]
        })
        .collect();
    let body = json!({
        "metadata": {
            "strip": spec.strip(),
            "im_cover": spec.im_cover(),
            "n_eps": spec.n_eps(),
            "tail_bound": spec.tail_bound(),
            "all_certified": spec.all_certified(),
        },
        "roots": spec.roots().iter().map(|e| json!({
            "n": e.index,
            "re": e.value.re,
            "im": e.value.im,
            "residual": e.residual,
            "multiplicity": e.multiplicity,
            "certified": e.certified,
            "ball_radius": e.ball_radius,
            "scaled_deviation": e.index.and_then(|n| spec.scaled_deviation(n)),
        })).collect::<Vec<_>>(),
    });
    let table = Table {
        name: "roots",
        header: vec![
            "n",
            "re",
            "im",
            "residual",
            "multiplicity",
            "certified",
            "ball_radius",
            "scaled_deviation",
        ],
        rows,
    };
    emit(cfg, "spectrum", body, &[table])?;
    Ok(if spec.all_certified() { EXIT_OK } else { EXIT_PARTIAL })
}

fn gaps_of(cfg: &RunConfig, m_max: usize) -> Result<GapResolution> {
    resolve_gaps(&cfg.params()?, m_max, cfg.n_max)
}

fn cmd_gaps(cfg: &RunConfig) -> Result<i32> {
    let p = cfg.params()?;
    if !p.dichotomy_condition() && cfg.m_max > 3 {
        eprintln!(
            "error: the dichotomy condition fails, so at most 3 gaps exist; requested {}",
            cfg.m_max
        );
        return Ok(EXIT_PARTIAL);
    }
    let res = gaps_of(cfg, cfg.m_max)?;
    let note = if res.config.infinite {
        "countably many dichotomies"
    } else {
        "finitely many dichotomies"
    };
    let mut prev = 0usize;
    let rows: Vec<Vec<String>> = res
        .gaps
        .iter()
        .map(|g| {
            let k = g.finite_eigs.len();
            let inc = k as i64 - prev as i64;
            prev = k;
            vec![
                g.index.to_string(),
                g.beta.to_string(),
                g.alpha.to_string(),
                json!(g.finite_side).as_str().unwrap_or_default().to_string(),
                k.to_string(),
                inc.to_string(),
            ]
        })
        .collect();
    let body = json!({
        "omega": res.config,
        "note": note,
        "n_max_used": res.spectrum.n_max(),
        "gaps": res.gaps.iter().map(|g| json!({
            "m": g.index,
            "beta": g.beta,
            "alpha": g.alpha,
            "finite_side": g.finite_side,
            "count": g.finite_eigs.len(),
        })).collect::<Vec<_>>(),
    });
    let table = Table {
        name: "gaps",
        header: vec!["m", "beta", "alpha", "finite_side", "count", "increment"],
        rows,
    };
    emit(cfg, "gaps", body, &[table])?;
    Ok(EXIT_OK)
}

fn read_phi(path: &Path) -> Result<GridFunction> {
    GridFunction::read_csv(fs::File::open(path)?)
}

fn cmd_project(cfg: &RunConfig, phi_path: &Path) -> Result<i32> {
    let p = cfg.params()?;
    let phi = read_phi(phi_path)?;
    let res = gaps_of(cfg, cfg.gap + 1)?;
    let gap = res
        .gaps
        .get(cfg.gap)
        .ok_or_else(|| Error::InvalidInput(format!("gap {} not available", cfg.gap)))?;
    let (finite, complement) = gap_projection(&p, gap, &phi)?;
    let (again, _) = gap_projection(&p, gap, &finite)?;
    let idempotence = (&again - &finite).sup_norm();
    let real_input = phi.max_imag() == 0.0;
    let scale = phi.sup_norm().max(f64::MIN_POSITIVE);
    let realness = real_input.then(|| finite.max_imag().max(complement.max_imag()) / scale);
    let ok = idempotence <= 1e-9 * (1.0 + finite.sup_norm()) && realness.map_or(true, |r| r <= 1e-10);
    let report = json!({
        "tool": "neutral-dichotomy",
        "version": VERSION,
        "command": "project",
        "config": cfg,
        "gap": gap,
        "rank": gap.finite_eigs.len(),
        "idempotence_residual": idempotence,
        "realness_residual": realness,
        "passed": ok,
    });
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            finite.write_csv(fs::File::create(dir.join("finite.csv"))?)?;
            complement.write_csv(fs::File::create(dir.join("complement.csv"))?)?;
            fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        }
        None => write_out(None, &(serde_json::to_string_pretty(&report)? + "\n"))?,
    }
    Ok(if ok { EXIT_OK } else { EXIT_PARTIAL })
}

/// `n` values of the perturbation sweep.
pub const PERTURBATION_NS: [i64; 19] = [
    20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 150, 160, 170, 180, 190, 200,
];

fn cmd_norms(cfg: &RunConfig) -> Result<i32> {
    let p = cfg.params()?;
    let mut code = EXIT_OK;
    let growth = match norm_growth_experiment(&p, cfg.m_max, cfg.grid) {
        Ok(t) => Some(t),
        Err(e @ (Error::InvalidParams(_) | Error::InsufficientRoots { .. })) => {
            eprintln!("warning: norm growth skipped: {e}");
            code = EXIT_PARTIAL;
            None
        }
        Err(e) => return Err(e),
    };
    let ns: Vec<i64> = PERTURBATION_NS
        .iter()
        .copied()
        .filter(|&n| !(n == 0 && p.c() == -1.0))
        .collect();
    let sweep = perturbation_sweep(&p, &ns, cfg.grid)?;
    let xs: Vec<f64> = sweep.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = sweep.iter().map(|r| r.norm.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = fit_line(&xs, &ys);

    let body = json!({
        "norm_kind": "complexified sup-norm operator norm",
        "growth": growth,
        "perturbation": sweep,
        "perturbation_loglog_fit": slope,
    });
    let mut tables = Vec::new();
    if let Some(t) = &growth {
        tables.push(Table {
            name: "growth",
            header: vec!["m", "beta", "alpha", "count", "norm"],
            rows: t
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.beta.to_string(),
                        r.alpha.to_string(),
                        r.count.to_string(),
                        r.norm.to_string(),
                    ]
                })
                .collect(),
        });
    }
    tables.push(Table {
        name: "perturbation",
        header: vec!["n", "lambda_re", "lambda_im", "ball_radius", "norm", "n_times_norm"],
        rows: sweep
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.lambda.re.to_string(),
                    r.lambda.im.to_string(),
                    r.ball_radius.to_string(),
                    r.norm.to_string(),
                    (r.norm * r.n as f64).to_string(),
                ]
            })
            .collect(),
    });
    tables.push(Table {
        name: "fits",
        header: vec!["fit", "slope", "intercept", "r_squared"],
        rows: std::iter::once(("perturbation_loglog", Some(slope)))
            .chain(growth.as_ref().map(|t| ("growth_vs_ln_count", t.fit)))
            .filter_map(|(name, f)| {
                f.map(|f| {
                    vec![
                        name.to_string(),
                        f.slope.to_string(),
                        f.intercept.to_string(),
                        f.r_squared.to_string(),
                    ]
                })
            })
            .collect(),
    });
    emit(cfg, "norms", body, &tables)?;
    Ok(code)
}

fn cmd_simulate(cfg: &RunConfig, phi_path: Option<&Path>) -> Result<i32> {
    let p = cfg.params()?;
    let phi = match phi_path {
        Some(path) => read_phi(path)?,
        None => GridFunction::random_smooth(&mut ChaCha8Rng::seed_from_u64(cfg.seed), cfg.grid, 6, true)?,
    };
    let res = gaps_of(cfg, cfg.gap + 1)?;
    let gap = res
        .gaps
        .get(cfg.gap)
        .ok_or_else(|| Error::InvalidInput(format!("gap {} not available", cfg.gap)))?;
    let settings = DichotomySettings {
        dt: cfg.dt,
        t_end: cfg.horizon,
        ..DichotomySettings::default()
    };
    let report = dichotomy_check(&p, gap, &phi, &settings)?;
    let traj = integrate(&p, &phi, &phi.derivative(), cfg.horizon, cfg.dt)?;
    let doc = json!({
        "tool": "neutral-dichotomy",
        "version": VERSION,
        "command": "simulate",
        "config": cfg,
        "report": report,
    });
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut f = fs::File::create(dir.join("trajectory.csv"))?;
            f.write_all(cfg.comment_lines().as_bytes())?;
            traj.write_csv(f)?;
            fs::write(dir.join("report.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        }
        None => write_out(None, &(serde_json::to_string_pretty(&doc)? + "\n"))?,
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_PARTIAL })
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Check {
    name: String,
    outcome: Outcome,
}

fn check(name: impl Into<String>, r: Result<(bool, String)>) -> Check {
    let outcome = match r {
        Ok((true, msg)) => Outcome::Pass(msg),
        Ok((false, msg)) => Outcome::Fail(msg),
        Err(e) => Outcome::Fail(format!("error: {e}")),
    };
    Check {
        name: name.into(),
        outcome,
    }
}

/// Simple roots with small `|Im|`, nonnegative imaginary part first.
fn low_roots(spec: &Spectrum, k: usize) -> Vec<Eigenvalue> {
    let mut v: Vec<Eigenvalue> = spec
        .roots()
        .iter()
        .filter(|e| e.is_simple() && e.certified && e.value.im >= 0.0)
        .copied()
        .collect();
    v.sort_by(|x, y| {
        x.value
            .im
            .total_cmp(&y.value.im)
            .then(x.value.re.total_cmp(&y.value.re))
    });
    v.truncate(k);
    v
}

fn contour_radius(spec: &Spectrum, z: Complex64) -> f64 {
    let d = spec
        .roots()
        .iter()
        .map(|e| (e.value - z).norm())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    (0.5 * d).min(1.0)
}

fn run_battery(cfg: &RunConfig) -> Result<Vec<Check>> {
    let p = cfg.params()?;
    let tol = cfg.tolerances;
    let n = cfg.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spec = spectrum_of(cfg)?;
    let mut out = Vec::new();

    let worst = spec
        .roots()
        .iter()
        .map(|e| e.residual / (1.0 + e.value.norm()))
        .fold(0.0, f64::max);
    out.push(check(
        "root_residuals",
        Ok((worst <= 1e-10, format!("max relative residual {worst:e}"))),
    ));
    out.push(check(
        "certification",
        Ok((
            spec.all_certified(),
            format!("{} roots, all certified: {}", spec.roots().len(), spec.all_certified()),
        )),
    ));

    let region = verify_region(&p, spec.roots());
    out.push(check(
        "table_classification",
        Ok((
            region.passed,
            format!(
                "{:?}/{:?}, {} violation(s)",
                region.tag.table,
                region.tag.row,
                region.violations.len()
            ),
        )),
    ));

    let theta_check = (|| {
        let lo = spec.tail_bound().max(1e-3);
        let mut prev = usize::MAX;
        let mut values = Vec::new();
        for k in 0..20 {
            let d = lo * 1.01 + k as f64 * 0.1;
            let t = theta(&spec, d)?;
            values.push(t);
            if t > prev {
                return Ok((false, format!("Θ increased at δ = {d}")));
            }
            prev = t;
        }
        Ok((true, format!("Θ nonincreasing over 20 levels: {values:?}")))
    })();
    out.push(check("theta_monotone", theta_check));

    let vl = vertical_line_check(&p, spec.roots());
    out.push(check(
        "vertical_lines",
        Ok((
            vl.passed,
            format!(
                "{} shared line(s), {} ratio failure(s)",
                vl.shared.len(),
                vl.rho_failures.len()
            ),
        )),
    ));

    let bound = 1f64.max(p.c().powi(-2));
    let mut parseval = (true, String::from("10 random real histories, |n| <= 64"));
    for _ in 0..10 {
        let f = GridFunction::random_smooth(&mut rng, n, 6, true)?;
        let sums = parseval_partial_sums(&p, &f, 64);
        let last = *sums.last().expect("nonempty");
        if last > bound * f.sup_norm().powi(2) + 1e-6 {
            parseval = (
                false,
                format!("partial sum {last} exceeds {}", bound * f.sup_norm().powi(2)),
            );
            break;
        }
    }
    out.push(check("parseval", Ok(parseval)));

    let roots = low_roots(&spec, 3);
    let idem = (|| {
        let mut worst: f64 = 0.0;
        for e in &roots {
            let f = GridFunction::random_smooth(&mut rng, n, 6, false)?;
            let g = residue_projection(&p, e, &f)?;
            let gg = residue_projection(&p, e, &g)?;
            worst = worst.max((&gg - &g).sup_norm() / (1.0 + g.sup_norm()));
        }
        Ok((
            worst <= 1e-9,
            format!("max relative |P²f - Pf| = {worst:e} over {} roots", roots.len()),
        ))
    })();
    out.push(check("idempotence_single", idem));

    let gap_idem = (|| {
        if !p.dichotomy_condition() {
            return Ok((
                true,
                "dichotomy condition fails; gap 1 of the finite configuration".to_string(),
            ));
        }
        let res = resolve_gaps(&p, 2, cfg.n_max)?;
        let f = GridFunction::random_smooth(&mut rng, n, 6, true)?;
        let (fin, _) = gap_projection(&p, &res.gaps[1], &f)?;
        let (again, _) = gap_projection(&p, &res.gaps[1], &fin)?;
        let d = (&again - &fin).sup_norm() / (1.0 + fin.sup_norm());
        let im = fin.max_imag() / f.sup_norm();
        Ok((
            d <= 1e-9 && im <= 1e-10,
            format!("idempotence {d:e}, imaginary residue {im:e}"),
        ))
    })();
    out.push(check("idempotence_gap", gap_idem));

    let triangle = (|| {
        let mut worst: f64 = 0.0;
        for e in roots.iter().take(2) {
            let op = ProjectionOperator::new(p, vec![*e], Kind::MainEquation)?;
            let kf = op.kernel_form();
            let r = contour_radius(&spec, e.value);
            for _ in 0..2 {
                let f = GridFunction::random_smooth(&mut rng, n, 6, false)?;
                let res = residue_projection(&p, e, &f)?;
                let con = contour_projection(&p, e.value, r, 128, &f, Kind::MainEquation)?;
                let ker = kf.apply(&f);
                worst = worst
                    .max((&res - &con).sup_norm())
                    .max((&res - &ker).sup_norm())
                    .max((&con - &ker).sup_norm());
            }
        }
        Ok((
            worst <= tol.quad,
            format!("max pairwise deviation {worst:e} against {:e}", tol.quad),
        ))
    })();
    out.push(check("oracle_triangle", triangle));

    for k in 0..3i64 {
        let name = format!("aux_fixes_eigenfunction_n{k}");
        if p.c() == -1.0 && k == 0 {
            out.push(Check {
                name,
                outcome: Outcome::Skip("skipped n = 0: z_0 = 0 is a double root of h0 when c = -1".into()),
            });
            continue;
        }
        let r = (|| {
            let e = GridFunction::exponential(p.auxiliary_eigen(k), n)?;
            let d = (&aux_projection(&p, k, &e)? - &e).sup_norm();
            Ok((d <= 1e-9, format!("|Q e - e| = {d:e}")))
        })();
        out.push(check(name, r));
    }

    let span = (|| {
        let idx: Vec<i64> = (-3..=3).filter(|&k| !(k == 0 && p.c() == -1.0)).collect();
        let f = GridFunction::from_callable(
            |t| (p.auxiliary_eigen(-2) * t).exp() + (p.auxiliary_eigen(1) * t).exp() * Complex64::new(0.5, -1.0),
            n,
        )?;
        let d = (&partial_sum(&p, &idx, &f)? - &f).sup_norm();
        Ok((d <= 1e-9, format!("|T f - f| = {d:e}")))
    })();
    out.push(check("partial_sum_span", span));
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn junit(cfg: &RunConfig, checks: &[Check]) -> String {
    let failures = checks.iter().filter(|c| matches!(c.outcome, Outcome::Fail(_))).count();
    let skipped = checks.iter().filter(|c| matches!(c.outcome, Outcome::Skip(_))).count();
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<testsuites name=\"neutral-dichotomy verify\" tests=\"{}\" failures=\"{failures}\" skipped=\"{skipped}\">",
        checks.len()
    );
    let _ = writeln!(
        s,
        "  <testsuite name=\"invariants\" tests=\"{}\" failures=\"{failures}\" skipped=\"{skipped}\">",
        checks.len()
    );
    s.push_str("    <properties>\n");
    let _ = writeln!(s, "      <property name=\"version\" value=\"{VERSION}\"/>");
    let config = serde_json::to_string(cfg).unwrap_or_default();
    let _ = writeln!(s, "      <property name=\"config\" value=\"{}\"/>", xml_escape(&config));
    s.push_str("    </properties>\n");
    for c in checks {
        let name = xml_escape(&c.name);
        match &c.outcome {
            Outcome::Pass(msg) => {
                let _ = writeln!(
                    s,
                    "    <testcase classname=\"verify\" name=\"{name}\"><system-out>{}</system-out></testcase>",
                    xml_escape(msg)
                );
            }
            Outcome::Fail(msg) => {
                let _ = writeln!(
                    s,
                    "    <testcase classname=\"verify\" name=\"{name}\"><failure message=\"{}\"/></testcase>",
                    xml_escape(msg)
                );
            }
            Outcome::Skip(msg) => {
                let _ = writeln!(
                    s,
                    "    <testcase classname=\"verify\" name=\"{name}\"><skipped message=\"{}\"/></testcase>",
                    xml_escape(msg)
                );
            }
        }
    }
    s.push_str("  </testsuite>\n</testsuites>\n");
    s
}

fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let checks = run_battery(cfg)?;
    for c in &checks {
        match &c.outcome {
            Outcome::Fail(msg) => eprintln!("FAIL {}: {msg}", c.name),
            Outcome::Skip(msg) => eprintln!("note: {}: {msg}", c.name),
            Outcome::Pass(_) => {}
        }
    }
    write_out(cfg.out.as_deref(), &junit(cfg, &checks))?;
    let all = checks.iter().all(|c| !matches!(c.outcome, Outcome::Fail(_)));
    Ok(if all { EXIT_OK } else { EXIT_PARTIAL })
}
