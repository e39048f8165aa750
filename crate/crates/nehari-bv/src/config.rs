//! Run configuration: a TOML file with the sections `[problem]`
//! (plus `[problem.nonlinearity]`), `[grid]`, `[solver]`, `[verify]`,
//! `[continuation]` and `[run]`. Every key has a default except `grid.nx`.
//!
//! ```toml
//! [problem]
//! functional = "one_laplacian"   # or "mean_curvature"
//! flavor = "isotropic"           # or "anisotropic" (1-Laplacian only)
//!
//! [problem.nonlinearity]
//! kind = "power"
//! p = 1.5
//!
//! [grid]
//! nx = 32                        # ny defaults to nx, h to 1/max(nx, ny)
//!
//! [run]
//! commands = ["audit", "solve", "certify"]
//! ```

use std::path::{Path, PathBuf};

use nehari_core::fibering::Functional;
use nehari_core::verification::CertifyConfig;
use nehari_core::{DiscreteDomain, Nonlinearity, NonlinearityKind, ProblemSpec, SolverConfig, TvFlavor};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{ConfigError, RunError};

/// Which energy to minimize.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalName {
    /// Total variation plus boundary trace.
    #[default]
    OneLaplacian,
    /// Area functional plus boundary trace, with parameter `λ`.
    MeanCurvature,
}

/// `[problem]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Energy to minimize.
    pub functional: FunctionalName,
    /// `λ` of the mean-curvature problem; must stay 1 for the 1-Laplacian.
    pub lambda: f64,
    /// Ignore `lambda` and halve from `λ = 1` until a solve succeeds.
    pub lambda_search: bool,
    /// Halvings tried by the search.
    pub max_halvings: usize,
    /// Discrete total variation.
    pub flavor: TvFlavor,
    /// `[problem.nonlinearity]`: `kind = "power"` with `p`, or
    /// `kind = "power_sum"` with `p`, `q`, `c1`, `c2`.
    pub nonlinearity: NonlinearityKind,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            functional: FunctionalName::OneLaplacian,
            lambda: 1.0,
            lambda_search: false,
            max_halvings: 30,
            flavor: TvFlavor::Isotropic,
            nonlinearity: NonlinearityKind::Power { p: 1.5 },
        }
    }
}

/// `[grid]` after defaults are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    /// Cells along x.
    pub nx: usize,
    /// Cells along y.
    pub ny: usize,
    /// Cell side.
    pub h: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: usize,
    ny: Option<usize>,
    h: Option<f64>,
}

/// `[verify]`: certificate settings plus the optional inputs of the
/// `certify` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Probes of the subdifferential check.
    pub n_probes: usize,
    /// Seed of the probe families.
    pub seed: u64,
    /// Admissible negative slack.
    pub tol_cert: f64,
    /// Admissible relative Euler–Lagrange residual.
    pub tol_el: f64,
    /// Iteration cap of the dual solve.
    pub el_max_iters: usize,
    /// Also write the dual vector field as `z_x.csv` and `z_y.csv`
    /// (1-Laplacian only).
    pub export_z: bool,
    /// Field to certify when `solve` is not among the commands.
    pub field: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let c = CertifyConfig::default();
        VerifyConfig {
            n_probes: c.n_probes,
            seed: c.seed,
            tol_cert: c.tol_cert,
            tol_el: c.tol_el,
            el_max_iters: c.el_max_iters,
            export_z: false,
            field: None,
        }
    }
}

impl VerifyConfig {
    /// The library settings.
    pub fn certify_config(&self) -> CertifyConfig {
        CertifyConfig {
            n_probes: self.n_probes,
            seed: self.seed,
            tol_cert: self.tol_cert,
            tol_el: self.tol_el,
            el_max_iters: self.el_max_iters,
        }
    }
}

/// `[continuation]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    /// Strictly decreasing gradient exponents in `(1, 2]`.
    pub exponents: Vec<f64>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig { exponents: vec![1.4, 1.3, 1.2, 1.1, 1.05] }
    }
}

/// A step of a run. Steps always execute in the declaration order below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Hypothesis audit of the nonlinearity.
    Audit,
    /// Multi-start ground-state search.
    Solve,
    /// Criticality certificate of the solved (or supplied) field.
    Certify,
    /// Exponent continuation through the p-Laplacian surrogates.
    Continuation,
}

impl Command {
    /// Lower-case name.
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Audit => "audit",
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::Continuation => "continuation",
        }
    }
}

/// `[run]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Commands to execute.
    pub commands: Vec<Command>,
    /// Where outputs go. Overridden by `NEHARI_BV_OUT_DIR` and `--out`.
    pub output_dir: PathBuf,
    /// Worker threads for restarts; 0 uses one per core.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { commands: vec![Command::Solve], output_dir: PathBuf::from("nehari-out"), threads: 0 }
    }
}

/// A validated run configuration with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `[problem]`.
    pub problem: ProblemConfig,
    /// `[grid]`.
    pub grid: GridConfig,
    /// `[solver]`; its `certificate` mirrors `[verify]`.
    pub solver: SolverConfig,
    /// `[verify]`.
    pub verify: VerifyConfig,
    /// `[continuation]`.
    pub continuation: ContinuationConfig,
    /// `[run]`.
    pub run: RunSection,
}

const SECTIONS: &[&str] = &["problem", "grid", "solver", "verify", "continuation", "run"];
const PROBLEM_KEYS: &[&str] = &["functional", "lambda", "lambda_search", "max_halvings", "flavor", "nonlinearity"];
const GRID_KEYS: &[&str] = &["nx", "ny", "h"];
const VERIFY_KEYS: &[&str] = &["n_probes", "seed", "tol_cert", "tol_el", "el_max_iters", "export_z", "field"];
const CONTINUATION_KEYS: &[&str] = &["exponents"];
const RUN_KEYS: &[&str] = &["commands", "output_dir", "threads"];

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((1, 1));
        ConfigError::Parse { line, column, message: e.message().trim().to_string() }
    })?;
    check_keys(&root, "", SECTIONS)?;

    let problem_table = section(&root, "problem")?;
    check_keys(&problem_table, "problem", PROBLEM_KEYS)?;
    if let Some(nl) = problem_table.get("nonlinearity") {
        let nl = nl.as_table().ok_or_else(|| ConfigError::invalid("problem.nonlinearity", "expected a table"))?;
        let keys: &[&str] = match nl.get("kind").and_then(Value::as_str) {
            Some("power") => &["kind", "p"],
            Some("power_sum") => &["kind", "p", "q", "c1", "c2"],
            Some(other) => {
                return Err(ConfigError::invalid(
                    "problem.nonlinearity.kind",
                    format!("`{other}` is not a configurable family (use \"power\" or \"power_sum\")"),
                ))
            }
            None => return Err(ConfigError::invalid("problem.nonlinearity.kind", "missing")),
        };
        check_keys(nl, "problem.nonlinearity", keys)?;
    }
    let problem: ProblemConfig = decode(problem_table, "problem")?;

    let grid_table = root
        .get("grid")
        .ok_or_else(|| ConfigError::invalid("grid", "missing section (at least `nx` is required)"))?
        .as_table()
        .ok_or_else(|| ConfigError::invalid("grid", "expected a table"))?
        .clone();
    check_keys(&grid_table, "grid", GRID_KEYS)?;
    let raw: RawGrid = decode(grid_table, "grid")?;
    let ny = raw.ny.unwrap_or(raw.nx);
    let grid = GridConfig { nx: raw.nx, ny, h: raw.h.unwrap_or(1.0 / raw.nx.max(ny).max(1) as f64) };

    let solver_table = section(&root, "solver")?;
    let solver_keys = solver_keys();
    let solver_keys: Vec<&str> = solver_keys.iter().map(String::as_str).collect();
    check_keys(&solver_table, "solver", &solver_keys)?;
    let mut solver: SolverConfig = decode(solver_table, "solver")?;

    let verify_table = section(&root, "verify")?;
    check_keys(&verify_table, "verify", VERIFY_KEYS)?;
    let verify: VerifyConfig = decode(verify_table, "verify")?;
    solver.certificate = verify.certify_config();

    let continuation_table = section(&root, "continuation")?;
    check_keys(&continuation_table, "continuation", CONTINUATION_KEYS)?;
    let continuation: ContinuationConfig = decode(continuation_table, "continuation")?;

    let run_table = section(&root, "run")?;
    check_keys(&run_table, "run", RUN_KEYS)?;
    let mut run: RunSection = decode(run_table, "run")?;
    let requested = run.commands.len();
    run.commands.sort();
    run.commands.dedup();
    if run.commands.len() != requested {
        return Err(ConfigError::invalid("run.commands", "a command is listed twice"));
    }

    let cfg = RunConfig { problem, grid, solver, verify, continuation, run };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses the configuration at `path`.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    Ok(parse_config(&text)?)
}

impl RunConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        match p.nonlinearity {
            NonlinearityKind::Power { p } => subcritical("problem.nonlinearity.p", "p", p)?,
            NonlinearityKind::PowerSum { p, q, c1, c2 } => {
                subcritical("problem.nonlinearity.p", "p", p)?;
                subcritical("problem.nonlinearity.q", "q", q)?;
                for (field, c) in [("problem.nonlinearity.c1", c1), ("problem.nonlinearity.c2", c2)] {
                    if !(c.is_finite() && c > 0.0) {
                        return Err(ConfigError::invalid(field, format!("weights must be positive, got {c}")));
                    }
                }
            }
            NonlinearityKind::Custom => {
                return Err(ConfigError::invalid("problem.nonlinearity.kind", "custom nonlinearities need the library API"))
            }
        }
        if !(p.lambda.is_finite() && p.lambda > 0.0) {
            return Err(ConfigError::invalid("problem.lambda", format!("λ must be positive, got {}", p.lambda)));
        }
        if p.functional == FunctionalName::OneLaplacian {
            if p.lambda != 1.0 {
                return Err(ConfigError::invalid("problem.lambda", "the 1-Laplacian problem has no λ; leave it at 1"));
            }
            if p.lambda_search {
                return Err(ConfigError::invalid("problem.lambda_search", "only the mean-curvature problem has a λ"));
            }
        } else if p.flavor != TvFlavor::Isotropic {
            return Err(ConfigError::invalid("problem.flavor", "the area functional is isotropic"));
        }

        let g = &self.grid;
        if g.nx == 0 || g.ny == 0 {
            return Err(ConfigError::invalid("grid", "nx and ny must be at least 1"));
        }
        if !(g.h.is_finite() && g.h > 0.0) {
            return Err(ConfigError::invalid("grid.h", format!("cell side must be positive, got {}", g.h)));
        }

        self.solver.validate().map_err(|e| library_range("solver", e))?;
        self.solver.certificate.validate().map_err(|e| library_range("verify", e))?;

        let ex = &self.continuation.exponents;
        for (k, &s) in ex.iter().enumerate() {
            if !(s > 1.0 && s <= 2.0) {
                return Err(ConfigError::invalid("continuation.exponents", format!("{s} is outside (1, 2]")));
            }
            if k > 0 && s >= ex[k - 1] {
                return Err(ConfigError::invalid("continuation.exponents", "exponents must strictly decrease"));
            }
        }
        let cmds = &self.run.commands;
        if cmds.is_empty() {
            return Err(ConfigError::invalid("run.commands", "no command given"));
        }
        if cmds.contains(&Command::Continuation) && p.functional != FunctionalName::OneLaplacian {
            return Err(ConfigError::invalid("run.commands", "continuation needs the 1-Laplacian problem"));
        }
        if cmds.contains(&Command::Certify) && !cmds.contains(&Command::Solve) && self.verify.field.is_none() {
            return Err(ConfigError::invalid("verify.field", "certify without solve needs a field file"));
        }
        Ok(())
    }

    /// Grid of the run.
    pub fn domain(&self) -> Result<DiscreteDomain, ConfigError> {
        DiscreteDomain::new(self.grid.nx, self.grid.ny, self.grid.h).map_err(|e| ConfigError::invalid("grid", e.to_string()))
    }

    /// Problem at the configured `λ`.
    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let nl = Nonlinearity::from_kind(self.problem.nonlinearity)
            .map_err(|e| ConfigError::invalid("problem.nonlinearity", e.to_string()))?;
        let functional = match self.problem.functional {
            FunctionalName::OneLaplacian => Functional::OneLaplacian,
            FunctionalName::MeanCurvature => Functional::MeanCurvature,
        };
        ProblemSpec::new(functional, self.problem.lambda, nl, self.problem.flavor, self.domain()?)
            .map_err(|e| ConfigError::invalid("problem", e.to_string()))
    }

    /// The configuration with every default spelled out, in the layout of
    /// the file format.
    pub fn echo(&self) -> serde_json::Value {
        let mut solver = serde_json::to_value(&self.solver).expect("solver settings serialize");
        if let Some(map) = solver.as_object_mut() {
            map.remove("certificate");
        }
        serde_json::json!({
            "problem": self.problem,
            "grid": self.grid,
            "solver": solver,
            "verify": self.verify,
            "continuation": self.continuation,
            "run": self.run,
        })
    }
}

fn subcritical(field: &str, name: &str, p: f64) -> Result<(), ConfigError> {
    if p > 1.0 && p < nehari_core::CRITICAL_EXPONENT {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("{name} must lie in (1, 2) for N = 2, got {p}")))
    }
}

fn library_range(section: &str, e: nehari_core::Error) -> ConfigError {
    match e {
        nehari_core::Error::InvalidParameter { name, value } => {
            ConfigError::invalid(format!("{section}.{name}"), format!("out of range: {value}"))
        }
        other => ConfigError::invalid(section, other.to_string()),
    }
}

fn solver_keys() -> Vec<String> {
    match Value::try_from(SolverConfig::default()) {
        Ok(Value::Table(t)) => t.keys().filter(|k| *k != "certificate").cloned().collect(),
        _ => unreachable!("solver settings serialize to a table"),
    }
}

fn section(root: &Table, name: &str) -> Result<Table, ConfigError> {
    match root.get(name) {
        None => Ok(Table::new()),
        Some(Value::Table(t)) => Ok(t.clone()),
        Some(_) => Err(ConfigError::invalid(name, "expected a table")),
    }
}

fn decode<T: DeserializeOwned>(table: Table, name: &str) -> Result<T, ConfigError> {
    Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::invalid(name, e.message().trim()))
}

fn check_keys(table: &Table, path: &str, known: &[&str]) -> Result<(), ConfigError> {
    for key in table.keys() {
        if known.contains(&key.as_str()) {
            continue;
        }
        let suggestion = known
            .iter()
            .map(|k| (strsim::levenshtein(key, k), *k))
            .filter(|&(d, k)| d <= 2.max(k.len() / 3))
            .min()
            .map(|(_, k)| k.to_string());
        let key = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        return Err(ConfigError::UnknownKey { key, suggestion });
    }
    Ok(())
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
