//! Executes the commands of a [`RunConfig`] and persists their outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nehari_core::fibering::Functional;
use nehari_core::ground_state::{
    assemble, check_preconditions, p_continuation, run_restart, solve_with_lambda_search,
};
use nehari_core::nonlinearity::{audit, default_audit_grid};
use nehari_core::verification::{certify, el_certificate, CriticalityReport};
use nehari_core::{GroundStateResult, ProblemSpec, ScalarField, SolverConfig};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::{ConfigError, RunError};
use crate::io::{field_csv, field_pgm, parse_field_csv, rows_csv, sha256_hex, trace_csv, write_atomic};
use crate::manifest::{CommandRecord, FileEntry, RunManifest, Status};

/// Environment variable that overrides `run.output_dir`.
pub const OUT_DIR_ENV: &str = "NEHARI_BV_OUT_DIR";

/// Applies the output-directory precedence `cli > NEHARI_BV_OUT_DIR > file`
/// and the seed override.
pub fn apply_overrides(cfg: &mut RunConfig, out: Option<PathBuf>, seed: Option<u64>) {
    if let Some(dir) = out.or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)) {
        cfg.run.output_dir = dir;
    }
    if let Some(seed) = seed {
        cfg.solver.seed = seed;
    }
}

/// [`solve`](nehari_core::ground_state::solve) with the restarts spread over
/// `threads` workers (0: one per core). The result does not depend on
/// `threads`.
pub fn solve_parallel(spec: &ProblemSpec, cfg: &SolverConfig, threads: usize) -> Result<GroundStateResult, nehari_core::Error> {
    check_preconditions(spec, cfg)?;
    let outcomes = if threads == 1 {
        (0..cfg.restarts).map(|k| run_restart(spec, cfg, k)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        pool.install(|| (0..cfg.restarts).into_par_iter().map(|k| run_restart(spec, cfg, k)).collect())
    };
    assemble(spec, cfg, outcomes)
}

struct Solved {
    spec: ProblemSpec,
    result: GroundStateResult,
}

struct Session<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    files: Vec<FileEntry>,
    solved: Option<Solved>,
}

impl Session<'_> {
    fn emit(&mut self, name: &str, contents: &[u8]) -> Result<(), RunError> {
        write_atomic(&self.dir.join(name), contents)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(contents), bytes: contents.len() as u64 });
        Ok(())
    }

    fn execute(&mut self, command: Command) -> Result<Value, RunError> {
        match command {
            Command::Audit => self.audit(),
            Command::Solve => self.solve(),
            Command::Certify => self.certify(),
            Command::Continuation => self.continuation(),
        }
    }

    fn audit(&mut self) -> Result<Value, RunError> {
        let spec = self.cfg.problem_spec()?;
        let report = audit(spec.nonlinearity(), &default_audit_grid())
            .map_err(|source| RunError::Command { command: "audit", source })?;
        let passed = report.passed();
        let out = json!({ "passed": passed, "report": report });
        if passed {
            Ok(out)
        } else {
            let failing: Vec<String> =
                report.checks.iter().filter(|c| !c.passed).map(|c| c.detail.clone()).collect();
            Err(RunError::Rejected { command: "audit", message: failing.join("; ") })
        }
    }

    fn solve(&mut self) -> Result<Value, RunError> {
        let cfg = self.cfg;
        let spec = cfg.problem_spec()?;
        let threads = cfg.run.threads;
        let fail = |source| RunError::Command { command: "solve", source };
        let (spec, result) = if cfg.problem.lambda_search {
            let (lambda, result) =
                solve_with_lambda_search(&spec, cfg.problem.max_halvings, |s| solve_parallel(s, &cfg.solver, threads))
                    .map_err(fail)?;
            (spec.with_lambda(lambda).map_err(fail)?, result)
        } else {
            let result = solve_parallel(&spec, &cfg.solver, threads).map_err(fail)?;
            (spec, result)
        };
        self.emit("field.csv", field_csv(&result.u_star).as_bytes())?;
        self.emit("field.pgm", field_pgm(&result.u_star).as_bytes())?;
        self.emit("trace.csv", trace_csv(&result.trace).as_bytes())?;
        let out = json!({
            "lambda": spec.lambda(),
            "energy": result.energy,
            "nehari_residual": result.nehari_residual,
            "t_w": result.t_w,
            "best_restart": result.best_restart,
            "restart_energies": result.restart_energies,
            "trace_entries": result.trace.len(),
            "certificate_passed": result.certificate.passed(),
        });
        self.solved = Some(Solved { spec, result });
        Ok(out)
    }

    fn certify(&mut self) -> Result<Value, RunError> {
        let cfg = self.cfg;
        let certify_cfg = cfg.verify.certify_config();
        let (spec, u, report): (ProblemSpec, ScalarField, CriticalityReport) = match &self.solved {
            Some(s) => (s.spec.clone(), s.result.u_star.clone(), s.result.certificate.clone()),
            None => {
                let path = cfg.verify.field.as_ref().ok_or_else(|| {
                    ConfigError::invalid("verify.field", "certify needs `solve` in the same run or a field file")
                })?;
                let u = read_field(path, cfg.grid.h)?;
                let spec = cfg.problem_spec()?;
                if u.domain() != spec.domain() {
                    return Err(ConfigError::invalid("verify.field", "field shape does not match [grid]").into());
                }
                let report = certify(&spec, &u, &certify_cfg)
                    .map_err(|source| RunError::Command { command: "certify", source })?;
                (spec, u, report)
            }
        };
        let mut dual = Value::Null;
        if cfg.verify.export_z && spec.functional() == Functional::OneLaplacian {
            let cert = el_certificate(&u, spec.nonlinearity(), spec.flavor(), certify_cfg.el_max_iters, certify_cfg.tol_el)
                .map_err(|source| RunError::Command { command: "certify", source })?;
            self.emit("z_x.csv", rows_csv(spec.domain(), cert.z.x()).as_bytes())?;
            self.emit("z_y.csv", rows_csv(spec.domain(), cert.z.y()).as_bytes())?;
            dual = json!({
                "residual_norm": cert.residual_norm,
                "relative_residual": cert.relative_residual,
                "pairing": cert.pairing,
                "tv": cert.tv,
                "pairing_gap": cert.pairing_gap,
                "max_magnitude": cert.max_magnitude,
                "iterations": cert.iterations,
                "converged": cert.converged,
            });
        }
        let slack_ok = report.subdiff_min_slack >= -report.tol_cert;
        let out = json!({ "passed": report.passed(), "report": report, "dual": dual });
        let mut text = serde_json::to_string_pretty(&out).expect("certificate serializes");
        text.push('\n');
        self.emit("certificate.json", text.as_bytes())?;
        if slack_ok {
            Ok(out)
        } else {
            Err(RunError::Rejected {
                command: "certify",
                message: format!(
                    "subdifferential slack {:e} below −{:e} (probe {})",
                    report.subdiff_min_slack, report.tol_cert, report.worst_probe
                ),
            })
        }
    }

    fn continuation(&mut self) -> Result<Value, RunError> {
        let cfg = self.cfg;
        let spec = cfg.problem_spec()?;
        let reference = self.solved.as_ref().map(|s| s.result.energy);
        let report = p_continuation(&spec, &cfg.continuation.exponents, &cfg.solver, reference)
            .map_err(|source| RunError::Command { command: "continuation", source })?;
        let entries: Vec<Value> = report
            .entries
            .iter()
            .map(|e| json!({ "exponent": e.exponent, "energy": e.energy, "note": e.note }))
            .collect();
        Ok(json!({
            "entries": entries,
            "reference_energy": report.reference_energy,
            "relative_gap": report.relative_gap,
        }))
    }
}

fn read_field(path: &Path, h: f64) -> Result<ScalarField, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    Ok(parse_field_csv(&text, h)?)
}

/// Runs the configured commands in the order audit → solve → certify →
/// continuation, writing outputs into `cfg.run.output_dir`.
///
/// The manifest is written last, also when a command fails; in that case it
/// records the failure, later commands are marked skipped, and the error is
/// returned.
pub fn run(cfg: &RunConfig) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    cfg.problem_spec()?;
    let dir = cfg.run.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;

    let mut session = Session { cfg, dir: dir.clone(), files: Vec::new(), solved: None };
    let mut records = Vec::with_capacity(cfg.run.commands.len());
    let mut failure = None;
    for &command in &cfg.run.commands {
        if failure.is_some() {
            records.push(CommandRecord { command, status: Status::Skipped, error: None, output: Value::Null });
            continue;
        }
        match session.execute(command) {
            Ok(output) => records.push(CommandRecord { command, status: Status::Ok, error: None, output }),
            Err(e @ RunError::Io { .. }) => return Err(e),
            Err(e) => {
                let message = match &e {
                    RunError::Config(c) => format!("{}: {c}", command.as_str()),
                    other => other.to_string(),
                };
                records.push(CommandRecord { command, status: Status::Failed, error: Some(message), output: Value::Null });
                failure = Some(e);
            }
        }
    }

    let mut files = session.files;
    files.sort_by(|a, b| a.name.cmp(&b.name));
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: if failure.is_some() { Status::Failed } else { Status::Ok },
        seed: cfg.solver.seed,
        config: cfg.echo(),
        commands: records,
        files,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_atomic(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
