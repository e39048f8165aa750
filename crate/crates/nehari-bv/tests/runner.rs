//! Library-level runs into temporary directories.

use std::fs;
use std::path::Path;

use nehari_bv::io::{parse_field_csv, sha256_hex};
use nehari_bv::{parse_config, run, Command, RunConfig, RunError, RunManifest, Status};

fn config(body: &str, dir: &Path) -> RunConfig {
    let mut cfg = parse_config(body).unwrap();
    cfg.run.output_dir = dir.to_path_buf();
    cfg
}

const SMALL: &str = r#"
[grid]
nx = 6

[solver]
restarts = 3
seed = 5

[verify]
n_probes = 120
export_z = true

[continuation]
exponents = [1.3, 1.1]

[run]
commands = ["continuation", "certify", "solve", "audit"]
threads = 2
"#;

fn strip_wall_time(m: &RunManifest) -> RunManifest {
    RunManifest { wall_time_seconds: 0.0, ..m.clone() }
}

#[test]
fn full_run_writes_hashed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run(&config(SMALL, dir.path())).unwrap();
    assert_eq!(manifest.status, Status::Ok);
    let order: Vec<Command> = manifest.commands.iter().map(|c| c.command).collect();
    assert_eq!(order, [Command::Audit, Command::Solve, Command::Certify, Command::Continuation]);

    let names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["certificate.json", "field.csv", "field.pgm", "trace.csv", "z_x.csv", "z_y.csv"]);
    for f in &manifest.files {
        let bytes = fs::read(dir.path().join(&f.name)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.name);
        assert_eq!(bytes.len() as u64, f.bytes);
    }

    // The manifest on disk is the returned one, and the field file holds the
    // solved energy's field.
    let on_disk: RunManifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    let field = parse_field_csv(&fs::read_to_string(dir.path().join("field.csv")).unwrap(), 1.0 / 6.0).unwrap();
    assert_eq!(field.domain().nx(), 6);
    let solve = &manifest.command(Command::Solve).unwrap().output;
    assert!(solve["nehari_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(solve["restart_energies"].as_array().unwrap().len(), 3);

    let cont = &manifest.command(Command::Continuation).unwrap().output;
    assert_eq!(cont["entries"].as_array().unwrap().len(), 2);
    assert_eq!(cont["reference_energy"], solve["energy"]);

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("restart,eps,iteration,psi\n"));
    assert_eq!(trace.lines().count() - 1, solve["trace_entries"].as_u64().unwrap() as usize);
}

#[test]
fn identical_configs_give_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SMALL, dir.path());
    let a = run(&cfg).unwrap();
    let a_text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let b = run(&cfg).unwrap();
    let b_text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));
    let without_time = |s: &str| s.lines().filter(|l| !l.contains("wall_time_seconds")).collect::<Vec<_>>().join("\n");
    assert_eq!(without_time(&a_text), without_time(&b_text));

    let mut sequential = cfg.clone();
    sequential.run.threads = 1;
    sequential.run.output_dir = dir.path().join("seq");
    let c = run(&sequential).unwrap();
    assert_eq!(c.file_hash("field.csv"), a.file_hash("field.csv"));
    assert_eq!(c.files, a.files);
}

#[test]
fn audit_only_run_writes_no_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("[grid]\nnx = 4\n[run]\ncommands = [\"audit\"]\n", dir.path());
    let manifest = run(&cfg).unwrap();
    assert!(manifest.files.is_empty());
    let audit = manifest.command(Command::Audit).unwrap();
    assert_eq!(audit.output["passed"], true);
    let checks = audit.output["report"]["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn failed_command_keeps_earlier_files_and_records_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let good = config("[grid]\nnx = 4\n[solver]\nrestarts = 2\n[verify]\nn_probes = 50\n", dir.path());
    let first = run(&good).unwrap();
    let field_before = fs::read(dir.path().join("field.csv")).unwrap();

    // A field that is not critical fails the certificate; the continuation
    // after it is skipped.
    let bumpy = dir.path().join("bumpy.csv");
    fs::write(&bumpy, "1.0,0.0,0.0,0.0\n0.0,0.0,0.0,0.0\n0.0,0.0,3.0,0.0\n0.0,0.0,0.0,0.0\n").unwrap();
    let body = format!(
        "[grid]\nnx = 4\n[verify]\nn_probes = 50\nfield = {:?}\n[run]\ncommands = [\"certify\", \"continuation\"]\n",
        bumpy.to_str().unwrap()
    );
    let err = run(&config(&body, dir.path())).unwrap_err();
    assert!(matches!(err, RunError::Rejected { command: "certify", .. }), "{err}");
    assert_eq!(err.exit_code(), 3);

    assert_eq!(fs::read(dir.path().join("field.csv")).unwrap(), field_before);
    assert_eq!(sha256_hex(&field_before), first.file_hash("field.csv").unwrap());
    let manifest: RunManifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, Status::Failed);
    let certify = manifest.command(Command::Certify).unwrap();
    assert_eq!(certify.status, Status::Failed);
    assert!(certify.error.as_deref().unwrap().starts_with("certify: "));
    assert_eq!(manifest.command(Command::Continuation).unwrap().status, Status::Skipped);
    // The rejected certificate is still on disk for inspection.
    assert!(manifest.file_hash("certificate.json").is_some());
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().contains(".tmp-")));
}

#[test]
fn certify_reads_a_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let solved = run(&config("[grid]\nnx = 5\n[solver]\nrestarts = 2\n[verify]\nn_probes = 60\n", dir.path())).unwrap();
    assert_eq!(solved.status, Status::Ok);
    let field = dir.path().join("field.csv");
    let body = format!(
        "[grid]\nnx = 5\n[verify]\nn_probes = 60\nfield = {:?}\n[run]\ncommands = [\"certify\"]\n",
        field.to_str().unwrap()
    );
    let out = dir.path().join("cert");
    let manifest = run(&config(&body, &out)).unwrap();
    let report = &manifest.command(Command::Certify).unwrap().output["report"];
    assert!(report["subdiff_min_slack"].as_f64().unwrap() >= -1e-7);
    assert_eq!(report["n_probes"], 60);
    assert!(out.join("certificate.json").exists());

    // A field of the wrong shape is a configuration error.
    let wrong = body.replace("nx = 5", "nx = 4");
    assert_eq!(run(&config(&wrong, &out)).unwrap_err().exit_code(), 2);
}

#[test]
fn mean_curvature_lambda_search_reports_the_accepted_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "[problem]\nfunctional = \"mean_curvature\"\nlambda_search = true\n[grid]\nnx = 6\n[solver]\nrestarts = 2\n[verify]\nn_probes = 60\n",
        dir.path(),
    );
    let manifest = run(&cfg).unwrap();
    let solve = &manifest.command(Command::Solve).unwrap().output;
    let lambda = solve["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda <= 1.0 && (lambda.log2().fract() == 0.0));
}
