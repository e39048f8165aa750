//! The `nehari-bv` binary: arguments, exit codes, output locations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nehari_bv::RunManifest;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nehari-bv"));
    cmd.env_remove("NEHARI_BV_OUT_DIR");
    cmd
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TINY: &str = "[grid]\nnx = 4\n[solver]\nrestarts = 2\n[verify]\nn_probes = 40\n[run]\ncommands = [\"solve\", \"certify\"]\n";

#[test]
fn run_writes_outputs_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["manifest.json", "field.csv", "field.pgm", "trace.csv", "certificate.json"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("energy") && stdout.contains("manifest.json"));
}

#[test]
fn seed_flag_is_recorded_and_changes_nothing_else_when_equal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(bin().args(["run"]).arg(&cfg).arg("--out").arg(&a).args(["--seed", "0"]).status().unwrap().success());
    assert!(bin().args(["run"]).arg(&cfg).arg("--out").arg(&b).status().unwrap().success());
    assert_eq!(manifest(&a).files, manifest(&b).files);
    let c = dir.path().join("c");
    assert!(bin().args(["run"]).arg(&cfg).arg("--out").arg(&c).args(["--seed", "77"]).status().unwrap().success());
    let mc = manifest(&c);
    assert_eq!(mc.seed, 77);
    assert_eq!(mc.config["solver"]["seed"], 77);
}

#[test]
fn environment_variable_sets_the_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let env_dir = dir.path().join("from-env");
    let status = bin().arg("run").arg(&cfg).env("NEHARI_BV_OUT_DIR", &env_dir).status().unwrap();
    assert!(status.success());
    assert!(env_dir.join("manifest.json").exists());

    let cli_dir = dir.path().join("from-cli");
    let status =
        bin().arg("run").arg(&cfg).arg("--out").arg(&cli_dir).env("NEHARI_BV_OUT_DIR", &env_dir).status().unwrap();
    assert!(status.success());
    assert!(cli_dir.join("manifest.json").exists());
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[problem.nonlinearity]\nkind = \"power\"\np = 2.5\n[grid]\nnx = 4\n");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("p must lie in (1, 2) for N = 2"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "[problem]\nlamda = 0.5\n[grid]\nnx = 4\n");
    let out = bin().arg("audit").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("did you mean `lambda`"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "[grid]\nnx = 4\nny = = 3\n");
    let out = bin().arg("audit").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn rejected_certificate_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("u.csv");
    fs::write(&field, "0.0,2.0,0.0\n0.0,0.0,0.0\n1.0,0.0,0.0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("[grid]\nnx = 3\n[verify]\nfield = {:?}\n[run]\ncommands = [\"certify\"]\n", field.to_str().unwrap()),
    );
    let out_dir = dir.path().join("o");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("certify:"));
    assert_eq!(manifest(&out_dir).status, nehari_bv::Status::Failed);
}

#[test]
fn audit_subcommand_prints_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnx = 2\n");
    let out = bin().arg("audit").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["kind"]["kind"], "power");
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = bin().args(["run", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
