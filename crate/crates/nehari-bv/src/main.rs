use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nehari_bv::config::load_config;
use nehari_bv::runner::apply_overrides;
use nehari_bv::{run, Command, RunError};
use nehari_core::nonlinearity::{audit, default_audit_grid};

/// Ground states of the 1-Laplacian and mean-curvature problems on grids.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the commands listed in the configuration.
    Run {
        /// Configuration file (TOML).
        config: PathBuf,
        /// Output directory; overrides NEHARI_BV_OUT_DIR and `run.output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver seed; overrides `solver.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Audit the configured nonlinearity and print the report as JSON.
    Audit {
        /// Configuration file (TOML).
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Cmd) -> Result<(), RunError> {
    match command {
        Cmd::Run { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, out, seed);
            let manifest = run(&cfg)?;
            if let Some(solve) = manifest.command(Command::Solve) {
                let o = &solve.output;
                println!("energy          {}", o["energy"]);
                println!("nehari residual {}", o["nehari_residual"]);
                println!("lambda          {}", o["lambda"]);
            }
            if let Some(certify) = manifest.command(Command::Certify) {
                let r = &certify.output["report"];
                println!("min slack       {}", r["subdiff_min_slack"]);
                println!("certificate     {}", if certify.output["passed"] == true { "passed" } else { "not passed" });
            }
            println!("manifest        {}", cfg.run.output_dir.join("manifest.json").display());
            Ok(())
        }
        Cmd::Audit { config } => {
            let cfg = load_config(&config)?;
            let spec = cfg.problem_spec()?;
            let report = audit(spec.nonlinearity(), &default_audit_grid())
                .map_err(|source| RunError::Command { command: "audit", source })?;
            println!("{}", serde_json::to_string_pretty(&report).expect("audit report serializes"));
            if report.passed() {
                Ok(())
            } else {
                Err(RunError::Rejected { command: "audit", message: "nonlinearity failed its hypothesis audit".into() })
            }
        }
    }
}
