use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ckn_cli::run::{self, CliError};
use ckn_cli::{Check, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "ckn")]
#[command(about = "Numerical verification of weighted Hardy identities on homogeneous groups")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity and inequality checks over the configured matrix.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these checks (repeatable).
        #[arg(long, value_parser = parse_check)]
        only: Vec<Check>,
        /// Output directory (overrides CKN_OUT_DIR and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock timings in the bundle (breaks byte-identical reruns).
        #[arg(long)]
        timings: bool,
    },
    /// Run the Rayleigh-quotient scans and extremizer sequences.
    Sharpness {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
    },
    /// Summarise one or more bundles.
    Report { bundles: Vec<PathBuf> },
}

fn parse_check(s: &str) -> Result<Check, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Verify { config, only, out, timings } => {
            let config = run::load_config(&config)?;
            let outcome = run::verify(&config, &only, timings);
            let dir = run::resolve_out_dir(out.as_deref(), &config);
            run::write_verify_outputs(&outcome, &dir)?;
            finish(&outcome, &dir);
            Ok(outcome.exit_code())
        }
        Command::Sharpness { config, out, timings } => {
            let config = run::load_config(&config)?;
            let outcome = run::sharpness(&config, timings)?;
            let dir = run::resolve_out_dir(out.as_deref(), &config);
            run::write_sharpness_outputs(&outcome, &dir)?;
            finish(&outcome, &dir);
            Ok(outcome.exit_code())
        }
        Command::Report { bundles } => {
            let (summary, all_pass) = run::report(&bundles)?;
            print!("{summary}");
            Ok(if all_pass { run::EXIT_OK } else { run::EXIT_FAILURE })
        }
    }
}

fn finish(outcome: &run::Outcome, dir: &std::path::Path) {
    let b = &outcome.bundle;
    let failed = b.failures().count();
    println!("{} reports, {} failed; written to {}", b.reports.len(), failed, dir.display());
    for r in b.failures() {
        println!(
            "FAIL {} {} {} {} {}",
            r.fingerprint.digest, r.check, r.fingerprint.group, r.fingerprint.norm, r.fingerprint.field
        );
    }
    for v in &outcome.violations {
        eprintln!("hypothesis violation: {v}");
    }
}
