mod commands;
mod config;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{write_summary, Run, Summary};
use config::{parse_eps_list, CaseSpec, SceneConfig};

#[derive(Parser)]
#[command(name = "pencil", version, about = "Acoustic transmission resonances of small inclusions")]
struct Cli {
    /// Scene configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the material scaling case.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=4))]
    case: Option<u8>,
    /// Override the ε list, e.g. "0.08,0.04,0.02".
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Layer-potential identities of the reference shape.
    Identities,
    /// Minnaert data (ω_M², capacitance, equilibrium density).
    Minnaert,
    /// Leading eigenvalues of the Newton potential.
    Spectrum,
    /// Smallest Neumann eigenvalues.
    Neumann,
    /// Window scan and refinement of resonances, per ε.
    Resonances,
    /// Direct resonances against the first-order expansion.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Identities => "identities",
            Self::Minnaert => "minnaert",
            Self::Spectrum => "spectrum",
            Self::Neumann => "neumann",
            Self::Resonances => "resonances",
            Self::Compare => "compare",
        }
    }
}

fn setup(cli: &Cli) -> Result<Run> {
    let Some(path) = &cli.config else { anyhow::bail!("--config <path> is required") };
    let mut cfg = SceneConfig::load(path)?;
    if let Some(k) = cli.case {
        cfg.material.case = CaseSpec::Scaling(k);
    }
    if let Some(e) = &cli.eps {
        cfg.solver.eps_list = parse_eps_list(e)?;
    }
    cfg.validate()?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok(Run { cfg, out, quiet: cli.quiet })
}

fn execute(run: &Run, cmd: Command) -> Result<Summary> {
    match cmd {
        Command::Identities => run.identities(),
        Command::Minnaert => run.minnaert(),
        Command::Spectrum => run.spectrum(),
        Command::Neumann => run.neumann(),
        Command::Resonances => run.resonances(),
        Command::Compare => run.compare(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let fallback_out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let (summary, out) = match setup(&cli) {
        Ok(run) => {
            let s = execute(&run, cli.command).unwrap_or_else(|e| {
                eprintln!("error: {e:#}");
                Summary::failure(name, &e)
            });
            (s, run.out)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            (Summary::failure(name, &e), fallback_out)
        }
    };
    if !cli.quiet {
        for c in &summary.checks {
            eprintln!("{:<28} {} ({:.3e}, bound {:.1e})", c.name, if c.passed { "pass" } else { "FAIL" }, c.value, c.bound);
        }
        for w in &summary.warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Err(e) = write_summary(&out, &summary) {
        eprintln!("error: cannot write summary: {e:#}");
    }
    match serde_json::to_string(&summary) {
        // a closed pipe on stdout is not an error of the run
        Ok(j) => drop(writeln!(std::io::stdout().lock(), "{j}")),
        Err(e) => eprintln!("error: {e}"),
    }
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
