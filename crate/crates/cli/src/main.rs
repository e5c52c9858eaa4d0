use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use eigexpand::run::{cmd_decompose, cmd_gasket, cmd_verify, DecomposeInputs, RunConfig, RunError, RunOutput};

#[derive(Parser)]
#[command(name = "eigexpand", version)]
#[command(about = "Eigenfunction expansions on discrete measure spaces and Sierpinski gasket decimation")]
struct Cli {
    /// Omit the timestamp so identical runs produce identical reports
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a kernel or graph Laplacian and verify every identity
    #[command(group(ArgGroup::new("operator").required(true).args(["kernel", "graph"])))]
    Decompose {
        /// Vertex file: vertex_id<TAB>measure
        #[arg(long)]
        space: PathBuf,
        /// Kernel file: x<TAB>y<TAB>re[<TAB>im]
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Edge file: x<TAB>y<TAB>weight
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Weight file: vertex_id<TAB>omega
        #[arg(long)]
        omega: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral decimation experiments on the level-N gasket
    Gasket {
        #[arg(long)]
        level: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two decomposition dumps of the same kernel
    Verify {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, RunError> {
    let mut config = match path {
        None => RunConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RunError::Io { path: p.display().to_string(), message: e.to_string() })?;
            RunConfig::parse(&text).map_err(|source| RunError::Input { path: p.display().to_string(), source })?
        }
    };
    config.apply_process_env()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(RunOutput, PathBuf), RunError> {
    match &cli.command {
        Command::Decompose { space, kernel, graph, omega, config, out } => {
            let config = load_config(config.as_deref())?;
            let inputs = DecomposeInputs {
                space: space.clone(),
                kernel: kernel.clone(),
                graph: graph.clone(),
                omega: omega.clone(),
            };
            Ok((cmd_decompose(&inputs, &config)?, out.clone()))
        }
        Command::Gasket { level, config, out } => {
            let config = load_config(config.as_deref())?;
            Ok((cmd_gasket(Some(*level), &config)?, out.clone()))
        }
        Command::Verify { a, b, config, out } => {
            let config = load_config(config.as_deref())?;
            Ok((cmd_verify(a, b, &config)?, out.clone()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut output, out) = match run(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(RunError::EXIT_CODE as u8);
        }
    };
    if !cli.no_timestamp {
        output.report.stamp_now();
    }
    if let Err(e) = output.write_to(&out) {
        eprintln!("error: {e}");
        return ExitCode::from(RunError::EXIT_CODE as u8);
    }
    for check in output.report.failed_checks() {
        eprintln!("FAIL {}: max_error {:e} > tolerance {:e}", check.name, check.max_error, check.tolerance);
    }
    let report = &output.report;
    println!(
        "{}: {} ({} checks, {} failed) -> {}",
        report.command,
        if report.passed() { "pass" } else { "fail" },
        report.checks.len(),
        report.failed_checks().count(),
        out.join("report.json").display()
    );
    ExitCode::from(output.exit_code() as u8)
}
