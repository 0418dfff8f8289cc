use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fliplab_cli::commands::{self, Output};
use fliplab_cli::config::{ConfigFile, Experiment, ExperimentConfig, Overrides};
use fliplab_cli::{criteria, emit, CliError, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};

/// Numerical experiments on flip operators and asymptotic Schur
/// orthogonality. Tables are CSV; `report` prints a JSON summary.
#[derive(Parser, Debug)]
#[command(name = "fliplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Harish-Chandra values, ball masses and Folner ratios
    Xi,
    /// Finite-group Haar means and flip membership
    Compact,
    /// Monte Carlo ball estimates on the regular tree
    TreeConverge,
    /// Exact ball sums for free groups and the sup-norm witness
    Free,
    /// Operator-norm evidence for the tree, finite and free models
    Props,
    /// Run every acceptance check and print a JSON summary
    Report,
}

impl From<Cmd> for Experiment {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Xi => Experiment::Xi,
            Cmd::Compact => Experiment::Compact,
            Cmd::TreeConverge => Experiment::TreeConverge,
            Cmd::Free => Experiment::Free,
            Cmd::Props => Experiment::Props,
            Cmd::Report => Experiment::Report,
        }
    }
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let file = cli
        .flags
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()?;
    let config = ExperimentConfig::resolve(cli.command.into(), file.as_ref(), &cli.flags)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let output = pool.install(|| match cli.command {
        Cmd::Xi => commands::xi(&config),
        Cmd::Compact => commands::compact(&config),
        Cmd::TreeConverge => commands::tree_converge(&config),
        Cmd::Free => commands::free(&config),
        Cmd::Props => commands::props(&config),
        Cmd::Report => {
            let results = criteria::run_all();
            for c in &results {
                eprintln!("{}", c.line());
            }
            Ok(Output {
                body: criteria::summary_json(&results),
                passed: results.iter().all(|c| c.passed),
            })
        }
    })?;
    emit(&output.body, config.out.as_deref())?;
    Ok(output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(&cli) {
        Ok(out) if out.passed => EXIT_OK,
        Ok(_) => {
            eprintln!("fliplab: a numerical check failed");
            EXIT_NUMERIC
        }
        Err(e) => {
            eprintln!("fliplab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
