use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use ramkit_cli::commands::{self, Outcome};
use ramkit_cli::config::Settings;

#[derive(Parser)]
#[command(name = "ramkit", version, about = "Random attention model analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value settings file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data: Option<String>,
    /// preference such as "b>a>c", best first
    #[arg(long, global = true)]
    pref: Option<String>,
    #[arg(long, global = true)]
    phi: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// gms, pi, lf, ms2 or ub2
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    draws: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// complete or limited
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// any other setting, as key=value (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Synthesize a choice rule, sample a dataset, write it as CSV
    Simulate,
    /// Test one preference
    Test,
    /// Confidence set over all preferences
    Confset,
    /// Specification test (empty confidence set)
    Spectest,
    /// Test whether any preference of a collection is compatible
    Collection,
    /// Monte Carlo rejection-rate grid
    Mc,
    /// Timing of preference tests on synthetic data
    Bench,
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let flags = [
        ("data", &cli.data),
        ("pref", &cli.pref),
        ("phi", &cli.phi),
        ("alpha", &cli.alpha),
        ("method", &cli.method),
        ("draws", &cli.draws),
        ("beta", &cli.beta),
        ("seed", &cli.seed),
        ("mode", &cli.mode),
        ("out", &cli.out),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        s.set(k.trim(), v.trim())?;
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let s = settings(cli)?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&s),
        Command::Test => commands::cmd_test(&s),
        Command::Confset => commands::cmd_confset(&s),
        Command::Spectest => commands::cmd_spectest(&s),
        Command::Collection => commands::cmd_collection(&s),
        Command::Mc => commands::cmd_mc(&s),
        Command::Bench => commands::cmd_bench(&s),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("serializable report");
            // mc writes its CSV to stdout when no output file is given
            if matches!(cli.command, Command::Mc) && cli.out.is_none() {
                eprintln!("{text}");
            } else {
                println!("{text}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
