use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use menr_cli::commands::{
    self, AnalyzeArgs, CalibrateArgs, CampaignArgs, ProjectArgs, RunArgs, SweepArgs,
};
use menr_cli::config;

#[derive(Parser)]
#[command(
    name = "menr",
    version,
    about = "Ring-cavity magneto-electric non-reciprocity simulator"
)]
struct Cli {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps and campaigns; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one modulated-field run.
    Run(RunArgs),
    /// Simulate a field sweep and fit the split against E.
    Sweep(SweepArgs),
    /// Run the sign-configuration campaign.
    Campaign(CampaignArgs),
    /// Combine 2η∥ estimates from run or sweep records.
    Analyze(AnalyzeArgs),
    /// Calibrate the error signal with a known EOM injection.
    Calibrate(CalibrateArgs),
    /// Project the measurement onto a vacuum-strength target.
    ProjectVacuum(ProjectArgs),
    /// Print the default configuration file.
    DefaultConfig,
}

fn execute(cli: &Cli) -> anyhow::Result<String> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    if !matches!(cli.command, Command::DefaultConfig) {
        std::fs::create_dir_all(&cli.out)
            .with_context(|| format!("cannot create {}", cli.out.display()))?;
    }
    let out = cli.out.as_path();
    match &cli.command {
        Command::Run(a) => commands::run(a, out),
        Command::Sweep(a) => commands::sweep(a, out),
        Command::Campaign(a) => commands::campaign(a, out),
        Command::Analyze(a) => commands::analyze(a, out),
        Command::Calibrate(a) => commands::calibrate_cmd(a, out),
        Command::ProjectVacuum(a) => commands::project_vacuum(a, out),
        Command::DefaultConfig => Ok(config::default_toml().trim_end().to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
