use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use backhaul_planner::{
    cmd_all, cmd_coverage_bars, cmd_hops_map, cmd_path, cmd_rate_heatmap, parse_layout,
    parse_point, CliError, Overrides, PathOutcome, RunConfig, ScenarioSource,
};

/// Drone backhaul coverage experiments with and without RIS.
#[derive(Debug, Parser)]
#[command(name = "ris-backhaul", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario document (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Generate a street grid instead of loading a scenario.
    #[arg(
        long,
        global = true,
        value_name = "BLOCKS_X,BLOCKS_Y,BLOCK_W,BLOCK_H,STREET_W"
    )]
    generate: Option<String>,

    /// With --generate: open the central block and put two RIS panels on
    /// its facing facades.
    #[arg(long, global = true)]
    ris_center: bool,

    /// Per-hop SNR requirements, dB, comma separated.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "DB,..."
    )]
    snr_min: Option<Vec<f64>>,

    /// Largest hop budget.
    #[arg(long, global = true)]
    n_max: Option<usize>,

    /// Per-hop routing penalty, dB.
    #[arg(long, global = true)]
    penalty: Option<f64>,

    /// Rate-map cell size, m.
    #[arg(long, global = true, value_name = "METERS")]
    grid: Option<f64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fewest hops to every candidate point.
    HopsMap,
    /// Achievable-rate raster per variant.
    RateHeatmap,
    /// Reachable-candidate counts per requirement and hop budget.
    CoverageBars,
    /// Hops map, rate heatmap and coverage bars in one run.
    All,
    /// Route report for one destination.
    Path {
        /// Destination as X,Y in metres.
        #[arg(long, allow_hyphen_values = true, value_name = "X,Y")]
        dst: String,
    },
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let source = match (&cli.scenario, &cli.generate) {
        (Some(path), None) => {
            if cli.ris_center {
                return Err(CliError::BadArgs(
                    "--ris-center only applies to --generate".into(),
                ));
            }
            ScenarioSource::File(path.clone())
        }
        (None, Some(spec)) => {
            ScenarioSource::Generate(parse_layout(spec, cli.ris_center).map_err(CliError::BadArgs)?)
        }
        _ => {
            return Err(CliError::BadArgs(
                "give exactly one of --scenario or --generate".into(),
            ))
        }
    };
    Ok(RunConfig {
        source,
        overrides: Overrides {
            snr_min_db: cli.snr_min.clone(),
            n_max: cli.n_max,
            penalty_p: cli.penalty,
            grid_spacing_m: cli.grid,
        },
        out_dir: cli.out.clone(),
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config(cli)?;
    let files = match &cli.command {
        Command::HopsMap => cmd_hops_map(&cfg)?,
        Command::RateHeatmap => cmd_rate_heatmap(&cfg)?,
        Command::CoverageBars => cmd_coverage_bars(&cfg)?,
        Command::All => cmd_all(&cfg)?,
        Command::Path { dst } => {
            let dst = parse_point(dst).map_err(CliError::BadArgs)?;
            let report = cmd_path(&cfg, dst)?;
            for e in &report.entries {
                let summary = match &e.outcome {
                    PathOutcome::Reached(r) => format!("{} hop(s)", r.hop_count),
                    PathOutcome::Unreachable(why) => format!("unreachable ({})", why.describe()),
                };
                println!("{} dB {}: {summary}", e.snr_min_db, e.variant.label());
            }
            report.files
        }
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
