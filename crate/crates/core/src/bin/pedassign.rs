use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pedassign::experiment::{cmd_assign, cmd_routes, cmd_summary, ExperimentConfig, ExperimentError, Overrides};
use pedassign::routes::RouteSetConfig;

/// Pedestrian route enumeration, simulation and iterative assignment.
#[derive(Parser)]
#[command(name = "pedassign", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Comma-separated seeds, replacing the config's list.
    #[arg(long, global = true, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Comma-separated demands in ped/s, replacing the config's list.
    #[arg(long, global = true, value_delimiter = ',')]
    demand_list: Option<Vec<f64>>,
    /// Latency file; switches travel times to the analytic evaluator.
    #[arg(long, global = true)]
    oracle: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate routes of a scenario and draw them.
    Routes {
        scenario: PathBuf,
        /// Experiment config whose [routes] table is used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the assignment sweep of a config file.
    Assign { config: PathBuf },
    /// Aggregate the runs in a results directory.
    Summary { dir: PathBuf },
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let c = cli.common;
    match cli.command {
        Command::Routes { scenario, config } => {
            let routes = match config {
                Some(path) => ExperimentConfig::load(&path)?.routes,
                None => RouteSetConfig::default(),
            };
            let out = c.out.unwrap_or_else(|| PathBuf::from("."));
            let set = cmd_routes(&scenario, &routes, &out)?;
            for r in &set.routes {
                println!(
                    "route {}: signature {}, length {:.2} m, {} intermediate destination(s)",
                    r.id,
                    r.signature,
                    r.length,
                    r.intermediate_destinations.len()
                );
            }
        }
        Command::Assign { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(&Overrides {
                out: c.out,
                workers: c.workers,
                seeds: c.seed_list,
                demands: c.demand_list,
                oracle: c.oracle,
            });
            let report = cmd_assign(&cfg)?;
            for (demand, seed, r) in &report.results {
                let it = r.selected_iteration();
                let p: Vec<String> = it.probabilities.iter().map(|p| format!("{:.3}", p)).collect();
                println!(
                    "demand {demand} seed {seed}: iteration {} of {}, terminated {}, p = ({})",
                    it.iteration,
                    r.history.len(),
                    r.terminated,
                    p.join(", ")
                );
            }
        }
        Command::Summary { dir } => {
            let out = c.out.unwrap_or_else(|| dir.clone());
            let report = cmd_summary(&dir, &out)?;
            println!("{} run(s) summarized into {}", report.rows.len(), out.join("summary.csv").display());
            for (d, s) in &report.missing {
                println!("missing: demand {d} seed {s}");
            }
            for name in &report.unreadable {
                println!("unreadable: {name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
