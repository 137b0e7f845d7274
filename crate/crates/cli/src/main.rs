//! `vaxplan`: command-line front end for vaccinator allocation planning.
//!
//! Machine-readable JSON goes to standard output; `--pretty` switches to
//! plain-text summaries. Exit codes: 0 success (an infeasible model is still
//! a success), 1 domain error, 2 usage error.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use vaxplan_core::allocation::{build_program, solve_allocation, PlanningParams};
use vaxplan_core::district::{generate_synthetic, load_district, SyntheticShape};
use vaxplan_core::report::{self, to_json};
use vaxplan_core::scenario::{compare_models, sweep};
use vaxplan_core::SpeedModel;
use vaxplan_service::{ServiceConfig, SolveRequest, Workspace};

/// Environment variable holding the log filter (e.g. `info`, `vaxplan_core=debug`).
const LOG_ENV: &str = "VAXPLAN_LOG";

#[derive(Debug, Parser)]
#[command(name = "vaxplan", version, about = "Vaccinator allocation planning")]
struct Cli {
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Write the result to this file instead of standard output.
    #[arg(long, short, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Travel speed on metalled roads.
    #[arg(long, global = true, default_value_t = 30.0, value_parser = positive_f64)]
    metalled_kmh: f64,
    /// Travel speed on unmetalled roads and tracks.
    #[arg(long, global = true, default_value_t = 10.0, value_parser = positive_f64)]
    unmetalled_kmh: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a district file and summarize it.
    Validate { district: PathBuf },
    /// Annual vaccination need per union council and age category.
    Need {
        district: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Shortest travel times (minutes) from every centre to every union council.
    Times {
        district: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Solve one allocation model.
    Solve {
        district: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Print the mixed-integer program to standard error first.
        #[arg(long)]
        dump_program: bool,
    },
    /// Solve the banded model over a grid of equity deviations.
    Sweep {
        district: PathBuf,
        /// Ascending list, e.g. 0.03,0.05,0.10.
        #[arg(long, value_delimiter = ',', required = true, value_parser = unit_interval)]
        epsilons: Vec<f64>,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        csv: bool,
    },
    /// Locality-bound model at --epsilon against cross-boundary with equal coverage.
    Compare {
        district: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Write a synthetic district.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = SyntheticShape::default().n_localities as u64, value_parser = clap::value_parser!(u64).range(1..))]
        localities: u64,
        #[arg(long, default_value_t = SyntheticShape::default().n_union_councils as u64, value_parser = clap::value_parser!(u64).range(1..))]
        union_councils: u64,
        #[arg(long, default_value_t = SyntheticShape::default().n_centres as u64, value_parser = clap::value_parser!(u64).range(1..))]
        centres: u64,
    },
    /// Run the HTTP planning service.
    Serve {
        #[arg(long)]
        district: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Per-request solve timeout in seconds.
        #[arg(long, default_value_t = 30.0, value_parser = positive_f64)]
        timeout: f64,
        /// Allowed cross-origin requester, or `*` for any.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// 1 keeps vaccinators inside their locality, 2 lets them cross boundaries.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    model: u8,
    #[arg(long, default_value_t = 46, value_parser = clap::value_parser!(u32).range(1..))]
    vaccinators: u32,
    /// Allowed spread between the highest and lowest coverage.
    #[arg(long, default_value_t = PlanningParams::default().equity_deviation, value_parser = unit_interval)]
    epsilon: f64,
    #[arg(long, default_value_t = PlanningParams::default().round_trip_factor, value_parser = positive_f64)]
    round_trip: f64,
    #[arg(long, default_value_t = PlanningParams::default().children_per_day, value_parser = clap::value_parser!(u32).range(1..))]
    children_per_day: u32,
    #[arg(long, default_value_t = PlanningParams::default().working_days, value_parser = clap::value_parser!(u32).range(1..))]
    working_days: u32,
    /// Force one common coverage level (default for model 2).
    #[arg(long, conflicts_with = "banded")]
    exact: bool,
    /// Force the coverage band (default for model 1).
    #[arg(long)]
    banded: bool,
}

impl PlanArgs {
    fn request(&self) -> SolveRequest {
        SolveRequest {
            equity_deviation: self.epsilon,
            round_trip_factor: self.round_trip,
            children_per_day: self.children_per_day,
            working_days: self.working_days,
            exact_equity: match (self.exact, self.banded) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
            ..SolveRequest::new(self.model, self.vaccinators)
        }
    }
}

fn positive_f64(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be positive (got {v})")),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        Ok(v) => Err(format!("must be within [0, 1] (got {v})")),
        Err(e) => Err(e.to_string()),
    }
}

/// A failure attributable to the command line rather than the data.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn workspace(path: &Path, speeds: &SpeedModel) -> Result<Workspace> {
    Workspace::load(path, speeds).with_context(|| format!("loading {}", path.display()))
}

fn params(plan: &PlanArgs) -> Result<PlanningParams> {
    plan.request()
        .params()
        .map_err(|e| UsageError(e.to_string()).into())
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let speeds = SpeedModel::new(cli.metalled_kmh, cli.unmetalled_kmh)?;
    let text = match &cli.command {
        Command::Validate { district } => {
            let ws = workspace(district, &speeds)?;
            let summary = report::district_summary(&ws.district, &ws.need, &ws.times);
            if cli.pretty {
                report::summary_text(&summary)
            } else {
                to_json(&summary)
            }
        }
        Command::Need { district, csv } => {
            let district = load_district(district)?;
            let need = vaxplan_core::need::compute_need(&district);
            match (csv, cli.pretty) {
                (true, _) => report::need_csv(&need),
                (false, true) => report::need_text(&need),
                (false, false) => to_json(&need),
            }
        }
        Command::Times { district, csv } => {
            let ws = workspace(district, &speeds)?;
            match (csv, cli.pretty) {
                (true, _) => report::times_csv(&ws.times),
                (false, true) => report::times_text(&ws.times),
                (false, false) => to_json(&ws.times),
            }
        }
        Command::Solve {
            district,
            plan,
            dump_program,
        } => {
            let params = params(plan)?;
            let ws = workspace(district, &speeds)?;
            if *dump_program {
                let program = build_program(&ws.need, &ws.times, &ws.district, &params)?;
                eprint!("{}", program.instance.base);
            }
            let outcome = solve_allocation(&ws.district, &ws.need, &ws.times, &params)?;
            if cli.pretty {
                report::outcome_text(&outcome)
            } else {
                to_json(&outcome)
            }
        }
        Command::Sweep {
            district,
            epsilons,
            plan,
            csv,
        } => {
            let params = params(plan)?;
            if epsilons.windows(2).any(|w| w[0] > w[1]) {
                return Err(UsageError("--epsilons must be ascending".into()).into());
            }
            let ws = workspace(district, &speeds)?;
            let table = sweep(&ws.district, &ws.need, &ws.times, &params, epsilons)?;
            let ids: Vec<String> = ws.district.localities().iter().map(|l| l.id.clone()).collect();
            match (csv, cli.pretty) {
                (true, _) => report::sweep_csv(&table, &ids),
                (false, true) => report::sweep_text(&table),
                (false, false) => to_json(&table),
            }
        }
        Command::Compare { district, plan } => {
            let params = params(plan)?;
            let ws = workspace(district, &speeds)?;
            let comparison = compare_models(&ws.district, &ws.need, &ws.times, &params)?;
            if cli.pretty {
                report::comparison_text(&comparison)
            } else {
                to_json(&comparison)
            }
        }
        Command::Synth {
            seed,
            localities,
            union_councils,
            centres,
        } => {
            let shape = SyntheticShape {
                n_localities: *localities as usize,
                n_union_councils: *union_councils as usize,
                n_centres: *centres as usize,
                ..SyntheticShape::default()
            };
            let district = generate_synthetic(*seed, &shape)?;
            if cli.pretty {
                let ws = Workspace::new(district, &speeds)?;
                report::summary_text(&report::district_summary(&ws.district, &ws.need, &ws.times))
            } else {
                district.to_json_string()
            }
        }
        Command::Serve {
            district,
            port,
            host,
            timeout,
            cors_origin,
        } => {
            let config = ServiceConfig {
                timeout: Duration::from_secs_f64(*timeout),
                cors_origin: cors_origin.clone(),
                speeds,
            };
            let addr = SocketAddr::new(*host, *port);
            let runtime = tokio::runtime::Runtime::new()?;
            return runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                info!("serving {}", district.display());
                vaxplan_service::serve(listener, config, district.clone()).await?;
                Ok(())
            });
        }
    };
    emit(cli, &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests print to stdout and succeed.
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
