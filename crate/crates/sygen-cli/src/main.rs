//! Command-line front end: solving, cost evaluation, estimation, Monte
//! Carlo simulation and the optimal-quantity sweep, with CSV output.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric or solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use sygen::cost::{self, CostParams};
use sygen::demand::DemandModel;
use sygen::estimators::{self, EstimatorKind, SampleData};
use sygen::simulation::{self, SimulationConfig};
use sygen::solver;

#[derive(Parser)]
#[command(
    name = "sygen",
    about = "Newsvendor optimization with power losses: solver, estimators, simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DistArgs {
    /// Demand law: exp | unif
    #[arg(long)]
    dist: String,
    /// Mean demand (exponential)
    #[arg(long)]
    lambda: Option<f64>,
    /// Upper support bound (uniform)
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct CostArgs {
    /// Per-unit shortage cost
    #[arg(long)]
    cs: f64,
    /// Per-unit excess cost
    #[arg(long)]
    ce: f64,
    /// Loss degree
    #[arg(long)]
    m: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal order quantity
    Solve {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Evaluate the expected cost of an order quantity
    ExpectedCost {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        cost: CostArgs,
        /// Order quantity
        #[arg(long)]
        q: f64,
    },
    /// Estimate the optimal order quantity from demand data
    Estimate {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        cost: CostArgs,
        /// Estimator: moment | umvue | mle | eeq1 | eeq2 | os1 | os2
        #[arg(long)]
        estimator: String,
        /// Demand sample file (single-column CSV, optional `demand` header)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Rank of the observed order statistic (broken samples)
        #[arg(long)]
        order_stat_rank: Option<u32>,
        /// Observed order-statistic value (broken samples)
        #[arg(long)]
        order_stat_value: Option<f64>,
        /// Original sample size (broken samples)
        #[arg(long)]
        sample_size: Option<u32>,
    },
    /// Run a seeded Monte Carlo bias/MSE experiment and write its CSV report
    Simulate {
        /// JSON experiment configuration (defaults to the standard grid)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the number of replications per cell
        #[arg(long)]
        reps: Option<u32>,
        /// Override the master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 means all available. Any count produces
        /// identical output.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Tabulate the dimensionless optimal quantity over (m, rho) and write CSV
    Sweep {
        /// Comma-separated loss degrees
        #[arg(long, default_value = "2,3,4,5,10,20,30,40,50,100")]
        m_list: String,
        #[arg(long, default_value_t = 0.05)]
        rho_min: f64,
        #[arg(long, default_value_t = 0.95)]
        rho_max: f64,
        /// Number of grid points from rho-min to rho-max inclusive
        #[arg(long, default_value_t = 19)]
        rho_steps: u32,
        /// Output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl From<sygen::Error> for CliError {
    fn from(e: sygen::Error) -> Self {
        match e {
            sygen::Error::InvalidParameter(_) | sygen::Error::Domain(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(help_or_version) => {
            let _ = help_or_version.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_model(dist: &DistArgs) -> Result<DemandModel, CliError> {
    match dist.dist.as_str() {
        "exp" => {
            let lambda = dist
                .lambda
                .ok_or_else(|| CliError::Usage("--dist exp requires --lambda".into()))?;
            Ok(DemandModel::exponential(lambda)?)
        }
        "unif" => {
            let b = dist
                .b
                .ok_or_else(|| CliError::Usage("--dist unif requires --b".into()))?;
            Ok(DemandModel::uniform(b)?)
        }
        other => Err(CliError::Usage(format!(
            "unknown distribution '{other}' (expected exp or unif)"
        ))),
    }
}

fn parse_cost(cost: &CostArgs) -> Result<CostParams, CliError> {
    Ok(CostParams::new(cost.cs, cost.ce, cost.m)?)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve { dist, cost } => {
            let model = parse_model(&dist)?;
            let p = parse_cost(&cost)?;
            let sol = solver::optimal_q(&model, &p)?;
            println!("q_star {}", sol.q_star);
            if let Some(u) = sol.u_star {
                println!("u_star {u}");
            }
            println!("expected_cost {}", sol.expected_cost_at_q);
            println!("residual {}", sol.residual);
            Ok(())
        }
        Command::ExpectedCost { dist, cost, q } => {
            let model = parse_model(&dist)?;
            let p = parse_cost(&cost)?;
            println!("expected_cost {}", cost::expected_cost(&model, q, &p)?);
            Ok(())
        }
        Command::Estimate {
            dist,
            cost,
            estimator,
            data,
            order_stat_rank,
            order_stat_value,
            sample_size,
        } => {
            let kind = EstimatorKind::from_str(&estimator)?;
            let p = parse_cost(&cost)?;
            match dist.dist.as_str() {
                "unif" if !kind.is_uniform() => {
                    return Err(CliError::Usage(format!(
                        "estimator '{kind}' applies to exponential demand"
                    )));
                }
                "exp" if kind.is_uniform() => {
                    return Err(CliError::Usage(format!(
                        "estimator '{kind}' applies to uniform demand"
                    )));
                }
                "unif" | "exp" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown distribution '{other}' (expected exp or unif)"
                    )));
                }
            }
            let sample = load_sample(
                kind,
                data.as_deref(),
                order_stat_rank,
                order_stat_value,
                sample_size,
            )?;
            let estimate = match kind {
                EstimatorKind::UnifMoment | EstimatorKind::UnifUmvue | EstimatorKind::UnifMle => {
                    estimators::estimate_uniform(&sample, &p, kind)?
                }
                EstimatorKind::ExpEeq1 => estimators::estimate_exp_eeq1(&sample, &p)?,
                EstimatorKind::ExpEeq2 => estimators::estimate_exp_eeq2(&sample, &p)?,
                EstimatorKind::ExpOs1 => estimators::estimate_exp_os1(&sample, &p)?,
                EstimatorKind::ExpOs2 => estimators::estimate_exp_os2(&sample, &p)?,
            };
            println!("estimator {kind}");
            println!("estimate {estimate}");
            Ok(())
        }
        Command::Simulate {
            config,
            reps,
            seed,
            out,
            threads,
        } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => SimulationConfig::standard(0),
            };
            if let Some(reps) = reps {
                cfg.reps = reps;
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            cfg.validate()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
            let report = pool.install(|| simulation::run_experiment(&cfg))?;
            std::fs::write(&out, report.to_csv())
                .map_err(|e| CliError::Failure(format!("writing {}: {e}", out.display())))?;
            for failure in &report.failures {
                eprintln!(
                    "cell failed: estimator={} m={} ratio={} n={}: {}",
                    failure.estimator, failure.m, failure.ratio, failure.n, failure.message
                );
            }
            if !report.failures.is_empty() {
                return Err(CliError::Failure(format!(
                    "{} of {} cells failed; partial report written to {}",
                    report.failures.len(),
                    cfg.row_count(),
                    out.display()
                )));
            }
            Ok(())
        }
        Command::Sweep {
            m_list,
            rho_min,
            rho_max,
            rho_steps,
            out,
        } => {
            let ms = parse_m_list(&m_list)?;
            if rho_steps == 0 || rho_min <= 0.0 || rho_max < rho_min {
                return Err(CliError::Usage(
                    "sweep needs rho-steps >= 1 and 0 < rho-min <= rho-max".into(),
                ));
            }
            let rhos: Vec<f64> = if rho_steps == 1 {
                vec![rho_min]
            } else {
                (0..rho_steps)
                    .map(|k| rho_min + (rho_max - rho_min) * k as f64 / (rho_steps - 1) as f64)
                    .collect()
            };
            let csv = simulation::sweep_to_csv(&simulation::sweep_qstar(&ms, &rhos));
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .map_err(|e| CliError::Failure(format!("writing {}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn parse_m_list(text: &str) -> Result<Vec<u32>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let m: u32 = part
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad loss degree '{part}' in --m-list")))?;
        out.push(m);
    }
    if out.is_empty() {
        return Err(CliError::Usage("--m-list must be nonempty".into()));
    }
    Ok(out)
}

fn load_sample(
    kind: EstimatorKind,
    data: Option<&Path>,
    rank: Option<u32>,
    value: Option<f64>,
    sample_size: Option<u32>,
) -> Result<SampleData, CliError> {
    if kind.needs_broken_sample() {
        let (rank, value, n) = match (rank, value, sample_size) {
            (Some(r), Some(v), Some(n)) => (r, v, n),
            _ => {
                return Err(CliError::Usage(format!(
                    "estimator '{kind}' needs --order-stat-rank, --order-stat-value and \
                     --sample-size"
                )))
            }
        };
        if data.is_some() {
            return Err(CliError::Usage(
                "--data cannot be combined with order-statistic flags".into(),
            ));
        }
        return Ok(SampleData::broken(rank, n, value)?);
    }
    let path =
        data.ok_or_else(|| CliError::Usage(format!("estimator '{kind}' needs --data <path>")))?;
    if rank.is_some() || value.is_some() || sample_size.is_some() {
        return Err(CliError::Usage(
            "order-statistic flags apply only to the broken-sample estimators".into(),
        ));
    }
    Ok(SampleData::full(read_demand_file(path)?)?)
}

/// Single-column CSV of positive decimals with an optional `demand` header.
/// Malformed rows are hard errors; silently skipping rows would corrupt
/// the estimate.
fn read_demand_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if idx == 0 && line == "demand" {
            continue;
        }
        if line.is_empty() {
            return Err(CliError::Usage(format!(
                "{}:{}: empty row",
                path.display(),
                idx + 1
            )));
        }
        let v: f64 = line.parse().map_err(|_| {
            CliError::Usage(format!(
                "{}:{}: not a decimal number: '{line}'",
                path.display(),
                idx + 1
            ))
        })?;
        values.push(v);
    }
    Ok(values)
}

/// JSON mirror of [`SimulationConfig`]; omitted fields fall back to the
/// standard grid's values.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    lambda: Option<f64>,
    m_list: Option<Vec<u32>>,
    ratio_list: Option<Vec<f64>>,
    n_list: Option<Vec<u32>>,
    reps: Option<u32>,
    master_seed: Option<u64>,
    estimators: Option<Vec<String>>,
    broken_rank: Option<u32>,
}

fn load_config(path: &Path) -> Result<SimulationConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = SimulationConfig::standard(0);
    if let Some(v) = file.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = file.m_list {
        cfg.m_list = v;
    }
    if let Some(v) = file.ratio_list {
        cfg.ratio_list = v;
    }
    if let Some(v) = file.n_list {
        cfg.n_list = v;
    }
    if let Some(v) = file.reps {
        cfg.reps = v;
    }
    if let Some(v) = file.master_seed {
        cfg.master_seed = v;
    }
    if let Some(names) = file.estimators {
        let mut kinds = Vec::with_capacity(names.len());
        for name in names {
            kinds.push(EstimatorKind::from_str(&name).map_err(|e| CliError::Usage(e.to_string()))?);
        }
        cfg.estimators = kinds;
    }
    if let Some(v) = file.broken_rank {
        cfg.broken_rank = v;
    }
    Ok(cfg)
}
