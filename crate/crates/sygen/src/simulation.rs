//! Seeded Monte Carlo experiments over estimator/parameter grids.
//!
//! A configuration spans the Cartesian product of estimators, loss degrees,
//! cost ratios and sample sizes. Every cell derives its own seed from the
//! master seed by a fixed 64-bit mix, and every replication derives its
//! seed from the cell seed, so cells and replications can be computed in
//! any order (or in parallel) with bit-identical results.
//!
//! Failed replications (an estimating equation without a root) shrink the
//! averaging denominator and are counted; they are never resampled, since
//! resampling would bias the measured estimator behavior.

use rayon::prelude::*;

use crate::cost::{self, CostParams};
use crate::demand::DemandModel;
use crate::estimators::{self, EstimatorKind, SampleData};
use crate::solver;
use crate::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; the fixed mixing step behind all derived seeds.
/// Changing it would silently change every seeded experiment, so it is
/// part of the output contract.
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

fn fold(h: u64, v: u64) -> u64 {
    mix64(h.wrapping_mul(GOLDEN) ^ v)
}

fn estimator_tag(kind: EstimatorKind) -> u64 {
    match kind {
        EstimatorKind::UnifMoment => 0,
        EstimatorKind::UnifUmvue => 1,
        EstimatorKind::UnifMle => 2,
        EstimatorKind::ExpEeq1 => 3,
        EstimatorKind::ExpEeq2 => 4,
        EstimatorKind::ExpOs1 => 5,
        EstimatorKind::ExpOs2 => 6,
    }
}

/// Deterministic per-cell seed.
pub fn cell_seed(master_seed: u64, kind: EstimatorKind, m: u32, ratio: f64, n: u32) -> u64 {
    let mut h = mix64(master_seed);
    h = fold(h, estimator_tag(kind));
    h = fold(h, m as u64);
    h = fold(h, ratio.to_bits());
    h = fold(h, n as u64);
    h
}

/// Experiment grid and protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Exponential demand mean.
    pub lambda: f64,
    /// Loss degrees.
    pub m_list: Vec<u32>,
    /// Cost ratios `rho = c_s / c_e`.
    pub ratio_list: Vec<f64>,
    /// Sample sizes.
    pub n_list: Vec<u32>,
    /// Replications per cell.
    pub reps: u32,
    /// Master seed; everything else derives from it.
    pub master_seed: u64,
    /// Estimators to measure (exponential-demand kinds only).
    pub estimators: Vec<EstimatorKind>,
    /// Order-statistic rank used by the broken-sample estimators.
    pub broken_rank: u32,
}

impl SimulationConfig {
    /// The standard exponential grid: degrees 2..50, cost ratios 2, 1 and
    /// 0.5, sample sizes 10..10000, 1000 replications, all four
    /// exponential estimators with rank-2 broken samples.
    pub fn standard(master_seed: u64) -> Self {
        SimulationConfig {
            lambda: 1.0,
            m_list: vec![2, 3, 4, 5, 10, 20, 50],
            ratio_list: vec![2.0, 1.0, 0.5],
            n_list: vec![10, 50, 100, 500, 1000, 5000, 10000],
            reps: 1000,
            master_seed,
            estimators: vec![
                EstimatorKind::ExpEeq1,
                EstimatorKind::ExpEeq2,
                EstimatorKind::ExpOs1,
                EstimatorKind::ExpOs2,
            ],
            broken_rank: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.m_list.is_empty()
            || self.ratio_list.is_empty()
            || self.n_list.is_empty()
            || self.estimators.is_empty()
        {
            return Err(Error::InvalidParameter(
                "m_list, ratio_list, n_list and estimators must be nonempty".into(),
            ));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.m_list.contains(&0) {
            return Err(Error::InvalidParameter("loss degrees must be >= 1".into()));
        }
        if self.ratio_list.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidParameter(
                "cost ratios must be positive".into(),
            ));
        }
        if self.n_list.contains(&0) {
            return Err(Error::InvalidParameter("sample sizes must be >= 1".into()));
        }
        if let Some(kind) = self.estimators.iter().find(|k| k.is_uniform()) {
            return Err(Error::InvalidParameter(format!(
                "estimator '{kind}' needs uniform demand; the simulation grid is exponential \
                 (uniform estimators have exact analytic moments instead)"
            )));
        }
        if self.estimators.iter().any(|k| k.needs_broken_sample()) {
            let n_min = *self.n_list.iter().min().unwrap();
            if self.broken_rank == 0 || self.broken_rank > n_min {
                return Err(Error::InvalidParameter(format!(
                    "broken_rank must satisfy 1 <= rank <= min(n_list) = {n_min}, got {}",
                    self.broken_rank
                )));
            }
        }
        Ok(())
    }

    /// Number of report rows the grid produces.
    pub fn row_count(&self) -> usize {
        self.estimators.len() * self.m_list.len() * self.ratio_list.len() * self.n_list.len()
    }
}

/// One grid cell's measured bias and mean squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub estimator: EstimatorKind,
    pub m: u32,
    pub ratio: f64,
    pub n: u32,
    pub bias: f64,
    pub mse: f64,
    pub reps_attempted: u32,
    pub reps_failed: u32,
    pub q_star_true: f64,
    pub master_seed: u64,
}

/// A cell that could not run at all (for example, no solvable true optimum).
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub estimator: EstimatorKind,
    pub m: u32,
    pub ratio: f64,
    pub n: u32,
    pub message: String,
}

/// Full experiment output: rows in deterministic grid order plus any cells
/// that failed outright.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub rows: Vec<ReportRow>,
    pub failures: Vec<CellFailure>,
}

impl SimulationReport {
    /// CSV serialization: fixed header, LF line endings, round-trippable
    /// float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "estimator,m,ratio,n,bias,mse,reps_attempted,reps_failed,q_star_true,master_seed\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.estimator,
                r.m,
                r.ratio,
                r.n,
                r.bias,
                r.mse,
                r.reps_attempted,
                r.reps_failed,
                r.q_star_true,
                r.master_seed
            ));
        }
        out
    }

    /// Plain-text tables in the bias-row-over-MSE-row layout: one table per
    /// (estimator, ratio) pair, loss degrees down the side, sample sizes
    /// across.
    pub fn render_layout_tables(&self) -> String {
        let mut out = String::new();
        let mut groups: Vec<(EstimatorKind, f64)> = Vec::new();
        for r in &self.rows {
            if !groups.iter().any(|g| g.0 == r.estimator && g.1 == r.ratio) {
                groups.push((r.estimator, r.ratio));
            }
        }
        for (kind, ratio) in groups {
            let rows: Vec<&ReportRow> = self
                .rows
                .iter()
                .filter(|r| r.estimator == kind && r.ratio == ratio)
                .collect();
            let mut ns: Vec<u32> = Vec::new();
            let mut ms: Vec<u32> = Vec::new();
            for r in &rows {
                if !ns.contains(&r.n) {
                    ns.push(r.n);
                }
                if !ms.contains(&r.m) {
                    ms.push(r.m);
                }
            }
            out.push_str(&format!("estimator={kind} ratio={ratio} (bias over mse)\n"));
            out.push_str(&format!("{:>6}", "m"));
            for n in &ns {
                out.push_str(&format!("{:>12}", format!("n={n}")));
            }
            out.push('\n');
            for m in &ms {
                let mut bias_line = format!("{m:>6}");
                let mut mse_line = format!("{:>6}", "");
                for n in &ns {
                    if let Some(r) = rows.iter().find(|r| r.m == *m && r.n == *n) {
                        bias_line.push_str(&format!("{:>12.4}", r.bias));
                        mse_line.push_str(&format!("{:>12.4}", r.mse));
                    } else {
                        bias_line.push_str(&format!("{:>12}", "-"));
                        mse_line.push_str(&format!("{:>12}", "-"));
                    }
                }
                out.push_str(&bias_line);
                out.push('\n');
                out.push_str(&mse_line);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Runs one grid cell: `reps` replications of size-`n` sampling and
/// estimation, reduced to bias and MSE against the true optimum.
///
/// The returned row carries `cell_seed` in its seed column;
/// [`run_experiment`] relabels it with the master seed.
pub fn run_cell(
    model: &DemandModel,
    p: &CostParams,
    n: u32,
    reps: u32,
    kind: EstimatorKind,
    cell_seed: u64,
    broken_rank: u32,
) -> Result<ReportRow> {
    let lambda = match *model {
        DemandModel::Exponential { lambda } => lambda,
        DemandModel::Uniform { .. } => {
            return Err(Error::Domain(
                "simulation cells run on exponential demand; uniform estimators have \
                 exact analytic moments"
                    .into(),
            ))
        }
    };
    if kind.is_uniform() {
        return Err(Error::Domain(format!(
            "estimator '{kind}' is a uniform-demand estimator"
        )));
    }
    if n == 0 || reps == 0 {
        return Err(Error::Domain("n and reps must be at least 1".into()));
    }
    if kind.needs_broken_sample() && (broken_rank == 0 || broken_rank > n) {
        return Err(Error::Domain(format!(
            "broken_rank {broken_rank} out of range for n={n}"
        )));
    }

    let u_star = solver::solve_exponential_foc_dimensionless(p)?;
    let q_star = lambda * u_star;

    let mut deviations: Vec<f64> = Vec::with_capacity(reps as usize);
    let mut failed = 0u32;
    for r in 0..reps {
        let seed = fold(cell_seed, r as u64);
        let mut xs = model.sample(seed, n as usize)?;
        let estimate = match kind {
            EstimatorKind::ExpEeq1 => Ok(estimators::estimate_exp_eeq1_with_root(&xs, u_star)),
            EstimatorKind::ExpEeq2 => {
                estimators::estimate_exp_eeq2(&SampleData::Full(std::mem::take(&mut xs)), p)
            }
            EstimatorKind::ExpOs1 | EstimatorKind::ExpOs2 => {
                let idx = broken_rank as usize - 1;
                let (_, x_r, _) = xs.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap());
                let x_r = *x_r;
                if kind == EstimatorKind::ExpOs1 {
                    estimators::estimate_exp_os1_with_root(broken_rank, n, x_r, u_star)
                } else {
                    estimators::estimate_exp_os2(&SampleData::broken(broken_rank, n, x_r)?, p)
                }
            }
            _ => unreachable!("uniform kinds rejected above"),
        };
        match estimate {
            Ok(q_hat) => deviations.push(q_hat - q_star),
            Err(Error::EstimationFailure(_)) | Err(Error::NoRoot(_)) | Err(Error::Numeric(_)) => {
                failed += 1;
            }
            Err(hard) => return Err(hard),
        }
    }

    // Two passes: compensated mean, then compensated central moment;
    // mse = variance + bias^2 avoids the near-cancelling direct square sum.
    let (bias, mse) = if deviations.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let count = deviations.len() as f64;
        let mut acc = cost::Kahan::default();
        for d in &deviations {
            acc.add(*d);
        }
        let bias = acc.value() / count;
        let mut acc2 = cost::Kahan::default();
        for d in &deviations {
            let c = d - bias;
            acc2.add(c * c);
        }
        let variance = acc2.value() / count;
        (bias, variance + bias * bias)
    };

    Ok(ReportRow {
        estimator: kind,
        m: p.degree(),
        ratio: p.cost_ratio(),
        n,
        bias,
        mse,
        reps_attempted: reps,
        reps_failed: failed,
        q_star_true: q_star,
        master_seed: cell_seed,
    })
}

/// Runs the whole grid. Cells are independent and execute on the current
/// rayon pool; row order and content do not depend on the worker count.
/// Cells that fail outright are collected, not fatal.
pub fn run_experiment(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let model = DemandModel::exponential(cfg.lambda)?;

    struct Cell {
        kind: EstimatorKind,
        m: u32,
        ratio: f64,
        n: u32,
    }
    let mut cells = Vec::with_capacity(cfg.row_count());
    for &kind in &cfg.estimators {
        for &m in &cfg.m_list {
            for &ratio in &cfg.ratio_list {
                for &n in &cfg.n_list {
                    cells.push(Cell { kind, m, ratio, n });
                }
            }
        }
    }

    let outcomes: Vec<std::result::Result<ReportRow, CellFailure>> = cells
        .par_iter()
        .map(|cell| {
            let p = CostParams::new(cell.ratio, 1.0, cell.m).map_err(|e| CellFailure {
                estimator: cell.kind,
                m: cell.m,
                ratio: cell.ratio,
                n: cell.n,
                message: e.to_string(),
            })?;
            let seed = cell_seed(cfg.master_seed, cell.kind, cell.m, cell.ratio, cell.n);
            run_cell(
                &model,
                &p,
                cell.n,
                cfg.reps,
                cell.kind,
                seed,
                cfg.broken_rank,
            )
            .map(|mut row| {
                row.master_seed = cfg.master_seed;
                row
            })
            .map_err(|e| CellFailure {
                estimator: cell.kind,
                m: cell.m,
                ratio: cell.ratio,
                n: cell.n,
                message: e.to_string(),
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(fail) => failures.push(fail),
        }
    }
    Ok(SimulationReport { rows, failures })
}

/// One point of the optimal-quantity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m: u32,
    pub rho: f64,
    /// Dimensionless optimum; `None` records a solver failure.
    pub u_star: Option<f64>,
}

/// Dimensionless optimal order quantity over a (degree, cost-ratio) grid;
/// plot-ready data for the order-quantity-versus-ratio curves.
pub fn sweep_qstar(m_list: &[u32], ratio_grid: &[f64]) -> Vec<SweepPoint> {
    let mut out = Vec::with_capacity(m_list.len() * ratio_grid.len());
    for &m in m_list {
        for &rho in ratio_grid {
            let u_star = CostParams::new(rho, 1.0, m)
                .and_then(|p| solver::solve_exponential_foc_dimensionless(&p))
                .ok();
            out.push(SweepPoint { m, rho, u_star });
        }
    }
    out
}

/// CSV serialization of a sweep: header `m,rho,u_star`, failures as an
/// empty field.
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("m,rho,u_star\n");
    for p in points {
        match p.u_star {
            Some(u) => out.push_str(&format!("{},{},{}\n", p.m, p.rho, u)),
            None => out.push_str(&format!("{},{},\n", p.m, p.rho)),
        }
    }
    out
}
