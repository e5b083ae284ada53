//! Estimators of the optimal order quantity from demand data.
//!
//! Three families:
//!
//! - Uniform demand, full sample: moment, UMVUE and MLE plug-ins with exact
//!   bias/variance formulas.
//! - Exponential demand, full sample: two estimating equations obtained by
//!   replacing `lambda` by the sample mean (`eeq1`) and additionally the
//!   survival function `exp(-q/lambda)` by its full-sample UMVUE
//!   `(1 - q/W)_+^(n-1)` (`eeq2`).
//! - Exponential demand, broken sample (one order statistic `X_(r)` with its
//!   rank and the original sample size): `os1` rescales the unbiased
//!   `lambda` estimate `X_(r) / a_r`; `os2` additionally replaces the
//!   survival function by an unbiased step-function estimator built from
//!   the rescaled order statistic `Z_r = (n - r + 1) X_(r)`.
//!
//! Estimation failures (an equation without an admissible root) are
//! reported as errors, never clamped; the simulation layer counts them.

use crate::cost::{self, CostParams};
use crate::demand::DemandModel;
use crate::solver;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Demand data available for estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleData {
    /// A full i.i.d. sample of demand values.
    Full(Vec<f64>),
    /// A single order statistic: its rank (1-based), the original sample
    /// size, and the observed value.
    Broken {
        rank: u32,
        sample_size: u32,
        value: f64,
    },
}

impl SampleData {
    /// Full sample; requires at least one strictly positive, finite value.
    pub fn full(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("full sample must be nonempty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::Domain(format!(
                "demand values must be positive and finite, got {bad}"
            )));
        }
        Ok(SampleData::Full(values))
    }

    /// Broken sample; requires `1 <= rank <= sample_size` and `value > 0`.
    pub fn broken(rank: u32, sample_size: u32, value: f64) -> Result<Self> {
        if rank == 0 || rank > sample_size {
            return Err(Error::Domain(format!(
                "order-statistic rank must satisfy 1 <= rank <= n, got rank={rank}, n={sample_size}"
            )));
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!(
                "order-statistic value must be positive, got {value}"
            )));
        }
        Ok(SampleData::Broken {
            rank,
            sample_size,
            value,
        })
    }
}

/// The seven estimator identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Uniform, moment plug-in `2 xbar / (1 + root_ratio)`.
    UnifMoment,
    /// Uniform, UMVUE `(n+1) X_(n) / (n (1 + root_ratio))`.
    UnifUmvue,
    /// Uniform, MLE `X_(n) / (1 + root_ratio)`.
    UnifMle,
    /// Exponential, first estimating equation (sample-mean plug-in).
    ExpEeq1,
    /// Exponential, second estimating equation (survival UMVUE plug-in).
    ExpEeq2,
    /// Exponential broken-sample, `lambda` plug-in.
    ExpOs1,
    /// Exponential broken-sample, `lambda` plus survival plug-in.
    ExpOs2,
}

impl EstimatorKind {
    /// Stable lowercase name, used in CSV output and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::UnifMoment => "moment",
            EstimatorKind::UnifUmvue => "umvue",
            EstimatorKind::UnifMle => "mle",
            EstimatorKind::ExpEeq1 => "eeq1",
            EstimatorKind::ExpEeq2 => "eeq2",
            EstimatorKind::ExpOs1 => "os1",
            EstimatorKind::ExpOs2 => "os2",
        }
    }

    /// True for the kinds that operate on broken samples.
    pub fn needs_broken_sample(&self) -> bool {
        matches!(self, EstimatorKind::ExpOs1 | EstimatorKind::ExpOs2)
    }

    /// True for the uniform-demand kinds.
    pub fn is_uniform(&self) -> bool {
        matches!(
            self,
            EstimatorKind::UnifMoment | EstimatorKind::UnifUmvue | EstimatorKind::UnifMle
        )
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "moment" => EstimatorKind::UnifMoment,
            "umvue" => EstimatorKind::UnifUmvue,
            "mle" => EstimatorKind::UnifMle,
            "eeq1" => EstimatorKind::ExpEeq1,
            "eeq2" => EstimatorKind::ExpEeq2,
            "os1" => EstimatorKind::ExpOs1,
            "os2" => EstimatorKind::ExpOs2,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown estimator '{other}' (expected moment|umvue|mle|eeq1|eeq2|os1|os2)"
                )))
            }
        })
    }
}

fn full_values(sample: &SampleData) -> Result<&[f64]> {
    match sample {
        SampleData::Full(values) => Ok(values),
        SampleData::Broken { .. } => Err(Error::Domain(
            "this estimator requires a full sample".into(),
        )),
    }
}

fn broken_parts(sample: &SampleData) -> Result<(u32, u32, f64)> {
    match *sample {
        SampleData::Broken {
            rank,
            sample_size,
            value,
        } => Ok((rank, sample_size, value)),
        SampleData::Full(_) => Err(Error::Domain(
            "this estimator requires a broken sample".into(),
        )),
    }
}

fn mean(values: &[f64]) -> f64 {
    let mut acc = cost::Kahan::default();
    for v in values {
        acc.add(*v);
    }
    acc.value() / values.len() as f64
}

fn sample_max(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::MIN, f64::max)
}

/// Binomial coefficient as f64.
fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k as u64 {
        acc = acc * (n as u64 - j) as f64 / (j + 1) as f64;
    }
    acc
}

// ---------------------------------------------------------------------------
// Uniform demand, full sample
// ---------------------------------------------------------------------------

/// Closed-form uniform-demand estimates.
///
/// Moment: `2 xbar / (1 + r)`; UMVUE: `(n+1) X_(n) / (n (1 + r))`;
/// MLE: `X_(n) / (1 + r)`, with `r = (c_e/c_s)^(1/m)`.
pub fn estimate_uniform(sample: &SampleData, p: &CostParams, kind: EstimatorKind) -> Result<f64> {
    let values = full_values(sample)?;
    let denom = 1.0 + p.root_ratio();
    let n = values.len() as f64;
    Ok(match kind {
        EstimatorKind::UnifMoment => 2.0 * mean(values) / denom,
        EstimatorKind::UnifUmvue => (n + 1.0) * sample_max(values) / (n * denom),
        EstimatorKind::UnifMle => sample_max(values) / denom,
        other => {
            return Err(Error::Domain(format!(
                "estimate_uniform expects a uniform estimator kind, got {other}"
            )))
        }
    })
}

/// Exact `(bias, mse)` of the uniform estimators at sample size `n`.
///
/// Moment and UMVUE are unbiased with variances `b^2 / (3 n (1+r)^2)` and
/// `b^2 / ((1+r)^2 n (n+2))`; the MLE has bias `-q*/(n+1)` and MSE
/// `2 q*^2 / ((n+1)(n+2))`.
pub fn uniform_estimator_moments(
    kind: EstimatorKind,
    b: f64,
    n: u32,
    p: &CostParams,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let nf = n as f64;
    let denom = 1.0 + p.root_ratio();
    let q_star = b / denom;
    Ok(match kind {
        EstimatorKind::UnifMoment => (0.0, b * b / (3.0 * nf * denom * denom)),
        EstimatorKind::UnifUmvue => (0.0, b * b / (denom * denom * nf * (nf + 2.0))),
        EstimatorKind::UnifMle => (
            -q_star / (nf + 1.0),
            q_star * q_star * 2.0 / ((nf + 1.0) * (nf + 2.0)),
        ),
        other => {
            return Err(Error::Domain(format!(
                "uniform_estimator_moments expects a uniform estimator kind, got {other}"
            )))
        }
    })
}

// ---------------------------------------------------------------------------
// Exponential demand, full sample
// ---------------------------------------------------------------------------

/// First estimating equation: `lambda` replaced by the sample mean. The
/// equation depends on `q` only through `q / xbar`, so the estimate is
/// exactly `xbar` times the dimensionless optimum.
pub fn estimate_exp_eeq1(sample: &SampleData, p: &CostParams) -> Result<f64> {
    let values = full_values(sample)?;
    let u_star = solver::solve_exponential_foc_dimensionless(p)?;
    Ok(mean(values) * u_star)
}

pub(crate) fn estimate_exp_eeq1_with_root(values: &[f64], u_star: f64) -> f64 {
    mean(values) * u_star
}

/// Full-sample UMVUE of the survival function `exp(-q/lambda)`:
/// `(1 - q/w)_+^(n-1)` with `w` the sample total.
pub fn t_srs(q: f64, w: f64, n: u32) -> f64 {
    debug_assert!(n >= 1);
    let d = (1.0 - q / w).max(0.0);
    cost::pow_int(d, n - 1)
}

/// Second estimating equation, in `t = q / w`:
///
/// ```text
/// sum_{j=0}^{m-1} (-1)^j C(n-1, m-1-j) t^(m-1-j) = gamma_m (1 - t)_+^(n-1)
/// ```
///
/// The left side is evaluated in the scaled variable `s = (n-1) t` with
/// coefficients `C(n-1,k)/(n-1)^k <= 1/k!`, which keeps every intermediate
/// bounded. Sign changes are scanned over `t` in `(0,1)` on 1000 uniform
/// panels (the right side has a kink at `t = 1`), then over the
/// polynomial-only region `t >= 1`, and refined by bisection to `1e-13`.
/// With several roots the one whose implied `q` gives the smallest expected
/// cost under `Exponential(xbar)` wins.
pub fn estimate_exp_eeq2(sample: &SampleData, p: &CostParams) -> Result<f64> {
    let values = full_values(sample)?;
    let n = values.len() as u32;
    if n < 2 {
        return Err(Error::Domain(
            "the second estimating equation needs a sample of size >= 2".into(),
        ));
    }
    let xbar = mean(values);
    let w = xbar * n as f64;
    let gamma = p.gamma();
    let m = p.degree();

    // scaled polynomial coefficients c_k = C(n-1, k) / (n-1)^k, k <= K
    let k_top = (m - 1).min(n - 1);
    let mut coeffs = Vec::with_capacity(k_top as usize + 1);
    let mut c = 1.0f64;
    for k in 0..=k_top {
        if k > 0 {
            c *= (n - k) as f64 / (k as f64 * (n - 1) as f64);
        }
        let sign = if (m - 1 - k).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        coeffs.push(sign * c);
    }
    let lhs = |t: f64| {
        let s = (n - 1) as f64 * t;
        let mut acc = 0.0;
        for &ck in coeffs.iter().rev() {
            acc = acc * s + ck;
        }
        acc
    };
    let diff = |t: f64| lhs(t) - gamma * t_srs(t, 1.0, n);

    let mut roots: Vec<f64> = Vec::new();

    // kinked region (0, 1)
    let panels = 1000;
    let mut prev_t = 0.0;
    let mut prev_d = diff(0.0);
    for k in 1..=panels {
        let t = k as f64 / panels as f64;
        let d = diff(t);
        if (prev_d < 0.0) != (d < 0.0) {
            roots.push(bisect(&diff, prev_t, t, 1e-13));
        }
        prev_t = t;
        prev_d = d;
    }

    // polynomial-only region t >= 1; the Fujiwara bound caps where roots
    // can still occur
    let lead = *coeffs.last().unwrap();
    let mut s_bound = 0.0f64;
    for (k, &ck) in coeffs.iter().enumerate().take(k_top as usize) {
        let pow = 1.0 / (k_top as usize - k) as f64;
        s_bound = s_bound.max((ck / lead).abs().powf(pow));
    }
    let t_bound = 2.0 * s_bound / (n - 1) as f64;
    if t_bound > 1.0 {
        let step = 10f64.powf(1.0 / 64.0);
        let mut t0 = 1.0;
        let mut d0 = lhs(1.0);
        while t0 < t_bound.min(1e6) {
            let t1 = t0 * step;
            let d1 = lhs(t1);
            if (d0 < 0.0) != (d1 < 0.0) {
                roots.push(bisect(&lhs, t0, t1, 1e-13 * t1));
            }
            t0 = t1;
            d0 = d1;
        }
    }

    if roots.is_empty() {
        return Err(Error::EstimationFailure(format!(
            "second estimating equation has no positive root (n={n}, m={m}, gamma={gamma})"
        )));
    }
    if roots.len() == 1 {
        return Ok(w * roots[0]);
    }
    let model = DemandModel::exponential(xbar)?;
    let mut best = roots[0];
    let mut best_cost = f64::INFINITY;
    for t in roots {
        let q = w * t;
        let cost = cost::expected_cost(&model, q, p)?;
        if cost < best_cost {
            best_cost = cost;
            best = t;
        }
    }
    Ok(w * best)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Exponential demand, broken sample
// ---------------------------------------------------------------------------

/// Unbiased estimate of `lambda` from the order statistic `X_(i)` of an
/// exponential sample of size `n`: `X_(i) / a_i` with
/// `a_i = sum_{j=1}^{i} 1/(n-j+1)`.
pub fn lambda_hat_order_stat(x_i: f64, i: u32, n: u32) -> Result<f64> {
    if i == 0 || i > n {
        return Err(Error::Domain(format!(
            "order-statistic rank must satisfy 1 <= i <= n, got i={i}, n={n}"
        )));
    }
    if !x_i.is_finite() || x_i <= 0.0 {
        return Err(Error::Domain(format!(
            "order-statistic value must be positive, got {x_i}"
        )));
    }
    let mut a = 0.0;
    for j in 1..=i {
        a += 1.0 / (n - j + 1) as f64;
    }
    Ok(x_i / a)
}

/// Unbiased step-function estimate of the survival function `exp(-q/lambda)`
/// from the order statistic `X_(i+1)` of an exponential sample of size `n`.
///
/// With `Z = (n-i) X_(i+1)` and `beta_t = (n-i+t)/(n-i)` for `t = 1..i`,
/// the estimate is `sum_s d_s I(Z > beta_1^s1 ... beta_i^si q)` over
/// exponent tuples `s`. The coefficients satisfy `d_0 = 1/C(n,i)` and
///
/// ```text
/// d_s = sum_t (-1)^(t+1) (C(i,t)/beta_t) d_(s - e_t)
/// ```
///
/// which is the unique choice making the estimator unbiased: grouping the
/// hypoexponential survival of `Z` by exponent tuple telescopes every
/// coefficient except the constant term. Expanding the recurrence gives
/// `d_s` as the product form `(-1)^(sum of even-indexed s_t) *
/// multinomial(s) * prod_t (C(i,t)/beta_t)^(s_t) / C(n,i)`; the sign rule is
/// checked against the Monte Carlo oracle `E[h] = exp(-q/lambda)` in the
/// tests.
///
/// Since every `beta_t > 1`, only finitely many indicators are active; the
/// enumeration prunes once the running product passes `Z/q`. The value is
/// unbiased but not range-respecting: it may leave `[0, 1]`.
pub fn fbar_hat_order_stat(x_next: f64, i: u32, n: u32, q: f64) -> Result<f64> {
    if i >= n {
        return Err(Error::Domain(format!(
            "survival estimator needs i <= n-1, got i={i}, n={n}"
        )));
    }
    if !x_next.is_finite() || x_next <= 0.0 {
        return Err(Error::Domain(format!(
            "order-statistic value must be positive, got {x_next}"
        )));
    }
    if !q.is_finite() || q <= 0.0 {
        return Err(Error::Domain(format!("q must be positive, got {q}")));
    }
    let z = (n - i) as f64 * x_next;
    match i {
        0 => Ok(if z > q { 1.0 } else { 0.0 }),
        1 => Ok(fbar_rank2(z, n, q)),
        _ => fbar_lattice(z, i, n, q),
    }
}

/// Rank-2 case in closed form: the coefficients are the geometric sequence
/// `beta^(-j)/n`, so the active terms sum to `1 - ((n-1)/n)^K` with `K` the
/// number of active indicators.
fn fbar_rank2(z: f64, n: u32, q: f64) -> f64 {
    if z <= q {
        return 0.0;
    }
    let beta = n as f64 / (n - 1) as f64;
    // K = #{j >= 0 : beta^j q < z}
    let mut j = ((z / q).ln() / beta.ln()).floor();
    if j < 0.0 {
        j = 0.0;
    }
    while beta.powi(j as i32) * q >= z && j > 0.0 {
        j -= 1.0;
    }
    while beta.powi(j as i32 + 1) * q < z {
        j += 1.0;
    }
    let k = j as i32 + 1;
    1.0 - ((n - 1) as f64 / n as f64).powi(k)
}

const LATTICE_CAP: usize = 2_000_000;

/// General-rank enumeration: level-by-level dynamic program over the
/// downward-closed exponent region `{s : prod beta_t^(s_t) < z/q}`.
fn fbar_lattice(z: f64, i: u32, n: u32, q: f64) -> Result<f64> {
    let dims = i as usize;
    let base = (n - i) as f64;
    let betas: Vec<f64> = (1..=i).map(|t| (n - i + t) as f64 / base).collect();
    let step: Vec<f64> = (1..=i)
        .map(|t| {
            let sign = if t % 2 == 1 { 1.0 } else { -1.0 };
            sign * binom(i, t) / betas[t as usize - 1]
        })
        .collect();

    let product = |s: &[u32]| -> f64 {
        let mut p = 1.0;
        for (t, &e) in s.iter().enumerate() {
            p *= betas[t].powi(e as i32);
        }
        p
    };

    if q >= z {
        return Ok(0.0);
    }
    let mut total = cost::Kahan::default();
    let mut level: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    level.insert(vec![0; dims], 1.0 / binom(n, i));
    total.add(1.0 / binom(n, i));
    let mut visited = 1usize;

    while !level.is_empty() {
        let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (s, d) in &level {
            for t in 0..dims {
                let mut s_next = s.clone();
                s_next[t] += 1;
                if product(&s_next) * q < z {
                    *next.entry(s_next).or_insert(0.0) += step[t] * d;
                }
            }
        }
        visited += next.len();
        if visited > LATTICE_CAP {
            return Err(Error::Numeric(format!(
                "survival-estimator enumeration exceeded {LATTICE_CAP} lattice points \
                 (i={i}, n={n}, z/q={})",
                z / q
            )));
        }
        for d in next.values() {
            total.add(*d);
        }
        level = next;
    }
    Ok(total.value())
}

/// Broken-sample estimate with the `lambda` plug-in alone: the equation has
/// the same scale structure as `eeq1`, so the estimate is `lambda_hat`
/// times the dimensionless optimum.
pub fn estimate_exp_os1(sample: &SampleData, p: &CostParams) -> Result<f64> {
    let (rank, n, value) = broken_parts(sample)?;
    let lam_hat = lambda_hat_order_stat(value, rank, n)?;
    let u_star = solver::solve_exponential_foc_dimensionless(p)?;
    Ok(lam_hat * u_star)
}

pub(crate) fn estimate_exp_os1_with_root(
    rank: u32,
    n: u32,
    value: f64,
    u_star: f64,
) -> Result<f64> {
    Ok(lambda_hat_order_stat(value, rank, n)? * u_star)
}

/// Broken-sample estimate with both plug-ins: solves
/// `psi(q / lambda_hat) = gamma_m h(q)` where `h` is the step function of
/// [`fbar_hat_order_stat`] in `q`.
///
/// The scan walks `q` upward on a geometric grid; inside the first
/// sign-changing cell it enumerates the indicator breakpoints (the points
/// where some `beta` product crosses `Z/q`), solves the smooth
/// series-equals-constant equation on each constancy interval in increasing
/// `q`, and returns the first crossing. A sign flip across a breakpoint
/// also counts: the step function frequently leaps over the series value
/// without an interior root (for size-`n` samples its steps are order
/// `1/n`), and the flip point is then the estimate. No crossing anywhere is
/// an estimation failure.
pub fn estimate_exp_os2(sample: &SampleData, p: &CostParams) -> Result<f64> {
    let (rank, n, value) = broken_parts(sample)?;
    let i = rank - 1;
    let lam_hat = lambda_hat_order_stat(value, rank, n)?;
    let z = (n - i) as f64 * value;
    let gamma = p.gamma();
    let m = p.degree();

    let gap = |q: f64| -> Result<f64> {
        Ok(cost::psi(q / lam_hat, m) - gamma * fbar_hat_order_stat(value, i, n, q)?)
    };

    let step = 10f64.powf(1.0 / 64.0);
    let floor = (lam_hat * 1e-8).max(lattice_floor(z, i, n));
    let mut q0 = floor;
    let mut g0 = gap(q0)?;
    if g0 >= 0.0 {
        return Err(Error::EstimationFailure(format!(
            "gap already nonnegative at the scan floor (rank={rank}, n={n}, m={m})"
        )));
    }
    let mut q_max = lam_hat * (m as f64).max(1.0);
    loop {
        while q0 < q_max {
            let q1 = (q0 * step).min(q_max);
            let g1 = gap(q1)?;
            if (g0 < 0.0) != (g1 < 0.0) {
                if let Some(root) =
                    first_crossing_in_cell(q0, q1, z, i, n, value, lam_hat, gamma, m)?
                {
                    return Ok(root);
                }
            }
            q0 = q1;
            g0 = g1;
        }
        if g0 > 0.0 {
            // positive and dominated by the series from here on
            return Err(Error::EstimationFailure(format!(
                "no interval crossing below q={q0:e} (rank={rank}, n={n}, m={m}, gamma={gamma})"
            )));
        }
        q_max *= 2.0;
        if q_max > lam_hat * 1e6 {
            return Err(Error::EstimationFailure(format!(
                "no sign change up to q={q_max:e} (rank={rank}, n={n}, m={m}, gamma={gamma})"
            )));
        }
    }
}

/// Breakpoints of the indicator step function inside `(lo, hi)`, ascending.
fn step_breakpoints(lo: f64, hi: f64, z: f64, i: u32, n: u32) -> Vec<f64> {
    let mut out = Vec::new();
    match i {
        0 => {
            if lo < z && z < hi {
                out.push(z);
            }
        }
        1 => {
            let beta = n as f64 / (n - 1) as f64;
            // products beta^j with z/hi < beta^j < z/lo
            let mut j = ((z / hi).ln() / beta.ln()).floor().max(0.0) as i32;
            while beta.powi(j) <= z / hi {
                j += 1;
            }
            while j > 0 && beta.powi(j - 1) > z / hi {
                j -= 1;
            }
            loop {
                let p = beta.powi(j);
                if p >= z / lo {
                    break;
                }
                if p > z / hi {
                    out.push(z / p);
                }
                j += 1;
            }
        }
        _ => {
            let base = (n - i) as f64;
            let betas: Vec<f64> = (1..=i).map(|t| (n - i + t) as f64 / base).collect();
            let mut exps = vec![0u32; i as usize];
            collect_products(&betas, &mut exps, 0, 1.0, z / hi, z / lo, &mut out);
            out = out.iter().map(|p| z / p).collect();
        }
    }
    out.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// Recursively enumerates `prod beta_t^(s_t)` in `(p_lo, p_hi)`.
fn collect_products(
    betas: &[f64],
    exps: &mut [u32],
    dim: usize,
    acc: f64,
    p_lo: f64,
    p_hi: f64,
    out: &mut Vec<f64>,
) {
    if dim == betas.len() {
        if acc > p_lo && acc < p_hi {
            out.push(acc);
        }
        return;
    }
    let mut p = acc;
    loop {
        collect_products(betas, exps, dim + 1, p, p_lo, p_hi, out);
        p *= betas[dim];
        exps[dim] += 1;
        if p >= p_hi {
            break;
        }
    }
    exps[dim] = 0;
}

/// Conditioning floor for the general-rank enumeration: the alternating
/// coefficients grow like `sigma^S` along the total degree `S`, with
/// `sigma = sum_t C(i,t)/beta_t`, and the slowest direction admits
/// `S ~ ln(z/q)/ln(beta_1)`. Below the returned `q` the compensated sum can
/// no longer resolve a value of order one.
fn lattice_floor(z: f64, i: u32, n: u32) -> f64 {
    if i < 2 {
        return 0.0;
    }
    let base = (n - i) as f64;
    let beta1 = (n - i + 1) as f64 / base;
    let sigma: f64 = (1..=i)
        .map(|t| binom(i, t) * base / (n - i + t) as f64)
        .sum();
    if sigma <= 1.0 {
        return 0.0;
    }
    let s_cond = 30.0 / sigma.ln();
    z * (-(s_cond * beta1.ln())).exp()
}

/// Finds the smallest crossing of the gap inside `(cell_lo, cell_hi)`,
/// walking its constancy intervals in increasing `q`: either an interior
/// root on one interval, or a breakpoint where the sign flips across the
/// jump.
#[allow(clippy::too_many_arguments)]
fn first_crossing_in_cell(
    cell_lo: f64,
    cell_hi: f64,
    z: f64,
    i: u32,
    n: u32,
    value: f64,
    lam_hat: f64,
    gamma: f64,
    m: u32,
) -> Result<Option<f64>> {
    let mut points = vec![cell_lo];
    points.extend(step_breakpoints(cell_lo, cell_hi, z, i, n));
    points.push(cell_hi);
    let mut prev_right: Option<f64> = None;
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let h = fbar_hat_order_stat(value, i, n, 0.5 * (a + b))?;
        let smooth = |q: f64| cost::psi(q / lam_hat, m) - gamma * h;
        let ga = smooth(a);
        let gb = smooth(b);
        if let Some(pg) = prev_right {
            // the step function jumped across zero at the shared breakpoint
            if pg < 0.0 && ga >= 0.0 {
                return Ok(Some(a));
            }
        }
        if ga == 0.0 {
            return Ok(Some(a));
        }
        if (ga < 0.0) != (gb < 0.0) || gb == 0.0 {
            return Ok(Some(bisect(&smooth, a, b, 1e-13 * b.max(1.0))));
        }
        prev_right = Some(gb);
    }
    Ok(None)
}
