//! Cost model for power losses of a common degree.
//!
//! Ordering `q` against demand `x` costs `c_s (x - q)^m` on shortage and
//! `c_e (q - x)^m` on excess. This module provides the realized cost, the
//! expected cost under both demand laws (closed forms plus an independent
//! quadrature oracle), the alternating series `psi` that drives the
//! exponential first-order condition, and polynomial envelope bounds for the
//! FOC gap function.
//!
//! # Numerical notes
//!
//! `psi(u, m) = sum_{j=0}^{m-1} (-1)^j u^(m-1-j)/(m-1-j)!` is, up to sign,
//! a Taylor partial sum of `exp(-u)`: `psi = (-1)^(m-1) T_{m-1}(-u)`.
//! Summing it term by term loses roughly `e^u * epsilon` to cancellation,
//! which destroys the FOC gap `psi - gamma e^(-u)` near its root once
//! `u > ~20`. Everything here therefore evaluates through the remainder
//! series
//!
//! ```text
//! tail(u, m) = sum_{v>=0} (-1)^v u^(m+v)/(m+v)!
//!            = integral_0^u (u-t)^(m-1) e^(-t) dt / (m-1)!   (m >= 1)
//! ```
//!
//! whose terms decrease from the start whenever `u < m + 1`, so there is no
//! cancellation. The identities `psi = tail(u, m) + (-1)^(m-1) e^(-u)` and
//! `psi - gamma_m e^(-u) = tail(u, m) - rho e^(-u)` recover the series and
//! the FOC gap exactly. For `u >= m + 1` the tail is integrated numerically
//! (the integrand is positive), and a log-space variant supports the solver
//! where the plain value would under- or overflow.

use crate::quad;
use crate::{DemandModel, Error, Result};

/// Shortage/excess cost coefficients and the loss degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    c_s: f64,
    c_e: f64,
    m: u32,
}

impl CostParams {
    /// Requires `c_s > 0`, `c_e > 0` (finite) and `m >= 1`.
    pub fn new(c_s: f64, c_e: f64, m: u32) -> Result<Self> {
        if !c_s.is_finite() || c_s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shortage cost must be positive, got {c_s}"
            )));
        }
        if !c_e.is_finite() || c_e <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "excess cost must be positive, got {c_e}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("loss degree m must be >= 1".into()));
        }
        Ok(CostParams { c_s, c_e, m })
    }

    /// Per-unit shortage cost `c_s`.
    pub fn shortage_cost(&self) -> f64 {
        self.c_s
    }

    /// Per-unit excess cost `c_e`.
    pub fn excess_cost(&self) -> f64 {
        self.c_e
    }

    /// Loss degree `m`.
    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Cost ratio `rho = c_s / c_e`.
    pub fn cost_ratio(&self) -> f64 {
        self.c_s / self.c_e
    }

    /// Root ratio `(c_e / c_s)^(1/m)`, the quantity dividing the uniform
    /// closed form `q* = b / (1 + root_ratio)`.
    pub fn root_ratio(&self) -> f64 {
        ((self.c_e / self.c_s).ln() / self.m as f64).exp()
    }

    /// `gamma_m = rho - (-1)^m`, the right-hand multiplier of the
    /// exponential first-order condition. Always positive for odd `m`.
    pub fn gamma(&self) -> f64 {
        if self.m.is_multiple_of(2) {
            self.cost_ratio() - 1.0
        } else {
            self.cost_ratio() + 1.0
        }
    }
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// `x^e` for integer exponents.
pub(crate) fn pow_int(x: f64, e: u32) -> f64 {
    debug_assert!(e <= i32::MAX as u32);
    x.powi(e as i32)
}

/// `m!` as f64; infinite beyond 170.
pub(crate) fn factorial(m: u32) -> f64 {
    if m > 170 {
        return f64::INFINITY;
    }
    let mut acc = 1.0;
    for k in 2..=m as u64 {
        acc *= k as f64;
    }
    acc
}

/// `ln(m!)`, exact summation for small `m`, Stirling beyond.
pub(crate) fn ln_factorial(m: u32) -> f64 {
    if m <= 300 {
        let mut acc = 0.0;
        for k in 2..=m as u64 {
            acc += (k as f64).ln();
        }
        return acc;
    }
    let x = m as f64;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
}

/// `u^m / m!` by an interleaved product; exact order keeps intermediates
/// bounded by `~e^u` for `u < m + 1`.
fn pow_over_factorial(u: f64, m: u32) -> f64 {
    let mut acc = 1.0;
    for k in 1..=m as u64 {
        acc *= u / k as f64;
    }
    acc
}

/// The remainder series `sum_{v>=0} (-1)^v u^(m+v)/(m+v)!`, always in
/// `[0, infinity)`. See the module notes; this is the cancellation-free
/// carrier of `psi` and of the exponential FOC gap.
pub(crate) fn exp_series_tail(u: f64, m: u32) -> f64 {
    debug_assert!(m >= 1);
    if u <= 0.0 {
        return 0.0;
    }
    if u < m as f64 + 1.0 && u <= 700.0 {
        let t0 = pow_over_factorial(u, m);
        if t0 == 0.0 || !t0.is_finite() {
            return t0;
        }
        t0 * tail_ratio_sum(u, m)
    } else {
        ln_exp_series_tail(u, m).exp()
    }
}

/// `sum_{v>=0} (-1)^v prod_{j=1..v} u/(m+j)`, the tail series normalized by
/// its first term. Lies in `(0, 1]` for `u < m + 1`.
fn tail_ratio_sum(u: f64, m: u32) -> f64 {
    let mut acc = Kahan::default();
    let mut ratio = 1.0f64;
    let mut v = 0u64;
    loop {
        acc.add(if v.is_multiple_of(2) { ratio } else { -ratio });
        ratio *= u / (m as f64 + v as f64 + 1.0);
        v += 1;
        if ratio < 1e-19 {
            break;
        }
        assert!(v < 10_000_000, "tail series failed to converge");
    }
    acc.value()
}

/// `ln` of [`exp_series_tail`], usable where the plain value would
/// under- or overflow. Returns `-inf` for `u <= 0`.
pub(crate) fn ln_exp_series_tail(u: f64, m: u32) -> f64 {
    debug_assert!(m >= 1);
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mf = m as f64;
    if u < mf + 1.0 {
        mf * u.ln() - ln_factorial(m) + tail_ratio_sum(u, m).ln()
    } else {
        // tail = u^(m-1)/(m-1)! * integral_0^u (1 - t/u)^(m-1) e^(-t) dt,
        // integrand in (0, 1], truncated where e^(-t) is below 1e-320.
        let hi = u.min(740.0);
        let e = mf - 1.0;
        let integrand = |t: f64| {
            if t >= u {
                0.0
            } else if e == 0.0 {
                (-t).exp()
            } else {
                (e * (-t / u).ln_1p() - t).exp()
            }
        };
        let scaled = quad::integrate(integrand, 0.0, hi, 1e-12)
            .expect("tail quadrature on a smooth positive integrand");
        e * u.ln() - ln_factorial(m - 1) + scaled.ln()
    }
}

/// The alternating series `sum_{j=0}^{m-1} (-1)^j u^(m-1-j)/(m-1-j)!`
/// appearing in the exponential first-order condition.
///
/// `psi(u, 1) = 1` for all `u`; `psi(u, 2) = u - 1`. Evaluated through the
/// remainder series, which matches the finite sum exactly in value but does
/// not suffer its cancellation.
pub fn psi(u: f64, m: u32) -> f64 {
    assert!(m >= 1, "psi requires m >= 1");
    assert!(u >= 0.0 && u.is_finite(), "psi requires finite u >= 0");
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    exp_series_tail(u, m) + sign * (-u).exp()
}

/// The truncated alternating sum `S_{m-k} = sum_{j=0}^{m-k} (-1)^j
/// u^(m-1-j)/(m-1-j)!` for `1 <= k <= m`.
///
/// `k = 1` recovers the full series, i.e. `truncated_sum(u, m, 1) = psi(u, m)`
/// up to roundoff.
pub fn truncated_sum(u: f64, m: u32, k: u32) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!(
            "truncated sum requires 1 <= k <= m, got k={k}, m={m}"
        )));
    }
    assert!(
        u >= 0.0 && u.is_finite(),
        "truncated_sum requires finite u >= 0"
    );
    // Ascending powers u^e/e! for e = k-1 .. m-1; j = m-1-e gives the sign.
    let mut acc = Kahan::default();
    let mut p = pow_over_factorial(u, k - 1);
    for e in (k - 1)..=(m - 1) {
        let j = m - 1 - e;
        acc.add(if j.is_multiple_of(2) { p } else { -p });
        if e < m - 1 {
            p *= u / (e as f64 + 1.0);
        }
    }
    Ok(acc.value())
}

/// The FOC gap `psi(u, m) - gamma_m e^(-u)` in cancellation-free form
/// `tail(u, m) - rho e^(-u)`.
///
/// Negative at `u = 0` (where it equals `-rho`), tends to `+infinity`, and
/// vanishes exactly at the dimensionless optimal order quantity.
pub fn exp_foc_gap(u: f64, p: &CostParams) -> f64 {
    assert!(
        u >= 0.0 && u.is_finite(),
        "exp_foc_gap requires finite u >= 0"
    );
    exp_series_tail(u, p.m) - p.cost_ratio() * (-u).exp()
}

/// Polynomial envelope for the FOC gap, valid for `m >= 4` and
/// `gamma_m > 0`:
///
/// ```text
/// -(1 + gamma)(u^2/2 - u + 1) + S_{m-4}  <=  gap(u)  <=  (1 + gamma)(u - 1) + S_{m-3}
/// ```
///
/// Outside those hypotheses the inequality direction is not guaranteed and
/// an error is returned.
pub fn foc_gap_bounds(u: f64, p: &CostParams) -> Result<(f64, f64)> {
    if p.m < 4 {
        return Err(Error::HypothesisViolation(format!(
            "gap bounds require m >= 4, got m={}",
            p.m
        )));
    }
    let gamma = p.gamma();
    if gamma <= 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "gap bounds require gamma_m > 0, got gamma={gamma}"
        )));
    }
    let lower = -(1.0 + gamma) * (u * u / 2.0 - u + 1.0) + truncated_sum(u, p.m, 4)?;
    let upper = (1.0 + gamma) * (u - 1.0) + truncated_sum(u, p.m, 3)?;
    Ok((lower, upper))
}

/// Piecewise power cost of holding `q` against realized demand `x`.
pub fn realized_cost(x: f64, q: f64, p: &CostParams) -> Result<f64> {
    if !x.is_finite() || x < 0.0 || !q.is_finite() || q < 0.0 {
        return Err(Error::Domain(format!(
            "realized cost requires x >= 0 and q >= 0, got x={x}, q={q}"
        )));
    }
    Ok(if x > q {
        p.c_s * pow_int(x - q, p.m)
    } else {
        p.c_e * pow_int(q - x, p.m)
    })
}

/// Expected cost of ordering `q`, by closed form.
///
/// Uniform demand on `(0, b)`, `q <= b`:
/// `[c_e q^(m+1) + c_s (b-q)^(m+1)] / (b (m+1))`; for `q > b` the shortage
/// term vanishes and the excess integral runs over the whole support.
///
/// Exponential demand with mean `lambda`, `u = q/lambda`:
/// `m! lambda^m [c_e tail(u, m+1) + c_s e^(-u)]`, which is the
/// integration-by-parts reduction of both branch integrals. At `q = 0` this
/// is `c_s lambda^m m!`, the m-th raw moment times the shortage cost.
pub fn expected_cost(model: &DemandModel, q: f64, p: &CostParams) -> Result<f64> {
    if !q.is_finite() || q < 0.0 {
        return Err(Error::Domain(format!(
            "expected cost requires q >= 0, got q={q}"
        )));
    }
    Ok(match *model {
        DemandModel::Uniform { b } => {
            let denom = b * (p.m as f64 + 1.0);
            if q <= b {
                (p.c_e * pow_int(q, p.m + 1) + p.c_s * pow_int(b - q, p.m + 1)) / denom
            } else {
                p.c_e * (pow_int(q, p.m + 1) - pow_int(q - b, p.m + 1)) / denom
            }
        }
        DemandModel::Exponential { lambda } => {
            let u = q / lambda;
            factorial(p.m)
                * pow_int(lambda, p.m)
                * (p.c_e * exp_series_tail(u, p.m + 1) + p.c_s * (-u).exp())
        }
    })
}

/// Expected cost of ordering `q` per unit of `lambda^m m!`, for exponential
/// demand in the dimensionless variable `u = q/lambda`. Used to compare
/// stationary points without the overflow-prone scale factor.
pub(crate) fn exp_cost_dimensionless(u: f64, p: &CostParams) -> f64 {
    p.c_e * exp_series_tail(u, p.m + 1) + p.c_s * (-u).exp()
}

/// Expected cost by adaptive quadrature of the two branch integrals.
///
/// Independent oracle for [`expected_cost`]: it sees only the density and
/// the integrand, never the closed forms. The exponential shortage integral
/// is truncated where the remaining tail contributes less than `1e-13` of
/// the branch total.
pub fn expected_cost_quadrature(model: &DemandModel, q: f64, p: &CostParams) -> Result<f64> {
    if !q.is_finite() || q < 0.0 {
        return Err(Error::Domain(format!(
            "expected cost requires q >= 0, got q={q}"
        )));
    }
    let m = p.m;
    let excess = |x: f64| p.c_e * pow_int(q - x, m) * model.pdf(x);
    let shortage = |x: f64| p.c_s * pow_int(x - q, m) * model.pdf(x);
    let (hi_excess, hi_shortage) = match *model {
        DemandModel::Uniform { b } => (q.min(b), b),
        DemandModel::Exponential { lambda } => (q, q + lambda * shortage_cutoff(q / lambda, m)),
    };
    let mut total = quad::integrate(excess, 0.0, hi_excess, 1e-10)?;
    if q < hi_shortage {
        total += quad::integrate(shortage, q, hi_shortage, 1e-10)?;
    }
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "expected-cost quadrature overflowed at q={q}, m={m}"
        )));
    }
    Ok(total)
}

/// Dimensionless upper limit `s` such that `integral_s^inf t^m e^-t dt` is
/// below `1e-13` of the exponential shortage branch `m! e^-u`.
fn shortage_cutoff(u: f64, m: u32) -> f64 {
    let mf = m as f64;
    let budget = (1e-13f64).ln() + ln_factorial(m) - u;
    let mut s = 2.0 * (mf + 1.0) + 50.0;
    while 2.0f64.ln() + mf * s.ln() - s > budget && s < 1e7 {
        s *= 1.25;
    }
    s
}

/// Residual of the first-order condition, `LHS - RHS` of the stationarity
/// equation; zero at an optimal order quantity, negative where ordering
/// more reduces the expected cost.
///
/// Uniform demand: `[c_e q^m - c_s (b-q)^m] / (m b)` (shortage power
/// truncated at the support edge). Exponential demand: the FOC gap at
/// `u = q/lambda`, which carries the same sign as `LHS - RHS`.
pub fn foc_residual(model: &DemandModel, q: f64, p: &CostParams) -> f64 {
    assert!(
        q >= 0.0 && q.is_finite(),
        "foc_residual requires finite q >= 0"
    );
    match *model {
        DemandModel::Uniform { b } => {
            let denom = p.m as f64 * b;
            let lhs = p.c_e * (pow_int(q, p.m) - pow_int((q - b).max(0.0), p.m)) / denom;
            let rhs = p.c_s * pow_int((b - q).max(0.0), p.m) / denom;
            lhs - rhs
        }
        DemandModel::Exponential { lambda } => exp_foc_gap(q / lambda, p),
    }
}
