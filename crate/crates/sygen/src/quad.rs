//! Adaptive Simpson quadrature.
//!
//! Small and self-contained so the expected-cost oracle stays independent of
//! the closed forms it checks.

use crate::{Error, Result};

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
///
/// The error control is the usual Richardson comparison of one Simpson
/// panel against its two halves; `rel_tol` is translated into an absolute
/// budget from a first coarse estimate of the integral's magnitude.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!(
            "quadrature bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    // The absolute budget comes from a 32-panel composite magnitude
    // estimate: a 3-point estimate can miss a sharp interior peak entirely
    // and make the budget unattainably small. The floor keeps it positive
    // when the integral is genuinely zero.
    let panels = 32;
    let h = (b - a) / panels as f64;
    let mut magnitude = 0.0;
    let mut left_val = fa;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid_val = f(lo + 0.5 * h);
        let right_val = if k == panels - 1 { fb } else { f(lo + h) };
        magnitude += simpson(lo, lo + h, left_val, mid_val, right_val).abs();
        left_val = right_val;
    }
    let scale = magnitude.max(whole.abs()).max(1e-300);
    let tol = rel_tol * scale;
    let value = adaptive(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)?;
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "quadrature produced a non-finite value on [{a}, {b}]"
        )));
    }
    Ok(value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // The noise floor stops refinement once delta is below what f64
    // arithmetic on the panel values can resolve; without it a tolerance
    // budget smaller than local roundoff recurses to the depth limit
    // across the whole interval.
    let noise = 1e-13 * (left.abs() + right.abs() + whole.abs());
    if delta.abs() <= (15.0 * tol).max(noise) || (b - a) < 1e-15 * (a.abs() + b.abs() + 1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge on [{a}, {b}] (residual {delta:e})"
        )));
    }
    let l = adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}
