//! Browser demo bindings: thin wasm exports over the sygen crate.
//!
//! Everything here is pure computation returning JSON strings or flat
//! number arrays; the page in `www/` owns all DOM and canvas work. The
//! crate also compiles natively so the bindings stay under `cargo test`.

use std::str::FromStr;

use wasm_bindgen::prelude::*;

use sygen::cost::{self, CostParams};
use sygen::demand::DemandModel;
use sygen::estimators::EstimatorKind;
use sygen::simulation;
use sygen::solver;

fn model_from(dist: &str, scale: f64) -> Result<DemandModel, sygen::Error> {
    match dist {
        "exp" => DemandModel::exponential(scale),
        "unif" => DemandModel::uniform(scale),
        other => Err(sygen::Error::InvalidParameter(format!(
            "unknown distribution '{other}'"
        ))),
    }
}

fn err_json(e: impl std::fmt::Display) -> String {
    format!("{{\"error\":\"{}\"}}", e.to_string().replace('"', "'"))
}

/// Solves for the optimal order quantity. Returns JSON with `q_star`,
/// `u_star` (null for uniform demand), `expected_cost` and `residual`, or
/// an `error` field.
#[wasm_bindgen]
pub fn solve(dist: &str, scale: f64, cs: f64, ce: f64, m: u32) -> String {
    let result = (|| {
        let model = model_from(dist, scale)?;
        let p = CostParams::new(cs, ce, m)?;
        solver::optimal_q(&model, &p)
    })();
    match result {
        Ok(sol) => format!(
            "{{\"q_star\":{},\"u_star\":{},\"expected_cost\":{},\"residual\":{}}}",
            sol.q_star,
            sol.u_star.map_or("null".into(), |u| u.to_string()),
            sol.expected_cost_at_q,
            sol.residual
        ),
        Err(e) => err_json(e),
    }
}

/// Expected cost sampled on `points` order quantities from 0 to `q_max`,
/// flattened as `[q0, c0, q1, c1, ...]` for plotting. Empty on invalid
/// input.
#[wasm_bindgen]
pub fn cost_curve(
    dist: &str,
    scale: f64,
    cs: f64,
    ce: f64,
    m: u32,
    q_max: f64,
    points: u32,
) -> Vec<f64> {
    let Ok(model) = model_from(dist, scale) else {
        return Vec::new();
    };
    let Ok(p) = CostParams::new(cs, ce, m) else {
        return Vec::new();
    };
    if !q_max.is_finite() || q_max <= 0.0 || points < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(2 * points as usize);
    for k in 0..points {
        let q = q_max * k as f64 / (points - 1) as f64;
        match cost::expected_cost(&model, q, &p) {
            Ok(c) => {
                out.push(q);
                out.push(c);
            }
            Err(_) => return Vec::new(),
        }
    }
    out
}

/// Dimensionless optimal quantity over a cost-ratio grid for several loss
/// degrees. Returns JSON `{"m_values":[..],"rho":[..],"curves":[[..]]}`;
/// unsolvable points are `null`.
#[wasm_bindgen]
pub fn sweep_curves(m_list: &str, rho_min: f64, rho_max: f64, steps: u32) -> String {
    let mut ms = Vec::new();
    for part in m_list.split(',') {
        match part.trim().parse::<u32>() {
            Ok(v) if v >= 1 => ms.push(v),
            _ => return err_json(format!("bad loss degree '{part}'")),
        }
    }
    if ms.is_empty()
        || steps < 2
        || !rho_min.is_finite()
        || rho_min <= 0.0
        || !rho_max.is_finite()
        || rho_max <= rho_min
    {
        return err_json("need degrees, steps >= 2 and 0 < rho_min < rho_max");
    }
    let rhos: Vec<f64> = (0..steps)
        .map(|k| rho_min + (rho_max - rho_min) * k as f64 / (steps - 1) as f64)
        .collect();
    let points = simulation::sweep_qstar(&ms, &rhos);
    let mut curves = Vec::with_capacity(ms.len());
    for &m in &ms {
        let vals: Vec<String> = points
            .iter()
            .filter(|p| p.m == m)
            .map(|p| p.u_star.map_or("null".into(), |u| u.to_string()))
            .collect();
        curves.push(format!("[{}]", vals.join(",")));
    }
    format!(
        "{{\"m_values\":[{}],\"rho\":[{}],\"curves\":[{}]}}",
        ms.iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(","),
        rhos.iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(","),
        curves.join(",")
    )
}

/// One seeded Monte Carlo cell for an exponential-demand estimator:
/// `reps` samples of size `n` at unit mean demand. Returns JSON with
/// `bias`, `mse`, `q_star`, `reps_failed`, or an `error` field.
#[wasm_bindgen]
pub fn simulate_cell(estimator: &str, m: u32, rho: f64, n: u32, reps: u32, seed: u64) -> String {
    let result = (|| {
        let kind = EstimatorKind::from_str(estimator)?;
        let p = CostParams::new(rho, 1.0, m)?;
        let model = DemandModel::exponential(1.0)?;
        let cell_seed = simulation::cell_seed(seed, kind, m, rho, n);
        simulation::run_cell(&model, &p, n, reps, kind, cell_seed, 2)
    })();
    match result {
        Ok(row) => format!(
            "{{\"bias\":{},\"mse\":{},\"q_star\":{},\"reps_failed\":{}}}",
            json_num(row.bias),
            json_num(row.mse),
            row.q_star_true,
            row.reps_failed
        ),
        Err(e) => err_json(e),
    }
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "null".into()
    }
}
