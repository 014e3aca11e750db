//! Browser bindings. Every operation takes a TOML scenario and returns JSON
//! for the page in `www/` to plot. The plain `*_json` functions carry the
//! logic so they can be tested natively.

use serde::Serialize;
use tcbm::config::RunConfig;
use tcbm::harness::{optimality_scan, Ensemble};
use tcbm::portfolio::{
    bundle_value_formula, bundle_value_formula_alt, hat_as_strategy, hat_strategy, hat_wealth, power_utility, wealth,
};
use wasm_bindgen::prelude::*;

/// Upper bound on paths per scan.
pub const MAX_SCAN_PATHS: usize = 20_000;

const INVERSE_SAMPLES: usize = 400;

#[derive(Serialize)]
struct PathView {
    t: Vec<f64>,
    lambda: Vec<f64>,
    m: Vec<f64>,
    price: Vec<f64>,
    market_s: Vec<f64>,
    market_w: Vec<f64>,
    jump_times: Vec<f64>,
    inverse_s: Vec<f64>,
    inverse_t: Vec<f64>,
}

#[derive(Serialize)]
struct StrategyView {
    t: Vec<f64>,
    nu_hat: Vec<f64>,
    wealth: Vec<f64>,
    ito_sum_wealth: Vec<f64>,
    utility: f64,
    value_formula: f64,
    value_formula_alt: f64,
}

#[derive(Serialize)]
struct ScanView {
    family: String,
    n_paths: usize,
    baseline: f64,
    baseline_stderr: f64,
    epsilon: Vec<f64>,
    j_mean: Vec<f64>,
    j_stderr: Vec<f64>,
    pass: Vec<bool>,
}

fn ensemble(config: &str) -> Result<(RunConfig, Ensemble), String> {
    let config = RunConfig::parse(config).map_err(|e| e.to_string())?;
    let ens = Ensemble::new(&config.scenario())
        .map_err(|e| e.to_string())?
        .with_workers(1);
    Ok((config, ens))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// One joint path: `Λ`, `M`, the price, the market-time `W` and `Λ←`.
pub fn simulate_json(config: &str, path: u32) -> Result<String, String> {
    let (_, ens) = ensemble(config)?;
    let b = ens.bundle(path as usize).map_err(|e| e.to_string())?;
    let top = b.lambda.terminal();
    let inverse_s: Vec<f64> = (0..=INVERSE_SAMPLES)
        .map(|k| top * k as f64 / INVERSE_SAMPLES as f64)
        .collect();
    let inverse_t = inverse_s
        .iter()
        .map(|&s| b.lambda.generalized_inverse(s.min(b.lambda.market_horizon())))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    to_json(&PathView {
        t: b.grids.physical.clone(),
        lambda: b.grids.lambda.clone(),
        m: b.m.clone(),
        price: b.s.clone(),
        market_s: b.grids.market.clone(),
        market_w: b.w.clone(),
        jump_times: b.lambda.jumps().map(|k| k.t).collect(),
        inverse_s,
        inverse_t,
    })
}

/// `ν̂` and its wealth on one path, with the closed-form value for that `Λ`.
pub fn optimize_json(config: &str, path: u32) -> Result<String, String> {
    let (config, ens) = ensemble(config)?;
    let sc = config.scenario();
    let view = (|| -> tcbm::Result<StrategyView> {
        let b = ens.bundle(path as usize)?;
        let v = hat_wealth(&sc, &b)?;
        let start = b.grids.physical.len() - v.values.len();
        let ito = wealth(&hat_as_strategy(&sc, &b)?, &b, sc.t, sc.x)?;
        Ok(StrategyView {
            t: v.times.clone(),
            nu_hat: hat_strategy(&sc, &b)?[start..].to_vec(),
            utility: power_utility(v.terminal(), sc.p)?,
            wealth: v.values,
            ito_sum_wealth: ito.values,
            value_formula: bundle_value_formula(&sc, &b)?,
            value_formula_alt: bundle_value_formula_alt(&sc, &b)?,
        })
    })()
    .map_err(|e| e.to_string())?;
    to_json(&view)
}

/// Objective of `ν̂` against the configured perturbation family.
pub fn scan_json(config: &str, n_paths: u32) -> Result<String, String> {
    let (config, ens) = ensemble(config)?;
    let n = (n_paths as usize).clamp(1, MAX_SCAN_PATHS);
    let family = config.checks.family();
    let table = optimality_scan(&ens, &family, n, &config.checks.thresholds()).map_err(|e| e.to_string())?;
    to_json(&ScanView {
        family: serde_json::to_value(family.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        n_paths: n,
        baseline: table.baseline.mean,
        baseline_stderr: table.baseline.stderr,
        epsilon: table.rows.iter().map(|r| r.epsilon).collect(),
        j_mean: table.rows.iter().map(|r| r.j_mean).collect(),
        j_stderr: table.rows.iter().map(|r| r.j_stderr).collect(),
        pass: table.rows.iter().map(|r| r.pass).collect(),
    })
}

#[wasm_bindgen]
pub fn simulate(config: &str, path: u32) -> Result<String, JsValue> {
    simulate_json(config, path).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn optimize(config: &str, path: u32) -> Result<String, JsValue> {
    optimize_json(config, path).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn scan(config: &str, n_paths: u32) -> Result<String, JsValue> {
    scan_json(config, n_paths).map_err(|e| JsValue::from_str(&e))
}
