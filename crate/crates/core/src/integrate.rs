//! Discrete Itô integrals against `M` and `W`, transport of integrands
//! across the time-change, and the change-of-variable checks.
//!
//! Integrand conventions: a physical-grid strategy is a list of values
//! `ν_i` held over `(t_i, t_{i+1}]`, so `ν_i` plays the role of the left
//! limit `ν(t_{i+1}−)`. A market integrand holds `ν̃_j` over `(s_j, s_{j+1}]`.
//! All sums are left-point (Itô) sums.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::{GridPair, PathBundle};

/// Causal view of a path at physical grid index `i`: `Λ` and `M` at
/// `t_0, …, t_i`. The value computed from it is held over `(t_i, t_{i+1}]`,
/// so `M` is only visible strictly before the holding period ends.
#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    index: usize,
    times: &'a [f64],
    lambda: &'a [f64],
    m: &'a [f64],
}

impl<'a> History<'a> {
    pub fn new(index: usize, times: &'a [f64], lambda: &'a [f64], m: &'a [f64]) -> Self {
        let end = index + 1;
        History {
            index,
            times: &times[..end],
            lambda: &lambda[..end],
            m: &m[..end],
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn time(&self) -> f64 {
        self.times[self.index]
    }

    pub fn times(&self) -> &'a [f64] {
        self.times
    }

    pub fn lambda(&self) -> &'a [f64] {
        self.lambda
    }

    pub fn m(&self) -> &'a [f64] {
        self.m
    }

    pub fn current_lambda(&self) -> f64 {
        self.lambda[self.index]
    }

    pub fn current_m(&self) -> f64 {
        self.m[self.index]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Constant,
    DeterministicTimeFunction,
    PathFunctional,
    ClosedFormOptimal,
}

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PathFn = Arc<dyn Fn(&History<'_>) -> f64 + Send + Sync>;

/// Amount invested as a causal functional of the observed past.
#[derive(Clone)]
pub enum Strategy {
    Constant(f64),
    TimeFunction(TimeFn),
    PathFunctional(PathFn),
    /// Precomputed values on one bundle's physical grid.
    GridValues { values: Vec<f64>, kind: StrategyKind },
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Constant(c) => write!(f, "Constant({c})"),
            Strategy::TimeFunction(_) => write!(f, "TimeFunction(..)"),
            Strategy::PathFunctional(_) => write!(f, "PathFunctional(..)"),
            Strategy::GridValues { values, kind } => {
                write!(f, "GridValues {{ len: {}, kind: {kind:?} }}", values.len())
            }
        }
    }
}

impl Strategy {
    pub fn time_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Strategy::TimeFunction(Arc::new(f))
    }

    pub fn path_fn(f: impl Fn(&History<'_>) -> f64 + Send + Sync + 'static) -> Self {
        Strategy::PathFunctional(Arc::new(f))
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Constant(_) => StrategyKind::Constant,
            Strategy::TimeFunction(_) => StrategyKind::DeterministicTimeFunction,
            Strategy::PathFunctional(_) => StrategyKind::PathFunctional,
            Strategy::GridValues { kind, .. } => *kind,
        }
    }

    /// Values `ν_i` for every physical grid point (the last one is never
    /// used by an integral but is kept for export).
    pub fn grid_values(&self, times: &[f64], lambda: &[f64], m: &[f64]) -> Result<Vec<f64>> {
        let n = times.len();
        let values = match self {
            Strategy::Constant(c) => vec![*c; n],
            Strategy::TimeFunction(f) => times.iter().map(|&t| f(t)).collect(),
            Strategy::PathFunctional(f) => (0..n).map(|i| f(&History::new(i, times, lambda, m))).collect(),
            Strategy::GridValues { values, .. } => {
                if values.len() != n {
                    return Err(Error::NotCausal(format!(
                        "{} precomputed values cannot be adapted to a grid of {n} points",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        Ok(values)
    }

    pub fn values_on(&self, bundle: &PathBundle) -> Result<Vec<f64>> {
        self.grid_values(&bundle.grids.physical, &bundle.grids.lambda, &bundle.m)
    }
}

/// Integrand on the market grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketIntegrand {
    /// `ν̃_j`, held over `(s_j, s_{j+1}]`; one value per market point.
    pub values: Vec<f64>,
    /// Asserts constancy across every jump image `[Λ(u−), Λ(u))`.
    pub lambda_adapted: bool,
}

impl MarketIntegrand {
    pub fn new(values: Vec<f64>, lambda_adapted: bool) -> Self {
        MarketIntegrand { values, lambda_adapted }
    }

    pub fn constant(value: f64, grids: &GridPair) -> Self {
        MarketIntegrand::new(vec![value; grids.market.len()], true)
    }

    /// First jump (physical index) across whose image the values change.
    pub fn lambda_adaptedness_violation(&self, grids: &GridPair) -> Option<usize> {
        grids.jump_indices().find(|&i| {
            let slice = &self.values[grids.pre_image[i]..grids.image[i]];
            slice.iter().any(|&v| v != slice[0])
        })
    }

    pub fn check_lambda_adapted(&self, grids: &GridPair) -> Result<()> {
        if !self.lambda_adapted {
            return Err(Error::Precondition("integrand is not declared Λ-adapted".into()));
        }
        if let Some(i) = self.lambda_adaptedness_violation(grids) {
            return Err(Error::Precondition(format!(
                "integrand varies across the jump image of t = {}",
                grids.physical[i]
            )));
        }
        Ok(())
    }
}

fn check_len(values: &[f64], expected: usize, what: &str) -> Result<()> {
    if values.len() == expected {
        Ok(())
    } else {
        Err(Error::Alignment(format!("{what}: {} values for {expected} grid points", values.len())))
    }
}

fn window_indices(grid_index: impl Fn(f64) -> Result<usize>, a: f64, b: f64) -> Result<(usize, usize)> {
    if b < a {
        return Err(Error::Domain(format!("window [{a}, {b}] is reversed")));
    }
    Ok((grid_index(a)?, grid_index(b)?))
}

/// Cumulative left-point sums `Σ_{k<i} v_k (x_{k+1} − x_k)` for `i` in `[a, b]`.
pub fn cumulative_sum(values: &[f64], integrator: &[f64], a: usize, b: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(b - a + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in a..b {
        acc += values[k] * (integrator[k + 1] - integrator[k]);
        out.push(acc);
    }
    out
}

fn sum_with_mass(values: &[f64], integrator: &[f64], a: usize, b: usize) -> (f64, f64) {
    let mut acc = 0.0;
    let mut mass = 0.0;
    for k in a..b {
        let term = values[k] * (integrator[k + 1] - integrator[k]);
        acc += term;
        mass += term.abs();
    }
    (acc, mass)
}

/// `∫ ν dM` on the physical window `[a, b]` (both grid points); the result
/// starts at 0 and has one entry per grid point of the window.
pub fn ito_integral_m(nu: &Strategy, bundle: &PathBundle, a: f64, b: f64) -> Result<Vec<f64>> {
    let (ia, ib) = window_indices(|t| bundle.grids.physical_index(t), a, b)?;
    let values = nu.values_on(bundle)?;
    Ok(cumulative_sum(&values, &bundle.m, ia, ib))
}

/// `∫ ν̃ dW` on the market window `[α, β]` (both grid points).
pub fn ito_integral_w(nu: &MarketIntegrand, bundle: &PathBundle, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check_len(&nu.values, bundle.grids.market.len(), "market integrand")?;
    let (ja, jb) = window_indices(|s| bundle.grids.market_index(s), alpha, beta)?;
    Ok(cumulative_sum(&nu.values, &bundle.w, ja, jb))
}

/// Spreads physical-step values over the market steps of each step's image.
pub fn pushforward_grid_values(values: &[f64], grids: &GridPair) -> Vec<f64> {
    let n = values.len() - 1;
    let end = grids.image[n];
    let mut out: Vec<f64> = grids.blocks().into_iter().map(|i| values[i]).collect();
    out.push(values[n]);
    for v in &mut out[end..] {
        *v = values[n];
    }
    out
}

/// `ν̃(s) = ν(Λ←(s)−)` on the market grid.
///
/// Grid strategies are constant on each step image `[Λ(t_i), Λ(t_{i+1}))`.
/// Deterministic time functions are composed with `Λ←` pointwise, using
/// `Λ←(Λ(t_i)) = t_i` and `Λ← ≡ t_{i+1}` across a jump at `t_{i+1}`.
pub fn pushforward(nu: &Strategy, bundle: &PathBundle) -> Result<MarketIntegrand> {
    let grids = &bundle.grids;
    let values = match nu {
        Strategy::Constant(c) => vec![*c; grids.market.len()],
        Strategy::TimeFunction(f) => {
            let mut out = Vec::with_capacity(grids.market.len());
            for (j, i) in grids.blocks().into_iter().enumerate() {
                let t = if j == grids.image[i] {
                    grids.physical[i]
                } else if j >= grids.pre_image[i + 1] {
                    grids.physical[i + 1]
                } else {
                    bundle
                        .lambda
                        .inverse_unchecked(grids.market[j])
                        .clamp(grids.physical[i], grids.physical[i + 1])
                };
                out.push(f(t));
            }
            out.push(f(*grids.physical.last().expect("non-empty grid")));
            out
        }
        _ => pushforward_grid_values(&nu.values_on(bundle)?, grids),
    };
    Ok(MarketIntegrand::new(values, true))
}

/// `ν(t_i) = ν̃(Λ(t_i))` on the physical grid; requires `Λ`-adaptedness.
pub fn pullback(nu: &MarketIntegrand, bundle: &PathBundle) -> Result<Vec<f64>> {
    check_len(&nu.values, bundle.grids.market.len(), "market integrand")?;
    nu.check_lambda_adapted(&bundle.grids)?;
    Ok(compose_with_lambda(nu, &bundle.grids))
}

/// `ν̃(Λ(t_i))` without the adaptedness check.
pub fn compose_with_lambda(nu: &MarketIntegrand, grids: &GridPair) -> Vec<f64> {
    grids.image.iter().map(|&j| nu.values[j]).collect()
}

/// `exp(Σ π ΔW + Σ (drift − ½π²) Δs)` over market indices `[ja, jb]`;
/// `drift_density` is `π θ̃`. Equals 1 at `ja`.
pub fn stochastic_exponential(
    drift_density: &[f64],
    diffusion: &[f64],
    w: &[f64],
    market: &[f64],
    ja: usize,
    jb: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(jb - ja + 1);
    let mut exponent = 0.0;
    out.push(1.0);
    for j in ja..jb {
        let ds = market[j + 1] - market[j];
        let pi = diffusion[j];
        exponent += pi * (w[j + 1] - w[j]) + (drift_density[j] - 0.5 * pi * pi) * ds;
        out.push(exponent.exp());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Identity {
    /// `∫_0^t ν(s−) dM_s = ∫_0^{Λ_t} ν(Λ←_s −) dW_s`
    #[serde(rename = "3.6")]
    Forward,
    /// `∫_0^{Λ_t} ν̃ dW = ∫_0^t ν̃∘Λ dM` for `Λ`-adapted `ν̃`
    #[serde(rename = "3.7")]
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    Strict,
    DemonstrateFailure,
}

/// One comparison of the two sides of a change-of-variable identity.
///
/// `rel_diff` is `abs_diff` divided by the larger absolute term mass
/// (`Σ |term|`) of the two sums, the natural scale of rounding error; it is 0
/// when both sums are empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub theorem: Identity,
    pub path_id: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub mode: VerifyMode,
}

impl VerificationRecord {
    fn new(theorem: Identity, t: f64, (lhs, lhs_mass): (f64, f64), (rhs, rhs_mass): (f64, f64), mode: VerifyMode) -> Self {
        let abs_diff = (lhs - rhs).abs();
        let scale = lhs_mass.max(rhs_mass);
        let rel_diff = if scale > 0.0 { abs_diff / scale } else { abs_diff };
        VerificationRecord {
            theorem,
            path_id: 0,
            t,
            lhs,
            rhs,
            abs_diff,
            rel_diff,
            mode,
        }
    }

    pub fn with_path_id(mut self, id: usize) -> Self {
        self.path_id = id;
        self
    }
}

/// Compares `∫_0^t ν dM` with `∫_0^{Λ_t} pushforward(ν) dW`.
pub fn verify_forward(bundle: &PathBundle, nu: &Strategy, t: f64) -> Result<VerificationRecord> {
    let i = bundle.grids.physical_index(t)?;
    let physical = nu.values_on(bundle)?;
    let market = pushforward(nu, bundle)?;
    let lhs = sum_with_mass(&physical, &bundle.m, 0, i);
    let rhs = sum_with_mass(&market.values, &bundle.w, 0, bundle.grids.image[i]);
    Ok(VerificationRecord::new(Identity::Forward, t, lhs, rhs, VerifyMode::Strict))
}

/// Compares `∫_0^{Λ_t} ν̃ dW` with `∫_0^t ν̃∘Λ dM`.
///
/// In [`VerifyMode::Strict`] a non-`Λ`-adapted integrand is rejected; in
/// [`VerifyMode::DemonstrateFailure`] the discrepancy is returned anyway.
pub fn verify_backward(
    bundle: &PathBundle,
    nu: &MarketIntegrand,
    t: f64,
    mode: VerifyMode,
) -> Result<VerificationRecord> {
    let i = bundle.grids.physical_index(t)?;
    check_len(&nu.values, bundle.grids.market.len(), "market integrand")?;
    let physical = match mode {
        VerifyMode::Strict => pullback(nu, bundle)?,
        VerifyMode::DemonstrateFailure => compose_with_lambda(nu, &bundle.grids),
    };
    let lhs = sum_with_mass(&nu.values, &bundle.w, 0, bundle.grids.image[i]);
    let rhs = sum_with_mass(&physical, &bundle.m, 0, i);
    Ok(VerificationRecord::new(Identity::Backward, t, lhs, rhs, mode))
}

/// Integrand equal to the pushforward of `base` except across jump images,
/// where it ramps with market time `s`; `Λ`-adapted only if `Λ` has no jumps.
pub fn jump_ramp_integrand(bundle: &PathBundle, base: &Strategy) -> Result<MarketIntegrand> {
    let mut nu = pushforward(base, bundle)?;
    let grids = &bundle.grids;
    for i in grids.jump_indices() {
        for j in grids.pre_image[i]..grids.image[i] {
            nu.values[j] = grids.market[j];
        }
    }
    nu.lambda_adapted = nu.lambda_adaptedness_violation(grids).is_none();
    Ok(nu)
}
