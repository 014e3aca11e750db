//! Power-utility investment in `S = S₀ + M + A` with zero interest rate.
//!
//! In market time the wealth of a strategy that invests a fraction `η` of
//! its wealth follows `dV = η V dX` with `dX = dW + θ̃ ds`. With
//! `η = θ̃ / p` this is the optimal strategy given the whole path of `Λ`;
//! read back in physical time (`ν̂ = ν̆∘Λ`) it only uses the past of `Λ` and
//! `M`, so it is admissible in the original filtration as well.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{compose_with_lambda, stochastic_exponential, MarketIntegrand, Strategy, StrategyKind};
use crate::paths::PathBundle;
use crate::timechange::TimeChangeSpec;

/// Rate `θ` of the drift `dA = θ dΛ`, evaluated causally on the physical grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Constant { value: f64 },
    /// `θ(t) = intercept + slope · t`
    TimeLinear { intercept: f64, slope: f64 },
    /// `θ(t) = level + amplitude · sin(frequency · t)`
    TimeSine { level: f64, amplitude: f64, frequency: f64 },
    /// `θ = level + gain · tanh(M_t)`, a bounded functional of the past of `M`.
    MFeedback { level: f64, gain: f64 },
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Constant { value: 0.0 }
    }
}

impl ThetaSpec {
    pub fn to_strategy(&self) -> Strategy {
        match *self {
            ThetaSpec::Constant { value } => Strategy::Constant(value),
            ThetaSpec::TimeLinear { intercept, slope } => Strategy::time_fn(move |t| intercept + slope * t),
            ThetaSpec::TimeSine {
                level,
                amplitude,
                frequency,
            } => Strategy::time_fn(move |t| level + amplitude * (frequency * t).sin()),
            ThetaSpec::MFeedback { level, gain } => Strategy::path_fn(move |h| level + gain * h.current_m().tanh()),
        }
    }

    /// The constant value, if `θ` is constant.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            ThetaSpec::Constant { value } => Some(value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarketScenario {
    /// Risk aversion `p` in `U(v) = v^{1−p} / (1−p)`.
    pub p: f64,
    /// Initial wealth.
    pub x: f64,
    /// Start time (physical), a grid point.
    pub t: f64,
    pub horizon: f64,
    pub market_horizon: f64,
    pub s0: f64,
    pub theta: ThetaSpec,
    pub time_change: TimeChangeSpec,
    pub n_physical: usize,
    pub n_market: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl MarketScenario {
    pub fn validate(&self) -> Result<()> {
        check_risk_aversion(self.p)?;
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(Error::InvalidScenario(format!("initial wealth x must be > 0, got {}", self.x)));
        }
        if !(self.horizon > 0.0 && self.market_horizon > 0.0) {
            return Err(Error::InvalidScenario("horizons must be positive".into()));
        }
        if !(self.t >= 0.0 && self.t < self.horizon) {
            return Err(Error::InvalidScenario(format!(
                "start time {} must lie in [0, {})",
                self.t, self.horizon
            )));
        }
        if self.n_physical == 0 || self.n_market == 0 || self.n_paths == 0 {
            return Err(Error::InvalidScenario("grid sizes and n_paths must be >= 1".into()));
        }
        self.time_change.validate()
    }

    pub fn with_x(&self, x: f64) -> Self {
        MarketScenario { x, ..self.clone() }
    }
}

pub fn check_risk_aversion(p: f64) -> Result<()> {
    if p == 0.0 || p == 1.0 {
        Err(Error::InvalidScenario("p must not be 0 or 1".into()))
    } else if !(p > 0.0 && p.is_finite()) {
        Err(Error::InvalidScenario(format!("p must be positive, got {p}")))
    } else {
        Ok(())
    }
}

/// Wealth on a grid window starting at `(start_time, x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WealthPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub start_time: f64,
    pub x: f64,
    pub strategy: StrategyKind,
}

impl WealthPath {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty wealth path")
    }
}

/// `π = θ̃ / p`.
pub fn optimal_pi(theta_tilde: &[f64], p: f64) -> Result<Vec<f64>> {
    check_risk_aversion(p)?;
    Ok(theta_tilde.iter().map(|&th| th / p).collect())
}

/// `U(v) = v^{1−p} / (1−p)`; `U(0) = −∞` for `p > 1`.
pub fn power_utility(v: f64, p: f64) -> Result<f64> {
    check_risk_aversion(p)?;
    if v < 0.0 || v.is_nan() {
        return Err(Error::Domain(format!("utility of negative wealth {v}")));
    }
    if v == 0.0 {
        return Ok(if p > 1.0 { f64::NEG_INFINITY } else { 0.0 });
    }
    Ok(v.powf(1.0 - p) / (1.0 - p))
}

/// Conditional maximal expected utility given the path of `Λ`:
/// `x^{1−p}/(1−p) · exp(Σ (1−p)/(2p) · θ̃² Δs)` over market indices `[ja, jb)`.
pub fn value_formula(theta_tilde: &[f64], market: &[f64], ja: usize, jb: usize, p: f64, x: f64) -> Result<f64> {
    check_risk_aversion(p)?;
    let coeff = (1.0 - p) / (2.0 * p);
    let integral = squared_rate_integral(theta_tilde, market, ja, jb);
    Ok(x.powf(1.0 - p) / (1.0 - p) * (coeff * integral).exp())
}

/// `x^{1−p}/(2p) · exp(Σ θ̃² Δs)`: an alternative closed form that does not
/// match the simulated optimum; kept to report the size of the mismatch.
pub fn value_formula_alt(theta_tilde: &[f64], market: &[f64], ja: usize, jb: usize, p: f64, x: f64) -> Result<f64> {
    check_risk_aversion(p)?;
    let integral = squared_rate_integral(theta_tilde, market, ja, jb);
    Ok(x.powf(1.0 - p) / (2.0 * p) * integral.exp())
}

/// `Σ θ̃_j² Δs_j` over market indices `[ja, jb)`.
pub fn squared_rate_integral(theta_tilde: &[f64], market: &[f64], ja: usize, jb: usize) -> f64 {
    (ja..jb).map(|j| theta_tilde[j] * theta_tilde[j] * (market[j + 1] - market[j])).sum()
}

/// `Σ θ_i² ΔΛ_i` over physical indices `[ia, ib)`.
pub fn squared_rate_integral_physical(bundle: &PathBundle, ia: usize, ib: usize) -> f64 {
    let lambda = &bundle.grids.lambda;
    (ia..ib)
        .map(|i| bundle.theta[i] * bundle.theta[i] * (lambda[i + 1] - lambda[i]))
        .sum()
}

/// Value formula on the window `[Λ_t, Λ_T]` of one bundle.
pub fn bundle_value_formula(scenario: &MarketScenario, bundle: &PathBundle) -> Result<f64> {
    let (ja, jb) = market_window(scenario, bundle)?;
    value_formula(&bundle.theta_market, &bundle.grids.market, ja, jb, scenario.p, scenario.x)
}

pub fn bundle_value_formula_alt(scenario: &MarketScenario, bundle: &PathBundle) -> Result<f64> {
    let (ja, jb) = market_window(scenario, bundle)?;
    value_formula_alt(&bundle.theta_market, &bundle.grids.market, ja, jb, scenario.p, scenario.x)
}

/// Market indices of `Λ_t` and `Λ_T`.
pub fn market_window(scenario: &MarketScenario, bundle: &PathBundle) -> Result<(usize, usize)> {
    let i = bundle.grids.physical_index(scenario.t)?;
    Ok((bundle.grids.image[i], bundle.grids.image[bundle.terminal_index()]))
}

/// Optimal strategy `ν̆ = x π 𝓔(∫π dX)` in market time over `[Λ_t, T̄]`
/// together with its wealth `V = x 𝓔(∫π dX)`. `ν̆` is zero before `Λ_t`.
///
/// `π` is constant across jump images but `𝓔` keeps moving with `W` there,
/// so the returned integrand is flagged `Λ`-adapted only when it really is
/// (no jumps, or `θ̃ = 0` across them).
pub fn breve_strategy(scenario: &MarketScenario, bundle: &PathBundle) -> Result<(MarketIntegrand, WealthPath)> {
    let pi = optimal_pi(&bundle.theta_market, scenario.p)?;
    let start = bundle.grids.physical_index(scenario.t)?;
    let ja = bundle.grids.image[start];
    let jb = bundle.grids.market.len() - 1;
    let drift: Vec<f64> = pi.iter().zip(&bundle.theta_market).map(|(p, th)| p * th).collect();
    let exp = stochastic_exponential(&drift, &pi, &bundle.w, &bundle.grids.market, ja, jb);
    let values: Vec<f64> = exp.iter().map(|e| scenario.x * e).collect();
    let mut nu = vec![0.0; bundle.grids.market.len()];
    for (k, v) in values.iter().enumerate() {
        nu[ja + k] = pi[ja + k] * v;
    }
    let wealth = WealthPath {
        times: bundle.grids.market[ja..].to_vec(),
        values,
        start_time: bundle.grids.market[ja],
        x: scenario.x,
        strategy: StrategyKind::ClosedFormOptimal,
    };
    let mut nu = MarketIntegrand::new(nu, true);
    nu.lambda_adapted = nu.lambda_adaptedness_violation(&bundle.grids).is_none();
    Ok((nu, wealth))
}

/// `ν̂ = ν̆∘Λ` on the physical grid (zero before the start time).
pub fn hat_strategy(scenario: &MarketScenario, bundle: &PathBundle) -> Result<Vec<f64>> {
    let (breve, _) = breve_strategy(scenario, bundle)?;
    Ok(compose_with_lambda(&breve, &bundle.grids))
}

/// `ν̂_u = (θ_u x / p) exp{Σ (θ/p) ΔM + Σ (2p−1)/(2p²) θ ΔA}` evaluated
/// directly on the physical grid from the start time.
pub fn hat_strategy_direct(scenario: &MarketScenario, bundle: &PathBundle) -> Result<Vec<f64>> {
    check_risk_aversion(scenario.p)?;
    let p = scenario.p;
    let start = bundle.grids.physical_index(scenario.t)?;
    let c = (2.0 * p - 1.0) / (2.0 * p * p);
    let mut out = vec![0.0; bundle.m.len()];
    let mut exponent = 0.0f64;
    for i in start..bundle.m.len() {
        let th = bundle.theta[i];
        out[i] = th * scenario.x / p * exponent.exp();
        if i + 1 < bundle.m.len() {
            exponent += th / p * (bundle.m[i + 1] - bundle.m[i]) + c * th * (bundle.a[i + 1] - bundle.a[i]);
        }
    }
    Ok(out)
}

/// `ν̂` as a strategy on this bundle's grid.
pub fn hat_as_strategy(scenario: &MarketScenario, bundle: &PathBundle) -> Result<Strategy> {
    Ok(Strategy::GridValues {
        values: hat_strategy(scenario, bundle)?,
        kind: StrategyKind::ClosedFormOptimal,
    })
}

/// `V = x + Σ ν ΔM + Σ ν ΔA` on the physical grid from `t`.
pub fn wealth(nu: &Strategy, bundle: &PathBundle, t: f64, x: f64) -> Result<WealthPath> {
    let start = bundle.grids.physical_index(t)?;
    let values = nu.values_on(bundle)?;
    let mut out = Vec::with_capacity(bundle.m.len() - start);
    let mut v = x;
    out.push(v);
    for i in start..bundle.m.len() - 1 {
        v += values[i] * (bundle.m[i + 1] - bundle.m[i]) + values[i] * (bundle.a[i + 1] - bundle.a[i]);
        out.push(v);
    }
    Ok(WealthPath {
        times: bundle.grids.physical[start..].to_vec(),
        values: out,
        start_time: t,
        x,
        strategy: nu.kind(),
    })
}

/// Wealth when a fraction `η_i` of current wealth is held over each step:
/// `V = x exp{Σ η ΔM + Σ (η ΔA − ½ η² ΔΛ)}`. Given `Λ` this is the exact
/// solution of `dV = η V dX` for step-constant `η` and `θ̃`, so it stays
/// strictly positive.
pub fn fraction_wealth(eta: &[f64], bundle: &PathBundle, t: f64, x: f64) -> Result<WealthPath> {
    let start = bundle.grids.physical_index(t)?;
    let lambda = &bundle.grids.lambda;
    let mut out = Vec::with_capacity(bundle.m.len() - start);
    let mut exponent = 0.0;
    out.push(x);
    for i in start..bundle.m.len() - 1 {
        let e = eta[i];
        exponent += e * (bundle.m[i + 1] - bundle.m[i]) + e * (bundle.a[i + 1] - bundle.a[i])
            - 0.5 * e * e * (lambda[i + 1] - lambda[i]);
        out.push(x * exponent.exp());
    }
    Ok(WealthPath {
        times: bundle.grids.physical[start..].to_vec(),
        values: out,
        start_time: t,
        x,
        strategy: StrategyKind::PathFunctional,
    })
}

/// Wealth of `ν̂` in physical time: the fraction form with `η = θ / p`.
pub fn hat_wealth(scenario: &MarketScenario, bundle: &PathBundle) -> Result<WealthPath> {
    check_risk_aversion(scenario.p)?;
    let eta: Vec<f64> = bundle.theta.iter().map(|th| th / scenario.p).collect();
    let mut w = fraction_wealth(&eta, bundle, scenario.t, scenario.x)?;
    w.strategy = StrategyKind::ClosedFormOptimal;
    Ok(w)
}

/// Writes `(t, nu_hat, V, U_of_V)` on the physical window.
pub fn write_strategy_csv<W: Write>(writer: W, nu_hat: &[f64], wealth: &WealthPath, p: f64) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    out.write_record(["t", "nu_hat", "V", "U_of_V"])?;
    let offset = nu_hat.len() - wealth.values.len();
    for (k, (t, v)) in wealth.times.iter().zip(&wealth.values).enumerate() {
        out.write_record([
            t.to_string(),
            nu_hat[offset + k].to_string(),
            v.to_string(),
            power_utility(*v, p)?.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::verify_backward;
    use crate::integrate::VerifyMode;
    use crate::paths::{build_grid_pair, sample_brownian};
    use crate::rng::{path_stream, Stream};
    use crate::timechange::{subordinator_from_jumps, TimeChangePath};

    fn scenario(p: f64, x: f64, theta: ThetaSpec) -> MarketScenario {
        MarketScenario {
            p,
            x,
            t: 0.0,
            horizon: 1.0,
            market_horizon: 4.0,
            s0: 1.0,
            theta,
            time_change: TimeChangeSpec::identity(),
            n_physical: 64,
            n_market: 64,
            n_paths: 1,
            seed: 1,
        }
    }

    fn bundle(lambda: TimeChangePath, theta: &ThetaSpec, seed: u64) -> PathBundle {
        let grids = build_grid_pair(&lambda, 64, 64).unwrap();
        let w = sample_brownian(&grids.market, &mut path_stream(seed, 0, Stream::Brownian));
        PathBundle::assemble(lambda, grids, w, &theta.to_strategy(), 1.0).unwrap()
    }

    fn jump_lambda() -> TimeChangePath {
        let mut knots = subordinator_from_jumps(1.0, &[(0.3, 0.71), (0.61, 0.43)], 1.0)
            .unwrap()
            .knots()
            .to_vec();
        knots.shrink_to_fit();
        TimeChangePath::from_knots(knots, 1.0, 4.0).unwrap()
    }

    #[test]
    fn pi_is_pointwise_ratio() {
        assert_eq!(optimal_pi(&[0.0, 0.0], 2.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(optimal_pi(&[0.2], 2.0).unwrap(), vec![0.1]);
        assert_eq!(optimal_pi(&[1.0, 2.0], 4.0).unwrap(), vec![0.25, 0.5]);
        assert!(matches!(optimal_pi(&[1.0], 1.0), Err(Error::InvalidScenario(_))));
        assert!(matches!(optimal_pi(&[1.0], 0.0), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn utility_values() {
        assert_eq!(power_utility(1.0, 2.0).unwrap(), -1.0);
        assert_eq!(power_utility(1.0, 0.5).unwrap(), 2.0);
        assert_eq!(power_utility(4.0, 2.0).unwrap(), -0.25);
        assert_eq!(power_utility(4.0, 0.5).unwrap(), 4.0);
        assert_eq!(power_utility(0.0, 3.0).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(power_utility(-1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(power_utility(1.0, 1.0), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn value_formula_values() {
        let market = [0.0, 0.5, 1.0];
        let zero = [0.0; 3];
        assert_eq!(value_formula(&zero, &market, 0, 2, 2.0, 3.0).unwrap(), power_utility(3.0, 2.0).unwrap());
        let one = [1.0; 3];
        let v = value_formula(&one, &market, 0, 2, 2.0, 1.0).unwrap();
        assert!((v + (-0.25f64).exp()).abs() < 1e-15);
        assert!((v - -0.7788007830714049).abs() < 1e-15);
        for p in [0.5, 2.0, 3.5] {
            let v1 = value_formula(&one, &market, 0, 2, p, 1.0).unwrap();
            let v2 = value_formula(&one, &market, 0, 2, p, 2.0).unwrap();
            assert!((v2 - 2f64.powf(1.0 - p) * v1).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rate_means_no_trading() {
        let sc = scenario(2.0, 1.5, ThetaSpec::default());
        let b = bundle(jump_lambda(), &sc.theta, 1);
        let (nu, v) = breve_strategy(&sc, &b).unwrap();
        assert!(nu.values.iter().all(|&x| x == 0.0));
        assert!(v.values.iter().all(|&x| x == 1.5));
        assert!(hat_strategy(&sc, &b).unwrap().iter().all(|&x| x == 0.0));
        assert!(hat_strategy_direct(&sc, &b).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn breve_wealth_closed_form_for_constant_rate() {
        let (c, p) = (0.6, 3.0);
        let sc = scenario(p, 2.0, ThetaSpec::Constant { value: c });
        let b = bundle(jump_lambda(), &sc.theta, 2);
        let (_, v) = breve_strategy(&sc, &b).unwrap();
        for (k, (&s, &value)) in v.times.iter().zip(&v.values).enumerate() {
            let expected = 2.0 * ((c * c / p) * s - (c * c / (2.0 * p * p)) * s + (c / p) * b.w[k]).exp();
            assert!((value - expected).abs() <= 1e-12 * expected, "s = {s}");
        }
    }

    #[test]
    fn breve_and_hat_are_linear_in_x() {
        let sc = scenario(2.0, 1.0, ThetaSpec::MFeedback { level: 0.4, gain: 0.3 });
        let b = bundle(jump_lambda(), &sc.theta, 3);
        let (nu1, v1) = breve_strategy(&sc, &b).unwrap();
        let (nu2, v2) = breve_strategy(&sc.with_x(2.0), &b).unwrap();
        for (a, b) in nu1.values.iter().zip(&nu2.values) {
            assert_eq!(2.0 * a, *b);
        }
        for (a, b) in v1.values.iter().zip(&v2.values) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn hat_equals_breve_for_identity_time_change() {
        let sc = scenario(2.0, 1.0, ThetaSpec::Constant { value: 0.8 });
        let b = bundle(TimeChangePath::identity(1.0), &sc.theta, 4);
        let (breve, _) = breve_strategy(&sc, &b).unwrap();
        let hat = hat_strategy(&sc, &b).unwrap();
        assert_eq!(&breve.values[..hat.len()], hat.as_slice());
    }

    #[test]
    fn direct_and_pullback_hat_agree_on_jump_path() {
        for theta in [
            ThetaSpec::Constant { value: 1.0 },
            ThetaSpec::TimeSine {
                level: 0.3,
                amplitude: 0.5,
                frequency: 4.0,
            },
            ThetaSpec::MFeedback { level: 0.2, gain: 0.5 },
        ] {
            let sc = scenario(2.5, 1.0, theta);
            let b = bundle(jump_lambda(), &sc.theta, 5);
            let direct = hat_strategy_direct(&sc, &b).unwrap();
            let pulled = hat_strategy(&sc, &b).unwrap();
            for (d, q) in direct.iter().zip(&pulled) {
                assert!((d - q).abs() <= 1e-10 * q.abs().max(1e-300), "{d} vs {q}");
            }
        }
    }

    #[test]
    fn breve_varies_inside_jump_images() {
        let sc = scenario(2.0, 1.0, ThetaSpec::MFeedback { level: 0.2, gain: 0.5 });
        let b = bundle(jump_lambda(), &sc.theta, 6);
        let (breve, _) = breve_strategy(&sc, &b).unwrap();
        assert!(!breve.lambda_adapted);
        let idle = scenario(2.0, 1.0, ThetaSpec::default());
        let still = bundle(jump_lambda(), &idle.theta, 6);
        assert!(breve_strategy(&idle, &still).unwrap().0.lambda_adapted);
        assert!(matches!(
            verify_backward(&b, &breve, 1.0, VerifyMode::Strict),
            Err(Error::Precondition(_))
        ));
        let r = verify_backward(&b, &breve, 1.0, VerifyMode::DemonstrateFailure).unwrap();
        assert!(r.abs_diff > 0.0);

        let smooth = bundle(TimeChangePath::identity(1.0), &sc.theta, 6);
        assert!(breve_strategy(&sc, &smooth).unwrap().0.lambda_adapted);
    }

    #[test]
    fn hat_wealth_matches_market_exponential() {
        let sc = scenario(2.0, 1.3, ThetaSpec::MFeedback { level: 0.5, gain: 0.4 });
        let b = bundle(jump_lambda(), &sc.theta, 7);
        let (_, market) = breve_strategy(&sc, &b).unwrap();
        let physical = hat_wealth(&sc, &b).unwrap();
        let ja = b.grids.image[0];
        for (i, v) in physical.values.iter().enumerate() {
            let m = market.values[b.grids.image[i] - ja];
            assert!((v - m).abs() <= 1e-10 * m);
            assert!(*v > 0.0);
        }
    }

    #[test]
    fn wealth_special_cases() {
        let sc = scenario(2.0, 1.0, ThetaSpec::Constant { value: 0.3 });
        let b = bundle(jump_lambda(), &sc.theta, 8);
        let zero = wealth(&Strategy::Constant(0.0), &b, 0.0, 2.0).unwrap();
        assert!(zero.values.iter().all(|&v| v == 2.0));
        let one = wealth(&Strategy::Constant(1.0), &b, 0.0, 2.0).unwrap();
        let t = b.terminal_index();
        assert!((one.terminal() - (2.0 + b.s[t] - b.s[0])).abs() < 1e-13);
    }

    #[test]
    fn lambda_identity_for_squared_rate() {
        let sc = scenario(2.0, 1.0, ThetaSpec::MFeedback { level: 0.5, gain: 0.4 });
        let b = bundle(jump_lambda(), &sc.theta, 9);
        let (ja, jb) = market_window(&sc, &b).unwrap();
        let market = squared_rate_integral(&b.theta_market, &b.grids.market, ja, jb);
        let physical = squared_rate_integral_physical(&b, 0, b.terminal_index());
        assert!((market - physical).abs() <= 1e-13 * physical);
    }

    #[test]
    fn scenario_validation() {
        let mut sc = scenario(1.0, 1.0, ThetaSpec::default());
        assert!(matches!(sc.validate(), Err(Error::InvalidScenario(_))));
        sc.p = 2.0;
        sc.x = 0.0;
        assert!(matches!(sc.validate(), Err(Error::InvalidScenario(_))));
        sc.x = 1.0;
        assert!(sc.validate().is_ok());
    }
}
