use tcbm::harness::{conditional_value_check, estimate_objective, Ensemble, Policy, Thresholds};
use tcbm::integrate::Strategy;
use tcbm::paths::{build_grid_pair, sample_brownian, PathBundle};
use tcbm::portfolio::{breve_strategy, power_utility, wealth, MarketScenario, ThetaSpec};
use tcbm::rng::{path_stream, Stream};
use tcbm::timechange::{build_deterministic, TimeChangeSpec};

fn scenario(p: f64, theta: f64, time_change: TimeChangeSpec, horizon: f64, market_horizon: f64) -> MarketScenario {
    MarketScenario {
        p,
        x: 1.0,
        t: 0.0,
        horizon,
        market_horizon,
        s0: 1.0,
        theta: ThetaSpec::Constant { value: theta },
        time_change,
        n_physical: 16,
        n_market: 16,
        n_paths: 1,
        seed: 314,
    }
}

fn jump_at_one() -> TimeChangeSpec {
    TimeChangeSpec::DeterministicPiecewise {
        breaks: vec![1.0],
        slopes: vec![1.0, 1.0],
        jump_times: vec![1.0],
        jump_sizes: vec![1.0],
    }
}

#[test]
fn constant_rate_wealth_matches_closed_form() {
    let lambda = build_deterministic(&[1.0], &[1.0, 1.0], &[(1.0, 1.0)], 2.0, 3.0).unwrap();
    let grids = build_grid_pair(&lambda, 8, 24).unwrap();
    let w = sample_brownian(&grids.market, &mut path_stream(2, 0, Stream::Brownian));
    let (c, p, x) = (0.7, 3.0, 1.5);
    let b = PathBundle::assemble(lambda, grids, w, &Strategy::Constant(c), 1.0).unwrap();
    let sc = MarketScenario {
        x,
        ..scenario(p, c, jump_at_one(), 2.0, 3.0)
    };
    let (_, v) = breve_strategy(&sc, &b).unwrap();
    for (s, val) in v.times.iter().zip(&v.values) {
        let ws = b.w[b.grids.market_index(*s).unwrap()];
        let closed = x * ((c * c / p) * s - (c * c / (2.0 * p * p)) * s + (c / p) * ws).exp();
        assert!((val - closed).abs() <= 1e-12 * closed, "{val} vs {closed}");
    }
}

#[test]
fn unit_amount_wealth_telescopes() {
    let lambda = build_deterministic(&[], &[2.0], &[(0.5, 0.3)], 1.0, 3.0).unwrap();
    let grids = build_grid_pair(&lambda, 8, 8).unwrap();
    let w = sample_brownian(&grids.market, &mut path_stream(6, 0, Stream::Brownian));
    let b = PathBundle::assemble(lambda, grids, w, &Strategy::Constant(0.4), 1.0).unwrap();
    let v = wealth(&Strategy::Constant(1.0), &b, 0.25, 2.0).unwrap();
    let start = b.grids.physical_index(0.25).unwrap();
    let expected = 2.0 + b.s.last().unwrap() - b.s[start];
    assert!((v.terminal() - expected).abs() < 1e-13);
}

#[test]
fn jump_at_one_conditional_value() {
    let sc = MarketScenario {
        n_physical: 32,
        n_market: 32,
        ..scenario(2.0, 1.0, jump_at_one(), 2.0, 3.0)
    };
    let ens = Ensemble::new(&sc).unwrap();
    let report = conditional_value_check(&ens, 100_000, &Thresholds::default()).unwrap();
    assert!((report.extras["value_formula"] + (-0.75f64).exp()).abs() < 1e-12);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn low_risk_aversion_conditional_value() {
    let sc = scenario(0.5, 0.5, TimeChangeSpec::identity(), 1.0, 1.0);
    let ens = Ensemble::new(&sc).unwrap();
    let report = conditional_value_check(&ens, 100_000, &Thresholds::default()).unwrap();
    assert!((report.extras["value_formula"] - 2.0 * 0.125f64.exp()).abs() < 1e-12);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn zero_strategy_objective_is_utility_of_x() {
    let sc = scenario(2.0, 1.0, TimeChangeSpec::identity(), 1.0, 1.0);
    let ens = Ensemble::new(&sc).unwrap();
    let est = estimate_objective(&ens, &Policy::Amount(Strategy::Constant(0.0)), 100, &Thresholds::default()).unwrap();
    assert_eq!(est.estimate.mean, power_utility(1.0, 2.0).unwrap());
    assert_eq!(est.estimate.stderr, 0.0);
}

#[test]
fn stderr_shrinks_like_root_n() {
    let sc = scenario(2.0, 1.0, TimeChangeSpec::identity(), 1.0, 1.0);
    let ens = Ensemble::new(&sc).unwrap();
    let t = Thresholds::default();
    let small = estimate_objective(&ens, &Policy::Optimal, 20_000, &t).unwrap().estimate.stderr;
    let large = estimate_objective(&ens, &Policy::Optimal, 40_000, &t).unwrap().estimate.stderr;
    let ratio = small / large;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
}
