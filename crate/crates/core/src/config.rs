//! Sectioned TOML run configuration.
//!
//! ```toml
//! [time_change]
//! kind = "subordinator_drift"
//! drift = 1.0
//! intensity = 2.0
//! jump_law = { law = "exponential", mean = 1.0 }
//!
//! [market]
//! p = 2.0
//! x = 1.0
//!
//! [strategy]
//! theta = { kind = "constant", value = 1.0 }
//!
//! [simulation]
//! n_paths = 10000
//! seed = 7
//! ```
//!
//! Every other key has a default, and [`RunConfig::to_toml`] writes all of
//! them out so a report carries the fully resolved scenario.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{PerturbationFamily, PerturbationKind, Thresholds};
use crate::portfolio::{MarketScenario, ThetaSpec};
use crate::timechange::TimeChangeSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    /// Risk aversion; must not be 0 or 1.
    pub p: f64,
    /// Initial wealth, > 0.
    pub x: f64,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default = "one")]
    pub s0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    #[serde(default)]
    pub theta: ThetaSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub n_paths: usize,
    pub n_physical: usize,
    pub n_market: usize,
    /// Physical horizon `T`.
    pub horizon: f64,
    /// Market horizon `T̄`; `inf` leaves `Λ_T` unbounded.
    pub market_horizon: f64,
    pub seed: u64,
    /// Worker threads; 0 picks one per core. Never affects results.
    pub workers: usize,
    /// Number of paths written out as CSV.
    pub export_paths: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            n_paths: 10_000,
            n_physical: 4096,
            n_market: 4096,
            horizon: 1.0,
            market_horizon: f64::INFINITY,
            seed: 0,
            workers: 0,
            export_paths: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    pub equality_sigmas: f64,
    pub inequality_sigmas: f64,
    pub failure_sigmas: f64,
    pub exact_rel_tol: f64,
    pub cross_check_rel_tol: f64,
    pub max_inadmissible_fraction: f64,
    /// Run the backward identity on an integrand that is not `Λ`-adapted.
    pub demonstrate_failure: bool,
    pub scan_family: PerturbationKind,
    pub scan_params: Vec<f64>,
    /// Add the Jensen-direction comparison to `tower`.
    pub jensen: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        let t = Thresholds::default();
        ChecksSection {
            equality_sigmas: t.equality_sigmas,
            inequality_sigmas: t.inequality_sigmas,
            failure_sigmas: t.failure_sigmas,
            exact_rel_tol: t.exact_rel_tol,
            cross_check_rel_tol: t.cross_check_rel_tol,
            max_inadmissible_fraction: t.max_inadmissible_fraction,
            demonstrate_failure: false,
            scan_family: PerturbationKind::Scale,
            scan_params: vec![-0.5, -0.25, 0.25, 0.5],
            jensen: true,
        }
    }
}

impl ChecksSection {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            equality_sigmas: self.equality_sigmas,
            inequality_sigmas: self.inequality_sigmas,
            failure_sigmas: self.failure_sigmas,
            exact_rel_tol: self.exact_rel_tol,
            cross_check_rel_tol: self.cross_check_rel_tol,
            max_inadmissible_fraction: self.max_inadmissible_fraction,
        }
    }

    pub fn family(&self) -> PerturbationFamily {
        PerturbationFamily {
            kind: self.scan_family,
            params: self.scan_params.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub time_change: TimeChangeSpec,
    pub market: MarketSection,
    #[serde(default)]
    pub strategy: StrategySection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

fn one() -> f64 {
    1.0
}

impl RunConfig {
    /// Parses and validates; errors carry the 1-based line they refer to.
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(0),
            message: e.message().trim().to_string(),
        })?;
        config.validate_against(text)?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn scenario(&self) -> MarketScenario {
        MarketScenario {
            p: self.market.p,
            x: self.market.x,
            t: self.market.start_time,
            horizon: self.simulation.horizon,
            market_horizon: self.simulation.market_horizon,
            s0: self.market.s0,
            theta: self.strategy.theta.clone(),
            time_change: self.time_change.clone(),
            n_physical: self.simulation.n_physical,
            n_market: self.simulation.n_market,
            n_paths: self.simulation.n_paths,
            seed: self.simulation.seed,
        }
    }

    /// Semantic checks; `text` is only used to locate the offending key.
    pub fn validate_against(&self, text: &str) -> Result<()> {
        let fail = |section: &str, key: &str, message: String| Error::Config {
            line: find_key_line(text, section, key),
            message,
        };
        let p = self.market.p;
        if p == 0.0 || p == 1.0 {
            return Err(fail("market", "p", "p must not be 0 or 1".into()));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(fail("market", "p", format!("p must be positive, got {p}")));
        }
        if !(self.market.x > 0.0 && self.market.x.is_finite()) {
            return Err(fail("market", "x", format!("x must be > 0, got {}", self.market.x)));
        }
        for (key, v) in [
            ("n_paths", self.simulation.n_paths),
            ("n_physical", self.simulation.n_physical),
            ("n_market", self.simulation.n_market),
        ] {
            if v == 0 {
                return Err(fail("simulation", key, format!("{key} must be >= 1")));
            }
        }
        if self.checks.scan_family == PerturbationKind::TimeShift && self.checks.scan_params.iter().any(|d| *d < 0.0) {
            return Err(fail("checks", "scan_params", "time shifts must be >= 0".into()));
        }
        if let Err(e) = self.time_change.validate() {
            return Err(fail("time_change", "kind", e.to_string()));
        }
        if let Err(e) = self.scenario().validate() {
            return Err(fail("simulation", "horizon", e.to_string()));
        }
        Ok(())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = …` inside `[section]`, else of the section header, else 0.
fn find_key_line(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header_line = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header_line = n + 1;
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return n + 1;
                }
            }
        }
    }
    header_line
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[time_change]\nkind = \"linear\"\nrate = 1.0\n\n[market]\np = 2.0\nx = 1.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.simulation.n_paths, 10_000);
        assert_eq!(c.simulation.n_physical, 4096);
        assert_eq!(c.strategy.theta, ThetaSpec::Constant { value: 0.0 });
        assert_eq!(c.checks.equality_sigmas, 3.0);
        assert_eq!(c.time_change, TimeChangeSpec::identity());
    }

    #[test]
    fn p_equal_one_is_rejected_with_line() {
        let text = MINIMAL.replace("p = 2.0", "p = 1.0");
        match RunConfig::parse(&text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 6);
                assert_eq!(message, "p must not be 0 or 1");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_type_errors_have_lines() {
        let typo = MINIMAL.replace("x = 1.0", "x = 1.0\nxx = 2.0");
        assert!(matches!(RunConfig::parse(&typo), Err(Error::Config { line: 8, .. })));
        let wrong = MINIMAL.replace("x = 1.0", "x = \"one\"");
        assert!(matches!(RunConfig::parse(&wrong), Err(Error::Config { line: 7, .. })));
        let missing = MINIMAL.replace("x = 1.0\n", "");
        assert!(matches!(RunConfig::parse(&missing), Err(Error::Config { .. })));
        let negative = MINIMAL.replace("x = 1.0", "x = -1.0");
        assert!(matches!(RunConfig::parse(&negative), Err(Error::Config { line: 7, .. })));
    }

    #[test]
    fn serialization_round_trips_with_all_defaults() {
        let text = "[time_change]\nkind = \"subordinator_drift\"\ndrift = 1.0\nintensity = 2.0\n\
                    jump_law = { law = \"gamma\", shape = 2.0, scale = 0.5 }\n\n[market]\np = 0.5\nx = 3.0\n\n\
                    [strategy]\ntheta = { kind = \"m_feedback\", level = 0.2, gain = 0.1 }\n";
        let c = RunConfig::parse(text).unwrap();
        let written = c.to_toml();
        assert!(written.contains("n_market"));
        assert!(written.contains("scan_params"));
        assert_eq!(RunConfig::parse(&written).unwrap(), c);
    }
}
