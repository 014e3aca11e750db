//! The five CLI commands. Each writes its artifacts plus `summary.json` into
//! the output directory and reports whether every enabled check passed.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::harness::{
    conditional_value_check, identity_report, martingale_report, optimal_strategy_report, optimality_scan,
    tower_check, CheckVerdict, Ensemble, EnsembleReport,
};
use crate::portfolio::{hat_strategy, hat_wealth, write_strategy_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Verify,
    Optimize,
    Scan,
    Tower,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Optimize => "optimize",
            Command::Scan => "scan",
            Command::Tower => "tower",
        }
    }
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub command: Command,
    pub passed: bool,
    pub n_paths: usize,
    pub seed: u64,
    pub checks: Vec<CheckVerdict>,
    pub artifacts: Vec<String>,
    /// The fully resolved configuration as TOML, with `workers` written as 0.
    pub config: String,
}

struct Output<'a> {
    dir: &'a Path,
    artifacts: Vec<String>,
}

impl Output<'_> {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.artifacts.push(name.to_string());
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

/// Runs `command` and writes its artifacts into `out`.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<Summary> {
    fs::create_dir_all(out)?;
    let mut output = Output {
        dir: out,
        artifacts: Vec::new(),
    };
    let scenario = config.scenario();
    let ensemble = Ensemble::new(&scenario)?.with_workers(config.simulation.workers);
    let n_paths = config.simulation.n_paths;
    let thresholds = config.checks.thresholds();
    let exported = config.simulation.export_paths.min(n_paths);

    let checks = match command {
        Command::Simulate => {
            let mut checks = Vec::new();
            for i in 0..exported {
                let bundle = ensemble.bundle(i)?;
                bundle.lambda.write_csv(output.file(&format!("lambda_{i}.csv"))?)?;
                bundle.write_physical_csv(output.file(&format!("path_{i}_physical.csv"))?)?;
                bundle.write_market_csv(output.file(&format!("path_{i}_market.csv"))?)?;
                let report = bundle.lambda.validate();
                checks.push(CheckVerdict::at_most(
                    &format!("lambda_{i}_valid"),
                    report.violations.len() as f64,
                    0.0,
                ));
            }
            checks
        }
        Command::Verify => {
            let (identities, records) =
                identity_report(&ensemble, n_paths, config.checks.demonstrate_failure, &thresholds)?;
            let martingale = martingale_report(&ensemble, n_paths, &thresholds)?;
            output.json("verify_records.json", &records)?;
            output.json("identity_report.json", &identities)?;
            output.json("martingale_report.json", &martingale)?;
            concat(&[&identities, &martingale])
        }
        Command::Optimize => {
            let frozen = Ensemble::new(&scenario)?
                .with_workers(config.simulation.workers)
                .freeze_first_lambda()?;
            let conditional = conditional_value_check(&frozen, n_paths, &thresholds)?;
            let strategy = optimal_strategy_report(&ensemble, n_paths, &thresholds)?;
            for i in 0..exported {
                let bundle = ensemble.bundle(i)?;
                let nu_hat = hat_strategy(&scenario, &bundle)?;
                let wealth = hat_wealth(&scenario, &bundle)?;
                write_strategy_csv(
                    output.file(&format!("strategy_{i}.csv"))?,
                    &nu_hat,
                    &wealth,
                    scenario.p,
                )?;
            }
            frozen.lambda(0)?.write_csv(output.file("frozen_lambda.csv")?)?;
            output.json("value_report.json", &conditional)?;
            output.json("strategy_report.json", &strategy)?;
            concat(&[&conditional, &strategy])
        }
        Command::Scan => {
            let table = optimality_scan(&ensemble, &config.checks.family(), n_paths, &thresholds)?;
            table.write_csv(output.file("scan.csv")?)?;
            output.json("scan_report.json", &table)?;
            table
                .rows
                .iter()
                .map(|r| {
                    CheckVerdict::at_least(
                        &format!("optimal_vs_{}", r.epsilon),
                        table.baseline.mean,
                        r.j_mean,
                        table.baseline.stderr + r.j_stderr,
                        thresholds.inequality_sigmas,
                    )
                })
                .collect()
        }
        Command::Tower => {
            let family = config.checks.jensen.then(|| config.checks.family());
            let report = tower_check(&ensemble, n_paths, family.as_ref(), &thresholds)?;
            output.json("tower_report.json", &report)?;
            report.checks.clone()
        }
    };

    let mut summary = Summary {
        command,
        passed: checks.iter().all(|c| c.passed),
        n_paths,
        seed: scenario.seed,
        checks,
        artifacts: output.artifacts.clone(),
        config: provenance(config),
    };
    summary.artifacts.push("summary.json".into());
    output.json("summary.json", &summary)?;
    Ok(summary)
}

fn provenance(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.simulation.workers = 0;
    c.to_toml()
}

fn concat(reports: &[&EnsembleReport]) -> Vec<CheckVerdict> {
    reports.iter().flat_map(|r| r.checks.iter().cloned()).collect()
}
