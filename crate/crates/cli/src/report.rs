use serde::Serialize;

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    /// `value ≤ tol`.
    pub fn at_most(name: &str, value: f64, tol: f64) -> Check {
        Check::new(name, value <= tol, format!("{value:.3e} <= {tol:.1e}"))
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Outcome of one command before it is written out.
#[derive(Debug)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub converged: bool,
    pub result: serde_json::Value,
    /// CSV body including its header line.
    pub csv: String,
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub converged: bool,
    pub passed: bool,
    pub checks: &'a [Check],
    pub result: &'a serde_json::Value,
}

impl<'a> Report<'a> {
    pub fn new(config: &'a RunConfig, o: &'a Outcome) -> Report<'a> {
        Report {
            tool: "dtl",
            version: dtl_core::VERSION,
            seed: config.seed,
            config,
            converged: o.converged,
            passed: o.checks.iter().all(|c| c.pass),
            checks: &o.checks,
            result: &o.result,
        }
    }
}

/// CSV of the check lines, for commands without a natural table.
pub fn checks_csv(checks: &[Check]) -> String {
    let mut s = String::from("check,pass,detail\n");
    for c in checks {
        s.push_str(&format!(
            "{},{},\"{}\"\n",
            c.name,
            c.pass,
            c.detail.replace('"', "'")
        ));
    }
    s
}
