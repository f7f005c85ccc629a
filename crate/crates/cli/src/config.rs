use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dtl_core::potentials::PotentialSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyZeroMode,
    Spectrum,
    GapScan,
    Asymptotics,
    DecayFit,
    Weyl,
    Gauge,
    CouplingScan,
    PotentialInfo,
}

impl Command {
    /// Tolerance names understood by the command and their defaults.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Command::VerifyZeroMode => &[("analytic", 1e-10), ("grid", 5e-3), ("norm", 1e-3)],
            Command::Spectrum => &[("eigenvalue", 5e-3), ("block", 1e-2), ("residual", 1e-6)],
            Command::GapScan => &[("gap_ratio", 0.9)],
            Command::Asymptotics => &[("deviation", 1e-3), ("slope", 0.15)],
            Command::DecayFit => &[("exponent", 0.25)],
            Command::Weyl => &[("free_residual", 1e-10), ("eigen_relation", 1e-12)],
            Command::Gauge => &[("div", 1e-8), ("curl", 1e-10), ("residual", 1e-2)],
            Command::CouplingScan => &[("lambda_min", 5e-3)],
            Command::PotentialInfo => &[],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorChoice {
    SigmaD,
    Weyl,
    Dirac,
    DiracSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SignChoice {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DecaySource {
    /// The closed-form zero mode of the potential.
    Analytic,
    /// The `±m` eigenvector of `H_A` computed on the grid.
    Eigenvector,
    /// A field file given by `field`.
    Field,
    /// `|x|⁻¹` times a constant spinor.
    SyntheticInverse,
}

/// Per-command parameters. Unused entries are ignored by other commands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub operator: Option<OperatorChoice>,
    pub target: Option<f64>,
    pub count: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub sign: Option<SignChoice>,
    pub radii: Option<Vec<f64>>,
    pub source: Option<DecaySource>,
    pub field: Option<PathBuf>,
    pub lambda0: Option<f64>,
    pub n_max: Option<usize>,
    pub t_values: Option<Vec<f64>>,
    pub bound_constant: Option<f64>,
    pub save_vectors: Option<bool>,
}

impl Params {
    /// Fill unset entries from `base`.
    pub fn or(self, base: Params) -> Params {
        Params {
            operator: self.operator.or(base.operator),
            target: self.target.or(base.target),
            count: self.count.or(base.count),
            lambdas: self.lambdas.or(base.lambdas),
            resolution: self.resolution.or(base.resolution),
            sign: self.sign.or(base.sign),
            radii: self.radii.or(base.radii),
            source: self.source.or(base.source),
            field: self.field.or(base.field),
            lambda0: self.lambda0.or(base.lambda0),
            n_max: self.n_max.or(base.n_max),
            t_values: self.t_values.or(base.t_values),
            bound_constant: self.bound_constant.or(base.bound_constant),
            save_vectors: self.save_vectors.or(base.save_vectors),
        }
    }
}

/// Everything a run depends on; serialized verbatim into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub grid_n: usize,
    pub box_l: f64,
    pub mass: f64,
    /// Potential in its JSON object form.
    pub potential: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub output_path: PathBuf,
    pub format: Format,
    #[serde(default)]
    pub params: Params,
}

/// Values read from a config file; every entry optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<Command>,
    pub grid_n: Option<usize>,
    pub box_l: Option<f64>,
    pub mass: Option<f64>,
    pub potential: Option<serde_json::Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub params: Params,
}

impl PartialConfig {
    /// Read a config file, or the `config` block of an emitted report.
    pub fn load(path: &Path) -> Result<PartialConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let block = match value.get("config") {
            Some(c) if value.get("version").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(block)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }
}

pub fn default_potential() -> serde_json::Value {
    PotentialSpec::loss_yau_default()
        .to_json(Path::new("."), "potential")
        .expect("Loss–Yau potential has no companion files")
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid_n < 8 || !self.grid_n.is_power_of_two() {
            return Err(CliError::Config(format!(
                "grid_n must be a power of two >= 8, got {}",
                self.grid_n
            )));
        }
        if !(self.box_l > 0.0 && self.box_l.is_finite()) {
            return Err(CliError::Config(format!(
                "box_l must be positive, got {}",
                self.box_l
            )));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(CliError::Config(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        let known = self.command.default_tolerances();
        for (name, v) in &self.tolerances {
            if !known.iter().any(|(k, _)| k == name) {
                let names: Vec<&str> = known.iter().map(|(k, _)| *k).collect();
                return Err(CliError::Config(format!(
                    "unknown tolerance '{name}' for this command (known: {})",
                    names.join(", ")
                )));
            }
            if !(*v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "tolerance '{name}' must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    /// Sibling path with another extension, e.g. the CSV next to the JSON.
    pub fn output_with_extension(&self, ext: &str) -> PathBuf {
        self.output_path.with_extension(ext)
    }
}
