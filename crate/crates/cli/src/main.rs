//! `dtl`: command-line front end for the dtl-core probes.
//!
//! Every run writes a JSON report holding the full resolved configuration,
//! the library version and the seed; feeding that report back through
//! `--config` reproduces the run.

mod commands;
mod config;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtl_core::grid::Grid3D;
use dtl_core::io::{write_atomic, write_json_atomic};
use dtl_core::potentials::PotentialSpec;
use dtl_core::DtlError;
use thiserror::Error;

use config::{
    default_potential, Command, DecaySource, Format, OperatorChoice, Params, PartialConfig,
    RunConfig, SignChoice,
};
use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] DtlError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(DtlError::Accuracy(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dtl",
    version,
    about = "Threshold probes for magnetic Dirac operators"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Grid points per axis (power of two >= 8).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Half-width L of the periodic box [-L, L)^3.
    #[arg(long, global = true)]
    box_l: Option<f64>,
    #[arg(long, global = true)]
    mass: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Potential as inline JSON or a path to a JSON file.
    #[arg(long, global = true)]
    potential: Option<String>,
    /// Tolerance override `name=value`; `--tol-<name> <value>` is accepted too.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    tol: Vec<String>,
    /// Report path; CSV output goes next to it with a `.csv` extension.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// JSON config file, or a previously emitted report.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Analytic and grid residuals of the known zero mode.
    VerifyZeroMode,
    /// Eigenvalues nearest a target.
    Spectrum {
        #[arg(long, value_enum)]
        operator: Option<OperatorChoice>,
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        /// Write the eigenvectors as field files next to the report.
        #[arg(long)]
        save_vectors: bool,
    },
    /// Nearest-eigenvalue distances inside the gap (-m, m).
    GapScan {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Convergence of r^2 f(r w) to the asymptotic limit.
    Asymptotics {
        #[arg(long, value_enum)]
        sign: Option<SignChoice>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Power-law decay fit and tail verdict.
    DecayFit {
        #[arg(long, value_enum)]
        source: Option<DecaySource>,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, value_enum)]
        sign: Option<SignChoice>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Weyl quasi-modes at an energy in the essential spectrum.
    Weyl {
        #[arg(long, allow_hyphen_values = true)]
        lambda0: Option<f64>,
        /// Largest envelope index; indices 1..=n-max are built.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Coulomb-gauge transform and gauged zero-mode residual.
    Gauge,
    /// |lambda_min| of T_{tA} over couplings t.
    CouplingScan {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t_values: Option<Vec<f64>>,
    },
    /// Decay classification and kernel dimension bound.
    PotentialInfo {
        #[arg(long)]
        bound_constant: Option<f64>,
    },
}

impl Sub {
    fn split(self) -> (Command, Params) {
        let p = Params::default();
        match self {
            Sub::VerifyZeroMode => (Command::VerifyZeroMode, p),
            Sub::Spectrum {
                operator,
                target,
                count,
                save_vectors,
            } => (
                Command::Spectrum,
                Params {
                    operator,
                    target,
                    count,
                    save_vectors: save_vectors.then_some(true),
                    ..p
                },
            ),
            Sub::GapScan {
                lambdas,
                resolution,
            } => (
                Command::GapScan,
                Params {
                    lambdas,
                    resolution,
                    ..p
                },
            ),
            Sub::Asymptotics { sign, radii } => (Command::Asymptotics, Params { sign, radii, ..p }),
            Sub::DecayFit {
                source,
                field,
                sign,
                radii,
            } => (
                Command::DecayFit,
                Params {
                    source,
                    field,
                    sign,
                    radii,
                    ..p
                },
            ),
            Sub::Weyl { lambda0, n_max } => (
                Command::Weyl,
                Params {
                    lambda0,
                    n_max,
                    ..p
                },
            ),
            Sub::Gauge => (Command::Gauge, p),
            Sub::CouplingScan { t_values } => (Command::CouplingScan, Params { t_values, ..p }),
            Sub::PotentialInfo { bound_constant } => (
                Command::PotentialInfo,
                Params {
                    bound_constant,
                    ..p
                },
            ),
        }
    }
}

/// Rewrite `--tol-<name> v` and `--tol-<name>=v` into `--tol <name>=v`.
fn normalize_args(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(a) = it.next() {
        match a.strip_prefix("--tol-") {
            Some(rest) if !rest.is_empty() => {
                out.push("--tol".into());
                match rest.split_once('=') {
                    Some((name, v)) => out.push(format!("{}={v}", name.replace('-', "_"))),
                    None => {
                        let v = it.next().unwrap_or_default();
                        out.push(format!("{}={v}", rest.replace('-', "_")));
                    }
                }
            }
            _ => out.push(a),
        }
    }
    out
}

fn parse_tolerances(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut m = BTreeMap::new();
    for item in items {
        let (name, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("tolerance '{item}' is not NAME=VALUE")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::Config(format!("tolerance '{name}' has bad value '{v}'")))?;
        m.insert(name.replace('-', "_"), v);
    }
    Ok(m)
}

/// Make companion-file paths inside a potential JSON absolute.
fn absolutize_paths(v: &mut serde_json::Value, base: &Path) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                if k == "file" || k == "chi_file" {
                    if let Some(s) = val.as_str() {
                        if Path::new(s).is_relative() {
                            *val = base.join(s).display().to_string().into();
                        }
                    }
                } else {
                    absolutize_paths(val, base);
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(|x| absolutize_paths(x, base)),
        _ => {}
    }
}

fn potential_from_flag(s: &str) -> Result<serde_json::Value, CliError> {
    let cwd = std::env::current_dir().map_err(|e| CliError::Config(e.to_string()))?;
    let (text, base) = if s.trim_start().starts_with('{') {
        (s.to_string(), cwd)
    } else {
        let path = cwd.join(s);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Config(format!("cannot read potential {}: {e}", path.display()))
        })?;
        (text, path.parent().map(Path::to_path_buf).unwrap_or(cwd))
    };
    let mut v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed potential JSON: {e}")))?;
    absolutize_paths(&mut v, &base);
    Ok(v)
}

/// Defaults, then the config file, then flags.
fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let g = cli.global;
    let (command, flag_params) = cli.command.split();
    let file = match &g.config {
        Some(p) => {
            let mut c = PartialConfig::load(p)?;
            if let Some(pot) = c.potential.as_mut() {
                let base = p
                    .parent()
                    .filter(|d| !d.as_os_str().is_empty())
                    .unwrap_or(Path::new("."));
                let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
                absolutize_paths(pot, &base);
            }
            c
        }
        None => PartialConfig::default(),
    };
    let potential = match &g.potential {
        Some(s) => potential_from_flag(s)?,
        None => file.potential.clone().unwrap_or_else(default_potential),
    };
    let mut tolerances: BTreeMap<String, f64> = BTreeMap::new();
    let same_command = file.command.is_none_or(|c| c == command);
    if same_command {
        tolerances.extend(file.tolerances.clone());
    }
    tolerances.extend(parse_tolerances(&g.tol)?);
    let params = if same_command {
        flag_params.or(file.params.clone())
    } else {
        flag_params
    };
    let cfg = RunConfig {
        command,
        grid_n: g.grid_n.or(file.grid_n).unwrap_or(64),
        box_l: g.box_l.or(file.box_l).unwrap_or(20.0),
        mass: g.mass.or(file.mass).unwrap_or(1.0),
        potential,
        tolerances,
        seed: g.seed.or(file.seed).unwrap_or(0),
        output_path: g
            .out
            .or(file.output_path)
            .unwrap_or_else(|| PathBuf::from("dtl-report.json")),
        format: g.format.or(file.format).unwrap_or_default(),
        params,
    };
    cfg.validate()?;
    let mut cfg = cfg;
    for (name, v) in command.default_tolerances() {
        cfg.tolerances.entry((*name).to_string()).or_insert(*v);
    }
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<u8, CliError> {
    let potential = PotentialSpec::from_json(&cfg.potential, Path::new("."))
        .map_err(|e| CliError::Config(format!("potential: {e}")))?;
    let grid = Grid3D::new(cfg.grid_n, cfg.box_l)?;
    let ctx = commands::Context {
        cfg,
        potential,
        grid,
    };
    let outcome = commands::run(&ctx)?;
    for c in &outcome.checks {
        println!("{}", c.line());
    }
    if cfg.format.json() {
        write_json_atomic(&cfg.output_path, &Report::new(cfg, &outcome))?;
    }
    if cfg.format.csv() {
        write_atomic(&cfg.output_with_extension("csv"), outcome.csv.as_bytes())?;
    }
    Ok(if !outcome.converged {
        3
    } else if outcome.checks.iter().all(|c| c.pass) {
        0
    } else {
        2
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = resolve(cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn tol_flags_are_rewritten() {
        let a = normalize_args(args(&[
            "dtl",
            "--tol-grid",
            "1e-2",
            "--tol-gap-ratio=0.5",
            "gauge",
        ]));
        assert_eq!(
            a,
            args(&[
                "dtl",
                "--tol",
                "grid=1e-2",
                "--tol",
                "gap_ratio=0.5",
                "gauge"
            ])
        );
    }

    #[test]
    fn flags_override_defaults_and_validate() {
        let cli = Cli::try_parse_from(args(&[
            "dtl",
            "--grid-n",
            "16",
            "--tol",
            "grid=0.5",
            "verify-zero-mode",
        ]))
        .unwrap();
        let cfg = resolve(cli).unwrap();
        assert_eq!(cfg.grid_n, 16);
        assert_eq!(cfg.tol("grid"), 0.5);
        assert_eq!(cfg.tol("analytic"), 1e-10);
        let cli = Cli::try_parse_from(args(&["dtl", "--grid-n", "12", "gauge"])).unwrap();
        assert!(matches!(resolve(cli), Err(CliError::Config(_))));
        let cli = Cli::try_parse_from(args(&["dtl", "--tol", "nope=1", "gauge"])).unwrap();
        assert!(matches!(resolve(cli), Err(CliError::Config(_))));
        let cli = Cli::try_parse_from(args(&["dtl", "--mass", "0", "gauge"])).unwrap();
        assert!(matches!(resolve(cli), Err(CliError::Config(_))));
    }

    #[test]
    fn relative_companion_paths_become_absolute() {
        let mut v = serde_json::json!({"variant": "gauged", "chi_file": "c.bin", "inner": {"variant": "sampled", "file": "/abs/a.bin"}});
        absolutize_paths(&mut v, Path::new("/base"));
        assert_eq!(v["chi_file"], "/base/c.bin");
        assert_eq!(v["inner"]["file"], "/abs/a.bin");
    }
}
