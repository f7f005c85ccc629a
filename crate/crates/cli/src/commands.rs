use std::path::Path;

use dtl_core::analytic::{
    asymptotic_convergence, eval_zero_mode, l2_norm_radial, lift_to_threshold, loss_yau_residual,
    sample_zero_mode, QuadratureParams, ThresholdSign, ZeroModeSpec,
};
use dtl_core::grid::{
    curl_spectral, div_spectral, gauge_transform, gauged_mode, residual_norm, sample_potential,
    Grid3D, OperatorHandle, OperatorKind,
};
use dtl_core::io::{read_field, write_field};
use dtl_core::potentials::{classify_decay_default, kernel_dim_bound, PotentialSpec};
use dtl_core::quadrature::{directions_26, geometric_radii};
use dtl_core::spectral::{
    build_weyl_quasimode, coupling_scan, decay_fit, decay_fit_field, eigs_near, gap_scan,
    gap_scan_uniform, DecayFit, DecayVerdict, EigenOptions, EigenResult,
};
use dtl_core::RealVec3;
use serde_json::json;

use crate::config::{Command, DecaySource, OperatorChoice, RunConfig, SignChoice};
use crate::report::{checks_csv, Check, Outcome};
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub potential: PotentialSpec,
    pub grid: Grid3D,
}

impl Context<'_> {
    fn eigen_options(&self, count: usize) -> EigenOptions {
        EigenOptions {
            count,
            seed: self.cfg.seed,
            ..EigenOptions::default()
        }
    }

    fn zero_mode(&self) -> Result<ZeroModeSpec, CliError> {
        ZeroModeSpec::for_potential(&self.potential).ok_or_else(|| {
            CliError::Config(format!(
                "no known zero mode for potential {}",
                self.potential.label()
            ))
        })
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    match ctx.cfg.command {
        Command::VerifyZeroMode => verify_zero_mode(ctx),
        Command::Spectrum => spectrum(ctx),
        Command::GapScan => gap(ctx),
        Command::Asymptotics => asymptotics(ctx),
        Command::DecayFit => decay(ctx),
        Command::Weyl => weyl(ctx),
        Command::Gauge => gauge(ctx),
        Command::CouplingScan => coupling(ctx),
        Command::PotentialInfo => potential_info(ctx),
    }
}

/// Nodes on 40 radii in `[10⁻², 10²]` × 26 directions.
fn probe_points() -> Vec<RealVec3> {
    let dirs = directions_26();
    geometric_radii(1e-2, 1e2, 40)
        .into_iter()
        .flat_map(|r| dirs.iter().map(move |w| *w * r).collect::<Vec<_>>())
        .collect()
}

fn verify_zero_mode(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let spec = ctx.zero_mode()?;
    let mut checks = Vec::new();
    let mut result = serde_json::Map::new();
    if let ZeroModeSpec::LossYau { phi0 } = &spec {
        let worst = probe_points()
            .into_iter()
            .map(|x| loss_yau_residual(phi0, x).norm())
            .fold(0.0, f64::max);
        result.insert("analytic_residual".into(), json!(worst));
        checks.push(Check::at_most(
            "analytic residual",
            worst,
            cfg.tol("analytic"),
        ));
    }
    let op = OperatorHandle::weyl_dirac(ctx.grid, &ctx.potential)?;
    let phi = sample_zero_mode(&spec, ctx.grid)?;
    let grid_residual = residual_norm(&op, &phi, 0.0)?;
    result.insert("grid_residual".into(), json!(grid_residual));
    checks.push(Check::at_most(
        "grid residual",
        grid_residual,
        cfg.tol("grid"),
    ));
    let norm = l2_norm_radial(
        |x| {
            eval_zero_mode(&spec, x)
                .map(|p| p.norm_sqr())
                .unwrap_or(f64::NAN)
        },
        200.0,
    );
    result.insert("l2_norm".into(), json!(norm));
    if matches!(spec, ZeroModeSpec::LossYau { .. }) {
        let dev = (norm - std::f64::consts::PI).abs();
        checks.push(Check::at_most("L2 norm vs pi", dev, cfg.tol("norm")));
    }
    result.insert("zero_mode".into(), to_json(&spec));
    Ok(Outcome {
        csv: checks_csv(&checks),
        checks,
        converged: true,
        result: result.into(),
    })
}

fn operator_for(ctx: &Context, choice: OperatorChoice) -> Result<OperatorHandle, CliError> {
    let m = ctx.cfg.mass;
    Ok(match choice {
        OperatorChoice::SigmaD => OperatorHandle::sigma_d(ctx.grid),
        OperatorChoice::Weyl => OperatorHandle::weyl_dirac(ctx.grid, &ctx.potential)?,
        OperatorChoice::Dirac => OperatorHandle::dirac(ctx.grid, &ctx.potential, m)?,
        OperatorChoice::DiracSquared => OperatorHandle::dirac_squared(ctx.grid, &ctx.potential, m)?,
    })
}

fn spectrum(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let choice = p.operator.unwrap_or(OperatorChoice::Dirac);
    let op = operator_for(ctx, choice)?;
    let target = p.target.unwrap_or(match choice {
        OperatorChoice::Dirac => cfg.mass,
        OperatorChoice::DiracSquared => cfg.mass * cfg.mass,
        _ => 0.0,
    });
    let r = eigs_near(&op, target, &ctx.eigen_options(p.count.unwrap_or(1)))?;
    let rep = &r.report;
    let mut checks = Vec::new();
    let worst_res = rep.residuals.iter().copied().fold(0.0, f64::max);
    checks.push(Check::at_most("residual", worst_res, cfg.tol("residual")));
    let threshold_target = match op.kind() {
        OperatorKind::Dirac => (target.abs() - cfg.mass).abs() < 1e-12,
        OperatorKind::DiracSquared => (target - cfg.mass * cfg.mass).abs() < 1e-12,
        _ => target == 0.0,
    };
    if threshold_target {
        let tol = cfg.tol("eigenvalue");
        let d = (rep.eigenvalues[0] - target).abs();
        checks.push(Check::new(
            "eigenvalue",
            d <= tol,
            format!("{:.6} vs {target}±{tol:.0e}", rep.eigenvalues[0]),
        ));
        if let Some(off) = &rep.off_block_norms {
            let block = if target >= 0.0 {
                "lower-block"
            } else {
                "upper-block"
            };
            checks.push(Check::at_most(block, off[0], cfg.tol("block")));
        }
    }
    checks.push(Check::new(
        "converged",
        rep.converged,
        format!("{} Lanczos steps", rep.iterations),
    ));
    let mut result = to_json(rep);
    if p.save_vectors.unwrap_or(false) {
        let files = save_vectors(cfg, &r)?;
        result["vector_files"] = json!(files);
    }
    let mut csv = String::from("index,eigenvalue,residual\n");
    for (i, (l, res)) in rep.eigenvalues.iter().zip(&rep.residuals).enumerate() {
        csv.push_str(&format!("{i},{l:e},{res:e}\n"));
    }
    Ok(Outcome {
        checks,
        converged: rep.converged,
        result,
        csv,
    })
}

fn save_vectors(cfg: &RunConfig, r: &EigenResult) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    for (i, v) in r.vectors.iter().enumerate() {
        let path = cfg.output_with_extension(&format!("vec{i}.dtl"));
        write_field(&path, v)?;
        files.push(path.display().to_string());
    }
    Ok(files)
}

fn gap(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let opts = ctx.eigen_options(1);
    let scan = match (&p.lambdas, p.resolution) {
        (Some(l), _) => gap_scan(&ctx.potential, cfg.mass, ctx.grid, l, &opts),
        (None, res) => {
            gap_scan_uniform(&ctx.potential, cfg.mass, ctx.grid, res.unwrap_or(3), &opts)
        }
    }
    .map_err(|e| match e {
        dtl_core::DtlError::Precondition(m) => CliError::Config(m),
        e => e.into(),
    })?;
    let tol = cfg.tol("gap_ratio");
    let mut checks: Vec<Check> = scan
        .points
        .iter()
        .map(|pt| {
            Check::new(
                format!("gap at lambda={}", pt.lambda),
                pt.ratio >= tol,
                format!(
                    "proxy {:.4} / gap distance {:.4} = {:.4} >= {tol}",
                    pt.proxy, pt.gap_distance, pt.ratio
                ),
            )
        })
        .collect();
    let converged = scan.points.iter().all(|p| p.converged);
    checks.push(Check::new(
        "converged",
        converged,
        format!("{} energies", scan.points.len()),
    ));
    Ok(Outcome {
        checks,
        converged,
        result: to_json(&scan),
        csv: scan.csv(),
    })
}

fn threshold_sign(s: Option<SignChoice>) -> ThresholdSign {
    match s.unwrap_or(SignChoice::Plus) {
        SignChoice::Plus => ThresholdSign::Plus,
        SignChoice::Minus => ThresholdSign::Minus,
    }
}

fn asymptotics(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let spec = ctx.zero_mode()?;
    let mode = lift_to_threshold(&spec, threshold_sign(cfg.params.sign), cfg.mass)?;
    let radii = cfg
        .params
        .radii
        .clone()
        .unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0]);
    let rep = asymptotic_convergence(
        &mode,
        &ctx.potential,
        &radii,
        &directions_26(),
        &QuadratureParams::default(),
    )?;
    let mut checks = Vec::new();
    if rep.u_closed.is_some() {
        checks.push(Check::at_most(
            "sup deviation vs closed form",
            rep.sup_deviation,
            cfg.tol("deviation"),
        ));
    }
    let monotone = rep.convergence_table.windows(2).all(|w| w[1].1 < w[0].1);
    checks.push(Check::new(
        "convergence monotone",
        monotone,
        format!("{} radii", rep.convergence_table.len()),
    ));
    let tol = cfg.tol("slope");
    checks.push(Check::new(
        "convergence slope",
        (rep.convergence_slope + 1.0).abs() <= tol,
        format!("{:.4} vs -1±{tol}", rep.convergence_slope),
    ));
    Ok(Outcome {
        checks,
        converged: true,
        result: to_json(&rep),
        csv: rep.csv(),
    })
}

/// Default fit window `[0.15 L, 0.6 L]` for grid fields.
fn grid_window(grid: &Grid3D) -> Vec<f64> {
    geometric_radii(0.15 * grid.half_width(), 0.6 * grid.half_width(), 8)
}

fn decay(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let dirs = directions_26();
    let source = p.source.unwrap_or(DecaySource::Analytic);
    let mut converged = true;
    let fit: DecayFit = match source {
        DecaySource::Analytic => {
            let spec = ctx.zero_mode()?;
            let radii = p
                .radii
                .clone()
                .unwrap_or_else(|| geometric_radii(20.0, 200.0, 10));
            decay_fit(|x| Ok(eval_zero_mode(&spec, x)?.norm()), &radii, &dirs)?
        }
        DecaySource::SyntheticInverse => {
            let radii = p
                .radii
                .clone()
                .unwrap_or_else(|| geometric_radii(20.0, 200.0, 10));
            decay_fit(|x| Ok(1.0 / x.norm()), &radii, &dirs)?
        }
        DecaySource::Field => {
            let path = p
                .field
                .as_ref()
                .ok_or_else(|| CliError::Config("decay-fit from a field needs `field`".into()))?;
            let f = read_field(path)?;
            let radii = p.radii.clone().unwrap_or_else(|| grid_window(f.grid()));
            decay_fit_field(&f, &radii, &dirs)?
        }
        DecaySource::Eigenvector => {
            let sign = threshold_sign(p.sign);
            let op = OperatorHandle::dirac(ctx.grid, &ctx.potential, cfg.mass)?;
            let r = eigs_near(&op, sign.factor() * cfg.mass, &ctx.eigen_options(1))?;
            converged = r.report.converged;
            let radii = p.radii.clone().unwrap_or_else(|| grid_window(&ctx.grid));
            decay_fit_field(&r.vectors[0], &radii, &dirs)?
        }
    };
    let mut checks = Vec::new();
    let tol = cfg.tol("exponent");
    let expected = if source == DecaySource::SyntheticInverse {
        DecayVerdict::ResonanceTail
    } else {
        DecayVerdict::ModeTail
    };
    let centre = if expected == DecayVerdict::ModeTail {
        2.0
    } else {
        1.0
    };
    checks.push(Check::new(
        "decay exponent",
        (fit.exponent - centre).abs() <= tol,
        format!("{:.4} vs {centre}±{tol}", fit.exponent),
    ));
    checks.push(Check::new(
        "verdict",
        fit.verdict == expected,
        format!("{:?}", fit.verdict),
    ));
    if source != DecaySource::SyntheticInverse {
        if let Ok(class) = classify_decay_default(&ctx.potential) {
            let bad = fit.inconsistent_for(class.rho_fit);
            checks.push(Check::new(
                "no resonance tail",
                !bad,
                format!("rho_fit {:.3}, verdict {:?}", class.rho_fit, fit.verdict),
            ));
        }
    }
    if source == DecaySource::Eigenvector {
        checks.push(Check::new("converged", converged, "eigensolve"));
    }
    Ok(Outcome {
        checks,
        converged,
        result: json!({ "source": source, "fit": fit }),
        csv: fit.csv(),
    })
}

fn weyl(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let lambda0 = cfg.params.lambda0.unwrap_or(1.5);
    let n_max = cfg.params.n_max.unwrap_or(4);
    if n_max == 0 {
        return Err(CliError::Config("n_max must be >= 1".into()));
    }
    let mut modes = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        modes.push(
            build_weyl_quasimode(&ctx.potential, cfg.mass, lambda0, n, ctx.grid).map_err(|e| {
                match e {
                    dtl_core::DtlError::Domain(m) => CliError::Config(m),
                    e => e.into(),
                }
            })?,
        );
    }
    let mut checks = Vec::new();
    let rel = modes
        .iter()
        .map(|m| m.eigen_relation_error)
        .fold(0.0, f64::max);
    checks.push(Check::at_most(
        "eigen relation",
        rel,
        cfg.tol("eigen_relation"),
    ));
    if ctx.potential.is_identically_zero() {
        checks.push(Check::at_most(
            "free residual",
            modes[0].residual,
            cfg.tol("free_residual"),
        ));
    } else if n_max >= 2 {
        let dec = modes.windows(2).all(|w| w[1].residual < w[0].residual);
        let list: Vec<String> = modes.iter().map(|m| format!("{:.4}", m.residual)).collect();
        checks.push(Check::new(
            "residual strictly decreasing",
            dec,
            list.join(" > "),
        ));
    }
    let mut csv = String::from("n_index,residual\n");
    for m in &modes {
        csv.push_str(&format!("{},{:e}\n", m.n_index, m.residual));
    }
    Ok(Outcome {
        checks,
        converged: true,
        result: to_json(&modes),
        csv,
    })
}

fn gauge(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let (gauged, chi) = gauge_transform(&ctx.potential, ctx.grid)?;
    let a0 = sample_potential(&ctx.potential, &ctx.grid)?;
    let a1 = sample_potential(&gauged, &ctx.grid)?;
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let div0 = l2(&div_spectral(&a0));
    let div1 = l2(&div_spectral(&a1));
    let div_rel = if div0 > 0.0 { div1 / div0 } else { div1 };
    let c0 = curl_spectral(&a0);
    let curl_rel = curl_spectral(&a1).sub(&c0)?.norm() / c0.norm().max(f64::MIN_POSITIVE);
    let mut checks = vec![
        Check::at_most("divergence", div_rel, cfg.tol("div")),
        Check::at_most("curl preserved", curl_rel, cfg.tol("curl")),
    ];
    let mut result = json!({
        "div_relative": div_rel,
        "curl_relative": curl_rel,
        "chi_max_abs": chi.max_abs(),
    });
    if let Some(spec) = ZeroModeSpec::for_potential(&ctx.potential) {
        let phi = sample_zero_mode(&spec, ctx.grid)?;
        let op = OperatorHandle::weyl_dirac(ctx.grid, &gauged)?;
        let res = residual_norm(&op, &gauged_mode(&phi, &chi)?, 0.0)?;
        result["gauged_residual"] = json!(res);
        checks.push(Check::at_most(
            "gauged zero-mode residual",
            res,
            cfg.tol("residual"),
        ));
    }
    let dir = cfg
        .output_path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let stem = cfg
        .output_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    result["gauged_potential"] = gauged.to_json(dir, stem)?;
    Ok(Outcome {
        csv: checks_csv(&checks),
        checks,
        converged: true,
        result,
    })
}

fn coupling(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let ts = cfg
        .params
        .t_values
        .clone()
        .unwrap_or_else(|| vec![0.5, 0.75, 1.0, 1.25, 1.5]);
    let scan = coupling_scan(&ctx.potential, &ts, ctx.grid, &ctx.eigen_options(1)).map_err(
        |e| match e {
            dtl_core::DtlError::Precondition(m) => CliError::Config(m),
            e => e.into(),
        },
    )?;
    let i = scan.argmin();
    let min = &scan.points[i];
    let converged = scan.points.iter().all(|p| p.converged);
    let checks = vec![
        Check::at_most(
            &format!("minimum at t={}", min.t),
            min.lambda_min,
            cfg.tol("lambda_min"),
        ),
        Check::new(
            "isolated minimum",
            scan.has_isolated_minimum(),
            format!("argmin t={}", min.t),
        ),
        Check::new(
            "converged",
            converged,
            format!("{} couplings", scan.points.len()),
        ),
    ];
    Ok(Outcome {
        checks,
        converged,
        result: to_json(&scan),
        csv: scan.csv(),
    })
}

fn potential_info(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let class = classify_decay_default(&ctx.potential)?;
    let c = cfg.params.bound_constant.unwrap_or(1.0);
    let bound = kernel_dim_bound(&ctx.potential, c).ok();
    let checks = vec![Check::new(
        "decay classified",
        class.rho_fit.is_finite(),
        format!(
            "rho_fit {:.3}, SU {}, BE {}, E {}",
            class.rho_fit, class.in_su, class.in_be, class.in_e
        ),
    )];
    let result = json!({
        "label": ctx.potential.label(),
        "decay": class,
        "kernel_dim_bound": bound,
        "bound_constant": c,
    });
    let csv = format!(
        "label,rho_fit,in_su,in_be,in_e,cubic_integral\n\"{}\",{},{},{},{},{:e}\n",
        ctx.potential.label(),
        class.rho_fit,
        class.in_su,
        class.in_be,
        class.in_e,
        class.cubic_integral
    );
    Ok(Outcome {
        checks,
        converged: true,
        result,
        csv,
    })
}
