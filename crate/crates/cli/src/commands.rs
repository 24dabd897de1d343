//! One pipeline per subcommand. Pipelines are pure: they return checks,
//! fitted values and artifact contents, and the runner writes them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use gcf_core::estimates::{
    bound_study, soliton_selfsimilarity_check, verify_gauss_bound, verify_lambda_bound, BoundReport, BoundWindow,
    Verdict,
};
use gcf_core::flow::{barrier_time, evolve, shrinking_ball_radius, FlowParams, StepControl};
use gcf_core::geometry::{inradius, AnisotropyField, GridSpec, SupportFunction};
use gcf_core::minkowski::{model_h, solve_profile_with, OdeParams, RadialProfile, DEFAULT_NODES};
use gcf_core::regularity::{build_glued_body, chou_wang_example, flat_part_measure_check, holder_exponent};

use crate::config::{RunConfig, Subcommand};
use crate::error::CliError;
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, format!("{value:.6e} <= {limit:.6e}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub fitted: BTreeMap<String, Value>,
    /// (file name, contents).
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn fit(&mut self, key: &str, v: impl Into<Value>) {
        self.fitted.insert(key.to_string(), v.into());
    }

    fn file(&mut self, name: &str, contents: String) {
        self.artifacts.push((name.to_string(), contents));
    }

    fn plot(&mut self, enabled: bool, name: &str, plot: Plot) {
        if enabled {
            self.file(name, plot.render());
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.subcommand {
        Subcommand::Flow => flow(cfg),
        Subcommand::Soliton => soliton(cfg),
        Subcommand::Bounds => bounds(cfg),
        Subcommand::Ode => ode(cfg),
        Subcommand::Holder => holder(cfg),
        Subcommand::Measure => measure(cfg),
        Subcommand::Sweep => Err(CliError::config("sweep is run by the sweep driver")),
    }
}

fn grid_for(n: usize, nodes: Option<usize>) -> Result<GridSpec, CliError> {
    let grid = match n {
        1 => GridSpec::circle(nodes.unwrap_or(256)),
        2 => GridSpec::axisymmetric(nodes.unwrap_or(129)),
        _ => return Err(CliError::config(format!("flow grids exist for n = 1, 2; got n = {n}"))),
    };
    grid.map_err(|e| CliError::config(e.to_string()))
}

/// `ball:R`, `ellipsoid:a,b` or `cosine:eps` (u = 1 + eps·cos of the grid angle).
fn parse_body(spec: &str, grid: GridSpec) -> Result<SupportFunction, CliError> {
    let bad = || CliError::config(format!("cannot parse body `{spec}`"));
    let (id, args) = spec.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match (id.trim(), nums.as_slice()) {
        ("ball", [r]) if *r > 0.0 => Ok(SupportFunction::ball(grid, *r)),
        ("ellipsoid", [a, b]) if *a > 0.0 && *b > 0.0 => Ok(SupportFunction::ellipsoid(grid, *a, *b)),
        ("cosine", [e]) if e.abs() < 1.0 => Ok(SupportFunction::from_fn(grid, |t| 1.0 + e * t.cos())?),
        _ => Err(bad()),
    }
}

fn parse_field(cfg: &RunConfig, default: &str) -> Result<AnisotropyField, CliError> {
    cfg.str_or("field", default)
        .parse()
        .map_err(|e: gcf_core::geometry::GeometryError| CliError::config(e.to_string()))
}

fn flow_params(n: usize, alpha: f64, field: AnisotropyField) -> Result<FlowParams, CliError> {
    FlowParams::new(n, alpha, field).map_err(|e| CliError::config(e.to_string()))
}

fn diagnostics_plot(traj: &gcf_core::flow::FlowTrajectory) -> Plot {
    let k: Vec<(f64, f64)> = traj.diagnostics.iter().filter(|d| d.t > 0.0).map(|d| (d.t, d.k_max)).collect();
    let l: Vec<(f64, f64)> = traj.diagnostics.iter().filter(|d| d.t > 0.0).map(|d| (d.t, d.lambda_max)).collect();
    Plot::new("curvature along the flow", "t", "curvature")
        .log_log()
        .with(Series::new("K_max", k))
        .with(Series::new("lambda_max", l))
}

fn flow(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.usize_or("n", 1)?;
    let alpha = cfg.alpha(1.0)?;
    let field = parse_field(cfg, "const:1")?;
    let grid = grid_for(n, cfg.opt("nodes")?)?;
    let body = cfg.str_or("body", "ball:1");
    let u0 = parse_body(body, grid)?;
    let params = flow_params(n, alpha, field.clone())?;
    let barrier = barrier_time(&params, u0.max_value());
    let control = StepControl {
        safety: cfg.f64_or("safety", 0.05)?,
        ..StepControl::new(cfg.f64_or("t_end", 1.05 * barrier)?)
            .with_snapshots(cfg.usize_or("snapshots", 100)?)
            .with_min_radius(1e-2 * inradius(&u0))
    };
    let traj = evolve(&u0, &params, &control)?;

    let mut out = Outcome::default();
    out.fit("barrier_time", barrier);
    out.fit("t_final", traj.t_final);
    out.fit("steps", traj.steps);
    out.fit("rejections", traj.rejections);
    out.fit("extinction_time", traj.extinction_time);
    let ext_tol = cfg.f64_or("extinction_tol", 1e-2)?;
    if let Some(t) = traj.extinction_time {
        // the enclosing ball is the body itself for round data, so allow the extrapolation error
        out.checks.push(Check::new(
            "extinction_before_barrier",
            t <= barrier * (1.0 + ext_tol),
            format!("T = {t:.6e}, barrier {barrier:.6e}"),
        ));
    }
    let diam: Vec<f64> = traj.diagnostics.iter().map(|d| d.diameter).collect();
    out.checks.push(Check::new(
        "diameter_nonincreasing",
        diam.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
        format!("{} snapshots", diam.len()),
    ));

    // round solution: closed-form radius and extinction time
    if let (Some(r), AnisotropyField::Constant(c)) = (body.strip_prefix("ball:"), &field) {
        let rho0: f64 = r.trim().parse().map_err(|_| CliError::config("bad ball radius"))?;
        let q = params.scaling_exponent();
        let t_exact = rho0.powf(q) / (q * c);
        out.fit("extinction_time_exact", t_exact);
        let mut err = 0.0f64;
        for s in traj.snapshots.iter().filter(|s| s.t <= 0.5 * t_exact) {
            let rho = shrinking_ball_radius(n, alpha, rho0, *c, s.t);
            err = err.max((s.u.max_value() - rho).abs() / rho);
        }
        out.fit("radius_max_relative_error", err);
        out.checks.push(Check::at_most("radius_matches_round_solution", err, cfg.f64_or("radius_tol", 1e-3)?));
        if let Some(t) = traj.extinction_time {
            let rel = (t - t_exact).abs() / t_exact;
            out.checks.push(Check::at_most("extinction_time_matches", rel, ext_tol));
        }
    }
    out.file("diagnostics.csv", traj.diagnostics_csv());
    if let Some(last) = traj.snapshots.last() {
        out.file("final_support.csv", last.u.to_csv());
    }
    out.plot(cfg.bool_or("plots", true)?, "curvature.svg", diagnostics_plot(&traj));
    Ok(out)
}

fn soliton(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.usize_or("n", 1)?;
    let alpha = cfg.alpha(1.0)?;
    let p = 1.0 - 1.0 / alpha;
    let grid = grid_for(n, cfg.opt("nodes")?)?;
    let default_body = if n == 1 { "cosine:0.2" } else { "ellipsoid:1,2" };
    let u0 = parse_body(cfg.str_or("body", default_body), grid)?;
    let q = n as f64 * alpha + 1.0;
    let control = StepControl::new(cfg.f64_or("t_end", 0.5 / q)?).with_snapshots(cfg.usize_or("snapshots", 200)?);
    let rep = soliton_selfsimilarity_check(&u0, p, &control)?;
    let mut out = Outcome::default();
    out.fit("p", rep.p);
    out.fit("alpha", rep.alpha);
    out.fit("t_end", rep.t_end);
    out.fit("max_deviation", rep.max_deviation);
    out.fit("max_relative_deviation", rep.max_relative_deviation);
    out.checks.push(Check::at_most(
        "homothetic_evolution",
        rep.max_relative_deviation,
        cfg.f64_or("deviation_tol", 1e-3)?,
    ));
    out.file("initial_support.csv", u0.to_csv());
    Ok(out)
}

fn series_csv(rep: &BoundReport) -> String {
    let mut s = String::from("t,q\n");
    for (t, q) in &rep.series {
        let _ = writeln!(s, "{t:.16e},{q:.16e}");
    }
    s
}

fn bounds(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.usize_or("n", 2)?;
    let alpha = cfg.alpha(0.5)?;
    let field = parse_field(cfg, "axial:1,0.1")?;
    let grid = grid_for(n, cfg.opt("nodes")?)?;
    let u0 = parse_body(cfg.str_or("body", "ellipsoid:1,2"), grid)?;
    let params = flow_params(n, alpha, field)?;
    let study = bound_study(&u0, &params, cfg.usize_or("snapshots", 200)?)?;
    let window = BoundWindow {
        ratio_cap: cfg.f64_or("ratio_cap", 10.0)?,
        ..BoundWindow::from_extinction(study.extinction_time)
    };
    let gauss = verify_gauss_bound(&study.trajectory, &params, window)?;
    let lambda = study
        .lambda
        .as_ref()
        .map(|_| verify_lambda_bound(&study.trajectory, &params, window))
        .transpose()?;

    let mut out = Outcome::default();
    out.fit("extinction_time", study.extinction_time);
    out.fit("barrier_time", study.barrier_time);
    let mut plot = Plot::new("normalized curvature series", "t", "q").log_log();
    for rep in std::iter::once(&gauss).chain(lambda.as_ref()) {
        let ratio = rep.sup_q / rep.median_q;
        out.fit(&format!("{}_ratio", rep.bound_id), ratio);
        out.fit(&format!("{}_exponent", rep.bound_id), rep.exponent);
        out.checks.push(Check::new(
            &format!("{}_bounded", rep.bound_id),
            rep.verdict == Verdict::Bounded,
            format!("sup/median = {ratio:.4} (cap {})", window.ratio_cap),
        ));
        out.file(&format!("{}_series.csv", rep.bound_id), series_csv(rep));
        plot = plot.with(Series::new(&rep.bound_id, rep.series.clone()));
    }
    out.file("diagnostics.csv", study.trajectory.diagnostics_csv());
    out.plot(cfg.bool_or("plots", true)?, "bounds.svg", plot);
    Ok(out)
}

fn ode_params(cfg: &RunConfig, default_p: f64) -> Result<OdeParams, CliError> {
    let n = cfg.usize_or("n", 2)?;
    OdeParams::new(n, cfg.ode_p(n, default_p)?).map_err(|e| CliError::config(e.to_string()))
}

fn solve(
    cfg: &RunConfig,
    params: &OdeParams,
    default_nodes: usize,
) -> Result<(RadialProfile, gcf_core::minkowski::ConvergenceLog), CliError> {
    Ok(solve_profile_with(
        params,
        cfg.f64_or("r0", 1.0)?,
        cfg.f64_or("tol", 1e-10)?,
        cfg.usize_or("nodes", default_nodes)?,
    )?)
}

/// The mesh r0·(j/J)^m spans m·log10(J) decades; take the smallest power of
/// two reaching 2.2 of them.
fn nodes_for_decades(m: f64) -> usize {
    let mut j = DEFAULT_NODES;
    while m * (j as f64).log10() < 2.2 && j < 1 << 20 {
        j *= 2;
    }
    j
}

fn ode(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = ode_params(cfg, 0.0)?;
    let (w, log) = solve(cfg, &params, DEFAULT_NODES)?;
    let ratios: Vec<Option<f64>> = log.accepted().iterations.iter().map(|i| i.ratio).collect();
    let max_ratio = log.max_ratio_after_second().unwrap_or(0.0);

    let mut out = Outcome::default();
    out.fit("m", params.m);
    out.fit("delta", params.delta);
    out.fit("r0", log.r0);
    out.fit("c0", log.c0);
    out.fit("certificate", log.certificate);
    out.fit("certificate_bound", log.certificate_bound);
    out.fit("ode_residual", log.ode_residual);
    out.fit("attempts", log.attempts.len());
    out.fit("contraction_ratios", json!(ratios));
    out.fit("max_ratio_after_second", max_ratio);
    out.checks.push(Check::at_most("contraction_ratios", max_ratio, 0.6));
    out.checks.push(Check::at_most("ode_residual", log.ode_residual, cfg.f64_or("residual_tol", 1e-6)?));
    out.checks.push(Check::at_most("certificate", log.certificate, log.certificate_bound));
    out.file("profile.csv", w.to_csv());
    out.file("convergence.json", log.to_json());
    let r = w.r();
    let plot = Plot::new("profile correction against the model", "r", "value")
        .log_log()
        .with(Series::new("h", r.iter().zip(&w.mesh.h).map(|(a, b)| (*a, *b)).collect()))
        .with(Series::new("|w|", r.iter().zip(&w.w).map(|(a, b)| (*a, b.abs())).collect()));
    out.plot(cfg.bool_or("plots", true)?, "profile.svg", plot);
    Ok(out)
}

fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count.max(2) - 1) as f64))
        .collect()
}

fn holder(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let source = cfg.str_or("source", "profile");
    let n = cfg.usize_or("n", 2)?;
    let mut out = Outcome::default();
    let (r, v_r, expected, default_tol) = match source {
        "profile" => {
            let params = ode_params(cfg, 0.5)?;
            let (w, log) = solve(cfg, &params, nodes_for_decades(params.m))?;
            out.fit("r0", log.r0);
            out.fit("m", params.m);
            let v_r: Vec<f64> = (0..w.len()).map(|j| w.mesh.h_r[j] + w.w_r[j]).collect();
            (w.r().to_vec(), v_r, 1.0 / params.m, 0.03)
        }
        "model" => {
            let m = cfg.f64_or("m", n as f64 + cfg.ode_p(n, 0.5)? - 1.0)?;
            let r = log_samples(cfg.f64_or("r_lo", 1e-6)?, cfg.f64_or("r_hi", 1e-1)?, cfg.usize_or("samples", 200)?);
            let v_r: Vec<f64> = r.iter().map(|&x| model_h(x, m).1).collect();
            out.fit("m", m);
            (r, v_r, 1.0 / m, 0.03)
        }
        "chou_wang" => {
            let p = cfg.ode_p(n, 2.0)?;
            let cw = chou_wang_example(n, p)?;
            let r = log_samples(cfg.f64_or("r_lo", 1e-4)?, cfg.f64_or("r_hi", 1e-1)?, cfg.usize_or("samples", 200)?);
            let v_r: Vec<f64> = r.iter().map(|&x| cw.v_bar(x).1).collect();
            out.fit("alpha", cw.alpha);
            (r, v_r, cw.beta - 1.0, 0.02)
        }
        other => return Err(CliError::config(format!("unknown holder source `{other}`"))),
    };
    let est = holder_exponent(&r, &v_r)?;
    let expected = cfg.f64_or("expect_slope", expected)?;
    out.fit("slope", est.slope);
    out.fit("expected_slope", expected);
    out.fit("k", est.k);
    out.fit("gamma", est.gamma);
    out.fit("class", est.class_label());
    out.fit("fit_residual", est.residual);
    out.checks.push(Check::at_most("slope", (est.slope - expected).abs(), cfg.f64_or("slope_tol", default_tol)?));
    out.checks.push(Check::at_most("fit_residual", est.residual, cfg.f64_or("residual_threshold", 1e-2)?));
    out.file("holder.json", est.to_json());
    let mut csv = String::from("r,v_r\n");
    for (a, b) in r.iter().zip(&v_r) {
        let _ = writeln!(csv, "{a:.16e},{b:.16e}");
    }
    out.file("samples.csv", csv);
    // fitted line through the geometric mean of the samples
    let mean = |v: &[f64]| v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64;
    let (lx, ly) = (mean(&r), mean(&v_r));
    let line: Vec<(f64, f64)> = [r[0], r[r.len() - 1]]
        .iter()
        .map(|&x| (x, (ly + est.slope * (x.ln() - lx)).exp()))
        .collect();
    let plot = Plot::new("derivative growth", "r", "v_r")
        .log_log()
        .with(Series::new("v_r", r.iter().copied().zip(v_r.iter().copied()).collect()))
        .with(Series::new(&format!("slope {:.4}", est.slope), line).dashed());
    out.plot(cfg.bool_or("plots", true)?, "holder.svg", plot);
    Ok(out)
}

fn measure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = ode_params(cfg, 0.5)?;
    if !(params.p < 1.0) {
        return Err(CliError::config(format!("measure needs p < 1, got {}", params.p)));
    }
    let (w, log) = solve(cfg, &params, DEFAULT_NODES)?;
    let body = build_glued_body(&w)?;
    let start = cfg.f64_or("cap_start", 0.2)?;
    let angles: Vec<f64> = (0..cfg.usize_or("cap_count", 12)?).map(|k| start * 0.5f64.powi(k as i32)).collect();
    let rep = flat_part_measure_check(&body, params.p, &angles)?;
    let density_err = body
        .recovered_density(params.p)
        .iter()
        .take(body.rho.len())
        .fold(0.0f64, |m, (_, f)| m.max((f - 1.0).abs()));

    let mut out = Outcome::default();
    out.fit("r0", log.r0);
    out.fit("total_mass", rep.total_mass);
    out.fit("final_fraction", rep.final_fraction);
    out.fit("annulus_density_error", density_err);
    out.checks.push(Check::new("normals_monotone", body.normal_angle_monotone(), "meridian normal angle".into()));
    out.checks.push(Check::new("cap_mass_decreasing", rep.decreasing, format!("{} caps", rep.caps.len())));
    out.checks.push(Check::at_most("cap_mass_vanishes", rep.final_fraction, cfg.f64_or("mass_fraction", 1e-6)?));
    out.checks.push(Check::at_most("annulus_density", density_err, cfg.f64_or("density_tol", 1e-6)?));
    out.file("meridian.csv", body.to_csv());
    let mut csv = String::from("angle,mass\n");
    for c in &rep.caps {
        let _ = writeln!(csv, "{:.16e},{:.16e}", c.angle, c.mass);
    }
    out.file("caps.csv", csv);
    out.file("flat_part.json", rep.to_json());
    let plot = Plot::new("cap mass around the flat side", "cap angle", "mass")
        .log_log()
        .with(Series::new("S_p mass", rep.caps.iter().map(|c| (c.angle, c.mass)).collect()));
    out.plot(cfg.bool_or("plots", true)?, "caps.svg", plot);
    Ok(out)
}
