//! Dispatch of a validated config to the owning module, and persistence of its results.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use super::config::{ExperimentConfig, Job, SimRun};
use super::output::{
    fmt_f64, fmt_opt, overall, write_atomic, Contract, CsvTable, RunManifest, RunRecord,
};
use super::svg::{Plot, Series};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fieldlab::suite::{CheckKind, SuiteConfig};
use crate::fieldlab::{run_suite, Suite};
use crate::hypersim::audit::{LOWER_BOUND_TOL, MIN_SAMPLES};
use crate::hypersim::{
    lifespan_experiment, ode_chain_audit, run_mhd2d, run_slab_euler, InitData, RunOptions,
    SimOutput,
};
use crate::ode::{
    change_of_variables_check, fit_lifespan, integrate_with, Dynamics, FitModel, IntegrateOptions,
    LifespanFit, OdeParams,
};
use crate::weightfn::{ball_integral, eval_f, growth_envelope, slab_ball_integral};

/// Limit on `max |X' - Y| / max |Y|` in simulation audits.
pub const AUDIT_RESIDUAL_TOL: f64 = 1e-2;
/// Relative drift allowed for conserved totals.
pub const CONSERVATION_TOL: f64 = 1e-12;
/// Slack below `b0` allowed for `min b/ρ`.
pub const FIELD_RATIO_TOL: f64 = 1e-3;
/// Allowed relative shift between the shock times at the two gradient factors.
pub const THRESHOLD_SHIFT_TOL: f64 = 0.05;
/// Residual allowed in the change-of-variables check of an ODE trajectory.
pub const COV_TOL: f64 = 1e-3;

const SCHEME: &str =
    "finite volume, Rusanov flux, minmod MUSCL on conserved variables, SSP-RK2, CFL 0.4";

struct Sink<'a> {
    dir: &'a Path,
    record: &'a mut RunRecord,
}

impl Sink<'_> {
    fn file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.record.outputs.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        self.file(name, &table.to_bytes()?)
    }

    fn plot(&mut self, name: &str, plot: &Plot) -> Result<()> {
        self.file(name, plot.render().as_bytes())
    }
}

/// The CSV a weight-function job produces; also printed to stdout by the CLI.
pub fn weightfn_table(job: &Job) -> Result<CsvTable> {
    match job {
        Job::WeightfnEval { n, r } => {
            let mut t = CsvTable::new(&["r", "F", "ratio"]);
            let ratios = growth_envelope(*n, r)?;
            for (&r, ratio) in r.iter().zip(ratios) {
                t.push(vec![fmt_f64(r), fmt_f64(eval_f(*n, r)?), fmt_f64(ratio)]);
            }
            Ok(t)
        }
        Job::WeightfnBall { n, radius } => {
            let mut t = CsvTable::new(&["R", "ball", "slab_ball"]);
            for &r in radius {
                t.push(vec![
                    fmt_f64(r),
                    fmt_f64(ball_integral(*n, r)?),
                    fmt_f64(slab_ball_integral(*n, r)?),
                ]);
            }
            Ok(t)
        }
        Job::WeightfnEnvelope { n, rmax, steps } => {
            let radii = envelope_radii(*rmax, *steps);
            let ratios = growth_envelope(*n, &radii)?;
            let mut t = CsvTable::new(&["r", "F", "ratio"]);
            for (&r, ratio) in radii.iter().zip(ratios) {
                t.push(vec![fmt_f64(r), fmt_f64(eval_f(*n, r)?), fmt_f64(ratio)]);
            }
            Ok(t)
        }
        _ => Err(Error::Config("not a weight-function job".into())),
    }
}

fn envelope_radii(rmax: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| rmax * k as f64 / steps as f64)
        .collect()
}

fn weightfn(job: &Job, sink: &mut Sink) -> Result<()> {
    sink.csv("weightfn.csv", &weightfn_table(job)?)?;
    match job {
        Job::WeightfnEval { n, r } => {
            let min = r
                .iter()
                .map(|&r| eval_f(*n, r))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            sink.record.contracts.push(Contract::holds(
                "min F",
                min,
                min > 0.0 && min.is_finite(),
                "> 0",
            ));
        }
        Job::WeightfnBall { n, radius } => {
            let mut sorted = radius.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            let vals = sorted
                .iter()
                .map(|&r| ball_integral(*n, r))
                .collect::<Result<Vec<_>>>()?;
            let increasing = vals.windows(2).all(|w| w[1] > w[0]);
            sink.record.contracts.push(Contract::holds(
                "ball integral increasing",
                vals.len() as f64,
                increasing,
                "strictly increasing in R",
            ));
        }
        Job::WeightfnEnvelope { n, rmax, steps } => {
            let radii = envelope_radii(*rmax, *steps);
            let ratios = growth_envelope(*n, &radii)?;
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            sink.record.details = json!({ "min_ratio": lo, "max_ratio": hi });
            let pi = std::f64::consts::PI;
            sink.record.contracts.push(match n {
                1 => Contract::holds(
                    "envelope range",
                    hi,
                    lo >= 1.0 && hi <= 2.0,
                    "within [1, 2]",
                ),
                2 => Contract::at_most("envelope max/min", hi / lo, 4.0),
                _ => Contract::holds(
                    "envelope range",
                    hi,
                    lo >= 2.0 * pi - 0.1 && hi <= 4.0 * pi + 0.1,
                    "within [2pi - 0.1, 4pi + 0.1]",
                ),
            });
            let pts = radii.iter().copied().zip(ratios).collect();
            sink.plot(
                "envelope.svg",
                &Plot {
                    title: format!("growth envelope, n = {n}"),
                    x_label: "r".into(),
                    y_label: "F(r) (1+r)^((n-1)/2) e^-r".into(),
                    series: vec![Series::line("ratio", pts)],
                    ..Default::default()
                },
            )?;
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn fit_text(fit: &LifespanFit) -> String {
    let model = match fit.model {
        FitModel::Power => "power",
        FitModel::Exponential => "exp",
    };
    format!(
        "model = {model}\nslope = {}\nintercept = {}\nr_squared = {}\npoints = {}\n",
        fmt_f64(fit.slope),
        fmt_f64(fit.intercept),
        fmt_f64(fit.r_squared),
        fit.epsilons.len()
    )
}

fn lifespan_plot(fit: &LifespanFit, title: &str) -> Plot {
    let (lo, hi) = fit
        .epsilons
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    let grid: Vec<f64> = (0..=40)
        .map(|k| lo * (hi / lo).powf(k as f64 / 40.0))
        .collect();
    let measured: Vec<(f64, f64)> = fit
        .epsilons
        .iter()
        .copied()
        .zip(fit.lifespans.iter().copied())
        .collect();
    let (x_label, log_x, tx): (&str, bool, fn(f64) -> f64) = match fit.model {
        FitModel::Power => ("eps", true, |e| e),
        FitModel::Exponential => ("1/eps", false, |e| 1.0 / e),
    };
    Plot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "lifespan".into(),
        log_x,
        log_y: true,
        series: vec![
            Series::markers(
                "measured",
                measured.iter().map(|&(e, t)| (tx(e), t)).collect(),
            ),
            Series::line(
                &format!("fit, slope {:.4}", fit.slope),
                grid.iter().map(|&e| (tx(e), fit.predict(e))).collect(),
            ),
        ],
    }
}

fn ode_run(params: &OdeParams, horizon: f64, threshold: f64, sink: &mut Sink) -> Result<()> {
    let out = integrate_with(
        &Dynamics::Comparison(*params),
        &IntegrateOptions::new(horizon, threshold),
    )?;
    let mut t = CsvTable::new(&["t", "X", "dX", "scaled_X", "scaled_dX"]);
    for (i, s) in out.trajectory.iter().enumerate() {
        t.push(vec![
            fmt_f64(s.t),
            fmt_f64(out.x(i)),
            fmt_f64(out.dx(i)),
            fmt_f64(s.u),
            fmt_f64(s.v),
        ]);
    }
    sink.csv("trajectory.csv", &t)?;
    sink.record.details = json!({
        "blew_up": out.blew_up,
        "t_blow": out.t_blow,
        "termination": out.reason.as_str(),
        "steps": out.steps,
        "rejected": out.rejected,
    });
    match change_of_variables_check(&out, params) {
        Ok(r) => sink.record.contracts.push(Contract::at_most(
            "change of variables residual",
            r.max_relative_residual,
            COV_TOL,
        )),
        Err(e) => sink
            .record
            .findings
            .push(format!("change of variables check skipped: {e}")),
    }
    let pts = (0..out.trajectory.len())
        .map(|i| (out.trajectory[i].t, out.x(i)))
        .collect();
    sink.plot(
        "trajectory.svg",
        &Plot {
            title: format!("comparison ODE, n = {}, eps = {}", params.n, params.eps),
            x_label: "t".into(),
            y_label: "X".into(),
            log_y: true,
            series: vec![Series::line("X", pts)],
            ..Default::default()
        },
    )
}

fn ode_sweep(
    template: &OdeParams,
    eps: &[f64],
    horizon: f64,
    threshold: f64,
    model: FitModel,
    exec: Exec,
    sink: &mut Sink,
) -> Result<()> {
    let opts = IntegrateOptions::new(horizon, threshold);
    let runs = exec.map_slice(eps, |&e| {
        integrate_with(&Dynamics::Comparison(template.with_eps(e)), &opts)
    });
    let mut t = CsvTable::new(&["eps", "T_blow", "termination"]);
    let (mut good_e, mut good_t, mut bad) = (Vec::new(), Vec::new(), Vec::new());
    for (&e, run) in eps.iter().zip(&runs) {
        match run {
            Ok(o) => {
                t.push(vec![
                    fmt_f64(e),
                    fmt_f64(o.t_blow),
                    o.reason.as_str().to_string(),
                ]);
                if o.blew_up {
                    good_e.push(e);
                    good_t.push(o.t_blow);
                } else {
                    bad.push(e);
                }
            }
            Err(err) => {
                t.push(vec![fmt_f64(e), String::new(), format!("error: {err}")]);
                bad.push(e);
            }
        }
    }
    sink.csv("lifespans.csv", &t)?;
    if !bad.is_empty() {
        return Err(Error::Sweep {
            eps: bad,
            reason: format!("no blow-up by t = {horizon} or integration failed"),
        });
    }
    let fit = fit_lifespan(&good_e, &good_t, model)?;
    sink.file("fit.txt", fit_text(&fit).as_bytes())?;
    sink.plot(
        "lifespan.svg",
        &lifespan_plot(
            &fit,
            &format!("comparison ODE lifespan, n = {}", template.n),
        ),
    )?;
    let mut order: Vec<usize> = (0..good_e.len()).collect();
    order.sort_by(|&a, &b| good_e[a].total_cmp(&good_e[b]));
    let worst_rise = order
        .windows(2)
        .map(|w| good_t[w[1]] - good_t[w[0]])
        .fold(f64::NEG_INFINITY, f64::max);
    sink.record.contracts.push(Contract::holds(
        "lifespan non-increasing in eps",
        worst_rise,
        worst_rise <= 0.0,
        "largest increase <= 0",
    ));
    sink.record.details = json!({ "fit": fit });
    Ok(())
}

fn verify(job: &Job, seed: u64, exec: Exec, sink: &mut Sink) -> Result<()> {
    let Job::Verify {
        suite,
        resolution,
        points,
        fields,
        holder_fields,
        lambda,
    } = job
    else {
        unreachable!()
    };
    let cfg = SuiteConfig {
        suite: *suite,
        resolution: *resolution,
        points: *points,
        seed,
        fields: *fields,
        holder_fields: *holder_fields,
        lambda: *lambda,
        exec,
    };
    let report = run_suite(&cfg)?;
    let mut t = CsvTable::new(&["check", "field", "resolution", "value", "pass", "kind"]);
    for r in &report.rows {
        let kind = match r.kind {
            CheckKind::Contract => "contract",
            CheckKind::Claim => "claim",
            CheckKind::Measurement => "measurement",
        };
        t.push(vec![
            r.check.clone(),
            r.field.to_string(),
            r.resolution.to_string(),
            fmt_f64(r.value),
            r.pass.to_string(),
            kind.into(),
        ]);
    }
    sink.csv("residuals.csv", &t)?;
    let failed = report.failures(CheckKind::Contract).len();
    sink.record.contracts.push(Contract::holds(
        "failed identity contracts",
        failed as f64,
        failed == 0,
        "0",
    ));
    for r in report.failures(CheckKind::Claim) {
        sink.record.findings.push(format!(
            "{} fails on field {} (value {:e})",
            r.check, r.field, r.value
        ));
    }
    sink.record.details = json!({
        "suite": match suite { Suite::Euler => "euler", Suite::Elastic => "elastic", Suite::All => "all" },
        "rows": report.rows.len(),
    });
    Ok(())
}

fn series_table(out: &SimOutput) -> CsvTable {
    let mut t = CsvTable::new(&[
        "t",
        "X",
        "Y",
        "maxgrad",
        "minBoverRho",
        "maxgrad_rho",
        "mass",
        "support",
    ]);
    for r in &out.series {
        t.push(vec![
            fmt_f64(r.t),
            fmt_f64(r.x),
            fmt_f64(r.y),
            fmt_f64(r.maxgrad),
            fmt_opt(r.min_b_over_rho),
            fmt_f64(r.maxgrad_rho),
            fmt_f64(r.mass),
            fmt_f64(r.support),
        ]);
    }
    t
}

fn drift(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let first = v.first().copied().unwrap_or(0.0);
    let worst = v.iter().map(|x| (x - first).abs()).fold(0.0, f64::max);
    if first == 0.0 {
        worst
    } else {
        worst / first.abs()
    }
}

fn sim(run: &SimRun, mhd: bool, exec: Exec, sink: &mut Sink) -> Result<()> {
    let mut opts = RunOptions::new(run.tmax, run.interval);
    opts.snapshot = run.snapshot;
    opts.exec = exec;
    let out = if mhd {
        run_mhd2d(&run.init, run.cells, &opts)?
    } else {
        run_slab_euler(&run.init, run.n, run.cells, &opts)?
    };
    sink.csv("series.csv", &series_table(&out))?;
    if let Some(snap) = &out.snapshot {
        sink.file("field.bin", &snap.to_bytes())?;
    }
    let trace = |f: fn(&crate::hypersim::SeriesRow) -> f64| {
        out.series.iter().map(|r| (r.t, f(r))).collect()
    };
    sink.plot(
        "traces.svg",
        &Plot {
            title: format!(
                "{} functionals, eps = {}",
                if mhd { "mhd2d" } else { "slab-euler" },
                run.init.eps
            ),
            x_label: "t".into(),
            y_label: "X, Y".into(),
            series: vec![
                Series::line("X", trace(|r| r.x)),
                Series::line("Y", trace(|r| r.y)),
            ],
            ..Default::default()
        },
    )?;

    let c = &mut sink.record.contracts;
    c.push(Contract::at_most(
        "mass drift",
        drift(out.series.iter().map(|r| r.mass)),
        CONSERVATION_TOL,
    ));
    if mhd {
        c.push(Contract::at_most(
            "field total drift",
            drift(out.series.iter().filter_map(|r| r.field_total)),
            CONSERVATION_TOL,
        ));
        let min_ratio = out
            .series
            .iter()
            .filter_map(|r| r.min_b_over_rho)
            .fold(f64::INFINITY, f64::min);
        c.push(Contract::at_least(
            "min b/rho",
            min_ratio,
            run.init.b0 - FIELD_RATIO_TOL,
        ));
    }
    let audit = if run.init.eps > 0.0 {
        Some(ode_chain_audit(&out))
    } else {
        None
    };
    match &audit {
        Some(Ok(a)) => {
            c.push(Contract::at_most(
                "X' - Y relative residual",
                a.x_residual,
                AUDIT_RESIDUAL_TOL,
            ));
            c.push(Contract::at_least(
                "lower bound margin",
                a.lower_margin,
                -LOWER_BOUND_TOL,
            ));
        }
        Some(Err(e)) => sink.record.findings.push(format!(
            "functional audit skipped (needs {MIN_SAMPLES} pre-shock samples): {e}"
        )),
        None => {}
    }
    let h = 2.0 * out.half_width / out.cells as f64;
    sink.record.details = json!({
        "system": if mhd { "mhd2d" } else { "slab-euler" },
        "scheme": SCHEME,
        "grid": { "cells": out.cells, "dimension": out.dim, "half_width": out.half_width, "spacing": h },
        "steps": out.steps,
        "end": out.end,
        "final_time": out.final_time,
        "initial_grad": out.initial_grad,
        "shock_times": out.shock_times,
        "tv_onset": out.tv_onset,
        "positivity": out.positivity,
        "audit": audit.and_then(|a| a.ok()),
        "snapshot_layout": if run.snapshot { Some("BLSNAP01 little-endian: magic, ndim, dims, components, spacing, half_width, time, row-major f64 body") } else { None },
    });
    Ok(())
}

fn slab_lifespan(
    template: &InitData,
    eps: &[f64],
    spacing: f64,
    tcap: f64,
    exec: Exec,
    sink: &mut Sink,
) -> Result<()> {
    let sweep = lifespan_experiment(template, eps, spacing, tcap, exec)?;
    let mut t = CsvTable::new(&[
        "eps",
        "cells",
        "steps",
        "shock_time",
        "shock_time_double",
        "threshold_shift",
        "tv_onset",
    ]);
    for r in &sweep.runs {
        t.push(vec![
            fmt_f64(r.eps),
            r.cells.to_string(),
            r.steps.to_string(),
            fmt_opt(r.shock_time),
            fmt_opt(r.shock_time_double),
            fmt_opt(r.threshold_shift()),
            fmt_opt(r.tv_onset),
        ]);
    }
    sink.csv("shock_times.csv", &t)?;
    sink.file("fit.txt", fit_text(&sweep.fit).as_bytes())?;
    sink.plot(
        "lifespan.svg",
        &lifespan_plot(&sweep.fit, "slab Euler shock time"),
    )?;
    sink.record.contracts.push(Contract::at_most(
        "threshold shift",
        sweep.max_threshold_shift(),
        THRESHOLD_SHIFT_TOL,
    ));
    if !sweep.excluded.is_empty() {
        sink.record.findings.push(format!(
            "no shock before t = {tcap} for eps = {:?}",
            sweep.excluded
        ));
    }
    sink.record.details = json!({ "fit": sweep.fit, "excluded": sweep.excluded, "spacing": spacing, "t_cap": tcap, "scheme": SCHEME });
    Ok(())
}

fn job_name(job: &Job) -> &'static str {
    match job {
        Job::WeightfnEval { .. } => "weightfn-eval",
        Job::WeightfnBall { .. } => "weightfn-ball",
        Job::WeightfnEnvelope { .. } => "weightfn-envelope",
        Job::OdeRun { .. } => "ode-run",
        Job::OdeSweep { .. } => "ode-sweep",
        Job::Verify { .. } => "verify",
        Job::SlabEuler(_) => "slab-euler",
        Job::Mhd2d(_) => "mhd2d",
        Job::SlabLifespan { .. } => "slab-lifespan",
    }
}

fn threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    1
}

/// Runs the experiment, writing every output and then `manifest.json` into `dir`.
///
/// Module failures are recorded in the manifest rather than returned; only failures to
/// create the directory or write the manifest are errors.
pub fn orchestrate(cfg: &ExperimentConfig, config_text: &str, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let start = Instant::now();
    let exec = Exec::Parallel;
    let mut record = RunRecord::new(job_name(&cfg.job));
    let mut sink = Sink {
        dir,
        record: &mut record,
    };
    let result = match &cfg.job {
        j
        @ (Job::WeightfnEval { .. } | Job::WeightfnBall { .. } | Job::WeightfnEnvelope { .. }) => {
            weightfn(j, &mut sink)
        }
        Job::OdeRun {
            params,
            horizon,
            threshold,
        } => ode_run(params, *horizon, *threshold, &mut sink),
        Job::OdeSweep {
            template,
            eps,
            horizon,
            threshold,
            fit,
        } => ode_sweep(template, eps, *horizon, *threshold, *fit, exec, &mut sink),
        j @ Job::Verify { .. } => verify(j, cfg.seed, exec, &mut sink),
        Job::SlabEuler(run) => sim(run, false, exec, &mut sink),
        Job::Mhd2d(run) => sim(run, true, exec, &mut sink),
        Job::SlabLifespan {
            template,
            eps,
            spacing,
            tcap,
        } => slab_lifespan(template, eps, *spacing, *tcap, exec, &mut sink),
    };
    match result {
        Ok(()) => record.settle(),
        Err(e) => record.fail(&e),
    }
    record.wall_clock_s = start.elapsed().as_secs_f64();
    let runs = vec![record];
    let status = overall(&runs);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        kind: cfg.kind.as_str().into(),
        seed: cfg.seed,
        threads: threads(),
        config_text: config_text.into(),
        config: serde_json::to_value(cfg)?,
        runs,
        status,
        exit_code: status.exit_code(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    manifest.write(dir)?;
    Ok(manifest)
}
