//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the summary lines always reach stdout. Exits
//! non-zero when any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blowup_lab::expcli::{orchestrate, parse_config};
use blowup_lab::fieldlab::suite::{
    run_suite, CheckKind, SuiteConfig, CURL_WEIGHT_TOL, IDENTITY_TOL,
};
use blowup_lab::hypersim::plane::PlaneSolver;
use blowup_lab::hypersim::riemann::dam_break_check;
use blowup_lab::hypersim::{
    lifespan_experiment, ode_chain_audit, run_euler2d, run_mhd2d, run_slab_euler, DamBreak,
    InitData, Mhd2d, RunOptions,
};
use blowup_lab::ode::{
    change_of_variables_check, integrate, integrate_with, lifespan_sweep, sample_uniform_tau,
    weak_form_check, Dynamics, FitModel, IntegrateOptions, OdeParams, TauForcing, WeakFormInput,
};
use blowup_lab::weightfn::{envelope_bounds, growth_envelope, SphereQuadrature, TestFunction};
use blowup_lab::Exec;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Fourth-order central-difference Laplacian of `f`, independent of the analytic Hessian.
fn fd_laplacian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.len() {
        let at = |s: f64| {
            let mut y = x.to_vec();
            y[i] += s * h;
            f(&y)
        };
        sum += (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0))
            / (12.0 * h * h);
    }
    sum
}

fn test_function_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lap_worst, mut oracle_worst) = (0.0f64, 0.0f64);
    for n in 1..=3 {
        let tf = TestFunction::new(n).unwrap();
        let quad = SphereQuadrature::oracle(n).unwrap();
        for _ in 0..100 {
            // uniform in the ball of radius 10
            let x: Vec<f64> = loop {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
                if x.iter().map(|v| v * v).sum::<f64>() <= 100.0 {
                    break x;
                }
            };
            let f = tf.value(&x);
            let w = tf.weights(&x);
            let trace: f64 = (0..n).map(|i| w.hess[i][i]).sum();
            lap_worst = lap_worst
                .max(rel(trace, f))
                .max(rel(fd_laplacian(|y| tf.value(y), &x, 1e-3), f));
            oracle_worst = oracle_worst.max(rel(f, quad.exp_moment0(&x)));
            let g = quad.exp_moment1(&x);
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f);
            for i in 0..n {
                oracle_worst = oracle_worst.max((w.grad[i] - g[i]).abs() / scale);
            }
        }
    }

    let radii: Vec<f64> = (0..=500).map(|k| k as f64 * 0.1).collect();
    let b: Vec<_> = (1..=3)
        .map(|n| envelope_bounds(&growth_envelope(n, &radii).unwrap()))
        .collect();
    let envelope_ok = b[0].min >= 1.0 - 1e-12
        && b[0].max <= 2.0 + 1e-12
        && b[1].min > 0.0
        && b[1].max / b[1].min <= 4.0
        && b[2].min >= 2.0 * PI - 0.1
        && b[2].max <= 4.0 * PI + 0.1;
    outcome(
        lap_worst <= 1e-6 && oracle_worst <= 1e-10 && envelope_ok,
        format!(
            "|ΔF-F|/F {lap_worst:.1e}, oracle gap {oracle_worst:.1e}, envelopes n=1 [{:.3}, {:.3}] n=2 [{:.3}, {:.3}] n=3 [{:.3}, {:.3}]",
            b[0].min, b[0].max, b[1].min, b[1].max, b[2].min, b[2].max
        ),
    )
}

fn riccati_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut all = true;
    for tstar in [0.5, 1.0, 2.0] {
        let d = Dynamics::Riccati {
            x: 6.0 / (tstar * tstar),
            dx: 12.0 / (tstar * tstar * tstar),
        };
        match integrate_with(&d, &IntegrateOptions::new(10.0, 1e9)) {
            Ok(out) if out.blew_up => worst = worst.max((out.t_blow - tstar).abs()),
            _ => all = false,
        }
    }
    outcome(all && worst <= 1e-3, format!("max |T - T*| = {worst:.2e}"))
}

fn lifespan_scalings() -> Outcome {
    let sweep = |n: usize, eps: &[f64]| {
        let p = OdeParams {
            n,
            ..Default::default()
        };
        lifespan_sweep(
            &p,
            eps,
            &IntegrateOptions::default(),
            FitModel::for_dimension(n),
            Exec::default(),
        )
    };
    let small = [0.02, 0.03, 0.045, 0.065, 0.08, 0.1];
    let (f1, f2, f3) = (
        sweep(1, &small),
        sweep(2, &small),
        sweep(3, &[0.3, 0.4, 0.55, 0.75, 1.0, 1.5]),
    );
    match (f1, f2, f3) {
        (Ok(f1), Ok(f2), Ok(f3)) => outcome(
            (f1.slope + 1.0).abs() <= 0.15 && (f2.slope + 2.0).abs() <= 0.2 && f3.r_squared >= 0.98 && f3.slope > 0.0,
            format!(
                "n=1 exponent {:.3}, n=2 exponent {:.3}, n=3 ln T vs 1/eps slope {:.3} with R² {:.4}",
                f1.slope, f2.slope, f3.slope, f3.r_squared
            ),
        ),
        (a, b, c) => outcome(false, format!("sweep failed: {:?} {:?} {:?}", a.err(), b.err(), c.err())),
    }
}

fn weak_form_audit() -> Outcome {
    let forcing = TauForcing {
        wave_speed: 1.0,
        coupling: 1.0,
        domain_factor: 1.0,
        shift: 1.0,
        power: 1.0,
    };
    let (tt, panels) = (4.0, 4000);
    let z: Vec<f64> = (0..=panels)
        .map(|k| k as f64 * tt / panels as f64)
        .map(|t| t.sin() + 0.5 * t * t + 1.0)
        .collect();
    let synthetic = weak_form_check(&WeakFormInput {
        z,
        horizon: tt,
        forcing,
    })
    .unwrap();

    // live trajectory of the comparison equation, sampled on a uniform τ grid
    let params = OdeParams {
        n: 3,
        eps: 0.3,
        ..Default::default()
    };
    let (tau_end, panels) = (6.0, 4000);
    let z = sample_uniform_tau(&params, tau_end, panels).unwrap();
    let live = weak_form_check(&WeakFormInput {
        z,
        horizon: tau_end,
        forcing: TauForcing::from_params(&params),
    })
    .unwrap();

    let blow = OdeParams {
        n: 1,
        eps: 0.05,
        ..Default::default()
    };
    let cov = change_of_variables_check(&integrate(&blow, 1e4, 1e9).unwrap(), &blow).unwrap();

    let minus_exact = live.equation_residual <= 1e-3 && live.plus_variant_residual > 1e-2;
    outcome(
        synthetic.identity_residual <= 1e-6
            && live.identity_residual <= 1e-3
            && cov.max_relative_residual <= 1e-3
            && minus_exact,
        format!(
            "synthetic {:.1e}, trajectory parts {:.1e} / equation {:.1e} with e^-τ vs {:.1e} with e^+τ, substitution {:.1e}",
            synthetic.identity_residual,
            live.identity_residual,
            live.equation_residual,
            live.plus_variant_residual,
            cov.max_relative_residual
        ),
    )
}

fn identity_suite() -> Outcome {
    let report = match run_suite(&SuiteConfig::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("suite failed: {e}")),
    };
    let count = |name: &str| report.rows_named(name).count();
    let worst = |name: &str| report.rows_named(name).map(|r| r.value).fold(0.0, f64::max);
    let holder_ok = count("holder") == 50 && report.rows_named("holder").all(|r| r.pass);
    let curl = worst("curl-weight");
    let ids = ["grad-identity", "q-jk-identity", "q-ik-identity"];
    let id_worst = ids.iter().map(|n| worst(n)).fold(0.0, f64::max);
    let ids_ok = ids.iter().all(|n| count(n) == 10);
    let elastic_violations = report.rows_named("elastic").filter(|r| !r.pass).count();
    let claims = report.failures(CheckKind::Claim).len();
    outcome(
        holder_ok && count("curl-weight") == 10 && curl <= CURL_WEIGHT_TOL && ids_ok && id_worst <= IDENTITY_TOL
            && report.contracts_hold(),
        format!(
            "Hölder 50/50, curl term {curl:.1e}, identities {id_worst:.1e}, elastic inequality violated on {elastic_violations}/10 (findings: {claims} claim rows)"
        ),
    )
}

fn slab_solver() -> Outcome {
    let dam = dam_break_check(
        &DamBreak::new(2.0, 1.0).unwrap(),
        4096,
        0.5,
        Exec::default(),
    )
    .unwrap();
    let init = InitData::default().checked(1).unwrap();
    let mut residuals = Vec::new();
    let (mut lower_ok, mut mass_drift) = (true, dam.mass_drift);
    for cells in [2048, 4096, 8192] {
        let out = match run_slab_euler(&init, 1, cells, &RunOptions::new(2.0, 0.005)) {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("run at {cells} cells failed: {e}")),
        };
        let m0 = out.series[0].mass;
        mass_drift = out
            .series
            .iter()
            .map(|r| (r.mass - m0).abs() / m0)
            .fold(mass_drift, f64::max);
        let audit = ode_chain_audit(&out).unwrap();
        lower_ok &= audit.lower_holds;
        residuals.push(audit.x_residual);
    }
    let halving = residuals.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    outcome(
        dam.relative_l1 <= 0.02 && mass_drift <= 1e-12 && residuals[0] <= 1e-2 && halving && lower_ok,
        format!(
            "dam break L¹ {:.2e}, mass drift {mass_drift:.1e}, X'-Y residual {:.2e} / {:.2e} / {:.2e} at 2048/4096/8192, lower bound {}",
            dam.relative_l1,
            residuals[0],
            residuals[1],
            residuals[2],
            if lower_ok { "holds" } else { "violated" }
        ),
    )
}

fn shock_lifespan() -> Outcome {
    match lifespan_experiment(
        &InitData::default(),
        &[0.05, 0.1, 0.2, 0.4],
        1.25e-4,
        8.0,
        Exec::default(),
    ) {
        Ok(l) => {
            let shift = l.max_threshold_shift();
            let all_shifts = l.runs.iter().all(|r| r.threshold_shift().is_some());
            outcome(
                (l.fit.slope + 1.0).abs() <= 0.2
                    && shift <= 0.05
                    && all_shifts
                    && l.excluded.is_empty(),
                format!(
                    "exponent {:.3}, threshold shift {:.1}%",
                    l.fit.slope,
                    100.0 * shift
                ),
            )
        }
        Err(e) => outcome(false, format!("sweep failed: {e}")),
    }
}

fn mhd_invariants() -> Outcome {
    let n = 512;
    let opts = RunOptions::new(1.0, 0.005);

    // b = b0 ρ initially: b/ρ stays b0 pointwise
    let frozen = InitData {
        eps: 0.1,
        b0: 1.0,
        h_amp: -0.25,
        ..Default::default()
    };
    let hw = opts.half_width(&frozen, n);
    let state = blowup_lab::hypersim::plane::PlaneState::from_init(&frozen, n, hw).unwrap();
    let mut solver = PlaneSolver::new(Mhd2d, state, Exec::default());
    let (mut t, mut drift) = (0.0, 0.0f64);
    while t < opts.t_max {
        let dt = solver.stable_dt().min(opts.t_max - t);
        if let Err(e) = solver.step(dt) {
            return outcome(false, format!("frozen-ratio run failed: {e}"));
        }
        t += dt;
        drift = drift.max(solver.state.ratio_drift(frozen.b0));
    }

    let compliant = InitData {
        eps: 0.1,
        b0: 1.0,
        h_amp: 0.5,
        ..Default::default()
    }
    .checked(2)
    .unwrap();
    let out = run_mhd2d(&compliant, n, &opts).unwrap();
    let min_ratio = out
        .series
        .iter()
        .filter_map(|r| r.min_b_over_rho)
        .fold(f64::INFINITY, f64::min);
    let audit = ode_chain_audit(&out).unwrap();

    let plain = InitData {
        eps: 0.1,
        ..Default::default()
    };
    let (a, b) = (
        run_mhd2d(&plain, n, &opts).unwrap(),
        run_euler2d(&plain, n, &opts).unwrap(),
    );
    let bitwise = a.series.len() == b.series.len()
        && a.series.iter().zip(&b.series).all(|(p, q)| {
            [p.x, p.y, p.maxgrad, p.mass].map(f64::to_bits)
                == [q.x, q.y, q.maxgrad, q.mass].map(f64::to_bits)
        })
        && a.steps == b.steps;

    outcome(
        drift <= 1e-3 && min_ratio >= compliant.b0 - 1e-3 && bitwise && audit.lower_holds,
        format!(
            "frozen b/ρ drift {drift:.1e}, compliant min b/ρ {min_ratio:.6}, b0=0 vs Euler {}, Y' ≥ a²X margin {:+.3}",
            if bitwise { "bitwise equal" } else { "differs" },
            audit.lower_margin
        ),
    )
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let configs = [
        "kind = \"weightfn\"\n[weightfn]\nmode = \"envelope\"\nn = 2\nrmax = 20\nsteps = 200\n",
        "kind = \"ode\"\nseed = 3\n[ode]\nmode = \"sweep\"\nn = 2\neps = [0.02, 0.04, 0.06, 0.1]\n",
        "kind = \"verify\"\nseed = 11\n[verify]\nsuite = \"all\"\nresolution = 16\nfields = 2\nholder_fields = 3\n",
        "kind = \"sim\"\n[sim]\nsystem = \"slab-euler\"\neps = 0.1\ncells = 1024\ntmax = 1\n",
        "kind = \"sim\"\n[sim]\nsystem = \"mhd2d\"\neps = 0.1\nb0 = 1\nh_amp = 0.5\ncells = 64\ntmax = 0.25\n",
    ];
    let root = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for (k, text) in configs.iter().enumerate() {
        let cfg = parse_config(text).unwrap();
        let runs: Vec<_> = (0..2)
            .map(|rep| {
                let dir = root.path().join(format!("{k}-{rep}"));
                orchestrate(&cfg, text, &dir).unwrap();
                csv_bytes(&dir)
            })
            .collect();
        if runs[0].is_empty() || runs[0] != runs[1] {
            return outcome(
                false,
                format!("config {k} ({}) gave differing CSVs", cfg.kind.as_str()),
            );
        }
        compared += runs[0].len();
    }
    outcome(
        true,
        format!(
            "{compared} CSV files byte-identical across reruns of {} configs",
            configs.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 9] = [
        ("test-function properties", 5.0, test_function_properties),
        ("Riccati oracle", 1.0, riccati_oracle),
        ("comparison ODE lifespan scalings", 30.0, lifespan_scalings),
        ("weak form and change of variables", 5.0, weak_form_audit),
        ("integral identity suite", 600.0, identity_suite),
        ("slab Euler solver", 120.0, slab_solver),
        ("shock lifespan scaling", 300.0, shock_lifespan),
        ("MHD invariants", 600.0, mhd_invariants),
        ("reproducibility", f64::INFINITY, reproducibility),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let label = format!("{}", k + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| *f == label || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < *budget;
        let timing = if budget.is_finite() {
            format!("{secs:.1} s of {budget} s")
        } else {
            format!("{secs:.1} s")
        };
        println!(
            "criterion {label} {name}: {} ({timing}) {}",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
