//! The comparison ODE and its blow-up time.
//!
//! The minimal dynamics saturating the comparison inequality is
//!
//! ```text
//! X'' = a² X + C X² / (D e^{a t} (t + R₀)^{(n-1)/2}),   X(0) = ε x₀,  X'(0) = 0
//! ```
//!
//! Integrating `X` directly is hopeless for long lifespans because the linear part
//! grows like `e^{at}`. The integrator therefore advances the scaled pair
//! `u = e^{-at} X`, `v = e^{-at} X'`, which obeys
//!
//! ```text
//! u' = v - a u,   v' = a² u - a v + C u² / (D (t + R₀)^{(n-1)/2})
//! ```
//!
//! and is bounded until the genuine (Riccati-type) singularity. The blow-up threshold
//! is applied to `u`: `X` itself crosses any fixed threshold through linear growth alone.

pub mod audit;
pub mod cutoff;
pub mod dopri;
pub mod fit;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use audit::{
    change_of_variables_check, sample_uniform_tau, weak_form_check, CovReport, TauForcing,
    WeakFormInput, WeakFormReport,
};
pub use cutoff::CutoffFunction;
pub use fit::{fit_lifespan, lifespan_sweep, FitModel, LifespanFit};

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_THRESHOLD: f64 = 1e9;
pub const DEFAULT_HORIZON: f64 = 1e8;
/// A step below `STEP_COLLAPSE * (t + 1)` marks the movable singularity.
pub const STEP_COLLAPSE: f64 = 1e-12;

/// Parameters of the comparison inequality and its initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    /// Decay dimension; the denominator power is (n-1)/2.
    pub n: usize,
    /// Nonlinearity constant C.
    pub coupling: f64,
    /// Shift R₀ in (t + R₀).
    pub shift: f64,
    /// Linear wave speed a (√(1+b₀²) for vertical-field MHD).
    pub wave_speed: f64,
    /// Bounded-domain factor |Ω| dividing the nonlinearity.
    pub domain_factor: f64,
    pub eps: f64,
    /// Shape constant: X(0) + X'(0) = ε x₀.
    pub x0: f64,
}

impl Default for OdeParams {
    fn default() -> Self {
        OdeParams {
            n: 3,
            coupling: 1.0,
            shift: 1.0,
            wave_speed: 1.0,
            domain_factor: 1.0,
            eps: 0.1,
            x0: 1.0,
        }
    }
}

impl OdeParams {
    /// Every violated precondition, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(1..=3).contains(&self.n) {
            v.push(format!("n must be 1..3, got {}", self.n));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            v.push(format!("C must be finite and >= 0, got {}", self.coupling));
        }
        if !(self.shift.is_finite() && self.shift >= 1.0) {
            v.push(format!("R0 must be >= 1, got {}", self.shift));
        }
        if !(self.wave_speed.is_finite() && self.wave_speed >= 1.0) {
            v.push(format!("a must be >= 1, got {}", self.wave_speed));
        }
        if !(self.domain_factor.is_finite() && self.domain_factor > 0.0) {
            v.push(format!(
                "domain factor must be > 0, got {}",
                self.domain_factor
            ));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            v.push(format!("eps must be > 0, got {}", self.eps));
        }
        if !(self.x0.is_finite() && self.x0 >= 0.0) {
            v.push(format!("x0 must be >= 0, got {}", self.x0));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(v.join("; ")))
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn decay_power(&self) -> f64 {
        0.5 * (self.n as f64 - 1.0)
    }

    fn system(&self) -> ScaledSystem {
        ScaledSystem {
            rate: self.wave_speed,
            linear: self.wave_speed * self.wave_speed,
            coupling: self.coupling,
            shift: self.shift,
            power: self.decay_power(),
            domain_factor: self.domain_factor,
        }
    }
}

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    Comparison(OdeParams),
    /// Pure Riccati `X'' = X²` with explicit initial data.
    Riccati {
        x: f64,
        dx: f64,
    },
}

impl Dynamics {
    fn system(&self) -> ScaledSystem {
        match self {
            Dynamics::Comparison(p) => p.system(),
            Dynamics::Riccati { .. } => ScaledSystem {
                rate: 0.0,
                linear: 0.0,
                coupling: 1.0,
                shift: 1.0,
                power: 0.0,
                domain_factor: 1.0,
            },
        }
    }

    fn initial(&self) -> [f64; 2] {
        match self {
            Dynamics::Comparison(p) => [p.eps * p.x0, 0.0],
            Dynamics::Riccati { x, dx } => [*x, *dx],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Dynamics::Comparison(p) => p.validate(),
            Dynamics::Riccati { x, dx } if x.is_finite() && dx.is_finite() => Ok(()),
            Dynamics::Riccati { .. } => Err(Error::Parameter("non-finite Riccati data".into())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ScaledSystem {
    rate: f64,
    linear: f64,
    coupling: f64,
    shift: f64,
    power: f64,
    domain_factor: f64,
}

impl ScaledSystem {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let decay = if self.power == 0.0 {
            1.0
        } else {
            (t + self.shift).powf(self.power)
        };
        [
            y[1] - self.rate * y[0],
            self.linear * y[0] - self.rate * y[1]
                + self.coupling * y[0] * y[0] / (self.domain_factor * decay),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Threshold exceeded and the step size collapsed.
    Threshold,
    /// Step size collapsed while the state was still below the threshold.
    StepCollapse,
    Horizon,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Threshold => "threshold",
            Termination::StepCollapse => "step-collapse",
            Termination::Horizon => "horizon",
        }
    }
}

/// One trajectory sample in scaled variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// e^{-at} X
    pub u: f64,
    /// e^{-at} X'
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupOutcome {
    pub blew_up: bool,
    /// Blow-up time, or the horizon when no blow-up occurred.
    pub t_blow: f64,
    pub reason: Termination,
    pub trajectory: Vec<Sample>,
    /// Exponential rate used to scale the samples.
    pub rate: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl BlowupOutcome {
    /// `X(t)` at sample `i` (infinite once e^{at} overflows).
    pub fn x(&self, i: usize) -> f64 {
        let s = &self.trajectory[i];
        (self.rate * s.t).exp() * s.u
    }

    pub fn dx(&self, i: usize) -> f64 {
        let s = &self.trajectory[i];
        (self.rate * s.t).exp() * s.v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub horizon: f64,
    pub threshold: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Record dense output at these increasing times instead of every accepted step.
    pub sample_times: Option<Vec<f64>>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            horizon: DEFAULT_HORIZON,
            threshold: DEFAULT_THRESHOLD,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            max_steps: 50_000_000,
            sample_times: None,
        }
    }
}

impl IntegrateOptions {
    pub fn new(horizon: f64, threshold: f64) -> Self {
        IntegrateOptions {
            horizon,
            threshold,
            ..Default::default()
        }
    }
}

/// Integrate the comparison ODE up to `horizon` and report blow-up.
pub fn integrate(params: &OdeParams, horizon: f64, threshold: f64) -> Result<BlowupOutcome> {
    integrate_with(
        &Dynamics::Comparison(*params),
        &IntegrateOptions::new(horizon, threshold),
    )
}

pub fn integrate_with(dynamics: &Dynamics, opts: &IntegrateOptions) -> Result<BlowupOutcome> {
    dynamics.validate()?;
    if !(opts.horizon.is_finite() && opts.horizon > 0.0) {
        return Err(Error::Parameter(format!(
            "horizon must be > 0, got {}",
            opts.horizon
        )));
    }
    let sys = dynamics.system();
    let f = |t: f64, y: &[f64; 2]| sys.rhs(t, y);
    let mut y = dynamics.initial();
    if !(opts.threshold > y[0]) {
        return Err(Error::Parameter(format!(
            "threshold {} must exceed the initial value {}",
            opts.threshold, y[0]
        )));
    }

    let mut t = 0.0;
    let mut fy = f(t, &y);
    let mut h = 1e-3_f64.min(opts.horizon);
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut trajectory = vec![Sample {
        t,
        u: y[0],
        v: y[1],
    }];
    let mut next_sample = 0usize;
    if let Some(ts) = &opts.sample_times {
        while next_sample < ts.len() && ts[next_sample] <= 0.0 {
            next_sample += 1;
        }
    }

    let finish = |blew_up, t_blow, reason, trajectory, steps, rejected| BlowupOutcome {
        blew_up,
        t_blow,
        reason,
        trajectory,
        rate: sys.rate,
        steps,
        rejected,
    };

    loop {
        if t >= opts.horizon {
            return Ok(finish(
                false,
                opts.horizon,
                Termination::Horizon,
                trajectory,
                steps,
                rejected,
            ));
        }
        if steps >= opts.max_steps {
            return Err(Error::NumericalFailure {
                t,
                reason: format!(
                    "step budget {} exhausted before the horizon {:e} with u = {:e}; lower the horizon or raise eps",
                    opts.max_steps, opts.horizon, y[0]
                ),
            });
        }
        h = h.min(opts.horizon - t);
        let trial = dopri::step(&f, t, &y, &fy, h, opts.rtol, opts.atol);
        let finite = trial.y1.iter().all(|v| v.is_finite()) && trial.err.is_finite();

        if finite && trial.err <= 1.0 {
            let t1 = if h == opts.horizon - t {
                opts.horizon
            } else {
                t + h
            };
            if let Some(ts) = &opts.sample_times {
                while next_sample < ts.len() && ts[next_sample] <= t1 {
                    let theta = (ts[next_sample] - t) / h;
                    let s = trial.interpolate(theta.clamp(0.0, 1.0));
                    trajectory.push(Sample {
                        t: ts[next_sample],
                        u: s[0],
                        v: s[1],
                    });
                    next_sample += 1;
                }
            } else {
                trajectory.push(Sample {
                    t: t1,
                    u: trial.y1[0],
                    v: trial.y1[1],
                });
            }
            t = t1;
            y = trial.y1;
            fy = trial.f1;
            steps += 1;
            h *= dopri::step_factor(trial.err);
        } else {
            rejected += 1;
            h *= if finite {
                dopri::step_factor(trial.err).min(1.0)
            } else {
                0.2
            };
        }

        if h < STEP_COLLAPSE * (t + 1.0) {
            if y[0] >= opts.threshold {
                let t_blow = refine_blowup_time(t, &y, &fy, h);
                return Ok(finish(
                    true,
                    t_blow,
                    Termination::Threshold,
                    trajectory,
                    steps,
                    rejected,
                ));
            }
            return Err(Error::NumericalFailure {
                t,
                reason: format!(
                    "step size collapsed to {h:e} with u = {:e} below threshold {:e}",
                    y[0], opts.threshold
                ),
            });
        }
    }
}

/// Near a quadratic singularity u ≈ K (T - t)^{-2}, so u^{-1/2} is linear in t and one
/// Newton step on it lands on T. The estimate is confined to the last attempted step.
fn refine_blowup_time(t: f64, y: &[f64; 2], fy: &[f64; 2], h_last: f64) -> f64 {
    let (u, du) = (y[0], fy[0]);
    if du <= 0.0 || !u.is_finite() {
        return t;
    }
    let dt = 2.0 * u / du;
    t + dt.clamp(0.0, h_last.max(STEP_COLLAPSE * (t + 1.0)) * 5.0)
}
