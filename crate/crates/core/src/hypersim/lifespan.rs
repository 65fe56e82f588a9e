//! Shock-formation time against amplitude for slab Euler.

use serde::{Deserialize, Serialize};

use super::scheme::SHOCK_FACTOR;
use super::slab::run_slab_euler_spacing;
use super::{InitData, RunOptions, SimEnd};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ode::{fit_lifespan, FitModel, LifespanFit};

/// One amplitude of a shock-time sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockRun {
    pub eps: f64,
    pub cells: usize,
    pub steps: usize,
    /// Time at which `max|∂_y v|` reached [`SHOCK_FACTOR`] times its initial value.
    pub shock_time: Option<f64>,
    /// Same with twice the factor.
    pub shock_time_double: Option<f64>,
    /// Growth onset of the Riemann-invariant total variation, a shock cross-check.
    pub tv_onset: Option<f64>,
}

impl ShockRun {
    /// `|T(2k) - T(k)| / T(k)`.
    pub fn threshold_shift(&self) -> Option<f64> {
        Some((self.shock_time_double? - self.shock_time?).abs() / self.shock_time?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockLifespan {
    pub runs: Vec<ShockRun>,
    /// Amplitudes with no shock before the cap.
    pub excluded: Vec<f64>,
    /// Power-law fit over the included amplitudes.
    pub fit: LifespanFit,
    pub spacing: f64,
    pub t_cap: f64,
}

impl ShockLifespan {
    pub fn max_threshold_shift(&self) -> f64 {
        self.runs
            .iter()
            .filter_map(ShockRun::threshold_shift)
            .fold(0.0, f64::max)
    }
}

/// Runs `template` at each amplitude on a grid of the given spacing until both gradient
/// factors are exceeded or `t_cap` passes, then fits `T = K ε^p`.
pub fn shock_run(
    template: &InitData,
    eps: f64,
    spacing: f64,
    t_cap: f64,
    exec: Exec,
) -> Result<ShockRun> {
    let mut opts = RunOptions::new(t_cap, t_cap / 16.0);
    opts.stop_at_shock = true;
    opts.exec = exec;
    let out = run_slab_euler_spacing(&template.with_eps(eps), 1, spacing, &opts)?;
    Ok(ShockRun {
        eps,
        cells: out.cells,
        steps: out.steps,
        shock_time: out.shock_time(SHOCK_FACTOR),
        shock_time_double: if out.end == SimEnd::Shock {
            out.shock_time(2.0 * SHOCK_FACTOR)
        } else {
            None
        },
        tv_onset: out.tv_onset,
    })
}

pub fn lifespan_experiment(
    template: &InitData,
    epsilons: &[f64],
    spacing: f64,
    t_cap: f64,
    exec: Exec,
) -> Result<ShockLifespan> {
    if epsilons.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: epsilons.len(),
        });
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Parameter(
            "shock sweeps need positive amplitudes".into(),
        ));
    }
    let runs: Vec<Result<ShockRun>> = exec.map_slice(epsilons, |&e| {
        shock_run(template, e, spacing, t_cap, Exec::Sequential)
    });
    let runs: Vec<ShockRun> = runs.into_iter().collect::<Result<_>>()?;
    let (mut eps, mut times, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for r in &runs {
        match r.shock_time {
            Some(t) => {
                eps.push(r.eps);
                times.push(t);
            }
            None => excluded.push(r.eps),
        }
    }
    if eps.len() < 4 {
        return Err(Error::Sweep {
            eps: excluded,
            reason: format!("no shock before t = {t_cap}"),
        });
    }
    let fit = fit_lifespan(&eps, &times, FitModel::Power)?;
    Ok(ShockLifespan {
        runs,
        excluded,
        fit,
        spacing,
        t_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_never_shocks() {
        let r = shock_run(&InitData::default(), 0.0, 0.05, 20.0, Exec::Sequential).unwrap();
        assert_eq!(r.shock_time, None);
    }

    #[test]
    fn larger_amplitude_shocks_sooner() {
        let t = |e| {
            shock_run(&InitData::default(), e, 1e-3, 4.0, Exec::Sequential)
                .unwrap()
                .shock_time
                .unwrap()
        };
        let (fast, slow) = (t(0.4), t(0.2));
        assert!(fast < slow && slow < 3.0 * fast, "{fast} {slow}");
    }
}
