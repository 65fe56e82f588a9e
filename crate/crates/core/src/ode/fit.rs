//! Scaling-law fits of lifespan against amplitude.

use serde::{Deserialize, Serialize};

use super::{integrate_with, Dynamics, IntegrateOptions, OdeParams};
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// ln T = ln K + p ln ε
    Power,
    /// ln T = c + K / ε
    Exponential,
}

impl FitModel {
    /// Default model for each decay dimension.
    pub fn for_dimension(n: usize) -> FitModel {
        if n >= 3 {
            FitModel::Exponential
        } else {
            FitModel::Power
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanFit {
    pub epsilons: Vec<f64>,
    pub lifespans: Vec<f64>,
    pub model: FitModel,
    /// Power law: the exponent p. Exponential law: the coefficient K of 1/ε.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LifespanFit {
    pub fn predict(&self, eps: f64) -> f64 {
        match self.model {
            FitModel::Power => (self.intercept + self.slope * eps.ln()).exp(),
            FitModel::Exponential => (self.intercept + self.slope / eps).exp(),
        }
    }
}

/// Least-squares fit of `lifespans` against `epsilons`.
pub fn fit_lifespan(epsilons: &[f64], lifespans: &[f64], model: FitModel) -> Result<LifespanFit> {
    if epsilons.len() != lifespans.len() {
        return Err(Error::Parameter(format!(
            "{} epsilons but {} lifespans",
            epsilons.len(),
            lifespans.len()
        )));
    }
    if epsilons.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: epsilons.len(),
        });
    }
    if let Some(bad) = epsilons
        .iter()
        .chain(lifespans)
        .find(|v| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::Parameter(format!(
            "fit data must be positive and finite, got {bad}"
        )));
    }
    let xs: Vec<f64> = epsilons
        .iter()
        .map(|&e| match model {
            FitModel::Power => e.ln(),
            FitModel::Exponential => 1.0 / e,
        })
        .collect();
    let ys: Vec<f64> = lifespans.iter().map(|t| t.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("epsilons must not all coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LifespanFit {
        epsilons: epsilons.to_vec(),
        lifespans: lifespans.to_vec(),
        model,
        slope,
        intercept,
        r_squared,
    })
}

/// Run one integration per ε (possibly in parallel) and fit the lifespans.
///
/// Results are kept in input order regardless of execution mode.
pub fn lifespan_sweep(
    template: &OdeParams,
    epsilons: &[f64],
    opts: &IntegrateOptions,
    model: FitModel,
    exec: Exec,
) -> Result<LifespanFit> {
    if epsilons.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: epsilons.len(),
        });
    }
    let lo = epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = epsilons.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0 && hi >= 4.0 * lo) {
        return Err(Error::Parameter(format!(
            "epsilons must be positive and span a factor of 4, got [{lo}, {hi}]"
        )));
    }
    template.with_eps(lo).validate()?;
    let runs = exec.map_slice(epsilons, |&eps| {
        integrate_with(&Dynamics::Comparison(template.with_eps(eps)), opts)
    });
    let mut offending = Vec::new();
    let mut reasons = Vec::new();
    let mut lifespans = Vec::with_capacity(runs.len());
    for (&eps, run) in epsilons.iter().zip(runs) {
        match run {
            Ok(out) if out.blew_up => lifespans.push(out.t_blow),
            Ok(out) => {
                offending.push(eps);
                reasons.push(format!("eps={eps}: no blow-up by t={}", out.t_blow));
            }
            Err(e) => {
                offending.push(eps);
                reasons.push(format!("eps={eps}: {e}"));
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::Sweep {
            eps: offending,
            reason: reasons.join("; "),
        });
    }
    fit_lifespan(epsilons, &lifespans, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let eps = [0.1, 0.2, 0.4, 0.8];
        let t: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(-1.5)).collect();
        let f = fit_lifespan(&eps, &t, FitModel::Power).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.predict(0.3) - 3.0 * 0.3f64.powf(-1.5)).abs() < 1e-9);
    }

    #[test]
    fn recovers_exact_exponential_law() {
        let eps = [0.05, 0.1, 0.15, 0.2];
        let t: Vec<f64> = eps.iter().map(|e: &f64| (0.5 + 0.7 / e).exp()).collect();
        let f = fit_lifespan(&eps, &t, FitModel::Exponential).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-10);
        assert!((f.intercept - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_or_narrow_sweeps() {
        let p = OdeParams::default();
        let o = IntegrateOptions::default();
        assert!(matches!(
            lifespan_sweep(&p, &[0.1, 0.2, 0.3], &o, FitModel::Power, Exec::Sequential),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
        assert!(matches!(
            lifespan_sweep(
                &p,
                &[0.1, 0.2, 0.3, 0.35],
                &o,
                FitModel::Power,
                Exec::Sequential
            ),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn sweep_reports_runs_without_blowup() {
        let p = OdeParams {
            n: 1,
            ..Default::default()
        };
        let o = IntegrateOptions::new(50.0, 1e9);
        let eps = [0.02, 0.04, 0.08, 1.0];
        match lifespan_sweep(&p, &eps, &o, FitModel::Power, Exec::Sequential) {
            Err(Error::Sweep { eps, .. }) => assert_eq!(eps, vec![0.02, 0.04, 0.08]),
            other => panic!("expected sweep error, got {other:?}"),
        }
    }

    #[test]
    fn one_dimensional_exponent() {
        let p = OdeParams {
            n: 1,
            ..Default::default()
        };
        let eps = [0.02, 0.03, 0.045, 0.065, 0.1];
        let f = lifespan_sweep(
            &p,
            &eps,
            &IntegrateOptions::default(),
            FitModel::Power,
            Exec::default(),
        )
        .unwrap();
        assert!((f.slope + 1.0).abs() < 0.15, "exponent {}", f.slope);
        assert!(f.lifespans.windows(2).all(|w| w[1] <= w[0]));
    }
}
