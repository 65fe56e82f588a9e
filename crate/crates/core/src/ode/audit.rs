//! Numerical audit of the substitution `X = e^{at} Z`, `t + 1 = e^τ` and of the
//! cutoff-weighted integration by parts built on it.
//!
//! With that substitution the comparison equation becomes
//!
//! ```text
//! d/dτ(e^{-τ} Z_τ) + 2a Z_τ = C e^τ Z² / (D (e^τ - 1 + R₀)^{(n-1)/2})
//! ```
//!
//! Testing against φ(τ) = χ⁴(τ/T) and moving every derivative onto φ gives
//!
//! ```text
//! ∫ Z [e^{-τ}(φ'' - φ') - 2a φ'] dτ = Z_τ(0) + 2a Z(0) + ∫ φ · RHS dτ
//! ```
//!
//! The same computation with `e^{+τ}` in place of `e^{-τ}` is evaluated alongside so the
//! two readings of the operator can be told apart numerically.

use serde::{Deserialize, Serialize};

use super::cutoff::CutoffFunction;
use super::{integrate_with, BlowupOutcome, Dynamics, IntegrateOptions, OdeParams};
use crate::error::{Error, Result};

/// Finite-difference weights for derivatives 0..=m at `x0` on arbitrary nodes
/// (Fornberg's recursion). Returns `w[k][j]` for derivative k, node j.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivative at node `i` from a five-point stencil (shifted
/// inward at the ends). Differences are taken relative to the centre value so a
/// constant sequence differentiates to exactly zero.
fn derivs5(xs: &[f64], ys: &[f64], i: usize) -> [f64; 2] {
    let n = xs.len();
    let lo = i.saturating_sub(2).min(n - 5);
    let w = fornberg_weights(xs[i], &xs[lo..lo + 5], 2);
    let mut d = [0.0; 2];
    for j in 0..5 {
        let dy = ys[lo + j] - ys[i];
        d[0] += w[1][j] * dy;
        d[1] += w[2][j] * dy;
    }
    d
}

/// Composite Simpson rule on an even number of uniform panels.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n % 2 == 0);
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Right-hand side of the τ-form equation, as a function of (τ, Z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauForcing {
    pub wave_speed: f64,
    pub coupling: f64,
    pub domain_factor: f64,
    pub shift: f64,
    pub power: f64,
}

impl TauForcing {
    pub fn from_params(p: &OdeParams) -> Self {
        TauForcing {
            wave_speed: p.wave_speed,
            coupling: p.coupling,
            domain_factor: p.domain_factor,
            shift: p.shift,
            power: p.decay_power(),
        }
    }

    pub fn eval(&self, tau: f64, z: f64) -> f64 {
        let et = tau.exp();
        self.coupling * et * z * z / (self.domain_factor * (et - 1.0 + self.shift).powf(self.power))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovReport {
    pub samples: usize,
    /// Largest pointwise |residual|, relative to the peak over the trajectory of the
    /// summed term magnitudes (pointwise ratios are pure rounding where Z is flat).
    pub max_relative_residual: f64,
    pub worst_tau: f64,
}

/// Transform a trajectory to (τ, Z) and measure how well it satisfies the τ-form equation.
pub fn change_of_variables_check(outcome: &BlowupOutcome, params: &OdeParams) -> Result<CovReport> {
    // Drop the final samples where the singularity dominates the stencil.
    let traj: Vec<_> = outcome
        .trajectory
        .iter()
        .filter(|s| !outcome.blew_up || s.t <= outcome.t_blow * (1.0 - 1e-6))
        .collect();
    let usable = if outcome.blew_up {
        traj.len().saturating_sub(3)
    } else {
        traj.len()
    };
    if usable < 100 {
        return Err(Error::InsufficientData {
            needed: 100,
            got: usable,
        });
    }
    let taus: Vec<f64> = traj[..usable].iter().map(|s| s.t.ln_1p()).collect();
    let z: Vec<f64> = traj[..usable].iter().map(|s| s.u).collect();
    let forcing = TauForcing::from_params(params);
    let a = params.wave_speed;
    let mut residuals = Vec::with_capacity(usable);
    let mut peak_scale = 0.0_f64;
    for i in 2..usable - 2 {
        let [z1, z2] = derivs5(&taus, &z, i);
        let em = (-taus[i]).exp();
        let terms = [
            em * z2,
            -em * z1,
            2.0 * a * z1,
            -forcing.eval(taus[i], z[i]),
        ];
        residuals.push((terms.iter().sum::<f64>().abs(), taus[i]));
        peak_scale = peak_scale.max(terms.iter().map(|t| t.abs()).sum());
    }
    let (mut worst, mut worst_tau) = (0.0, 0.0);
    if peak_scale > 0.0 {
        for (r, tau) in residuals {
            if r / peak_scale > worst {
                worst = r / peak_scale;
                worst_tau = tau;
            }
        }
    }
    Ok(CovReport {
        samples: usable,
        max_relative_residual: worst,
        worst_tau,
    })
}

/// Z sampled on `panels + 1` uniform τ nodes over [0, horizon_tau] via dense output.
pub fn sample_uniform_tau(params: &OdeParams, horizon_tau: f64, panels: usize) -> Result<Vec<f64>> {
    let dtau = horizon_tau / panels as f64;
    let times: Vec<f64> = (0..=panels).map(|k| (k as f64 * dtau).exp_m1()).collect();
    let horizon = *times.last().unwrap();
    let opts = IntegrateOptions {
        horizon,
        sample_times: Some(times),
        ..Default::default()
    };
    let out = integrate_with(&Dynamics::Comparison(*params), &opts)?;
    if out.blew_up || out.trajectory.len() != panels + 1 {
        return Err(Error::Parameter(format!(
            "solution does not exist on [0, {horizon_tau}] in τ (blow-up at t = {})",
            out.t_blow
        )));
    }
    Ok(out.trajectory.iter().map(|s| s.u).collect())
}

/// Uniformly sampled Z on [0, T] together with the forcing it is tested against.
#[derive(Debug, Clone)]
pub struct WeakFormInput {
    pub z: Vec<f64>,
    pub horizon: f64,
    pub forcing: TauForcing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFormReport {
    /// ∫ Z [e^{-τ}(φ'' - φ') - 2aφ'].
    pub lhs: f64,
    /// Z_τ(0) + 2a Z(0) + ∫ φ L[Z], with L[Z] differentiated from the samples.
    pub rhs_operator: f64,
    /// Z_τ(0) + 2a Z(0) + ∫ φ · forcing(Z).
    pub rhs_equation: f64,
    /// |lhs - rhs_operator| relative to the larger side: the integration by parts itself.
    pub identity_residual: f64,
    /// |lhs - rhs_equation|, relative: Z solves the e^{-τ} equation.
    pub equation_residual: f64,
    /// Same as `equation_residual` with e^{+τ} in the operator.
    pub plus_variant_residual: f64,
    /// (∫ φ Z²)^{1/2}
    pub weighted_norm: f64,
    /// Exact Cauchy–Schwarz bound (∫ φ Z²)^{1/2} (∫ h²)^{1/2}.
    pub cauchy_schwarz_bound: f64,
    pub cauchy_schwarz_holds: bool,
    /// |lhs| / ((T^{-3/2} + T^{-1/2}) (∫ φ Z²)^{1/2})
    pub c_hat: f64,
    pub warnings: Vec<String>,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn weak_form_check(input: &WeakFormInput) -> Result<WeakFormReport> {
    let z = &input.z;
    let panels = z.len().saturating_sub(1);
    if panels < 8 || panels % 2 == 1 {
        return Err(Error::Parameter(format!(
            "need an even number (>= 8) of Simpson panels, got {panels}"
        )));
    }
    let tt = input.horizon;
    if !(tt.is_finite() && tt > 0.0) {
        return Err(Error::Parameter(format!("horizon must be > 0, got {tt}")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("Z samples must be finite".into()));
    }
    let h = tt / panels as f64;
    let taus: Vec<f64> = (0..=panels).map(|k| k as f64 * h).collect();
    let a = input.forcing.wave_speed;
    let chi = CutoffFunction;

    let m = panels + 1;
    let (mut lhs_i, mut plus_i, mut op_i, mut eq_i) =
        (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let (mut norm_i, mut h2_i) = (vec![0.0; m], vec![0.0; m]);
    let mut dz0 = 0.0;
    for k in 0..m {
        let tau = taus[k];
        let [phi, phi1, phi2] = chi.fourth_power_jet(tau, tt);
        let [c, c1, c2] = chi.jet(tau / tt);
        let (c1, c2) = (c1 / tt, c2 / (tt * tt));
        let em = (-tau).exp();
        let [z1, z2] = derivs5(&taus, z, k);
        if k == 0 {
            dz0 = z1;
        }
        lhs_i[k] = z[k] * (em * (phi2 - phi1) - 2.0 * a * phi1);
        plus_i[k] = z[k] * (tau.exp() * (phi2 + phi1) - 2.0 * a * phi1);
        op_i[k] = phi * (em * (z2 - z1) + 2.0 * a * z1);
        eq_i[k] = phi * input.forcing.eval(tau, z[k]);
        norm_i[k] = phi * z[k] * z[k];
        // lhs integrand divided by χ²
        let w = em * (12.0 * c1 * c1 + 4.0 * c * c2) - em * 4.0 * c * c1 - 8.0 * a * c * c1;
        h2_i[k] = w * w;
    }
    let boundary = dz0 + 2.0 * a * z[0];
    let lhs = simpson(&lhs_i, h);
    let lhs_plus = simpson(&plus_i, h);
    let rhs_operator = boundary + simpson(&op_i, h);
    let rhs_equation = boundary + simpson(&eq_i, h);
    let weighted_norm = simpson(&norm_i, h).max(0.0).sqrt();
    let cauchy_schwarz_bound = weighted_norm * simpson(&h2_i, h).max(0.0).sqrt();

    let mut warnings = Vec::new();
    // Simpson on every other node: disagreement flags an under-resolved integrand.
    if panels % 4 == 0 {
        let coarse: Vec<f64> = lhs_i.iter().step_by(2).cloned().collect();
        let gap = relative_gap(simpson(&coarse, 2.0 * h), lhs);
        if gap > 1e-6 {
            warnings.push(format!(
                "quadrature not converged: halving resolution moves lhs by {gap:.2e}"
            ));
        }
    }

    let decay = tt.powf(-1.5) + tt.powf(-0.5);
    Ok(WeakFormReport {
        lhs,
        rhs_operator,
        rhs_equation,
        identity_residual: relative_gap(lhs, rhs_operator),
        equation_residual: relative_gap(lhs, rhs_equation),
        plus_variant_residual: relative_gap(lhs_plus, rhs_equation),
        weighted_norm,
        cauchy_schwarz_bound,
        cauchy_schwarz_holds: lhs.abs() <= cauchy_schwarz_bound * (1.0 + 1e-12) + 1e-300,
        c_hat: if weighted_norm > 0.0 {
            lhs.abs() / (decay * weighted_norm)
        } else {
            0.0
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate, Sample, Termination};

    #[test]
    fn fornberg_matches_classic_stencils() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let d2 = [
            -1.0 / 12.0,
            16.0 / 12.0,
            -30.0 / 12.0,
            16.0 / 12.0,
            -1.0 / 12.0,
        ];
        for j in 0..5 {
            assert!((w[1][j] - d1[j]).abs() < 1e-14);
            assert!((w[2][j] - d2[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let h = 0.25;
        let v: Vec<f64> = (0..=8).map(|k| (k as f64 * h).powi(3)).collect();
        assert!((simpson(&v, h) - 4.0).abs() < 1e-14);
    }

    fn synthetic(z: Vec<f64>, tt: f64) -> WeakFormInput {
        WeakFormInput {
            z,
            horizon: tt,
            forcing: TauForcing {
                wave_speed: 1.0,
                coupling: 1.0,
                domain_factor: 1.0,
                shift: 1.0,
                power: 1.0,
            },
        }
    }

    #[test]
    fn zero_input_gives_zero_sides() {
        let r = weak_form_check(&synthetic(vec![0.0; 1001], 4.0)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs_operator, 0.0);
        assert_eq!(r.rhs_equation, 0.0);
        assert_eq!(r.identity_residual, 0.0);
    }

    #[test]
    fn constant_trajectory_has_zero_tau_derivative() {
        let traj: Vec<Sample> = (0..200)
            .map(|k| Sample {
                t: k as f64 * 0.05,
                u: 0.3,
                v: 0.3,
            })
            .collect();
        let out = BlowupOutcome {
            blew_up: false,
            t_blow: 10.0,
            reason: Termination::Horizon,
            trajectory: traj,
            rate: 1.0,
            steps: 199,
            rejected: 0,
        };
        let p = OdeParams {
            coupling: 0.0,
            ..Default::default()
        };
        let r = change_of_variables_check(&out, &p).unwrap();
        assert_eq!(r.max_relative_residual, 0.0);
        let taus: Vec<f64> = out.trajectory.iter().map(|s| s.t.ln_1p()).collect();
        let zs: Vec<f64> = out.trajectory.iter().map(|s| s.u).collect();
        for i in 0..taus.len() {
            assert_eq!(derivs5(&taus, &zs, i), [0.0, 0.0]);
        }
    }

    #[test]
    fn linear_trajectory_satisfies_transformed_equation() {
        let p = OdeParams {
            coupling: 0.0,
            ..Default::default()
        };
        let out = integrate(&p, 40.0, 1e9).unwrap();
        let r = change_of_variables_check(&out, &p).unwrap();
        assert!(r.max_relative_residual < 1e-6, "{r:?}");
    }

    #[test]
    fn too_few_samples() {
        let p = OdeParams {
            coupling: 0.0,
            ..Default::default()
        };
        let out = integrate(&p, 0.01, 1e9).unwrap();
        assert!(matches!(
            change_of_variables_check(&out, &p),
            Err(Error::InsufficientData { needed: 100, .. })
        ));
    }
}
