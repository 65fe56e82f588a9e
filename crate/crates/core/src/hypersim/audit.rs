//! Checks of the functional chain `X' = Y`, `Y' ≥ …` on simulation output.

use serde::{Deserialize, Serialize};

use super::SimOutput;
use crate::error::{Error, Result};
use crate::weightfn::ball_integral;

/// Minimum number of pre-shock samples.
pub const MIN_SAMPLES: usize = 200;

/// Relative slack of the lower-bound sign check.
pub const LOWER_BOUND_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAudit {
    /// Samples in the audited window.
    pub samples: usize,
    /// The window is `[0, window_end]`, cut strictly before the shock time if one formed.
    pub window_end: f64,
    /// `max |X' - Y| / max |Y|` with `X'` from centred differences.
    pub x_residual: f64,
    /// `min (Y' - lower) / scale`; the bound holds when this is `≥ -LOWER_BOUND_TOL`.
    pub lower_margin: f64,
    /// `max |Y'|` over the window.
    pub scale: f64,
    pub lower_holds: bool,
    /// First sample time after which `X` stays positive.
    pub x_positive_from: Option<f64>,
    /// `X` is non-decreasing from `x_positive_from` on.
    pub x_increasing: bool,
}

/// Three-point derivative on a non-uniform grid (exact for quadratics).
fn centred(t: [f64; 3], f: [f64; 3]) -> f64 {
    let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

/// Audits the pre-shock part of `out`.
///
/// The lower bound is `X + ½X²/∫_{|y|≤r} F` for slab runs and `a²X` with
/// `a² = 1 + b0²` for plane runs, where `r = max(t + 1, measured support)`.
pub fn ode_chain_audit(out: &SimOutput) -> Result<ChainAudit> {
    let cut = out.primary_shock_time().unwrap_or(f64::INFINITY);
    let rows: Vec<_> = out.series.iter().filter(|r| r.t < cut).collect();
    if rows.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: rows.len(),
        });
    }
    let a2 = 1.0 + out.init.b0 * out.init.b0;
    let ymax = rows.iter().map(|r| r.y.abs()).fold(0.0, f64::max);
    let (mut xres, mut scale, mut worst) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut gaps = Vec::with_capacity(rows.len());
    for w in rows.windows(3) {
        let t = [w[0].t, w[1].t, w[2].t];
        let dx = centred(t, [w[0].x, w[1].x, w[2].x]);
        let dy = centred(t, [w[0].y, w[1].y, w[2].y]);
        xres = xres.max((dx - w[1].y).abs());
        scale = scale.max(dy.abs());
        let lower = if out.dim == 1 {
            let r = (w[1].t + 1.0).max(w[1].support);
            w[1].x + 0.5 * w[1].x * w[1].x / ball_integral(1, r)?
        } else {
            a2 * w[1].x
        };
        gaps.push(dy - lower);
    }
    for g in &gaps {
        worst = worst.min(*g);
    }
    let lower_margin = if scale > 0.0 { worst / scale } else { 0.0 };
    let x_residual = if xres == 0.0 { 0.0 } else { xres / ymax };

    let last_nonpos = rows.iter().rposition(|r| r.x <= 0.0);
    let from = match last_nonpos {
        None => Some(0),
        Some(k) if k + 1 < rows.len() => Some(k + 1),
        _ => None,
    };
    let x_increasing = from.is_some_and(|k| rows[k..].windows(2).all(|w| w[1].x >= w[0].x));

    Ok(ChainAudit {
        samples: rows.len(),
        window_end: rows.last().map_or(0.0, |r| r.t),
        x_residual,
        lower_margin,
        scale,
        lower_holds: lower_margin >= -LOWER_BOUND_TOL,
        x_positive_from: from.map(|k| rows[k].t),
        x_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersim::{run_slab_euler, InitData, RunOptions};

    #[test]
    fn centred_difference_is_exact_on_quadratics() {
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let t = [0.1, 0.25, 0.6];
        assert!((centred(t, t.map(f)) - (6.0 * 0.25 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn constant_state_has_zero_residuals() {
        let init = InitData::default().with_eps(0.0);
        let out = run_slab_euler(&init, 1, 128, &RunOptions::new(2.0, 0.005)).unwrap();
        let a = ode_chain_audit(&out).unwrap();
        assert_eq!((a.x_residual, a.lower_margin), (0.0, 0.0));
        assert!(a.lower_holds);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let init = InitData::default().with_eps(0.0);
        let out = run_slab_euler(&init, 1, 128, &RunOptions::new(1.0, 0.1)).unwrap();
        assert!(matches!(
            ode_chain_audit(&out),
            Err(Error::InsufficientData { .. })
        ));
    }
}
