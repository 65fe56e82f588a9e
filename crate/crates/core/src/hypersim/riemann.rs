//! Exact dam-break solution for `p = ρ²/2`, which is shallow water with `g = 1`, `h = ρ`.
//!
//! A left rarefaction and a right shock separate the two still states; the middle depth
//! solves `2(c_L - c_m) = (h_m - h_R) √((h_m + h_R) / (2 h_m h_R))` with `c = √h`.

use serde::{Deserialize, Serialize};

use super::slab::{SlabSolver, SlabState};
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamBreak {
    pub rho_left: f64,
    pub rho_right: f64,
    pub rho_mid: f64,
    pub vel_mid: f64,
    pub shock_speed: f64,
}

impl DamBreak {
    pub fn new(rho_left: f64, rho_right: f64) -> Result<Self> {
        if !(rho_left > rho_right && rho_right > 0.0) {
            return Err(Error::Parameter(format!(
                "dam break needs rho_left > rho_right > 0, got {rho_left}, {rho_right}"
            )));
        }
        let cl = rho_left.sqrt();
        let g = |h: f64| {
            2.0 * (cl - h.sqrt())
                - (h - rho_right) * ((h + rho_right) / (2.0 * h * rho_right)).sqrt()
        };
        // g decreases from positive at rho_right to negative at rho_left
        let (mut a, mut b) = (rho_right, rho_left);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let hm = 0.5 * (a + b);
        let um = 2.0 * (cl - hm.sqrt());
        Ok(DamBreak {
            rho_left,
            rho_right,
            rho_mid: hm,
            vel_mid: um,
            shock_speed: hm * um / (hm - rho_right),
        })
    }

    /// `(ρ, v)` at position `x` and time `t > 0`, dam at the origin.
    pub fn state(&self, x: f64, t: f64) -> (f64, f64) {
        let cl = self.rho_left.sqrt();
        let xi = x / t;
        if xi < -cl {
            (self.rho_left, 0.0)
        } else if xi < self.vel_mid - self.rho_mid.sqrt() {
            let c = (2.0 * cl - xi) / 3.0;
            (c * c, 2.0 * (cl + xi) / 3.0)
        } else if xi < self.shock_speed {
            (self.rho_mid, self.vel_mid)
        } else {
            (self.rho_right, 0.0)
        }
    }

    /// Cell average of the exact density on `[a, b]` by 16-point midpoint subsampling.
    pub fn density_average(&self, a: f64, b: f64, t: f64) -> f64 {
        let k = 16;
        let h = (b - a) / k as f64;
        (0..k)
            .map(|j| self.state(a + (j as f64 + 0.5) * h, t).0)
            .sum::<f64>()
            / k as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamBreakReport {
    pub cells: usize,
    pub time: f64,
    /// `‖ρ_h - ρ‖₁ / ‖ρ‖₁` over `[-1, 1]`.
    pub relative_l1: f64,
    pub mass_drift: f64,
}

/// Runs the dam break on `[-1, 1]` and compares densities with the exact solution.
pub fn dam_break_check(
    exact: &DamBreak,
    cells: usize,
    time: f64,
    exec: Exec,
) -> Result<DamBreakReport> {
    let (l, r) = (exact.rho_left, exact.rho_right);
    let state = SlabState::from_fn(cells, 1.0, |y| [if y < 0.0 { l } else { r }, 0.0, 0.0, 0.0])?;
    let m0 = state.mass();
    let mut solver = SlabSolver::new(state, exec);
    solver.advance_to(time)?;
    let s = solver.state();
    let h = s.spacing();
    let (mut err, mut norm) = (0.0, 0.0);
    for (i, u) in s.u.iter().enumerate() {
        let c = s.center(i);
        let ex = exact.density_average(c - 0.5 * h, c + 0.5 * h, time);
        err += (u[0] - ex).abs() * h;
        norm += ex.abs() * h;
    }
    Ok(DamBreakReport {
        cells,
        time,
        relative_l1: err / norm,
        mass_drift: (s.mass() - m0).abs() / m0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn middle_state_satisfies_both_wave_curves() {
        let d = DamBreak::new(2.0, 1.0).unwrap();
        // Rankine-Hugoniot for mass and momentum across the shock
        let (hm, um, s) = (d.rho_mid, d.vel_mid, d.shock_speed);
        let mass = s * (hm - 1.0) - hm * um;
        let mom = s * hm * um - (hm * um * um + 0.5 * hm * hm - 0.5);
        assert!(mass.abs() < 1e-12 && mom.abs() < 1e-12, "{mass} {mom}");
        // Riemann invariant across the rarefaction
        assert!((um + 2.0 * hm.sqrt() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(hm > 1.0 && hm < 2.0);
    }

    #[test]
    fn profile_is_continuous_through_the_fan() {
        let d = DamBreak::new(2.0, 1.0).unwrap();
        let t = 0.5;
        let head = -(2f64.sqrt()) * t;
        let tail = (d.vel_mid - d.rho_mid.sqrt()) * t;
        assert!((d.state(head + 1e-12, t).0 - 2.0).abs() < 1e-9);
        assert!((d.state(tail - 1e-12, t).0 - d.rho_mid).abs() < 1e-9);
    }

    #[test]
    fn coarse_run_is_close() {
        let d = DamBreak::new(2.0, 1.0).unwrap();
        let rep = dam_break_check(&d, 512, 0.5, Exec::Sequential).unwrap();
        assert!(rep.relative_l1 < 0.02, "{rep:?}");
        assert!(rep.mass_drift < 1e-12, "{rep:?}");
    }
}
