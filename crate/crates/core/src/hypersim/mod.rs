//! Finite-volume simulations of slab-symmetric Euler and vertical-field 2D MHD.
//!
//! Both solvers use Rusanov fluxes on minmod-limited MUSCL states with two-stage
//! SSP Runge-Kutta stepping, and record the weighted functionals `X`, `Y` along the way.

pub mod audit;
pub mod lifespan;
pub mod plane;
pub mod riemann;
pub mod scheme;
pub mod slab;
pub mod snapshot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldlab::unit_bump;
use crate::weightfn::{radial_jet, sphere::GaussLegendre};

pub use audit::{ode_chain_audit, ChainAudit};
pub use lifespan::{lifespan_experiment, ShockLifespan, ShockRun};
pub use plane::{run_euler2d, run_mhd2d, Euler2d, Mhd2d, Physics};
pub use riemann::DamBreak;
pub use slab::{run_slab_euler, SlabState};

/// Courant number used by both solvers.
pub const CFL: f64 = 0.4;

/// Extra cells beyond the physical domain for the numerical tail of the disturbance,
/// which outruns the characteristics by a few cells per step at round-off amplitude.
pub const TAIL_CELLS: usize = 16;

/// Wave-speed safety factor in the domain size `L = 1 + 1.5 c_max T_max`.
pub const DOMAIN_SAFETY: f64 = 1.5;

/// Smooth compactly supported initial data with amplitude `eps`.
///
/// With `β̂(x) = e·exp(1/(|x|²-1))` on the unit ball:
/// `ρ₀ = -rho_amp β̂`, `u₀ = vel_amp x β̂`, `w₀ = transverse_amp β̂` (slab only),
/// `h₀ = h_amp β̂` and `b = b0 + ε h₀` (MHD only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitData {
    pub eps: f64,
    pub rho_amp: f64,
    pub vel_amp: f64,
    #[serde(default)]
    pub transverse_amp: f64,
    #[serde(default)]
    pub b0: f64,
    #[serde(default)]
    pub h_amp: f64,
}

impl Default for InitData {
    fn default() -> Self {
        InitData {
            eps: 0.1,
            rho_amp: 0.25,
            vel_amp: 4.0,
            transverse_amp: 0.0,
            b0: 0.0,
            h_amp: 0.0,
        }
    }
}

/// Initial functionals on the exact radial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub x0: f64,
    pub y0: f64,
    /// Wave speed of the background state, `√(1 + b0²)`.
    pub a: f64,
    /// `a X(0) + Y(0)`, which must be positive for the blow-up argument.
    pub value: f64,
}

impl InitData {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let finite = [
            self.eps,
            self.rho_amp,
            self.vel_amp,
            self.transverse_amp,
            self.b0,
            self.h_amp,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            v.push("all amplitudes must be finite".to_string());
            return v;
        }
        if self.eps < 0.0 {
            v.push(format!("eps must be >= 0, got {}", self.eps));
        }
        if self.eps * self.rho_amp >= 0.5 {
            v.push(format!(
                "eps * rho_amp = {} must stay below 1/2 so that the density exceeds 1/2",
                self.eps * self.rho_amp
            ));
        }
        if self.b0 < 0.0 || self.b0 + self.eps * self.h_amp.min(0.0) < 0.0 {
            v.push(format!(
                "the field b0 + eps h0 must stay >= 0, got b0 = {} and h_amp = {}",
                self.b0, self.h_amp
            ));
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

    /// The MHD sign conditions `ρ₀ ≤ 0`, `h₀ ≥ 0`.
    pub fn mhd_signs_hold(&self) -> bool {
        self.rho_amp >= 0.0 && self.h_amp >= 0.0
    }

    pub fn rho(&self, r2: f64) -> f64 {
        1.0 - self.eps * self.rho_amp * unit_bump(r2)
    }

    /// Velocity divided by position: `u = (u/x) x`.
    pub fn vel_over_x(&self, r2: f64) -> f64 {
        self.eps * self.vel_amp * unit_bump(r2)
    }

    pub fn transverse(&self, r2: f64) -> f64 {
        self.eps * self.transverse_amp * unit_bump(r2)
    }

    pub fn b(&self, r2: f64) -> f64 {
        self.b0 + self.eps * self.h_amp * unit_bump(r2)
    }

    pub fn background_speed(&self) -> f64 {
        (1.0 + self.b0 * self.b0).sqrt()
    }

    /// Largest initial characteristic speed `|u| + c` (with `c² = ρ + b²/ρ`).
    pub fn max_wave_speed(&self) -> f64 {
        (0..=400)
            .map(|k| {
                let r = k as f64 / 400.0;
                let rho = self.rho(r * r);
                let b = self.b(r * r);
                (self.vel_over_x(r * r) * r).abs() + (rho + b * b / rho).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `X(0) = ∫F (ρ-1)` and `Y(0) = ∫ρ u·∇F` in dimension `dim` (1 = slab, 2 = plane),
    /// by Gauss-Legendre quadrature in the radius.
    pub fn positivity(&self, dim: usize) -> Result<Positivity> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Domain(format!(
                "simulation dimension must be 1 or 2, got {dim}"
            )));
        }
        let gl = GaussLegendre::new(24);
        let panels = 64;
        let (mut x0, mut y0) = (0.0, 0.0);
        for k in 0..panels {
            let a = k as f64 / panels as f64;
            let b = (k + 1) as f64 / panels as f64;
            x0 += gl.integrate(a, b, |r| {
                let jet = radial_jet(dim, r);
                shell(dim, r) * jet[0] * (self.rho(r * r) - 1.0)
            });
            y0 += gl.integrate(a, b, |r| {
                // u·∇F = (u/x) r · F'(r) and F'(r) = r h₁(r)
                let jet = radial_jet(dim, r);
                shell(dim, r) * self.rho(r * r) * self.vel_over_x(r * r) * r * r * jet[1]
            });
        }
        let a = self.background_speed();
        Ok(Positivity {
            x0,
            y0,
            a,
            value: a * x0 + y0,
        })
    }

    /// Validates the amplitudes and requires the positivity condition in dimension `dim`.
    pub fn checked(self, dim: usize) -> Result<Self> {
        self.validate()?;
        let p = self.positivity(dim)?;
        if p.value <= 0.0 {
            return Err(Error::Parameter(format!(
                "initial data fail the positivity condition: a X(0) + Y(0) = {:e}",
                p.value
            )));
        }
        if dim == 2 && !self.mhd_signs_hold() {
            return Err(Error::Parameter(
                "MHD data need rho_amp >= 0 and h_amp >= 0".into(),
            ));
        }
        Ok(self)
    }
}

/// Measure of the sphere of radius `r` in dimension `dim`.
fn shell(dim: usize, r: f64) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * std::f64::consts::PI * r
    }
}

/// One sampled time of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    /// Largest velocity gradient entry, by centred differences.
    pub maxgrad: f64,
    /// Largest density gradient entry.
    pub maxgrad_rho: f64,
    /// Smallest b/ρ (MHD runs only).
    #[serde(rename = "minBoverRho")]
    pub min_b_over_rho: Option<f64>,
    pub mass: f64,
    /// `∫ b` (MHD runs only).
    pub field_total: Option<f64>,
    /// Radius of the disturbance: the outermost cell deviating from the background.
    pub support: f64,
    /// `∫ F (ρ-1)²`
    pub weighted_sq: f64,
    /// Total variation of the Riemann invariants `v ± 2√ρ` (slab runs only).
    pub tv: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimEnd {
    Horizon,
    /// Stopped once every requested gradient factor was exceeded.
    Shock,
}

/// Result of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub init: InitData,
    pub dim: usize,
    pub cells: usize,
    pub half_width: f64,
    pub steps: usize,
    pub end: SimEnd,
    pub final_time: f64,
    pub series: Vec<SeriesRow>,
    /// Initial largest velocity gradient, the reference for the shock criterion.
    pub initial_grad: f64,
    /// `(factor, time)` for each gradient factor reached.
    pub shock_times: Vec<(f64, f64)>,
    /// First time the Riemann-invariant total variation rose [`scheme::TV_GROWTH`]
    /// above its running minimum (slab runs only).
    pub tv_onset: Option<f64>,
    pub positivity: Option<Positivity>,
    /// Final state, when requested in [`RunOptions::snapshot`].
    #[serde(skip)]
    pub snapshot: Option<snapshot::Snapshot>,
}

impl SimOutput {
    /// Time at which the velocity gradient first exceeded `factor` times its initial value.
    pub fn shock_time(&self, factor: f64) -> Option<f64> {
        self.shock_times
            .iter()
            .find(|(f, _)| *f == factor)
            .map(|&(_, t)| t)
    }

    /// Shock time for the primary factor [`scheme::SHOCK_FACTOR`].
    pub fn primary_shock_time(&self) -> Option<f64> {
        self.shock_time(scheme::SHOCK_FACTOR)
    }
}

/// Options shared by the slab and plane runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_max: f64,
    /// Spacing of recorded samples (the last sample is at the stopping time).
    pub output_interval: f64,
    pub shock_factors: Vec<f64>,
    pub stop_at_shock: bool,
    /// Keep the final state in [`SimOutput::snapshot`].
    pub snapshot: bool,
    pub exec: crate::Exec,
}

impl RunOptions {
    pub fn new(t_max: f64, output_interval: f64) -> Self {
        RunOptions {
            t_max,
            output_interval,
            shock_factors: vec![scheme::SHOCK_FACTOR, 2.0 * scheme::SHOCK_FACTOR],
            stop_at_shock: false,
            snapshot: false,
            exec: crate::Exec::default(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::Parameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.output_interval > 0.0 && self.output_interval <= self.t_max) {
            return Err(Error::Parameter(format!(
                "output interval must lie in (0, t_max], got {}",
                self.output_interval
            )));
        }
        if self.shock_factors.iter().any(|f| !(*f > 1.0)) {
            return Err(Error::Parameter("shock factors must exceed 1".into()));
        }
        Ok(())
    }

    /// Half-width `1 + 1.5 c_max T_max` of a domain that the disturbance cannot leave.
    pub fn physical_half_width(&self, init: &InitData) -> f64 {
        1.0 + DOMAIN_SAFETY * init.max_wave_speed() * self.t_max
    }

    /// [`Self::physical_half_width`] plus [`TAIL_CELLS`] cells of an `cells`-cell grid.
    pub fn half_width(&self, init: &InitData, cells: usize) -> f64 {
        let l0 = self.physical_half_width(init);
        if cells > 4 * TAIL_CELLS {
            l0 * cells as f64 / (cells - 2 * TAIL_CELLS) as f64
        } else {
            2.0 * l0
        }
    }
}
