//! Slab-symmetric Euler: density, slab momentum `ρv` and transverse momenta `ρw`
//! depending on `y` only, with pressure `ρ²/2`.

use super::scheme::{
    compensated_sum, minmod, Cons, GrowthTracker, RiseDetector, Schedule, FLUSH, SUPPORT_TOL,
    TV_GROWTH, VACUUM_RHO,
};
use super::snapshot::Snapshot;
use super::{InitData, RunOptions, SeriesRow, SimEnd, SimOutput, CFL, TAIL_CELLS};
use crate::error::{Error, Result};
use crate::exec::Exec;

const CHUNK: usize = 256;

/// Cell averages on the uniform grid of `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabState {
    pub half_width: f64,
    /// `[ρ, ρv, ρw₁, ρw₂]`; unused transverse slots stay zero.
    pub u: Vec<Cons>,
}

pub fn flux(u: &Cons) -> Cons {
    let v = u[1] / u[0];
    [u[1], u[1] * v + 0.5 * u[0] * u[0], u[2] * v, u[3] * v]
}

pub fn signal_speed(u: &Cons) -> f64 {
    (u[1] / u[0]).abs() + u[0].sqrt()
}

impl SlabState {
    pub fn from_fn(cells: usize, half_width: f64, f: impl Fn(f64) -> Cons) -> Result<Self> {
        if cells < 8 || !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Parameter(format!(
                "slab grid needs >= 8 cells and a positive half-width, got {cells}, {half_width}"
            )));
        }
        let mut s = SlabState {
            half_width,
            u: Vec::with_capacity(cells),
        };
        s.u.resize(cells, [0.0; 4]);
        for i in 0..cells {
            s.u[i] = f(s.center(i));
        }
        Ok(s)
    }

    /// Samples `init` at cell centres with `n - 1` transverse momentum components.
    pub fn from_init(init: &InitData, n: usize, cells: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Domain(format!("n must be 1..3, got {n}")));
        }
        SlabState::from_fn(cells, half_width, |y| {
            let r2 = y * y;
            let rho = init.rho(r2);
            let w = init.transverse(r2);
            let mut u = [rho, rho * init.vel_over_x(r2) * y, 0.0, 0.0];
            for slot in u.iter_mut().skip(2).take(n - 1) {
                *slot = rho * w;
            }
            u
        })
    }

    pub fn cells(&self) -> usize {
        self.u.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells() as f64
    }

    /// Cell centre, exactly antisymmetric under `i ↦ N-1-i`.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.cells() as f64) * self.spacing()
    }

    pub fn mass(&self) -> f64 {
        compensated_sum(self.u.iter().map(|u| u[0])) * self.spacing()
    }

    pub fn density(&self) -> Vec<f64> {
        self.u.iter().map(|u| u[0]).collect()
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.u[i][1] / self.u[i][0]
    }

    /// Largest neighbour-difference `|∂_y v|` and `|∂_y ρ|`.
    pub fn max_gradients(&self) -> (f64, f64) {
        self.max_gradients_in(0, self.cells() - 1)
    }

    /// [`Self::max_gradients`] restricted to cells `lo..=hi`.
    pub fn max_gradients_in(&self, lo: usize, hi: usize) -> (f64, f64) {
        let hi = hi.min(self.cells() - 1);
        let (mut dv, mut dr) = (0.0f64, 0.0f64);
        let mut v = self.velocity(lo);
        for i in lo..hi {
            let next = self.velocity(i + 1);
            dv = dv.max((next - v).abs());
            dr = dr.max((self.u[i + 1][0] - self.u[i][0]).abs());
            v = next;
        }
        (dv / self.spacing(), dr / self.spacing())
    }

    /// Total variation of the Riemann invariants `v ± 2√ρ`.
    pub fn riemann_tv(&self) -> f64 {
        self.riemann_tv_in(0, self.cells() - 1)
    }

    /// [`Self::riemann_tv`] over cells `lo..=hi`.
    pub fn riemann_tv_in(&self, lo: usize, hi: usize) -> f64 {
        self.monitor_in(lo, hi).tv
    }

    /// Gradient, variation and signal speed over cells `lo..=hi` in one pass.
    pub fn monitor_in(&self, lo: usize, hi: usize) -> Monitor {
        let inv = |u: &Cons| (u[1] / u[0], 2.0 * u[0].sqrt());
        let (mut v, mut c) = inv(&self.u[lo]);
        let (mut dv, mut tv, mut speed) = (0.0f64, 0.0, v.abs() + 0.5 * c);
        for u in &self.u[lo + 1..=hi] {
            let (vn, cn) = inv(u);
            dv = dv.max((vn - v).abs());
            tv += ((vn + cn) - (v + c)).abs() + ((vn - cn) - (v - c)).abs();
            speed = speed.max(vn.abs() + 0.5 * cn);
            (v, c) = (vn, cn);
        }
        Monitor {
            grad: dv / self.spacing(),
            tv,
            speed,
        }
    }

    fn deviation(u: &Cons, far: &Cons) -> f64 {
        (0..4).map(|k| (u[k] - far[k]).abs()).sum()
    }

    /// Outermost `|y|` (cell edge) where the state deviates from `far` by more than `tol`.
    pub fn support_radius(&self, far: &Cons, tol: f64) -> f64 {
        let h = self.spacing();
        (0..self.cells())
            .filter(|&i| Self::deviation(&self.u[i], far) > tol)
            .map(|i| self.center(i).abs() + 0.5 * h)
            .fold(0.0, f64::max)
    }
}

/// Per-step diagnostics of a slab state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    /// Largest neighbour difference of `v` over the spacing.
    pub grad: f64,
    /// Total variation of the Riemann invariants `v ± 2√ρ`.
    pub tv: f64,
    /// Largest `|v| + √ρ`.
    pub speed: f64,
}

/// Explicit second-order solver; cells whose whole stencil is constant are skipped,
/// which is exact because their update vanishes identically.
#[derive(Debug, Clone)]
pub struct SlabSolver {
    state: SlabState,
    pub t: f64,
    pub steps: usize,
    exec: Exec,
    stage: Vec<Cons>,
    components: usize,
    active: Option<(usize, usize)>,
    mirror: bool,
    diag: Monitor,
}

/// Reflection `y ↦ -y` of a cell state.
fn reflect(u: &Cons) -> Cons {
    // 0.0 - x keeps zero momenta positive zero
    [u[0], 0.0 - u[1], u[2], u[3]]
}

/// Cells within five of a differing neighbour pair among pairs `from..=to`.
fn find_window(u: &[Cons], from: usize, to: usize) -> Option<(usize, usize)> {
    let span = &u[from..=(to + 1).min(u.len() - 1)];
    let first = from + span.windows(2).position(|w| w[0] != w[1])?;
    let last = from + span.windows(2).rposition(|w| w[0] != w[1])? + 1;
    Some((first.saturating_sub(5), (last + 5).min(u.len() - 1)))
}

impl SlabSolver {
    pub fn new(state: SlabState, exec: Exec) -> Self {
        let stage = state.u.clone();
        let active = find_window(&state.u, 0, state.cells() - 2);
        // transverse momenta that start at zero stay exactly zero
        let components = if state.u.iter().all(|u| u[2] == 0.0 && u[3] == 0.0) {
            2
        } else {
            4
        };
        // bitwise mirror-symmetric data are advanced on the y > 0 half and reflected
        let n = state.cells();
        let mirror = n % 2 == 0 && (0..n / 2).all(|i| state.u[n - 1 - i] == reflect(&state.u[i]));
        let diag = Self::diagnose(&state, active, mirror);
        SlabSolver {
            state,
            t: 0.0,
            steps: 0,
            exec,
            stage,
            components,
            active,
            mirror,
            diag,
        }
    }

    /// Advances every cell even for mirror-symmetric data.
    pub fn without_mirror(mut self) -> Self {
        self.mirror = false;
        self.diag = Self::diagnose(&self.state, self.active, false);
        self
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirror
    }

    /// Cells the scheme actually updates.
    fn computed(&self, lo: usize, hi: usize) -> (usize, usize) {
        if self.mirror {
            (lo.max(self.state.cells() / 2), hi)
        } else {
            (lo, hi)
        }
    }

    fn reflect_into(u: &mut [Cons], lo: usize, hi: usize) {
        let n = u.len();
        for i in lo..=hi {
            u[n - 1 - i] = reflect(&u[i]);
        }
    }

    /// Diagnostics of the current state.
    pub fn monitor(&self) -> Monitor {
        self.diag
    }

    fn diagnose(state: &SlabState, active: Option<(usize, usize)>, mirror: bool) -> Monitor {
        let Some((lo, hi)) = active else {
            return Monitor {
                grad: 0.0,
                tv: 0.0,
                speed: signal_speed(&state.u[0]),
            };
        };
        if !mirror {
            return state.monitor_in(lo, hi);
        }
        let c = state.cells() / 2;
        let half = state.monitor_in(c - 1, hi);
        let centre = state.monitor_in(c - 1, c).tv;
        Monitor {
            tv: 2.0 * half.tv - centre,
            ..half
        }
    }

    pub fn state(&self) -> &SlabState {
        &self.state
    }

    /// Cells that can change in one two-stage step.
    pub fn window(&self) -> Option<(usize, usize)> {
        self.active
    }

    /// CFL-limited step over the active cells.
    pub fn stable_dt(&self) -> f64 {
        CFL * self.state.spacing() / self.diag.speed
    }

    /// One explicit stage over cells `clo..clo + dst.len()` with fluxes from `src`:
    /// `dst = src - λ Δf`, or `dst = ½ dst + ½ (src - λ Δf)` for the final stage.
    fn sweep<const K: usize>(
        exec: Exec,
        src: &[Cons],
        dst: &mut [Cons],
        clo: usize,
        lambda: f64,
        last: bool,
    ) {
        let n = src.len();
        if clo >= 2 && clo + dst.len() + 1 < n {
            Self::sweep_with::<K>(exec, dst, clo, lambda, last, |i| &src[i as usize]);
        } else {
            // transmissive ghosts
            Self::sweep_with::<K>(exec, dst, clo, lambda, last, |i| {
                &src[i.clamp(0, n as isize - 1) as usize]
            });
        }
    }

    fn sweep_with<'a, const K: usize>(
        exec: Exec,
        dst: &mut [Cons],
        clo: usize,
        lambda: f64,
        last: bool,
        cell: impl Fn(isize) -> &'a Cons + Sync + Send,
    ) {
        exec.for_chunks_mut(dst, CHUNK, |ci, chunk| {
            let c0 = (clo + ci * CHUNK) as isize;
            let len = chunk.len();
            // limited slopes of cells c0-1..=c0+len, then fluxes at faces c0..=c0+len
            let mut slopes = [[0.0; 4]; CHUNK + 2];
            for (k, out) in slopes[..len + 2].iter_mut().enumerate() {
                let i = c0 - 1 + k as isize;
                let (a, b, c) = (cell(i - 1), cell(i), cell(i + 1));
                for q in 0..K {
                    out[q] = minmod(b[q] - a[q], c[q] - b[q]);
                }
            }
            let mut faces = [[0.0; 4]; CHUNK + 1];
            for (f, out) in faces[..len + 1].iter_mut().enumerate() {
                let j = c0 + f as isize;
                let (b, c) = (cell(j - 1), cell(j));
                let (sb, sc) = (&slopes[f], &slopes[f + 1]);
                let (mut l, mut r) = ([0.0; 4], [0.0; 4]);
                for q in 0..K {
                    l[q] = b[q] + 0.5 * sb[q];
                    r[q] = c[q] - 0.5 * sc[q];
                }
                let (vl, vr) = (l[1] / l[0], r[1] / r[0]);
                let speed = (vl.abs() + l[0].sqrt()).max(vr.abs() + r[0].sqrt());
                let mut fl = [l[1], l[1] * vl + 0.5 * l[0] * l[0], 0.0, 0.0];
                let mut fr = [r[1], r[1] * vr + 0.5 * r[0] * r[0], 0.0, 0.0];
                for q in 2..K {
                    fl[q] = l[q] * vl;
                    fr[q] = r[q] * vr;
                }
                for q in 0..K {
                    out[q] = 0.5 * (fl[q] + fr[q]) - 0.5 * speed * (r[q] - l[q]);
                }
            }
            for (k, u) in chunk.iter_mut().enumerate() {
                let s = cell(c0 + k as isize);
                let (fm, fp) = (&faces[k], &faces[k + 1]);
                for q in 0..K {
                    let euler = s[q] - lambda * (fp[q] - fm[q]);
                    u[q] = if last {
                        0.5 * u[q] + 0.5 * euler
                    } else {
                        euler
                    };
                }
                if last {
                    for m in &mut u[1..K] {
                        if m.abs() < FLUSH {
                            *m = 0.0;
                        }
                    }
                }
            }
        });
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        if self.components == 2 {
            self.step_k::<2>(dt)
        } else {
            self.step_k::<4>(dt)
        }
    }

    /// `cell` of a stage with a non-positive or non-finite density, if any.
    fn vacuum_at(&self, cells: &[Cons], first: usize) -> Result<()> {
        match cells
            .iter()
            .position(|c| !(c[0] > VACUUM_RHO && c[0].is_finite() && c[1].is_finite()))
        {
            Some(k) => Err(Error::Vacuum {
                rho: cells[k][0],
                cell: first + k,
                t: self.t,
            }),
            None => Ok(()),
        }
    }

    fn step_k<const K: usize>(&mut self, dt: f64) -> Result<()> {
        let Some((lo, hi)) = self.window() else {
            self.t += dt;
            self.steps += 1;
            return Ok(());
        };
        let lambda = dt / self.state.spacing();
        let (clo, chi) = self.computed(lo, hi);

        Self::sweep::<K>(
            self.exec,
            &self.state.u,
            &mut self.stage[clo..=chi],
            clo,
            lambda,
            false,
        );
        self.vacuum_at(&self.stage[clo..=chi], clo)?;
        if self.mirror {
            Self::reflect_into(&mut self.stage, clo, chi);
        }
        Self::sweep::<K>(
            self.exec,
            &self.stage,
            &mut self.state.u[clo..=chi],
            clo,
            lambda,
            true,
        );
        let checked = self.vacuum_at(&self.state.u[clo..=chi], clo);
        if self.mirror {
            Self::reflect_into(&mut self.state.u, clo, chi);
        }
        // keep the stage buffer equal to the state outside the window
        self.stage[lo..=hi].copy_from_slice(&self.state.u[lo..=hi]);
        // only cells lo..=hi moved, so differing pairs start at lo - 1 at the earliest
        self.active = find_window(
            &self.state.u,
            lo.saturating_sub(1),
            hi.min(self.state.cells() - 2),
        );
        self.diag = Self::diagnose(&self.state, self.active, self.mirror);
        self.t += dt;
        self.steps += 1;
        checked
    }

    /// Steps to `t_end` exactly.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end {
            let dt = self.stable_dt().min(t_end - self.t);
            let last = self.t + dt >= t_end;
            self.step(dt)?;
            if last {
                self.t = t_end;
            }
        }
        Ok(())
    }
}

/// Weighted-functional probe with `F = e^y + e^{-y}` and `F' = e^y - e^{-y}`.
struct SlabProbe {
    f: Vec<f64>,
    df: Vec<f64>,
    far: Cons,
    tol: f64,
}

impl SlabProbe {
    fn new(s: &SlabState, far: Cons, dev0: f64) -> Self {
        let ys: Vec<f64> = (0..s.cells()).map(|i| s.center(i)).collect();
        SlabProbe {
            f: ys.iter().map(|y| 2.0 * y.cosh()).collect(),
            df: ys.iter().map(|y| 2.0 * y.sinh()).collect(),
            far,
            tol: SUPPORT_TOL * dev0,
        }
    }

    fn row(&self, s: &SlabState, t: f64) -> SeriesRow {
        let h = s.spacing();
        let x = compensated_sum(s.u.iter().zip(&self.f).map(|(u, f)| f * (u[0] - 1.0))) * h;
        let y = compensated_sum(s.u.iter().zip(&self.df).map(|(u, d)| d * u[1])) * h;
        let sq = compensated_sum(
            s.u.iter()
                .zip(&self.f)
                .map(|(u, f)| f * (u[0] - 1.0).powi(2)),
        ) * h;
        let (gv, gr) = s.max_gradients();
        SeriesRow {
            t,
            x,
            y,
            maxgrad: gv,
            maxgrad_rho: gr,
            min_b_over_rho: None,
            mass: s.mass(),
            field_total: None,
            support: s.support_radius(&self.far, self.tol),
            weighted_sq: sq,
            tv: Some(s.riemann_tv()),
        }
    }

    fn touches_boundary(&self, s: &SlabState) -> bool {
        let n = s.cells();
        self.tol > 0.0
            && [0, 1, n - 2, n - 1]
                .iter()
                .any(|&i| SlabState::deviation(&s.u[i], &self.far) > self.tol)
    }
}

/// Evolves smooth slab data with `n - 1` transverse momenta on `cells` cells of
/// `[-L, L]`, `L = 1 + 1.5 c_max T_max`, sampling the functionals every output interval.
pub fn run_slab_euler(
    init: &InitData,
    n: usize,
    cells: usize,
    opts: &RunOptions,
) -> Result<SimOutput> {
    init.validate()?;
    opts.validate()?;
    let half_width = opts.half_width(init, cells);
    let state = SlabState::from_init(init, n, cells, half_width)?;
    run_slab_state(init, state, opts)
}

/// [`run_slab_euler`] on a uniform grid of the given spacing.
pub fn run_slab_euler_spacing(
    init: &InitData,
    n: usize,
    spacing: f64,
    opts: &RunOptions,
) -> Result<SimOutput> {
    init.validate()?;
    opts.validate()?;
    // even, so that symmetric data can be advanced on one half
    let cells = 2 * ((opts.physical_half_width(init) / spacing).ceil() as usize + TAIL_CELLS);
    let half_width = 0.5 * cells as f64 * spacing;
    let state = SlabState::from_init(init, n, cells, half_width)?;
    run_slab_state(init, state, opts)
}

fn run_slab_state(init: &InitData, state: SlabState, opts: &RunOptions) -> Result<SimOutput> {
    let far: Cons = [1.0, 0.0, 0.0, 0.0];
    let dev0 = state
        .u
        .iter()
        .map(|u| SlabState::deviation(u, &far))
        .fold(0.0, f64::max);
    let probe = SlabProbe::new(&state, far, dev0);
    let (cells, half_width) = (state.cells(), state.half_width);
    let initial_grad = state.max_gradients().0;
    let tv0 = state.riemann_tv();
    let mut tracker = GrowthTracker::new(initial_grad, &opts.shock_factors);
    let mut tv_rise = RiseDetector::new(tv0, TV_GROWTH);
    let mut series = vec![probe.row(&state, 0.0)];
    let mut solver = SlabSolver::new(state, opts.exec);
    let mut schedule = Schedule::new(opts.output_interval, opts.t_max);
    let mut end = SimEnd::Horizon;

    while solver.t < opts.t_max {
        let (dt, hit) = schedule.clip(solver.t, solver.stable_dt());
        solver.step(dt)?;
        if hit {
            solver.t = schedule.target();
        }
        let t = solver.t;
        if probe.touches_boundary(&solver.state) {
            return Err(Error::BoundaryReached { t });
        }
        let m = solver.monitor();
        tracker.observe(t, m.grad);
        tv_rise.observe(t, m.tv);
        let stop = opts.stop_at_shock && tracker.all_crossed();
        if hit || stop {
            series.push(probe.row(&solver.state, t));
            schedule.advance();
        }
        if stop {
            end = SimEnd::Shock;
            break;
        }
    }

    Ok(SimOutput {
        init: *init,
        dim: 1,
        cells,
        half_width,
        steps: solver.steps,
        end,
        final_time: solver.t,
        series,
        initial_grad,
        shock_times: tracker.times(),
        tv_onset: tv_rise.onset(),
        positivity: init.positivity(1).ok(),
        snapshot: opts
            .snapshot
            .then(|| Snapshot::slab(&solver.state, solver.t)),
    })
}
