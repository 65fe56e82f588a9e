//! Two-dimensional compressible flow on a square grid: isentropic Euler and
//! MHD with a vertical field `(0, 0, b)` and total pressure `(ρ² + b²)/2`.

use super::scheme::{
    compensated_sum, muscl, rusanov, Cons, GrowthTracker, Schedule, FLUSH, SUPPORT_TOL, VACUUM_RHO,
};
use super::snapshot::Snapshot;
use super::{InitData, RunOptions, SeriesRow, SimEnd, SimOutput, CFL};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::weightfn::TestFunction;

/// Flux and signal speed of a conservation law in `[ρ, ρu₁, ρu₂, q]`.
pub trait Physics: Sync + Send {
    fn flux(&self, u: &Cons, dir: usize) -> Cons;
    fn signal_speed(&self, u: &Cons, dir: usize) -> f64;
    /// Whether the fourth slot carries a field that is reported.
    fn has_field(&self) -> bool;
}

/// Isentropic Euler with `p = ρ²/2`; the fourth slot is unused.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euler2d;

/// Vertical-field MHD: `b` is transported like the density.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mhd2d;

impl Physics for Euler2d {
    fn flux(&self, u: &Cons, dir: usize) -> Cons {
        let v = u[1 + dir] / u[0];
        let p = 0.5 * u[0] * u[0];
        let mut f = [u[1 + dir], u[1] * v, u[2] * v, 0.0];
        f[1 + dir] += p;
        f
    }

    fn signal_speed(&self, u: &Cons, dir: usize) -> f64 {
        (u[1 + dir] / u[0]).abs() + u[0].sqrt()
    }

    fn has_field(&self) -> bool {
        false
    }
}

impl Physics for Mhd2d {
    fn flux(&self, u: &Cons, dir: usize) -> Cons {
        let v = u[1 + dir] / u[0];
        let p = 0.5 * (u[0] * u[0] + u[3] * u[3]);
        let mut f = [u[1 + dir], u[1] * v, u[2] * v, u[3] * v];
        f[1 + dir] += p;
        f
    }

    fn signal_speed(&self, u: &Cons, dir: usize) -> f64 {
        (u[1 + dir] / u[0]).abs() + (u[0] + u[3] * u[3] / u[0]).sqrt()
    }

    fn has_field(&self) -> bool {
        true
    }
}

/// Cell averages on the `N × N` grid of `[-L, L]²`, row-major with `y` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneState {
    pub n: usize,
    pub half_width: f64,
    pub u: Vec<Cons>,
}

impl PlaneState {
    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(f64, f64) -> Cons) -> Result<Self> {
        if n < 8 || !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Parameter(format!(
                "plane grid needs >= 8 cells per axis and a positive half-width, got {n}, {half_width}"
            )));
        }
        let mut s = PlaneState {
            n,
            half_width,
            u: vec![[0.0; 4]; n * n],
        };
        for i in 0..n {
            for j in 0..n {
                s.u[i * n + j] = f(s.coord(i), s.coord(j));
            }
        }
        Ok(s)
    }

    pub fn from_init(init: &InitData, n: usize, half_width: f64) -> Result<Self> {
        PlaneState::from_fn(n, half_width, |x, y| {
            let r2 = x * x + y * y;
            let rho = init.rho(r2);
            let s = init.vel_over_x(r2);
            [rho, rho * s * x, rho * s * y, init.b(r2)]
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.n as f64) * self.spacing()
    }

    pub fn mass(&self) -> f64 {
        compensated_sum(self.u.iter().map(|u| u[0])) * self.spacing().powi(2)
    }

    pub fn field_total(&self) -> f64 {
        compensated_sum(self.u.iter().map(|u| u[3])) * self.spacing().powi(2)
    }

    /// Smallest `b/ρ`.
    pub fn min_b_over_rho(&self) -> f64 {
        self.u
            .iter()
            .map(|u| u[3] / u[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|b/ρ - ratio|`.
    pub fn ratio_drift(&self, ratio: f64) -> f64 {
        self.u
            .iter()
            .map(|u| (u[3] / u[0] - ratio).abs())
            .fold(0.0, f64::max)
    }

    /// Largest neighbour-difference entry of `∇u` and of `∇ρ`.
    pub fn max_gradients(&self) -> (f64, f64) {
        let n = self.n;
        let vel: Vec<[f64; 3]> = self
            .u
            .iter()
            .map(|u| [u[1] / u[0], u[2] / u[0], u[0]])
            .collect();
        let (mut gv, mut gr) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let here = &vel[i * n + j];
                let nb = [
                    (i + 1 < n).then(|| i * n + n + j),
                    (j + 1 < n).then(|| i * n + j + 1),
                ];
                for other in nb.into_iter().flatten().map(|k| &vel[k]) {
                    gv = gv
                        .max((other[0] - here[0]).abs())
                        .max((other[1] - here[1]).abs());
                    gr = gr.max((other[2] - here[2]).abs());
                }
            }
        }
        let h = self.spacing();
        (gv / h, gr / h)
    }
}

/// Index box `[i0, i1] × [j0, j1]` of cells that can change in one step.
#[derive(Debug, Clone, Copy)]
struct Window {
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

#[derive(Debug, Clone)]
pub struct PlaneSolver<P: Physics> {
    pub physics: P,
    pub state: PlaneState,
    pub t: f64,
    pub steps: usize,
    far: Cons,
    exec: Exec,
    stage: Vec<Cons>,
    fx: Vec<Cons>,
    fy: Vec<Cons>,
}

impl<P: Physics> PlaneSolver<P> {
    /// The far-field state is read from the corner cell.
    pub fn new(physics: P, state: PlaneState, exec: Exec) -> Self {
        let far = state.u[0];
        let stage = state.u.clone();
        PlaneSolver {
            physics,
            state,
            t: 0.0,
            steps: 0,
            far,
            exec,
            stage,
            fx: Vec::new(),
            fy: Vec::new(),
        }
    }

    fn window(&self) -> Option<Window> {
        let n = self.state.n;
        let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
        for (k, u) in self.state.u.iter().enumerate() {
            if *u != self.far {
                let (i, j) = (k / n, k % n);
                i0 = i0.min(i);
                i1 = i1.max(i);
                j0 = j0.min(j);
                j1 = j1.max(j);
            }
        }
        if i0 == usize::MAX {
            return None;
        }
        Some(Window {
            i0: i0.saturating_sub(4),
            i1: (i1 + 4).min(n - 1),
            j0: j0.saturating_sub(4),
            j1: (j1 + 4).min(n - 1),
        })
    }

    pub fn stable_dt(&self) -> f64 {
        let (mut ax, mut ay) = (0.0f64, 0.0f64);
        match self.window() {
            Some(w) => {
                for i in w.i0..=w.i1 {
                    for u in &self.state.u[i * self.state.n + w.j0..=i * self.state.n + w.j1] {
                        ax = ax.max(self.physics.signal_speed(u, 0));
                        ay = ay.max(self.physics.signal_speed(u, 1));
                    }
                }
            }
            None => {
                ax = self.physics.signal_speed(&self.far, 0);
                ay = self.physics.signal_speed(&self.far, 1);
            }
        }
        CFL * self.state.spacing() / (ax + ay)
    }

    /// Face fluxes inside the window: `fx` on faces `(i-½, j)`, `fy` on faces `(i, j-½)`.
    fn compute_faces(&mut self, src_is_stage: bool, w: Window) {
        let n = self.state.n as isize;
        let src: &[Cons] = if src_is_stage {
            &self.stage
        } else {
            &self.state.u
        };
        let cell = |i: isize, j: isize| &src[(i.clamp(0, n - 1) * n + j.clamp(0, n - 1)) as usize];
        let (ni, nj) = (w.i1 - w.i0 + 1, w.j1 - w.j0 + 1);
        let phys = &self.physics;

        self.fx.clear();
        self.fx.resize((ni + 1) * nj, [0.0; 4]);
        self.exec.for_chunks_mut(&mut self.fx, nj, |r, row| {
            let i = (w.i0 + r) as isize;
            for (c, out) in row.iter_mut().enumerate() {
                let j = (w.j0 + c) as isize;
                let (l, rr) = muscl(cell(i - 2, j), cell(i - 1, j), cell(i, j), cell(i + 1, j));
                let s = phys.signal_speed(&l, 0).max(phys.signal_speed(&rr, 0));
                *out = rusanov(&l, &rr, &phys.flux(&l, 0), &phys.flux(&rr, 0), s);
            }
        });
        self.fy.clear();
        self.fy.resize(ni * (nj + 1), [0.0; 4]);
        self.exec.for_chunks_mut(&mut self.fy, nj + 1, |r, row| {
            let i = (w.i0 + r) as isize;
            for (c, out) in row.iter_mut().enumerate() {
                let j = (w.j0 + c) as isize;
                let (l, rr) = muscl(cell(i, j - 2), cell(i, j - 1), cell(i, j), cell(i, j + 1));
                let s = phys.signal_speed(&l, 1).max(phys.signal_speed(&rr, 1));
                *out = rusanov(&l, &rr, &phys.flux(&l, 1), &phys.flux(&rr, 1), s);
            }
        });
    }

    /// `dst = a·base + b·(src - λ ∇·F)` on the window rows, where `src` is the flux source.
    fn apply(&mut self, w: Window, lambda: f64, second: bool) -> Result<()> {
        let n = self.state.n;
        let nj = w.j1 - w.j0 + 1;
        let (fx, fy) = (&self.fx, &self.fy);
        let rows = w.i0 * n..(w.i1 + 1) * n;
        let (base, dst) = if second {
            (&self.stage[rows.clone()], &mut self.state.u[rows])
        } else {
            (&self.state.u[rows.clone()], &mut self.stage[rows])
        };
        self.exec.for_chunks_mut(dst, n, |r, row| {
            let brow = &base[r * n..(r + 1) * n];
            for c in 0..nj {
                let j = w.j0 + c;
                let (xm, xp) = (&fx[r * nj + c], &fx[(r + 1) * nj + c]);
                let (ym, yp) = (&fy[r * (nj + 1) + c], &fy[r * (nj + 1) + c + 1]);
                let out = &mut row[j];
                for k in 0..4 {
                    let div = (xp[k] - xm[k]) + (yp[k] - ym[k]);
                    if second {
                        // out holds uⁿ, base holds u⁽¹⁾
                        out[k] = 0.5 * out[k] + 0.5 * (brow[j][k] - lambda * div);
                    } else {
                        out[k] = brow[j][k] - lambda * div;
                    }
                }
                if second {
                    for m in &mut out[1..3] {
                        if m.abs() < FLUSH {
                            *m = 0.0;
                        }
                    }
                }
            }
        });
        let src = if second { &self.state.u } else { &self.stage };
        for i in w.i0..=w.i1 {
            for j in w.j0..=w.j1 {
                let u = &src[i * n + j];
                if !(u[0] > VACUUM_RHO) || !u.iter().all(|x| x.is_finite()) {
                    return Err(Error::Vacuum {
                        rho: u[0],
                        cell: i * n + j,
                        t: self.t,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let Some(w) = self.window() else {
            self.t += dt;
            self.steps += 1;
            return Ok(());
        };
        let lambda = dt / self.state.spacing();
        self.compute_faces(false, w);
        self.apply(w, lambda, false)?;
        self.compute_faces(true, w);
        self.apply(w, lambda, true)?;
        let n = self.state.n;
        let rows = w.i0 * n..(w.i1 + 1) * n;
        self.stage[rows.clone()].copy_from_slice(&self.state.u[rows]);
        self.t += dt;
        self.steps += 1;
        Ok(())
    }
}

/// Functional probe with `F = F₂` (the plane test function) and its gradient.
struct PlaneProbe {
    f: Vec<f64>,
    grad: Vec<[f64; 2]>,
    far: Cons,
    tol: f64,
    field: bool,
}

impl PlaneProbe {
    fn new(s: &PlaneState, far: Cons, dev0: f64, field: bool) -> Result<Self> {
        let tf = TestFunction::new(2)?;
        let n = s.n;
        let (mut f, mut grad) = (Vec::with_capacity(n * n), Vec::with_capacity(n * n));
        for i in 0..n {
            for j in 0..n {
                let w = tf.weights(&[s.coord(i), s.coord(j)]);
                f.push(w.f);
                grad.push([w.grad[0], w.grad[1]]);
            }
        }
        Ok(PlaneProbe {
            f,
            grad,
            far,
            tol: SUPPORT_TOL * dev0,
            field,
        })
    }

    fn deviation(&self, u: &Cons) -> f64 {
        (0..4).map(|k| (u[k] - self.far[k]).abs()).sum()
    }

    fn row(&self, s: &PlaneState, t: f64) -> SeriesRow {
        let a = s.spacing().powi(2);
        let x = compensated_sum(s.u.iter().zip(&self.f).map(|(u, f)| f * (u[0] - 1.0))) * a;
        let y = compensated_sum(
            s.u.iter()
                .zip(&self.grad)
                .map(|(u, g)| u[1] * g[0] + u[2] * g[1]),
        ) * a;
        let sq = compensated_sum(
            s.u.iter()
                .zip(&self.f)
                .map(|(u, f)| f * (u[0] - 1.0).powi(2)),
        ) * a;
        let (gv, gr) = s.max_gradients();
        let h = s.spacing();
        let mut support = 0.0f64;
        for i in 0..s.n {
            for j in 0..s.n {
                if self.deviation(&s.u[i * s.n + j]) > self.tol {
                    let r = s.coord(i).hypot(s.coord(j)) + h / std::f64::consts::SQRT_2;
                    support = support.max(r);
                }
            }
        }
        SeriesRow {
            t,
            x,
            y,
            maxgrad: gv,
            maxgrad_rho: gr,
            min_b_over_rho: self.field.then(|| s.min_b_over_rho()),
            mass: s.mass(),
            field_total: self.field.then(|| s.field_total()),
            support,
            weighted_sq: sq,
            tv: None,
        }
    }

    fn touches_boundary(&self, s: &PlaneState) -> bool {
        let n = s.n;
        self.tol > 0.0
            && (0..n).any(|k| {
                [
                    (0, k),
                    (1, k),
                    (n - 2, k),
                    (n - 1, k),
                    (k, 0),
                    (k, 1),
                    (k, n - 2),
                    (k, n - 1),
                ]
                .iter()
                .any(|&(i, j)| self.deviation(&s.u[i * n + j]) > self.tol)
            })
    }
}

/// Evolves `init` with `physics` on an `n × n` grid of `[-L, L]²`, `L = 1 + 1.5 c_max T_max`.
pub fn run_plane<P: Physics>(
    physics: P,
    init: &InitData,
    n: usize,
    opts: &RunOptions,
) -> Result<SimOutput> {
    init.validate()?;
    opts.validate()?;
    let half_width = opts.half_width(init, n);
    let mut state = PlaneState::from_init(init, n, half_width)?;
    let field = physics.has_field();
    if !field {
        for u in &mut state.u {
            u[3] = 0.0;
        }
    }
    let far = state.u[0];
    let dev0 = state
        .u
        .iter()
        .map(|u| (0..4).map(|k| (u[k] - far[k]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let probe = PlaneProbe::new(&state, far, dev0, field)?;
    let initial_grad = state.max_gradients().0;
    let mut tracker = GrowthTracker::new(initial_grad, &opts.shock_factors);
    let mut series = vec![probe.row(&state, 0.0)];
    let mut solver = PlaneSolver::new(physics, state, opts.exec);
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
        let stop = if opts.stop_at_shock || !opts.shock_factors.is_empty() {
            tracker.observe(t, solver.state.max_gradients().0);
            opts.stop_at_shock && tracker.all_crossed()
        } else {
            false
        };
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
        dim: 2,
        cells: n,
        half_width,
        steps: solver.steps,
        end,
        final_time: solver.t,
        series,
        initial_grad,
        shock_times: tracker.times(),
        tv_onset: None,
        positivity: init.positivity(2).ok(),
        snapshot: opts
            .snapshot
            .then(|| Snapshot::plane(&solver.state, solver.t)),
    })
}

/// MHD run with `b = b0 + ε h₀`.
pub fn run_mhd2d(init: &InitData, n: usize, opts: &RunOptions) -> Result<SimOutput> {
    run_plane(Mhd2d, init, n, opts)
}

/// Euler run; the field part of `init` is ignored.
pub fn run_euler2d(init: &InitData, n: usize, opts: &RunOptions) -> Result<SimOutput> {
    run_plane(Euler2d, init, n, opts)
}
