//! Limiter, flux and bookkeeping shared by the slab and plane solvers.

/// State vector: density, two momentum slots and one extra slot
/// (transverse momentum for the slab, `b` for MHD).
pub type Cons = [f64; 4];

/// Velocity-gradient growth factor that defines the shock time.
pub const SHOCK_FACTOR: f64 = 20.0;

/// Rise of the Riemann-invariant total variation above its running minimum, relative
/// to the initial value, that marks a shock. Smooth flow only loses variation (by
/// numerical dissipation); a shock feeds a jump into the opposite invariant.
pub const TV_GROWTH: f64 = 1e-4;

/// Flags the first time a series rises by `growth · initial` above its running minimum.
#[derive(Debug, Clone)]
pub struct RiseDetector {
    margin: f64,
    min: f64,
    onset: Option<f64>,
}

impl RiseDetector {
    pub fn new(initial: f64, growth: f64) -> Self {
        RiseDetector {
            margin: growth * initial,
            min: initial,
            onset: None,
        }
    }

    pub fn observe(&mut self, t: f64, value: f64) {
        if self.onset.is_none() && self.margin > 0.0 {
            self.min = self.min.min(value);
            if value > self.min + self.margin {
                self.onset = Some(t);
            }
        }
    }

    pub fn onset(&self) -> Option<f64> {
        self.onset
    }
}

/// Momentum deviations below this are flushed to zero after each step, so numerical
/// tails end in exact zeros instead of subnormals.
pub const FLUSH: f64 = 1e-200;

/// Densities below this count as vacuum. The scheme keeps `ρ` positive even where
/// the exact solution cavitates, leaving a grid-dependent residue of order `1e-3`
/// or smaller, while admissible data never drop below `1/2` of the background.
pub const VACUUM_RHO: f64 = 1e-3;

/// Relative deviation (to the initial peak) that counts as part of the disturbance.
pub const SUPPORT_TOL: f64 = 1e-12;

pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Limited states on either side of the face `a b | c d`.
#[inline]
pub fn muscl(a: &Cons, b: &Cons, c: &Cons, d: &Cons) -> (Cons, Cons) {
    let mut l = *b;
    let mut r = *c;
    for k in 0..4 {
        l[k] += 0.5 * minmod(b[k] - a[k], c[k] - b[k]);
        r[k] -= 0.5 * minmod(c[k] - b[k], d[k] - c[k]);
    }
    (l, r)
}

/// Local Lax-Friedrichs flux from the two face states, their physical fluxes and
/// the larger of their signal speeds.
#[inline]
pub fn rusanov(ul: &Cons, ur: &Cons, fl: &Cons, fr: &Cons, speed: f64) -> Cons {
    let mut f = [0.0; 4];
    for k in 0..4 {
        f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * speed * (ur[k] - ul[k]);
    }
    f
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Records when a monitored quantity first exceeds each factor of its reference,
/// interpolating linearly in `1/g` between steps (exact for `g ∝ 1/(T-t)`).
#[derive(Debug, Clone)]
pub struct GrowthTracker {
    reference: f64,
    factors: Vec<f64>,
    crossed: Vec<Option<f64>>,
    last: Option<(f64, f64)>,
}

impl GrowthTracker {
    pub fn new(reference: f64, factors: &[f64]) -> Self {
        GrowthTracker {
            reference,
            factors: factors.to_vec(),
            crossed: vec![None; factors.len()],
            last: None,
        }
    }

    pub fn observe(&mut self, t: f64, g: f64) {
        if self.reference > 0.0 {
            for (f, slot) in self.factors.iter().zip(self.crossed.iter_mut()) {
                let thr = f * self.reference;
                if slot.is_some() || g < thr {
                    continue;
                }
                *slot = Some(match self.last {
                    Some((t0, g0)) if g0 < thr && g0 > 0.0 => {
                        let (a, b) = (1.0 / g0, 1.0 / g);
                        t0 + (t - t0) * (a - 1.0 / thr) / (a - b)
                    }
                    _ => t,
                });
            }
        }
        self.last = Some((t, g));
    }

    pub fn all_crossed(&self) -> bool {
        !self.factors.is_empty() && self.crossed.iter().all(Option::is_some)
    }

    pub fn times(&self) -> Vec<(f64, f64)> {
        self.factors
            .iter()
            .zip(&self.crossed)
            .filter_map(|(&f, t)| t.map(|t| (f, t)))
            .collect()
    }
}

/// Sample schedule `t_k = k Δ` with steps clipped to land on each sample time.
#[derive(Debug, Clone, Copy)]
pub struct Schedule {
    interval: f64,
    next: usize,
    t_max: f64,
}

impl Schedule {
    pub fn new(interval: f64, t_max: f64) -> Self {
        Schedule {
            interval,
            next: 1,
            t_max,
        }
    }

    pub fn target(&self) -> f64 {
        (self.next as f64 * self.interval).min(self.t_max)
    }

    /// Clip a step from `t`; returns the step and whether it lands on a sample time.
    pub fn clip(&self, t: f64, dt: f64) -> (f64, bool) {
        let target = self.target();
        if t + dt >= target - 1e-12 * self.interval {
            (target - t, true)
        } else {
            (dt, false)
        }
    }

    pub fn advance(&mut self) {
        self.next += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmod_is_odd_and_picks_smaller() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -1.0), 0.0);
        for (a, b) in [(0.3, 0.7), (2.0, 2.0), (-1e-3, -5.0)] {
            assert_eq!(minmod(-b, -a), -minmod(a, b));
        }
    }

    #[test]
    fn tracker_interpolates_reciprocal_growth() {
        // g = 1/(T - t) with T = 1: factor 20 of g(0) = 1 at t = 0.95
        let mut tr = GrowthTracker::new(1.0, &[20.0]);
        for k in 0..=100 {
            let t = k as f64 * 0.0099;
            tr.observe(t, 1.0 / (1.0 - t));
        }
        let t = tr.times()[0].1;
        assert!((t - 0.95).abs() < 1e-12, "{t}");
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
