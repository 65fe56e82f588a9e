//! Smooth cutoff: 1 on [0, 1/8], 0 on [7/8, ∞), C∞ in between.

/// `ψ(s) = exp(-1/s)` for s > 0, else 0.
fn psi(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    let p = (-1.0 / s).exp();
    let s2 = s * s;
    [p, p / s2, p * (1.0 / (s2 * s2) - 2.0 / (s2 * s))]
}

/// Smooth step S(s) = ψ(s) / (ψ(s) + ψ(1-s)) and its first two derivatives.
fn smooth_step(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let a = psi(s);
    // g(s) = ψ(1-s); g' = -ψ'(1-s), g'' = ψ''(1-s)
    let b = psi(1.0 - s);
    let (g, g1, g2) = (b[0], -b[1], b[2]);
    let den = a[0] + g;
    let den1 = a[1] + g1;
    let den2 = a[2] + g2;
    let q = a[0] / den;
    let q1 = (a[1] - q * den1) / den;
    let q2 = (a[2] - 2.0 * q1 * den1 - q * den2) / den;
    [q, q1, q2]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutoffFunction;

impl CutoffFunction {
    pub const INNER: f64 = 0.125;
    pub const OUTER: f64 = 0.875;

    /// χ, χ′, χ″ at τ.
    pub fn jet(&self, tau: f64) -> [f64; 3] {
        let w = Self::OUTER - Self::INNER;
        let s = smooth_step((tau - Self::INNER) / w);
        [1.0 - s[0], -s[1] / w, -s[2] / (w * w)]
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.jet(tau)[0]
    }

    /// Jet of φ(τ) = χ⁴(τ/T): φ, φ′, φ″.
    pub fn fourth_power_jet(&self, tau: f64, horizon: f64) -> [f64; 3] {
        let [c, c1, c2] = self.jet(tau / horizon);
        let c1 = c1 / horizon;
        let c2 = c2 / (horizon * horizon);
        let c3 = c * c * c;
        [
            c3 * c,
            4.0 * c3 * c1,
            12.0 * c * c * c1 * c1 + 4.0 * c3 * c2,
        ]
    }
}
