//! The spherical exponential weight `F(x) = ∫_{S^{n-1}} e^{ω·x} dω` (with `F = e^x + e^{-x}`
//! in one dimension) and everything derived from it.
//!
//! `F` is radial, positive and satisfies `ΔF = F`. Because `∇ e^{ω·x} = ω e^{ω·x}`, every
//! ω-moment `∫ ω^{⊗k} e^{ω·x} dω` is the k-th derivative tensor of `F`; those tensors are
//! assembled here from the radial functions `h_m = (r⁻¹ d/dr)^m F`:
//!
//! ```text
//! ∂_i F        = x_i h_1
//! ∂_i∂_j F     = δ_ij h_1 + x_i x_j h_2
//! ∂_i∂_j∂_k F  = (δ_ij x_k + δ_ik x_j + δ_jk x_i) h_2 + x_i x_j x_k h_3
//! ```
//!
//! with `h_m(r) = |S^{n-1}| Γ(n/2) 2^{-m} Σ_k (r²/4)^k / (k! Γ(k + n/2 + m))`.

pub mod bessel;
pub mod sphere;

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use sphere::{sphere_area, GaussLegendre, SphereQuadrature};

/// Largest radius accepted before `e^r` overflows.
pub const MAX_RADIUS: f64 = 700.0;

fn check_dim(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::Domain(format!("n must be 1..3, got {n}")))
    }
}

fn check_radius(r: f64, what: &str) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!(
            "{what} must be finite and >= 0, got {r}"
        )));
    }
    if r > MAX_RADIUS {
        return Err(Error::Domain(format!(
            "{what} = {r} exceeds the overflow limit {MAX_RADIUS}"
        )));
    }
    Ok(())
}

/// sinh(r)/r with the Taylor series near the removable singularity.
pub fn sinhc(r: f64) -> f64 {
    if r.abs() < 1e-2 {
        let r2 = r * r;
        1.0 + r2 / 6.0 * (1.0 + r2 / 20.0 * (1.0 + r2 / 42.0))
    } else {
        r.sinh() / r
    }
}

/// `F` at radius `r` in dimension `n`, from its closed form.
pub fn eval_f(n: usize, r: f64) -> Result<f64> {
    check_dim(n)?;
    check_radius(r, "r")?;
    Ok(match n {
        1 => r.exp() + (-r).exp(),
        2 => 2.0 * PI * bessel::i0(r),
        _ => 4.0 * PI * sinhc(r),
    })
}

/// `[h_0, h_1, h_2, h_3]` at radius `r`, where `h_0 = F`.
pub fn radial_jet(n: usize, r: f64) -> [f64; 4] {
    let half_n = 0.5 * n as f64;
    let nu0 = half_n - 1.0;
    let norm = sphere_area(n) * bessel::gamma_half_integer(half_n) * 2f64.powf(nu0);
    let mut out = [0.0; 4];
    for (m, h) in out.iter_mut().enumerate() {
        // (r⁻¹ d/dr)^m [r^{-ν0} I_{ν0}] = r^{-(ν0+m)} I_{ν0+m}
        *h = norm * bessel::bessel_i_reduced(nu0 + m as f64, r);
    }
    out
}

/// Value, gradient and Hessian of `F` at a point (components beyond `n` are zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointWeights {
    pub f: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

/// The test function for a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestFunction {
    n: usize,
}

impl TestFunction {
    pub fn new(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(TestFunction { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn radius(&self, x: &[f64]) -> f64 {
        x.iter().take(self.n).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = self.radius(x);
        match self.n {
            1 => x[0].exp() + (-x[0]).exp(),
            2 => 2.0 * PI * bessel::i0(r),
            _ => 4.0 * PI * sinhc(r),
        }
    }

    /// `F`, `∇F` and `∇²F` in one pass; `grad` is the vector ω-moment and `hess` the
    /// second ω-moment.
    pub fn weights(&self, x: &[f64]) -> PointWeights {
        let n = self.n;
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        if n == 1 {
            let (ep, em) = (x[0].exp(), (-x[0]).exp());
            grad[0] = ep - em;
            hess[0][0] = ep + em;
            return PointWeights {
                f: ep + em,
                grad,
                hess,
            };
        }
        let h = radial_jet(n, self.radius(x));
        for i in 0..n {
            grad[i] = x[i] * h[1];
            for j in 0..n {
                hess[i][j] = x[i] * x[j] * h[2] + if i == j { h[1] } else { 0.0 };
            }
        }
        PointWeights {
            f: h[0],
            grad,
            hess,
        }
    }

    pub fn moment(&self, x: &[f64], order: usize) -> Result<MomentTensor> {
        moment(self.n, x, order)
    }
}

/// Symmetric Cartesian tensor `∇^k F(x)` stored row-major with `n^k` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensor {
    pub dim: usize,
    pub order: usize,
    pub components: Vec<f64>,
}

impl MomentTensor {
    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.order, "index rank mismatch");
        idx.iter().fold(0, |acc, &i| {
            assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.offset(idx)]
    }

    /// Contraction over the first two indices; for order 2 this is `ΔF = F`.
    pub fn trace(&self) -> Vec<f64> {
        assert!(self.order >= 2, "trace needs order >= 2");
        let rest = self.dim.pow(self.order as u32 - 2);
        (0..rest)
            .map(|k| {
                (0..self.dim)
                    .map(|i| self.components[(i * self.dim + i) * rest + k])
                    .sum()
            })
            .collect()
    }
}

/// `∇^{order} F(x)` for `order ≤ 3`, i.e. `∫ ω^{⊗order} e^{ω·x} dω`.
pub fn moment(n: usize, x: &[f64], order: usize) -> Result<MomentTensor> {
    check_dim(n)?;
    if order > 3 {
        return Err(Error::Domain(format!(
            "moment order must be 0..3, got {order}"
        )));
    }
    if x.len() < n {
        return Err(Error::Domain(format!(
            "point has {} coordinates, need {n}",
            x.len()
        )));
    }
    let r = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    check_radius(r, "|x|")?;
    let h = radial_jet(n, r);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut components = Vec::with_capacity(n.pow(order as u32));
    match order {
        0 => components.push(h[0]),
        1 => components.extend((0..n).map(|i| x[i] * h[1])),
        2 => {
            for i in 0..n {
                for j in 0..n {
                    components.push(d(i, j) * h[1] + x[i] * x[j] * h[2]);
                }
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let sym = d(i, j) * x[k] + d(i, k) * x[j] + d(j, k) * x[i];
                        components.push(sym * h[2] + x[i] * x[j] * x[k] * h[3]);
                    }
                }
            }
        }
    }
    Ok(MomentTensor {
        dim: n,
        order,
        components,
    })
}

/// `R cosh R - sinh R` without cancellation at small `R`.
fn rcosh_minus_sinh(r: f64) -> f64 {
    if r < 0.1 {
        // Σ_{k≥1} 2k R^{2k+1} / (2k+1)!
        let r2 = r * r;
        let mut term = r * r2 / 3.0;
        let mut sum = term;
        for k in 2..10 {
            let kf = k as f64;
            term *= r2 * kf / ((kf - 1.0) * (2.0 * kf) * (2.0 * kf + 1.0));
            sum += term;
        }
        sum
    } else {
        r * r.cosh() - r.sinh()
    }
}

/// `∫_{|x| ≤ R} F(x) dx` from the closed antiderivative.
pub fn ball_integral(n: usize, radius: f64) -> Result<f64> {
    check_dim(n)?;
    check_radius(radius, "R")?;
    Ok(match n {
        1 => 4.0 * radius.sinh(),
        2 => 4.0 * PI * PI * radius * bessel::i1(radius),
        _ => 16.0 * PI * PI * rcosh_minus_sinh(radius),
    })
}

/// Volume of the (k)-ball of radius `rho` for k = 0, 1, 2.
fn ball_volume(k: usize, rho: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0 * rho,
        _ => PI * rho * rho,
    }
}

/// `∫∫_{y²+|z|² ≤ R²} (e^y + e^{-y}) dz dy` with `z ∈ ℝ^{n-1}`.
///
/// For n > 1 the y-integral is taken in the angle `y = R cos θ`, where the integrand
/// `2 cosh(R cos θ) vol_{n-1}(R sin θ) R sin θ` is analytic on [0, π].
pub fn slab_ball_integral(n: usize, radius: f64) -> Result<f64> {
    check_dim(n)?;
    check_radius(radius, "R")?;
    if n == 1 {
        return ball_integral(1, radius);
    }
    let order = (2.0 * radius).ceil() as usize + 48;
    let gl = GaussLegendre::new(order);
    Ok(gl.integrate(0.0, PI, |th| {
        let (s, c) = th.sin_cos();
        2.0 * (radius * c).cosh() * ball_volume(n - 1, radius * s) * radius * s
    }))
}

/// `F(r) (1+r)^{(n-1)/2} e^{-r}` for each radius.
pub fn growth_envelope(n: usize, radii: &[f64]) -> Result<Vec<f64>> {
    check_dim(n)?;
    radii
        .iter()
        .map(|&r| {
            let f = eval_f(n, r)?;
            Ok(f * (1.0 + r).powf(0.5 * (n as f64 - 1.0)) * (-r).exp())
        })
        .collect()
}

/// Measured bounds of the growth envelope on a radius grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeBounds {
    pub min: f64,
    pub max: f64,
}

pub fn envelope_bounds(ratios: &[f64]) -> EnvelopeBounds {
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EnvelopeBounds { min, max }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            (a - b).abs() / b.abs()
        }
    }

    #[test]
    fn eval_examples() {
        assert!(rel(eval_f(3, 0.0).unwrap(), 4.0 * PI) < 1e-15);
        assert!(rel(eval_f(1, 1.0).unwrap(), 3.0861612696304874) < 1e-15);
        // 2π I0(2)
        assert!(rel(eval_f(2, 2.0).unwrap(), 2.0 * PI * 2.2795853023360672674) < 1e-14);
    }

    #[test]
    fn eval_rejects_bad_input() {
        assert!(matches!(eval_f(3, -1.0), Err(Error::Domain(_))));
        assert!(matches!(eval_f(4, 1.0), Err(Error::Domain(_))));
        assert!(eval_f(0, 1.0).is_err());
        assert!(eval_f(2, f64::NAN).is_err());
        assert!(ball_integral(3, -0.5).is_err());
        assert!(slab_ball_integral(2, -0.5).is_err());
    }

    #[test]
    fn radial_jet_h0_matches_closed_form() {
        for n in 1..=3 {
            for &r in &[0.0, 0.005, 0.5, 3.0, 14.99, 15.01, 30.0, 60.0] {
                let h = radial_jet(n, r);
                let f = if n == 1 {
                    2.0 * r.cosh()
                } else {
                    eval_f(n, r).unwrap()
                };
                assert!(rel(h[0], f) < 1e-13, "n={n} r={r}: {} vs {f}", h[0]);
            }
        }
    }

    #[test]
    fn n3_radial_jet_matches_hyperbolic_forms() {
        for &r in &[0.7, 4.0, 16.0, 40.0] {
            let h = radial_jet(3, r);
            let (s, c) = (r.sinh(), r.cosh());
            let h1 = 4.0 * PI * (r * c - s) / r.powi(3);
            let h2 = 4.0 * PI * ((r * r + 3.0) * s - 3.0 * r * c) / r.powi(5);
            assert!(rel(h[1], h1) < 1e-12);
            assert!(rel(h[2], h2) < 1e-10);
        }
    }

    #[test]
    fn moment_examples() {
        let m1 = moment(3, &[0.0, 0.0, 0.0], 1).unwrap();
        assert!(m1.components.iter().all(|&v| v == 0.0));
        let m2 = moment(3, &[0.0, 0.0, 0.0], 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 4.0 * PI / 3.0 } else { 0.0 };
                assert!((m2.get(&[i, j]) - want).abs() < 1e-14);
            }
        }
        assert!(moment(3, &[0.0; 3], 4).is_err());
    }

    #[test]
    fn one_dimensional_moments_are_hyperbolic() {
        for &x in &[-3.0, -0.2, 0.0, 0.4, 5.0] {
            for k in 0..=3 {
                let m = moment(1, &[x], k).unwrap().components[0];
                let want = if k % 2 == 0 {
                    2.0 * f64::cosh(x)
                } else {
                    2.0 * f64::sinh(x)
                };
                assert!(
                    (m - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "x={x} k={k}"
                );
            }
        }
    }

    #[test]
    fn moment_trace_is_f() {
        for n in 1..=3 {
            let x = [0.3, -1.1, 2.0];
            let f = TestFunction::new(n).unwrap().value(&x);
            let m2 = moment(n, &x, 2).unwrap();
            assert!(rel(m2.trace()[0], f) < 1e-12);
            let m3 = moment(n, &x, 3).unwrap();
            let m1 = moment(n, &x, 1).unwrap();
            for (t, g) in m3.trace().iter().zip(&m1.components) {
                assert!((t - g).abs() < 1e-11 * f);
            }
        }
    }

    #[test]
    fn weights_agree_with_moment() {
        let tf = TestFunction::new(3).unwrap();
        let x = [0.4, 0.1, -0.9];
        let w = tf.weights(&x);
        let m1 = moment(3, &x, 1).unwrap();
        let m2 = moment(3, &x, 2).unwrap();
        for i in 0..3 {
            assert_eq!(w.grad[i], m1.get(&[i]));
            for j in 0..3 {
                assert_eq!(w.hess[i][j], m2.get(&[i, j]));
            }
        }
    }

    #[test]
    fn ball_integral_examples() {
        assert!(rel(ball_integral(1, 1.0).unwrap(), 4.0 * 1f64.sinh()) < 1e-15);
        assert!(rel(ball_integral(3, 1.0).unwrap(), 58.093192826495374904) < 1e-14);
        // small-R series branch agrees with the direct formula just above the switch
        let a = 16.0 * PI * PI * rcosh_minus_sinh(0.0999999);
        let b = 16.0 * PI * PI * (0.0999999 * 0.0999999f64.cosh() - 0.0999999f64.sinh());
        assert!(rel(a, b) < 1e-9);
    }

    #[test]
    fn slab_ball_closed_forms() {
        // n=2: 4πR I1(R); n=3: 8π(R cosh R − sinh R)
        assert!(rel(slab_ball_integral(2, 2.0).unwrap(), 39.977064456462470614) < 1e-13);
        assert!(rel(slab_ball_integral(3, 3.0).unwrap(), 507.30717294199539572) < 1e-13);
        for &r in &[0.5, 5.0, 25.0, 40.0] {
            let want2 = 4.0 * PI * r * bessel::i1(r);
            let want3 = 8.0 * PI * (r * r.cosh() - r.sinh());
            assert!(
                rel(slab_ball_integral(2, r).unwrap(), want2) < 1e-12,
                "R={r}"
            );
            assert!(
                rel(slab_ball_integral(3, r).unwrap(), want3) < 1e-12,
                "R={r}"
            );
        }
        assert_eq!(
            slab_ball_integral(1, 1.7).unwrap(),
            ball_integral(1, 1.7).unwrap()
        );
    }

    #[test]
    fn envelope_n1_in_unit_interval() {
        let radii: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
        let e = growth_envelope(1, &radii).unwrap();
        assert!(e.iter().all(|&v| (1.0 - 1e-15..=2.0 + 1e-15).contains(&v)));
    }
}
