//! Weighted averaged functionals X, Y of sampled fields and the Hölder step.

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridField};
use crate::error::{Error, Result};
use crate::weightfn::{ball_integral, slab_ball_integral, TestFunction};

/// Which weight the functionals use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weight {
    /// The full sphere average F, with n = grid dimension.
    #[default]
    Full,
    /// Slab weight e^y + e^{-y} in the first coordinate only.
    Slab,
}

impl Weight {
    /// Scalar weight and its gradient at `x` in dimension `dim`.
    fn eval(&self, tf: &TestFunction, x: &[f64; 3]) -> (f64, [f64; 3]) {
        match self {
            Weight::Full => {
                let w = tf.weights(x);
                (w.f, w.grad)
            }
            Weight::Slab => {
                let (ep, em) = (x[0].exp(), (-x[0]).exp());
                (ep + em, [ep - em, 0.0, 0.0])
            }
        }
    }

    /// Integral of the weight over the ball of radius `r` in dimension `dim`.
    pub fn ball_integral(&self, dim: usize, r: f64) -> Result<f64> {
        match self {
            Weight::Full => ball_integral(dim, r),
            Weight::Slab => slab_ball_integral(dim, r),
        }
    }
}

/// X = ∫ w (ρ - 1) dx, where `field` holds ρ - 1 in its first component.
pub fn functional_x(field: &GridField, weight: Weight) -> Result<f64> {
    field.check_support()?;
    let grid = field.grid;
    let tf = TestFunction::new(grid.dim)?;
    let c = &field.components[0];
    let mut sum = 0.0;
    for (flat, &v) in c.iter().enumerate() {
        if v != 0.0 {
            sum += weight.eval(&tf, &grid.center(flat)).0 * v;
        }
    }
    Ok(sum * grid.cell_volume())
}

/// Y = ∫ ρ u·∇w dx. `rho` holds ρ - 1; `u` holds `dim` velocity components.
pub fn functional_y(rho: &GridField, u: &GridField, weight: Weight) -> Result<f64> {
    if rho.grid != u.grid {
        return Err(Error::Parameter("density and velocity grids differ".into()));
    }
    let grid = u.grid;
    if u.components.len() != grid.dim {
        return Err(Error::Parameter(format!(
            "velocity needs {} components, got {}",
            grid.dim,
            u.components.len()
        )));
    }
    rho.check_support()?;
    u.check_support()?;
    let tf = TestFunction::new(grid.dim)?;
    let mut sum = 0.0;
    for flat in 0..grid.len() {
        let mut dot_pending = false;
        for c in &u.components {
            dot_pending |= c[flat] != 0.0;
        }
        if !dot_pending {
            continue;
        }
        let (_, grad) = weight.eval(&tf, &grid.center(flat));
        let dot: f64 = (0..grid.dim).map(|k| u.components[k][flat] * grad[k]).sum();
        sum += (1.0 + rho.components[0][flat]) * dot;
    }
    Ok(sum * grid.cell_volume())
}

/// (∫ w (ρ-1)², X² / ∫_{|x|≤R} w): the first must dominate the second.
pub fn holder_gap(field: &GridField, radius: f64, weight: Weight) -> Result<(f64, f64)> {
    field.check_support()?;
    let grid = field.grid;
    let tf = TestFunction::new(grid.dim)?;
    let (mut x, mut sq) = (0.0, 0.0);
    for (flat, &v) in field.components[0].iter().enumerate() {
        if v != 0.0 {
            let w = weight.eval(&tf, &grid.center(flat)).0;
            x += w * v;
            sq += w * v * v;
        }
    }
    let vol = grid.cell_volume();
    let x = x * vol;
    Ok((sq * vol, x * x / weight.ball_integral(grid.dim, radius)?))
}

/// Unit-peak bump e·exp(1/(s²-1)), s = |x|/R.
pub fn unit_bump(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 + 1.0 / (s2 - 1.0)).exp()
    }
}

/// Positivity functional P = ∫ F ρ₀ + ∫ (1 + ρ₀) u₀·∇F for the family
/// ρ₀ = -a_ρ β̂(|x|/R), u₀ = a_u (x/R) β̂(|x|/R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub value: f64,
    /// Velocity amplitude above which P > 0 at this density amplitude (∞ if none).
    pub threshold_velocity: f64,
}

pub fn positivity_functional(
    grid: Grid,
    support: f64,
    rho_amp: f64,
    vel_amp: f64,
) -> Result<PositivityReport> {
    if !(0.0..1.0).contains(&rho_amp) || vel_amp < 0.0 {
        return Err(Error::Parameter(format!(
            "need 0 <= density amplitude < 1 and velocity amplitude >= 0, got {rho_amp}, {vel_amp}"
        )));
    }
    if support >= grid.half_width - grid.spacing() {
        return Err(Error::Truncation {
            edge: format!("support {support} reaches the grid edge"),
        });
    }
    let tf = TestFunction::new(grid.dim)?;
    // P = -a_ρ A + a_u (B - a_ρ C)
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for flat in 0..grid.len() {
        let x = grid.center(flat);
        let s2 = x.iter().map(|v| v * v).sum::<f64>() / (support * support);
        let beta = unit_bump(s2);
        if beta == 0.0 {
            continue;
        }
        let w = tf.weights(&x);
        let xg: f64 = (0..grid.dim).map(|k| x[k] * w.grad[k]).sum::<f64>() / support;
        a += w.f * beta;
        b += beta * xg;
        c += beta * beta * xg;
    }
    let vol = grid.cell_volume();
    let (a, b, c) = (a * vol, b * vol, c * vol);
    let slope = b - rho_amp * c;
    Ok(PositivityReport {
        value: -rho_amp * a + vel_amp * slope,
        threshold_velocity: if slope > 0.0 {
            rho_amp * a / slope
        } else {
            f64::INFINITY
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::bump::{EnsembleSpec, ManufacturedField};
    use crate::weightfn::sphere::SphereQuadrature;

    fn scalar_field(grid: Grid, m: &ManufacturedField) -> GridField {
        GridField::sample(grid, 1, 1.0, |x| vec![m.scalar(x, grid.dim)])
    }

    #[test]
    fn zero_fields_vanish() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let z = GridField::zeros(g, 1, 1.0);
        let u = GridField::zeros(g, 2, 1.0);
        assert_eq!(functional_x(&z, Weight::Full).unwrap(), 0.0);
        assert_eq!(functional_y(&z, &u, Weight::Full).unwrap(), 0.0);
        assert_eq!(holder_gap(&z, 1.0, Weight::Full).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn one_dimensional_bump_matches_fine_quadrature() {
        let m = ManufacturedField::new(
            0,
            vec![crate::fieldlab::bump::Bump::scalar([0.0; 3], 1.0, 1.0)],
        );
        let g = Grid::new(1, 4000, 2.0).unwrap();
        let x = functional_x(&scalar_field(g, &m), Weight::Full).unwrap();
        // Gauss-Legendre on each of 64 subintervals of [-1, 1]
        let gl = crate::weightfn::sphere::GaussLegendre::new(20);
        let oracle: f64 = (0..64)
            .map(|k| {
                let a = -1.0 + k as f64 / 32.0;
                gl.integrate(a, a + 1.0 / 32.0, |t| 2.0 * t.cosh() * m.scalar(&[t], 1))
            })
            .sum();
        assert!((x - oracle).abs() < 1e-8 * oracle, "{x} vs {oracle}");
    }

    #[test]
    fn shifting_outward_increases_x() {
        let g = Grid::new(3, 48, 2.0).unwrap();
        let mut prev = 0.0;
        for k in 0..5 {
            let c = 0.1 * k as f64;
            let m = ManufacturedField::new(
                0,
                vec![crate::fieldlab::bump::Bump::scalar([c, 0.0, 0.0], 0.5, 1.0)],
            );
            let x = functional_x(&scalar_field(g, &m), Weight::Full).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn y_matches_sphere_double_integral() {
        let g = Grid::new(3, 24, 2.0).unwrap();
        let spec = EnsembleSpec::default();
        let rho = ManufacturedField::random_scalar(5, &spec, 3).unwrap();
        let vel = ManufacturedField::random(6, &spec).unwrap();
        let r = GridField::sample(g, 1, 1.0, |x| vec![0.3 * rho.scalar(x, 3)]);
        let u = GridField::sample(g, 3, 1.0, |x| vel.vector_jet(x).u.to_vec());
        let y = functional_y(&r, &u, Weight::Full).unwrap();
        let sq = SphereQuadrature::oracle(3).unwrap();
        let mut oracle = 0.0;
        for flat in 0..g.len() {
            let x = g.center(flat);
            let uv = &u.components;
            if uv.iter().all(|c| c[flat] == 0.0) {
                continue;
            }
            let inner = sq.integrate(|w| {
                let e = (w[0] * x[0] + w[1] * x[1] + w[2] * x[2]).exp();
                e * (uv[0][flat] * w[0] + uv[1][flat] * w[1] + uv[2][flat] * w[2])
            });
            oracle += (1.0 + r.components[0][flat]) * inner;
        }
        oracle *= g.cell_volume();
        assert!(
            (y - oracle).abs() <= 1e-8 * oracle.abs().max(1e-3),
            "{y} vs {oracle}"
        );
    }

    #[test]
    fn outward_velocity_gives_positive_y() {
        let g = Grid::new(2, 40, 2.0).unwrap();
        let rho = GridField::zeros(g, 1, 1.0);
        let u = GridField::sample(g, 2, 1.0, |x| {
            let b = unit_bump(x[0] * x[0] + x[1] * x[1]);
            vec![b * x[0], b * x[1]]
        });
        assert!(functional_y(&rho, &u, Weight::Full).unwrap() > 0.0);
        assert!(functional_y(&rho, &u, Weight::Slab).unwrap() > 0.0);
    }

    #[test]
    fn functionals_are_linear() {
        let g = Grid::new(2, 64, 2.0).unwrap();
        let spec = EnsembleSpec::default();
        let a = scalar_field(g, &ManufacturedField::random_scalar(1, &spec, 2).unwrap());
        let b = scalar_field(g, &ManufacturedField::random_scalar(2, &spec, 2).unwrap());
        let mut sum = a.clone();
        for (s, v) in sum.components[0].iter_mut().zip(&b.components[0]) {
            *s += v;
        }
        for w in [Weight::Full, Weight::Slab] {
            let (xa, xb, xs) = (
                functional_x(&a, w).unwrap(),
                functional_x(&b, w).unwrap(),
                functional_x(&sum, w).unwrap(),
            );
            assert!((xs - xa - xb).abs() <= 1e-12 * (xa.abs() + xb.abs()));
        }
    }

    #[test]
    fn holder_equality_approached_by_sharp_plateaus() {
        let g = Grid::new(1, 20000, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for width in [0.3, 0.1, 0.03, 0.01] {
            // plateau of height 0.5 on |x| <= 1, mollified over the outer `width`
            let f = GridField::sample(g, 1, 1.0, |x| {
                let d = x[0].abs() - (1.0 - width);
                let v = if d <= 0.0 {
                    1.0
                } else {
                    unit_bump((d / width).powi(2))
                };
                vec![0.5 * v]
            });
            let (lhs, rhs) = holder_gap(&f, 1.0, Weight::Full).unwrap();
            let ratio = lhs / rhs;
            assert!(ratio >= 1.0 && ratio < prev, "width {width}: {ratio}");
            prev = ratio;
        }
        assert!(prev < 1.01);
    }

    #[test]
    fn truncated_support_is_flagged() {
        let g = Grid::new(1, 40, 1.0).unwrap();
        let f = GridField::sample(g, 1, 1.0, |_| vec![1.0]);
        assert!(matches!(
            functional_x(&f, Weight::Full),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn positivity_threshold_separates_signs() {
        let g = Grid::new(3, 40, 2.0).unwrap();
        let r = positivity_functional(g, 1.0, 0.2, 0.0).unwrap();
        assert!(r.value < 0.0);
        let t = r.threshold_velocity;
        assert!(t.is_finite() && t > 0.0);
        assert!(positivity_functional(g, 1.0, 0.2, 0.99 * t).unwrap().value < 0.0);
        assert!(positivity_functional(g, 1.0, 0.2, 1.01 * t).unwrap().value > 0.0);
        assert!(positivity_functional(g, 1.9, 0.2, 1.0).is_err());
    }
}
