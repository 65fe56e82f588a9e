//! Quadrature rules on the unit sphere S^{n-1} and Gauss–Legendre nodes.
//!
//! These rules are the independent oracle for every closed form in [`super`]:
//! nothing here goes through the Bessel or radial-derivative code.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫_a^b f.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Surface measure |S^{n-1}|.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Nodes on S^{n-1} with positive weights summing to |S^{n-1}|.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub n: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// `resolution` is the number of trapezoid points on the circle (n = 2) or the
    /// Gauss–Legendre order in cos θ (n = 3, with twice as many azimuthal points).
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Domain(format!(
                "sphere quadrature resolution {resolution} < 2"
            )));
        }
        let (nodes, weights) = match n {
            1 => (vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], vec![1.0, 1.0]),
            2 => {
                let w = 2.0 * PI / resolution as f64;
                let nodes = (0..resolution)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / resolution as f64;
                        [th.cos(), th.sin(), 0.0]
                    })
                    .collect();
                (nodes, vec![w; resolution])
            }
            3 => {
                let gl = GaussLegendre::new(resolution);
                let n_phi = 2 * resolution;
                let dphi = 2.0 * PI / n_phi as f64;
                let mut nodes = Vec::with_capacity(resolution * n_phi);
                let mut weights = Vec::with_capacity(resolution * n_phi);
                for (&ct, &wt) in gl.nodes.iter().zip(&gl.weights) {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for j in 0..n_phi {
                        let ph = dphi * j as f64;
                        nodes.push([st * ph.cos(), st * ph.sin(), ct]);
                        weights.push(wt * dphi);
                    }
                }
                (nodes, weights)
            }
            _ => {
                return Err(Error::Domain(format!(
                    "sphere quadrature needs n in 1..=3, got {n}"
                )))
            }
        };
        Ok(SphereQuadrature { n, nodes, weights })
    }

    /// Default oracle rule: resolves e^{ω·x} for |x| ≤ 10 to machine precision.
    pub fn oracle(n: usize) -> Result<Self> {
        Self::new(n, 64)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// ∫_{S^{n-1}} g(ω) dω.
    pub fn integrate(&self, mut g: impl FnMut(&[f64; 3]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(w, &c)| c * g(w))
            .sum()
    }

    /// ∫ e^{ω·x} dω, the oracle for the test function.
    pub fn exp_moment0(&self, x: &[f64]) -> f64 {
        self.integrate(|w| dot(w, x).exp())
    }

    /// ∫ ω e^{ω·x} dω.
    pub fn exp_moment1(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (w, &c) in self.nodes.iter().zip(&self.weights) {
            let e = c * dot(w, x).exp();
            for i in 0..3 {
                out[i] += e * w[i];
            }
        }
        out
    }

    /// ∫ ω⊗ω e^{ω·x} dω.
    pub fn exp_moment2(&self, x: &[f64]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (w, &c) in self.nodes.iter().zip(&self.weights) {
            let e = c * dot(w, x).exp();
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += e * w[i] * w[j];
                }
            }
        }
        out
    }
}

fn dot(w: &[f64; 3], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sphere_area() {
        for n in 1..=3 {
            for res in [8, 32, 64] {
                let q = SphereQuadrature::new(n, res).unwrap();
                let s: f64 = q.weights.iter().sum();
                assert!(
                    (s - sphere_area(n)).abs() <= 1e-12 * sphere_area(n),
                    "n={n} res={res}"
                );
                assert!(q.weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(10);
        // degree 19 is the limit for 10 nodes
        let v = gl.integrate(-1.0, 1.0, |x| x.powi(18) + 3.0 * x.powi(7));
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        let v = gl.integrate(0.0, 2.0, |x| x * x);
        assert!((v - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_are_unit_vectors() {
        let q = SphereQuadrature::new(3, 16).unwrap();
        for w in &q.nodes {
            let r2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
            assert!((r2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(SphereQuadrature::new(4, 16).is_err());
        assert!(SphereQuadrature::new(2, 1).is_err());
    }
}
