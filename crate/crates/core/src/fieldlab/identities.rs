//! Weighted integral identities and bounds for 3D vector fields.
//!
//! Every ω-integral ∫_{S²} (·) e^{ω·x} dω is replaced by the matching derivative tensor
//! of F, so a single pass over the grid evaluates all terms. Field derivatives come
//! from the analytic bump jets; only the spatial integral is discretised (midpoint rule).

use serde::{Deserialize, Serialize};

use super::bump::{levi_civita, ManufacturedField, VectorJet};
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::weightfn::sphere::GaussLegendre;
use crate::weightfn::{PointWeights, TestFunction};

/// Step of the fourth-order difference used to take the curl of ∇F numerically.
const CURL_FD_STEP: f64 = 1e-3;

/// Q_ab(f, g) = ∂_a f ∂_b g - ∂_a g ∂_b f, from the gradients of f and g.
#[inline]
fn null_form(a: usize, b: usize, df: &[f64; 3], dg: &[f64; 3]) -> f64 {
    df[a] * dg[b] - dg[a] * df[b]
}

/// Raw weighted integrals of one field, each ∫ dx of an ω-averaged density.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerms {
    /// ∫∫ |∇u|² e^{ω·x}
    pub grad_sq: f64,
    /// ∫∫ |∇·u|² e^{ω·x}
    pub div_sq: f64,
    /// ∫∫ |∇×u|² e^{ω·x}
    pub curl_sq: f64,
    /// ∫∫ (u·ω)(∇·u) e^{ω·x}
    pub cross: f64,
    /// ∫∫ (u·ω)² e^{ω·x}
    pub u_omega_sq: f64,
    /// ∫∫ (∇·u) ω^i ω^k ∂_i u^k e^{ω·x}
    pub div_strain: f64,
    /// ∫∫ Σ Q_jk(u^j, ∂_i u^k) ω^i e^{ω·x}
    pub q_jk: f64,
    /// ∫∫ Σ Q_ik(u^k, ∂_j u^j) ω^i e^{ω·x}
    pub q_ik: f64,
    /// ∫∫ ∇(∇·u)²·ω e^{ω·x}
    pub grad_div_sq: f64,
    /// ∫∫ ∇|∇×u|²·ω e^{ω·x}
    pub grad_curl_sq: f64,
    /// ∫∫ ∇×(∇·u ∇×u)·ω e^{ω·x}
    pub rot_div_curl: f64,
    /// ∫∫ Σ (2Q_jk(∂_j u^i, u^k) + Q_jk(∂_k u^j, u^i) + Q_ij(∂_j u^k, u^k)) ω^i e^{ω·x}
    pub q2_first: f64,
    /// ∫∫ Σ (2Q_ij(∂_k u^k, u^j) + Q_ji(∂_k u^j, u^k)) ω^i e^{ω·x}
    pub q2_second: f64,
    /// ∫∫ |(u·ω)(∇·u)| e^{ω·x}: scale for residuals involving `cross`.
    pub cross_abs: f64,
    /// ∫∫ |(∇·u) ω^i ω^k ∂_i u^k| e^{ω·x}
    pub div_strain_abs: f64,
    /// ∫∫ |Σ Q_jk(u^j, ∂_i u^k) ω^i| e^{ω·x}
    pub q_jk_abs: f64,
    /// ∫∫ |Σ Q_ik(u^k, ∂_j u^j) ω^i| e^{ω·x}
    pub q_ik_abs: f64,
    /// ∫∫ |∇(∇·u)²·ω| e^{ω·x}
    pub grad_div_abs: f64,
    /// ∫∫ |∇|∇×u|²·ω| e^{ω·x}
    pub grad_curl_abs: f64,
}

const NTERMS: usize = 19;

impl WeightedTerms {
    fn from_array(a: [f64; NTERMS]) -> Self {
        WeightedTerms {
            grad_sq: a[0],
            div_sq: a[1],
            curl_sq: a[2],
            cross: a[3],
            u_omega_sq: a[4],
            div_strain: a[5],
            q_jk: a[6],
            q_ik: a[7],
            grad_div_sq: a[8],
            grad_curl_sq: a[9],
            rot_div_curl: a[10],
            q2_first: a[11],
            q2_second: a[12],
            cross_abs: a[13],
            div_strain_abs: a[14],
            q_jk_abs: a[15],
            q_ik_abs: a[16],
            grad_div_abs: a[17],
            grad_curl_abs: a[18],
        }
    }

    /// Integrand of every term at one point.
    pub fn density(j: &VectorJet, w: &PointWeights) -> [f64; NTERMS] {
        let u = &j.u;
        let d1 = &j.d1;
        let d2 = &j.d2;
        let m1 = &w.grad;
        let m2 = &w.hess;
        let div = j.divergence();
        let curl = j.curl();
        let grad_div: [f64; 3] = std::array::from_fn(|a| d2[0][0][a] + d2[1][1][a] + d2[2][2][a]);
        // ∂_l (∇×u)_m
        let mut dcurl = [[0.0; 3]; 3];
        for (m, row) in dcurl.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                for a in 0..3 {
                    for b in 0..3 {
                        let e = levi_civita(m, a, b);
                        if e != 0.0 {
                            *v += e * d2[b][a][l];
                        }
                    }
                }
            }
        }

        let mut grad_sq = 0.0;
        let mut u_m2_u = 0.0;
        let mut div_strain = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                grad_sq += d1[i][k] * d1[i][k];
                u_m2_u += u[i] * m2[i][k] * u[k];
                div_strain += m2[i][k] * d1[k][i];
            }
        }
        let u_m1: f64 = (0..3).map(|i| u[i] * m1[i]).sum();
        let curl_sq: f64 = curl.iter().map(|c| c * c).sum();

        let (mut q_jk, mut q_ik, mut q2_first, mut q2_second) = (0.0, 0.0, 0.0, 0.0);
        let (mut grad_div_sq, mut grad_curl_sq, mut rot) = (0.0, 0.0, 0.0);
        let (mut q_jk_abs, mut q_ik_abs) = (0.0, 0.0);
        let (mut grad_div_abs, mut grad_curl_abs) = (0.0, 0.0);
        for i in 0..3 {
            let mut s_jk = 0.0;
            let mut s_ik = 0.0;
            let mut s2a = 0.0;
            let mut s2b = 0.0;
            for k in 0..3 {
                s_ik += null_form(i, k, &d1[k], &grad_div);
                for jj in 0..3 {
                    s_jk += null_form(jj, k, &d1[jj], &d2[k][i]);
                    s2a += 2.0 * null_form(jj, k, &d2[i][jj], &d1[k])
                        + null_form(jj, k, &d2[jj][k], &d1[i])
                        + null_form(i, jj, &d2[k][jj], &d1[k]);
                    s2b += 2.0 * null_form(i, jj, &d2[k][k], &d1[jj])
                        + null_form(jj, i, &d2[jj][k], &d1[k]);
                }
            }
            q_jk += s_jk * m1[i];
            q_ik += s_ik * m1[i];
            q_jk_abs += (s_jk * m1[i]).abs();
            q_ik_abs += (s_ik * m1[i]).abs();
            q2_first += s2a * m1[i];
            q2_second += s2b * m1[i];

            grad_div_sq += 2.0 * div * grad_div[i] * m1[i];
            grad_div_abs += (2.0 * div * grad_div[i] * m1[i]).abs();
            let gc: f64 = (0..3).map(|m| 2.0 * curl[m] * dcurl[m][i]).sum();
            grad_curl_sq += gc * m1[i];
            grad_curl_abs += (gc * m1[i]).abs();
            let mut r = 0.0;
            for l in 0..3 {
                for m in 0..3 {
                    let e = levi_civita(i, l, m);
                    if e != 0.0 {
                        r += e * (grad_div[l] * curl[m] + div * dcurl[m][l]);
                    }
                }
            }
            rot += r * m1[i];
        }

        [
            w.f * grad_sq,
            w.f * div * div,
            w.f * curl_sq,
            u_m1 * div,
            u_m2_u,
            div * div_strain,
            q_jk,
            q_ik,
            grad_div_sq,
            grad_curl_sq,
            rot,
            q2_first,
            q2_second,
            (u_m1 * div).abs(),
            (div * div_strain).abs(),
            q_jk_abs,
            q_ik_abs,
            grad_div_abs,
            grad_curl_abs,
        ]
    }
}

/// ∇×(∇F) by fourth-order central differences of the analytic gradient.
fn fd_curl_of_gradient(tf: &TestFunction, x: &[f64; 3]) -> [f64; 3] {
    let h = CURL_FD_STEP;
    // d[a][b] = ∂_a (∇F)_b
    let mut d = [[0.0; 3]; 3];
    for (a, row) in d.iter_mut().enumerate() {
        let at = |s: f64| {
            let mut y = *x;
            y[a] += s * h;
            tf.weights(&y).grad
        };
        let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
        for b in 0..3 {
            row[b] = (8.0 * (p1[b] - m1[b]) - (p2[b] - m2[b])) / (12.0 * h);
        }
    }
    [d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]]
}

/// Evaluate all weighted terms of `field` on a 3D grid with a `points`-point
/// Gauss–Legendre rule per axis in every cell (1 = midpoint rule). Slabs of cells run
/// in parallel and are reduced in index order.
pub fn weighted_terms(
    field: &ManufacturedField,
    grid: Grid,
    points: usize,
    exec: Exec,
) -> Result<WeightedTerms> {
    if grid.dim != 3 {
        return Err(Error::Domain(format!(
            "vector identities need a 3D grid, got {}D",
            grid.dim
        )));
    }
    if !(1..=8).contains(&points) {
        return Err(Error::Parameter(format!(
            "points per cell axis must be 1..8, got {points}"
        )));
    }
    let reach = field.reach();
    if reach >= grid.half_width - grid.spacing() {
        return Err(Error::Truncation {
            edge: format!(
                "field reaches |x| = {reach}, grid half width {}",
                grid.half_width
            ),
        });
    }
    let tf = TestFunction::new(3)?;
    let n = grid.cells;
    let h = grid.spacing();
    let gl = GaussLegendre::new(points);
    // offsets from the cell centre and weights as fractions of the cell
    let rule: Vec<(f64, f64)> = gl
        .nodes
        .iter()
        .zip(&gl.weights)
        .map(|(x, w)| (0.5 * h * x, 0.5 * w))
        .collect();
    // cells farther than this from the origin cannot touch the support
    let cutoff = reach + h;
    let slabs = exec.map(n, |i| {
        let mut acc = [0.0; NTERMS];
        let c0 = grid.coord(i);
        for jy in 0..n {
            let c1 = grid.coord(jy);
            for kz in 0..n {
                let c2 = grid.coord(kz);
                if c0 * c0 + c1 * c1 + c2 * c2 >= cutoff * cutoff {
                    continue;
                }
                for &(o0, w0) in &rule {
                    for &(o1, w1) in &rule {
                        for &(o2, w2) in &rule {
                            let x = [c0 + o0, c1 + o1, c2 + o2];
                            let jet = field.vector_jet(&x);
                            if jet.is_zero() {
                                continue;
                            }
                            let dens = WeightedTerms::density(&jet, &tf.weights(&x));
                            let wt = w0 * w1 * w2;
                            for (a, d) in acc.iter_mut().zip(dens) {
                                *a += wt * d;
                            }
                        }
                    }
                }
            }
        }
        acc
    });
    let vol = grid.cell_volume();
    let mut total = [0.0; NTERMS];
    for s in slabs {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    Ok(WeightedTerms::from_array(total.map(|v| v * vol)))
}

/// The curl-weight term ∫∫ (∇·u ∇×u)·∇×(ω e^{ω·x}) dω dx, which vanishes identically
/// because ∫ ω e^{ω·x} dω = ∇F is a gradient. Here the outer curl is taken by finite
/// differences of ∇F and the x-integral by the midpoint rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurlWeightReport {
    pub value: f64,
    /// ∫ |∇·u| |∇×u| |∇F|: the size the term would have without the cancellation.
    pub scale: f64,
}

impl CurlWeightReport {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

pub fn curl_weight_check(
    field: &ManufacturedField,
    grid: Grid,
    exec: Exec,
) -> Result<CurlWeightReport> {
    if grid.dim != 3 {
        return Err(Error::Domain(format!(
            "the curl check needs a 3D grid, got {}D",
            grid.dim
        )));
    }
    let tf = TestFunction::new(3)?;
    let n = grid.cells;
    let reach = field.reach();
    let slabs = exec.map(n, |i| {
        let (mut v, mut s) = (0.0, 0.0);
        for jy in 0..n {
            for kz in 0..n {
                let x = [grid.coord(i), grid.coord(jy), grid.coord(kz)];
                if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] >= reach * reach {
                    continue;
                }
                let jet = field.vector_jet(&x);
                let div = jet.divergence();
                let curl = jet.curl();
                if div == 0.0 || curl == [0.0; 3] {
                    continue;
                }
                let c = fd_curl_of_gradient(&tf, &x);
                let g = tf.weights(&x).grad;
                v += (0..3).map(|m| div * curl[m] * c[m]).sum::<f64>();
                s += div.abs()
                    * (curl[0] * curl[0] + curl[1] * curl[1] + curl[2] * curl[2]).sqrt()
                    * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            }
        }
        (v, s)
    });
    let vol = grid.cell_volume();
    let (v, s) = slabs
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(CurlWeightReport {
        value: v * vol,
        scale: s * vol,
    })
}

/// Material constants of the quadratic elastodynamic nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticCoeffs {
    pub sigma111: f64,
    pub sigma11: f64,
    pub sigma12: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub lambda: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ElasticCoeffs {
    /// λ-scaled defaults with c₁ = 1 and c₂² = 1/2.
    pub fn with_lambda(lambda: f64) -> Self {
        ElasticCoeffs {
            sigma111: -lambda * lambda,
            sigma11: 0.25,
            sigma12: lambda,
            sigma2: -0.25,
            sigma3: 0.0,
            lambda,
            c1: 1.0,
            c2: 0.5f64.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let all = [
            self.sigma111,
            self.sigma11,
            self.sigma12,
            self.sigma2,
            self.sigma3,
            self.lambda,
            self.c1,
            self.c2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            bad.push("all coefficients must be finite".to_string());
        }
        if (4.0 * self.sigma11 - 1.0).abs() > 1e-12 || (self.c1 * self.c1 - 1.0).abs() > 1e-12 {
            bad.push(format!(
                "need 4σ11 = c1² = 1, got σ11 = {}, c1 = {}",
                self.sigma11, self.c1
            ));
        }
        let c2sq = self.c2 * self.c2;
        if (-2.0 * self.sigma2 - c2sq).abs() > 1e-12 || !(c2sq > 0.0 && c2sq < 1.0) {
            bad.push(format!(
                "need -2σ2 = c2² in (0, 1), got σ2 = {}, c2 = {}",
                self.sigma2, self.c2
            ));
        }
        if !(self.lambda > 1.0) {
            bad.push(format!("λ must exceed 1, got {}", self.lambda));
        }
        if !(self.sigma111 < 0.0) {
            bad.push(format!("σ111 must be negative, got {}", self.sigma111));
        }
        if !(self.sigma12 > 0.0) {
            bad.push(format!("σ12 must be positive, got {}", self.sigma12));
        }
        if self.sigma3.abs() > self.lambda / 100.0 {
            bad.push(format!("|σ3| must be <= λ/100, got {}", self.sigma3));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(bad.join("; ")))
        }
    }

    pub fn q2_integral(&self, t: &WeightedTerms) -> f64 {
        2.0 * (self.sigma2 - self.sigma3) * t.q2_first + 2.0 * self.sigma3 * t.q2_second
    }

    pub fn q1_integral(&self, t: &WeightedTerms) -> f64 {
        4.0 * (2.0 * self.sigma12 - self.sigma11) * (t.q_jk - t.q_ik)
    }

    /// ∫∫ F(∇u, ∇²u)·ω e^{ω·x} with every term of the quadratic expansion.
    pub fn nonlinear_integral(&self, t: &WeightedTerms) -> f64 {
        2.0 * (2.0 * self.sigma111 + 3.0 * self.sigma11) * t.grad_div_sq
            + 2.0 * (self.sigma11 - self.sigma12) * t.grad_curl_sq
            - 4.0 * (self.sigma11 - self.sigma12) * t.rot_div_curl
            + self.q1_integral(t)
            + self.q2_integral(t)
    }

    /// λ² ∫∫|∇·u|² + λ ∫∫|∇×u|² + (λ/2) ∫∫(u·ω)².
    pub fn lower_bound(&self, t: &WeightedTerms) -> f64 {
        let l = self.lambda;
        l * l * t.div_sq + l * t.curl_sq + 0.5 * l * t.u_omega_sq
    }
}

/// |a - b| / scale, with the scale floored at rounding level of the field's overall
/// size so identities whose terms all vanish analytically compare against that size.
fn rel(a: f64, b: f64, scale: f64, floor: f64) -> f64 {
    let s = scale.max(floor);
    if s == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / s
    }
}

/// Residuals and bound margins derived from one set of weighted terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub terms: WeightedTerms,
    /// c such that ∫∫|∇u|² = div² + curl² + c·cross + (u·ω)² holds exactly.
    pub cross_coefficient: f64,
    /// Residual of the gradient decomposition with cross coefficient 2. Residuals are
    /// relative to the summed absolute integrands of the terms involved.
    pub grad_identity: f64,
    /// Same with cross coefficient 1.
    pub grad_identity_unit_cross: f64,
    /// (3/2) div² + curl² + (3/2)(u·ω)² - ∫∫|∇u|²; must be >= 0 for the bound.
    pub grad_bound_margin: f64,
    /// Q_jk part vs cross + ½(u·ω)².
    pub q_jk_identity: f64,
    /// Q_ik part vs div² - div_strain.
    pub q_ik_identity: f64,
    /// Q_jk part - (¼(u·ω)² - div²).
    pub q_jk_lower_margin: f64,
    /// (33/8) div² + (1/12) curl² + (1/8)(u·ω)² - Q_ik part.
    pub q_ik_upper_margin: f64,
    /// Integration by parts: ∇(∇·u)² term vs -div², relative.
    pub grad_div_ibp: f64,
    /// ∇|∇×u|² term vs -curl², relative.
    pub grad_curl_ibp: f64,
}

impl IdentityReport {
    pub fn from_terms(t: WeightedTerms) -> Self {
        let g = t.grad_sq;
        let base = t.div_sq + t.curl_sq + t.u_omega_sq;
        let gscale = g + base + 2.0 * t.cross_abs;
        let floor = f64::EPSILON * gscale;
        let jk_rhs = t.cross + 0.5 * t.u_omega_sq;
        let ik_rhs = t.div_sq - t.div_strain;
        IdentityReport {
            terms: t,
            cross_coefficient: if t.cross != 0.0 {
                (g - base) / t.cross
            } else {
                f64::NAN
            },
            grad_identity: rel(g, base + 2.0 * t.cross, gscale, floor),
            grad_identity_unit_cross: rel(g, base + t.cross, gscale, floor),
            grad_bound_margin: 1.5 * t.div_sq + t.curl_sq + 1.5 * t.u_omega_sq - g,
            q_jk_identity: rel(
                t.q_jk,
                jk_rhs,
                t.q_jk_abs + t.cross_abs + 0.5 * t.u_omega_sq,
                floor,
            ),
            q_ik_identity: rel(
                t.q_ik,
                ik_rhs,
                t.q_ik_abs + t.div_sq + t.div_strain_abs,
                floor,
            ),
            q_jk_lower_margin: t.q_jk - (0.25 * t.u_omega_sq - t.div_sq),
            q_ik_upper_margin: 33.0 / 8.0 * t.div_sq + t.curl_sq / 12.0 + t.u_omega_sq / 8.0
                - t.q_ik,
            grad_div_ibp: rel(t.grad_div_sq, -t.div_sq, t.grad_div_abs + t.div_sq, floor),
            grad_curl_ibp: rel(
                t.grad_curl_sq,
                -t.curl_sq,
                t.grad_curl_abs + t.curl_sq,
                floor,
            ),
        }
    }
}

/// Elastic-step quantities for one coefficient set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticReport {
    pub lhs: f64,
    pub rhs: f64,
    pub q1: f64,
    /// 8λ(⅛(u·ω)² - 6 div² - curl²/12): claimed lower bound for the Q₁ term.
    pub q1_lower: f64,
    pub q2: f64,
    /// (λ/30) ∫∫|∇u|²
    pub q2_bound: f64,
    /// (λ/20)(div² + curl² + (u·ω)²)
    pub q2_bound_split: f64,
}

impl ElasticReport {
    pub fn new(c: &ElasticCoeffs, t: &WeightedTerms) -> Result<Self> {
        c.validate()?;
        let l = c.lambda;
        Ok(ElasticReport {
            lhs: c.nonlinear_integral(t),
            rhs: c.lower_bound(t),
            q1: c.q1_integral(t),
            q1_lower: 8.0 * l * (t.u_omega_sq / 8.0 - 6.0 * t.div_sq - t.curl_sq / 12.0),
            q2: c.q2_integral(t),
            q2_bound: l / 30.0 * t.grad_sq,
            q2_bound_split: l / 20.0 * (t.div_sq + t.curl_sq + t.u_omega_sq),
        })
    }

    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::bump::{Bump, BumpKind, EnsembleSpec};

    fn grid(cells: usize) -> Grid {
        Grid::new(3, cells, 2.0).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_terms() {
        let f = ManufacturedField::new(0, vec![]);
        let t = weighted_terms(&f, grid(16), 1, Exec::Sequential).unwrap();
        assert_eq!(t, WeightedTerms::default());
        let r = ElasticReport::new(&ElasticCoeffs::with_lambda(100.0), &t).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn gradient_field_has_no_curl_terms() {
        let f = ManufacturedField::new(
            0,
            vec![Bump {
                center: [0.1, 0.0, -0.1],
                radius: 1.5,
                amplitude: 0.8,
                kind: BumpKind::Gradient,
            }],
        );
        let t = weighted_terms(&f, grid(64), 4, Exec::default()).unwrap();
        assert!(t.curl_sq.abs() < 1e-20);
        let c = curl_weight_check(&f, grid(48), Exec::Sequential).unwrap();
        assert!(c.value.abs() < 1e-10, "{c:?}");
        let r = IdentityReport::from_terms(t);
        assert!(r.grad_identity < 1e-7, "{}", r.grad_identity);
        assert!(r.q_jk_identity < 1e-7 && r.q_ik_identity < 1e-7, "{r:?}");
    }

    #[test]
    fn divergence_free_field_has_no_divergence_terms() {
        let f = ManufacturedField::new(
            0,
            vec![Bump {
                center: [0.0, 0.1, 0.0],
                radius: 1.5,
                amplitude: 0.6,
                kind: BumpKind::Curl(2),
            }],
        );
        let t = weighted_terms(&f, grid(64), 4, Exec::default()).unwrap();
        assert!(t.div_sq < 1e-25 * t.grad_sq);
        let r = IdentityReport::from_terms(t);
        assert!(r.grad_identity < 1e-7 && r.q_jk_identity < 1e-7, "{r:?}");
        // pure curl: the elastic lower bound drops the λ² divergence term
        let c = ElasticCoeffs::with_lambda(100.0);
        let e = ElasticReport::new(&c, &t).unwrap();
        let want = 100.0 * t.curl_sq + 50.0 * t.u_omega_sq;
        assert!((e.rhs - want).abs() <= 1e-12 * want);
        assert!(e.holds(), "{e:?}");
    }

    #[test]
    fn sequential_and_parallel_agree_exactly() {
        let f = ManufacturedField::random(42, &EnsembleSpec::default()).unwrap();
        let a = weighted_terms(&f, grid(24), 2, Exec::Sequential).unwrap();
        let b = weighted_terms(&f, grid(24), 2, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identities_tighten_with_resolution() {
        let f = ManufacturedField::random(7, &EnsembleSpec::default()).unwrap();
        let coarse =
            IdentityReport::from_terms(weighted_terms(&f, grid(16), 1, Exec::default()).unwrap());
        let fine =
            IdentityReport::from_terms(weighted_terms(&f, grid(32), 1, Exec::default()).unwrap());
        for (c, f) in [
            (coarse.grad_identity, fine.grad_identity),
            (coarse.q_jk_identity, fine.q_jk_identity),
            (coarse.q_ik_identity, fine.q_ik_identity),
        ] {
            assert!(f * 3.0 <= c || f < 1e-12, "{c} -> {f}");
        }
    }

    #[test]
    fn coefficient_validation() {
        ElasticCoeffs::with_lambda(100.0).validate().unwrap();
        let bad = ElasticCoeffs {
            sigma11: 0.3,
            sigma3: 5.0,
            ..ElasticCoeffs::with_lambda(100.0)
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("σ11") && msg.contains("σ3"));
    }

    #[test]
    fn curl_of_gradient_is_small() {
        let tf = TestFunction::new(3).unwrap();
        let c = fd_curl_of_gradient(&tf, &[0.3, -0.7, 0.5]);
        assert!(c.iter().all(|v| v.abs() < 1e-9), "{c:?}");
    }
}
