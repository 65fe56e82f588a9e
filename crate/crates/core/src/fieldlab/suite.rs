//! Batch verification over seeded ensembles of manufactured fields.

use serde::{Deserialize, Serialize};

use super::bump::{EnsembleSpec, ManufacturedField};
use super::functionals::{functional_x, functional_y, holder_gap, positivity_functional, Weight};
use super::grid::{Grid, GridField};
use super::identities::{
    curl_weight_check, weighted_terms, ElasticCoeffs, ElasticReport, IdentityReport,
};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const IDENTITY_TOL: f64 = 1e-7;
pub const CURL_WEIGHT_TOL: f64 = 1e-8;
pub const LINEARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Euler,
    Elastic,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Suite::Euler),
            "elastic" => Ok(Suite::Elastic),
            "all" => Ok(Suite::All),
            _ => Err(Error::Config(format!(
                "unknown suite '{s}' (euler, elastic, all)"
            ))),
        }
    }
}

/// Whether a failing row breaks the run or is recorded as a finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// An exact identity or invariant: failure is a contract violation.
    Contract,
    /// A stated inequality with explicit constants: failure is reported, not fatal.
    Claim,
    /// A measured quantity with no pass criterion beyond being finite.
    Measurement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    /// Ensemble member (seed offset), or -1 for suite-wide checks.
    pub field: i64,
    pub resolution: usize,
    /// Residual, margin or measured value, depending on the check.
    pub value: f64,
    pub pass: bool,
    pub kind: CheckKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub suite: Suite,
    /// Cells per axis on [-2, 2]^3.
    pub resolution: usize,
    /// Gauss–Legendre points per cell axis for the vector identities.
    pub points: usize,
    pub seed: u64,
    pub fields: usize,
    pub holder_fields: usize,
    pub lambda: f64,
    pub exec: Exec,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suite: Suite::All,
            resolution: 96,
            points: 5,
            seed: 42,
            fields: 10,
            holder_fields: 50,
            lambda: 100.0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn contracts_hold(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.kind == CheckKind::Contract)
            .all(|r| r.pass)
    }

    pub fn failures(&self, kind: CheckKind) -> Vec<&CheckRow> {
        self.rows
            .iter()
            .filter(|r| r.kind == kind && !r.pass)
            .collect()
    }

    pub fn rows_named<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a CheckRow> + 'a {
        self.rows.iter().filter(move |r| r.check == check)
    }

    fn push(
        &mut self,
        check: &str,
        field: i64,
        resolution: usize,
        value: f64,
        pass: bool,
        kind: CheckKind,
    ) {
        self.rows.push(CheckRow {
            check: check.to_string(),
            field,
            resolution,
            value,
            pass,
            kind,
        });
    }
}

const HALF_WIDTH: f64 = 2.0;

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.resolution < 8 {
        return Err(Error::Config(format!(
            "resolution must be >= 8, got {}",
            cfg.resolution
        )));
    }
    let mut report = SuiteReport::default();
    if matches!(cfg.suite, Suite::Euler | Suite::All) {
        euler_checks(cfg, &mut report)?;
    }
    if matches!(cfg.suite, Suite::Elastic | Suite::All) {
        elastic_checks(cfg, &mut report)?;
    }
    Ok(report)
}

fn euler_checks(cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    let grid = Grid::new(3, cfg.resolution, HALF_WIDTH)?;
    let res = cfg.resolution;
    let spec = EnsembleSpec::default();
    let sample =
        |m: &ManufacturedField| GridField::sample(grid, 1, spec.support, |x| vec![m.scalar(x, 3)]);

    let gaps = cfg.exec.map(cfg.holder_fields, |k| -> Result<f64> {
        let m = ManufacturedField::random_scalar(cfg.seed + k as u64, &spec, 3)?;
        let (lhs, rhs) = holder_gap(&sample(&m), spec.support, Weight::Full)?;
        Ok(lhs - rhs)
    });
    for (k, gap) in gaps.into_iter().enumerate() {
        let gap = gap?;
        report.push(
            "holder",
            k as i64,
            res,
            gap,
            gap >= 0.0,
            CheckKind::Contract,
        );
    }

    // superposition: X and Y of a sum equal the sums
    let a = ManufacturedField::random_scalar(cfg.seed, &spec, 3)?;
    let b = ManufacturedField::random_scalar(cfg.seed + 1, &spec, 3)?;
    let (fa, fb) = (sample(&a), sample(&b));
    let mut fs = fa.clone();
    for (s, v) in fs.components[0].iter_mut().zip(&fb.components[0]) {
        *s += v;
    }
    let (xa, xb, xs) = (
        functional_x(&fa, Weight::Full)?,
        functional_x(&fb, Weight::Full)?,
        functional_x(&fs, Weight::Full)?,
    );
    let lin_x = (xs - xa - xb).abs() / (xa.abs() + xb.abs()).max(f64::MIN_POSITIVE);
    report.push(
        "linearity-x",
        -1,
        res,
        lin_x,
        lin_x <= LINEARITY_TOL,
        CheckKind::Contract,
    );

    let v1 = ManufacturedField::random(cfg.seed + 2, &spec)?;
    let v2 = ManufacturedField::random(cfg.seed + 3, &spec)?;
    let vel = |m: &ManufacturedField| {
        GridField::sample(grid, 3, spec.support, |x| m.vector_jet(x).u.to_vec())
    };
    let (u1, u2) = (vel(&v1), vel(&v2));
    let mut us = u1.clone();
    for (cs, c2) in us.components.iter_mut().zip(&u2.components) {
        for (s, v) in cs.iter_mut().zip(c2) {
            *s += v;
        }
    }
    let (y1, y2, ys) = (
        functional_y(&fa, &u1, Weight::Full)?,
        functional_y(&fa, &u2, Weight::Full)?,
        functional_y(&fa, &us, Weight::Full)?,
    );
    let lin_y = (ys - y1 - y2).abs() / (y1.abs() + y2.abs()).max(f64::MIN_POSITIVE);
    report.push(
        "linearity-y",
        -1,
        res,
        lin_y,
        lin_y <= LINEARITY_TOL,
        CheckKind::Contract,
    );

    // velocity amplitude needed for a positive initial functional, per density amplitude
    for (k, rho_amp) in [0.1, 0.2, 0.4].into_iter().enumerate() {
        let p = positivity_functional(grid, spec.support, rho_amp, 0.0)?;
        let t = p.threshold_velocity;
        report.push(
            &format!("positivity-threshold-rho{rho_amp}"),
            k as i64,
            res,
            t,
            t.is_finite(),
            CheckKind::Measurement,
        );
    }
    Ok(())
}

fn elastic_checks(cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    let grid = Grid::new(3, cfg.resolution, HALF_WIDTH)?;
    let res = cfg.resolution;
    let spec = EnsembleSpec::default();
    let base = ElasticCoeffs::with_lambda(cfg.lambda);
    base.validate()?;
    let tilted = ElasticCoeffs {
        sigma3: cfg.lambda / 100.0,
        ..base
    };

    for k in 0..cfg.fields {
        let m = ManufacturedField::random(cfg.seed + k as u64, &spec)?;
        let terms = weighted_terms(&m, grid, cfg.points, cfg.exec)?;
        let id = IdentityReport::from_terms(terms);
        let f = k as i64;
        use CheckKind::*;
        let contract = |r: &mut SuiteReport, name: &str, v: f64, tol: f64| {
            r.push(name, f, res, v, v <= tol, Contract)
        };
        contract(report, "grad-identity", id.grad_identity, IDENTITY_TOL);
        let cw = curl_weight_check(&m, grid, cfg.exec)?;
        contract(report, "curl-weight", cw.relative(), CURL_WEIGHT_TOL);
        contract(report, "q-jk-identity", id.q_jk_identity, IDENTITY_TOL);
        contract(report, "q-ik-identity", id.q_ik_identity, IDENTITY_TOL);
        contract(report, "grad-div-parts", id.grad_div_ibp, IDENTITY_TOL);
        contract(report, "grad-curl-parts", id.grad_curl_ibp, IDENTITY_TOL);
        report.push(
            "cross-coefficient",
            f,
            res,
            id.cross_coefficient,
            id.cross_coefficient.is_finite(),
            Measurement,
        );
        report.push(
            "grad-identity-unit-cross",
            f,
            res,
            id.grad_identity_unit_cross,
            id.grad_identity_unit_cross <= IDENTITY_TOL,
            Claim,
        );
        let claim = |r: &mut SuiteReport, name: &str, margin: f64| {
            r.push(name, f, res, margin, margin >= 0.0, Claim)
        };
        claim(report, "grad-bound", id.grad_bound_margin);
        claim(report, "q-jk-lower", id.q_jk_lower_margin);
        claim(report, "q-ik-upper", id.q_ik_upper_margin);
        for (tag, coeffs) in [("", &base), ("-sigma3", &tilted)] {
            let e = ElasticReport::new(coeffs, &terms)?;
            claim(report, &format!("q1-lower{tag}"), e.q1 - e.q1_lower);
            claim(report, &format!("q2-bound{tag}"), e.q2_bound - e.q2.abs());
            claim(
                report,
                &format!("q2-bound-split{tag}"),
                e.q2_bound_split - e.q2.abs(),
            );
            claim(report, &format!("elastic{tag}"), e.lhs - e.rhs);
        }
    }
    Ok(())
}
