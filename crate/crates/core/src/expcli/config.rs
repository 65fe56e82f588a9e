//! Experiment configs.
//!
//! A config is a TOML document with three top-level keys and one section named after
//! the experiment kind:
//!
//! ```toml
//! kind = "ode"          # weightfn | ode | verify | sim
//! seed = 7              # optional, default 0
//! out = "runs/ode-n3"   # optional, overridden by --out
//!
//! [ode]
//! mode = "sweep"
//! n = 3
//! eps = [0.04, 0.06, 0.08, 0.1, 0.14, 0.2]
//! ```
//!
//! Unknown keys, missing required keys, wrong types and out-of-range values are all
//! collected, each with the line and column of the offending key. The accepted keys of
//! every section are listed in the README.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::de::{DeTable, DeValue};
use toml::{Spanned, Table, Value};

use crate::error::{Error, Result};
use crate::fieldlab::Suite;
use crate::hypersim::InitData;
use crate::ode::{FitModel, OdeParams, DEFAULT_HORIZON, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Weightfn,
    Ode,
    Verify,
    Sim,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Weightfn, Kind::Ode, Kind::Verify, Kind::Sim];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Weightfn => "weightfn",
            Kind::Ode => "ode",
            Kind::Verify => "verify",
            Kind::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRun {
    pub init: InitData,
    /// Effective dimension of a slab run (ignored by mhd2d).
    pub n: usize,
    /// Cells (slab) or cells per axis (mhd2d).
    pub cells: usize,
    pub tmax: f64,
    pub interval: f64,
    pub snapshot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Job {
    WeightfnEval {
        n: usize,
        r: Vec<f64>,
    },
    WeightfnBall {
        n: usize,
        radius: Vec<f64>,
    },
    WeightfnEnvelope {
        n: usize,
        rmax: f64,
        steps: usize,
    },
    OdeRun {
        params: OdeParams,
        horizon: f64,
        threshold: f64,
    },
    OdeSweep {
        template: OdeParams,
        eps: Vec<f64>,
        horizon: f64,
        threshold: f64,
        fit: FitModel,
    },
    Verify {
        suite: Suite,
        resolution: usize,
        points: usize,
        fields: usize,
        holder_fields: usize,
        lambda: f64,
    },
    SlabEuler(SimRun),
    Mhd2d(SimRun),
    SlabLifespan {
        template: InitData,
        eps: Vec<f64>,
        spacing: f64,
        tcap: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub job: Job,
}

/// One problem found while loading a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    /// Dotted key path, e.g. `ode.n`.
    pub key: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

/// Every issue of a rejected config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string())
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

struct Ctx<'a> {
    src: &'a str,
    spans: Option<Spanned<DeTable<'a>>>,
    issues: Vec<ConfigIssue>,
}

impl<'a> Ctx<'a> {
    /// Start of the key at `path`, or of the deepest enclosing key that exists.
    fn locate(&self, path: &[&str]) -> Option<(usize, usize)> {
        let mut table = self.spans.as_ref()?.get_ref();
        let mut found = None;
        for (depth, part) in path.iter().enumerate() {
            let Some((k, v)) = table.iter().find(|(k, _)| k.get_ref().as_ref() == *part) else {
                break;
            };
            found = Some(k.span().start);
            match v.get_ref() {
                DeValue::Table(t) if depth + 1 < path.len() => table = t,
                _ => break,
            }
        }
        found.map(|o| line_col(self.src, o))
    }

    fn issue(&mut self, path: &[&str], message: impl Into<String>) {
        let pos = self.locate(path);
        self.issues.push(ConfigIssue {
            key: path.join("."),
            line: pos.map(|p| p.0),
            column: pos.map(|p| p.1),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, path: &[&str], message: impl FnOnce() -> String) {
        if !ok {
            self.issue(path, message());
        }
    }
}

/// Typed access to one section that remembers which keys were read.
struct Section<'t> {
    name: &'static str,
    table: &'t Table,
    used: BTreeSet<String>,
}

impl<'t> Section<'t> {
    fn new(name: &'static str, table: &'t Table) -> Self {
        Section {
            name,
            table,
            used: BTreeSet::new(),
        }
    }

    fn get(&mut self, key: &str) -> Option<&'t Value> {
        self.used.insert(key.to_string());
        self.table.get(key)
    }

    fn path<'k>(&self, key: &'k str) -> Vec<&'k str>
    where
        't: 'k,
    {
        if self.name.is_empty() {
            vec![key]
        } else {
            vec![self.name, key]
        }
    }

    fn number(&mut self, ctx: &mut Ctx, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                ctx.issue(
                    &self.path(key),
                    format!("expected a number, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn number_req(&mut self, ctx: &mut Ctx, key: &str) -> Option<f64> {
        if !self.table.contains_key(key) {
            ctx.issue(&[self.name], format!("missing required key '{key}'"));
        }
        self.number(ctx, key)
    }

    fn integer(&mut self, ctx: &mut Ctx, key: &str) -> Option<i64> {
        match self.get(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                ctx.issue(
                    &self.path(key),
                    format!("expected an integer, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn count(&mut self, ctx: &mut Ctx, key: &str) -> Option<usize> {
        let i = self.integer(ctx, key)?;
        if i < 0 {
            ctx.issue(&self.path(key), format!("must be >= 0, got {i}"));
            return None;
        }
        Some(i as usize)
    }

    fn count_req(&mut self, ctx: &mut Ctx, key: &str) -> Option<usize> {
        if !self.table.contains_key(key) {
            ctx.issue(&[self.name], format!("missing required key '{key}'"));
        }
        self.count(ctx, key)
    }

    /// A number or an array of numbers.
    fn numbers(&mut self, ctx: &mut Ctx, key: &str, required: bool) -> Option<Vec<f64>> {
        if required && !self.table.contains_key(key) {
            ctx.issue(&[self.name], format!("missing required key '{key}'"));
        }
        let v = match self.get(key)? {
            Value::Array(a) => a
                .iter()
                .map(|x| match x {
                    Value::Float(f) => Some(*f),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect::<Option<Vec<f64>>>(),
            Value::Float(f) => Some(vec![*f]),
            Value::Integer(i) => Some(vec![*i as f64]),
            _ => None,
        };
        if v.is_none() {
            ctx.issue(&self.path(key), "expected a number or an array of numbers");
        }
        v
    }

    fn string(&mut self, ctx: &mut Ctx, key: &str) -> Option<&'t str> {
        match self.get(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                ctx.issue(
                    &self.path(key),
                    format!("expected a string, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn choice<T: Copy>(
        &mut self,
        ctx: &mut Ctx,
        key: &str,
        options: &[(&str, T)],
        default: Option<T>,
    ) -> Option<T> {
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        let Some(s) = self.string(ctx, key) else {
            if default.is_none() && !self.table.contains_key(key) {
                ctx.issue(
                    &[self.name],
                    format!("missing required key '{key}' ({})", names.join(", ")),
                );
            }
            return if self.table.contains_key(key) {
                None
            } else {
                default
            };
        };
        let found = options.iter().find(|o| o.0 == s).map(|o| o.1);
        if found.is_none() {
            ctx.issue(
                &self.path(key),
                format!("unknown value '{s}', expected one of {}", names.join(", ")),
            );
        }
        found
    }

    fn boolean(&mut self, ctx: &mut Ctx, key: &str) -> Option<bool> {
        match self.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                ctx.issue(
                    &self.path(key),
                    format!("expected a boolean, found {}", other.type_str()),
                );
                None
            }
        }
    }

    /// Reports every key that was never read.
    fn finish(self, ctx: &mut Ctx) {
        for key in self.table.keys() {
            if !self.used.contains(key) {
                let path = self.path(key);
                ctx.issue(&path, "unknown key");
            }
        }
    }
}

fn check_dim(ctx: &mut Ctx, section: &str, n: Option<usize>, max: usize) -> usize {
    if let Some(n) = n {
        ctx.check((1..=max).contains(&n), &[section, "n"], || {
            format!("n must be 1..{max}, got {n}")
        });
    }
    n.unwrap_or(1)
}

fn check_radii(ctx: &mut Ctx, path: &[&str], r: &Option<Vec<f64>>) {
    if let Some(r) = r {
        ctx.check(!r.is_empty(), path, || "must not be empty".into());
        ctx.check(r.iter().all(|x| x.is_finite() && *x >= 0.0), path, || {
            "radii must be finite and >= 0".into()
        });
    }
}

fn check_sweep(ctx: &mut Ctx, path: &[&str], eps: &Option<Vec<f64>>, span: f64) {
    if let Some(e) = eps {
        ctx.check(e.len() >= 4, path, || {
            format!("a sweep needs at least 4 amplitudes, got {}", e.len())
        });
        let positive = e.iter().all(|x| x.is_finite() && *x > 0.0);
        ctx.check(positive, path, || {
            "amplitudes must be finite and > 0".into()
        });
        if positive && !e.is_empty() {
            let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = e.iter().copied().fold(0.0, f64::max);
            ctx.check(hi >= span * lo, path, || {
                format!("amplitudes must span a factor of {span}, got [{lo}, {hi}]")
            });
        }
    }
}

fn positive(ctx: &mut Ctx, path: &[&str], v: f64) {
    ctx.check(v.is_finite() && v > 0.0, path, || {
        format!("must be finite and > 0, got {v}")
    });
}

fn weightfn(ctx: &mut Ctx, table: &Table) -> Option<Job> {
    let mut s = Section::new("weightfn", table);
    let mode = s.choice(
        ctx,
        "mode",
        &[("eval", 0), ("ball", 1), ("envelope", 2)],
        None,
    );
    let n = s.count_req(ctx, "n");
    let n = check_dim(ctx, "weightfn", n, 3);
    let job = match mode {
        Some(0) => {
            let r = s.numbers(ctx, "r", true);
            check_radii(ctx, &["weightfn", "r"], &r);
            r.map(|r| Job::WeightfnEval { n, r })
        }
        Some(1) => {
            let radius = s.numbers(ctx, "radius", true);
            check_radii(ctx, &["weightfn", "radius"], &radius);
            radius.map(|radius| Job::WeightfnBall { n, radius })
        }
        Some(_) => {
            let rmax = s.number(ctx, "rmax").unwrap_or(50.0);
            let steps = s.count(ctx, "steps").unwrap_or(500);
            positive(ctx, &["weightfn", "rmax"], rmax);
            ctx.check(
                rmax <= crate::weightfn::MAX_RADIUS,
                &["weightfn", "rmax"],
                || format!("must be <= {}", crate::weightfn::MAX_RADIUS),
            );
            ctx.check(
                (1..=10_000_000).contains(&steps),
                &["weightfn", "steps"],
                || format!("must be 1..10000000, got {steps}"),
            );
            Some(Job::WeightfnEnvelope { n, rmax, steps })
        }
        None => None,
    };
    s.finish(ctx);
    job
}

fn ode(ctx: &mut Ctx, table: &Table) -> Option<Job> {
    let mut s = Section::new("ode", table);
    let mode = s.choice(ctx, "mode", &[("run", false), ("sweep", true)], None);
    let n = s.count_req(ctx, "n");
    let n = check_dim(ctx, "ode", n, 3);
    let mut p = OdeParams {
        n,
        ..OdeParams::default()
    };
    p.coupling = s.number(ctx, "coupling").unwrap_or(p.coupling);
    p.shift = s.number(ctx, "shift").unwrap_or(p.shift);
    p.wave_speed = s.number(ctx, "wave_speed").unwrap_or(p.wave_speed);
    p.domain_factor = s.number(ctx, "domain_factor").unwrap_or(p.domain_factor);
    p.x0 = s.number(ctx, "x0").unwrap_or(p.x0);
    let horizon = s.number(ctx, "horizon").unwrap_or(DEFAULT_HORIZON);
    let threshold = s.number(ctx, "threshold").unwrap_or(DEFAULT_THRESHOLD);
    ctx.check(
        p.coupling.is_finite() && p.coupling >= 0.0,
        &["ode", "coupling"],
        || format!("C must be finite and >= 0, got {}", p.coupling),
    );
    ctx.check(
        p.shift.is_finite() && p.shift >= 1.0,
        &["ode", "shift"],
        || format!("R0 must be >= 1, got {}", p.shift),
    );
    ctx.check(
        p.wave_speed.is_finite() && p.wave_speed >= 1.0,
        &["ode", "wave_speed"],
        || format!("a must be >= 1, got {}", p.wave_speed),
    );
    positive(ctx, &["ode", "domain_factor"], p.domain_factor);
    ctx.check(p.x0.is_finite() && p.x0 >= 0.0, &["ode", "x0"], || {
        format!("x0 must be >= 0, got {}", p.x0)
    });
    positive(ctx, &["ode", "horizon"], horizon);
    positive(ctx, &["ode", "threshold"], threshold);

    let job = match mode {
        Some(false) => {
            let eps = s.number_req(ctx, "eps");
            if let Some(e) = eps {
                positive(ctx, &["ode", "eps"], e);
                ctx.check(threshold > e * p.x0, &["ode", "threshold"], || {
                    format!(
                        "threshold must exceed the initial value eps * x0 = {}",
                        e * p.x0
                    )
                });
            }
            eps.map(|eps| Job::OdeRun {
                params: p.with_eps(eps),
                horizon,
                threshold,
            })
        }
        Some(true) => {
            let eps = s.numbers(ctx, "eps", true);
            check_sweep(ctx, &["ode", "eps"], &eps, 4.0);
            let fit = s.choice(
                ctx,
                "fit",
                &[("power", FitModel::Power), ("exp", FitModel::Exponential)],
                Some(FitModel::for_dimension(n)),
            );
            match (eps, fit) {
                (Some(eps), Some(fit)) => {
                    let template = p.with_eps(eps.iter().copied().fold(f64::INFINITY, f64::min));
                    Some(Job::OdeSweep {
                        template,
                        eps,
                        horizon,
                        threshold,
                        fit,
                    })
                }
                _ => None,
            }
        }
        None => None,
    };
    s.finish(ctx);
    // the module's own preconditions, in case the per-key checks above missed one
    if ctx.issues.is_empty() {
        if let Some(
            Job::OdeRun { params, .. }
            | Job::OdeSweep {
                template: params, ..
            },
        ) = &job
        {
            for v in params.violations() {
                ctx.issue(&["ode"], v);
            }
        }
    }
    job
}

fn verify(ctx: &mut Ctx, table: &Table) -> Option<Job> {
    let mut s = Section::new("verify", table);
    let suite = s.choice(
        ctx,
        "suite",
        &[
            ("euler", Suite::Euler),
            ("elastic", Suite::Elastic),
            ("all", Suite::All),
        ],
        Some(Suite::All),
    );
    let resolution = s.count(ctx, "resolution").unwrap_or(96);
    let points = s.count(ctx, "points").unwrap_or(5);
    let fields = s.count(ctx, "fields").unwrap_or(10);
    let holder_fields = s.count(ctx, "holder_fields").unwrap_or(50);
    let lambda = s.number(ctx, "lambda").unwrap_or(100.0);
    ctx.check(
        (8..=512).contains(&resolution),
        &["verify", "resolution"],
        || format!("must be 8..512, got {resolution}"),
    );
    ctx.check((1..=16).contains(&points), &["verify", "points"], || {
        format!("must be 1..16, got {points}")
    });
    ctx.check(fields >= 1, &["verify", "fields"], || "must be >= 1".into());
    ctx.check(holder_fields >= 1, &["verify", "holder_fields"], || {
        "must be >= 1".into()
    });
    positive(ctx, &["verify", "lambda"], lambda);
    s.finish(ctx);
    Some(Job::Verify {
        suite: suite?,
        resolution,
        points,
        fields,
        holder_fields,
        lambda,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum System {
    Slab,
    Mhd,
    Lifespan,
}

fn sim(ctx: &mut Ctx, table: &Table) -> Option<Job> {
    let mut s = Section::new("sim", table);
    let system = s.choice(
        ctx,
        "system",
        &[
            ("slab-euler", System::Slab),
            ("mhd2d", System::Mhd),
            ("slab-lifespan", System::Lifespan),
        ],
        None,
    );
    let mut init = InitData::default();
    init.rho_amp = s.number(ctx, "rho_amp").unwrap_or(init.rho_amp);
    init.vel_amp = s.number(ctx, "vel_amp").unwrap_or(init.vel_amp);
    if system != Some(System::Mhd) {
        init.transverse_amp = s.number(ctx, "transverse_amp").unwrap_or(0.0);
    }
    if system == Some(System::Mhd) {
        init.b0 = s.number(ctx, "b0").unwrap_or(0.0);
        init.h_amp = s.number(ctx, "h_amp").unwrap_or(0.0);
    }

    let job = match system {
        Some(sys @ (System::Slab | System::Mhd)) => {
            let eps = s.number_req(ctx, "eps");
            let n = if sys == System::Slab {
                s.count(ctx, "n")
            } else {
                None
            };
            let n = check_dim(ctx, "sim", n.or(Some(1)), 3);
            let cells =
                s.count(ctx, "cells")
                    .unwrap_or(if sys == System::Slab { 4096 } else { 512 });
            let tmax = s.number_req(ctx, "tmax");
            let interval = s.number(ctx, "interval");
            let snapshot = s.boolean(ctx, "snapshot").unwrap_or(false);
            let max_cells = if sys == System::Slab { 1 << 24 } else { 4096 };
            ctx.check((16..=max_cells).contains(&cells), &["sim", "cells"], || {
                format!("must be 16..{max_cells}, got {cells}")
            });
            if let Some(e) = eps {
                ctx.check(e.is_finite() && e >= 0.0, &["sim", "eps"], || {
                    format!("eps must be >= 0, got {e}")
                });
            }
            if let Some(t) = tmax {
                positive(ctx, &["sim", "tmax"], t);
            }
            let interval = interval.or(tmax.map(|t| t / 400.0));
            if let (Some(i), Some(t)) = (interval, tmax.filter(|t| *t > 0.0)) {
                ctx.check(i > 0.0 && i <= t, &["sim", "interval"], || {
                    format!("must lie in (0, tmax], got {i}")
                });
            }
            match (eps, tmax, interval) {
                (Some(eps), Some(tmax), Some(interval)) => {
                    let run = SimRun {
                        init: init.with_eps(eps),
                        n,
                        cells,
                        tmax,
                        interval,
                        snapshot,
                    };
                    Some(if sys == System::Slab {
                        Job::SlabEuler(run)
                    } else {
                        Job::Mhd2d(run)
                    })
                }
                _ => None,
            }
        }
        Some(System::Lifespan) => {
            let eps = s.numbers(ctx, "eps", true);
            check_sweep(ctx, &["sim", "eps"], &eps, 2.0);
            let spacing = s.number(ctx, "spacing").unwrap_or(1.25e-4);
            let tcap = s.number(ctx, "tcap").unwrap_or(8.0);
            positive(ctx, &["sim", "spacing"], spacing);
            positive(ctx, &["sim", "tcap"], tcap);
            eps.map(|eps| Job::SlabLifespan {
                template: init,
                eps,
                spacing,
                tcap,
            })
        }
        None => None,
    };
    s.finish(ctx);
    if ctx.issues.is_empty() {
        let (dim, inits): (usize, Vec<InitData>) = match &job {
            Some(Job::SlabEuler(r)) => (1, vec![r.init]),
            Some(Job::Mhd2d(r)) => (2, vec![r.init]),
            Some(Job::SlabLifespan { template, eps, .. }) => {
                (1, eps.iter().map(|&e| template.with_eps(e)).collect())
            }
            _ => (1, vec![]),
        };
        for init in inits {
            // zero amplitude is the constant state, which has nothing to check
            if init.eps == 0.0 {
                continue;
            }
            if let Err(e) = init.checked(dim) {
                ctx.issue(&["sim"], e.to_string());
                break;
            }
        }
    }
    job
}

/// Parses and validates a config document.
pub fn parse_config(src: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let table: Table = match src.parse() {
        Ok(t) => t,
        Err(e) => {
            let e: toml::de::Error = e;
            let pos = e.span().map(|s| line_col(src, s.start));
            return Err(ConfigErrors(vec![ConfigIssue {
                key: String::new(),
                line: pos.map(|p| p.0),
                column: pos.map(|p| p.1),
                message: format!("syntax error: {}", e.message()),
            }]));
        }
    };
    let mut ctx = Ctx {
        src,
        spans: DeTable::parse(src).ok(),
        issues: Vec::new(),
    };
    let mut top = Section::new("", &table);
    let kind = top.choice(&mut ctx, "kind", &Kind::ALL.map(|k| (k.as_str(), k)), None);
    let seed = match top.integer(&mut ctx, "seed") {
        Some(s) if s >= 0 => s as u64,
        Some(s) => {
            ctx.issue(&["seed"], format!("must be >= 0, got {s}"));
            0
        }
        None => 0,
    };
    let out = top.string(&mut ctx, "out").map(PathBuf::from);

    let mut job = None;
    for k in Kind::ALL {
        let name = k.as_str();
        let Some(v) = top.get(name) else {
            if kind == Some(k) {
                ctx.issue(&["kind"], format!("missing section [{name}]"));
            }
            continue;
        };
        let Value::Table(t) = v else {
            ctx.issue(&[name], "expected a table");
            continue;
        };
        if kind != Some(k) {
            ctx.issue(
                &[name],
                format!("section [{name}] does not apply to this kind"),
            );
            continue;
        }
        job = match k {
            Kind::Weightfn => weightfn(&mut ctx, t),
            Kind::Ode => ode(&mut ctx, t),
            Kind::Verify => verify(&mut ctx, t),
            Kind::Sim => sim(&mut ctx, t),
        };
    }
    top.finish(&mut ctx);

    match (kind, job) {
        (Some(kind), Some(job)) if ctx.issues.is_empty() => Ok(ExperimentConfig {
            kind,
            seed,
            out,
            job,
        }),
        _ => {
            if ctx.issues.is_empty() {
                ctx.issue(&[], "incomplete config");
            }
            Err(ConfigErrors(ctx.issues))
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&src).map_err(|e| Error::Config(format!("{}:\n{e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(src: &str) -> Vec<ConfigIssue> {
        parse_config(src).unwrap_err().0
    }

    #[test]
    fn minimal_ode_config_is_valid() {
        let c = parse_config(
            "kind = \"ode\"\n[ode]\nmode = \"sweep\"\nn = 3\neps = [0.04, 0.08, 0.12, 0.2]\n",
        )
        .unwrap();
        assert_eq!(c.kind, Kind::Ode);
        assert_eq!(c.seed, 0);
        match c.job {
            Job::OdeSweep {
                eps, fit, template, ..
            } => {
                assert_eq!(eps.len(), 4);
                assert_eq!(fit, FitModel::Exponential);
                assert_eq!(template.n, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_dimension_four_at_its_key() {
        let v = issues("kind = \"ode\"\n[ode]\nmode = \"run\"\nn = 4\neps = 0.1\n");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key, "ode.n");
        assert!(v[0].message.contains("n must be 1..3"), "{}", v[0]);
        assert_eq!((v[0].line, v[0].column), (Some(4), Some(1)));
    }

    #[test]
    fn names_a_missing_required_key() {
        let v = issues("kind = \"ode\"\n[ode]\nmode = \"run\"\nn = 3\n");
        assert!(v.iter().any(|i| i.message.contains("'eps'")), "{v:?}");
    }

    #[test]
    fn collects_every_error() {
        let src = "kind = \"sim\"\nseed = -1\ncolour = 3\n[sim]\nsystem = \"slab-euler\"\neps = -0.1\ntmax = 0\ncells = 4\nbogus = true\n";
        let v = issues(src);
        let keys: Vec<&str> = v.iter().map(|i| i.key.as_str()).collect();
        for k in [
            "seed",
            "colour",
            "sim.eps",
            "sim.tmax",
            "sim.cells",
            "sim.bogus",
        ] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
        assert!(v.iter().all(|i| i.line.is_some()), "{v:?}");
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let v = issues("kind = \"ode\"\n[ode\nn = 3\n");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, Some(2));
        assert!(v[0].message.starts_with("syntax error"));
    }

    #[test]
    fn rejects_sections_of_other_kinds() {
        let v = issues("kind = \"verify\"\n[verify]\n[ode]\nn = 1\n");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key, "ode");
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let v = issues("kind = \"plot\"\n");
        assert!(v[0].message.contains("weightfn, ode, verify, sim"), "{v:?}");
    }

    #[test]
    fn sim_validates_initial_data() {
        let v = issues(
            "kind = \"sim\"\n[sim]\nsystem = \"slab-euler\"\neps = 0.1\nvel_amp = 0.0\ntmax = 1\n",
        );
        assert!(v.iter().any(|i| i.message.contains("positivity")), "{v:?}");
        let ok = parse_config(
            "kind = \"sim\"\n[sim]\nsystem = \"mhd2d\"\neps = 0.1\nb0 = 1\nh_amp = 0.5\ntmax = 1\n",
        );
        assert!(matches!(
            ok.unwrap().job,
            Job::Mhd2d(SimRun { cells: 512, .. })
        ));
    }
}
