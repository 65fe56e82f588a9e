//! Command-line front end.
//!
//! Subcommand flags are turned into the same TOML document a config file would hold,
//! so both paths share validation and the manifest records an equivalent config.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use super::config::{parse_config, ConfigErrors, ExperimentConfig, Job, Kind};
use super::orchestrate::{orchestrate, weightfn_table};
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(
    name = "blowup-lab",
    version,
    about = "Weight functions, comparison ODE lifespans, identity audits and hyperbolic simulations"
)]
pub struct Cli {
    /// Experiment config (TOML); inline parameters are then not allowed.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV, SVG and manifest files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for data-parallel loops.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// May be omitted with `--config`, whose `kind` then selects the experiment.
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate F, its ball integrals or its growth envelope.
    Weightfn(WeightfnArgs),
    /// Integrate the comparison ODE or sweep its lifespan.
    Ode(OdeArgs),
    /// Check the multiplier identities on manufactured fields.
    Verify(VerifyArgs),
    /// Run a slab Euler or 2D MHD simulation.
    Sim(SimArgs),
}

#[derive(Debug, Args, Default)]
pub struct WeightfnArgs {
    #[arg(value_parser = ["eval", "ball", "envelope"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub r: Vec<f64>,
    #[arg(long = "R", value_delimiter = ',', allow_negative_numbers = true)]
    pub radius: Vec<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub steps: Option<i64>,
    #[arg(long)]
    pub seed: Option<i64>,
}

#[derive(Debug, Args, Default)]
pub struct OdeArgs {
    #[arg(value_parser = ["run", "sweep"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    #[arg(long = "R0", allow_negative_numbers = true)]
    pub shift: Option<f64>,
    #[arg(long = "a", allow_negative_numbers = true)]
    pub wave_speed: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "eps",
        allow_negative_numbers = true
    )]
    pub eps_list: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long = "omega-factor", allow_negative_numbers = true)]
    pub domain_factor: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_parser = ["power", "exp"])]
    pub fit: Option<String>,
    #[arg(long)]
    pub seed: Option<i64>,
}

#[derive(Debug, Args, Default)]
pub struct VerifyArgs {
    #[arg(value_parser = ["identities"])]
    pub mode: Option<String>,
    #[arg(long, value_parser = ["euler", "elastic", "all"])]
    pub suite: Option<String>,
    #[arg(long)]
    pub resolution: Option<i64>,
    #[arg(long)]
    pub points: Option<i64>,
    #[arg(long)]
    pub fields: Option<i64>,
    #[arg(long)]
    pub holder_fields: Option<i64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<i64>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[arg(value_parser = ["slab-euler", "mhd2d", "slab-lifespan"])]
    pub system: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "eps",
        allow_negative_numbers = true
    )]
    pub eps_list: Vec<f64>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub cells: Option<i64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub interval: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho_amp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub vel_amp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub transverse_amp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h_amp: Option<f64>,
    #[arg(long)]
    pub snapshot: bool,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub tcap: Option<f64>,
    #[arg(long)]
    pub seed: Option<i64>,
}

/// Collects the flags that were actually given into a TOML table.
#[derive(Default)]
struct Builder(Table);

impl Builder {
    fn put<T: Into<Value>>(&mut self, key: &str, v: Option<T>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), v.into());
        }
        self
    }

    fn list(&mut self, key: &str, v: &[f64]) -> &mut Self {
        if !v.is_empty() {
            self.0.insert(
                key.into(),
                Value::Array(v.iter().map(|&x| Value::Float(x)).collect()),
            );
        }
        self
    }
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Command::Weightfn(_) => Kind::Weightfn,
            Command::Ode(_) => Kind::Ode,
            Command::Verify(_) => Kind::Verify,
            Command::Sim(_) => Kind::Sim,
        }
    }

    /// `(seed, section)` built from the inline flags.
    fn inline(&self) -> (Option<i64>, Table) {
        let mut b = Builder::default();
        let seed = match self {
            Command::Weightfn(a) => {
                b.put("mode", a.mode.clone())
                    .put("n", a.n)
                    .list("r", &a.r)
                    .list("radius", &a.radius);
                b.put("rmax", a.rmax).put("steps", a.steps);
                a.seed
            }
            Command::Ode(a) => {
                b.put("mode", a.mode.clone())
                    .put("n", a.n)
                    .put("coupling", a.coupling)
                    .put("shift", a.shift);
                b.put("wave_speed", a.wave_speed)
                    .put("eps", a.eps)
                    .list("eps", &a.eps_list)
                    .put("x0", a.x0);
                b.put("domain_factor", a.domain_factor)
                    .put("horizon", a.horizon)
                    .put("threshold", a.threshold);
                b.put("fit", a.fit.clone());
                a.seed
            }
            Command::Verify(a) => {
                b.put("suite", a.suite.clone())
                    .put("resolution", a.resolution)
                    .put("points", a.points);
                b.put("fields", a.fields)
                    .put("holder_fields", a.holder_fields)
                    .put("lambda", a.lambda);
                a.seed
            }
            Command::Sim(a) => {
                b.put("system", a.system.clone())
                    .put("eps", a.eps)
                    .list("eps", &a.eps_list)
                    .put("n", a.n);
                b.put("cells", a.cells)
                    .put("tmax", a.tmax)
                    .put("interval", a.interval);
                b.put("rho_amp", a.rho_amp)
                    .put("vel_amp", a.vel_amp)
                    .put("transverse_amp", a.transverse_amp);
                b.put("b0", a.b0)
                    .put("h_amp", a.h_amp)
                    .put("spacing", a.spacing)
                    .put("tcap", a.tcap);
                b.put("snapshot", a.snapshot.then_some(true));
                a.seed
            }
        };
        (seed, b.0)
    }

    fn has_inline(&self) -> bool {
        let (seed, t) = self.inline();
        seed.is_some() || !t.is_empty()
    }
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    2
}

fn configure_threads(jobs: Option<usize>) -> Result<(), String> {
    let Some(k) = jobs else { return Ok(()) };
    if k == 0 {
        return Err("--jobs must be at least 1".into());
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        eprintln!("warning: built without the `parallel` feature, --jobs {k} is ignored");
        Ok(())
    }
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, String), i32> {
    if let Some(path) = &cli.config {
        if cli.command.as_ref().is_some_and(Command::has_inline) {
            return Err(usage("inline parameters cannot be combined with --config"));
        }
        let text = std::fs::read_to_string(path).map_err(|e| usage(Error::io(path, e)))?;
        let cfg = parse_config(&text)
            .map_err(|e| usage(format!("invalid config {}:\n{e}", path.display())))?;
        if let Some(kind) = cli
            .command
            .as_ref()
            .map(Command::kind)
            .filter(|k| *k != cfg.kind)
        {
            return Err(usage(format!(
                "config kind '{}' does not match subcommand '{}'",
                cfg.kind.as_str(),
                kind.as_str()
            )));
        }
        return Ok((cfg, text));
    }
    let Some(command) = &cli.command else {
        return Err(usage("give a subcommand or --config <file>"));
    };
    let kind = command.kind();
    let (seed, section) = command.inline();
    let mut doc = Table::new();
    doc.insert("kind".into(), Value::String(kind.as_str().into()));
    if let Some(s) = seed {
        doc.insert("seed".into(), Value::Integer(s));
    }
    doc.insert(kind.as_str().into(), Value::Table(section));
    let text = toml::to_string(&doc).map_err(usage)?;
    match parse_config(&text) {
        Ok(cfg) => Ok((cfg, text)),
        Err(ConfigErrors(issues)) => {
            // positions refer to the generated document, not to anything the user typed
            let lines: Vec<String> = issues
                .into_iter()
                .map(|mut i| {
                    i.line = None;
                    i.column = None;
                    i.to_string()
                })
                .collect();
            Err(usage(lines.join("\n")))
        }
    }
}

/// Parses `args`, runs the experiment and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads(cli.jobs) {
        return usage(msg);
    }
    let (cfg, text) = match load(&cli) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let out = cli.out.clone().or_else(|| cfg.out.clone());
    let Some(dir) = out.or_else(|| (cfg.kind != Kind::Weightfn).then(|| default_dir(&cfg))) else {
        // weight-function tables go to stdout when no directory is given
        return match weightfn_table(&cfg.job).and_then(|t| t.to_bytes()) {
            Ok(bytes) => {
                print!("{}", String::from_utf8_lossy(&bytes));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        };
    };
    match orchestrate(&cfg, &text, &dir) {
        Ok(m) => {
            for r in &m.runs {
                let failed: Vec<String> = r
                    .contracts
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("{} = {:e} (want {})", c.name, c.value, c.limit))
                    .collect();
                eprintln!(
                    "{}: {:?} in {:.2} s, outputs in {}",
                    r.name,
                    r.status,
                    r.wall_clock_s,
                    dir.display()
                );
                for f in failed {
                    eprintln!("  contract violated: {f}");
                }
                for f in &r.findings {
                    eprintln!("  finding: {f}");
                }
                if let Some(d) = &r.diagnostic {
                    eprintln!("  error: {d}");
                }
            }
            m.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn default_dir(cfg: &ExperimentConfig) -> PathBuf {
    let name = match &cfg.job {
        Job::OdeRun { .. } => "ode-run",
        Job::OdeSweep { .. } => "ode-sweep",
        Job::Verify { .. } => "verify",
        Job::SlabEuler(_) => "sim-slab-euler",
        Job::Mhd2d(_) => "sim-mhd2d",
        Job::SlabLifespan { .. } => "sim-slab-lifespan",
        _ => "weightfn",
    };
    PathBuf::from("runs").join(name)
}
