//! Command-line front end. Every subcommand renders JSON, CSV or text.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Format, RunConfig};
use crate::focus::{self, FocusError, FreePolicy};
use crate::manifold::{self, ManifoldError};
use crate::model::{self, ModelError, ModelParams};
use crate::netparse;
use crate::oracle::{self, OracleError};
use crate::rational::{self, Q};
use crate::sim::{self, CycleOptions, SimError};
use crate::spectral::{self, Param, SpectralError};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "cyclia",
    version,
    about = "Focus quantities, center manifolds and limit cycles of the calcium model"
)]
pub struct Cli {
    /// Output format; the default depends on the subcommand.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (`key = value` lines). Without it the bundled model is used.
    pub config: Option<PathBuf>,
    /// Overrides a configuration key, e.g. `--set k5=0.0514`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    K3,
    K4,
    K5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    G1,
    G2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parses a reaction network and prints its rate equations.
    Parse {
        /// Network file; the bundled calcium network when omitted.
        file: Option<PathBuf>,
    },
    /// Derived parameters, region report and spectrum.
    Analyze(ConfigArgs),
    /// Focus quantities g1..gn.
    Quantities {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        n: Option<usize>,
        /// Truncation order of the shifted system.
        #[arg(long)]
        order: Option<u32>,
        /// Binary64 arithmetic instead of exact rationals.
        #[arg(long)]
        float: bool,
    },
    /// Center-manifold series and the positivity test of the quadratic part.
    Manifold {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 3)]
        order: u32,
    },
    /// g1 along a parameter grid.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, default_value = "k5")]
        var: SweepVar,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Trajectory of the full system.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Initial state `X1,Y1,Z1`.
        #[arg(long, value_delimiter = ',')]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 200.0)]
        t: f64,
        /// Sampling interval.
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Limit cycles through the section Y1 = 1.
    Cycles {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// File of seeds, one `X1,Y1,Z1` per line.
        #[arg(long)]
        seeds: Option<PathBuf>,
    },
    /// Perturbation schedule from the degenerate Hopf point.
    Unfold {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1e-2)]
        factor_g1: f64,
        #[arg(long, default_value_t = 1e-2)]
        factor_alpha: f64,
    },
    /// Closed-form evaluation.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleAction {
    /// `g1 k3 k4 k5` or `g2 k5`.
    Eval {
        #[arg(value_enum)]
        which: Quantity,
        #[arg(allow_hyphen_values = true)]
        point: Vec<String>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Parse(String),
    #[error("region violated: {0}")]
    Region(String),
    #[error("spectral hypothesis violated: {0}")]
    Spectral(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse(_) => 2,
            CliError::Region(_) => 3,
            CliError::Spectral(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::TruncationOrder(_) | ModelError::Structure(_) => CliError::Parse(e.to_string()),
            _ => CliError::Spectral(e.to_string()),
        }
    }
}

impl From<FocusError> for CliError {
    fn from(e: FocusError) -> Self {
        match e {
            FocusError::Model(m) => m.into(),
            FocusError::SpectralHypothesisViolated { .. } => CliError::Spectral(e.to_string()),
            FocusError::DegreeOrder { .. } => CliError::Parse(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ManifoldError> for CliError {
    fn from(e: ManifoldError) -> Self {
        match e {
            ManifoldError::SpectralHypothesisViolated(_) => CliError::Spectral(e.to_string()),
            ManifoldError::Order(_) => CliError::Parse(e.to_string()),
            ManifoldError::Poly(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Spectral(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Region(r) => CliError::Region(r),
            SimError::Model(m) => m.into(),
            SimError::Focus(f) => f.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Pole { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

/// A rendered table for CSV output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn key_values(pairs: Vec<(String, String)>) -> Self {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in pairs {
            t.push(vec![k, v]);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let field = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = row.iter().map(|s| field(s)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// One command result in all three renderings.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub table: Table,
    pub text: String,
    pub default_format: Format,
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => self.table.to_csv(),
            Format::Text => {
                let mut s = self.text.clone();
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            }
        }
    }
}

fn envelope(command: &str, body: Value) -> Value {
    let mut v = json!({ "schema": SCHEMA, "command": command });
    if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
        m.extend(b);
    }
    v
}

fn exact(q: &Q) -> Value {
    json!({ "exact": rational::to_exact_string(q), "decimal": rational::to_f64(q) })
}

fn dec(q: &Q) -> String {
    format!("{}", rational::to_f64(q))
}

fn region_guard(cfg: &RunConfig) -> Result<(), CliError> {
    let r = cfg.region()?;
    if r.inside {
        return Ok(());
    }
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.holds).map(|c| c.label).collect();
    Err(CliError::Region(failed.join(", ")))
}

fn params_of(cfg: &RunConfig) -> Result<ModelParams, CliError> {
    Ok(cfg.params()??)
}

fn load(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(args.config.as_deref(), &args.set)?)
}

fn thread_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(CycleOptions::default().thread_count())
        .build()
        .expect("thread pool")
}

/// Runs a parsed command. Returns the rendered output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let (out, cfg_format) = execute(&cli.command)?;
    let format = cli.format.or(cfg_format).unwrap_or(out.default_format);
    Ok(out.render(format))
}

fn execute(cmd: &Command) -> Result<(Output, Option<Format>), CliError> {
    match cmd {
        Command::Parse { file } => Ok((parse_cmd(file.as_ref())?, None)),
        Command::Oracle {
            action: OracleAction::Eval { which, point },
        } => Ok((oracle_cmd(*which, point)?, None)),
        Command::Analyze(a) => {
            let cfg = load(a)?;
            Ok((analyze(&cfg)?, cfg.format))
        }
        Command::Quantities { cfg, n, order, float } => {
            let cfg = load(cfg)?;
            Ok((
                quantities(&cfg, n.unwrap_or(cfg.n), order.or(cfg.order), *float)?,
                cfg.format,
            ))
        }
        Command::Manifold { cfg, order } => {
            let cfg = load(cfg)?;
            Ok((manifold_cmd(&cfg, *order)?, cfg.format))
        }
        Command::Sweep {
            cfg,
            var,
            from,
            to,
            steps,
        } => {
            let cfg = load(cfg)?;
            Ok((sweep(&cfg, *var, from, to, *steps)?, cfg.format))
        }
        Command::Simulate { cfg, x0, t, dt } => {
            let cfg = load(cfg)?;
            Ok((simulate(&cfg, x0.as_deref(), *t, *dt)?, cfg.format))
        }
        Command::Cycles { cfg, seeds } => {
            let cfg = load(cfg)?;
            Ok((cycles(&cfg, seeds.as_ref())?, cfg.format))
        }
        Command::Unfold {
            cfg,
            factor_g1,
            factor_alpha,
        } => {
            let cfg = load(cfg)?;
            Ok((unfold(&cfg, *factor_g1, *factor_alpha)?, cfg.format))
        }
    }
}

fn parse_cmd(file: Option<&PathBuf>) -> Result<Output, CliError> {
    let text = match file {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?,
        None => netparse::OSN_NETWORK.to_string(),
    };
    let net = netparse::parse_network(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let odes = netparse::mass_action_odes(&net).map_err(|e| CliError::Parse(e.to_string()))?;
    let structure = model::check_osn_structure(&odes);
    let equations: Vec<String> = odes.to_string().lines().map(str::to_string).collect();
    let mut table = Table::new(&["species", "rate"]);
    for (s, eq) in odes.species.iter().zip(&equations) {
        let rhs = eq.split_once(" = ").map(|(_, r)| r).unwrap_or(eq);
        table.push(vec![s.clone(), rhs.to_string()]);
    }
    let mut text = format!("{net}\n{odes}");
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let _ = writeln!(
        text,
        "calcium-model structure: {}",
        match &structure {
            Ok(()) => "yes".to_string(),
            Err(e) => format!("no ({e})"),
        }
    );
    Ok(Output {
        json: envelope(
            "parse",
            json!({
                "species": odes.species,
                "rates": odes.rates,
                "network": net.to_string(),
                "equations": equations,
                "calcium_structure": structure.is_ok(),
            }),
        ),
        table,
        text,
        default_format: Format::Text,
    })
}

fn analyze(cfg: &RunConfig) -> Result<Output, CliError> {
    let (k3, k4, k5) = cfg.free_params()?;
    let region = cfg.region()?;
    region_guard(cfg)?;
    let p = params_of(cfg)?;
    let shifted = model::shift_to_equilibrium(&p)?;
    let s = spectral::spectrum(&shifted.jacobian);
    let closed = spectral::alpha_beta(&k3, &k4, &k5, &p.eps).ok();
    let dk5 = spectral::transversality(&k3, &k4, &k5, &p.eps, Param::K5).ok();
    let deps = spectral::transversality(&k3, &k4, &k5, &p.eps, Param::Eps).ok();
    let params = json!({
        "k1": exact(&p.k1), "k2": exact(&p.k2), "k3": exact(&p.k3),
        "k4": exact(&p.k4), "k5": exact(&p.k5), "eps": exact(&p.eps),
    });
    let json = envelope(
        "analyze",
        json!({
            "params": params,
            "normalization": p.flags,
            "region": region,
            "spectrum": s,
            "closed_form": closed.as_ref().map(|c| json!({
                "alpha": exact(&c.alpha), "beta": c.beta,
            })),
            "transversality": {
                "dalpha_dk5": dk5.as_ref().map(rational::to_f64),
                "dalpha_deps": deps.as_ref().map(rational::to_f64),
            },
        }),
    );
    let mut kv: Vec<(String, String)> = vec![
        ("k1".into(), dec(&p.k1)),
        ("k2".into(), dec(&p.k2)),
        ("k3".into(), dec(&p.k3)),
        ("k4".into(), dec(&p.k4)),
        ("k5".into(), dec(&p.k5)),
        ("eps".into(), dec(&p.eps)),
        ("region_inside".into(), region.inside.to_string()),
        ("lambda1".into(), s.lambda1.to_string()),
        ("alpha".into(), s.alpha.to_string()),
        ("beta".into(), s.beta.to_string()),
        ("hopf_normalized".into(), s.hopf_normalized.to_string()),
    ];
    if let Some(c) = &closed {
        kv.push(("alpha_closed_form".into(), dec(&c.alpha)));
        kv.push(("beta_closed_form".into(), c.beta.to_string()));
    }
    let mut text = String::new();
    let _ = writeln!(text, "parameters\n{p}");
    let _ = writeln!(text, "region\n{region}");
    let _ = writeln!(text, "spectrum");
    let _ = writeln!(text, "  lambda1 = {}", s.lambda1);
    let _ = writeln!(text, "  alpha +- i beta = {} +- i {}", s.alpha, s.beta);
    let _ = writeln!(text, "  -1 is an eigenvalue: {}", s.minus_one_is_eigenvalue);
    let _ = writeln!(text, "  Hopf normalized: {}", s.hopf_normalized);
    if let Some(c) = &closed {
        let _ = writeln!(text, "  closed form: alpha = {}, beta = {}", dec(&c.alpha), c.beta);
    }
    if let (Some(a), Some(b)) = (&dk5, &deps) {
        let _ = writeln!(text, "  dalpha/dk5 = {}, dalpha/deps = {}", dec(a), dec(b));
    }
    Ok(Output {
        json,
        table: Table::key_values(kv),
        text,
        default_format: Format::Text,
    })
}

fn quantities(cfg: &RunConfig, n: usize, order: Option<u32>, float: bool) -> Result<Output, CliError> {
    region_guard(cfg)?;
    let p = params_of(cfg)?;
    let order = order.unwrap_or_else(|| focus::sufficient_order(n));
    let system = focus::checked_system(&p, order)?;
    let warning = focus::order_warning(order, n);
    let policy = FreePolicy::default();
    let one_tenth = rational::ratio(1, 10);
    let g2_applies = p.k3 == one_tenth && p.k4 == one_tenth && n >= 2;
    let g1_cf = oracle::g1_closed_form(&p.k3, &p.k4, &p.k5).ok();
    let g2_cf = if g2_applies {
        oracle::g2_closed_form_k5(&p.k5).ok()
    } else {
        None
    };

    let mut table = Table::new(&["i", "degree", "g_exact", "g_decimal"]);
    let mut text = String::new();
    let gs: Vec<Value>;
    let ledger;
    let comparison;
    if float {
        let fq = focus::focus_quantities(&system.to_f64(), n, &policy)?;
        ledger = serde_json::to_value(&fq.candidate.ledger).expect("serializable");
        gs =
            fq.g.iter()
                .enumerate()
                .map(|(i, g)| json!({ "i": i + 1, "degree": fq.degrees[i], "decimal": g }))
                .collect();
        for (i, g) in fq.g.iter().enumerate() {
            table.push(vec![
                (i + 1).to_string(),
                fq.degrees[i].to_string(),
                String::new(),
                g.to_string(),
            ]);
            let _ = writeln!(text, "g{} = {g}", i + 1);
        }
        comparison = json!({
            "g1": g1_cf.as_ref().map(|c| json!({
                "closed_form": rational::to_f64(c),
                "abs_difference": (rational::to_f64(c) - fq.g[0]).abs(),
            })),
            "g2": g2_cf.as_ref().map(|c| json!({
                "closed_form": rational::to_f64(c),
                "abs_difference": (rational::to_f64(c) - fq.g[1]).abs(),
            })),
        });
    } else {
        let fq = focus::focus_quantities(&system.eqs, n, &policy)?;
        ledger = serde_json::to_value(&fq.candidate.ledger).expect("serializable");
        gs =
            fq.g.iter()
                .enumerate()
                .map(|(i, g)| {
                    json!({
                        "i": i + 1,
                        "degree": fq.degrees[i],
                        "exact": rational::to_exact_string(g),
                        "decimal": rational::to_f64(g),
                    })
                })
                .collect();
        for (i, g) in fq.g.iter().enumerate() {
            table.push(vec![
                (i + 1).to_string(),
                fq.degrees[i].to_string(),
                rational::to_exact_string(g),
                dec(g),
            ]);
            let _ = writeln!(text, "g{} = {} ({})", i + 1, dec(g), sign_word(g));
        }
        comparison = json!({
            "g1": g1_cf.as_ref().map(|c| json!({
                "closed_form": rational::to_f64(c),
                "equal": *c == fq.g[0],
            })),
            "g2": g2_cf.as_ref().map(|c| json!({
                "closed_form": rational::to_f64(c),
                "abs_difference": rational::to_f64(&(c - &fq.g[1]).abs()),
            })),
        });
    }
    let _ = writeln!(text, "ledger: {ledger}");
    if let Some(c) = &g1_cf {
        let _ = writeln!(text, "g1 closed form: {}", dec(c));
    }
    if let Some(c) = &g2_cf {
        let _ = writeln!(text, "g2 closed form: {}", dec(c));
    }
    if let Some(w) = &warning {
        let _ = writeln!(text, "warning: {w}");
    }
    Ok(Output {
        json: envelope(
            "quantities",
            json!({
                "arithmetic": if float { "binary64" } else { "exact" },
                "order": order,
                "g": gs,
                "ledger": ledger,
                "oracle": comparison,
                "warning": warning,
            }),
        ),
        table,
        text,
        default_format: Format::Text,
    })
}

fn sign_word(q: &Q) -> &'static str {
    if q.is_positive() {
        "positive"
    } else if q.is_negative() {
        "negative"
    } else {
        "zero"
    }
}

fn manifold_cmd(cfg: &RunConfig, order: u32) -> Result<Output, CliError> {
    region_guard(cfg)?;
    let p = params_of(cfg)?;
    let system = focus::checked_system(&p, order.max(3))?;
    let h = manifold::center_manifold_series(&system.eqs, order)?;
    let fq = focus::focus_quantities(&system.eqs, 1, &FreePolicy::default())?;
    let form = manifold::restrict_quadratic(&fq.candidate.quadratic_part(), &h)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let syl = manifold::sylvester_positive_definite(&form);
    let mut table = Table::new(&["l", "m", "exact", "decimal"]);
    let mut coeffs = Vec::new();
    for d in 1..=order as u16 {
        for l in (0..=d).rev() {
            let c = h.coeff(l, d - l);
            if c.is_zero() {
                continue;
            }
            table.push(vec![
                l.to_string(),
                (d - l).to_string(),
                rational::to_exact_string(&c),
                dec(&c),
            ]);
            coeffs.push(
                json!({ "l": l, "m": d - l, "exact": rational::to_exact_string(&c), "decimal": rational::to_f64(&c) }),
            );
        }
    }
    let mut text = String::new();
    let fh = h.h.to_f64();
    let _ = writeln!(text, "x = {}", fh.display(&crate::poly::XYZ));
    let _ = writeln!(
        text,
        "restricted quadratic form minors: {}, {}",
        dec(&syl.minors[0]),
        dec(&syl.minors[1])
    );
    let _ = writeln!(text, "positive definite: {}", syl.positive_definite);
    Ok(Output {
        json: envelope(
            "manifold",
            json!({ "order": order, "coefficients": coeffs, "sylvester": syl }),
        ),
        table,
        text,
        default_format: Format::Text,
    })
}

fn sweep(cfg: &RunConfig, var: SweepVar, from: &str, to: &str, steps: usize) -> Result<Output, CliError> {
    let parse = |s: &str| rational::parse(s).map_err(|e| CliError::Parse(e.to_string()));
    let (a, b) = (parse(from)?, parse(to)?);
    if steps == 0 {
        return Err(CliError::Parse("steps must be positive".into()));
    }
    let (k3, k4, k5) = match var {
        SweepVar::K3 => (None, cfg.k4.clone(), cfg.k5.clone()),
        SweepVar::K4 => (cfg.k3.clone(), None, cfg.k5.clone()),
        SweepVar::K5 => (cfg.k3.clone(), cfg.k4.clone(), None),
    };
    let need = |q: Option<Q>, name: &'static str| q.ok_or(CliError::Config(ConfigError::Missing(name)));
    let grid: Vec<Q> = (0..=steps)
        .map(|i| &a + (&b - &a) * Q::from_integer(i.into()) / Q::from_integer(steps.into()))
        .collect();
    let point = |v: &Q| -> Result<(Q, Q, Q), CliError> {
        Ok(match var {
            SweepVar::K3 => (v.clone(), need(k4.clone(), "k4")?, need(k5.clone(), "k5")?),
            SweepVar::K4 => (need(k3.clone(), "k3")?, v.clone(), need(k5.clone(), "k5")?),
            SweepVar::K5 => (need(k3.clone(), "k3")?, need(k4.clone(), "k4")?, v.clone()),
        })
    };
    let eval = |v: &Q| -> Result<Option<(Q, f64)>, CliError> {
        let (k3, k4, k5) = point(v)?;
        if !model::center_region_check(&k3, &k4, &k5).inside {
            return Ok(None);
        }
        let p = ModelParams::hopf_normalized(k3, k4, k5)?;
        let system = focus::checked_system(&p, 3)?;
        let policy = FreePolicy::default();
        let ge = focus::focus_quantities(&system.eqs, 1, &policy)?.g[0].clone();
        let gf = focus::focus_quantities(&system.to_f64(), 1, &policy)?.g[0];
        Ok(Some((ge, gf)))
    };
    let rows: Vec<Result<Option<(Q, f64)>, CliError>> = thread_pool().install(|| grid.par_iter().map(eval).collect());
    let name = match var {
        SweepVar::K3 => "k3",
        SweepVar::K4 => "k4",
        SweepVar::K5 => "k5",
    };
    let mut table = Table::new(&[name, "g1_exact", "g1_float", "sign"]);
    let mut text = format!("{name:>14} {:>24} {:>24} sign\n", "g1_exact", "g1_float");
    let mut json_rows = Vec::new();
    for (v, r) in grid.iter().zip(rows) {
        match r? {
            Some((ge, gf)) => {
                let s = match sign_word(&ge) {
                    "positive" => "+",
                    "negative" => "-",
                    _ => "0",
                };
                table.push(vec![dec(v), dec(&ge), gf.to_string(), s.to_string()]);
                let _ = writeln!(text, "{:>14} {:>24} {:>24} {s}", dec(v), dec(&ge), gf);
                json_rows.push(json!({ name: rational::to_exact_string(v), "g1_exact": rational::to_exact_string(&ge), "g1_decimal": rational::to_f64(&ge), "g1_float": gf, "sign": s }));
            }
            None => {
                table.push(vec![dec(v), String::new(), String::new(), "outside".into()]);
                let _ = writeln!(text, "{:>14} {:>24} {:>24} outside", dec(v), "", "");
                json_rows.push(json!({ name: rational::to_exact_string(v), "sign": "outside" }));
            }
        }
    }
    Ok(Output {
        json: envelope("sweep", json!({ "var": name, "rows": json_rows })),
        table,
        text,
        default_format: Format::Csv,
    })
}

fn simulate(cfg: &RunConfig, x0: Option<&[f64]>, t: f64, dt: f64) -> Result<Output, CliError> {
    if !(t > 0.0 && dt > 0.0) {
        return Err(CliError::Parse("t and dt must be positive".into()));
    }
    let p = params_of(cfg)?.to_f64();
    let x0 = match x0 {
        Some(&[a, b, c]) => [a, b, c],
        Some(v) => return Err(CliError::Parse(format!("x0 needs 3 values, got {}", v.len()))),
        None => sim::default_seeds(p.equilibrium())[0],
    };
    let tr = sim::integrate(&p, x0, t, cfg.tol, Some(dt))?;
    let mut table = Table::new(&["t", "X1", "Y1", "Z1"]);
    let mut text = String::new();
    for s in &tr.samples {
        table.push(s.iter().map(|v| v.to_string()).collect());
        let _ = writeln!(text, "{} {} {} {}", s[0], s[1], s[2], s[3]);
    }
    Ok(Output {
        json: envelope(
            "simulate",
            json!({ "x0": x0, "columns": ["t", "X1", "Y1", "Z1"], "samples": tr.samples, "stats": tr.stats }),
        ),
        table,
        text,
        default_format: Format::Csv,
    })
}

fn read_seeds(path: &PathBuf) -> Result<Vec<[f64; 3]>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut seeds = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.split('#').next().unwrap_or_default().trim();
        if t.is_empty() {
            continue;
        }
        let v: Vec<f64> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|w| !w.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Parse(format!("seeds line {}: expected three numbers", i + 1)))?;
        if v.len() != 3 {
            return Err(CliError::Parse(format!("seeds line {}: expected three numbers", i + 1)));
        }
        seeds.push([v[0], v[1], v[2]]);
    }
    Ok(seeds)
}

fn cycles(cfg: &RunConfig, seeds: Option<&PathBuf>) -> Result<Output, CliError> {
    let params = params_of(cfg)?;
    let s = spectral::spectrum(&model::shift_to_equilibrium(&params)?.jacobian);
    let p = params.to_f64();
    let seeds = match seeds {
        Some(path) => read_seeds(path)?,
        None => sim::default_seeds(p.equilibrium()),
    };
    let opts = CycleOptions {
        tol: cfg.tol,
        ..Default::default()
    };
    let rep = sim::detect_cycles(&p, &seeds, &opts);
    let mut table = Table::new(&[
        "index",
        "stability",
        "evidence",
        "X1",
        "Z1",
        "period",
        "mu",
        "r_in",
        "r_out",
    ]);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut text = format!("equilibrium {:?}, alpha = {}\n", rep.equilibrium, s.alpha);
    for (i, c) in rep.cycles.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            format!("{:?}", c.stability).to_lowercase(),
            serde_json::to_value(c.evidence)
                .expect("serializable")
                .as_str()
                .unwrap_or_default()
                .to_string(),
            c.fixed_point[0].to_string(),
            c.fixed_point[1].to_string(),
            opt(c.period),
            opt(c.mu),
            opt(c.radial_bracket.map(|b| b[0])),
            opt(c.radial_bracket.map(|b| b[1])),
        ]);
        let _ = writeln!(
            text,
            "cycle {i}: {:?} at ({}, {}), period {}, mu {}",
            c.stability,
            c.fixed_point[0],
            c.fixed_point[1],
            opt(c.period),
            opt(c.mu)
        );
        if let Some(b) = c.radial_bracket {
            let _ = writeln!(text, "  radial bracket [{}, {}]", b[0], b[1]);
        }
    }
    let _ = writeln!(text, "nested unstable cycle: {}", rep.nested());
    Ok(Output {
        json: envelope(
            "cycles",
            json!({
                "alpha": s.alpha,
                "equilibrium": rep.equilibrium,
                "cycles": rep.cycles,
                "seeds": rep.seeds,
                "nested": rep.nested(),
                "stats": rep.stats,
            }),
        ),
        table,
        text,
        default_format: Format::Json,
    })
}

fn unfold(cfg: &RunConfig, factor_g1: f64, factor_alpha: f64) -> Result<Output, CliError> {
    let (k3, k4, _) = match cfg.free_params() {
        Ok(v) => v,
        Err(ConfigError::Missing("k5")) => (
            cfg.k3.clone().ok_or(ConfigError::Missing("k3"))?,
            cfg.k4.clone().ok_or(ConfigError::Missing("k4"))?,
            Q::zero(),
        ),
        Err(e) => return Err(e.into()),
    };
    let opts = sim::UnfoldOptions {
        factor_g1,
        factor_alpha,
        ..Default::default()
    };
    let s = sim::unfold_bautin(&k3, &k4, &opts)?;
    let mut table = Table::new(&["step", "k5", "eps", "k2", "k1", "alpha", "g1", "g2", "signs_ok"]);
    let mut text = format!(
        "root of g1 in k5: [{}, {}]\ndg1/dk5 = {}, dalpha/deps = {}\n",
        dec(&s.bracket.lo),
        dec(&s.bracket.hi),
        s.dg1_dk5,
        s.dalpha_deps
    );
    for st in &s.steps {
        table.push(vec![
            st.label.to_string(),
            dec(&st.k5),
            dec(&st.eps),
            dec(&st.k2),
            dec(&st.k1),
            st.alpha.to_string(),
            st.g1.to_string(),
            st.g2.to_string(),
            st.signs_ok.to_string(),
        ]);
        let _ = writeln!(
            text,
            "{}: k5 = {}, eps = {}, alpha = {:e}, g1 = {:e}, g2 = {:e}, signs {}",
            st.label,
            dec(&st.k5),
            dec(&st.eps),
            st.alpha,
            st.g1,
            st.g2,
            if st.signs_ok { "ok" } else { "violated" }
        );
    }
    Ok(Output {
        json: envelope("unfold", serde_json::to_value(&s).expect("serializable")),
        table,
        text,
        default_format: Format::Json,
    })
}

fn oracle_cmd(which: Quantity, point: &[String]) -> Result<Output, CliError> {
    let pt: Vec<Q> = point
        .iter()
        .map(|s| rational::parse(s).map_err(|e| CliError::Parse(e.to_string())))
        .collect::<Result<_, _>>()?;
    let (name, data) = match which {
        Quantity::G1 => ("g1", oracle::g1_data()),
        Quantity::G2 => ("g2", oracle::g2_data()),
    };
    let v = data.evaluate(&pt)?;
    let mut table = Table::new(&["quantity", "exact", "decimal"]);
    table.push(vec![name.to_string(), rational::to_exact_string(&v), dec(&v)]);
    Ok(Output {
        json: envelope(
            "oracle",
            json!({
                "quantity": name,
                "vars": data.vars,
                "point": pt.iter().map(rational::to_exact_string).collect::<Vec<_>>(),
                "value": exact(&v),
            }),
        ),
        table,
        text: format!("{name} = {} ({})\n", dec(&v), rational::to_exact_string(&v)),
        default_format: Format::Text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Result<String, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("cyclia").chain(args.iter().copied())).unwrap();
        run(&cli)
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1,2".into(), "x\"y".into()]);
        assert_eq!(t.to_csv(), "a,b\n\"1,2\",\"x\"\"y\"\n");
    }

    #[test]
    fn region_violation_exit_code() {
        let e = run_args(&["analyze", "--set", "k3=1/4", "--set", "k4=1/10", "--set", "k5=1/20"]).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("8 k3 < 1"));
    }

    #[test]
    fn oracle_eval_json() {
        let out = run_args(&["--format", "json", "oracle", "eval", "g1", "1/10", "1/10", "13/200"]).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(v["value"]["decimal"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn oracle_pole_is_numerical() {
        let e = run_args(&["oracle", "eval", "g2", "1"]).unwrap_err();
        assert_eq!(e.exit_code(), 5);
    }

    #[test]
    fn parse_bundled_text() {
        let out = run_args(&["parse"]).unwrap();
        assert!(out.contains("calcium-model structure: yes"));
    }
}
