//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] from an optional TOML file, then
//! from its flags (flags win), runs a suite and writes a JSON report. Exit
//! status: 0 when every check passes, 1 on a failed check or an evaluation
//! error, 2 on usage, configuration or expression errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::examples::{self, WorkedExample};
use crate::fields::ScalarFieldRn;
use crate::geometry::{bianchi_gap, ricci_at, scalar_curvature_at, ConformalMetric};
use crate::gqe::{
    phi_from_v, radial_structure, reparametrize_nu, translation_structure, wedge_invariant_at, GQEStructure,
    PhiTransform,
};
use crate::grid::{ball_points, drop_near_zeros, radial_grid, translation_grid, GridSpec, Sample};
use crate::oracle::{fd_curvature, RawMetric};
use crate::profiles::catalog;
use crate::profiles::{ExpressionAst, Profile1D, ProfileError};
use crate::report::{Check, VerificationReport};
use crate::rigidity::{self, ModelKind, SphereTolerances, SphereWitness};
use crate::suite::{rows_to_csv, verify_subject, Row, Subject, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Radial,
    Translation,
}

/// Everything a run depends on. Serialized canonically for the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub family: Family,
    /// Catalog name or expression in the symmetry variable (`r` or `u`).
    pub phi: String,
    pub f: String,
    /// Translation direction; defaults to `e₁`.
    pub alpha: Option<Vec<f64>>,
    pub c: f64,
    /// `v(t)` for the transformed equation, `"auto"` for `ν∘f⁻¹`, or unset.
    pub v: Option<String>,
    pub c1: f64,
    pub c2: f64,
    /// Base point of both antiderivatives; defaults to the low end of the
    /// working interval.
    pub t0: Option<f64>,
    pub lambda_offset: f64,
    pub radii: Vec<f64>,
    pub lengths: Vec<f64>,
    pub sup_phi: Option<f64>,
    pub rho: f64,
    pub k: f64,
    pub points: usize,
    /// Curvature samples are taken from the grid inside this Euclidean ball,
    /// where the finite-difference oracle is trustworthy.
    pub oracle_radius: f64,
    pub seed: u64,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            family: Family::Radial,
            phi: "gaussian-factor".into(),
            f: "r".into(),
            alpha: None,
            c: 1.0,
            v: None,
            c1: 1.0,
            c2: 0.0,
            t0: None,
            lambda_offset: 0.0,
            radii: vec![0.5, 1.0, 2.0],
            lengths: vec![1.0, 10.0, 100.0],
            sup_phi: None,
            rho: 1.0,
            k: 1.0,
            points: 20,
            oracle_radius: 1.5,
            seed: 42,
            grid: GridSpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n < 3 {
            return Err(format!("n = {} but at least 3 is required", self.n));
        }
        self.grid.validate().map_err(|e| e.to_string())?;
        if !(self.oracle_radius > 0.0) {
            return Err("oracle_radius must be positive".into());
        }
        if self.points == 0 {
            return Err("points must be positive".into());
        }
        let t = serde_json::to_value(&self.tolerances).map_err(|e| e.to_string())?;
        for (k, v) in t.as_object().into_iter().flatten() {
            if !(v.as_f64().is_some_and(|x| x > 0.0)) {
                return Err(format!("tolerance {k} must be positive"));
            }
        }
        if let Some(a) = &self.alpha {
            if a.len() != self.n {
                return Err(format!("alpha has {} components, n = {}", a.len(), self.n));
            }
        }
        Ok(())
    }

    fn alpha(&self) -> Vec<f64> {
        self.alpha.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; self.n];
            e[0] = 1.0;
            e
        })
    }

    fn var(&self) -> &'static str {
        match self.family {
            Family::Radial => "r",
            Family::Translation => "u",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gqe", version, about = "Generalized quasi-Einstein structures on conformally flat R^n")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML file with configuration keys (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of per-sample values.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Omit the timestamp field from the report.
    #[arg(long)]
    no_timestamp: bool,
    /// Override any configuration key, e.g. `grid.r_count=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct StructureFlags {
    #[arg(long, value_parser = ["radial", "translation"])]
    family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// Comma-separated direction for translation families.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_offset: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct TransformFlags {
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify a radial or translation family built from profiles.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        s: StructureFlags,
        #[command(flatten)]
        t: TransformFlags,
    },
    /// Verify one of the worked examples (1, 2 or 3).
    Example {
        id: u8,
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda_offset: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Option<Vec<f64>>,
    },
    /// Closed-form curvature against the finite-difference oracle.
    Curvature {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        s: StructureFlags,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Wedge condition, trace-fitted lambda and divergence identity.
    Invariants {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        s: StructureFlags,
    },
    /// Round-sphere potential in the stereographic chart.
    SphereWitness {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        t: TransformFlags,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Annulus integral of |traceless Ric(grad u)| for a radial structure.
    Karp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        s: StructureFlags,
        #[command(flatten)]
        t: TransformFlags,
        /// Use a worked example instead of --phi/--f.
        #[arg(long)]
        example: Option<u8>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Ray lengths against the bounded-factor lower bound T/sup|phi|.
    CompleteCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        s: StructureFlags,
        #[arg(long)]
        example: Option<u8>,
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<f64>>,
        #[arg(long)]
        sup_phi: Option<f64>,
    },
    /// Scalar curvature of the Euclidean, hyperbolic and flat-fiber charts.
    Models {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Parse an expression and print its canonical form (and jet with --at).
    ParseCheck {
        expr: String,
        #[arg(long, default_value = "r")]
        var: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<f64>,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Eval(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let usage = matches!(
            e,
            Error::Profile(
                ProfileError::Syntax { .. } | ProfileError::UnknownIdentifier { .. } | ProfileError::UnknownCatalogEntry(_)
            ) | Error::InvalidParameter(_)
                | Error::InvalidDimension(_)
                | Error::DimensionMismatch { .. }
                | Error::DegenerateDirection
                | Error::DegenerateTransform
                | Error::OutsideWorkingInterval { .. }
        );
        if usage {
            Failure::Usage(e.to_string())
        } else {
            Failure::Eval(e.to_string())
        }
    }
}

impl From<ProfileError> for Failure {
    fn from(e: ProfileError) -> Self {
        Error::from(e).into()
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(pass) => {
            if pass {
                0
            } else {
                1
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Eval(m)) => {
            eprintln!("evaluation failed: {m}");
            1
        }
    }
}

type Overrides = Vec<(String, toml::Value)>;

fn push<T: Into<toml::Value>>(o: &mut Overrides, key: &str, v: Option<T>) {
    if let Some(v) = v {
        o.push((key.to_string(), v.into()));
    }
}

fn structure_overrides(o: &mut Overrides, s: &StructureFlags) {
    push(o, "family", s.family.clone());
    push(o, "phi", s.phi.clone());
    push(o, "f", s.f.clone());
    push(o, "alpha", s.alpha.clone());
    push(o, "lambda_offset", s.lambda_offset);
}

fn transform_overrides(o: &mut Overrides, t: &TransformFlags) {
    push(o, "v", t.v.clone());
    push(o, "c1", t.c1);
    push(o, "c2", t.c2);
    push(o, "t0", t.t0);
}

fn set_path(table: &mut toml::Table, key: &str, v: toml::Value) -> Result<(), Failure> {
    let mut parts = key.split('.').peekable();
    let mut cur = table;
    while let Some(p) = parts.next() {
        if parts.peek().is_none() {
            cur.insert(p.to_string(), v);
            return Ok(());
        }
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Failure::Usage(format!("'{p}' in '{key}' is not a table")))?;
    }
    Err(Failure::Usage(format!("empty key in --set '{key}'")))
}

fn parse_set(s: &str) -> Result<(String, toml::Value), Failure> {
    let (k, v) = s.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got '{s}'")))?;
    let parsed = format!("x = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("x").cloned())
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((k.trim().to_string(), parsed))
}

fn resolve_config(common: &Common, mut flags: Overrides) -> Result<RunConfig, Failure> {
    let mut table = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    push(&mut flags, "n", common.n.map(|n| n as i64));
    push(&mut flags, "seed", common.seed.map(|s| s as i64));
    for s in &common.set {
        flags.push(parse_set(s)?);
    }
    for (k, v) in flags {
        set_path(&mut table, &k, v)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Failure::Usage(format!("configuration: {}", e.message())))?;
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Hashed<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    command: &'a str,
    checks: &'a [Check],
    values: BTreeMap<String, serde_json::Value>,
    tolerances: &'a BTreeMap<String, f64>,
    config: &'a RunConfig,
    config_hash: String,
    seed: u64,
    overall_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

/// JSON has no infinities: non-finite values are written as strings.
fn json_number(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `sha256` of the canonical JSON of the command and resolved configuration.
pub fn config_hash(command: &str, cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(&Hashed { command, config: cfg }).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Outcome {
    command: String,
    cfg: RunConfig,
    report: VerificationReport,
    tolerances: BTreeMap<String, f64>,
    rows: Option<(String, Vec<Row>)>,
}

fn tolerance_map(t: &Tolerances) -> BTreeMap<String, f64> {
    let v = serde_json::to_value(t).expect("tolerances serialize");
    v.as_object()
        .into_iter()
        .flatten()
        .map(|(k, v)| (k.clone(), v.as_f64().unwrap_or(f64::NAN)))
        .collect()
}

fn write_outputs(common: &Common, o: &Outcome) -> Result<bool, Failure> {
    let pass = o.report.overall_pass();
    let timestamp = if common.no_timestamp {
        None
    } else {
        Some(SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
    };
    let json = JsonReport {
        command: &o.command,
        checks: &o.report.checks,
        values: o.report.values.iter().map(|(k, v)| (k.clone(), json_number(*v))).collect(),
        tolerances: &o.tolerances,
        config: &o.cfg,
        config_hash: config_hash(&o.command, &o.cfg),
        seed: o.cfg.seed,
        overall_pass: pass,
        timestamp,
    };
    let text = serde_json::to_string_pretty(&json).map_err(|e| Failure::Eval(e.to_string()))? + "\n";
    match &common.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    match (&common.csv, &o.rows) {
        (Some(p), Some((var, rows))) => write_file(p, &rows_to_csv(var, rows))?,
        (Some(_), None) => return Err(Failure::Usage(format!("--csv is not available for '{}'", o.command))),
        _ => {}
    }
    for c in &o.report.checks {
        eprintln!(
            "{} {:<34} max {:.3e}  tol {:.1e}  ({} points, {} skipped)",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.max_gap,
            c.tol,
            c.points_evaluated,
            c.points_skipped
        );
    }
    Ok(pass)
}

fn write_file(p: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))
}

fn dispatch(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::ParseCheck { expr, var, at } => parse_check(&expr, &var, at),
        Command::Verify { common, s, t } => {
            let mut o = Overrides::new();
            structure_overrides(&mut o, &s);
            transform_overrides(&mut o, &t);
            let cfg = resolve_config(&common, o)?;
            let out = run_family("verify", cfg, None)?;
            write_outputs(&common, &out)
        }
        Command::Example { id, common, c, lambda_offset, alpha } => {
            let mut o = Overrides::new();
            push(&mut o, "c", c);
            push(&mut o, "lambda_offset", lambda_offset);
            push(&mut o, "alpha", alpha);
            if id == 3 {
                o.push(("family".into(), "translation".into()));
            }
            let cfg = resolve_config(&common, o)?;
            let out = run_family(&format!("example {id}"), cfg, Some(id))?;
            write_outputs(&common, &out)
        }
        Command::Curvature { common, s, points } => {
            let mut o = Overrides::new();
            structure_overrides(&mut o, &s);
            push(&mut o, "points", points.map(|p| p as i64));
            let cfg = resolve_config(&common, o)?;
            let out = run_curvature(cfg)?;
            write_outputs(&common, &out)
        }
        Command::Invariants { common, s } => {
            let mut o = Overrides::new();
            structure_overrides(&mut o, &s);
            let cfg = resolve_config(&common, o)?;
            let out = run_invariants(cfg)?;
            write_outputs(&common, &out)
        }
        Command::SphereWitness { common, t, c, points } => {
            let mut o = Overrides::new();
            transform_overrides(&mut o, &t);
            push(&mut o, "c", Some(c.unwrap_or(0.0)));
            push(&mut o, "points", points.map(|p| p as i64));
            let cfg = resolve_config(&common, o)?;
            let out = run_sphere(cfg)?;
            write_outputs(&common, &out)
        }
        Command::Karp { common, s, t, example, radii } => {
            let mut o = Overrides::new();
            structure_overrides(&mut o, &s);
            transform_overrides(&mut o, &t);
            push(&mut o, "radii", radii);
            let cfg = resolve_config(&common, o)?;
            let out = run_karp(cfg, example)?;
            write_outputs(&common, &out)
        }
        Command::CompleteCheck { common, s, example, lengths, sup_phi } => {
            let mut o = Overrides::new();
            structure_overrides(&mut o, &s);
            push(&mut o, "lengths", lengths);
            push(&mut o, "sup_phi", sup_phi);
            if example == Some(3) {
                o.push(("family".into(), "translation".into()));
            }
            let cfg = resolve_config(&common, o)?;
            let out = run_complete(cfg, example)?;
            write_outputs(&common, &out)
        }
        Command::Models { common, rho, k, points } => {
            let mut o = Overrides::new();
            push(&mut o, "rho", rho);
            push(&mut o, "k", k);
            push(&mut o, "points", points.map(|p| p as i64));
            let cfg = resolve_config(&common, o)?;
            let out = run_models(cfg)?;
            write_outputs(&common, &out)
        }
    }
}

fn parse_check(expr: &str, var: &str, at: Option<f64>) -> Result<bool, Failure> {
    let ast = ExpressionAst::parse(expr, var)?;
    println!("canonical: {ast}");
    if let Some(t) = at {
        let j = ast.jet(t)?;
        println!("value: {:e}\nd1: {:e}\nd2: {:e}", j.value, j.d1, j.d2);
    }
    Ok(true)
}

/// Structure built from configuration: profiles, structure, closure.
struct Built {
    phi: Profile1D,
    f: Profile1D,
    structure: GQEStructure,
    closure: crate::gqe::Closure,
    closed_forms: Option<crate::suite::ClosedForms>,
}

fn build(cfg: &RunConfig, example: Option<u8>) -> Result<Built, Failure> {
    if let Some(id) = example {
        let alpha = if id == 3 { Some(cfg.alpha()) } else { cfg.alpha.clone() };
        let ex: WorkedExample = examples::example(id, cfg.n, cfg.c, alpha)?;
        let structure = ex.structure.with_lambda_offset(cfg.lambda_offset);
        return Ok(Built {
            phi: ex.phi,
            f: ex.f,
            structure,
            closure: ex.closure,
            closed_forms: Some(ex.closed_forms),
        });
    }
    let var = cfg.var();
    let phi = catalog::resolve(&cfg.phi, var)?;
    let f = catalog::resolve(&cfg.f, var)?;
    let (structure, closure) = match cfg.family {
        Family::Radial => radial_structure(&phi, &f, cfg.n)?,
        Family::Translation => translation_structure(&phi, &f, &cfg.alpha())?,
    };
    Ok(Built { phi, f, structure: structure.with_lambda_offset(cfg.lambda_offset), closure, closed_forms: None })
}

/// Kept samples, number skipped near zeros of `φ`, and the sampled range of
/// the symmetry variable.
type Sampled = (Vec<Sample>, usize, (f64, f64));

fn samples(cfg: &RunConfig, phi: &ScalarFieldRn) -> Result<Sampled, Failure> {
    let (all, range) = match cfg.family {
        Family::Radial => (radial_grid(cfg.n, &cfg.grid, cfg.seed), (cfg.grid.r_min, cfg.grid.r_max)),
        Family::Translation => {
            (translation_grid(&cfg.alpha(), &cfg.grid, cfg.seed)?, (cfg.grid.u_min, cfg.grid.u_max))
        }
    };
    let (kept, skipped) = drop_near_zeros(phi, all, cfg.grid.phi_guard)?;
    Ok((kept, skipped, range))
}

/// Working interval: the `f`-image of the sampled range, padded so that
/// difference stencils around the extreme samples stay inside.
fn f_interval(f: &Profile1D, range: (f64, f64), family: Family, pad: f64) -> Result<(f64, f64), Failure> {
    let lo = match family {
        Family::Radial => range.0.min(0.0) - pad,
        Family::Translation => range.0 - pad,
    };
    let hi = range.1 + pad;
    let d = f.domain();
    let (lo, hi) = (lo.max(d.lo + 1e-12 * (1.0 + d.lo.abs())), hi.min(d.hi - 1e-12 * (1.0 + d.hi.abs())));
    let (a, b) = (f.eval(lo)?, f.eval(hi)?);
    Ok((a.min(b), a.max(b)))
}

/// Padding of the working interval: 2% of the sampled span.
fn grid_pad(range: (f64, f64)) -> f64 {
    0.02 * (1.0 + range.1 - range.0)
}

fn transform_for(cfg: &RunConfig, b: &Built, range: (f64, f64), pad: f64, spec: &str) -> Result<PhiTransform, Failure> {
    let (lo, hi) = f_interval(&b.f, range, cfg.family, pad)?;
    let t0 = cfg.t0.unwrap_or(lo);
    let v = if spec == "auto" {
        let (slo, shi) = match cfg.family {
            Family::Radial => (range.0.min(0.0) - 2.0 * pad, range.1 + 2.0 * pad),
            Family::Translation => (range.0 - 2.0 * pad, range.1 + 2.0 * pad),
        };
        let d = b.f.domain();
        reparametrize_nu(&b.closure.nu, &b.f, slo.max(d.lo + 1e-9), shi.min(d.hi - 1e-9))?
    } else {
        Profile1D::parse(spec, "t")?
    };
    Ok(phi_from_v(&v, cfg.c1, cfg.c2, t0, (lo, hi))?)
}

fn run_family(command: &str, cfg: RunConfig, example: Option<u8>) -> Result<Outcome, Failure> {
    let b = build(&cfg, example)?;
    let (kept, skipped, range) = samples(&cfg, b.structure.phi())?;
    // worked radial examples check the transformed equation by default; the
    // translation example does not, since exp(−∫v) overflows for u < −2
    let v_spec = cfg.v.clone().or_else(|| match example {
        Some(1) | Some(2) => Some("auto".to_string()),
        _ => None,
    });
    let transform = v_spec.as_deref().map(|s| transform_for(&cfg, &b, range, grid_pad(range), s)).transpose()?;
    let identity = match &transform {
        Some(_) => None,
        None => Some(transform_for(&cfg, &b, range, grid_pad(range), "0")?),
    };
    let subject = Subject {
        structure: b.structure.clone(),
        closure: Some(b.closure.clone()),
        transform,
        divergence_transform: identity,
        closed_forms: b.closed_forms.clone(),
    };
    let (mut report, rows) = verify_subject(&subject, &kept, skipped, &cfg.tolerances)?;
    let _ = &b.phi;
    if let Some(pt) = &subject.transform {
        let (lo, hi) = pt.interval();
        let ts: Vec<f64> = (1..=100).map(|k| lo + (hi - lo) * k as f64 / 101.0).collect();
        let gaps = ts.iter().map(|&t| pt.ode_residual(t)).collect::<Result<Vec<_>, _>>()?;
        report.push(Check::from_gaps("transform_ode", &gaps, cfg.tolerances.ode, 0));
        let (c1, _) = pt.constants();
        let flips = ts
            .iter()
            .map(|&t| pt.phiprime().eval(t).map(|d| if d.signum() == c1.signum() && d != 0.0 { 0.0 } else { 1.0 }))
            .collect::<Result<Vec<_>, _>>()?;
        report.push(Check::from_gaps("transform_monotone", &flips, cfg.tolerances.ode, 0));
    }
    let var = cfg.var().to_string();
    Ok(Outcome {
        command: command.to_string(),
        tolerances: tolerance_map(&cfg.tolerances),
        cfg,
        report,
        rows: Some((var, rows)),
    })
}

fn run_invariants(cfg: RunConfig) -> Result<Outcome, Failure> {
    let mut out = run_family("invariants", cfg, None)?;
    let keep = ["wedge", "lambda_trace", "divergence_general"];
    out.report.checks.retain(|c| keep.contains(&c.name.as_str()));
    // the checker must not be vacuous: f = x₁ + x₂², ν = x₃ in flat space
    let n = out.cfg.n;
    let counter = GQEStructure::new(
        ConformalMetric::flat(n)?,
        ScalarFieldRn::explicit(n, "x1+x2^2", |x: &[f64]| Ok(x[0] + x[1] * x[1])),
        ScalarFieldRn::explicit(n, "x3", |x: &[f64]| Ok(x[2])),
        ScalarFieldRn::constant(n, 0.0),
    )?;
    let mut x = vec![0.0; n];
    x[1] = 1.0;
    let w = wedge_invariant_at(&counter, &x)?;
    out.report.record("wedge_counterexample", w);
    out.report.push(Check::scalar("wedge_counterexample_equals_8", (w - 8.0).abs(), 1e-6));
    Ok(out)
}

fn run_curvature(cfg: RunConfig) -> Result<Outcome, Failure> {
    let var = cfg.var();
    let phi = catalog::resolve(&cfg.phi, var)?;
    let field = match cfg.family {
        Family::Radial => ScalarFieldRn::radial(cfg.n, phi),
        Family::Translation => ScalarFieldRn::translation(cfg.alpha(), phi)?,
    };
    let metric = ConformalMetric::new(field)?;
    let (all, skipped, _) = samples(&cfg, metric.phi())?;
    let total = all.len();
    let kept: Vec<Sample> = all.into_iter().filter(|s| crate::fields::norm(&s.x) <= cfg.oracle_radius).collect();
    if kept.is_empty() {
        return Err(Failure::Usage(format!("no grid point lies within oracle_radius = {}", cfg.oracle_radius)));
    }
    let skipped = skipped + total - kept.len();
    let stride = (kept.len() / cfg.points).max(1);
    let chosen: Vec<&Sample> = kept.iter().step_by(stride).take(cfg.points).collect();
    let raw = RawMetric::from_conformal(&metric);
    let mut ric_gap = Vec::new();
    let mut s_gap = Vec::new();
    let mut bianchi = Vec::new();
    let mut sym = Vec::new();
    for s in &chosen {
        let exact = ricci_at(&metric, &s.x)?;
        let sc = scalar_curvature_at(&metric, &s.x)?;
        let fd = fd_curvature(&raw, &s.x)?;
        ric_gap.push((&fd.ricci - &exact).max_abs() / exact.max_abs().max(1.0));
        s_gap.push((fd.scalar - sc).abs() / sc.abs().max(1.0));
        sym.push(fd.ricci_asymmetry / exact.max_abs().max(1.0));
        bianchi.push(bianchi_gap(&metric, &s.x)? / metric.at(&s.x)?.norm_tensor(&exact).max(1.0));
    }
    let skipped_total = skipped + kept.len() - chosen.len();
    let t = &cfg.tolerances;
    let mut r = VerificationReport::default();
    r.push(Check::from_gaps("oracle_ricci", &ric_gap, t.oracle, skipped_total));
    r.push(Check::from_gaps("oracle_scalar_curvature", &s_gap, t.oracle, skipped_total));
    r.push(Check::from_gaps("oracle_ricci_symmetry", &sym, t.oracle, skipped_total));
    r.push(Check::from_gaps("contracted_bianchi", &bianchi, t.divergence, skipped_total));
    Ok(Outcome { command: "curvature".into(), tolerances: tolerance_map(t), cfg, report: r, rows: None })
}

fn run_sphere(cfg: RunConfig) -> Result<Outcome, Failure> {
    let v = Profile1D::parse(cfg.v.as_deref().unwrap_or("0"), "t")?;
    let t0 = cfg.t0.unwrap_or(0.0);
    let pt = PhiTransform::new(&v, cfg.c1, cfg.c2, t0, (-4.0, 4.0))?;
    let w = SphereWitness::new(cfg.n, pt, cfg.c)?;
    let mut pts = vec![{
        let mut x = vec![0.0; cfg.n];
        x[0] = 0.3;
        x
    }];
    pts.extend(ball_points(cfg.n, 1.5, cfg.points - 1, cfg.seed));
    let tol = SphereTolerances::default();
    let report = rigidity::verify_sphere_witness(&w, &pts, &tol)?;
    let tolerances = [
        ("residual", tol.residual),
        ("height_identity", tol.height_identity),
        ("height_identity_fd", tol.height_identity_fd),
        ("hessian_constant", tol.hessian_constant),
        ("hessian_deviation", tol.hessian_deviation),
        ("scalar_curvature", tol.scalar_curvature),
        ("lambda_closed_form", tol.lambda_closed_form),
    ]
    .into_iter()
    .map(|(k, v)| (format!("sphere.{k}"), v))
    .collect();
    Ok(Outcome { command: "sphere-witness".into(), tolerances, cfg, report, rows: None })
}

fn radial_built(cfg: &RunConfig, example: Option<u8>) -> Result<Built, Failure> {
    if example == Some(3) || (example.is_none() && cfg.family != Family::Radial) {
        return Err(Failure::Usage("this subcommand needs a radial structure".into()));
    }
    build(cfg, example)
}

fn run_karp(cfg: RunConfig, example: Option<u8>) -> Result<Outcome, Failure> {
    let b = radial_built(&cfg, example)?;
    let max_r = cfg.radii.iter().cloned().fold(0.0, f64::max);
    // the annuli only reach the Euclidean radius of geodesic radius 2·max_r;
    // a tight interval keeps the transform clear of zeros of φ beyond it
    let outer = rigidity::radius_for_distance(b.structure.phi(), 2.0 * max_r)?;
    let span = (0.0, outer * outer);
    let spec = cfg.v.clone().unwrap_or_else(|| "auto".into());
    let pt = transform_for(&cfg, &b, span, 1e-6 * (1.0 + span.1), &spec)?;
    let mut r = VerificationReport::default();
    let mut finite = Vec::new();
    for &rg in &cfg.radii {
        let k = rigidity::karp_annulus(&b.structure, &pt, rg)?;
        r.record(format!("karp[r_g={rg}]"), k);
        finite.push(if k.is_finite() && k >= 0.0 { 0.0 } else { f64::INFINITY });
    }
    r.push(Check::from_gaps("karp_finite", &finite, cfg.tolerances.ode, 0));
    Ok(Outcome { command: "karp".into(), tolerances: tolerance_map(&cfg.tolerances), cfg, report: r, rows: None })
}

fn run_complete(cfg: RunConfig, example: Option<u8>) -> Result<Outcome, Failure> {
    let b = build(&cfg, example)?;
    let n = cfg.n;
    let origin = vec![0.0; n];
    let dirs: Vec<Vec<f64>> = match cfg.family {
        Family::Radial => {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            vec![e]
        }
        Family::Translation => {
            let a = cfg.alpha();
            vec![a.clone(), a.iter().map(|v| -v).collect()]
        }
    };
    let phi = b.structure.phi();
    let t_max = cfg.lengths.iter().cloned().fold(0.0, f64::max);
    let sup = match cfg.sup_phi {
        Some(s) => s,
        None => {
            let mut m: f64 = 0.0;
            for d in &dirs {
                for k in 0..=4096 {
                    let t = t_max * k as f64 / 4096.0;
                    let x: Vec<f64> = origin.iter().zip(d).map(|(o, v)| o + t * v / crate::fields::norm(d)).collect();
                    m = m.max(phi.value(&x)?.abs());
                }
            }
            m
        }
    };
    let mut r = VerificationReport::default();
    r.record("sup_phi", sup);
    let mut gaps = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        for &t in &cfg.lengths {
            let len = rigidity::ray_length(phi, &origin, d, t)?;
            r.record(format!("length[dir={i},T={t}]"), len);
            let bound = t / sup;
            gaps.push(((bound - len) / bound).max(0.0));
        }
    }
    r.push(Check::from_gaps("ray_length_lower_bound", &gaps, 1e-12, 0));
    let _ = &b.phi;
    Ok(Outcome { command: "complete-check".into(), tolerances: tolerance_map(&cfg.tolerances), cfg, report: r, rows: None })
}

fn run_models(cfg: RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.n;
    let mut pts = ball_points(n, 1.0, cfg.points, cfg.seed);
    for p in &mut pts {
        p[n - 1] += 2.0;
    }
    let mut r = VerificationReport::default();
    for (name, kind) in [
        ("model_euclidean", ModelKind::Euclidean),
        ("model_hyperbolic_half_space", ModelKind::HyperbolicHalfSpace(cfg.rho)),
        ("model_warped_flat_fiber", ModelKind::WarpedFlatFiber(cfg.k)),
    ] {
        let m = rigidity::model_space(kind, n)?;
        r.record(format!("{name}.expected_scalar"), m.expected_scalar);
        r.push(Check::from_gaps(name, &m.scalar_gaps(&pts)?, cfg.tolerances.scalar_curvature, 0));
    }
    // positive curvature: the round sphere in its stereographic chart
    let sphere = ConformalMetric::new(ScalarFieldRn::radial(n, rigidity::sphere_chart_profile()))?;
    let expected = (n * (n - 1)) as f64;
    r.record("model_sphere_chart.expected_scalar", expected);
    let gaps = pts
        .iter()
        .map(|x| Ok((scalar_curvature_at(&sphere, x)? - expected).abs() / expected))
        .collect::<Result<Vec<_>, Error>>()?;
    r.push(Check::from_gaps("model_sphere_chart", &gaps, cfg.tolerances.scalar_curvature, 0));
    Ok(Outcome { command: "models".into(), tolerances: tolerance_map(&cfg.tolerances), cfg, report: r, rows: None })
}
