//! TOML run configuration.
//!
//! ```toml
//! command = "rate"            # simulate | estimate | decompose | covariance
//!                             # | risk | rate | expansion-check | compare
//! seed = 42                   # default 0
//! output_dir = "out"          # default "tvar-out"
//! emit_plots = false
//! workers = 0                 # 0 = machine parallelism
//!
//! [curve]
//! kind = "cosine"             # constant | polynomial | cosine | power_law | table | roots
//! offset = [0.0]
//! amplitude = [0.45]
//! frequency = 1.0
//! declared_beta = 1.0         # default 1
//! declared_rho = 0.45         # default: worst radius on the stability grid
//! sigma = 1.0                 # or a [curve.sigma] table (kind = constant | polynomial | table)
//!
//! [innovations]
//! family = "gaussian"         # gaussian | uniform | student_t
//! df = 8.0                    # student_t only
//! moment_order = 4.0
//!
//! [run]
//! n_list = [1024, 2048, 4096, 8192]
//! t_points = [0.75]
//! mu_alpha = 0.5              # minimax rule α n^{−2β/(1+2β)}, or give `mu`
//! mu_beta = 1.0
//! replicates = 400
//! ```
//!
//! Curve kinds and their keys:
//!
//! | kind | keys |
//! |------|------|
//! | `constant` | `theta` |
//! | `polynomial` | `coeffs` (one ascending coefficient list per coordinate) |
//! | `cosine` | `offset`, `amplitude`, `frequency` (default 1) |
//! | `power_law` | `anchor` (default 1), `base`, `coeff`, `exponent` |
//! | `table` | `knots`, `values` (one row per knot) |
//! | `roots` | `modulus`, `angle` (one polynomial per reciprocal root) |
//!
//! Keys under `[run]` by command:
//!
//! * `simulate`, `decompose`, `estimate`: `n`, `init` (`zero` | `stationary` |
//!   `explicit`), `init_state`; the last two also need a step size (`mu`, or
//!   `mu_alpha` with `mu_beta`), and `estimate` accepts `gamma` and `t_points`.
//! * `covariance`: `t_points` (default 0, 0.25, …, 1), `node_count` (16384),
//!   `spectrum_points` (256), `grid_size` (1024); with `k_list` it also runs
//!   the covariance approximation check using `n`, `replicates`, `init`
//!   (default `stationary`) and `covariance_estimator` (`plain` |
//!   `control_variate`).
//! * `risk`, `rate`, `expansion-check`, `compare`: `n_list`, `t_points`
//!   (default `[1.0]`), step size, `replicates` (200), `estimator` (`nlms` |
//!   `romberg`), `gamma`, `init`, `eta`. `expansion-check` adds
//!   `theta_t_beta`, `beta`, `beta_prime`, defaulting to the curve's local
//!   power law at the first evaluation point.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::local::CovarianceEstimator;
use crate::risk::{EstimatorKind, ExpansionSettings, MuRule, Scenario};
use crate::tvar::{
    check_stability_class, ClosedForm, InitialCondition, InnovationFamily, InnovationSpec, ParamCurve, Poly,
    RootPath, SigmaCurve, ThetaCurve, DEFAULT_GRID,
};

pub const DEFAULT_OUTPUT_DIR: &str = "tvar-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Decompose,
    Covariance,
    Risk,
    Rate,
    ExpansionCheck,
    Compare,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::Estimate,
        Command::Decompose,
        Command::Covariance,
        Command::Risk,
        Command::Rate,
        Command::ExpansionCheck,
        Command::Compare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Decompose => "decompose",
            Command::Covariance => "covariance",
            Command::Risk => "risk",
            Command::Rate => "rate",
            Command::ExpansionCheck => "expansion-check",
            Command::Compare => "compare",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.iter().copied().find(|c| c.name() == s)
    }
}

/// A value as it appears in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Ints(Vec<i64>),
    Floats(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

fn float_literal(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // Debug output is the shortest string that round-trips.
        let s = format!("{x:?}");
        if s.contains(['.', 'e', 'E']) {
            s
        } else {
            format!("{s}.0")
        }
    }
}

fn floats_literal(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| float_literal(*x)).collect();
    format!("[{}]", items.join(", "))
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Str(s) => write!(f, "{}", Value::String(s.clone())),
            Setting::Int(i) => write!(f, "{i}"),
            Setting::Float(x) => write!(f, "{}", float_literal(*x)),
            Setting::Bool(b) => write!(f, "{b}"),
            Setting::Ints(v) => {
                let items: Vec<String> = v.iter().map(|i| i.to_string()).collect();
                write!(f, "[{}]", items.join(", "))
            }
            Setting::Floats(v) => write!(f, "{}", floats_literal(v)),
            Setting::Matrix(rows) => {
                let items: Vec<String> = rows.iter().map(|r| floats_literal(r)).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

/// Validation problems found in a configuration, all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors {
    pub messages: Vec<String>,
    /// Set when the command name itself is not recognised.
    pub unknown_command: bool,
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.messages {
            writeln!(f, "{m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Everything a command needs from the `[run]` table.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub n: Option<usize>,
    pub n_list: Vec<usize>,
    pub t_points: Vec<f64>,
    pub mu_rule: Option<MuRule>,
    pub gamma: Option<f64>,
    pub estimator: EstimatorKind,
    pub replicates: usize,
    pub init: InitialCondition,
    pub eta: Option<f64>,
    pub grid_size: usize,
    pub node_count: usize,
    pub spectrum_points: usize,
    pub k_list: Vec<usize>,
    pub covariance_estimator: CovarianceEstimator,
    pub expansion: Option<ExpansionSettings>,
}

/// A validated run configuration with every default resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub workers: usize,
    pub curve: ParamCurve,
    pub innovations: InnovationSpec,
    pub run: RunSettings,
    resolved: Vec<(String, Setting)>,
}

impl RunConfig {
    /// Resolved settings in the order they were read.
    pub fn resolved(&self) -> &[(String, Setting)] {
        &self.resolved
    }

    fn set(&mut self, key: &str, value: Setting) {
        match self.resolved.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.resolved.push((key.to_string(), value)),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.set("seed", seed_setting(seed));
    }

    pub fn set_workers(&mut self, workers: usize) {
        self.workers = workers;
        self.set("workers", Setting::Int(workers as i64));
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.set("output_dir", Setting::Str(dir.display().to_string()));
        self.output_dir = dir;
    }

    pub fn set_emit_plots(&mut self, emit: bool) {
        self.emit_plots = emit;
        self.set("emit_plots", Setting::Bool(emit));
    }

    /// Monte Carlo scenario for the risk-type commands.
    pub fn scenario(&self) -> Scenario {
        let r = &self.run;
        Scenario {
            curve: self.curve.clone(),
            spec: self.innovations,
            n_list: r.n_list.clone(),
            t_points: r.t_points.clone(),
            mu_rule: r.mu_rule.unwrap_or(MuRule::Fixed(f64::NAN)),
            gamma: r.gamma,
            replicates: r.replicates,
            master_seed: self.seed,
            estimator: r.estimator,
            init: r.init.clone(),
            eta: r.eta,
        }
    }

    /// The manifest: one `key = value` line per resolved setting in key
    /// order, preceded by the tool version. The text is itself a valid configuration.
    pub fn manifest(&self) -> String {
        let mut out = String::from("# tvar run manifest\n");
        out.push_str(&format!("tool_version = \"{}\"\n", env!("CARGO_PKG_VERSION")));
        let mut entries: Vec<&(String, Setting)> = self.resolved.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, v) in entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn seed_setting(seed: u64) -> Setting {
    match i64::try_from(seed) {
        Ok(v) => Setting::Int(v),
        Err(_) => Setting::Str(seed.to_string()),
    }
}

enum Need<T> {
    Required,
    Optional,
    Default(T),
}

/// Reads keys from one table, remembering which were consumed.
struct Section<'a> {
    prefix: String,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(prefix: &str, table: Option<&'a Table>) -> Self {
        Section {
            prefix: prefix.to_string(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.table.and_then(|t| t.get(key))
    }

    fn has(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn unused(&self) -> Vec<String> {
        self.table
            .map(|t| t.keys().filter(|k| !self.used.contains(*k)).map(|k| self.path(k)).collect())
            .unwrap_or_default()
    }
}

#[derive(Default)]
struct Reader {
    errors: Vec<String>,
    resolved: Vec<(String, Setting)>,
    unknown_command: bool,
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_floats(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(as_float).collect()
}

fn as_matrix(v: &Value) -> Option<Vec<Vec<f64>>> {
    v.as_array()?.iter().map(as_floats).collect()
}

impl Reader {
    fn error(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn record(&mut self, key: String, value: Setting) {
        self.resolved.push((key, value));
    }

    fn fetch<T: Clone>(
        &mut self,
        sec: &mut Section,
        key: &str,
        need: Need<T>,
        kind: &str,
        convert: impl Fn(&Value) -> Option<T>,
        to_setting: impl Fn(&T) -> Setting,
    ) -> Option<T> {
        let path = sec.path(key);
        let value = match sec.raw(key) {
            Some(raw) => match convert(raw) {
                Some(v) => v,
                None => {
                    self.error(format!("{path}: expected {kind}, found {}", raw.type_str()));
                    return None;
                }
            },
            None => match need {
                Need::Required => {
                    self.error(format!("{path}: missing required key"));
                    return None;
                }
                Need::Optional => return None,
                Need::Default(v) => v,
            },
        };
        self.record(path, to_setting(&value));
        Some(value)
    }

    fn float(&mut self, sec: &mut Section, key: &str, need: Need<f64>) -> Option<f64> {
        self.fetch(sec, key, need, "a number", as_float, |x| Setting::Float(*x))
    }

    fn floats(&mut self, sec: &mut Section, key: &str, need: Need<Vec<f64>>) -> Option<Vec<f64>> {
        self.fetch(sec, key, need, "an array of numbers", as_floats, |v| {
            Setting::Floats(v.clone())
        })
    }

    fn matrix(&mut self, sec: &mut Section, key: &str) -> Option<Vec<Vec<f64>>> {
        self.fetch(sec, key, Need::Required, "an array of number arrays", as_matrix, |v| {
            Setting::Matrix(v.clone())
        })
    }

    fn string(&mut self, sec: &mut Section, key: &str, need: Need<String>) -> Option<String> {
        self.fetch(sec, key, need, "a string", |v| v.as_str().map(str::to_string), |s| {
            Setting::Str(s.clone())
        })
    }

    fn boolean(&mut self, sec: &mut Section, key: &str, default: bool) -> Option<bool> {
        self.fetch(sec, key, Need::Default(default), "a boolean", Value::as_bool, |b| {
            Setting::Bool(*b)
        })
    }

    fn count(&mut self, sec: &mut Section, key: &str, need: Need<usize>) -> Option<usize> {
        self.fetch(
            sec,
            key,
            need,
            "a non-negative integer",
            |v| v.as_integer().and_then(|i| usize::try_from(i).ok()),
            |n| Setting::Int(*n as i64),
        )
    }

    fn counts(&mut self, sec: &mut Section, key: &str, need: Need<Vec<usize>>) -> Option<Vec<usize>> {
        self.fetch(
            sec,
            key,
            need,
            "an array of non-negative integers",
            |v| {
                v.as_array()?
                    .iter()
                    .map(|x| x.as_integer().and_then(|i| usize::try_from(i).ok()))
                    .collect()
            },
            |v| Setting::Ints(v.iter().map(|n| *n as i64).collect()),
        )
    }

    fn seed(&mut self, sec: &mut Section) -> u64 {
        let path = sec.path("seed");
        let seed = match sec.raw("seed") {
            None => 0,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(Value::String(s)) if s.parse::<u64>().is_ok() => s.parse().unwrap_or(0),
            Some(other) => {
                self.error(format!("{path}: expected a non-negative 64-bit integer, found {other}"));
                0
            }
        };
        self.record(path, seed_setting(seed));
        seed
    }

    fn unknown(&mut self, sec: &Section) {
        for key in sec.unused() {
            self.error(format!("{key}: unknown key"));
        }
    }
}

fn in_range(r: &mut Reader, key: &str, value: Option<f64>, ok: bool, range: &str) {
    if let Some(v) = value {
        if !ok {
            r.error(format!("{key}: {v} is outside {range}"));
        }
    }
}

fn sub_table<'a>(r: &mut Reader, parent: Option<&'a Table>, key: &str, path: &str) -> Option<&'a Table> {
    match parent.and_then(|t| t.get(key)) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(other) => {
            r.error(format!("{path}: expected a table, found {}", other.type_str()));
            None
        }
    }
}

fn parse_sigma(r: &mut Reader, curve: &mut Section) -> Option<SigmaCurve> {
    match curve.table.and_then(|t| t.get("sigma")) {
        None | Some(Value::Float(_)) | Some(Value::Integer(_)) => {
            let value = r.float(curve, "sigma", Need::Default(1.0))?;
            // Re-record in table form so the manifest has a single shape.
            r.resolved.pop();
            r.record("curve.sigma.kind".into(), Setting::Str("constant".into()));
            r.record("curve.sigma.value".into(), Setting::Float(value));
            Some(SigmaCurve::Constant(value))
        }
        Some(Value::Table(t)) => {
            curve.used.insert("sigma".into());
            let mut sec = Section::new("curve.sigma", Some(t));
            let kind = r.string(&mut sec, "kind", Need::Default("constant".into()))?;
            let out = match kind.as_str() {
                "constant" => r.float(&mut sec, "value", Need::Default(1.0)).map(SigmaCurve::Constant),
                "polynomial" => r
                    .floats(&mut sec, "coeffs", Need::Required)
                    .map(|c| SigmaCurve::Polynomial(Poly(c))),
                "table" => {
                    let knots = r.floats(&mut sec, "knots", Need::Required);
                    let values = r.floats(&mut sec, "values", Need::Required);
                    Some(SigmaCurve::Table {
                        knots: knots?,
                        values: values?,
                    })
                }
                other => {
                    r.error(format!(
                        "curve.sigma.kind: unknown sigma kind '{other}' (expected constant, polynomial or table)"
                    ));
                    None
                }
            };
            r.unknown(&sec);
            out
        }
        Some(other) => {
            curve.used.insert("sigma".into());
            r.error(format!("curve.sigma: expected a number or a table, found {}", other.type_str()));
            None
        }
    }
}

fn parse_curve(r: &mut Reader, table: Option<&Table>) -> Option<ParamCurve> {
    let mut sec = Section::new("curve", table);
    let kind = r.string(&mut sec, "kind", Need::Required);
    let theta = match kind.as_deref() {
        None => None,
        Some("constant") => r
            .floats(&mut sec, "theta", Need::Required)
            .map(|value| ThetaCurve::ClosedForm(ClosedForm::Constant { value })),
        Some("polynomial") => r.matrix(&mut sec, "coeffs").map(|rows| {
            ThetaCurve::ClosedForm(ClosedForm::Polynomial {
                coeffs: rows.into_iter().map(Poly).collect(),
            })
        }),
        Some("cosine") => {
            let offset = r.floats(&mut sec, "offset", Need::Required);
            let amplitude = r.floats(&mut sec, "amplitude", Need::Required);
            let frequency = r.float(&mut sec, "frequency", Need::Default(1.0));
            Some(ThetaCurve::ClosedForm(ClosedForm::Cosine {
                offset: offset?,
                amplitude: amplitude?,
                frequency: frequency?,
            }))
        }
        Some("power_law") => {
            let anchor = r.float(&mut sec, "anchor", Need::Default(1.0));
            let base = r.floats(&mut sec, "base", Need::Required);
            let coeff = r.floats(&mut sec, "coeff", Need::Required);
            let exponent = r.float(&mut sec, "exponent", Need::Required);
            Some(ThetaCurve::ClosedForm(ClosedForm::PowerLaw {
                anchor: anchor?,
                base: base?,
                coeff: coeff?,
                exponent: exponent?,
            }))
        }
        Some("table") => {
            let knots = r.floats(&mut sec, "knots", Need::Required);
            let values = r.matrix(&mut sec, "values");
            Some(ThetaCurve::Table {
                knots: knots?,
                values: values?,
            })
        }
        Some("roots") => {
            let modulus = r.matrix(&mut sec, "modulus");
            let angle = r.matrix(&mut sec, "angle");
            let (modulus, angle) = (modulus?, angle?);
            if modulus.len() != angle.len() {
                r.error(format!(
                    "curve.angle: {} angle polynomials for {} modulus polynomials",
                    angle.len(),
                    modulus.len()
                ));
                None
            } else {
                Some(ThetaCurve::Roots(
                    modulus
                        .into_iter()
                        .zip(angle)
                        .map(|(m, a)| RootPath {
                            modulus: Poly(m),
                            angle: Poly(a),
                        })
                        .collect(),
                ))
            }
        }
        Some(other) => {
            r.error(format!(
                "curve.kind: unknown curve kind '{other}' (expected constant, polynomial, cosine, power_law, table or roots)"
            ));
            None
        }
    };
    let id = r.string(&mut sec, "id", Need::Default(kind.clone().unwrap_or_default()));
    let beta = r.float(&mut sec, "declared_beta", Need::Default(1.0));
    in_range(r, "curve.declared_beta", beta, beta.is_some_and(|b| b > 0.0), "(0, inf)");
    let rho_given = sec.has("declared_rho");
    let rho = r.float(&mut sec, "declared_rho", Need::Optional);
    in_range(r, "curve.declared_rho", rho, rho.is_some_and(|x| x > 0.0 && x < 1.0), "(0,1)");
    let sigma = parse_sigma(r, &mut sec);
    if kind.is_some() {
        r.unknown(&sec);
    }

    let (theta, sigma, beta, id) = (theta?, sigma?, beta?, id?);
    if !(beta > 0.0) || (rho_given && rho.is_none_or(|x| !(x > 0.0 && x < 1.0))) {
        return None;
    }
    let build = |rho: f64| ParamCurve::new(id.clone(), theta.clone(), sigma.clone(), beta, rho);
    let curve = match rho {
        Some(rho) => build(rho),
        None => {
            // Resolve the stability radius from the grid and record it.
            build(0.5).and_then(|c| {
                let report = check_stability_class(&c, 0.5, DEFAULT_GRID)?;
                if report.worst_radius >= 1.0 {
                    return Err(crate::Error::Stability {
                        radius: report.worst_radius,
                    });
                }
                let rho = report.worst_radius.max(1e-12);
                r.record("curve.declared_rho".into(), Setting::Float(rho));
                build(rho)
            })
        }
    };
    match curve {
        Ok(c) => Some(c),
        Err(e) => {
            r.error(format!("curve: {e}"));
            None
        }
    }
}

fn parse_innovations(r: &mut Reader, table: Option<&Table>) -> Option<InnovationSpec> {
    let mut sec = Section::new("innovations", table);
    let family = r.string(&mut sec, "family", Need::Default("gaussian".into()))?;
    let spec = match family.as_str() {
        "gaussian" | "uniform" => {
            let q = r.float(&mut sec, "moment_order", Need::Default(4.0))?;
            let family = if family == "gaussian" {
                InnovationFamily::Gaussian
            } else {
                InnovationFamily::Uniform
            };
            Some(InnovationSpec {
                family,
                moment_order: q,
            })
        }
        "student_t" => {
            let df = r.float(&mut sec, "df", Need::Required)?;
            let default_q = if df > 4.0 { 4.0 } else { (2.0 + df) / 2.0 };
            let q = r.float(&mut sec, "moment_order", Need::Default(default_q))?;
            Some(InnovationSpec {
                family: InnovationFamily::StudentT { df },
                moment_order: q,
            })
        }
        other => {
            r.error(format!(
                "innovations.family: unknown family '{other}' (expected gaussian, uniform or student_t)"
            ));
            None
        }
    };
    r.unknown(&sec);
    let spec = spec?;
    if let Err(e) = spec.validate() {
        r.error(format!("innovations: {e}"));
        return None;
    }
    Some(spec)
}

fn parse_mu_rule(r: &mut Reader, sec: &mut Section) -> Option<MuRule> {
    if sec.has("mu") {
        if sec.has("mu_alpha") || sec.has("mu_beta") {
            r.error("run.mu: give either mu or mu_alpha/mu_beta, not both".into());
        }
        let mu = r.float(sec, "mu", Need::Required)?;
        in_range(r, "run.mu", Some(mu), mu > 0.0 && mu.is_finite(), "(0, inf)");
        return Some(MuRule::Fixed(mu));
    }
    if !sec.has("mu_alpha") && !sec.has("mu_beta") {
        r.error("run.mu: missing step size (give mu, or mu_alpha with mu_beta)".into());
        return None;
    }
    let alpha = r.float(sec, "mu_alpha", Need::Required);
    let beta = r.float(sec, "mu_beta", Need::Required);
    in_range(r, "run.mu_alpha", alpha, alpha.is_some_and(|a| a > 0.0), "(0, inf)");
    in_range(r, "run.mu_beta", beta, beta.is_some_and(|b| b > 0.0), "(0, inf)");
    Some(MuRule::Minimax {
        alpha: alpha?,
        beta: beta?,
    })
}

fn parse_init(r: &mut Reader, sec: &mut Section, d: Option<usize>, default: &str) -> Option<InitialCondition> {
    let name = r.string(sec, "init", Need::Default(default.into()))?;
    match name.as_str() {
        "zero" => Some(InitialCondition::Zero),
        "stationary" => Some(InitialCondition::StationaryAtZero),
        "explicit" => {
            let state = r.floats(sec, "init_state", Need::Required)?;
            if let Some(d) = d {
                if state.len() != d {
                    r.error(format!("run.init_state: has length {}, expected {d}", state.len()));
                }
            }
            Some(InitialCondition::Explicit(state))
        }
        other => {
            r.error(format!(
                "run.init: unknown initial condition '{other}' (expected zero, stationary or explicit)"
            ));
            None
        }
    }
}

fn check_t_points(r: &mut Reader, points: &[f64], closed_left: bool) {
    for &t in points {
        let ok = if closed_left {
            (0.0..=1.0).contains(&t)
        } else {
            t > 0.0 && t <= 1.0
        };
        let range = if closed_left { "[0, 1]" } else { "(0, 1]" };
        in_range(r, "run.t_points", Some(t), ok, range);
    }
}

fn parse_gamma(r: &mut Reader, sec: &mut Section, need: Need<f64>) -> Option<f64> {
    let gamma = r.float(sec, "gamma", need);
    in_range(r, "run.gamma", gamma, gamma.is_some_and(|g| g > 0.0 && g < 1.0), "(0,1)");
    gamma.filter(|g| *g > 0.0 && *g < 1.0)
}

fn parse_run(r: &mut Reader, command: Option<Command>, table: Option<&Table>, curve: Option<&ParamCurve>) -> Option<RunSettings> {
    let mut sec = Section::new("run", table);
    let d = curve.map(|c| c.d);
    let mut s = RunSettings {
        n: None,
        n_list: Vec::new(),
        t_points: vec![1.0],
        mu_rule: None,
        gamma: None,
        estimator: EstimatorKind::Nlms,
        replicates: 200,
        init: InitialCondition::Zero,
        eta: None,
        grid_size: DEFAULT_GRID,
        node_count: crate::local::DEFAULT_NODES,
        spectrum_points: 256,
        k_list: Vec::new(),
        covariance_estimator: CovarianceEstimator::Plain,
        expansion: None,
    };
    let command = command?;
    let mut ok = true;
    let n_check = |r: &mut Reader, n: usize| {
        if n < 1 {
            r.error("run.n: must be at least 1".into());
        }
    };
    match command {
        Command::Simulate | Command::Estimate | Command::Decompose => {
            s.n = r.count(&mut sec, "n", Need::Required);
            if let Some(n) = s.n {
                n_check(r, n);
            }
            s.init = parse_init(r, &mut sec, d, "zero").unwrap_or(InitialCondition::Zero);
            if command != Command::Simulate {
                s.mu_rule = parse_mu_rule(r, &mut sec);
                ok &= s.mu_rule.is_some();
            }
            if command == Command::Estimate {
                s.t_points = r.floats(&mut sec, "t_points", Need::Default(vec![1.0])).unwrap_or_default();
                check_t_points(r, &s.t_points, false);
                s.gamma = parse_gamma(r, &mut sec, Need::Optional);
            }
        }
        Command::Covariance => {
            s.t_points = r
                .floats(&mut sec, "t_points", Need::Default(vec![0.0, 0.25, 0.5, 0.75, 1.0]))
                .unwrap_or_default();
            check_t_points(r, &s.t_points, true);
            s.node_count = r
                .count(&mut sec, "node_count", Need::Default(crate::local::DEFAULT_NODES))
                .unwrap_or(0);
            s.spectrum_points = r.count(&mut sec, "spectrum_points", Need::Default(256)).unwrap_or(0);
            s.grid_size = r.count(&mut sec, "grid_size", Need::Default(DEFAULT_GRID)).unwrap_or(0);
            if s.grid_size < 2 {
                r.error("run.grid_size: must be at least 2".into());
            }
            if s.spectrum_points < 2 {
                r.error("run.spectrum_points: must be at least 2".into());
            }
            if sec.has("k_list") {
                s.k_list = r.counts(&mut sec, "k_list", Need::Required).unwrap_or_default();
                s.n = r.count(&mut sec, "n", Need::Required);
                s.replicates = r.count(&mut sec, "replicates", Need::Default(200)).unwrap_or(0);
                s.init = parse_init(r, &mut sec, d, "stationary").unwrap_or(InitialCondition::Zero);
                let est = r.string(&mut sec, "covariance_estimator", Need::Default("plain".into()));
                s.covariance_estimator = match est.as_deref() {
                    Some("plain") | None => CovarianceEstimator::Plain,
                    Some("control_variate") => CovarianceEstimator::ControlVariate,
                    Some(other) => {
                        r.error(format!(
                            "run.covariance_estimator: unknown estimator '{other}' (expected plain or control_variate)"
                        ));
                        CovarianceEstimator::Plain
                    }
                };
                if let Some(n) = s.n {
                    if let Some(k) = s.k_list.iter().find(|&&k| k < 1 || k > n) {
                        r.error(format!("run.k_list: index {k} is outside 1..={n}"));
                    }
                }
                if s.replicates < 2 {
                    r.error("run.replicates: must be at least 2".into());
                }
            }
        }
        Command::Risk | Command::Rate | Command::ExpansionCheck | Command::Compare => {
            s.n_list = r.counts(&mut sec, "n_list", Need::Required).unwrap_or_default();
            if let Some(n) = s.n_list.iter().find(|&&n| n < 10) {
                r.error(format!("run.n_list: every n must be at least 10, found {n}"));
            }
            if command == Command::Rate && !s.n_list.is_empty() {
                let lo = *s.n_list.iter().min().unwrap_or(&1) as f64;
                let hi = *s.n_list.iter().max().unwrap_or(&1) as f64;
                if s.n_list.len() < 4 || hi / lo < 4.0 {
                    r.error("run.n_list: a rate fit needs at least 4 values of n spanning two octaves".into());
                }
            }
            s.t_points = r.floats(&mut sec, "t_points", Need::Default(vec![1.0])).unwrap_or_default();
            check_t_points(r, &s.t_points, false);
            s.mu_rule = parse_mu_rule(r, &mut sec);
            ok &= s.mu_rule.is_some();
            s.replicates = r.count(&mut sec, "replicates", Need::Default(200)).unwrap_or(0);
            if s.replicates < 2 {
                r.error("run.replicates: must be at least 2".into());
            }
            let est = if command == Command::Compare {
                None
            } else {
                r.string(&mut sec, "estimator", Need::Default("nlms".into()))
            };
            s.estimator = match est.as_deref() {
                None | Some("nlms") => EstimatorKind::Nlms,
                Some("romberg") => EstimatorKind::Romberg,
                Some(other) => {
                    r.error(format!("run.estimator: unknown estimator '{other}' (expected nlms or romberg)"));
                    EstimatorKind::Nlms
                }
            };
            let gamma_needed = command == Command::Compare || s.estimator == EstimatorKind::Romberg;
            s.gamma = parse_gamma(r, &mut sec, if gamma_needed { Need::Required } else { Need::Optional });
            ok &= !gamma_needed || s.gamma.is_some();
            s.init = parse_init(r, &mut sec, d, "zero").unwrap_or(InitialCondition::Zero);
            s.eta = r.float(&mut sec, "eta", Need::Optional);
            if let Some(eta) = s.eta {
                in_range(r, "run.eta", Some(eta), (0.0..1.0).contains(&eta), "[0,1)");
                if let Some(t) = s.t_points.iter().find(|&&t| t < eta) {
                    r.error(format!("run.t_points: {t} lies below eta = {eta}"));
                }
            }
            if command == Command::ExpansionCheck {
                s.expansion = parse_expansion(r, &mut sec, curve, s.t_points.first().copied());
                ok &= s.expansion.is_some();
            }
        }
    }
    r.unknown(&sec);
    ok.then_some(s)
}

fn parse_expansion(
    r: &mut Reader,
    sec: &mut Section,
    curve: Option<&ParamCurve>,
    t: Option<f64>,
) -> Option<ExpansionSettings> {
    let given = sec.has("theta_t_beta") || sec.has("beta");
    let (theta, beta) = if given {
        (
            r.floats(sec, "theta_t_beta", Need::Required),
            r.float(sec, "beta", Need::Required),
        )
    } else {
        let (curve, t) = (curve?, t?);
        match curve.local_power_law(t) {
            Ok(law) => {
                r.record("run.theta_t_beta".into(), Setting::Floats(law.coeff.clone()));
                r.record("run.beta".into(), Setting::Float(law.exponent));
                (Some(law.coeff), Some(law.exponent))
            }
            Err(e) => {
                r.error(format!(
                    "run.theta_t_beta: not given and the curve has no local power law at t = {t} ({e})"
                ));
                (None, None)
            }
        }
    };
    let beta_prime = r.float(sec, "beta_prime", Need::Optional);
    let (theta, beta) = (theta?, beta?);
    if let Some(d) = curve.map(|c| c.d) {
        if theta.len() != d {
            r.error(format!("run.theta_t_beta: has length {}, expected {d}", theta.len()));
        }
    }
    in_range(r, "run.beta", Some(beta), beta > 0.0, "(0, inf)");
    if let Some(bp) = beta_prime {
        in_range(r, "run.beta_prime", Some(bp), bp > beta, &format!("({beta}, inf)"));
    }
    Some(ExpansionSettings {
        theta_t_beta: theta,
        beta,
        beta_prime,
    })
}

/// Parses and validates a configuration, reporting every problem found.
pub fn validate_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    validate_config_as(text, None)
}

/// Like [`validate_config`], with `command` replacing the config's own
/// `command` key when given.
pub fn validate_config_as(text: &str, command: Option<&str>) -> Result<RunConfig, ConfigErrors> {
    let mut root: Table = match text.parse::<Table>() {
        Ok(t) => t,
        Err(e) => {
            return Err(ConfigErrors {
                messages: vec![format!("config is not valid TOML: {e}")],
                unknown_command: false,
            })
        }
    };
    if let Some(c) = command {
        root.insert("command".into(), Value::String(c.to_string()));
    }
    let mut r = Reader::default();
    let mut top = Section::new("", Some(&root));

    let command_name = r.string(&mut top, "command", Need::Required);
    let command = command_name.as_deref().and_then(|name| {
        let c = Command::parse(name);
        if c.is_none() {
            let known: Vec<&str> = Command::ALL.iter().map(Command::name).collect();
            r.error(format!("command: unknown command '{name}' (expected one of {})", known.join(", ")));
            r.unknown_command = true;
        }
        c
    });
    let seed = r.seed(&mut top);
    let output_dir = r
        .string(&mut top, "output_dir", Need::Default(DEFAULT_OUTPUT_DIR.into()))
        .unwrap_or_default();
    let emit_plots = r.boolean(&mut top, "emit_plots", false).unwrap_or(false);
    let workers = r.count(&mut top, "workers", Need::Default(0)).unwrap_or(0);
    // Written by manifests; accepted and ignored on input.
    top.raw("tool_version");

    let curve_table = sub_table(&mut r, Some(&root), "curve", "curve");
    top.used.insert("curve".into());
    let curve = parse_curve(&mut r, curve_table);
    let innov_table = sub_table(&mut r, Some(&root), "innovations", "innovations");
    top.used.insert("innovations".into());
    let innovations = parse_innovations(&mut r, innov_table);
    let run_table = sub_table(&mut r, Some(&root), "run", "run");
    top.used.insert("run".into());
    let run = parse_run(&mut r, command, run_table, curve.as_ref());
    r.unknown(&top);

    if !r.errors.is_empty() {
        return Err(ConfigErrors {
            messages: r.errors,
            unknown_command: r.unknown_command,
        });
    }
    match (command, curve, innovations, run) {
        (Some(command), Some(curve), Some(innovations), Some(run)) => Ok(RunConfig {
            command,
            seed,
            output_dir: PathBuf::from(output_dir),
            emit_plots,
            workers,
            curve,
            innovations,
            run,
            resolved: r.resolved,
        }),
        _ => Err(ConfigErrors {
            messages: vec!["configuration is incomplete".into()],
            unknown_command: false,
        }),
    }
}

/// Parses a curve description: the keys of a `[curve]` table at top level.
pub fn parse_curve_toml(text: &str) -> Result<ParamCurve, ConfigErrors> {
    let root: Table = text.parse::<Table>().map_err(|e| ConfigErrors {
        messages: vec![format!("curve is not valid TOML: {e}")],
        unknown_command: false,
    })?;
    let mut r = Reader::default();
    let curve = parse_curve(&mut r, Some(&root));
    match curve {
        Some(c) if r.errors.is_empty() => Ok(c),
        _ => Err(ConfigErrors {
            messages: r.errors,
            unknown_command: false,
        }),
    }
}
