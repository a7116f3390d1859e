//! TOML run configuration.
//!
//! Every validation error names the offending key as `section.key`.

use std::path::{Path, PathBuf};

use osgoodlab_core::domain::{Domain, Point};
use osgoodlab_core::nonlinearity::{Nonlinearity, NonlinearityKind};
use osgoodlab_core::problem::{EllipticProblem, Field, ProblemError, ProblemSpec};
use osgoodlab_core::semigroup::Stepper;
use thiserror::Error;
use toml::{Table, Value};

pub const MIN_GRID_N: usize = 33;

#[derive(Debug, Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub nonlinearity: NonlinearityConfig,
    pub run: RunSection,
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub x: (f64, f64),
    pub y: Option<(f64, f64)>,
    pub grid_n: usize,
    pub beta: Vec<f64>,
    pub a11: Field,
    pub a12: Field,
    pub a22: Field,
    pub b1: Field,
    pub b2: Field,
    pub c: Field,
    pub q: Field,
    pub ellipticity_k: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    pub domain_cap: f64,
}

#[derive(Debug, Clone)]
pub struct RunSection {
    pub epsilon: Option<f64>,
    pub osgood_tol: f64,
    pub dt: f64,
    pub max_time: Option<f64>,
    pub stepper: StepperChoice,
    pub stepper_dt: Option<f64>,
    pub kappa_samples: usize,
    pub max_iter: usize,
    pub maximal_diagnostic: bool,
    pub times: Vec<f64>,
    pub r: f64,
    pub center: Option<Point>,
    pub kernel_points: Option<Vec<Point>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepperChoice {
    MatrixExponential,
    CrankNicolson,
    ImplicitEuler,
}

const PROBLEM_KEYS: &[&str] = &[
    "x",
    "y",
    "grid_n",
    "beta",
    "a11",
    "a12",
    "a22",
    "b1",
    "b2",
    "c",
    "q",
    "ellipticity_k",
];
const NONLINEARITY_KEYS: &[&str] = &["kind", "p", "amplitude", "rate", "nodes", "domain_cap"];
const RUN_KEYS: &[&str] = &[
    "epsilon",
    "osgood_tol",
    "dt",
    "max_time",
    "stepper",
    "stepper_dt",
    "kappa_samples",
    "max_iter",
    "maximal_diagnostic",
    "times",
    "r",
    "center",
    "kernel_points",
    "out",
];

/// A `[section]` table and its name, for key paths in errors.
struct Section<'a> {
    name: &'static str,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, allowed: &[&str], required: bool) -> Result<Self> {
        static EMPTY: std::sync::OnceLock<Table> = std::sync::OnceLock::new();
        let table = match root.get(name) {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(ConfigError::new(name, "expected a table")),
            None if required => return Err(ConfigError::new(name, "missing section")),
            None => EMPTY.get_or_init(Table::new),
        };
        if let Some(k) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ConfigError::new(format!("{name}.{k}"), "unknown key"));
        }
        Ok(Self { name, table })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.table.get(k)
    }

    fn f64(&self, k: &str) -> Result<Option<f64>> {
        self.get(k).map(|v| as_f64(v, &self.key(k))).transpose()
    }

    fn positive(&self, k: &str) -> Result<Option<f64>> {
        match self.f64(k)? {
            Some(v) if v <= 0.0 => Err(ConfigError::new(
                self.key(k),
                format!("must be positive, got {v}"),
            )),
            other => Ok(other),
        }
    }

    fn usize(&self, k: &str) -> Result<Option<usize>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => Err(ConfigError::new(
                self.key(k),
                format!("expected a non-negative integer, got {v}"),
            )),
        }
    }

    fn bool(&self, k: &str) -> Result<Option<bool>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(ConfigError::new(
                self.key(k),
                format!("expected a boolean, got {v}"),
            )),
        }
    }

    fn str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(ConfigError::new(
                self.key(k),
                format!("expected a string, got {v}"),
            )),
        }
    }

    fn f64_list(&self, k: &str) -> Result<Option<Vec<f64>>> {
        self.get(k)
            .map(|v| as_f64_list(v, &self.key(k)))
            .transpose()
    }

    fn range(&self, k: &str) -> Result<Option<(f64, f64)>> {
        match self.f64_list(k)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] < v[1] => Ok(Some((v[0], v[1]))),
            Some(v) => Err(ConfigError::new(
                self.key(k),
                format!("expected [lo, hi] with lo < hi, got {v:?}"),
            )),
        }
    }
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        other => {
            return Err(ConfigError::new(
                key,
                format!("expected a number, got {other}"),
            ))
        }
    };
    if !x.is_finite() {
        return Err(ConfigError::new(key, format!("must be finite, got {x}")));
    }
    Ok(x)
}

fn as_f64_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(a) => a
            .iter()
            .enumerate()
            .map(|(i, x)| as_f64(x, &format!("{key}[{i}]")))
            .collect(),
        other => Err(ConfigError::new(
            key,
            format!("expected an array of numbers, got {other}"),
        )),
    }
}

fn as_point(v: &Value, key: &str, dim: usize) -> Result<Point> {
    let c = as_f64_list(v, key)?;
    if c.len() != dim {
        return Err(ConfigError::new(
            key,
            format!("expected {dim} coordinates, got {}", c.len()),
        ));
    }
    Ok([c[0], if dim == 2 { c[1] } else { 0.0 }])
}

/// Catalog names accepted by coefficient selectors.
pub const FIELD_CATALOG: &[&str] = &[
    "zero",
    "one",
    "sin_pi",
    "variable_diffusion",
    "variable_drift",
];

fn catalog_field(name: &str) -> Option<Field> {
    Some(match name {
        "zero" => Field::Constant(0.0),
        "one" => Field::Constant(1.0),
        "sin_pi" => Field::SinPi { amplitude: 1.0 },
        "variable_diffusion" => Field::Polynomial(vec![1.0, 0.0, 0.5]),
        "variable_drift" => Field::Polynomial(vec![0.0, 0.5]),
        _ => return None,
    })
}

/// A number, an inline polynomial `[c0, c1, ...]` in `x`, a catalog name, or
/// a table `{ kind = "sin_pi" | "tent", ... }`.
fn as_field(v: &Value, key: &str, dim: usize) -> Result<Field> {
    match v {
        Value::Float(_) | Value::Integer(_) => Ok(Field::Constant(as_f64(v, key)?)),
        Value::Array(_) => {
            let c = as_f64_list(v, key)?;
            if c.is_empty() {
                return Err(ConfigError::new(
                    key,
                    "polynomial needs at least one coefficient",
                ));
            }
            Ok(Field::Polynomial(c))
        }
        Value::String(s) => catalog_field(s).ok_or_else(|| {
            ConfigError::new(
                key,
                format!("unknown catalog name {s:?}; expected one of {FIELD_CATALOG:?}"),
            )
        }),
        Value::Table(t) => {
            let num = |k: &str, default: Option<f64>| -> Result<f64> {
                match (t.get(k), default) {
                    (Some(x), _) => as_f64(x, &format!("{key}.{k}")),
                    (None, Some(d)) => Ok(d),
                    (None, None) => Err(ConfigError::new(format!("{key}.{k}"), "missing")),
                }
            };
            let kind = match t.get("kind") {
                Some(Value::String(s)) => s.as_str(),
                _ => {
                    return Err(ConfigError::new(
                        format!("{key}.kind"),
                        "expected \"sin_pi\" or \"tent\"",
                    ))
                }
            };
            let allowed: &[&str] = match kind {
                "sin_pi" => &["kind", "amplitude"],
                "tent" => &["kind", "center", "peak", "slope"],
                other => {
                    return Err(ConfigError::new(
                        format!("{key}.kind"),
                        format!("unknown field kind {other:?}; expected \"sin_pi\" or \"tent\""),
                    ))
                }
            };
            if let Some(k) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(ConfigError::new(format!("{key}.{k}"), "unknown key"));
            }
            Ok(match kind {
                "sin_pi" => Field::SinPi {
                    amplitude: num("amplitude", Some(1.0))?,
                },
                _ => Field::Tent {
                    center: match t.get("center") {
                        Some(c) => as_point(c, &format!("{key}.center"), dim)?,
                        None => return Err(ConfigError::new(format!("{key}.center"), "missing")),
                    },
                    peak: num("peak", Some(1.0))?,
                    slope: num("slope", None)?,
                },
            })
        }
        other => Err(ConfigError::new(
            key,
            format!("expected a coefficient selector, got {other}"),
        )),
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("<toml>", e.to_string()))?;
        if let Some(k) = root
            .keys()
            .find(|k| !["problem", "nonlinearity", "run"].contains(&k.as_str()))
        {
            return Err(ConfigError::new(k.clone(), "unknown section"));
        }
        let problem = parse_problem(&Section::new(&root, "problem", PROBLEM_KEYS, true)?)?;
        let nonlinearity = parse_nonlinearity(&Section::new(
            &root,
            "nonlinearity",
            NONLINEARITY_KEYS,
            true,
        )?)?;
        let dim = if problem.y.is_some() { 2 } else { 1 };
        let run = parse_run(&Section::new(&root, "run", RUN_KEYS, false)?, dim)?;
        Ok(Self {
            problem,
            nonlinearity,
            run,
        })
    }

    pub fn dim(&self) -> usize {
        if self.problem.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn set_grid_n(&mut self, n: usize) -> Result<()> {
        if n < MIN_GRID_N {
            return Err(ConfigError::new(
                "--grid-n",
                format!("must be at least {MIN_GRID_N}, got {n}"),
            ));
        }
        self.problem.grid_n = n;
        Ok(())
    }

    pub fn set_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ConfigError::new(
                "--dt",
                format!("must be positive and finite, got {dt}"),
            ));
        }
        self.run.dt = dt;
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        let p = &self.problem;
        let d = match p.y {
            None => Domain::interval(p.x.0, p.x.1, p.grid_n),
            Some(y) => Domain::rectangle(p.x, y, p.grid_n),
        };
        d.map_err(|e| ConfigError::new("problem.x", e.to_string()))
    }

    pub fn build_problem(&self) -> Result<EllipticProblem> {
        let p = &self.problem;
        let mut spec = ProblemSpec::laplacian(self.domain()?);
        spec.a11 = p.a11.clone();
        spec.a12 = p.a12.clone();
        spec.a22 = p.a22.clone();
        spec.b1 = p.b1.clone();
        spec.b2 = p.b2.clone();
        spec.c = p.c.clone();
        spec.q = p.q.clone();
        spec.beta = p.beta.clone();
        spec.ellipticity_k = p.ellipticity_k;
        spec.build().map_err(|e| {
            let key = match &e {
                ProblemError::BetaCount { .. } | ProblemError::BetaRange(_) => "problem.beta",
                ProblemError::Ellipticity { .. } => "problem.a11",
                ProblemError::NonFinite { name, .. } => {
                    return ConfigError::new(format!("problem.{name}"), e.to_string())
                }
                ProblemError::NegativeForcing { .. } | ProblemError::ZeroForcing => "problem.q",
                ProblemError::MixedTermAtBoundary { .. } => "problem.a12",
            };
            ConfigError::new(key, e.to_string())
        })
    }

    pub fn build_nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::new(self.nonlinearity.kind.clone(), self.nonlinearity.domain_cap)
            .map_err(|e| ConfigError::new("nonlinearity", e.to_string()))
    }

    pub fn stepper(&self) -> Stepper {
        let dt = self.run.stepper_dt.unwrap_or(self.run.dt);
        match self.run.stepper {
            StepperChoice::MatrixExponential => Stepper::MatrixExponential,
            StepperChoice::CrankNicolson => Stepper::CrankNicolson { dt },
            StepperChoice::ImplicitEuler => Stepper::ImplicitEuler { dt },
        }
    }

    /// Geometric center of the domain.
    pub fn domain_center(&self) -> Point {
        let p = &self.problem;
        let y = p.y.map_or(0.0, |(lo, hi)| 0.5 * (lo + hi));
        [0.5 * (p.x.0 + p.x.1), y]
    }
}

fn parse_problem(s: &Section) -> Result<ProblemConfig> {
    let x = s
        .range("x")?
        .ok_or_else(|| ConfigError::new(s.key("x"), "missing"))?;
    let y = s.range("y")?;
    let dim = if y.is_some() { 2 } else { 1 };
    let grid_n = s.usize("grid_n")?.unwrap_or(201);
    if grid_n < MIN_GRID_N {
        return Err(ConfigError::new(
            s.key("grid_n"),
            format!("must be at least {MIN_GRID_N}, got {grid_n}"),
        ));
    }
    let beta = match s.get("beta") {
        None => vec![0.0; 2 * dim],
        Some(v @ (Value::Float(_) | Value::Integer(_))) => {
            vec![as_f64(v, &s.key("beta"))?; 2 * dim]
        }
        Some(v) => as_f64_list(v, &s.key("beta"))?,
    };
    let field = |k: &str, default: f64| -> Result<Field> {
        match s.get(k) {
            Some(v) => as_field(v, &s.key(k), dim),
            None => Ok(Field::Constant(default)),
        }
    };
    Ok(ProblemConfig {
        x,
        y,
        grid_n,
        beta,
        a11: field("a11", 1.0)?,
        a12: field("a12", 0.0)?,
        a22: field("a22", 1.0)?,
        b1: field("b1", 0.0)?,
        b2: field("b2", 0.0)?,
        c: field("c", 0.0)?,
        q: field("q", 1.0)?,
        ellipticity_k: s.positive("ellipticity_k")?,
    })
}

fn parse_nonlinearity(s: &Section) -> Result<NonlinearityConfig> {
    let kind_name = s
        .str("kind")?
        .ok_or_else(|| ConfigError::new(s.key("kind"), "missing"))?;
    let need = |k: &str| -> Result<f64> {
        s.f64(k)?
            .ok_or_else(|| ConfigError::new(s.key(k), format!("required by kind {kind_name:?}")))
    };
    let allowed: &[&str] = match kind_name {
        "power_law" => &["kind", "p", "domain_cap"],
        "log_perturbed_power" => &["kind", "p", "amplitude", "rate", "domain_cap"],
        "log_osgood" => &["kind", "domain_cap"],
        "tabulated" => &["kind", "nodes", "domain_cap"],
        other => {
            return Err(ConfigError::new(
                s.key("kind"),
                format!(
                    "unknown nonlinearity {other:?}; expected power_law, log_perturbed_power, log_osgood or tabulated"
                ),
            ))
        }
    };
    if let Some(k) = s.table.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ConfigError::new(
            s.key(k),
            format!("not used by kind {kind_name:?}"),
        ));
    }
    let kind = match kind_name {
        "power_law" => NonlinearityKind::PowerLaw { p: need("p")? },
        "log_perturbed_power" => NonlinearityKind::LogPerturbedPower {
            p: need("p")?,
            amplitude: need("amplitude")?,
            rate: need("rate")?,
        },
        "log_osgood" => NonlinearityKind::LogOsgood,
        _ => {
            let key = s.key("nodes");
            let rows = match s.get("nodes") {
                Some(Value::Array(a)) => a,
                _ => return Err(ConfigError::new(key, "expected an array of [u, f] pairs")),
            };
            let nodes = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let k = format!("{key}[{i}]");
                    match as_f64_list(r, &k)?.as_slice() {
                        [u, f] => Ok((*u, *f)),
                        _ => Err(ConfigError::new(k, "expected [u, f]")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            NonlinearityKind::Tabulated { nodes }
        }
    };
    let domain_cap = s.positive("domain_cap")?.unwrap_or(1.0);
    Ok(NonlinearityConfig { kind, domain_cap })
}

fn parse_run(s: &Section, dim: usize) -> Result<RunSection> {
    let stepper = match s.str("stepper")? {
        None | Some("matrix_exponential") => StepperChoice::MatrixExponential,
        Some("crank_nicolson") => StepperChoice::CrankNicolson,
        Some("implicit_euler") => StepperChoice::ImplicitEuler,
        Some(other) => {
            return Err(ConfigError::new(
                s.key("stepper"),
                format!("unknown stepper {other:?}; expected matrix_exponential, crank_nicolson or implicit_euler"),
            ))
        }
    };
    let times = s.f64_list("times")?.unwrap_or_else(|| vec![0.01, 0.1, 0.5]);
    if times.is_empty() || times.iter().any(|&t| t <= 0.0) {
        return Err(ConfigError::new(
            s.key("times"),
            "expected a non-empty list of positive times",
        ));
    }
    let kappa_samples = s.usize("kappa_samples")?.unwrap_or(65);
    if kappa_samples < 2 {
        return Err(ConfigError::new(
            s.key("kappa_samples"),
            "must be at least 2",
        ));
    }
    let center = s
        .get("center")
        .map(|v| as_point(v, &s.key("center"), dim))
        .transpose()?;
    let kernel_points = match s.get("kernel_points") {
        None => None,
        Some(Value::Array(a)) => Some(
            a.iter()
                .enumerate()
                .map(|(i, v)| as_point(v, &format!("{}[{i}]", s.key("kernel_points")), dim))
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(_) => {
            return Err(ConfigError::new(
                s.key("kernel_points"),
                "expected an array of points",
            ))
        }
    };
    Ok(RunSection {
        epsilon: s.positive("epsilon")?,
        osgood_tol: s.positive("osgood_tol")?.unwrap_or(1e-12),
        dt: s.positive("dt")?.unwrap_or(1e-3),
        max_time: s.positive("max_time")?,
        stepper,
        stepper_dt: s.positive("stepper_dt")?,
        kappa_samples,
        max_iter: s.usize("max_iter")?.unwrap_or(1000),
        maximal_diagnostic: s.bool("maximal_diagnostic")?.unwrap_or(true),
        times,
        r: s.positive("r")?.unwrap_or(0.25),
        center,
        kernel_points,
        out: s.str("out")?.map(PathBuf::from),
    })
}
