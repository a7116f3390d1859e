use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use osgoodlab_core::domain::{Domain, Point};
use osgoodlab_core::export::{fields_csv, kappa_csv, kernel_csv, write_atomic};
use osgoodlab_core::lemmas::{estimate_kappa, verify_kernel_ordering, LemmaError};
use osgoodlab_core::nonuniqueness::{
    certify_indefinite, certify_nonuniqueness, CertifyOptions, NuError,
};
use osgoodlab_core::osgood::{check_osgood, Classification, OsgoodVerdict};
use osgoodlab_core::semigroup::build_semigroup;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

/// How a command finished; maps onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    Inconclusive,
    /// A lemma or certificate check failed.
    Failure(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Inconclusive => 2,
            Outcome::Failure(_) => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// JSON has no infinity; non-finite values become strings.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn point_json(p: Point, dim: usize) -> Value {
    json!(p[..dim])
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, text.as_bytes()).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        info!("wrote {}", path.display());
        Ok(())
    }

    fn report(&self, report: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(report).expect("json");
        text.push('\n');
        self.write("report.json", &text)
    }
}

fn verdict_json(v: &OsgoodVerdict, epsilon: f64) -> Value {
    json!({
        "classification": v.classification.as_str(),
        "epsilon": epsilon,
        "integral_estimate": num(v.integral_estimate),
        "fit": to_json(&v.fit),
        "probe_trace": v.probe_trace.iter()
            .map(|p| json!({"delta": num(p.delta), "partial": num(p.partial)}))
            .collect::<Vec<_>>(),
    })
}

pub fn cmd_osgood(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let f = cfg.build_nonlinearity()?;
    let cap = f.domain_cap();
    let epsilon = cfg.run.epsilon.unwrap_or(cap);
    if epsilon > cap {
        return Err(ConfigError::new(
            "run.epsilon",
            format!("epsilon {epsilon} exceeds nonlinearity.domain_cap {cap}"),
        )
        .into());
    }
    let verdict =
        check_osgood(&f, epsilon, cfg.run.osgood_tol).map_err(|e| CliError::Run(e.to_string()))?;
    let mut report = verdict_json(&verdict, epsilon);
    report["command"] = json!("osgood");
    report["nonlinearity"] = to_json(&f);
    Output::new(out)?.report(&report)?;
    Ok(match verdict.classification {
        Classification::Inconclusive => Outcome::Inconclusive,
        _ => Outcome::Success,
    })
}

fn nearest_index(domain: &Domain, p: Point) -> usize {
    (0..domain.num_points())
        .min_by(|&a, &b| {
            domain
                .distance(domain.point(a), p)
                .total_cmp(&domain.distance(domain.point(b), p))
        })
        .expect("non-empty grid")
}

pub fn cmd_validate_lemmas(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.build_problem()?;
    let domain = problem.domain().clone();
    let dim = cfg.dim();
    let stepper = cfg.stepper();
    let center = cfg.run.center.unwrap_or_else(|| cfg.domain_center());
    let r = cfg.run.r;
    domain.check_ball_inside(center, 3.0 * r).map_err(|e| {
        ConfigError::new(
            "run.r",
            format!("B(center, 3r) must lie inside the domain: {e}"),
        )
    })?;
    if !problem.c_nonpositive() {
        return Err(ConfigError::new("problem.c", "the kappa estimate needs c <= 0").into());
    }
    let run_err = |e: LemmaError| CliError::Run(e.to_string());

    let ordering = verify_kernel_ordering(&problem, &cfg.run.times, stepper).map_err(run_err)?;
    let kappa = match estimate_kappa(&problem, center, r, cfg.run.kappa_samples, stepper) {
        Ok(k) => Ok(k),
        Err(e @ LemmaError::KappaNotPositive { .. }) => Err(e.to_string()),
        Err(e) => return Err(run_err(e)),
    };

    let columns: Vec<usize> = cfg
        .run
        .kernel_points
        .clone()
        .unwrap_or_else(|| vec![center])
        .into_iter()
        .map(|p| nearest_index(&domain, p))
        .collect();
    let sem = |e: osgoodlab_core::semigroup::SemigroupError| CliError::Run(e.to_string());
    let robin = build_semigroup(&problem, stepper).map_err(sem)?;
    let dirichlet = build_semigroup(&problem.dirichlet(), stepper).map_err(sem)?;
    let mut kb = Vec::new();
    let mut kd = Vec::new();
    for &t in &cfg.run.times {
        kb.push(robin.kernel_matrix(t).map_err(sem)?);
        kd.push(dirichlet.kernel_matrix(t).map_err(sem)?);
    }

    let output = Output::new(out)?;
    output.write("kernel.csv", &kernel_csv(&kb, &columns, dim))?;
    output.write("kernel_dirichlet.csv", &kernel_csv(&kd, &columns, dim))?;

    let min_gap = ordering
        .samples
        .iter()
        .map(|s| s.min_gap)
        .fold(f64::INFINITY, f64::min);
    let (wx, wy, wt) = ordering.worst;
    let window = kappa
        .as_ref()
        .map(|k| k.window)
        .unwrap_or((f64::NAN, r * r / 8.0));
    let mut report = json!({
        "command": "validate-lemmas",
        "min_ordering_gap": min_gap,
        "kappa": kappa.as_ref().map(|k| k.kappa).ok(),
        "r": r,
        "window": [num(window.0), num(window.1)],
        "ordering": {
            "pass": ordering.pass,
            "min_relative_gap": ordering.min_relative_gap,
            "worst": {"x": point_json(wx, dim), "y": point_json(wy, dim), "t": wt},
            "samples": ordering.samples.iter().map(|s| json!({
                "t": s.t,
                "min_gap": s.min_gap,
                "x": point_json(s.x, dim),
                "y": point_json(s.y, dim),
                "max_kd": s.max_kd,
                "tol": s.tol,
                "probe_min": s.probe_min,
                "pass": s.pass,
            })).collect::<Vec<_>>(),
        },
    });
    report["kappa_report"] = match &kappa {
        Ok(k) => {
            output.write("kappa.csv", &kappa_csv(k, dim))?;
            json!({
                "pass": true,
                "center": point_json(k.center, dim),
                "argmin": point_json(k.argmin, dim),
                "argmin_t": k.argmin_t,
                "argmin_distance": k.argmin_distance,
                "samples": k.samples.len(),
            })
        }
        Err(msg) => json!({"pass": false, "error": msg}),
    };
    let pass = ordering.pass && kappa.is_ok();
    report["pass"] = json!(pass);
    output.report(&report)?;

    if !ordering.pass {
        return Ok(Outcome::Failure(format!(
            "kernel ordering fails: min(K_beta - K_D) = {min_gap:e} at x = {:?}, y = {:?}, t = {wt}",
            &wx[..dim],
            &wy[..dim]
        )));
    }
    if let Err(msg) = kappa {
        return Ok(Outcome::Failure(msg));
    }
    Ok(Outcome::Success)
}

pub fn cmd_certify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.build_problem()?;
    let f = cfg.build_nonlinearity()?;
    let dim = cfg.dim();
    let opts = CertifyOptions {
        dt: cfg.run.dt,
        stepper: cfg.stepper(),
        max_time: cfg.run.max_time,
        kappa_samples: cfg.run.kappa_samples,
        max_iter: cfg.run.max_iter,
        osgood_tol: cfg.run.osgood_tol,
        maximal_diagnostic: cfg.run.maximal_diagnostic,
    };
    let result = if problem.c_nonpositive() {
        certify_nonuniqueness(&problem, &f, &opts).map(|c| (c, None))
    } else {
        info!("c takes positive values; certifying through the shifted problem");
        certify_indefinite(&problem, &f, &opts).map(|(c, r)| (c, Some(r)))
    };
    let output = Output::new(out)?;
    let mut report = json!({"command": "certify", "nonlinearity": to_json(&f)});

    match result {
        Ok((cert, reduction)) => {
            let maximal = cert.maximal.as_ref().map(|m| &m.field);
            output.write(
                "fields.csv",
                &fields_csv(&cert.v, &cert.u, &cert.w, maximal, dim),
            )?;
            let reduction_ok = reduction.as_ref().is_none_or(|r| r.pass);
            let valid = cert.is_valid() && reduction_ok;
            report["result"] = json!("NonUniqueness");
            report["valid"] = json!(valid);
            report["certificate"] = to_json(&cert);
            if let Some(r) = &reduction {
                report["reduction"] = to_json(r);
            }
            output.report(&report)?;
            if valid {
                Ok(Outcome::Success)
            } else {
                Ok(Outcome::Failure(format!(
                    "certificate invariants fail: {:?}, reduction ok: {reduction_ok}",
                    cert.checks
                )))
            }
        }
        Err(NuError::OsgoodHolds) => {
            let verdict = check_osgood(&f, f.domain_cap(), opts.osgood_tol)
                .map_err(|e| CliError::Run(e.to_string()))?;
            report["result"] = json!("OsgoodHolds");
            report["message"] = json!(
                "OsgoodHolds: the Osgood integral diverges, so u = 0 is the unique solution and no certificate is built"
            );
            report["osgood"] = verdict_json(&verdict, f.domain_cap());
            output.report(&report)?;
            Ok(Outcome::Success)
        }
        Err(NuError::Inconclusive) => {
            warn!("Osgood classification inconclusive");
            report["result"] = json!("Inconclusive");
            output.report(&report)?;
            Ok(Outcome::Inconclusive)
        }
        Err(
            e @ (NuError::NotSubsolution { .. }
            | NuError::NotSupersolution { .. }
            | NuError::MonotonicityViolation { .. }
            | NuError::NonConvergence { .. }),
        ) => {
            report["result"] = json!("CertificateFailure");
            report["error"] = json!(e.to_string());
            output.report(&report)?;
            Ok(Outcome::Failure(e.to_string()))
        }
        Err(e) => Err(CliError::Run(e.to_string())),
    }
}
