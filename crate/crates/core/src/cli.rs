//! The four commands behind the `boolean-lab` binary.
//!
//! Output layout under the output directory:
//!
//! | file | written by |
//! |------|------------|
//! | `config.toml` | every command (the effective configuration) |
//! | `analytic.csv` | `analytic` |
//! | `gamma-<g>/samples.csv` | `simulate`, `validate`, `hist` |
//! | `summary.json` | `simulate` |
//! | `validate.json` | `validate` |
//! | `gamma-<g>/hist_v0.csv` .. `hist_v2.csv`, `hist.json` | `hist` |
//!
//! Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analytic::{self, CovMatrix, RectModel};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::simulate::{self, BoundaryMode, ModelSpec, Orientation, SampleResult};
use crate::stats::{self, CovarianceEstimate, Mat3, Vec3};

pub const ANALYTIC_HEADER: &str = "gamma,p,d0,d1,d2,s00,s01,s02,s11,s12,s22";
pub const SAMPLES_HEADER: &str = "index,grain_count,v0,v1,v2";
pub const HIST_HEADER: &str = "bin_center,weight";

/// Closed-form densities and covariances for each intensity, as CSV.
pub fn cmd_analytic(a: f64, b: f64, gammas: &[f64]) -> Result<String> {
    if b > a {
        return Err(Error::InvalidModel(format!(
            "b = {b} exceeds a = {a}; swap them so that b <= a"
        )));
    }
    let mut out = String::from(ANALYTIC_HEADER);
    out.push('\n');
    for &gamma in gammas {
        let m = RectModel::new(a, b, gamma)?;
        let (d0, d1, d2) = analytic::mean_densities(&m);
        let c = analytic::cov_matrix(&m);
        let _ = writeln!(
            out,
            "{gamma},{},{d0},{d1},{d2},{},{},{},{},{},{}",
            m.p(),
            c.get(0, 0),
            c.get(0, 1),
            c.get(0, 2),
            c.get(1, 1),
            c.get(1, 2),
            c.get(2, 2)
        );
    }
    Ok(out)
}

pub fn samples_csv(results: &[SampleResult]) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    for r in results {
        let f = &r.functionals;
        let _ = writeln!(out, "{},{},{},{},{}", r.index, r.grain_count, f.v0, f.v1, f.v2);
    }
    out
}

/// Closed-form targets for a simulated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// True on the torus, where the closed forms are exact for any window;
    /// under minus sampling they are the large-window limit.
    pub exact: bool,
    pub mean_density: Vec3,
    pub mean_z: Vec3,
    pub cov: Mat3,
    pub cov_z: Mat3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub gamma: f64,
    pub replications: usize,
    pub bootstrap: usize,
    pub window_area: f64,
    pub mean_grain_count: f64,
    /// Sample means of `(v0, v1, v2)` divided by the window area.
    pub mean_density: Vec3,
    pub mean_density_se: Vec3,
    pub cov: Mat3,
    pub cov_se: Mat3,
    /// Absent for isotropic grains, which have no closed form.
    pub analytic: Option<Comparison>,
}

/// Closed forms exist for aligned grains only.
pub fn analytic_target(spec: &ModelSpec) -> Result<Option<(RectModel, bool)>> {
    if spec.orientation != Orientation::Aligned {
        return Ok(None);
    }
    let (a, b) = if spec.a >= spec.b { (spec.a, spec.b) } else { (spec.b, spec.a) };
    let exact = spec.boundary == BoundaryMode::TorusPeriodic;
    Ok(Some((RectModel::new(a, b, spec.gamma)?, exact)))
}

pub fn summarize(spec: &ModelSpec, results: &[SampleResult], bootstrap: usize, bootstrap_seed: u64) -> Result<RunSummary> {
    let area = spec.window_area();
    let est = stats::estimate_cov(results, area, bootstrap, bootstrap_seed)?;
    let mean_density = est.mean.map(|x| x / area);
    let mean_density_se = est.mean_se.map(|x| x / area);
    let analytic = analytic_target(spec)?.map(|(m, exact)| {
        let (d0, d1, d2) = analytic::mean_densities(&m);
        let target = [d0, d1, d2];
        let c = analytic::cov_matrix(&m);
        Comparison {
            exact,
            mean_density: target,
            mean_z: std::array::from_fn(|i| z_score(mean_density[i], target[i], mean_density_se[i])),
            cov: c.0,
            cov_z: std::array::from_fn(|i| std::array::from_fn(|j| z_score(est.cov[i][j], c.0[i][j], est.se[i][j]))),
        }
    });
    Ok(RunSummary {
        gamma: spec.gamma,
        replications: results.len(),
        bootstrap,
        window_area: area,
        mean_grain_count: results.iter().map(|r| r.grain_count as f64).sum::<f64>() / results.len() as f64,
        mean_density,
        mean_density_se,
        cov: est.cov,
        cov_se: est.se,
        analytic,
    })
}

/// `(estimate - target) / se`; infinite when `se` is zero and the two differ.
pub fn z_score(estimate: f64, target: f64, se: f64) -> f64 {
    let d = estimate - target;
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

fn gamma_dir(out: &Path, gamma: f64) -> Result<PathBuf> {
    let dir = out.join(format!("gamma-{gamma}"));
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    Ok(dir)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

/// Runs one intensity and stores its per-sample CSV.
fn simulate_one(cfg: &RunConfig, k: usize, out: &Path) -> Result<(ModelSpec, Vec<SampleResult>)> {
    let spec = cfg.spec(k)?;
    let results = simulate::run(&spec, cfg.run.workers)?;
    write_file(&gamma_dir(out, spec.gamma)?.join("samples.csv"), &samples_csv(&results))?;
    Ok((spec, results))
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let mut summaries = Vec::new();
    for k in 0..cfg.model.gamma.len() {
        let (spec, results) = simulate_one(cfg, k, out)?;
        summaries.push(summarize(&spec, &results, cfg.run.bootstrap, cfg.run.bootstrap_seed)?);
    }
    write_json(&out.join("summary.json"), &summaries)?;
    Ok(summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Too few replications for the z-scores to mean anything.
    InsufficientStatistics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryCheck {
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub se: f64,
    pub analytic: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub gamma: f64,
    pub replications: usize,
    pub z_threshold: f64,
    pub exact: bool,
    pub entries: Vec<EntryCheck>,
    pub status: Status,
}

/// Compares the six distinct covariance entries with `target`.
pub fn validate_against(
    gamma: f64,
    est: &CovarianceEstimate,
    target: &CovMatrix,
    z_threshold: f64,
    min_replications: usize,
) -> ValidationReport {
    let mut entries = Vec::with_capacity(6);
    for i in 0..3 {
        for j in i..3 {
            let z = z_score(est.cov[i][j], target.get(i, j), est.se[i][j]);
            entries.push(EntryCheck {
                i,
                j,
                estimate: est.cov[i][j],
                se: est.se[i][j],
                analytic: target.get(i, j),
                z,
                pass: z.abs() <= z_threshold,
            });
        }
    }
    let status = if est.m < min_replications {
        Status::InsufficientStatistics
    } else if entries.iter().all(|e| e.pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    ValidationReport {
        gamma,
        replications: est.m,
        z_threshold,
        exact: true,
        entries,
        status,
    }
}

pub fn cmd_validate(cfg: &RunConfig, out: &Path) -> Result<Vec<ValidationReport>> {
    if cfg.model.orientation != Orientation::Aligned {
        return Err(Error::Config("validation needs aligned grains; isotropic grains have no closed form".into()));
    }
    let mut reports = Vec::new();
    for k in 0..cfg.model.gamma.len() {
        let (spec, results) = simulate_one(cfg, k, out)?;
        let est = stats::estimate_cov(&results, spec.window_area(), cfg.run.bootstrap, cfg.run.bootstrap_seed)?;
        let Some((model, exact)) = analytic_target(&spec)? else {
            unreachable!("orientation checked above")
        };
        let mut report = validate_against(
            spec.gamma,
            &est,
            &analytic::cov_matrix(&model),
            cfg.validate.z_threshold,
            cfg.validate.min_replications,
        );
        report.exact = exact;
        reports.push(report);
    }
    write_json(&out.join("validate.json"), &reports)?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistReport {
    pub gamma: f64,
    pub replications: usize,
    /// Kolmogorov–Smirnov distance of each standardized functional to N(0, 1).
    pub ks: Vec3,
    pub underflow: [usize; 3],
    pub overflow: [usize; 3],
}

pub fn hist_csv(h: &stats::Histogram) -> String {
    let mut out = String::from(HIST_HEADER);
    out.push('\n');
    for (c, w) in h.centers().iter().zip(&h.weights) {
        let _ = writeln!(out, "{c},{w}");
    }
    out
}

pub fn cmd_hist(cfg: &RunConfig, out: &Path) -> Result<Vec<HistReport>> {
    let mut reports = Vec::new();
    for k in 0..cfg.model.gamma.len() {
        let (spec, results) = simulate_one(cfg, k, out)?;
        let z = stats::standardize(&stats::values_of(&results))?;
        let dir = gamma_dir(out, spec.gamma)?;
        let mut report = HistReport {
            gamma: spec.gamma,
            replications: results.len(),
            ks: [0.0; 3],
            underflow: [0; 3],
            overflow: [0; 3],
        };
        for c in 0..3 {
            let column: Vec<f64> = z.iter().map(|v| v[c]).collect();
            let h = stats::histogram(&column, (cfg.histogram.lo, cfg.histogram.hi), cfg.histogram.bins)?;
            write_file(&dir.join(format!("hist_v{c}.csv")), &hist_csv(&h))?;
            report.ks[c] = stats::ks_normal(&column);
            report.underflow[c] = h.underflow;
            report.overflow[c] = h.overflow;
        }
        reports.push(report);
    }
    write_json(&out.join("hist.json"), &reports)?;
    Ok(reports)
}
