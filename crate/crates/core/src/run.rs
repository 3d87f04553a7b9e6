//! Batch driver: JSON run configurations, the solve/verify pipeline,
//! verdicts, report files and parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{
    continuation_solve, eigen_solve, roundoff_floor, subcritical_solve, uniqueness_probe, ContinuationTrace,
    NewtonConfig, UniquenessReport, DEFAULT_EPSILON_LEVELS,
};
use crate::error::{Error, Result};
use crate::geometry::{
    check_f_convexity_condition, convexity_report, embed, estimate_diagnostics, export_surface,
    minkowski_identity_check, verify_curvature_equation,
};
use crate::pde::{c0_bounds_check, c2_diagnostic, phi_from_f, residual, C0Report, FSpec, ProblemSpec, Regime};
use crate::sphere::{ScalarField, SphereGrid, DEFAULT_AXISYMMETRIC};

/// Exit status of a run that passed every verdict.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Multiple of the Newton tolerance allowed for the surface-side residual
/// and the eigen equation residual.
pub const SOLVER_SLACK_FACTOR: f64 = 10.0;
/// Relative Minkowski gap accepted at the run resolution.
pub const MINKOWSKI_TOL: f64 = 1e-3;
pub const UNIQUENESS_TOL: f64 = 1e-7;
pub const TAU_TOL: f64 = 1e-6;
pub const EVEN_SOLUTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Eigen,
    Subcritical,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridConfig {
    Axisymmetric { nodes: usize },
    Full2d { n_theta: usize, n_phi: usize },
}

impl GridConfig {
    pub fn build(&self, n: usize) -> Result<Arc<SphereGrid>> {
        match *self {
            GridConfig::Axisymmetric { nodes } => SphereGrid::axisymmetric(n, nodes),
            GridConfig::Full2d { n_theta, n_phi } => {
                if n != 2 {
                    return Err(Error::Config(format!("full2d grids discretize S^2 only, got n = {n}")));
                }
                SphereGrid::full2d(n_theta, n_phi)
            }
        }
    }

    /// Same grid family at resolution `m` (`n_phi = 2m` on full grids).
    pub fn with_resolution(&self, m: usize) -> GridConfig {
        match self {
            GridConfig::Axisymmetric { .. } => GridConfig::Axisymmetric { nodes: m },
            GridConfig::Full2d { .. } => GridConfig::Full2d {
                n_theta: m,
                n_phi: 2 * m,
            },
        }
    }

    pub fn resolution(&self) -> usize {
        match *self {
            GridConfig::Axisymmetric { nodes } => nodes,
            GridConfig::Full2d { n_theta, .. } => n_theta,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Axisymmetric {
            nodes: DEFAULT_AXISYMMETRIC,
        }
    }
}

/// Ranges of a sweep; an empty list keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: Mode,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub resolution: Vec<usize>,
}

fn default_levels() -> usize {
    DEFAULT_EPSILON_LEVELS
}

fn default_trials() -> usize {
    5
}

/// One run, as read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    /// Optional in eigen mode, where it defaults to `k − l + 1`.
    #[serde(default)]
    pub p: Option<f64>,
    pub f: FSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_levels")]
    pub epsilon_levels: usize,
    /// Starts of the uniqueness probe in solve mode (0 disables it).
    #[serde(default = "default_trials")]
    pub uniqueness_trials: usize,
    /// Weight of the subcritical gradient estimate.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Support function CSV checked in verify mode.
    #[serde(default)]
    pub solution: Option<PathBuf>,
    /// Eigenvalue paired with `solution` when verifying a critical instance.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let p = match (self.p, self.mode) {
            (Some(p), _) => p,
            (None, Mode::Eigen) => (self.k.saturating_sub(self.l) + 1) as f64,
            (None, _) => return Err(Error::Config("missing exponent `p`".into())),
        };
        ProblemSpec::new(self.n, self.k, self.l, p).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks field ranges and mode-regime consistency.
    pub fn validate(&self) -> Result<()> {
        let spec = self.problem()?;
        self.newton.validate().map_err(|e| Error::Config(e.to_string()))?;
        let regime = spec.regime();
        let expected = match self.mode {
            Mode::Solve => Some(Regime::Supercritical),
            Mode::Eigen => Some(Regime::Critical),
            Mode::Subcritical => Some(Regime::Subcritical),
            Mode::Verify | Mode::Sweep => None,
        };
        if let Some(want) = expected {
            if want != regime {
                return Err(Error::Config(format!(
                    "mode {:?} needs a {:?} exponent, but p = {} is {:?} (k-l+1 = {})",
                    self.mode,
                    want,
                    spec.p,
                    regime,
                    spec.critical_exponent()
                )));
            }
        }
        match self.mode {
            Mode::Verify => {
                if self.solution.is_none() {
                    return Err(Error::Config("verify mode needs `solution`".into()));
                }
                if regime == Regime::Critical && self.tau.is_none() {
                    return Err(Error::Config("verifying a critical instance needs `tau`".into()));
                }
            }
            Mode::Sweep => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::Config("sweep mode needs a `sweep` block".into()))?;
                if sweep.mode == Mode::Sweep {
                    return Err(Error::Config("sweeps cannot nest".into()));
                }
                for row in self.sweep_rows()? {
                    row.validate()?;
                }
            }
            _ => {
                if self.sweep.is_some() {
                    return Err(Error::Config("`sweep` block given outside sweep mode".into()));
                }
            }
        }
        if self.epsilon_levels > 30 {
            return Err(Error::Config("epsilon_levels above 30 underflows the sequence".into()));
        }
        self.grid.build(self.n).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Row configurations of a sweep, in `p`-major order.
    pub fn sweep_rows(&self) -> Result<Vec<RunConfig>> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("not a sweep configuration".into()))?;
        let ps: Vec<Option<f64>> = if sweep.p.is_empty() {
            vec![self.p]
        } else {
            sweep.p.iter().map(|&p| Some(p)).collect()
        };
        let res: Vec<Option<usize>> = if sweep.resolution.is_empty() {
            vec![None]
        } else {
            sweep.resolution.iter().map(|&m| Some(m)).collect()
        };
        let mut rows = Vec::new();
        for p in &ps {
            for m in &res {
                let mut row = self.clone();
                row.mode = sweep.mode;
                row.sweep = None;
                row.p = *p;
                if let Some(m) = m {
                    row.grid = self.grid.with_resolution(*m);
                }
                rows.push(row);
            }
        }
        Ok(rows)
    }
}

/// One evaluated acceptance predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    /// The result the predicate checks.
    pub anchor: String,
    pub passed: bool,
    /// Distance from failing; negative when failed.
    pub slack: f64,
}

impl Verdict {
    fn at_most(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        let slack = bound - value;
        Verdict {
            name: name.into(),
            anchor: anchor.into(),
            passed: slack >= 0.0,
            slack: if slack.is_nan() { f64::NEG_INFINITY } else { slack },
        }
    }

    fn at_least(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        Self::at_most(name, anchor, -value, -bound)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub stages: usize,
    pub newton_steps: usize,
    /// Root-form residual max-norm of the reported solution.
    pub residual: f64,
    pub min_margin: f64,
    /// Residual level resolvable in double precision at the solution.
    pub roundoff_floor: f64,
}

/// Scalar diagnostics, also written to `diagnostics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    #[serde(rename = "min_eigen_A")]
    pub min_eigen_a: f64,
    pub max_cone_order: usize,
    pub condition14_margin: f64,
    pub condition_holds: bool,
    /// Relative gap for `m = 0..n-1`.
    pub minkowski_gap_m: Vec<f64>,
    pub noncollapse_ratio: f64,
    #[serde(rename = "weighted_N")]
    pub weighted_n: Option<f64>,
    pub beta: Option<f64>,
    pub max_grad_log_u: f64,
    pub max_trace_a: f64,
    pub c0: Option<C0Report>,
    pub surface_residual: Option<f64>,
    pub evenness_residual: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub grid_spacing: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub tau: f64,
    pub extrapolated: f64,
    pub epsilon_sequence: Vec<f64>,
    pub tau_sequence: Vec<f64>,
    pub monotone: bool,
    pub equation_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch; the only nondeterministic field.
    pub timestamp: u64,
    pub mode: Mode,
    pub problem: ProblemSpec,
    pub regime: Regime,
    pub grid: GridConfig,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub convergence: Convergence,
    pub diagnostics: Diagnostics,
    pub eigen: Option<EigenSummary>,
    pub uniqueness: Option<UniquenessReport>,
    pub verdicts: Vec<Verdict>,
    /// Files written into the output directory.
    pub files: Vec<String>,
    pub passed: bool,
}

/// Solved or loaded support function plus the bookkeeping the pipeline needs.
struct Solved {
    u: ScalarField,
    trace: ContinuationTrace,
    eigen: Option<EigenSummary>,
    subcritical_margin: Option<f64>,
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    files.push(name.into());
    Ok(())
}

fn write_trace(dir: &Path, trace: &ContinuationTrace, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join("trace.csv");
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    files.push("trace.csv".into());
    Ok(())
}

/// Maps a pipeline error to the process exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. }
        | Error::ContinuationFailure { .. }
        | Error::LinearSolve(_)
        | Error::InadmissibleNode { .. }
        | Error::Inadmissible { .. }
        | Error::NotConvex { .. }
        | Error::NotSymmetric { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

/// Writes what is known about a failed solve: the error, and the trace and
/// last iterate when continuation stalled.
pub fn dump_failure(dir: &Path, e: &Error) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    let mut files = Vec::new();
    if let Error::ContinuationFailure { trace, last_iterate, .. } = e {
        write_trace(dir, trace, &mut files)?;
        let path = dir.join("last_iterate.csv");
        let text: String = std::iter::once("node,value".to_string())
            .chain(last_iterate.iter().enumerate().map(|(i, v)| format!("{i},{v}")))
            .collect::<Vec<_>>()
            .join("\n");
        fs::write(&path, text + "\n").map_err(|err| Error::io(&path, err))?;
        files.push("last_iterate.csv".into());
    }
    let mut doc = serde_json::Map::new();
    doc.insert("error".into(), e.to_string().into());
    doc.insert("exit_code".into(), exit_code(e).into());
    if let Error::NonConvergence { history, .. } = e {
        doc.insert("residual_history".into(), serde_json::to_value(history)?);
    }
    files.push("report.json".into());
    doc.insert("files".into(), serde_json::to_value(&files)?);
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n").map_err(|err| Error::io(&path, err))?;
    Ok(files)
}

fn solve_stage(cfg: &RunConfig, spec: &ProblemSpec, f: &ScalarField, base: &Path) -> Result<Solved> {
    match cfg.mode {
        Mode::Solve => {
            let (u, trace) = continuation_solve(spec, f, &cfg.newton)?;
            Ok(Solved {
                u,
                trace,
                eigen: None,
                subcritical_margin: None,
            })
        }
        Mode::Subcritical => {
            let out = subcritical_solve(spec, f, &cfg.newton)?;
            Ok(Solved {
                u: out.solution,
                trace: out.trace,
                eigen: None,
                subcritical_margin: Some(out.convexity_margin),
            })
        }
        Mode::Eigen => {
            let e = eigen_solve(spec, f, &cfg.newton, cfg.epsilon_levels)?;
            let summary = EigenSummary {
                tau: e.tau,
                extrapolated: e.extrapolated,
                epsilon_sequence: e.epsilons.clone(),
                tau_sequence: e.taus.clone(),
                monotone: e.monotone,
                equation_residual: e.equation_residual,
            };
            Ok(Solved {
                u: e.solution,
                trace: ContinuationTrace::default(),
                eigen: Some(summary),
                subcritical_margin: None,
            })
        }
        Mode::Verify => {
            let rel = cfg.solution.as_ref().expect("validated");
            let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
            let u = ScalarField::load_csv(f.grid(), &path)?;
            Ok(Solved {
                u,
                trace: ContinuationTrace::default(),
                eigen: None,
                subcritical_margin: None,
            })
        }
        Mode::Sweep => unreachable!("sweeps dispatch rows"),
    }
}

/// Executes one non-sweep run, writing its files into `out`.
///
/// Relative paths inside the configuration resolve against `base`. Returns
/// the report for completed runs; solver and configuration failures come back
/// as errors (see [`exit_code`]).
pub fn run(cfg: &RunConfig, base: &Path, out: &Path) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.mode == Mode::Sweep {
        return Err(Error::Config("use `sweep` for sweep configurations".into()));
    }
    let spec = cfg.problem()?;
    let regime = spec.regime();
    let grid = cfg.grid.build(spec.n)?;
    let f = cfg.f.sample(&grid, base).map_err(|e| match e {
        Error::Domain { node, value } => Error::Config(format!("data f is not positive at node {node}: {value}")),
        other => other,
    })?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let solved = solve_stage(cfg, &spec, &f, base)?;
    let u = &solved.u;
    let tol = cfg.newton.tolerance;
    let h = grid.spacing();
    let grid_slack = 5.0 * h * h;

    let tau = solved.eigen.as_ref().map(|e| e.tau).or(cfg.tau);
    let phi = phi_from_f(&f);
    let phi_eff = match (regime, tau) {
        (Regime::Critical, Some(t)) => phi.map(|v| v * t),
        _ => phi.clone(),
    };
    let mut verdicts = Vec::new();
    let rep = residual(&spec, u, &phi_eff)?;
    let floor = if rep.is_admissible() {
        roundoff_floor(&spec, u, &phi_eff)?
    } else {
        0.0
    };
    // Attainable tolerance of the discrete equation.
    let tol = tol.max(floor);
    verdicts.push(Verdict::at_most(
        "equation residual",
        "discrete equation solved to tolerance",
        rep.max_norm,
        tol,
    ));
    verdicts.push(Verdict::at_least(
        "admissibility",
        "solution in the Garding cone of order n-l",
        rep.min_margin,
        0.0,
    ));

    let c0 = if regime == Regime::Supercritical {
        let c = c0_bounds_check(&spec, u, &phi)?;
        let anchor = "maximum-principle C0 bound";
        verdicts.push(Verdict::at_least("C0 lower bound", anchor, c.lower_slack, -c.tolerance));
        verdicts.push(Verdict::at_least("C0 upper bound", anchor, c.upper_slack, -c.tolerance));
        Some(c)
    } else {
        None
    };

    let convexity = convexity_report(u);
    let condition = check_f_convexity_condition(&f, spec.p, spec.k, spec.l)?;
    if condition.holds {
        verdicts.push(Verdict::at_least(
            "strict spherical convexity",
            "convexity of solutions under the data condition",
            convexity.min_eigenvalue,
            f64::MIN_POSITIVE,
        ));
    }
    if let Some(m) = solved.subcritical_margin {
        debug_assert!((m - convexity.min_eigenvalue).abs() <= 1e-12 * m.abs().max(1.0));
    }

    let surface = if convexity.strictly_convex {
        Some(embed(u)?)
    } else {
        None
    };
    let surface_residual = match &surface {
        Some(s) => {
            let data = match tau {
                Some(t) if regime == Regime::Critical => f.map(|v| v / t),
                _ => f.clone(),
            };
            let r = verify_curvature_equation(&spec, s, &data)?;
            verdicts.push(Verdict::at_most(
                "surface curvature equation",
                "principal-curvature form of the equation via reciprocal duality",
                r,
                SOLVER_SLACK_FACTOR * tol + grid_slack,
            ));
            Some(r)
        }
        None => None,
    };

    let mut minkowski_gap_m = Vec::new();
    for m in 0..spec.n {
        let c = minkowski_identity_check(u, m)?;
        verdicts.push(Verdict::at_most(
            &format!("Minkowski identity m={m}"),
            "Minkowski integral formula",
            c.gap,
            MINKOWSKI_TOL,
        ));
        minkowski_gap_m.push(c.gap);
    }

    let beta = if regime == Regime::Subcritical { cfg.beta } else { None };
    let est = estimate_diagnostics(u, &spec, beta).map_err(|e| Error::Config(e.to_string()))?;
    let evenness_residual = u.evenness_residual();
    if cfg.mode == Mode::Subcritical {
        verdicts.push(Verdict::at_most(
            "evenness",
            "even solution of the subcritical problem",
            evenness_residual,
            EVEN_SOLUTION_TOL,
        ));
        verdicts.push(Verdict::at_most(
            "non-collapsing ratio finite",
            "non-collapsing estimate",
            est.noncollapse_ratio,
            f64::MAX,
        ));
    }
    if let Some(e) = &solved.eigen {
        let anchor = "eigenvalue bounds min f <= tau <= max f";
        verdicts.push(Verdict::at_least("tau lower bound", anchor, e.tau, f.min() - TAU_TOL));
        verdicts.push(Verdict::at_most("tau upper bound", anchor, e.tau, f.max() + TAU_TOL));
        verdicts.push(Verdict::at_most(
            "eigen equation residual",
            "critical eigenvalue equation",
            e.equation_residual,
            SOLVER_SLACK_FACTOR * tol,
        ));
    }

    let uniqueness = if cfg.mode == Mode::Solve && cfg.uniqueness_trials > 0 {
        let r = uniqueness_probe(&spec, &f, &cfg.newton, cfg.uniqueness_trials, cfg.seed)?;
        let anchor = "uniqueness of solutions for p > k-l+1";
        verdicts.push(Verdict::at_most("uniqueness probe distance", anchor, r.max_distance, UNIQUENESS_TOL));
        Some(r)
    } else {
        None
    };

    let diagnostics = Diagnostics {
        min_eigen_a: convexity.min_eigenvalue,
        max_cone_order: convexity.max_cone_order,
        condition14_margin: condition.margin,
        condition_holds: condition.holds,
        minkowski_gap_m,
        noncollapse_ratio: est.noncollapse_ratio,
        weighted_n: est.weighted_n,
        beta: est.beta,
        max_grad_log_u: est.max_grad_log_u,
        max_trace_a: c2_diagnostic(u),
        c0,
        surface_residual,
        evenness_residual,
        u_min: u.min(),
        u_max: u.max(),
        grid_spacing: h,
    };

    let mut files = Vec::new();
    let sol_path = out.join("solution.csv");
    u.save_csv(&sol_path)?;
    files.push("solution.csv".into());
    if cfg.mode != Mode::Verify {
        write_trace(out, &solved.trace, &mut files)?;
    }
    if let Some(s) = &surface {
        let p = export_surface(s, out)?;
        files.push(p.file_name().unwrap().to_string_lossy().into_owned());
    }
    write_json(out, "diagnostics.json", &diagnostics, &mut files)?;
    if let Some(e) = &solved.eigen {
        write_json(out, "eigen.json", e, &mut files)?;
    }
    files.push("report.json".into());

    let passed = verdicts.iter().all(|v| v.passed);
    let mut warnings = spec.warnings();
    if let Some(e) = &solved.eigen {
        if !e.monotone {
            warnings.push("tau sequence is not monotone".into());
        }
    }
    if !condition.holds {
        warnings.push(format!(
            "data convexity condition fails (margin {:e}); convexity not asserted",
            condition.margin
        ));
    }
    let report = RunReport {
        timestamp: timestamp(),
        mode: cfg.mode,
        problem: spec,
        regime,
        grid: cfg.grid,
        seed: cfg.seed,
        warnings,
        convergence: Convergence {
            stages: solved.trace.records.len(),
            newton_steps: solved.trace.total_steps(),
            residual: rep.max_norm,
            min_margin: rep.min_margin,
            roundoff_floor: floor,
        },
        diagnostics,
        eigen: solved.eigen,
        uniqueness,
        verdicts,
        files,
        passed,
    };
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Outcome of one sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub row: usize,
    pub mode: Mode,
    pub p: Option<f64>,
    pub resolution: usize,
    pub exit_code: i32,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

const SWEEP_HEADER: &str =
    "row,mode,p,resolution,status,residual,u_min,u_max,tau,min_eigen_A,minkowski_gap_max,surface_residual,tau_sequence,error";

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl SweepRow {
    fn csv_line(&self) -> String {
        let r = self.report.as_ref();
        let tau_seq = r
            .and_then(|r| r.eigen.as_ref())
            .map(|e| e.tau_sequence.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        let err = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        [
            self.row.to_string(),
            format!("{:?}", self.mode).to_lowercase(),
            csv_field(self.p),
            self.resolution.to_string(),
            self.exit_code.to_string(),
            csv_field(r.map(|r| r.convergence.residual)),
            csv_field(r.map(|r| r.diagnostics.u_min)),
            csv_field(r.map(|r| r.diagnostics.u_max)),
            csv_field(r.and_then(|r| r.eigen.as_ref()).map(|e| e.tau)),
            csv_field(r.map(|r| r.diagnostics.min_eigen_a)),
            csv_field(r.map(|r| r.diagnostics.minkowski_gap_m.iter().copied().fold(0.0, f64::max))),
            csv_field(r.and_then(|r| r.diagnostics.surface_residual)),
            tau_seq,
            err,
        ]
        .join(",")
    }
}

/// Runs every row of a sweep (in parallel, each in `out/row_NNN`) and writes
/// `out/sweep.csv`. Row failures are recorded, not propagated.
pub fn sweep(cfg: &RunConfig, base: &Path, out: &Path) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let rows = cfg.sweep_rows()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results: Vec<SweepRow> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let dir = out.join(format!("row_{i:03}"));
            let (report, error, code) = match run(row, base, &dir) {
                Ok(r) => {
                    let code = if r.passed { EXIT_OK } else { EXIT_VERIFICATION };
                    (Some(r), None, code)
                }
                Err(e) => {
                    let _ = dump_failure(&dir, &e);
                    (None, Some(e.to_string()), exit_code(&e))
                }
            };
            SweepRow {
                row: i,
                mode: row.mode,
                p: row.p,
                resolution: row.grid.resolution(),
                exit_code: code,
                report,
                error,
            }
        })
        .collect();
    let text: Vec<String> = std::iter::once(SWEEP_HEADER.to_string())
        .chain(results.iter().map(|r| r.csv_line()))
        .collect();
    let path = out.join("sweep.csv");
    fs::write(&path, text.join("\n") + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(results)
}

/// Exit status of a whole sweep: solver failures dominate verification
/// failures.
pub fn sweep_exit_code(rows: &[SweepRow]) -> i32 {
    if rows.iter().any(|r| r.exit_code == EXIT_CONFIG) {
        EXIT_CONFIG
    } else if rows.iter().any(|r| r.exit_code == EXIT_SOLVER) {
        EXIT_SOLVER
    } else if rows.iter().any(|r| r.exit_code == EXIT_VERIFICATION) {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    }
}

/// Loads, runs and reports a configuration file; returns the exit status.
/// `out` defaults to the configuration's `output` entry, then `./out`.
pub fn execute_file(path: &Path, out: Option<&Path>, seed: Option<u64>, resolution: Option<usize>) -> (i32, String) {
    let mut cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => return (EXIT_CONFIG, e.to_string()),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = resolution {
        cfg.grid = cfg.grid.with_resolution(m);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("out"));
    if cfg.mode == Mode::Sweep {
        return match sweep(&cfg, &base, &out_dir) {
            Ok(rows) => {
                let code = sweep_exit_code(&rows);
                (code, format!("sweep of {} rows written to {}", rows.len(), out_dir.display()))
            }
            Err(e) => (exit_code(&e), e.to_string()),
        };
    }
    match run(&cfg, &base, &out_dir) {
        Ok(r) => {
            let failed: Vec<&str> = r.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
            if failed.is_empty() {
                (EXIT_OK, format!("all {} verdicts passed; report in {}", r.verdicts.len(), out_dir.display()))
            } else {
                (EXIT_VERIFICATION, format!("failed verdicts: {}", failed.join(", ")))
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_SOLVER {
                let _ = dump_failure(&out_dir, &e);
            }
            (code, e.to_string())
        }
    }
}
