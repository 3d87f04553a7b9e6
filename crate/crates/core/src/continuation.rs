//! Damped Newton iteration inside the admissible class, homotopy
//! continuation along `φ_t`, the critical-exponent eigenvalue procedure and
//! a multi-start uniqueness probe.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pde::{homotopy_phi, linearize, phi_from_f, residual, ProblemSpec, Regime, ResidualReport};
use crate::sparse::RowBuilder;
use crate::sphere::{even_projection, hessian_plus_metric, ScalarField};

/// Initial homotopy step.
pub const INITIAL_STEP: f64 = 0.1;
/// Smallest homotopy step before the march is declared stalled.
pub const STEP_FLOOR: f64 = 1e-4;
/// Step growth factor after [`GROWTH_STREAK`] consecutive successes.
pub const STEP_GROWTH: f64 = 1.5;
pub const GROWTH_STREAK: usize = 3;
/// Diagonal shift tried once per failed stage in the subcritical march.
pub const SUBCRITICAL_SHIFT: f64 = 1e-8;
/// Default number of halvings `J` in the ε-sequence.
pub const DEFAULT_EPSILON_LEVELS: usize = 8;
/// Largest ε of the sequence `ε_j = 0.5 · 2^{-j}`.
pub const EPSILON_START: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub max_iterations: usize,
    /// Residual tolerance in the max-norm.
    pub tolerance: f64,
    /// Step reduction factor of the line search.
    pub backtrack: f64,
    /// Smallest step fraction tried before giving up.
    pub min_step: f64,
    /// `μ` in `J − μ·Id` applied to the Jacobian (0 disables).
    pub shift: f64,
    /// Antipodally average every iterate.
    pub even_projection: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iterations: 50,
            tolerance: 1e-10,
            backtrack: 0.5,
            min_step: 2f64.powi(-20),
            shift: 0.0,
            even_projection: false,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::contract("Newton tolerance must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::contract("backtracking factor must lie in (0, 1)"));
        }
        if !(self.min_step > 0.0 && self.min_step < 1.0) {
            return Err(Error::contract("minimum step must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(Error::contract("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// Converged Newton iterate and its residual history.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub solution: ScalarField,
    pub iterations: usize,
    /// Max-norm residual of every accepted iterate, starting with `u0`.
    pub residual_history: Vec<f64>,
    pub min_margin: f64,
    /// Residual level set by floating-point resolution of `u` (see [`roundoff_floor`]).
    pub roundoff_floor: f64,
}

/// Factor on `ε_mach · max_r Σ_c |J_rc| |u_c|` in [`roundoff_floor`].
pub const ROUNDOFF_FACTOR: f64 = 4.0;

fn operator_floor(jac: &crate::sparse::SparseOperator, u: &[f64]) -> f64 {
    let worst = (0..jac.dim())
        .map(|r| jac.row(r).map(|(c, v)| (v * u[c]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    ROUNDOFF_FACTOR * f64::EPSILON * worst
}

/// Smallest residual max-norm resolvable at `u` in double precision.
///
/// Perturbing each node value by one unit in the last place moves residual
/// row `r` by up to `ε Σ_c |J_rc| |u_c|`; on latitude-longitude grids the
/// polar rows amplify this by `1/(h_φ sin θ)²`, which can exceed the Newton
/// tolerance. Newton accepts `residual <= max(tolerance, floor)`.
pub fn roundoff_floor(spec: &ProblemSpec, u: &ScalarField, phi: &ScalarField) -> Result<f64> {
    Ok(operator_floor(&linearize(spec, u, phi)?, u.values()))
}

fn worst_margin_node(margins: &ScalarField) -> (usize, f64) {
    margins
        .values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

/// Newton iteration on the root-normalized residual.
///
/// A step is accepted only if the new iterate is positive, every node stays
/// inside the Garding cone of order `n − l`, and the scale-free merit
/// `max|R| / max u` decreases; otherwise the step is halved down to
/// `cfg.min_step`. The residual is homogeneous of degree one in `u`, so an
/// absolute merit would reward collapsing onto `u = 0`.
///
/// Converged means `max|R| <= max(tolerance · min(1, max u), floor)`.
pub fn newton_solve(
    spec: &ProblemSpec,
    phi: &ScalarField,
    u0: &ScalarField,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome> {
    cfg.validate()?;
    let mut u = if cfg.even_projection {
        even_projection(u0)
    } else {
        u0.clone()
    };
    let mut rep = residual(spec, &u, phi)?;
    if !rep.is_admissible() {
        let (node, margin) = worst_margin_node(&rep.margins);
        return Err(Error::InadmissibleNode { node, margin });
    }
    let mut history = vec![rep.max_norm];
    let mut floor = 0.0;
    let merit = |r: &ResidualReport, u: &ScalarField| r.max_norm / u.max();
    let converged = |r: &ResidualReport, u: &ScalarField, floor: f64| {
        r.max_norm <= (cfg.tolerance * u.max().min(1.0)).max(floor)
    };
    for it in 0..cfg.max_iterations {
        let mut jac = linearize(spec, &u, phi)?;
        floor = operator_floor(&jac, u.values());
        if converged(&rep, &u, floor) {
            return Ok(NewtonOutcome {
                solution: u,
                iterations: it,
                residual_history: history,
                min_margin: rep.min_margin,
                roundoff_floor: floor,
            });
        }
        if cfg.shift != 0.0 {
            jac = jac.shifted(-cfg.shift);
        }
        let rhs: Vec<f64> = rep.residual.values().iter().map(|r| -r).collect();
        let delta = jac.solve(&rhs)?;
        let mut step = 1.0;
        loop {
            let mut cand = u.clone();
            for (c, d) in cand.values_mut().iter_mut().zip(&delta) {
                *c += step * d;
            }
            if cfg.even_projection {
                cand = even_projection(&cand);
            }
            if let Ok(r) = residual(spec, &cand, phi) {
                if r.is_admissible() && merit(&r, &cand) < merit(&rep, &u) {
                    u = cand;
                    rep = r;
                    break;
                }
            }
            step *= cfg.backtrack;
            if step < cfg.min_step {
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual: rep.max_norm,
                    reason: "line-search damping floor reached".into(),
                    history,
                });
            }
        }
        debug_assert!(rep.min_margin > 0.0);
        history.push(rep.max_norm);
    }
    if converged(&rep, &u, floor) {
        return Ok(NewtonOutcome {
            solution: u,
            iterations: cfg.max_iterations,
            residual_history: history,
            min_margin: rep.min_margin,
            roundoff_floor: floor,
        });
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        residual: rep.max_norm,
        reason: "iteration limit reached".into(),
        history,
    })
}

/// One accepted continuation stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageRecord {
    pub t: f64,
    pub steps: usize,
    pub residual: f64,
    pub min_margin: f64,
    pub min_u: f64,
    pub max_u: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContinuationTrace {
    pub records: Vec<StageRecord>,
}

impl ContinuationTrace {
    pub fn total_steps(&self) -> usize {
        self.records.iter().map(|r| r.steps).sum()
    }

    /// CSV with header `t,steps,residual,min_margin,min_u,max_u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,steps,residual,min_margin,min_u,max_u")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.t, r.steps, r.residual, r.min_margin, r.min_u, r.max_u
            )?;
        }
        Ok(())
    }
}

fn is_recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConvergence { .. } | Error::LinearSolve(_) | Error::InadmissibleNode { .. }
    )
}

fn record(t: f64, out: &NewtonOutcome) -> StageRecord {
    StageRecord {
        t,
        steps: out.iterations,
        residual: *out.residual_history.last().unwrap(),
        min_margin: out.min_margin,
        min_u: out.solution.min(),
        max_u: out.solution.max(),
    }
}

/// Marches `t: 0 → 1` along `φ_t` from `u ≡ 1`.
fn march(
    spec: &ProblemSpec,
    f: &ScalarField,
    cfg: &NewtonConfig,
    fallback_shift: Option<f64>,
) -> Result<(ScalarField, ContinuationTrace)> {
    cfg.validate()?;
    let (k, l, p) = (spec.k, spec.l, spec.p);
    let mut u = ScalarField::constant(f.grid(), 1.0);
    let mut trace = ContinuationTrace::default();

    let target = homotopy_phi(1.0, f, p, k, l)?;
    let r = residual(spec, &u, &target)?;
    if r.max_norm <= cfg.tolerance {
        trace.records.push(StageRecord {
            t: 1.0,
            steps: 0,
            residual: r.max_norm,
            min_margin: r.min_margin,
            min_u: 1.0,
            max_u: 1.0,
        });
        return Ok((u, trace));
    }

    let (mut t, mut dt, mut streak) = (0.0_f64, INITIAL_STEP, 0);
    while t < 1.0 {
        let t_next = if t + dt >= 1.0 - 1e-12 { 1.0 } else { t + dt };
        let phi = homotopy_phi(t_next, f, p, k, l)?;
        let mut attempt = newton_solve(spec, &phi, &u, cfg);
        if let (Err(e), Some(mu)) = (&attempt, fallback_shift) {
            if is_recoverable(e) && cfg.shift == 0.0 {
                let shifted = NewtonConfig { shift: mu, ..*cfg };
                attempt = newton_solve(spec, &phi, &u, &shifted);
            }
        }
        match attempt {
            Ok(out) => {
                trace.records.push(record(t_next, &out));
                u = out.solution;
                t = t_next;
                streak += 1;
                if streak >= GROWTH_STREAK {
                    dt *= STEP_GROWTH;
                    streak = 0;
                }
            }
            Err(e) if is_recoverable(&e) => {
                dt *= 0.5;
                streak = 0;
                if dt < STEP_FLOOR {
                    return Err(Error::ContinuationFailure {
                        t,
                        trace,
                        last_iterate: u.into_values(),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok((u, trace))
}

/// Continuation solve for `p > k − l + 1` and data `f`.
pub fn continuation_solve(
    spec: &ProblemSpec,
    f: &ScalarField,
    cfg: &NewtonConfig,
) -> Result<(ScalarField, ContinuationTrace)> {
    if spec.regime() != Regime::Supercritical {
        return Err(Error::contract(format!(
            "continuation_solve needs p > k-l+1 = {}, got p = {}",
            spec.critical_exponent(),
            spec.p
        )));
    }
    march(spec, f, cfg, None)
}

/// Even solution of the subcritical problem and its convexity margins.
#[derive(Debug, Clone)]
pub struct SubcriticalOutcome {
    pub solution: ScalarField,
    pub trace: ContinuationTrace,
    /// Smallest Garding margin of order `n − l`.
    pub min_margin: f64,
    /// Smallest eigenvalue of `A` over all nodes.
    pub convexity_margin: f64,
}

/// Largest evenness residual of `f` accepted by [`subcritical_solve`].
pub const EVENNESS_TOL: f64 = 1e-10;

/// Continuation for `1 < p < k − l + 1` with even data, every iterate projected
/// onto even functions.
pub fn subcritical_solve(
    spec: &ProblemSpec,
    f: &ScalarField,
    cfg: &NewtonConfig,
) -> Result<SubcriticalOutcome> {
    if spec.regime() != Regime::Subcritical {
        return Err(Error::contract(format!(
            "subcritical_solve needs 1 < p < k-l+1 = {}, got p = {}",
            spec.critical_exponent(),
            spec.p
        )));
    }
    let odd = f.evenness_residual();
    if odd > EVENNESS_TOL {
        return Err(Error::contract(format!(
            "subcritical data must be even; evenness residual {odd:e}"
        )));
    }
    let cfg = NewtonConfig {
        even_projection: true,
        ..*cfg
    };
    let (u, trace) = march(spec, f, &cfg, Some(SUBCRITICAL_SHIFT))?;
    let rep = residual(spec, &u, &phi_from_f(f))?;
    let convexity_margin = hessian_plus_metric(&u).min_eigenvalue().1;
    Ok(SubcriticalOutcome {
        solution: u,
        trace,
        min_margin: rep.min_margin,
        convexity_margin,
    })
}

/// Normalized eigenfunction and eigenvalue of the critical problem
/// `H_{n-l}(A)/H_{n-k}(A) = τ u^{k-l}/f`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// `ũ` with `min ũ = 1`.
    pub solution: ScalarField,
    /// Eigenvalue from the final bordered Newton solve.
    pub tau: f64,
    /// Richardson extrapolation of the ε-sequence.
    pub extrapolated: f64,
    pub epsilons: Vec<f64>,
    pub taus: Vec<f64>,
    /// Whether `τ_j` is monotone along the sequence.
    pub monotone: bool,
    /// Max-norm of `H_{n-l}/H_{n-k} − τ ũ^{k-l}/f`.
    pub equation_residual: f64,
    pub polish_iterations: usize,
}

#[derive(Serialize)]
struct EigenDocument<'a> {
    tau: f64,
    epsilon_sequence: &'a [f64],
    tau_sequence: &'a [f64],
    extrapolated: f64,
    monotone: bool,
    equation_residual: f64,
}

impl EigenResult {
    /// JSON document with `tau`, `epsilon_sequence`, `tau_sequence`, `extrapolated`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(EigenDocument {
            tau: self.tau,
            epsilon_sequence: &self.epsilons,
            tau_sequence: &self.taus,
            extrapolated: self.extrapolated,
            monotone: self.monotone,
            equation_residual: self.equation_residual,
        })
        .expect("plain data serializes")
    }
}

/// Richardson table for a sequence sampled at `ε_j = ε_0 2^{-j}` with an
/// error expansion in integer powers of `ε`; returns the last diagonal entry.
pub fn richardson_extrapolate(values: &[f64]) -> f64 {
    let mut prev: Vec<f64> = values.to_vec();
    let mut order = 1;
    while prev.len() > 1 {
        let factor = 2f64.powi(order);
        prev = prev
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        order += 1;
    }
    prev[0]
}

/// Solves the critical eigenvalue problem.
///
/// For `ε_j = 0.5·2^{-j}`, `j = 0..=levels`, the supercritical problem with
/// exponent `k − l + 1 + ε_j` is solved and `τ_j = (min u_j)^{ε_j}` recorded.
/// Each member is solved for the rescaled data `f/κ_j`, with `κ_j` the
/// predicted `τ_j`, so the iterates stay of unit size; `u_j` is then
/// `κ_j^{1/ε_j}` times the computed function. The first member runs the full
/// `φ_t` continuation, later ones start from the previous normalized
/// solution. A bordered Newton solve for `(ũ, τ)` at `ε = 0`, seeded with the
/// last member and the extrapolated `τ`, gives the returned pair.
pub fn eigen_solve(
    spec: &ProblemSpec,
    f: &ScalarField,
    cfg: &NewtonConfig,
    levels: usize,
) -> Result<EigenResult> {
    if spec.regime() != Regime::Critical {
        return Err(Error::contract(format!(
            "eigen_solve needs p = k-l+1 = {}, got p = {}",
            spec.critical_exponent(),
            spec.p
        )));
    }
    if let Some((node, &value)) = f.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain { node, value });
    }
    let crit = spec.critical_exponent();
    let mut epsilons = Vec::with_capacity(levels + 1);
    let mut taus: Vec<f64> = Vec::with_capacity(levels + 1);
    let mut normalized: Option<ScalarField> = None;
    for j in 0..=levels {
        let eps = EPSILON_START * 0.5f64.powi(j as i32);
        let spec_j = spec.with_exponent(crit + eps)?;
        let kappa = match taus.len() {
            0 => 1.0,
            1 => taus[0],
            m => taus[m - 1] + 0.5 * (taus[m - 1] - taus[m - 2]),
        };
        let scaled = f.map(|v| v / kappa);
        let w = match &normalized {
            None => continuation_solve(&spec_j, &scaled, cfg)?.0,
            Some(prev) => match newton_solve(&spec_j, &phi_from_f(&scaled), prev, cfg) {
                Ok(out) => out.solution,
                Err(e) if is_recoverable(&e) => continuation_solve(&spec_j, &scaled, cfg)?.0,
                Err(e) => return Err(e),
            },
        };
        let m = w.min();
        epsilons.push(eps);
        taus.push(kappa * m.powf(eps));
        normalized = Some(w.map(|v| v / m));
    }
    let diffs: Vec<f64> = taus.windows(2).map(|w| w[1] - w[0]).collect();
    let slack = 1e-12 * taus[0].abs();
    let monotone = diffs.iter().all(|d| *d >= -slack) || diffs.iter().all(|d| *d <= slack);
    let extrapolated = richardson_extrapolate(&taus);

    let start = normalized.expect("at least one ε level");
    let (w, tau, polish_iterations) = polish_eigenpair(spec, f, &start, extrapolated, cfg)?;
    let m = w.min();
    let solution = w.map(|v| v / m);
    let equation_residual = eigen_equation_residual(spec, f, &solution, tau)?;
    Ok(EigenResult {
        solution,
        tau,
        extrapolated,
        epsilons,
        taus,
        monotone,
        equation_residual,
        polish_iterations,
    })
}

/// `max |H_{n-l}(A)/H_{n-k}(A) − τ u^{k-l}/f|` over the grid.
pub fn eigen_equation_residual(
    spec: &ProblemSpec,
    f: &ScalarField,
    u: &ScalarField,
    tau: f64,
) -> Result<f64> {
    let q = spec.operator();
    let a = hessian_plus_metric(u);
    let gap = spec.order_gap() as i32;
    let mut worst = 0.0_f64;
    for node in 0..u.len() {
        let raw = match q.value(&a.eigenvalues(node)) {
            Ok(v) => v.raw,
            Err(Error::Inadmissible { margin, .. }) => {
                return Err(Error::InadmissibleNode { node, margin })
            }
            Err(e) => return Err(e),
        };
        let rhs = tau * u.values()[node].powi(gap) / f.values()[node];
        worst = worst.max((raw - rhs).abs());
    }
    Ok(worst)
}

/// Bordered Newton on `F(A(w)) − μ φ^{1/(k-l)} w = 0`, `μ = τ^{1/(k-l)}`,
/// with `w` pinned to its starting value at the node where the start is
/// smallest.
fn polish_eigenpair(
    spec: &ProblemSpec,
    f: &ScalarField,
    w0: &ScalarField,
    tau0: f64,
    cfg: &NewtonConfig,
) -> Result<(ScalarField, f64, usize)> {
    let gap = spec.order_gap() as f64;
    let phi = phi_from_f(f);
    let psi = phi.map(|v| v.powf(1.0 / gap));
    let n = w0.len();
    let pin = w0
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b })
        .0;
    let data = |mu: f64| phi.map(|v| v * mu.powf(gap));
    let mut w = w0.clone();
    let mut mu = tau0.powf(1.0 / gap);
    let mut rep = residual(spec, &w, &data(mu))?;
    if !rep.is_admissible() {
        let (node, margin) = worst_margin_node(&rep.margins);
        return Err(Error::InadmissibleNode { node, margin });
    }
    let mut history = vec![rep.max_norm];
    let mut iterations = 0;
    let mut floor = roundoff_floor(spec, &w, &data(mu))?;
    while rep.max_norm > (0.1 * cfg.tolerance).max(floor) && iterations < cfg.max_iterations {
        let jac = linearize(spec, &w, &data(mu))?;
        floor = operator_floor(&jac, w.values());
        let mut b = RowBuilder::new(n + 1);
        for r in 0..n {
            for (c, v) in jac.row(r) {
                b.push(c, v);
            }
            b.push(n, -psi.values()[r] * w.values()[r]);
            b.finish_row();
        }
        b.push(pin, 1.0);
        b.finish_row();
        let mut rhs: Vec<f64> = rep.residual.values().iter().map(|r| -r).collect();
        rhs.push(0.0);
        let delta = b.build().solve(&rhs)?;
        let mut step = 1.0;
        let accepted = loop {
            let mut cand = w.clone();
            for (c, d) in cand.values_mut().iter_mut().zip(&delta) {
                *c += step * d;
            }
            let cand_mu = mu + step * delta[n];
            if cand_mu > 0.0 {
                if let Ok(r) = residual(spec, &cand, &data(cand_mu)) {
                    if r.is_admissible() && r.max_norm < rep.max_norm {
                        break Some((cand, cand_mu, r));
                    }
                }
            }
            step *= cfg.backtrack;
            if step < cfg.min_step {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((cand, cand_mu, r)) => {
                w = cand;
                mu = cand_mu;
                rep = r;
                history.push(rep.max_norm);
            }
            None if rep.max_norm <= cfg.tolerance.max(floor) => break,
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: rep.max_norm,
                    reason: "eigenpair polish: line-search damping floor reached".into(),
                    history,
                })
            }
        }
    }
    if rep.max_norm > cfg.tolerance.max(floor) {
        return Err(Error::NonConvergence {
            iterations,
            residual: rep.max_norm,
            reason: "eigenpair polish: iteration limit reached".into(),
            history,
        });
    }
    Ok((w, mu.powf(gap), iterations))
}

/// Outcome of a multi-start uniqueness probe.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub trials: usize,
    pub converged: usize,
    /// Max pairwise max-norm distance among converged solutions.
    pub max_distance: f64,
    /// Largest distance of a converged solution from the continuation solution.
    pub max_distance_to_reference: f64,
    pub failures: Vec<String>,
}

/// Low-order perturbation with random coefficients, scaled to unit max-norm.
/// `parity` 0 gives an even function, 1 an odd one.
fn random_perturbation(grid: &std::sync::Arc<crate::sphere::SphereGrid>, rng: &mut ChaCha8Rng, parity: usize) -> ScalarField {
    let dim = grid.dim() + 1;
    let full = !grid.is_axisymmetric();
    let lin: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let quad: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let field = ScalarField::from_point_fn(grid, |x| {
        let coords = if full { dim } else { 1 };
        if parity == 1 {
            (0..coords).map(|i| lin[i] * x[i]).sum::<f64>()
        } else {
            (0..coords)
                .flat_map(|i| (0..coords).map(move |j| (i, j)))
                .map(|(i, j)| quad[i * dim + j] * x[i] * x[j])
                .sum::<f64>()
        }
    });
    let scale = field.max_abs();
    if scale > 0.0 {
        field.map(|v| v / scale)
    } else {
        field
    }
}

/// Runs Newton from `trials` distinct admissible starts and measures how far
/// apart the converged solutions are.
///
/// Start `i` is the constant `s_i · mean(u*)` with `s_i` spaced geometrically
/// in `[0.5, 2]`; every odd-numbered start also carries an even or odd
/// perturbation of relative amplitude 0.1.
pub fn uniqueness_probe(
    spec: &ProblemSpec,
    f: &ScalarField,
    cfg: &NewtonConfig,
    trials: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    if spec.regime() != Regime::Supercritical {
        return Err(Error::contract("uniqueness_probe applies to p > k-l+1 only"));
    }
    let (reference, _) = continuation_solve(spec, f, cfg)?;
    let phi = phi_from_f(f);
    let grid = f.grid();
    let mean = reference.values().iter().sum::<f64>() / reference.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<ScalarField> = (0..trials)
        .map(|i| {
            let s = if trials > 1 {
                0.5 * 4f64.powf(i as f64 / (trials - 1) as f64)
            } else {
                1.0
            };
            let c = s * mean;
            if i % 2 == 1 {
                let xi = random_perturbation(grid, &mut rng, (i / 2) % 2);
                xi.map(|v| c * (1.0 + 0.1 * v))
            } else {
                ScalarField::constant(grid, c)
            }
        })
        .collect();
    let results: Vec<Result<NewtonOutcome>> = starts
        .par_iter()
        .map(|u0| newton_solve(spec, &phi, u0, cfg))
        .collect();
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(out) => solutions.push(out.solution),
            Err(e) => failures.push(format!("start {i}: {e}")),
        }
    }
    let mut max_distance = 0.0_f64;
    let mut max_distance_to_reference = 0.0_f64;
    for (i, a) in solutions.iter().enumerate() {
        max_distance_to_reference = max_distance_to_reference.max(a.max_abs_diff(&reference)?);
        for b in &solutions[i + 1..] {
            max_distance = max_distance.max(a.max_abs_diff(b)?);
        }
    }
    Ok(UniquenessReport {
        trials,
        converged: solutions.len(),
        max_distance,
        max_distance_to_reference,
        failures,
    })
}
