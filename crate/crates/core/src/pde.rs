//! Residual and linearization of the curvature equation in root-normalized
//! form
//!
//! ```text
//!     F(A) = (φ u^{p-1})^{1/(k-l)},   F = (H_{n-l}/H_{n-k})^{1/(k-l)},   A = ∇²u + u·σ,
//! ```
//!
//! together with the homotopy path used by continuation and the `C⁰`/`C²`
//! predicates evaluated on solutions.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{RowBuilder, SparseOperator};
use crate::sphere::{eig2, hessian_plus_metric, CurvatureMatrixField, ScalarField, SphereGrid};
use crate::symfun::{elementary_all, QuotientOperator, COINCIDENCE_TOL};

/// Relative tolerance deciding `p = k − l + 1`.
const CRITICAL_TOL: f64 = 1e-12;

/// Slack constant `C` in the grid tolerance `C·h²` of the bound checks.
pub const BOUND_SLACK_CONSTANT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `p > k − l + 1`
    Supercritical,
    /// `p = k − l + 1`
    Critical,
    /// `1 < p < k − l + 1`
    Subcritical,
}

/// Parameters `(n, k, l, p)` of one instance of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub p: f64,
}

impl ProblemSpec {
    pub fn new(n: usize, k: usize, l: usize, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::contract(format!("need n >= 2, got {n}")));
        }
        if !(l < k && k <= n) {
            return Err(Error::contract(format!(
                "need 0 <= l < k <= n (got n={n}, k={k}, l={l})"
            )));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::contract(format!("exponent p must exceed 1, got {p}")));
        }
        Ok(ProblemSpec { n, k, l, p })
    }

    /// `k − l`, the homogeneity degree of `H_{n-l}/H_{n-k}`.
    pub fn order_gap(&self) -> usize {
        self.k - self.l
    }

    /// `k − l + 1`.
    pub fn critical_exponent(&self) -> f64 {
        (self.k - self.l + 1) as f64
    }

    pub fn regime(&self) -> Regime {
        let pc = self.critical_exponent();
        if (self.p - pc).abs() <= CRITICAL_TOL * pc {
            Regime::Critical
        } else if self.p > pc {
            Regime::Supercritical
        } else {
            Regime::Subcritical
        }
    }

    /// `p + k − l − 1`, the exponent of the homotopy path.
    pub fn path_exponent(&self) -> f64 {
        self.p + self.order_gap() as f64 - 1.0
    }

    pub fn operator(&self) -> QuotientOperator {
        QuotientOperator::for_equation(self.n, self.k, self.l)
            .expect("ProblemSpec invariants guarantee a valid operator")
    }

    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        ProblemSpec::new(self.n, self.k, self.l, p)
    }

    /// Non-fatal remarks about the instance.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.k == self.n {
            w.push(format!(
                "k = n = {}: existence theory assumes k < n; solving anyway",
                self.n
            ));
        }
        w
    }

    /// Constant solution `c^{1/(p-k+l-1)}` for data `f ≡ c` (non-critical only).
    pub fn constant_solution(&self, c: f64) -> Result<f64> {
        if self.regime() == Regime::Critical {
            return Err(Error::contract("the critical exponent has no constant solution scale"));
        }
        Ok(c.powf(1.0 / (self.p - self.critical_exponent())))
    }

    fn check_grid(&self, grid: &SphereGrid) -> Result<()> {
        if grid.dim() != self.n {
            return Err(Error::contract(format!(
                "problem is posed on S^{} but the grid discretizes S^{}",
                self.n,
                grid.dim()
            )));
        }
        Ok(())
    }
}

/// Prescribed data `f`: a constant, `exp(P(x))` for a polynomial `P` in the
/// ambient coordinates, or node samples read from CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FSpec {
    Constant(f64),
    /// `(coefficient, multi-index)` pairs of `P`.
    Expr(Vec<(f64, Vec<u32>)>),
    File(PathBuf),
}

impl FSpec {
    /// Samples `f` on the grid and checks positivity. Relative file paths
    /// resolve against `base`.
    pub fn sample(&self, grid: &Arc<SphereGrid>, base: &Path) -> Result<ScalarField> {
        let field = match self {
            FSpec::Constant(c) => ScalarField::constant(grid, *c),
            FSpec::Expr(terms) => {
                let ambient = grid.dim() + 1;
                for (_, idx) in terms {
                    if idx.len() > ambient {
                        return Err(Error::Config(format!(
                            "multi-index {idx:?} is longer than the ambient dimension {ambient}"
                        )));
                    }
                    if grid.is_axisymmetric() && idx.iter().skip(1).any(|&e| e != 0) {
                        return Err(Error::Config(format!(
                            "multi-index {idx:?} is not zonal; axisymmetric grids accept powers of x1 only"
                        )));
                    }
                }
                let terms = terms.clone();
                ScalarField::from_point_fn(grid, move |x| {
                    let poly: f64 = terms
                        .iter()
                        .map(|(c, idx)| {
                            c * idx
                                .iter()
                                .zip(x)
                                .map(|(&e, &xi)| xi.powi(e as i32))
                                .product::<f64>()
                        })
                        .sum();
                    poly.exp()
                })
            }
            FSpec::File(path) => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                ScalarField::load_csv(grid, &path)?
            }
        };
        if let Some((node, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Domain { node, value });
        }
        Ok(field)
    }
}

/// Residual field with per-node Garding-cone margins.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `F(λ(A)) − (φ u^{p-1})^{1/(k-l)}`; NaN at inadmissible nodes.
    pub residual: ScalarField,
    /// Max-norm of the residual; infinite if any node is inadmissible.
    pub max_norm: f64,
    /// `min_{i <= n-l} σ_i(λ(A))` per node.
    pub margins: ScalarField,
    pub min_margin: f64,
}

impl ResidualReport {
    pub fn is_admissible(&self) -> bool {
        self.min_margin > 0.0
    }
}

/// Frame-contracted derivative of `F` at one node.
pub(crate) struct NodeDerivative {
    #[cfg_attr(not(test), allow(dead_code))]
    pub value: f64,
    /// Weights multiplying the stored Hessian components.
    pub contraction: [f64; 3],
    /// `Σ_i F^{ii}`.
    pub trace: f64,
}

pub(crate) fn node_margin(q: &QuotientOperator, a: &CurvatureMatrixField, node: usize) -> f64 {
    let e = elementary_all(&a.eigenvalues(node));
    e[1..=q.numerator_order()]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn node_derivative(
    q: &QuotientOperator,
    a: &CurvatureMatrixField,
    node: usize,
) -> Result<NodeDerivative> {
    let e = a.raw(node);
    if a.grid().is_axisymmetric() {
        let lambda = a.eigenvalues(node);
        let (v, g) = q.value_and_gradient(&lambda)?;
        let tangential: f64 = g[1..].iter().sum();
        Ok(NodeDerivative {
            value: v.root,
            contraction: [g[0], tangential, 0.0],
            trace: g[0] + tangential,
        })
    } else {
        let (l1, l2) = eig2(e[0], e[1], e[2]);
        let (v, g) = q.value_and_gradient(&[l1, l2])?;
        // F^{ij} = ḡ·I + D·(A − tr(A)/2·I), D the divided difference of ∂F/∂λ.
        let mean = 0.5 * (g[0] + g[1]);
        let d = if (l1 - l2) < COINCIDENCE_TOL * (1.0 + l1.abs() + l2.abs()) {
            0.0
        } else {
            (g[0] - g[1]) / (l1 - l2)
        };
        let half_diff = 0.5 * (e[0] - e[2]);
        let f11 = mean + d * half_diff;
        let f22 = mean - d * half_diff;
        let f12 = d * e[1];
        Ok(NodeDerivative {
            value: v.root,
            contraction: [f11, 2.0 * f12, f22],
            trace: f11 + f22,
        })
    }
}

fn check_positive(u: &ScalarField) -> Result<()> {
    if let Some((node, &value)) = u
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::Domain { node, value });
    }
    Ok(())
}

/// Right-hand side `(φ u^{p-1})^{1/(k-l)}` at one node.
fn rhs(spec: &ProblemSpec, u: f64, phi: f64) -> f64 {
    (phi * u.powf(spec.p - 1.0)).powf(1.0 / spec.order_gap() as f64)
}

/// Residual of the root-normalized equation for data `φ`.
pub fn residual(spec: &ProblemSpec, u: &ScalarField, phi: &ScalarField) -> Result<ResidualReport> {
    spec.check_grid(u.grid())?;
    u.check_same_grid(phi)?;
    check_positive(u)?;
    let q = spec.operator();
    let a = hessian_plus_metric(u);
    let mut res = Vec::with_capacity(u.len());
    let mut margins = Vec::with_capacity(u.len());
    for node in 0..u.len() {
        let margin = node_margin(&q, &a, node);
        margins.push(margin);
        let r = if margin > 0.0 {
            let value = q
                .value(&a.eigenvalues(node))
                .map(|v| v.root)
                .unwrap_or(f64::NAN);
            value - rhs(spec, u.values()[node], phi.values()[node])
        } else {
            f64::NAN
        };
        res.push(r);
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let max_norm = if min_margin > 0.0 {
        res.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    } else {
        f64::INFINITY
    };
    Ok(ResidualReport {
        residual: ScalarField::new(u.grid().clone(), res)?,
        max_norm,
        margins: ScalarField::new(u.grid().clone(), margins)?,
        min_margin,
    })
}

/// Jacobian of [`residual`] at an admissible `u`:
/// `h ↦ F^{ij}(h_{ij} + h δ_{ij}) − ((p−1)/(k−l)) u^{(p−1)/(k−l)−1} φ^{1/(k−l)} h`.
pub fn linearize(spec: &ProblemSpec, u: &ScalarField, phi: &ScalarField) -> Result<SparseOperator> {
    spec.check_grid(u.grid())?;
    u.check_same_grid(phi)?;
    check_positive(u)?;
    let q = spec.operator();
    let grid = u.grid();
    let a = hessian_plus_metric(u);
    let stencil = grid.hessian_stencil();
    let gap = spec.order_gap() as f64;
    let expo = (spec.p - 1.0) / gap;
    let mut b = RowBuilder::new(grid.len());
    for node in 0..grid.len() {
        let d = match node_derivative(&q, &a, node) {
            Ok(d) => d,
            Err(Error::Inadmissible { margin, .. }) => {
                return Err(Error::InadmissibleNode { node, margin })
            }
            Err(e) => return Err(e),
        };
        for (col, w) in stencil.row(node) {
            let v: f64 = (0..3).map(|c| d.contraction[c] * w[c]).sum();
            b.push(col, v);
        }
        let un = u.values()[node];
        let react = expo * un.powf(expo - 1.0) * phi.values()[node].powf(1.0 / gap);
        b.push(node, d.trace - react);
        b.finish_row();
    }
    Ok(b.build())
}

/// Homotopy data `φ_t = ((1−t) + t f^{1/P})^{−P}`, `P = p + k − l − 1`.
pub fn homotopy_phi(t: f64, f: &ScalarField, p: f64, k: usize, l: usize) -> Result<ScalarField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::contract(format!("homotopy parameter t = {t} outside [0, 1]")));
    }
    if l >= k {
        return Err(Error::contract(format!("need l < k, got k={k}, l={l}")));
    }
    let expo = p + (k - l) as f64 - 1.0;
    if !(expo > 0.0) {
        return Err(Error::contract(format!("path exponent p+k-l-1 = {expo} must be positive")));
    }
    check_positive(f)?;
    Ok(f.map(|fv| ((1.0 - t) + t * fv.powf(1.0 / expo)).powf(-expo)))
}

/// `φ = 1/f`.
pub fn phi_from_f(f: &ScalarField) -> ScalarField {
    f.map(|v| 1.0 / v)
}

/// Verdicts of the maximum-principle `C⁰` bound
/// `min φ^{-1} <= u^{p-(k-l+1)} <= max φ^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C0Report {
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `min u^{p0} − min φ^{-1}`.
    pub lower_slack: f64,
    /// `max φ^{-1} − max u^{p0}`.
    pub upper_slack: f64,
    pub tolerance: f64,
}

pub fn c0_bounds_check(spec: &ProblemSpec, u: &ScalarField, phi: &ScalarField) -> Result<C0Report> {
    if spec.regime() != Regime::Supercritical {
        return Err(Error::contract("the C0 bound check applies to p > k-l+1 only"));
    }
    u.check_same_grid(phi)?;
    check_positive(u)?;
    let p0 = spec.p - spec.critical_exponent();
    let powered = u.map(|v| v.powf(p0));
    let inv_phi = phi.map(|v| 1.0 / v);
    let h = u.grid().spacing();
    let tolerance = BOUND_SLACK_CONSTANT * h * h;
    let lower_slack = powered.min() - inv_phi.min();
    let upper_slack = inv_phi.max() - powered.max();
    Ok(C0Report {
        lower_ok: lower_slack >= -tolerance,
        upper_ok: upper_slack >= -tolerance,
        lower_slack,
        upper_slack,
        tolerance,
    })
}

/// `max_x tr A = max (Δu + n u)`.
pub fn c2_diagnostic(u: &ScalarField) -> f64 {
    let a = hessian_plus_metric(u);
    (0..a.len()).map(|i| a.trace(i)).fold(f64::NEG_INFINITY, f64::max)
}
