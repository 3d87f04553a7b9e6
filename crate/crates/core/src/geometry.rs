//! The hypersurface behind a support function: embedding, the curvature
//! equation on the surface side, convexity and a-priori estimate
//! diagnostics, Minkowski integral identities and mesh export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pde::{ProblemSpec, Regime};
use crate::sphere::{gradient, hessian_plus_metric, integrate, GridKind, ScalarField, SphereGrid};
use crate::symfun::{h_normalized, max_cone_order};

/// Margin above which the data convexity condition counts as satisfied.
pub const CONDITION_MARGIN_TOL: f64 = -1e-8;

/// Surface data at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    /// `X = u·x + ∇u` in `R^{n+1}`.
    pub position: Vec<f64>,
    /// Outward normal, equal to the node direction `x`.
    pub normal: Vec<f64>,
    /// `⟨X, ν⟩`.
    pub support: f64,
    /// Principal curvatures `1/λ_i(A)`.
    pub curvatures: Vec<f64>,
}

/// Hypersurface reconstructed from a strictly convex support function.
#[derive(Debug, Clone)]
pub struct Surface {
    grid: Arc<SphereGrid>,
    pub points: Vec<SurfacePoint>,
    /// Embedded pole limits `(north, south)` on full 2-D grids.
    pub poles: Option<(Vec<f64>, Vec<f64>)>,
}

impl Surface {
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pole limit `X(±e_0)` from the two nearest rings, exact for support
/// functions of the form `a + ⟨x, g⟩`.
fn pole_limit(u: &ScalarField, north: bool) -> Vec<f64> {
    let grid = u.grid();
    let GridKind::Full2d { n_theta, n_phi } = grid.kind() else {
        unreachable!("pole limits exist on full grids only")
    };
    let ring = |r: usize| if north { r } else { n_theta - 1 - r };
    let vals = u.values();
    let mode = |r: usize| {
        let (mut m0, mut mc, mut ms) = (0.0, 0.0, 0.0);
        for j in 0..n_phi {
            let node = ring(r) * n_phi + j;
            let (_, phi) = grid.angles(node);
            m0 += vals[node];
            mc += vals[node] * phi.cos();
            ms += vals[node] * phi.sin();
        }
        let m = n_phi as f64;
        (m0 / m, 2.0 * mc / m, 2.0 * ms / m)
    };
    let (t0, _) = grid.angles(ring(0) * n_phi);
    let (t1, _) = grid.angles(ring(1) * n_phi);
    let (a0, c0, s0) = mode(0);
    let (a1, _, _) = mode(1);
    // a + g0 cos θ_r = mode-0 average of ring r.
    let g0 = (a0 - a1) / (t0.cos() - t1.cos());
    let a = a0 - g0 * t0.cos();
    let (g1, g2) = (c0 / t0.sin(), s0 / t0.sin());
    let axis = if north { 1.0 } else { -1.0 };
    vec![a * axis + g0, g1, g2]
}

/// Support-function embedding `X = u·x + ∇u`, `ν = x`, `κ_i = 1/λ_i(A)`.
pub fn embed(u: &ScalarField) -> Result<Surface> {
    let grid = u.grid();
    let a = hessian_plus_metric(u);
    let (node, min_eigenvalue) = a.min_eigenvalue();
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotConvex {
            node,
            min_eigenvalue,
        });
    }
    let grad = gradient(u);
    let points = (0..u.len())
        .map(|node| {
            let x = grid.point(node);
            let [et, ep] = grid.frame(node);
            let uv = u.values()[node];
            let [gt, gp] = grad[node];
            let position: Vec<f64> = (0..x.len())
                .map(|c| uv * x[c] + gt * et[c] + gp * ep[c])
                .collect();
            let support = dot(&position, &x);
            let curvatures = a.eigenvalues(node).iter().map(|l| 1.0 / l).collect();
            SurfacePoint {
                position,
                normal: x,
                support,
                curvatures,
            }
        })
        .collect();
    let poles = (!grid.is_axisymmetric()).then(|| (pole_limit(u, true), pole_limit(u, false)));
    Ok(Surface {
        grid: grid.clone(),
        points,
        poles,
    })
}

/// `max |H_k(κ)/H_l(κ) − f(ν)⟨X,ν⟩^{1−p}|` over the surface.
pub fn verify_curvature_equation(spec: &ProblemSpec, surface: &Surface, f: &ScalarField) -> Result<f64> {
    if !surface.grid.same_as(f.grid()) || surface.len() != f.len() {
        return Err(Error::Grid("surface and data live on different grids".into()));
    }
    if surface.grid.dim() != spec.n {
        return Err(Error::contract("surface dimension differs from the problem dimension"));
    }
    let mut worst = 0.0_f64;
    for (pt, &fv) in surface.points.iter().zip(f.values()) {
        let lhs = h_normalized(&pt.curvatures, spec.k) / h_normalized(&pt.curvatures, spec.l);
        let rhs = fv * pt.support.powf(1.0 - spec.p);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `H_k(1/λ)/H_l(1/λ) · H_{n-l}(λ)/H_{n-k}(λ)`, identically 1 on `Γ_n`.
pub fn duality_product(lambda: &[f64], k: usize, l: usize) -> f64 {
    let n = lambda.len();
    let kappa: Vec<f64> = lambda.iter().map(|v| 1.0 / v).collect();
    (h_normalized(&kappa, k) / h_normalized(&kappa, l)) * (h_normalized(lambda, n - l) / h_normalized(lambda, n - k))
}

/// Smallest eigenvalue of `∇²g + gσ` for `g = f^{1/(p+k−l−1)}`.
#[derive(Debug, Clone, Serialize)]
pub struct DataConvexity {
    pub exponent: f64,
    pub margin: f64,
    pub node: usize,
    pub holds: bool,
}

pub fn check_f_convexity_condition(f: &ScalarField, p: f64, k: usize, l: usize) -> Result<DataConvexity> {
    if l >= k {
        return Err(Error::contract("need l < k"));
    }
    if let Some((node, &value)) = f.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain { node, value });
    }
    let exponent = p + (k - l) as f64 - 1.0;
    let g = f.map(|v| v.powf(1.0 / exponent));
    let (node, margin) = hessian_plus_metric(&g).min_eigenvalue();
    Ok(DataConvexity {
        exponent,
        margin,
        node,
        holds: margin >= CONDITION_MARGIN_TOL,
    })
}

/// Convexity grading of a support function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvexityReport {
    pub min_eigenvalue: f64,
    pub node: usize,
    /// Largest `m` with `λ(A) ∈ Γ_m` at every node (0 if none).
    pub max_cone_order: usize,
    pub strictly_convex: bool,
}

impl ConvexityReport {
    /// `A ∈ Γ_m` at every node.
    pub fn is_admissible(&self, m: usize) -> bool {
        self.max_cone_order >= m
    }
}

pub fn convexity_report(u: &ScalarField) -> ConvexityReport {
    let a = hessian_plus_metric(u);
    let (node, min_eigenvalue) = a.min_eigenvalue();
    let max_cone_order = (0..a.len())
        .map(|i| max_cone_order(&a.eigenvalues(i)))
        .min()
        .unwrap_or(0);
    ConvexityReport {
        min_eigenvalue,
        node,
        max_cone_order,
        strictly_convex: min_eigenvalue > 0.0,
    }
}

/// Both sides of `∫ u H_m(A) = ∫ H_{m+1}(A)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinkowskiCheck {
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`.
    pub gap: f64,
}

pub fn minkowski_identity_check(u: &ScalarField, m: usize) -> Result<MinkowskiCheck> {
    let n = u.grid().dim();
    if m >= n {
        return Err(Error::contract(format!("Minkowski order m = {m} must be below n = {n}")));
    }
    let a = hessian_plus_metric(u);
    let eig: Vec<Vec<f64>> = (0..a.len()).map(|i| a.eigenvalues(i)).collect();
    let grid = u.grid();
    let left = ScalarField::new(
        grid.clone(),
        eig.iter().zip(u.values()).map(|(l, uv)| uv * h_normalized(l, m)).collect(),
    )?;
    let right = ScalarField::new(grid.clone(), eig.iter().map(|l| h_normalized(l, m + 1)).collect())?;
    let (lhs, rhs) = (integrate(&left), integrate(&right));
    let scale = lhs.abs().max(rhs.abs());
    let gap = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    Ok(MinkowskiCheck { m, lhs, rhs, gap })
}

/// Measured gradient and non-collapsing quantities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateReport {
    /// `max u / min u`.
    pub noncollapse_ratio: f64,
    pub beta: Option<f64>,
    /// Smallest `N` with `(|∇u|² + u²)/u^β <= N (max u)^{2−β}`.
    pub weighted_n: Option<f64>,
    /// `max |∇ log u|`.
    pub max_grad_log_u: f64,
}

/// Upper end of the admissible weight interval `(0, 2(p−1)/(k−l))`.
pub fn beta_limit(spec: &ProblemSpec) -> f64 {
    2.0 * (spec.p - 1.0) / spec.order_gap() as f64
}

/// Gradient and ratio diagnostics of a positive `u`. The weighted estimate
/// is evaluated in the subcritical regime only; `beta` defaults to half of
/// [`beta_limit`].
pub fn estimate_diagnostics(u: &ScalarField, spec: &ProblemSpec, beta: Option<f64>) -> Result<EstimateReport> {
    if let Some((node, &value)) = u.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain { node, value });
    }
    let grad = gradient(u);
    let vals = u.values();
    let max_grad_log_u = grad
        .iter()
        .zip(vals)
        .map(|(g, v)| (g[0] * g[0] + g[1] * g[1]).sqrt() / v)
        .fold(0.0, f64::max);
    let (umin, umax) = (u.min(), u.max());
    let (beta, weighted_n) = if spec.regime() == Regime::Subcritical {
        let limit = beta_limit(spec);
        let b = beta.unwrap_or(0.5 * limit);
        if !(b > 0.0 && b < limit) {
            return Err(Error::contract(format!("beta = {b} outside (0, {limit})")));
        }
        let n = grad
            .iter()
            .zip(vals)
            .map(|(g, v)| (g[0] * g[0] + g[1] * g[1] + v * v) / v.powf(b))
            .fold(0.0, f64::max)
            / umax.powf(2.0 - b);
        (Some(b), Some(n))
    } else {
        (None, None)
    };
    Ok(EstimateReport {
        noncollapse_ratio: umax / umin,
        beta,
        weighted_n,
        max_grad_log_u,
    })
}

/// Wavefront OBJ mesh of a full 2-D surface: one vertex per node, two pole
/// apices, quads between rings and triangle fans at the caps, all oriented
/// outward.
pub fn write_obj<W: Write>(surface: &Surface, mut w: W) -> std::io::Result<()> {
    let GridKind::Full2d { n_theta, n_phi } = surface.grid.kind() else {
        panic!("write_obj needs a full 2-D grid");
    };
    let (north, south) = surface.poles.as_ref().expect("full grids carry pole limits");
    for pt in &surface.points {
        let x = &pt.position;
        writeln!(w, "v {:.17e} {:.17e} {:.17e}", x[0], x[1], x[2])?;
    }
    for x in [north, south] {
        writeln!(w, "v {:.17e} {:.17e} {:.17e}", x[0], x[1], x[2])?;
    }
    // OBJ indices are 1-based.
    let v = |i: usize, j: usize| i * n_phi + (j % n_phi) + 1;
    let (np_idx, sp_idx) = (n_theta * n_phi + 1, n_theta * n_phi + 2);
    for j in 0..n_phi {
        writeln!(w, "f {} {} {}", np_idx, v(0, j), v(0, j + 1))?;
    }
    for i in 0..n_theta - 1 {
        for j in 0..n_phi {
            writeln!(w, "f {} {} {} {}", v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1))?;
        }
    }
    let last = n_theta - 1;
    for j in 0..n_phi {
        writeln!(w, "f {} {} {}", v(last, j), sp_idx, v(last, j + 1))?;
    }
    Ok(())
}

/// Meridian profile `theta,X_r,X_z` of an axisymmetric surface.
pub fn write_profile<W: Write>(surface: &Surface, mut w: W) -> std::io::Result<()> {
    writeln!(w, "theta,X_r,X_z")?;
    for (node, pt) in surface.points.iter().enumerate() {
        let (theta, _) = surface.grid.angles(node);
        writeln!(w, "{},{},{}", theta, pt.position[1], pt.position[0])?;
    }
    Ok(())
}

/// Writes `surface.obj` (full grids) or `profile.csv` (axisymmetric grids)
/// into `dir` and returns the path.
pub fn export_surface(surface: &Surface, dir: &Path) -> Result<PathBuf> {
    let (name, obj) = if surface.grid.is_axisymmetric() {
        ("profile.csv", false)
    } else {
        ("surface.obj", true)
    };
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let res = if obj {
        write_obj(surface, &mut w)
    } else {
        write_profile(surface, &mut w)
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(nt: usize) -> Arc<SphereGrid> {
        SphereGrid::full2d(nt, 2 * nt).unwrap()
    }

    #[test]
    fn round_sphere_embedding() {
        for g in [full(16), SphereGrid::axisymmetric(3, 32).unwrap()] {
            let s = embed(&ScalarField::constant(&g, 2.5)).unwrap();
            for (node, pt) in s.points.iter().enumerate() {
                let r = dot(&pt.position, &pt.position).sqrt();
                assert!((r - 2.5).abs() < 1e-12);
                assert!((pt.support - 2.5).abs() < 1e-12);
                assert_eq!(pt.normal, g.point(node));
                assert!(pt.curvatures.iter().all(|k| (k - 0.4).abs() < 1e-10));
            }
        }
    }

    #[test]
    fn translation_moves_the_center() {
        let g = full(16);
        let e = [0.2, -0.1, 0.3];
        let base = ScalarField::constant(&g, 1.5);
        let shifted = ScalarField::from_point_fn(&g, |x| 1.5 + dot(x, &e));
        let (s0, s1) = (embed(&base).unwrap(), embed(&shifted).unwrap());
        for (a, b) in s0.points.iter().zip(&s1.points) {
            for c in 0..3 {
                assert!((b.position[c] - a.position[c] - e[c]).abs() < 1e-12);
            }
        }
        let (n0, _) = s1.poles.clone().unwrap();
        assert!((n0[0] - 1.7).abs() < 1e-12 && (n0[1] + 0.1).abs() < 1e-12 && (n0[2] - 0.3).abs() < 1e-12);
        let (c0, c1) = (convexity_report(&base), convexity_report(&shifted));
        assert!((c0.min_eigenvalue - c1.min_eigenvalue).abs() < 1e-12);
    }

    #[test]
    fn nonconvex_support_is_rejected() {
        let g = SphereGrid::axisymmetric(2, 32).unwrap();
        let u = ScalarField::from_angles_fn(&g, |t, _| 1.0 + 0.9 * (4.0 * t).cos());
        assert!(matches!(embed(&u), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn constant_data_condition_margin() {
        let g = full(12);
        let r = check_f_convexity_condition(&ScalarField::constant(&g, 3.0), 4.0, 2, 1).unwrap();
        assert_eq!(r.exponent, 4.0);
        assert!((r.margin - 3f64.powf(0.25)).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn minkowski_constant_cases() {
        let g = full(48);
        let u = ScalarField::constant(&g, 1.7);
        for m in 0..2 {
            let c = minkowski_identity_check(&u, m).unwrap();
            assert!(c.gap < 1e-13, "m = {m}");
        }
        let c = minkowski_identity_check(&u, 1).unwrap();
        assert!((c.lhs / (4.0 * std::f64::consts::PI * 1.7 * 1.7) - 1.0).abs() < 1e-3);
        assert!(minkowski_identity_check(&u, 2).is_err());
    }

    #[test]
    fn estimate_constant_case() {
        let g = SphereGrid::axisymmetric(3, 32).unwrap();
        let spec = ProblemSpec::new(3, 2, 0, 2.0).unwrap();
        let u = ScalarField::constant(&g, 2.0);
        let r = estimate_diagnostics(&u, &spec, Some(0.5)).unwrap();
        assert!((r.weighted_n.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.noncollapse_ratio, 1.0);
        assert_eq!(r.max_grad_log_u, 0.0);
        assert!(estimate_diagnostics(&u, &spec, Some(1.0)).is_err());
        let sup = ProblemSpec::new(3, 2, 0, 4.0).unwrap();
        assert!(estimate_diagnostics(&u, &sup, None).unwrap().weighted_n.is_none());
    }

    #[test]
    fn obj_has_expected_counts() {
        let g = SphereGrid::full2d(4, 8).unwrap();
        let s = embed(&ScalarField::constant(&g, 1.0)).unwrap();
        let mut buf = Vec::new();
        write_obj(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 34);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 8 + 24 + 8);
    }
}
