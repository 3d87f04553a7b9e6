//! Sphere discretizations and the discrete covariant operators that produce
//! `A = ∇²u + u·σ` in an orthonormal frame.
//!
//! Two grids are supported:
//!
//! * axisymmetric: functions of the polar angle θ on `S^n`, with θ nodes
//!   staggered as `θ_i = (i + 1/2)·π/M`. The Hessian of a zonal function is
//!   diagonal with entries `u''` (once) and `u'·cot θ` (n−1 times).
//! * full2d: a staggered latitude–longitude grid on `S²` with an even number
//!   of longitudes and periodic wraparound.
//!
//! Neither grid has a node on a pole. Stencils that reach across a pole read
//! the antipodal-longitude node of the first (last) row, so the discrete
//! system stays square without ghost unknowns.
//!
//! All difference quotients are centered and second order. Their
//! denominators are chosen (`2 sin h` for first differences, `4 sin²(h/2)`
//! for second differences) so that they are exact on first harmonics; as a
//! consequence `A` of the restriction of a linear function vanishes to
//! round-off on both grids.
//!
//! Ambient coordinates: `x_1 = cos θ` is the polar axis; for full2d
//! `x_2 = sin θ cos φ`, `x_3 = sin θ sin φ`. Axisymmetric nodes are
//! represented by their point on the meridian `φ = 0`.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Minimum number of nodes on any great circle through the grid.
pub const MIN_NODES_PER_CIRCLE: usize = 8;

/// Default axisymmetric resolution.
pub const DEFAULT_AXISYMMETRIC: usize = 256;
/// Default full2d resolution `(n_theta, n_phi)`.
pub const DEFAULT_FULL2D: (usize, usize) = (96, 192);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Axisymmetric { dim: usize, nodes: usize },
    Full2d { n_theta: usize, n_phi: usize },
}

/// Per-node stencil in compressed-row form. Each entry carries one weight
/// per Hessian component (2 for axisymmetric, 3 for full2d).
#[derive(Debug, Clone)]
pub(crate) struct HessianStencil {
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: Vec<[f64; 3]>,
}

impl HessianStencil {
    pub fn row(&self, node: usize) -> impl Iterator<Item = (usize, &[f64; 3])> {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.cols[range.clone()].iter().copied().zip(&self.weights[range])
    }
}

/// First-difference stencil, gradient components in the orthonormal frame.
#[derive(Debug, Clone)]
pub(crate) struct GradientStencil {
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: Vec<[f64; 2]>,
}

#[derive(Debug)]
pub struct SphereGrid {
    kind: GridKind,
    theta: Vec<f64>,
    phi: Vec<f64>,
    weights: Vec<f64>,
    hessian: HessianStencil,
    gradient: GradientStencil,
}

/// Surface measure of the unit sphere `S^m`.
pub fn sphere_measure(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_measure(m - 2),
    }
}

struct StencilBuilder<const C: usize> {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<[f64; C]>,
    row: Vec<(usize, [f64; C])>,
}

impl<const C: usize> StencilBuilder<C> {
    fn new() -> Self {
        StencilBuilder {
            offsets: vec![0],
            cols: Vec::new(),
            weights: Vec::new(),
            row: Vec::new(),
        }
    }

    fn add(&mut self, col: usize, comp: usize, w: f64) {
        if let Some(e) = self.row.iter_mut().find(|e| e.0 == col) {
            e.1[comp] += w;
        } else {
            let mut ws = [0.0; C];
            ws[comp] = w;
            self.row.push((col, ws));
        }
    }

    fn finish_row(&mut self) {
        self.row.sort_by_key(|e| e.0);
        for (c, w) in self.row.drain(..) {
            self.cols.push(c);
            self.weights.push(w);
        }
        self.offsets.push(self.cols.len());
    }
}

impl SphereGrid {
    /// Zonal grid on `S^n` with `nodes` staggered polar-angle nodes.
    pub fn axisymmetric(dim: usize, nodes: usize) -> Result<Arc<Self>> {
        if dim < 2 {
            return Err(Error::Grid(format!("sphere dimension must be >= 2, got {dim}")));
        }
        // A meridian great circle carries 2·nodes samples.
        if 2 * nodes < MIN_NODES_PER_CIRCLE * 2 {
            return Err(Error::Grid(format!(
                "axisymmetric grid needs at least {MIN_NODES_PER_CIRCLE} nodes, got {nodes}"
            )));
        }
        let h = PI / nodes as f64;
        let theta: Vec<f64> = (0..nodes).map(|i| (i as f64 + 0.5) * h).collect();
        let omega = sphere_measure(dim - 1);
        let weights = theta
            .iter()
            .map(|t| omega * t.sin().powi(dim as i32 - 1) * h)
            .collect();

        let d1 = 1.0 / (2.0 * h.sin());
        let d2 = 1.0 / (4.0 * (0.5 * h).sin().powi(2));
        let mut hs = StencilBuilder::<3>::new();
        let mut gs = StencilBuilder::<2>::new();
        for i in 0..nodes {
            // Reflection through the pole maps the ghost node onto the node itself.
            let im = i.saturating_sub(1);
            let ip = (i + 1).min(nodes - 1);
            let cot = 1.0 / theta[i].tan();
            hs.add(ip, 0, d2);
            hs.add(i, 0, -2.0 * d2);
            hs.add(im, 0, d2);
            hs.add(ip, 1, cot * d1);
            hs.add(im, 1, -cot * d1);
            hs.finish_row();
            gs.add(ip, 0, d1);
            gs.add(im, 0, -d1);
            gs.finish_row();
        }
        Ok(Arc::new(SphereGrid {
            kind: GridKind::Axisymmetric { dim, nodes },
            theta,
            phi: Vec::new(),
            weights,
            hessian: HessianStencil {
                offsets: hs.offsets,
                cols: hs.cols,
                weights: hs.weights,
            },
            gradient: GradientStencil {
                offsets: gs.offsets,
                cols: gs.cols,
                weights: gs.weights,
            },
        }))
    }

    /// Staggered latitude–longitude grid on `S²`.
    pub fn full2d(n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        if n_phi < MIN_NODES_PER_CIRCLE || 2 * n_theta < MIN_NODES_PER_CIRCLE {
            return Err(Error::Grid(format!(
                "full2d grid {n_theta}x{n_phi} has fewer than {MIN_NODES_PER_CIRCLE} nodes per circle"
            )));
        }
        if n_phi % 2 != 0 {
            return Err(Error::Grid(format!(
                "longitude count must be even for antipodal closure, got {n_phi}"
            )));
        }
        let ht = PI / n_theta as f64;
        let hp = 2.0 * PI / n_phi as f64;
        let theta: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * ht).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| j as f64 * hp).collect();
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for t in &theta {
            for _ in 0..n_phi {
                weights.push(t.sin() * ht * hp);
            }
        }

        let half = n_phi / 2;
        let idx = |i: isize, j: isize| -> usize {
            let (i, shift) = if i < 0 {
                (0, half as isize)
            } else if i >= n_theta as isize {
                (n_theta as isize - 1, half as isize)
            } else {
                (i, 0)
            };
            let j = (j + shift).rem_euclid(n_phi as isize);
            i as usize * n_phi + j as usize
        };
        let dt1 = 1.0 / (2.0 * ht.sin());
        let dp1 = 1.0 / (2.0 * hp.sin());
        let dt2 = 1.0 / (4.0 * (0.5 * ht).sin().powi(2));
        let dp2 = 1.0 / (4.0 * (0.5 * hp).sin().powi(2));
        let dtp = 1.0 / (4.0 * ht.sin() * hp.sin());

        let mut hs = StencilBuilder::<3>::new();
        let mut gs = StencilBuilder::<2>::new();
        for (i, &t) in theta.iter().enumerate() {
            let (s, c) = t.sin_cos();
            let cot = c / s;
            for j in 0..n_phi {
                let (i, j) = (i as isize, j as isize);
                let here = idx(i, j);
                // A11 - u = u_θθ
                hs.add(idx(i + 1, j), 0, dt2);
                hs.add(here, 0, -2.0 * dt2);
                hs.add(idx(i - 1, j), 0, dt2);
                // A12 = (u_θφ - cot θ u_φ) / sin θ
                hs.add(idx(i + 1, j + 1), 1, dtp / s);
                hs.add(idx(i + 1, j - 1), 1, -dtp / s);
                hs.add(idx(i - 1, j + 1), 1, -dtp / s);
                hs.add(idx(i - 1, j - 1), 1, dtp / s);
                hs.add(idx(i, j + 1), 1, -cot * dp1 / s);
                hs.add(idx(i, j - 1), 1, cot * dp1 / s);
                // A22 - u = u_φφ / sin²θ + cot θ u_θ
                hs.add(idx(i, j + 1), 2, dp2 / (s * s));
                hs.add(here, 2, -2.0 * dp2 / (s * s));
                hs.add(idx(i, j - 1), 2, dp2 / (s * s));
                hs.add(idx(i + 1, j), 2, cot * dt1);
                hs.add(idx(i - 1, j), 2, -cot * dt1);
                hs.finish_row();

                gs.add(idx(i + 1, j), 0, dt1);
                gs.add(idx(i - 1, j), 0, -dt1);
                gs.add(idx(i, j + 1), 1, dp1 / s);
                gs.add(idx(i, j - 1), 1, -dp1 / s);
                gs.finish_row();
            }
        }
        Ok(Arc::new(SphereGrid {
            kind: GridKind::Full2d { n_theta, n_phi },
            theta,
            phi,
            weights,
            hessian: HessianStencil {
                offsets: hs.offsets,
                cols: hs.cols,
                weights: hs.weights,
            },
            gradient: GradientStencil {
                offsets: gs.offsets,
                cols: gs.cols,
                weights: gs.weights,
            },
        }))
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Dimension `n` of the sphere `S^n`.
    pub fn dim(&self) -> usize {
        match self.kind {
            GridKind::Axisymmetric { dim, .. } => dim,
            GridKind::Full2d { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_axisymmetric(&self) -> bool {
        matches!(self.kind, GridKind::Axisymmetric { .. })
    }

    /// Number of independent Hessian components stored per node.
    #[allow(dead_code)]
    pub(crate) fn components(&self) -> usize {
        if self.is_axisymmetric() {
            2
        } else {
            3
        }
    }

    /// Largest grid spacing in radians.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Axisymmetric { nodes, .. } => PI / nodes as f64,
            GridKind::Full2d { n_theta, n_phi } => (PI / n_theta as f64).max(2.0 * PI / n_phi as f64),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(θ, φ)` of a node; `φ = 0` on axisymmetric grids.
    pub fn angles(&self, node: usize) -> (f64, f64) {
        match self.kind {
            GridKind::Axisymmetric { .. } => (self.theta[node], 0.0),
            GridKind::Full2d { n_phi, .. } => (self.theta[node / n_phi], self.phi[node % n_phi]),
        }
    }

    /// Unit ambient point of a node in `R^{n+1}`.
    pub fn point(&self, node: usize) -> Vec<f64> {
        let (t, p) = self.angles(node);
        let (s, c) = t.sin_cos();
        match self.kind {
            GridKind::Axisymmetric { dim, .. } => {
                let mut x = vec![0.0; dim + 1];
                x[0] = c;
                x[1] = s;
                x
            }
            GridKind::Full2d { .. } => vec![c, s * p.cos(), s * p.sin()],
        }
    }

    /// Ambient unit vectors of the orthonormal frame `(e_θ, e_φ)` at a node.
    /// On axisymmetric grids only `e_θ` is meaningful; the second vector is zero.
    pub fn frame(&self, node: usize) -> [Vec<f64>; 2] {
        let (t, p) = self.angles(node);
        let (s, c) = t.sin_cos();
        match self.kind {
            GridKind::Axisymmetric { dim, .. } => {
                let mut et = vec![0.0; dim + 1];
                et[0] = -s;
                et[1] = c;
                [et, vec![0.0; dim + 1]]
            }
            GridKind::Full2d { .. } => {
                let (sp, cp) = p.sin_cos();
                [vec![-s, c * cp, c * sp], vec![0.0, -sp, cp]]
            }
        }
    }

    /// Index of the antipodal node.
    pub fn antipode(&self, node: usize) -> usize {
        match self.kind {
            GridKind::Axisymmetric { nodes, .. } => nodes - 1 - node,
            GridKind::Full2d { n_theta, n_phi } => {
                let (i, j) = (node / n_phi, node % n_phi);
                (n_theta - 1 - i) * n_phi + (j + n_phi / 2) % n_phi
            }
        }
    }

    pub(crate) fn hessian_stencil(&self) -> &HessianStencil {
        &self.hessian
    }

    pub(crate) fn gradient_row(&self, node: usize) -> impl Iterator<Item = (usize, &[f64; 2])> {
        let g = &self.gradient;
        let range = g.offsets[node]..g.offsets[node + 1];
        g.cols[range.clone()].iter().copied().zip(&g.weights[range])
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || (self.kind == other.kind)
    }
}

/// Real samples of a function, one per grid node.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        ScalarField {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at the ambient node points.
    pub fn from_point_fn(grid: &Arc<SphereGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    /// Samples `f(θ, φ)` at the node angles.
    pub fn from_angles_fn(grid: &Arc<SphereGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (t, p) = grid.angles(i);
                f(t, p)
            })
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Grid("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `max |u(x) − u(−x)|`.
    pub fn evenness_residual(&self) -> f64 {
        (0..self.len()).fold(0.0, |m, i| {
            m.max((self.values[i] - self.values[self.grid.antipode(i)]).abs())
        })
    }

    /// Writes `theta,value` (axisymmetric) or `theta,phi,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let full = !self.grid.is_axisymmetric();
        if full {
            writeln!(w, "theta,phi,value")?;
        } else {
            writeln!(w, "theta,value")?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let (t, p) = self.grid.angles(i);
            if full {
                writeln!(w, "{t},{p},{v}")?;
            } else {
                writeln!(w, "{t},{v}")?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a field written by [`ScalarField::write_csv`]; rows must follow
    /// the grid's node order and their coordinates must match the nodes.
    pub fn load_csv(grid: &Arc<SphereGrid>, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let bad = |message: String| Error::Csv {
            path: path.to_path_buf(),
            message,
        };
        let full = !grid.is_axisymmetric();
        let expected = if full { "theta,phi,value" } else { "theta,value" };
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .map_err(|e| Error::io(path, e))?;
        if header.trim() != expected {
            return Err(bad(format!("header {header:?}, expected {expected:?}")));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("row {}: {e}", row + 2)))?;
            if cols.len() != if full { 3 } else { 2 } {
                return Err(bad(format!("row {} has {} columns", row + 2, cols.len())));
            }
            let node = values.len();
            if node >= grid.len() {
                return Err(bad(format!("more rows than the {} grid nodes", grid.len())));
            }
            let (t, p) = grid.angles(node);
            let coord_ok = (cols[0] - t).abs() < 1e-9 && (!full || (cols[1] - p).abs() < 1e-9);
            if !coord_ok {
                return Err(bad(format!("row {} coordinates do not match node {node}", row + 2)));
            }
            values.push(*cols.last().unwrap());
        }
        if values.len() != grid.len() {
            return Err(bad(format!(
                "{} rows for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        ScalarField::new(grid.clone(), values)
    }
}

/// Per-node `A = ∇²u + u·σ` in the local orthonormal frame.
///
/// Axisymmetric nodes store `[λ_radial, λ_tangential, 0]`; the tangential
/// value has multiplicity `n − 1`. Full2d nodes store `[A11, A12, A22]`.
#[derive(Debug, Clone)]
pub struct CurvatureMatrixField {
    grid: Arc<SphereGrid>,
    entries: Vec<[f64; 3]>,
}

/// Closed-form spectrum of `[[a, b], [b, c]]`, largest first.
pub(crate) fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let m = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    (m + r, m - r)
}

impl CurvatureMatrixField {
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub(crate) fn raw(&self, node: usize) -> [f64; 3] {
        self.entries[node]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Eigenvalues of `A` at a node (tangential block repeated on axisymmetric grids).
    pub fn eigenvalues(&self, node: usize) -> Vec<f64> {
        let e = self.entries[node];
        if self.grid.is_axisymmetric() {
            let mut v = vec![e[1]; self.grid.dim()];
            v[0] = e[0];
            v
        } else {
            let (l1, l2) = eig2(e[0], e[1], e[2]);
            vec![l1, l2]
        }
    }

    /// Dense `n×n` matrix of `A` at a node.
    pub fn matrix(&self, node: usize) -> DMatrix<f64> {
        let e = self.entries[node];
        let n = self.grid.dim();
        if self.grid.is_axisymmetric() {
            let mut m = DMatrix::identity(n, n) * e[1];
            m[(0, 0)] = e[0];
            m
        } else {
            DMatrix::from_row_slice(2, 2, &[e[0], e[1], e[1], e[2]])
        }
    }

    pub fn trace(&self, node: usize) -> f64 {
        let e = self.entries[node];
        if self.grid.is_axisymmetric() {
            e[0] + (self.grid.dim() - 1) as f64 * e[1]
        } else {
            e[0] + e[2]
        }
    }

    pub fn min_eigenvalue_at(&self, node: usize) -> f64 {
        let e = self.entries[node];
        if self.grid.is_axisymmetric() {
            e[0].min(e[1])
        } else {
            eig2(e[0], e[1], e[2]).1
        }
    }

    /// `(node, value)` of the smallest eigenvalue over the grid.
    pub fn min_eigenvalue(&self) -> (usize, f64) {
        (0..self.len())
            .map(|i| (i, self.min_eigenvalue_at(i)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }

    /// Largest absolute frame entry over all nodes.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discrete `A = ∇²u + u·σ` at every node.
pub fn hessian_plus_metric(u: &ScalarField) -> CurvatureMatrixField {
    let grid = u.grid();
    let st = grid.hessian_stencil();
    let axi = grid.is_axisymmetric();
    let vals = u.values();
    let entries = (0..grid.len())
        .map(|node| {
            let mut acc = [0.0; 3];
            for (col, w) in st.row(node) {
                for c in 0..3 {
                    acc[c] += w[c] * vals[col];
                }
            }
            let un = vals[node];
            if axi {
                [acc[0] + un, acc[1] + un, 0.0]
            } else {
                [acc[0] + un, acc[1], acc[2] + un]
            }
        })
        .collect();
    CurvatureMatrixField {
        grid: grid.clone(),
        entries,
    }
}

/// Gradient components `(u_θ, u_φ / sin θ)` in the orthonormal frame.
pub fn gradient(u: &ScalarField) -> Vec<[f64; 2]> {
    let grid = u.grid();
    let vals = u.values();
    (0..grid.len())
        .map(|node| {
            let mut g = [0.0; 2];
            for (col, w) in grid.gradient_row(node) {
                g[0] += w[0] * vals[col];
                g[1] += w[1] * vals[col];
            }
            g
        })
        .collect()
}

/// `|∇u|²` per node.
pub fn gradient_norm_sq(u: &ScalarField) -> ScalarField {
    let values = gradient(u).iter().map(|g| g[0] * g[0] + g[1] * g[1]).collect();
    ScalarField {
        grid: u.grid().clone(),
        values,
    }
}

/// Quadrature of a field against the round measure.
pub fn integrate(g: &ScalarField) -> f64 {
    g.values()
        .iter()
        .zip(g.grid().weights())
        .map(|(v, w)| v * w)
        .sum()
}

/// Antipodal average `(u(x) + u(−x)) / 2`.
pub fn even_projection(u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let vals = u.values();
    let values = (0..grid.len())
        .map(|i| {
            let j = grid.antipode(i);
            // Order the pair so both nodes get a bit-identical value.
            let (a, b) = if i <= j { (vals[i], vals[j]) } else { (vals[j], vals[i]) };
            0.5 * (a + b)
        })
        .collect();
    ScalarField {
        grid: grid.clone(),
        values,
    }
}
