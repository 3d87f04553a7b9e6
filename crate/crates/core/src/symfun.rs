//! Elementary symmetric functions, their normalized forms, Hessian-quotient
//! operators and Garding-cone membership.
//!
//! Everything here is a pure function of an eigenvalue tuple (or of a
//! symmetric matrix through its spectrum). The PDE residual evaluates
//! [`QuotientOperator::value_and_gradient`] once per grid node.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance used by the inequality checks on unit-scale inputs.
pub const INEQUALITY_TOL: f64 = 1e-12;

/// Relative gap below which two eigenvalues are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Ordered tuple of real eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTuple(Vec<f64>);

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("eigenvalue tuple must have length n >= 1"));
        }
        Ok(EigenTuple(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Permutation of the entries in descending order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

impl Deref for EigenTuple {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<EigenTuple> for Vec<f64> {
    fn from(t: EigenTuple) -> Self {
        t.0
    }
}

/// Binomial coefficient as a float; exact for the small n used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All elementary symmetric functions `σ_0..=σ_n` by the prefix-product
/// recurrence, optionally skipping one entry (which is the same as setting
/// it to zero).
fn elementary_skip(lambda: &[f64], skip: Option<usize>) -> Vec<f64> {
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    let mut used = 0;
    for (j, &x) in lambda.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        used += 1;
        for k in (1..=used).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// `σ_0..=σ_n` of the tuple.
pub fn elementary_all(lambda: &[f64]) -> Vec<f64> {
    elementary_skip(lambda, None)
}

/// Elementary symmetric function `σ_k(λ)`, with `σ_0 = 1` and `σ_k = 0` for `k > n`.
pub fn sigma(lambda: &[f64], k: usize) -> f64 {
    if k > lambda.len() {
        return 0.0;
    }
    if k == 0 {
        return 1.0;
    }
    elementary_all(lambda)[k]
}

/// Normalized `H_k = σ_k / C(n, k)`; zero for `k > n`.
pub fn h_normalized(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    if k > n {
        return 0.0;
    }
    sigma(lambda, k) / binomial(n, k)
}

/// `σ_k(λ|i)`: the symmetric function with entry `i` (0-based) set to zero.
pub fn sigma_deleted(lambda: &[f64], k: usize, i: usize) -> Result<f64> {
    if i >= lambda.len() {
        return Err(Error::contract(format!(
            "deleted index {i} out of range for tuple of length {}",
            lambda.len()
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k >= lambda.len() {
        return Ok(0.0);
    }
    Ok(elementary_skip(lambda, Some(i))[k])
}

/// Result of a Garding-cone membership query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeQuery {
    pub k: usize,
    /// `min_{1<=i<=k} σ_i(λ)`; raw, not normalized.
    pub margin: f64,
}

impl ConeQuery {
    pub fn is_member(&self) -> bool {
        self.margin > 0.0
    }
}

/// Membership of `λ` in `Γ_k = {σ_i(λ) > 0, 1 <= i <= k}`.
pub fn cone_test(lambda: &[f64], k: usize) -> Result<ConeQuery> {
    if k == 0 || k > lambda.len() {
        return Err(Error::contract(format!(
            "cone order k = {k} must satisfy 1 <= k <= n = {}",
            lambda.len()
        )));
    }
    Ok(cone_from_elementary(&elementary_all(lambda), k))
}

fn cone_from_elementary(e: &[f64], k: usize) -> ConeQuery {
    let margin = e[1..=k].iter().copied().fold(f64::INFINITY, f64::min);
    ConeQuery { k, margin }
}

/// Largest `m` with `λ ∈ Γ_m`, zero if `σ_1 <= 0`.
pub fn max_cone_order(lambda: &[f64]) -> usize {
    let e = elementary_all(lambda);
    e[1..].iter().take_while(|&&s| s > 0.0).count()
}

/// Raw quotient `H_a/H_b` together with its `(a-b)`-th root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientValue {
    pub raw: f64,
    pub root: f64,
}

/// The operator `λ ↦ (H_a(λ)/H_b(λ))^{1/(a-b)}` on n-tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuotientOperator {
    n: usize,
    a: usize,
    b: usize,
}

impl QuotientOperator {
    pub fn new(n: usize, a: usize, b: usize) -> Result<Self> {
        if !(b < a && a <= n) {
            return Err(Error::contract(format!(
                "quotient orders must satisfy 0 <= b < a <= n (got n={n}, a={a}, b={b})"
            )));
        }
        Ok(QuotientOperator { n, a, b })
    }

    /// The operator of the curvature equation, `H_{n-l}/H_{n-k}`.
    pub fn for_equation(n: usize, k: usize, l: usize) -> Result<Self> {
        if !(l < k && k <= n) {
            return Err(Error::contract(format!(
                "need 0 <= l < k <= n (got n={n}, k={k}, l={l})"
            )));
        }
        Self::new(n, n - l, n - k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn numerator_order(&self) -> usize {
        self.a
    }

    pub fn denominator_order(&self) -> usize {
        self.b
    }

    pub fn degree_root(&self) -> usize {
        self.a - self.b
    }

    fn check_len(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n {
            return Err(Error::contract(format!(
                "tuple length {} does not match operator dimension {}",
                lambda.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `(H_a/H_b, (H_a/H_b)^{1/(a-b)})`; requires `λ ∈ Γ_a`.
    pub fn value(&self, lambda: &[f64]) -> Result<QuotientValue> {
        self.check_len(lambda)?;
        let e = elementary_all(lambda);
        let cone = cone_from_elementary(&e, self.a);
        if !cone.is_member() {
            return Err(Error::Inadmissible {
                order: self.a,
                margin: cone.margin,
            });
        }
        let ha = e[self.a] / binomial(self.n, self.a);
        let hb = e[self.b] / binomial(self.n, self.b);
        let raw = ha / hb;
        Ok(QuotientValue {
            raw,
            root: raw.powf(1.0 / self.degree_root() as f64),
        })
    }

    /// Root value `F` and its gradient `∂F/∂λ_i`; requires `λ ∈ Γ_a`.
    pub fn value_and_gradient(&self, lambda: &[f64]) -> Result<(QuotientValue, Vec<f64>)> {
        let value = self.value(lambda)?;
        let n = self.n;
        let e = elementary_all(lambda);
        let ca = binomial(n, self.a);
        let cb = binomial(n, self.b);
        let ha = e[self.a] / ca;
        let hb = e[self.b] / cb;
        // dF/dλ_i = F / ((a-b) F̄) · dF̄/dλ_i, with dF̄ from the quotient rule.
        let chain = value.root / (self.degree_root() as f64 * value.raw);
        let grad = (0..n)
            .map(|i| {
                let del = elementary_skip(lambda, Some(i));
                let dha = del[self.a - 1] / ca;
                let dhb = if self.b == 0 { 0.0 } else { del[self.b - 1] / cb };
                chain * (dha * hb - ha * dhb) / (hb * hb)
            })
            .collect();
        Ok((value, grad))
    }

    pub fn gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(lambda)?.1)
    }
}

/// `(F̄, F)` of the quotient operator at `λ`.
pub fn quotient_value(q: &QuotientOperator, lambda: &[f64]) -> Result<QuotientValue> {
    q.value(lambda)
}

/// `∂F/∂λ_i` of the root-normalized quotient.
pub fn quotient_gradient(q: &QuotientOperator, lambda: &[f64]) -> Result<EigenTuple> {
    EigenTuple::new(q.gradient(lambda)?)
}

/// Replace gradient entries within a cluster of (numerically) coincident
/// eigenvalues by the cluster mean; the spectral derivative is then
/// independent of the arbitrary eigenbasis chosen inside the cluster.
fn average_coincident(lambda: &[f64], grad: &mut [f64]) {
    let n = lambda.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n {
            let (x, y) = (lambda[order[end - 1]], lambda[order[end]]);
            if (y - x).abs() < COINCIDENCE_TOL * (1.0 + x.abs() + y.abs()) {
                end += 1;
            } else {
                break;
            }
        }
        if end - start > 1 {
            let mean = order[start..end].iter().map(|&i| grad[i]).sum::<f64>() / (end - start) as f64;
            for &i in &order[start..end] {
                grad[i] = mean;
            }
        }
        start = end;
    }
}

/// Value `F(A)` and the derivative matrix `F^{ij} = ∂F/∂A_{ij}` of a
/// symmetric matrix argument.
///
/// `F^{ij}` is assembled in the eigenbasis as `Q diag(∂F/∂λ) Qᵀ`. For a
/// diagonal `A` this is diagonal with entries `∂F/∂λ_i`.
pub fn matrix_value_and_derivative(
    q: &QuotientOperator,
    a: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let n = q.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::contract(format!(
            "matrix is {}x{}, operator expects {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let asymmetry = (a - a.transpose()).amax();
    if asymmetry > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let eig = SymmetricEigen::new(a.clone());
    let lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let (value, mut grad) = q.value_and_gradient(&lambda)?;
    average_coincident(&lambda, &mut grad);
    let qm = &eig.eigenvectors;
    let mut fij = DMatrix::zeros(n, n);
    for (m, g) in grad.iter().enumerate() {
        let v = qm.column(m);
        fij += *g * &v * v.transpose();
    }
    Ok((value.root, fij))
}

/// Outcome of a Newton–MacLaurin comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `(H_k/H_l)^{1/(k-l)}` against `(H_r/H_s)^{1/(r-s)}` for `λ ∈ Γ_k`.
pub fn newton_maclaurin_check(
    lambda: &[f64],
    k: usize,
    l: usize,
    r: usize,
    s: usize,
) -> Result<InequalityCheck> {
    let n = lambda.len();
    if !(k > l && r > s && k >= r && l >= s && k <= n) {
        return Err(Error::contract(format!(
            "need k > l >= 0, r > s >= 0, k >= r, l >= s, k <= n (got k={k}, l={l}, r={r}, s={s}, n={n})"
        )));
    }
    let cone = cone_test(lambda, k)?;
    if !cone.is_member() {
        return Err(Error::Inadmissible {
            order: k,
            margin: cone.margin,
        });
    }
    let lhs = (h_normalized(lambda, k) / h_normalized(lambda, l)).powf(1.0 / (k - l) as f64);
    let rhs = (h_normalized(lambda, r) / h_normalized(lambda, s)).powf(1.0 / (r - s) as f64);
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_TOL * rhs.abs().max(1.0),
    })
}
