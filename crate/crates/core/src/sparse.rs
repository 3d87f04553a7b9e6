//! Compressed-row sparse operators and their direct LU solve.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row builder; duplicate columns within a row are summed.
#[derive(Debug)]
pub struct RowBuilder {
    dim: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    start: usize,
}

impl RowBuilder {
    pub fn new(dim: usize) -> Self {
        RowBuilder {
            dim,
            offsets: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            start: 0,
        }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.dim);
        if let Some(pos) = self.cols[self.start..].iter().position(|&c| c == col) {
            self.vals[self.start + pos] += val;
        } else {
            self.cols.push(col);
            self.vals.push(val);
        }
    }

    pub fn finish_row(&mut self) {
        self.offsets.push(self.cols.len());
        self.start = self.cols.len();
    }

    pub fn build(self) -> SparseOperator {
        assert_eq!(self.offsets.len(), self.dim + 1, "row count mismatch");
        SparseOperator {
            dim: self.dim,
            offsets: self.offsets,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[r]..self.offsets[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> SparseOperator {
        let mut b = RowBuilder::new(self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                b.push(c, v);
            }
            b.push(r, shift);
            b.finish_row();
        }
        b.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    fn triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect()
    }

    /// Solves `self · x = rhs` by sparse LU.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::contract("right-hand side length mismatch"));
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.dim, self.dim, &self.triplets())
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let b = Col::<f64>::from_fn(self.dim, |i| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.dim).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular or ill-conditioned system".into()));
        }
        Ok(out)
    }
}
