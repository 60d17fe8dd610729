use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::matrix::SymMatrix;

/// Symmetric matrix given by its upper-triangle nonzeros `(i, j, v)` with
/// `i <= j`; `(i, j)` and `(j, i)` both carry `v`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(mut entries: Vec<(usize, usize, f64)>) -> Self {
        for e in entries.iter_mut() {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        }
        entries.sort_by_key(|&(i, j, _)| (j, i));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Self { entries: merged }
    }

    pub fn from_sym(m: &SymMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.n() {
            for i in 0..=j {
                let v = m.get(i, j);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// Matrix with `1/2` at `(i, j)` and `(j, i)` (or `1` at `(i, i)`), so
    /// that `<A, X> = X_ij`.
    pub fn entry_selector(i: usize, j: usize) -> Self {
        let v = if i == j { 1.0 } else { 0.5 };
        Self::new(vec![(i, j, v)])
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }

    /// Number of nonzeros of the full (both triangles) matrix.
    pub fn full_nnz(&self) -> usize {
        self.entries
            .iter()
            .map(|e| if e.0 == e.1 { 1 } else { 2 })
            .sum()
    }

    pub(crate) fn full_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.full_nnz());
        for &(i, j, v) in &self.entries {
            out.push((i, j, v));
            if i != j {
                out.push((j, i, v));
            }
        }
        out
    }

    /// `<A, M>` for a dense symmetric `M`.
    pub(crate) fn dot_dense(&self, m: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v * m[(i, i)]
                } else {
                    v * (m[(i, j)] + m[(j, i)])
                }
            })
            .sum()
    }

    pub(crate) fn axpy_into(&self, alpha: f64, m: &mut DMatrix<f64>) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += alpha * v;
            if i != j {
                m[(j, i)] += alpha * v;
            }
        }
    }

    pub fn to_sym(&self, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for &(i, j, v) in &self.entries {
            m.set(i, j, v);
        }
        m
    }

    pub(crate) fn norm_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum()
    }
}

/// One equality row `<A, X> + a'z = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub mat: SparseSym,
    /// Sparse orthant coefficients `(k, a_k)`.
    pub vec: Vec<(usize, f64)>,
    pub b: f64,
}

impl Constraint {
    pub fn new(mat: &SymMatrix, vec: &[f64], b: f64) -> Self {
        Self {
            mat: SparseSym::from_sym(mat),
            vec: vec
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| (k, *v))
                .collect(),
            b,
        }
    }

    pub fn sparse(mat: SparseSym, vec: Vec<(usize, f64)>, b: f64) -> Self {
        Self { mat, vec, b }
    }

    /// Dense row-major constraint matrix; must be exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>], vec: &[f64], b: f64) -> Result<Self> {
        let m = SymMatrix::from_rows_tol(rows, 0.0)
            .map_err(|e| invalid(format!("constraint matrix: {e}")))?;
        Ok(Self::new(&m, vec, b))
    }

    pub(crate) fn vec_dot(&self, z: &DVector<f64>) -> f64 {
        self.vec.iter().map(|&(k, v)| v * z[k]).sum()
    }

    pub(crate) fn norm_sq(&self) -> f64 {
        self.mat.norm_sq() + self.vec.iter().map(|v| v.1 * v.1).sum::<f64>()
    }
}

/// `min <C, X> + c'z  s.t.  <A_i, X> + a_i'z = b_i,  X psd,  z >= 0`.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub psd_dim: usize,
    pub nonneg_dim: usize,
    pub c_mat: SymMatrix,
    pub c_vec: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

/// Largest PSD block accepted by the engine.
pub const MAX_PSD_DIM: usize = 50;

impl ConicProgram {
    pub fn new(c_mat: SymMatrix, c_vec: Vec<f64>) -> Self {
        Self {
            psd_dim: c_mat.n(),
            nonneg_dim: c_vec.len(),
            c_mat,
            c_vec,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn with_objective_scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        p.c_mat = p.c_mat.scale(s);
        p.c_vec.iter_mut().for_each(|v| *v *= s);
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(invalid("conic program needs at least one constraint"));
        }
        if self.psd_dim > MAX_PSD_DIM {
            return Err(crate::Error::CapExceeded {
                what: "PSD block",
                size: self.psd_dim,
                cap: MAX_PSD_DIM,
            });
        }
        if self.c_mat.n() != self.psd_dim || self.c_vec.len() != self.nonneg_dim {
            return Err(invalid("objective dimensions do not match the cone"));
        }
        if !self.c_mat.is_finite() || self.c_vec.iter().any(|v| !v.is_finite()) {
            return Err(invalid("objective has non-finite entries"));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.mat.max_index().is_some_and(|k| k >= self.psd_dim) {
                return Err(invalid(format!("constraint {r} indexes outside the PSD block")));
            }
            if c.vec.iter().any(|&(k, _)| k >= self.nonneg_dim) {
                return Err(invalid(format!("constraint {r} indexes outside the orthant")));
            }
            let finite = c.b.is_finite()
                && c.vec.iter().all(|v| v.1.is_finite())
                && c.mat.entries().iter().all(|e| e.2.is_finite());
            if !finite {
                return Err(invalid(format!("constraint {r} has non-finite data")));
            }
        }
        Ok(())
    }
}
