//! Dense symmetric matrices and the elementary transformations used by the
//! rest of the crate.
//!
//! A [`SymMatrix`] keeps one value per unordered index pair, so symmetry is
//! exact by construction. All transformations return fresh values.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Asymmetry tolerated by the text loader.
pub const LOAD_SYMMETRY_TOL: f64 = 1e-12;

/// Dense real symmetric `n x n` matrix, stored as a packed upper triangle.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "SymMatrix needs n >= 1");
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// The all-ones matrix `E = e e'`.
    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0)
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Builds a matrix from `f(i, j)` evaluated on `i <= j` only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                m.data[packed(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from full rows, rejecting asymmetry above `tol` and
    /// non-finite entries. The upper-triangle value is kept.
    pub fn from_rows_tol(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("matrix must have at least one row"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(invalid(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    r.len(),
                    n
                )));
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(invalid(format!("non-finite entry {v} in row {}", i + 1)));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (rows[i][j] - rows[j][i]).abs() > tol {
                    return Err(invalid(format!(
                        "matrix is not symmetric at ({}, {}): {} vs {}",
                        i + 1,
                        j + 1,
                        rows[i][j],
                        rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows_tol(rows, LOAD_SYMMETRY_TOL)
    }

    /// Symmetrizes `(A + A') / 2`.
    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] = v;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Frobenius inner product `<A, B>`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut s = 0.0;
        for j in 0..self.n {
            for i in 0..=j {
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    /// Sum of all entries, `<E, A>`.
    pub fn total(&self) -> f64 {
        self.dot(&Self::ones(self.n))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `x' A x` for an arbitrary vector.
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Eigenvalues in ascending order and the matching eigenvectors (columns).
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.to_dmatrix());
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = DMatrix::from_fn(self.n, self.n, |i, c| eig.eigenvectors[(i, order[c])]);
        (vals, vecs)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `Q + lambda E`.
    pub fn shift(&self, lambda: f64) -> Self {
        self.map(|v| v + lambda)
    }

    /// `D Q D` with `D = diag(d)`; every `d_j` must be positive.
    pub fn diag_scale(&self, d: &[f64]) -> Result<Self> {
        check_dim(self.n, d.len())?;
        if let Some((j, v)) = d.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(invalid(format!(
                "scaling entry {} must be positive, got {v}",
                j + 1
            )));
        }
        Ok(Self::from_fn(self.n, |i, j| d[i] * self.get(i, j) * d[j]))
    }

    /// `J' Q J` where `J e_i = e_{perm[i]}`; entry `(i, j)` of the result is
    /// `Q[perm[i]][perm[j]]`. Indices are 0-based.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        Ok(Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j])))
    }

    /// `Q_AA` for a nonempty index set (0-based, in the given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(invalid("index set must be nonempty"));
        }
        if let Some(&k) = idx.iter().find(|&&k| k >= self.n) {
            return Err(invalid(format!(
                "index {} out of range 1..={}",
                k + 1,
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &k in idx {
            if std::mem::replace(&mut seen[k], true) {
                return Err(invalid(format!("index {} repeated", k + 1)));
            }
        }
        Ok(Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b])))
    }

    /// Embeds `self` as the principal block on `idx` of an `n x n` zero matrix.
    pub fn embed(&self, n: usize, idx: &[usize]) -> Self {
        assert_eq!(idx.len(), self.n);
        let mut out = Self::zeros(n);
        for a in 0..self.n {
            for b in a..self.n {
                out.set(idx[a], idx[b], self.get(a, b));
            }
        }
        out
    }

    /// Parses the shared text format: a first line with `n`, then `n` rows of
    /// `n` whitespace-separated numbers. Blank lines and `#` comments are
    /// ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: first,
            msg: format!("expected the dimension, found {header:?}"),
        })?;
        if n == 0 {
            return Err(Error::Parse {
                line: first,
                msg: "dimension must be positive".into(),
            });
        }
        let mut rows = Vec::with_capacity(n);
        for (line, l) in lines {
            if rows.len() == n {
                return Err(Error::Parse {
                    line,
                    msg: "trailing data after the last row".into(),
                });
            }
            let row = l
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("not a number: {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != n {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {n} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        Self::from_rows(&rows).map_err(|e| Error::Parse {
            line: first,
            msg: e.to_string(),
        })
    }

    /// Writes the shared text format with 17 significant digits per entry.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format_f64(self.get(i, j)))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({})", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:9.4}", self.get(i, j))).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    check_dim(n, perm.len())?;
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(invalid(format!("not a permutation of 1..={n}: {perm:?}")));
        }
    }
    Ok(())
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Zero threshold used for supports unless a caller overrides it.
pub const DEFAULT_TOL_ZERO: f64 = 1e-8;

/// A point of the unit simplex together with the threshold that separates
/// its support from its zero set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    x: Vec<f64>,
    #[serde(default = "default_tol_zero")]
    tol_zero: f64,
}

fn default_tol_zero() -> f64 {
    DEFAULT_TOL_ZERO
}

impl SimplexPoint {
    /// Validates `x >= 0` and `e'x = 1` within `1e-12`.
    pub fn new(x: Vec<f64>, tol_zero: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(invalid("simplex point must have at least one coordinate"));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!("coordinate {v} is negative or not finite")));
        }
        let s: f64 = x.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("coordinates sum to {s}, not 1")));
        }
        Ok(Self { x, tol_zero })
    }

    /// Clamps negative coordinates to zero and rescales onto the simplex.
    pub fn normalized(mut x: Vec<f64>, tol_zero: f64) -> Result<Self> {
        for v in x.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let s: f64 = x.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(invalid("cannot normalize a vector with zero or non-finite mass"));
        }
        x.iter_mut().for_each(|v| *v /= s);
        Ok(Self { x, tol_zero })
    }

    pub fn vertex(n: usize, j: usize) -> Self {
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        Self {
            x,
            tol_zero: DEFAULT_TOL_ZERO,
        }
    }

    pub fn barycenter(n: usize) -> Self {
        Self::uniform_on(n, &(0..n).collect::<Vec<_>>())
    }

    /// Uniform weights on the given (nonempty) index set.
    pub fn uniform_on(n: usize, idx: &[usize]) -> Self {
        let mut x = vec![0.0; n];
        for &k in idx {
            x[k] = 1.0 / idx.len() as f64;
        }
        Self {
            x,
            tol_zero: DEFAULT_TOL_ZERO,
        }
    }

    pub fn with_tol_zero(mut self, tol_zero: f64) -> Self {
        self.tol_zero = tol_zero;
        self
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn tol_zero(&self) -> f64 {
        self.tol_zero
    }

    /// `A(x)`, 0-based.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&j| self.x[j] > self.tol_zero).collect()
    }

    /// `Z(x)`, 0-based.
    pub fn zero_set(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&j| self.x[j] <= self.tol_zero).collect()
    }

    pub fn support_mask(&self) -> u64 {
        self.support().iter().fold(0, |m, &j| m | (1u64 << j))
    }
}

/// `x' Q x`.
pub fn quadratic_form(q: &SymMatrix, x: &SimplexPoint) -> Result<f64> {
    check_dim(q.n(), x.n())?;
    Ok(q.quad(x.coords()))
}
