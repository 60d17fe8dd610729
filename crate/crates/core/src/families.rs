//! Membership tests for the three families of instances with an exact
//! relaxation, and for the concave class.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{convexity_graph, is_perfect, Graph, OddHole};
use crate::matrix::SymMatrix;

/// Smallest eigenvalue on `e-perp` still counted as nonnegative.
pub const CENTERED_EIG_TOL: f64 = 1e-8;

/// Tolerance for the common off-diagonal value on convexity edges.
pub const KAPPA_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Q1Evidence {
    /// First diagonal index attaining the smallest diagonal entry.
    pub index: usize,
    pub min_diagonal: f64,
    pub min_entry: f64,
}

/// Minimum entry lies on the diagonal; then `e_index` is optimal.
pub fn in_q1(q: &SymMatrix) -> (bool, Q1Evidence) {
    let diag = q.diag();
    let (index, &min_diagonal) = diag
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("n >= 1");
    let min_entry = q.min_entry();
    (
        min_diagonal <= min_entry,
        Q1Evidence {
            index,
            min_diagonal,
            min_entry,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Q2Evidence {
    /// Smallest eigenvalue of `(I - E/n) Q (I - E/n)`.
    pub min_eigenvalue: f64,
    /// Direction `d` with `e'd = 0` and `d'Qd < 0` when the test fails.
    pub direction: Option<Vec<f64>>,
}

/// `Q` is positive semidefinite on `e-perp`, i.e. `x'Qx` is convex on the
/// simplex.
pub fn in_q2(q: &SymMatrix) -> (bool, Q2Evidence) {
    let n = q.n();
    let c = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64);
    let centered = SymMatrix::from_dmatrix(&(&c * q.to_dmatrix() * &c));
    let (vals, vecs) = centered.eigh();
    let min_eigenvalue = vals[0];
    if min_eigenvalue >= -CENTERED_EIG_TOL {
        return (
            true,
            Q2Evidence {
                min_eigenvalue,
                direction: None,
            },
        );
    }
    let v = vecs.column(0);
    let mean = v.sum() / n as f64;
    let d: Vec<f64> = v.iter().map(|x| x - mean).collect();
    (
        false,
        Q2Evidence {
            min_eigenvalue,
            direction: Some(d),
        },
    )
}

/// `Q` is negative semidefinite on `e-perp`.
pub fn in_concave(q: &SymMatrix) -> (bool, Q2Evidence) {
    in_q2(&q.scale(-1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum Q3Evidence {
    /// Empty convexity graph: `Q - gamma E` is positive with
    /// `gamma = min_ij Q_ij - 1`, and lies in `M(G, w)`.
    NoEdges { gamma: f64, w: Vec<f64> },
    /// Entries on convexity edges are not all equal.
    EdgeValuesDiffer { kappa1: f64, kappa2: f64 },
    /// `Q - kappa E` has a nonpositive diagonal entry.
    NonPositiveDiagonal { kappa: f64, index: usize },
    NotPerfect { kappa: f64, hole: OddHole },
    Member { kappa: f64, graph: Graph, w: Vec<f64> },
}

/// Decides `Q in M(G, w) + span{E}` for a perfect `G`, where `G` must be
/// the convexity graph of `Q`.
pub fn in_q3(q: &SymMatrix) -> Result<(bool, Q3Evidence)> {
    let g = convexity_graph(q)?;
    let edges = g.edges();
    if edges.is_empty() {
        let gamma = q.min_entry() - 1.0;
        let w = q.shift(-gamma).diag().iter().map(|v| 1.0 / v).collect();
        return Ok((true, Q3Evidence::NoEdges { gamma, w }));
    }
    let vals: Vec<f64> = edges.iter().map(|&(i, j)| q.get(i, j)).collect();
    let kappa1 = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa2 = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if kappa2 - kappa1 > KAPPA_TOL {
        return Ok((false, Q3Evidence::EdgeValuesDiffer { kappa1, kappa2 }));
    }
    let kappa = kappa1;
    let hat = q.shift(-kappa);
    if let Some(index) = (0..q.n()).find(|&k| hat.get(k, k) <= 0.0) {
        return Ok((false, Q3Evidence::NonPositiveDiagonal { kappa, index }));
    }
    let (perfect, hole) = is_perfect(&g)?;
    if !perfect {
        let hole = hole.expect("imperfect graphs come with a hole");
        return Ok((false, Q3Evidence::NotPerfect { kappa, hole }));
    }
    let w = hat.diag().iter().map(|v| 1.0 / v).collect();
    Ok((true, Q3Evidence::Member { kappa, graph: g, w }))
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyVerdict {
    pub in_q1: bool,
    pub in_q2: bool,
    pub in_q3: bool,
    pub in_concave: bool,
    pub q1: Q1Evidence,
    pub q2: Q2Evidence,
    pub concave: Q2Evidence,
    pub q3: Q3Evidence,
}

pub fn family_verdict(q: &SymMatrix) -> Result<FamilyVerdict> {
    let (in_q1, q1) = in_q1(q);
    let (in_q2, q2) = in_q2(q);
    let (in_concave, concave) = in_concave(q);
    let (in_q3, q3) = in_q3(q)?;
    Ok(FamilyVerdict {
        in_q1,
        in_q2,
        in_q3,
        in_concave,
        q1,
        q2,
        concave,
        q3,
    })
}
