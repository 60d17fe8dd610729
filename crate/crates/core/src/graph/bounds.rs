//! Decomposition of the StQP over the maximal cliques of its convexity graph.

use serde::Serialize;

use super::{convexity_graph, is_spn_completable, maximal_cliques};
use crate::error::Result;
use crate::exact;
use crate::matrix::SymMatrix;
use crate::relax;

/// Values on one maximal clique `C`.
#[derive(Clone, Debug, Serialize)]
pub struct CliqueRow {
    pub clique: Vec<usize>,
    pub ell: f64,
    pub nu: f64,
}

/// `ell(Q) <= min_C ell(Q_CC) <= min_C nu(Q_CC) = nu(Q)` over maximal
/// cliques `C` of the convexity graph.
#[derive(Clone, Debug, Serialize)]
pub struct CliqueBounds {
    pub ell_full: f64,
    pub ell_min_clique: f64,
    pub nu_min_clique: f64,
    pub nu_full: f64,
    /// `ell(Q) = min_C ell(Q_CC)` within `1e-5`.
    pub first_tight: bool,
    /// `min_C ell(Q_CC) = nu(Q)` within `1e-5`.
    pub second_tight: bool,
    pub cliques: Vec<CliqueRow>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-5 * a.abs().max(b.abs()).max(1.0)
}

pub fn clique_bounds(q: &SymMatrix) -> Result<CliqueBounds> {
    let g = convexity_graph(q)?;
    let mut rows = Vec::new();
    for c in maximal_cliques(&g)? {
        let sub = q.principal_submatrix(&c)?;
        rows.push(CliqueRow {
            ell: relax::ell(&sub)?.ell,
            nu: exact::nu(&sub)?,
            clique: c,
        });
    }
    let ell_full = relax::ell(q)?.ell;
    let nu_full = exact::nu(q)?;
    let ell_min_clique = rows.iter().map(|r| r.ell).fold(f64::INFINITY, f64::min);
    let nu_min_clique = rows.iter().map(|r| r.nu).fold(f64::INFINITY, f64::min);
    Ok(CliqueBounds {
        ell_full,
        ell_min_clique,
        nu_min_clique,
        nu_full,
        first_tight: close(ell_full, ell_min_clique),
        second_tight: close(ell_min_clique, nu_full),
        cliques: rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CompletableVerdict {
    Exact,
    NotExact,
    /// The convexity graph has an odd cycle that is not a clique.
    Inapplicable { odd_cycle: Vec<usize> },
}

/// When the convexity graph is SPN completable, `Q` is exact iff
/// `min_C ell(Q_CC) = nu(Q)`.
pub fn spn_completable_exactness(q: &SymMatrix) -> Result<CompletableVerdict> {
    let g = convexity_graph(q)?;
    let (ok, witness) = is_spn_completable(&g)?;
    if !ok {
        return Ok(CompletableVerdict::Inapplicable {
            odd_cycle: witness.unwrap_or_default(),
        });
    }
    let b = clique_bounds(q)?;
    Ok(if b.second_tight {
        CompletableVerdict::Exact
    } else {
        CompletableVerdict::NotExact
    })
}
