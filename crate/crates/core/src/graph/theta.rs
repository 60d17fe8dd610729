//! Weighted Lovász theta and its Schrijver strengthening.

use serde::Serialize;

use super::Graph;
use crate::error::{invalid, Error, Result};
use crate::matrix::SymMatrix;
use crate::sdp::{solve_conic, ConicProgram, ConicSolution, Constraint, SolverOptions, SparseSym};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaKind {
    /// `max <W, X>  s.t.  tr X = 1,  X_ij = 0 on edges,  X psd`.
    Theta,
    /// The same with `X >= 0` entrywise.
    ThetaPrime,
}

fn build(gbar: &Graph, w: &[f64], kind: ThetaKind) -> Result<ConicProgram> {
    let n = gbar.n();
    crate::matrix::check_dim(n, w.len())?;
    if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("theta weights must be positive"));
    }
    let c = SymMatrix::from_fn(n, |i, j| -(w[i] * w[j]).sqrt());
    let free: Vec<(usize, usize)> = match kind {
        ThetaKind::Theta => Vec::new(),
        // diagonal entries are nonnegative already; only link free off-diagonals
        ThetaKind::ThetaPrime => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !gbar.has_edge(i, j))
            .collect(),
    };
    let mut prog = ConicProgram::new(c, vec![0.0; free.len()]);
    prog.push(Constraint::new(&SymMatrix::identity(n), &[], 1.0));
    for (i, j) in gbar.edges() {
        prog.push(Constraint::sparse(SparseSym::entry_selector(i, j), vec![], 0.0));
    }
    for (k, &(i, j)) in free.iter().enumerate() {
        prog.push(Constraint::sparse(
            SparseSym::entry_selector(i, j),
            vec![(k, -1.0)],
            0.0,
        ));
    }
    Ok(prog)
}

/// Raw conic solution of the theta program (objective negated).
pub fn theta_solution(
    gbar: &Graph,
    w: &[f64],
    kind: ThetaKind,
    opts: &SolverOptions,
) -> Result<ConicSolution> {
    solve_conic(&build(gbar, w, kind)?, opts)
}

fn value(gbar: &Graph, w: &[f64], kind: ThetaKind) -> Result<f64> {
    let sol = theta_solution(gbar, w, kind, &SolverOptions::default())?;
    if !sol.is_converged() {
        return Err(Error::NotConverged(format!(
            "{kind:?} solve ended with {:?} after {} iterations",
            sol.status, sol.iterations
        )));
    }
    Ok(-sol.primal_obj)
}

/// `theta(Gbar, w)` with `W_ij = sqrt(w_i w_j)`.
pub fn theta(gbar: &Graph, w: &[f64]) -> Result<f64> {
    value(gbar, w, ThetaKind::Theta)
}

/// `theta'(Gbar, w)`: the theta program restricted to nonnegative `X`.
pub fn theta_prime(gbar: &Graph, w: &[f64]) -> Result<f64> {
    value(gbar, w, ThetaKind::ThetaPrime)
}
