//! The doubly nonnegative relaxation `ell(Q)`, SPN membership, and
//! exactness verdicts that combine it with the exact solver.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, max_min_coordinate};
use crate::graph::{maximal_cliques, Graph};
use crate::matrix::{check_dim, SimplexPoint, SymMatrix, DEFAULT_TOL_ZERO};
use crate::sdp::{solve_conic, ConicProgram, ConicSolution, Constraint, SolveStatus, SolverOptions, SparseSym};

/// Margin below which an SPN verdict is borderline.
pub const SPN_MARGIN_TOL: f64 = 1e-7;

/// `|nu - ell| <= EXACT_REL_TOL * max(1, |nu|)` counts as exact.
pub const EXACT_REL_TOL: f64 = 1e-5;

/// A positive-gap verdict needs `nu - ell >= GAP_REL_TOL * max(1, |nu|)`.
pub const GAP_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct SolverStats {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
}

impl SolverStats {
    fn of(sol: &ConicSolution) -> Self {
        Self {
            status: sol.status,
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            rel_gap: sol.rel_gap,
        }
    }
}

/// Primal and dual solutions of the DNN relaxation. The dual slack
/// `Q - sigma E` is split as `P + N` with `P` psd and `N` nonnegative.
#[derive(Clone, Debug, Serialize)]
pub struct RelaxResult {
    pub ell: f64,
    pub primal_x: SymMatrix,
    pub primal_obj: f64,
    pub dual_sigma: f64,
    pub dual_s: SymMatrix,
    pub spn_split: (SymMatrix, SymMatrix),
    pub stats: SolverStats,
}

impl RelaxResult {
    pub fn is_converged(&self) -> bool {
        self.stats.status == SolveStatus::Converged
    }
}

fn dnn_program(q: &SymMatrix) -> ConicProgram {
    let n = q.n();
    let mut prog = ConicProgram::new(q.clone(), vec![0.0; n * (n + 1) / 2]);
    prog.push(Constraint::new(&SymMatrix::ones(n), &[], 1.0));
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            prog.push(Constraint::sparse(
                SparseSym::entry_selector(i, j),
                vec![(k, -1.0)],
                0.0,
            ));
            k += 1;
        }
    }
    prog
}

pub fn ell_with(q: &SymMatrix, opts: &SolverOptions) -> Result<RelaxResult> {
    let n = q.n();
    let sol = solve_relaxation(&dnn_program(q), opts)?;
    let sigma = sol.y[0];
    // multipliers of the linking rows give N: N_ij = y/2 off the diagonal
    let mut nmat = SymMatrix::zeros(n);
    let mut k = 1;
    for j in 0..n {
        for i in 0..=j {
            let v = sol.y[k];
            nmat.set(i, j, if i == j { v } else { v / 2.0 });
            k += 1;
        }
    }
    let dual_s = q.shift(-sigma);
    let p = dual_s.sub(&nmat);
    Ok(RelaxResult {
        ell: sigma,
        primal_x: sol.x.clone(),
        primal_obj: sol.primal_obj,
        dual_sigma: sigma,
        dual_s,
        spn_split: (p, nmat),
        stats: SolverStats::of(&sol),
    })
}

/// Options used by the relaxation pipeline: the engine defaults with
/// tolerances tightened to `1e-10`, so that zero patterns of the dual split
/// are resolved well below `1e-8`.
pub fn relax_options() -> SolverOptions {
    SolverOptions {
        gap_tol: 1e-10,
        feas_tol: 1e-10,
        ..SolverOptions::default()
    }
}

/// Solves at [`relax_options`]; a run that stops early but already meets
/// the engine's default `1e-8` tolerances is accepted as converged.
fn solve_relaxation(prog: &ConicProgram, opts: &SolverOptions) -> Result<ConicSolution> {
    let mut sol = solve_conic(prog, opts)?;
    let base = SolverOptions::default();
    if sol.status != SolveStatus::Converged
        && sol.primal_residual <= base.feas_tol
        && sol.dual_residual <= base.feas_tol
        && sol.rel_gap <= base.gap_tol
    {
        log::debug!("accepting {:?} run at default tolerances", sol.status);
        sol.status = SolveStatus::Converged;
    }
    Ok(sol)
}

/// `ell(Q)` with [`relax_options`].
pub fn ell(q: &SymMatrix) -> Result<RelaxResult> {
    ell_with(q, &relax_options())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpnVerdict {
    Member,
    NonMember,
    /// `|margin| < 1e-7`, or the solver did not converge.
    Borderline,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpnCertificate {
    pub m: SymMatrix,
    /// Largest `delta` with `M - P >= delta` entrywise for some psd `P`.
    pub margin: f64,
    pub p: SymMatrix,
    /// `M - P`.
    pub n: SymMatrix,
    pub verdict: SpnVerdict,
    pub stats: SolverStats,
}

impl SpnCertificate {
    /// Members and borderline cases both satisfy `margin >= -1e-7`.
    pub fn is_member(&self) -> bool {
        self.verdict != SpnVerdict::NonMember
    }
}

/// Solves `max delta  s.t.  P psd,  M_ij - P_ij >= delta  (i <= j)`.
///
/// `delta` is written as `delta_max - u` with `u >= 0`, where
/// `delta_max = min_i M_ii` is an upper bound since `P_ii >= 0`.
pub fn is_spn_with(m: &SymMatrix, opts: &SolverOptions) -> Result<SpnCertificate> {
    let n = m.n();
    let pairs = n * (n + 1) / 2;
    let delta_max = m.diag().into_iter().fold(f64::INFINITY, f64::min);
    let mut c_vec = vec![0.0; pairs + 1];
    c_vec[pairs] = 1.0;
    let mut prog = ConicProgram::new(SymMatrix::zeros(n), c_vec);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            prog.push(Constraint::sparse(
                SparseSym::entry_selector(i, j),
                vec![(k, 1.0), (pairs, -1.0)],
                m.get(i, j) - delta_max,
            ));
            k += 1;
        }
    }
    let sol = solve_relaxation(&prog, opts)?;
    let margin = delta_max - sol.z[pairs];
    let p = sol.x.clone();
    let verdict = if sol.status != SolveStatus::Converged {
        log::warn!("SPN margin solve ended with {:?}", sol.status);
        SpnVerdict::Borderline
    } else if margin >= SPN_MARGIN_TOL {
        SpnVerdict::Member
    } else if margin <= -SPN_MARGIN_TOL {
        SpnVerdict::NonMember
    } else {
        SpnVerdict::Borderline
    };
    Ok(SpnCertificate {
        m: m.clone(),
        margin,
        n: m.sub(&p),
        p,
        verdict,
        stats: SolverStats::of(&sol),
    })
}

pub fn is_spn(m: &SymMatrix) -> Result<SpnCertificate> {
    is_spn_with(m, &relax_options())
}

/// Membership of `Q` in `Q_x`, together with the split
/// `Q = P + N + lambda E` (`lambda = x'Qx`) when it holds.
#[derive(Clone, Debug, Serialize)]
pub struct QxMembership {
    pub member: bool,
    pub lambda: f64,
    pub certificate: SpnCertificate,
}

pub fn in_qx(q: &SymMatrix, x: &SimplexPoint) -> Result<QxMembership> {
    check_dim(q.n(), x.n())?;
    let lambda = q.quad(x.coords());
    let certificate = is_spn(&q.shift(-lambda))?;
    Ok(QxMembership {
        member: certificate.is_member(),
        lambda,
        certificate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    PositiveGap,
    Borderline,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactnessReport {
    pub n: usize,
    pub nu: f64,
    pub ell: f64,
    pub gap: f64,
    pub verdict: Exactness,
    /// Minimizer `x` with `Q` in `Q_x` (exact verdict only).
    pub witness_x: Option<SimplexPoint>,
    pub lambda: Option<f64>,
    #[serde(rename = "P")]
    pub p: Option<SymMatrix>,
    #[serde(rename = "N")]
    pub n_mat: Option<SymMatrix>,
    /// SPN margin of `Q - nu E`; it equals `ell - nu` at optimality.
    pub margin: f64,
    pub spn_verdict: SpnVerdict,
    pub solver_stats: SolverStats,
}

/// Exact / positive-gap / borderline verdict from `nu`, `ell`, and the SPN
/// certificate of `Q - nu E`.
pub fn classify_exactness(q: &SymMatrix) -> Result<ExactnessReport> {
    let solved = exact::solve_stqp(q)?;
    let relax = ell(q)?;
    let nu = solved.nu;
    let scale = nu.abs().max(1.0);
    let gap = nu - relax.ell;

    let x = solved
        .minimizers
        .first()
        .ok_or_else(|| Error::Internal("exact solver returned no minimizer".into()))?;
    let qx = in_qx(q, x)?;
    let cert = &qx.certificate;

    let verdict = if !relax.is_converged() {
        Exactness::Borderline
    } else if gap.abs() <= EXACT_REL_TOL * scale {
        if qx.member {
            Exactness::Exact
        } else {
            Exactness::Borderline
        }
    } else if gap >= GAP_REL_TOL * scale && cert.verdict == SpnVerdict::NonMember {
        Exactness::PositiveGap
    } else {
        Exactness::Borderline
    };
    let exact = verdict == Exactness::Exact;
    Ok(ExactnessReport {
        n: q.n(),
        nu,
        ell: relax.ell,
        gap,
        verdict,
        witness_x: exact.then(|| x.clone()),
        lambda: exact.then_some(qx.lambda),
        p: exact.then(|| cert.p.clone()),
        n_mat: exact.then(|| cert.n.clone()),
        margin: cert.margin,
        spn_verdict: cert.verdict,
        solver_stats: relax.stats.clone(),
    })
}

/// Looks for `x` in the simplex with `P x = 0` and `x'Nx = 0` for the dual
/// split of `relax`; such an `x` attains `ell(Q)` and so proves exactness.
///
/// The diagonal of `N` is moved into `P` first. Coordinates where it was
/// positive must vanish, and the support of `x` must be a clique of the
/// graph of zero off-diagonal entries of `N`; each maximal clique is tried
/// in turn.
pub fn search_exact_witness(q: &SymMatrix, relax: &RelaxResult) -> Result<Option<SimplexPoint>> {
    let n = q.n();
    check_dim(n, relax.primal_x.n())?;
    if !relax.is_converged() {
        return Ok(None);
    }
    let (p0, nmat) = &relax.spn_split;
    let zero = 1e-8;
    let mut p = p0.clone();
    for j in 0..n {
        p.set(j, j, p0.get(j, j) + nmat.get(j, j));
    }
    let allowed: Vec<usize> = (0..n).filter(|&j| nmat.get(j, j) <= zero).collect();
    let edges: Vec<(usize, usize)> = allowed
        .iter()
        .flat_map(|&i| allowed.iter().map(move |&j| (i, j)))
        .filter(|&(i, j)| i < j && nmat.get(i, j) <= zero)
        .collect();
    let sub = Graph::from_edges(n, &edges)?;
    let scale = 1.0 + p.max_abs();
    for clique in maximal_cliques(&sub)? {
        if clique.iter().any(|j| !allowed.contains(j)) {
            continue;
        }
        let Some(x) = nonneg_kernel_point(&p, &clique, 1e-6 * scale) else {
            continue;
        };
        let value = q.quad(&x);
        if (value - relax.ell).abs() <= 1e-5 * relax.ell.abs().max(1.0) {
            return Ok(Some(SimplexPoint::normalized(x, DEFAULT_TOL_ZERO)?));
        }
    }
    Ok(None)
}

/// A point of `{x : x_A in ker P_AA, e'x = 1, x >= 0}` supported on `A`.
fn nonneg_kernel_point(p: &SymMatrix, a: &[usize], tol: f64) -> Option<Vec<f64>> {
    let k = a.len();
    let paa = p.principal_submatrix(a).ok()?;
    let (vals, vecs) = paa.eigh();
    let cols: Vec<usize> = (0..k).filter(|&c| vals[c].abs() <= tol).collect();
    if cols.is_empty() {
        return None;
    }
    let basis = vecs.select_columns(&cols);
    // parametrize e'Vc = 1 as c = c0 + Z t
    let sums: Vec<f64> = (0..cols.len()).map(|c| basis.column(c).sum()).collect();
    let (piv, &big) = sums
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    if big.abs() < 1e-9 {
        return None;
    }
    let r = cols.len();
    let mut c0 = nalgebra::DVector::zeros(r);
    c0[piv] = 1.0 / big;
    let mut z = nalgebra::DMatrix::zeros(r, r - 1);
    let mut col = 0;
    for c in 0..r {
        if c == piv {
            continue;
        }
        z[(c, col)] = 1.0;
        z[(piv, col)] = -sums[c] / big;
        col += 1;
    }
    let xp: Vec<f64> = (&basis * c0).iter().copied().collect();
    let (x_a, s) = if r == 1 {
        let s = xp.iter().copied().fold(f64::INFINITY, f64::min);
        (xp, s)
    } else {
        max_min_coordinate(&xp, &(&basis * z))?
    };
    if s < -1e-7 {
        return None;
    }
    let mut x = vec![0.0; p.n()];
    for (i, &j) in a.iter().enumerate() {
        x[j] = x_a[i].max(0.0);
    }
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= total);
    Some(x)
}

/// Exactness implied by the support of an optimal `x` alone: when
/// `|A(x)| >= n - 1`, or when `n = 5` and `x` is a vertex.
pub fn special_support_exactness(q: &SymMatrix, x: &SimplexPoint) -> Result<Option<Exactness>> {
    let n = q.n();
    check_dim(n, x.n())?;
    let value = q.quad(x.coords());
    if !exact::is_global_minimizer(q, x, 1e-9 * (1.0 + q.max_abs()))? {
        return Err(Error::NotOptimal {
            value,
            nu: exact::nu(q)?,
        });
    }
    let k = x.support().len();
    Ok((k + 1 >= n || (n == 5 && k == 1)).then_some(Exactness::Exact))
}
