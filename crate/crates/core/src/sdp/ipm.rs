//! Infeasible primal-dual path following with Nesterov-Todd scaling on the
//! PSD block and a Mehrotra predictor-corrector step.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::presolve::remove_dependent_rows;
use super::program::{ConicProgram, Constraint};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    pub presolve_tol: f64,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
            presolve_tol: 1e-10,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `||b - A(X, z)|| / (1 + ||b||)`
    pub primal_residual: f64,
    /// `||(C, c) - A*(y) - (S, s)|| / (1 + ||(C, c)||)`
    pub dual_residual: f64,
    pub rel_gap: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

/// Primal-dual pair returned by [`solve_conic`]. Dual multipliers of rows
/// removed in presolve are zero.
#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub x: SymMatrix,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    /// Dual slack on the PSD block.
    pub s_mat: SymMatrix,
    /// Dual slack on the orthant block.
    pub s_vec: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
    pub dropped_rows: Vec<usize>,
    pub trace: Vec<IterationRecord>,
}

impl ConicSolution {
    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

struct Iterate {
    x: DMatrix<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
    s_mat: DMatrix<f64>,
    s_vec: DVector<f64>,
}

struct Residuals {
    rp: DVector<f64>,
    rd_mat: DMatrix<f64>,
    rd_vec: DVector<f64>,
    pobj: f64,
    dobj: f64,
    rel_p: f64,
    rel_d: f64,
    rel_gap: f64,
    mu: f64,
}

struct Direction {
    dx: DMatrix<f64>,
    dz: DVector<f64>,
    dy: DVector<f64>,
    ds_mat: DMatrix<f64>,
    ds_vec: DVector<f64>,
}

/// NT scaling point: `X = G D G'`, `S = G^{-T} D G^{-1}`, `W = G G'`.
struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    d: DVector<f64>,
    w: DMatrix<f64>,
}

struct Problem<'a> {
    n: usize,
    m: usize,
    rows: Vec<&'a Constraint>,
    c_mat: DMatrix<f64>,
    c_vec: DVector<f64>,
    b: DVector<f64>,
    /// For each orthant coordinate, the rows touching it.
    orth_cols: Vec<Vec<(usize, f64)>>,
    dense_rows: Vec<bool>,
    full_entries: Vec<Vec<(usize, usize, f64)>>,
    norm_b: f64,
    norm_c: f64,
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

impl<'a> Problem<'a> {
    fn new(prog: &'a ConicProgram, kept: &[usize]) -> Self {
        let n = prog.psd_dim;
        let m = prog.nonneg_dim;
        let rows: Vec<&Constraint> = kept.iter().map(|&k| &prog.constraints[k]).collect();
        let mut orth_cols = vec![Vec::new(); m];
        for (i, r) in rows.iter().enumerate() {
            for &(k, v) in &r.vec {
                orth_cols[k].push((i, v));
            }
        }
        let dense_rows = rows.iter().map(|r| r.mat.full_nnz() > 2 * n).collect();
        let full_entries = rows.iter().map(|r| r.mat.full_entries()).collect();
        let c_mat = prog.c_mat.to_dmatrix();
        let c_vec = DVector::from_column_slice(&prog.c_vec);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.b));
        let norm_b = b.norm();
        let norm_c = (c_mat.norm_squared() + c_vec.norm_squared()).sqrt();
        Self {
            n,
            m,
            rows,
            c_mat,
            c_vec,
            b,
            orth_cols,
            dense_rows,
            full_entries,
            norm_b,
            norm_c,
        }
    }

    fn p(&self) -> usize {
        self.rows.len()
    }

    /// `(<A_i, X> + a_i'z)_i`
    fn apply(&self, x: &DMatrix<f64>, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.p(),
            self.rows.iter().map(|r| r.mat.dot_dense(x) + r.vec_dot(z)),
        )
    }

    /// `(sum y_i A_i, sum y_i a_i)`
    fn adjoint(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let mut mat = DMatrix::zeros(self.n, self.n);
        let mut vec = DVector::zeros(self.m);
        for (i, r) in self.rows.iter().enumerate() {
            if y[i] != 0.0 {
                r.mat.axpy_into(y[i], &mut mat);
                for &(k, v) in &r.vec {
                    vec[k] += y[i] * v;
                }
            }
        }
        (mat, vec)
    }

    fn residuals(&self, it: &Iterate) -> Residuals {
        let rp = &self.b - self.apply(&it.x, &it.z);
        let (aty_mat, aty_vec) = self.adjoint(&it.y);
        let rd_mat = &self.c_mat - aty_mat - &it.s_mat;
        let rd_vec = &self.c_vec - aty_vec - &it.s_vec;
        let pobj = self.c_mat.dot(&it.x) + self.c_vec.dot(&it.z);
        let dobj = self.b.dot(&it.y);
        let rel_p = rp.norm() / (1.0 + self.norm_b);
        let rel_d = (rd_mat.norm_squared() + rd_vec.norm_squared()).sqrt() / (1.0 + self.norm_c);
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let mu = (it.x.dot(&it.s_mat) + it.z.dot(&it.s_vec)) / (self.n + self.m) as f64;
        Residuals {
            rp,
            rd_mat,
            rd_vec,
            pobj,
            dobj,
            rel_p,
            rel_d,
            rel_gap,
            mu,
        }
    }

    /// Schur complement `M_ij = <A_i, W A_j W> + sum_k a_ik a_jk z_k / s_k`.
    fn schur(&self, w: &DMatrix<f64>, w2: &DVector<f64>) -> DMatrix<f64> {
        let p = self.p();
        let mut mm = DMatrix::zeros(p, p);
        let mut done = vec![false; p];
        for j in 0..p {
            if !self.dense_rows[j] {
                continue;
            }
            let mut a = DMatrix::zeros(self.n, self.n);
            self.rows[j].mat.axpy_into(1.0, &mut a);
            let t = w * a * w;
            for i in 0..p {
                let v = self.rows[i].mat.dot_dense(&t);
                mm[(i, j)] = v;
                mm[(j, i)] = v;
            }
            done[j] = true;
        }
        for j in 0..p {
            if done[j] {
                continue;
            }
            let fj = &self.full_entries[j];
            for i in 0..=j {
                if done[i] {
                    continue;
                }
                let fi = &self.full_entries[i];
                let mut v = 0.0;
                for &(k, l, aik) in fi {
                    for &(pp, q, ajk) in fj {
                        v += aik * ajk * w[(k, pp)] * w[(q, l)];
                    }
                }
                mm[(i, j)] = v;
                mm[(j, i)] = v;
            }
        }
        for (k, col) in self.orth_cols.iter().enumerate() {
            for &(i, u) in col {
                for &(j, v) in col {
                    mm[(i, j)] += u * v * w2[k];
                }
            }
        }
        mm
    }
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let n = x.nrows();
    let l = Cholesky::new(x.clone())?.l();
    let r = sym(l.transpose() * s * &l);
    let eig = SymmetricEigen::new(r);
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let u = eig.eigenvectors;
    let lam = eig.eigenvalues;
    let quarter = DVector::from_iterator(n, lam.iter().map(|v| v.powf(-0.25)));
    let g = &l * &u * DMatrix::from_diagonal(&quarter);
    let l_inv = l.clone().try_inverse()?;
    let inv_quarter = DVector::from_iterator(n, lam.iter().map(|v| v.powf(0.25)));
    let g_inv = DMatrix::from_diagonal(&inv_quarter) * u.transpose() * l_inv;
    let d = DVector::from_iterator(n, lam.iter().map(|v| v.sqrt()));
    let w = sym(&g * g.transpose());
    Some(Scaling { g, g_inv, d, w })
}

/// Largest step `alpha` keeping `D + alpha * dm` positive semidefinite.
fn max_step_psd(d: &DVector<f64>, dm: &DMatrix<f64>) -> f64 {
    let n = d.len();
    let h = DMatrix::from_fn(n, n, |i, j| dm[(i, j)] / (d[i] * d[j]).sqrt());
    let lmin = SymmetricEigen::new(sym(h))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn max_step_orthant(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

enum SchurFactor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(mut m: DMatrix<f64>) -> Option<Self> {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(Self::Chol(c));
        }
        let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        for k in 0..m.nrows() {
            m[(k, k)] += 1e-13 * scale;
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(Self::Chol(c));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(Self::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::Chol(c) => Some(c.solve(rhs)),
            Self::Lu(lu) => lu.solve(rhs),
        }
    }
}

struct Corrector<'a> {
    sigma_mu: f64,
    dx_t: Option<&'a DMatrix<f64>>,
    ds_t: Option<&'a DMatrix<f64>>,
    dzds: Option<&'a DVector<f64>>,
}

fn direction(
    pb: &Problem,
    it: &Iterate,
    res: &Residuals,
    sc: &Scaling,
    w2: &DVector<f64>,
    factor: &SchurFactor,
    corr: &Corrector,
) -> Option<Direction> {
    let n = pb.n;
    // scaled complementarity target
    let mut target = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        target[(i, i)] = corr.sigma_mu - sc.d[i] * sc.d[i];
    }
    if let (Some(a), Some(b)) = (corr.dx_t, corr.ds_t) {
        let prod = a * b;
        let sym_prod = (&prod + prod.transpose()) * 0.5;
        target -= sym_prod;
    }
    let rt = DMatrix::from_fn(n, n, |i, j| 2.0 * target[(i, j)] / (sc.d[i] + sc.d[j]));
    let rx_mat = sym(&sc.g * rt * sc.g.transpose());
    let mut rx_vec = DVector::zeros(pb.m);
    for k in 0..pb.m {
        let c = corr.dzds.map_or(0.0, |v| v[k]);
        rx_vec[k] = (corr.sigma_mu - it.z[k] * it.s_vec[k] - c) / it.s_vec[k];
    }
    let wrdw = sym(&sc.w * &res.rd_mat * &sc.w);
    let t_mat = &rx_mat - wrdw;
    let t_vec = &rx_vec - w2.component_mul(&res.rd_vec);
    let rhs = &res.rp - pb.apply(&t_mat, &t_vec);
    let dy = factor.solve(&rhs)?;
    let (aty_mat, aty_vec) = pb.adjoint(&dy);
    let ds_mat = sym(&res.rd_mat - aty_mat);
    let ds_vec = &res.rd_vec - aty_vec;
    let dx = sym(&rx_mat - &sc.w * &ds_mat * &sc.w);
    let dz = &rx_vec - w2.component_mul(&ds_vec);
    let finite = dx.iter().chain(dy.iter()).chain(ds_mat.iter()).all(|v| v.is_finite());
    finite.then_some(Direction {
        dx,
        dz,
        dy,
        ds_mat,
        ds_vec,
    })
}

fn step_lengths(it: &Iterate, sc: &Scaling, dir: &Direction) -> (f64, f64, DMatrix<f64>, DMatrix<f64>) {
    let dx_t = sym(&sc.g_inv * &dir.dx * sc.g_inv.transpose());
    let ds_t = sym(sc.g.transpose() * &dir.ds_mat * &sc.g);
    let ap = max_step_psd(&sc.d, &dx_t).min(max_step_orthant(&it.z, &dir.dz));
    let ad = max_step_psd(&sc.d, &ds_t).min(max_step_orthant(&it.s_vec, &dir.ds_vec));
    (ap, ad, dx_t, ds_t)
}

/// Solves a linear conic program over one PSD block and one orthant.
pub fn solve_conic(prog: &ConicProgram, opts: &SolverOptions) -> Result<ConicSolution> {
    prog.validate()?;
    let pre = remove_dependent_rows(&prog.constraints, opts.presolve_tol)?;
    let pb = Problem::new(prog, &pre.kept);
    let (n, m, p) = (pb.n, pb.m, pb.p());

    let tau_p = 1.0 + pb.b.amax();
    let tau_d = 1.0 + pb.c_mat.amax().max(pb.c_vec.amax());
    let mut it = Iterate {
        x: DMatrix::identity(n, n) * tau_p,
        z: DVector::from_element(m, tau_p),
        y: DVector::zeros(p),
        s_mat: DMatrix::identity(n, n) * tau_d,
        s_vec: DVector::from_element(m, tau_d),
    };

    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut best: Option<(f64, usize)> = None;
    let mut best_iterate: Option<Iterate> = None;
    let mut last_steps = (0.0, 0.0);
    let mut stalls = 0;
    let mut iterations = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let res = pb.residuals(&it);
        trace.push(IterationRecord {
            iter,
            primal_obj: res.pobj,
            dual_obj: res.dobj,
            primal_residual: res.rel_p,
            dual_residual: res.rel_d,
            rel_gap: res.rel_gap,
            mu: res.mu,
            step_primal: last_steps.0,
            step_dual: last_steps.1,
        });
        if opts.verbose {
            eprintln!(
                "{iter:4} pobj {:+.10e} dobj {:+.10e} pres {:.2e} dres {:.2e} gap {:.2e} mu {:.2e} step {:.3}/{:.3}",
                res.pobj, res.dobj, res.rel_p, res.rel_d, res.rel_gap, res.mu, last_steps.0, last_steps.1
            );
        }
        let merit = res.rel_p.max(res.rel_d).max(res.rel_gap);
        if best.is_none_or(|(b, _)| merit < b) {
            best = Some((merit, iter));
            best_iterate = None;
        }
        if res.rel_p <= opts.feas_tol && res.rel_d <= opts.feas_tol && res.rel_gap <= opts.gap_tol {
            status = SolveStatus::Converged;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(sc) = nt_scaling(&it.x, &it.s_mat) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let w2 = it.z.component_div(&it.s_vec);
        let Some(factor) = SchurFactor::new(pb.schur(&sc.w, &w2)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        let pred = Corrector {
            sigma_mu: 0.0,
            dx_t: None,
            ds_t: None,
            dzds: None,
        };
        let Some(aff) = direction(&pb, &it, &res, &sc, &w2, &factor, &pred) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (ap, ad, dx_t, ds_t) = step_lengths(&it, &sc, &aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = ((&it.x + &aff.dx * ap).dot(&(&it.s_mat + &aff.ds_mat * ad))
            + (&it.z + &aff.dz * ap).dot(&(&it.s_vec + &aff.ds_vec * ad)))
            / (n + m) as f64;
        let sigma = (mu_aff.max(0.0) / res.mu).powi(3).clamp(0.0, 1.0);
        let dzds = aff.dz.component_mul(&aff.ds_vec);
        let corr = Corrector {
            sigma_mu: sigma * res.mu,
            dx_t: Some(&dx_t),
            ds_t: Some(&ds_t),
            dzds: Some(&dzds),
        };
        let Some(dir) = direction(&pb, &it, &res, &sc, &w2, &factor, &corr) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (ap, ad, _, _) = step_lengths(&it, &sc, &dir);
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        last_steps = (ap, ad);

        if best.is_some_and(|(_, k)| k == iter) {
            best_iterate = Some(Iterate {
                x: it.x.clone(),
                z: it.z.clone(),
                y: it.y.clone(),
                s_mat: it.s_mat.clone(),
                s_vec: it.s_vec.clone(),
            });
        }
        it.x = sym(&it.x + &dir.dx * ap);
        it.z += &dir.dz * ap;
        it.y += &dir.dy * ad;
        it.s_mat = sym(&it.s_mat + &dir.ds_mat * ad);
        it.s_vec += &dir.ds_vec * ad;

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if status != SolveStatus::Converged {
        if let Some(b) = best_iterate {
            it = b;
        }
    }
    let res = pb.residuals(&it);
    let mut y_full = vec![0.0; prog.constraints.len()];
    for (a, &k) in pre.kept.iter().enumerate() {
        y_full[k] = it.y[a];
    }
    Ok(ConicSolution {
        x: SymMatrix::from_dmatrix(&it.x),
        z: it.z.iter().copied().collect(),
        y: y_full,
        s_mat: SymMatrix::from_dmatrix(&it.s_mat),
        s_vec: it.s_vec.iter().copied().collect(),
        status,
        iterations,
        primal_obj: res.pobj,
        dual_obj: res.dobj,
        primal_residual: res.rel_p,
        dual_residual: res.rel_d,
        rel_gap: res.rel_gap,
        dropped_rows: pre.dropped,
        trace,
    })
}

/// Dual certificate `(y, S, s)` of a converged solve, with the dual
/// residual `||C - sum y_i A_i - S||` rechecked against `1e-7`.
pub fn extract_dual_certificate(
    sol: &ConicSolution,
    prog: &ConicProgram,
) -> Result<(Vec<f64>, SymMatrix, Vec<f64>)> {
    if !sol.is_converged() {
        return Err(Error::NotConverged(format!("status {:?}", sol.status)));
    }
    let n = prog.psd_dim;
    let mut r = prog.c_mat.to_dmatrix() - sol.s_mat.to_dmatrix();
    let mut rv: Vec<f64> = prog
        .c_vec
        .iter()
        .zip(&sol.s_vec)
        .map(|(c, s)| c - s)
        .collect();
    for (c, &y) in prog.constraints.iter().zip(&sol.y) {
        c.mat.axpy_into(-y, &mut r);
        for &(k, v) in &c.vec {
            rv[k] -= y * v;
        }
    }
    let scale = 1.0 + prog.c_mat.max_abs().max(prog.c_vec.iter().fold(0.0, |a, v| a.max(v.abs())));
    let resid = r.amax().max(rv.iter().fold(0.0, |a, v| a.max(v.abs())));
    if resid > 1e-7 * scale {
        return Err(Error::NotConverged(format!(
            "dual residual {resid:.3e} exceeds tolerance"
        )));
    }
    debug_assert_eq!(r.nrows(), n);
    Ok((sol.y.clone(), sol.s_mat.clone(), sol.s_vec.clone()))
}
