//! Exact global solution of `min x'Qx` over the unit simplex by enumerating
//! supports and solving the KKT system on each face.
//!
//! The same enumeration decides copositivity (`M` is copositive iff the
//! minimum is nonnegative) and lists the zeros of a copositive matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{check_dim, SimplexPoint, SymMatrix, DEFAULT_TOL_ZERO};

/// Largest dimension handled by support enumeration.
pub const EXACT_CAP_N: usize = 14;

#[derive(Clone, Debug)]
pub struct ExactOptions {
    pub cap_n: usize,
    /// Value tolerance for membership in the optimal set.
    pub tol: f64,
    pub tol_zero: f64,
    /// Re-verify the optimum by the copositivity criterion.
    pub verify_global: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            cap_n: EXACT_CAP_N,
            tol: 1e-9,
            tol_zero: DEFAULT_TOL_ZERO,
            verify_global: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    pub nu: f64,
    /// One representative per optimal support, in lexicographic support
    /// order.
    pub minimizers: Vec<SimplexPoint>,
    /// `s = Qx - nu e` for each minimizer.
    pub multipliers: Vec<Vec<f64>>,
}

/// A point satisfying the first-order conditions
/// `Qx - (x'Qx) e - s = 0`, `s >= 0`, `x_j s_j = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct KktCertificate {
    pub x: SimplexPoint,
    pub s: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondOrder {
    Holds,
    Fails,
    /// The free block is singular and the coupling leaves its range, so
    /// the Schur complement is undefined.
    Indeterminate,
}

struct Candidate {
    value: f64,
    support: Vec<usize>,
    x: Vec<f64>,
}

/// Point of `{x_A : [[Q_AA, e], [e', 0]] [x_A; t] = [0; 1]}` maximizing its
/// smallest coordinate, together with that coordinate.
fn face_critical_point(q_aa: &DMatrix<f64>) -> Option<(Vec<f64>, f64)> {
    let k = q_aa.nrows();
    let mut kk = DMatrix::zeros(k + 1, k + 1);
    kk.view_mut((0, 0), (k, k)).copy_from(q_aa);
    for i in 0..k {
        kk[(i, k)] = 1.0;
        kk[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;

    let eig = SymmetricEigen::new(kk.clone());
    let smax = eig.eigenvalues.amax();
    let cut = 1e-10 * smax.max(1.0);
    let null_cols: Vec<DVector<f64>> = (0..k + 1)
        .filter(|&c| eig.eigenvalues[c].abs() <= cut)
        .map(|c| eig.eigenvectors.column(c).into_owned())
        .collect();
    let pinv_apply = |r: &DVector<f64>| {
        let mut out = DVector::zeros(k + 1);
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            if l.abs() > cut {
                let v = eig.eigenvectors.column(c);
                out += v * (v.dot(r) / l);
            }
        }
        out
    };
    // one refinement step keeps the residual at rounding level
    let mut p = match null_cols.is_empty() {
        true => kk.clone().lu().solve(&rhs).unwrap_or_else(|| pinv_apply(&rhs)),
        false => pinv_apply(&rhs),
    };
    p += pinv_apply(&(&rhs - &kk * &p));
    let resid = (&kk * &p - &rhs).amax();
    if resid > 1e-9 * (1.0 + kk.amax()) {
        return None;
    }
    let xp: Vec<f64> = p.rows(0, k).iter().copied().collect();
    if null_cols.is_empty() {
        let s = xp.iter().copied().fold(f64::INFINITY, f64::min);
        return Some((xp, s));
    }
    let r = null_cols.len();
    let nx = DMatrix::from_fn(k, r, |i, c| null_cols[c][i]);
    max_min_coordinate(&xp, &nx)
}

/// `max s  s.t.  xp + N c >= s`, by enumerating vertices of the
/// `(r + 1)`-dimensional feasible region.
pub(crate) fn max_min_coordinate(xp: &[f64], nx: &DMatrix<f64>) -> Option<(Vec<f64>, f64)> {
    let (k, r) = nx.shape();
    let dim = r + 1;
    if dim > k {
        return None;
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let a = DMatrix::from_fn(dim, dim, |i, c| if c < r { nx[(idx[i], c)] } else { -1.0 });
        let b = DVector::from_fn(dim, |i, _| -xp[idx[i]]);
        if let Some(sol) = a.lu().solve(&b) {
            let s = sol[r];
            let c = sol.rows(0, r);
            let slack = 1e-12 * (1.0 + s.abs());
            let feasible = (0..k).all(|i| xp[i] + nx.row(i).dot(&c.transpose()) >= s - slack);
            if feasible && sol.iter().all(|v| v.is_finite()) && best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, c.into_owned()));
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                let (s, c) = best?;
                let x: Vec<f64> = (0..k).map(|i| xp[i] + nx.row(i).dot(&c.transpose())).collect();
                return Some((x, s));
            }
            i -= 1;
            if idx[i] < k - dim + i {
                idx[i] += 1;
                for j in i + 1..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(EXACT_CAP_N);
    if n > cap {
        return Err(Error::CapExceeded {
            what: "support enumeration",
            size: n,
            cap,
        });
    }
    Ok(())
}

fn candidates(q: &SymMatrix, tol_zero: f64) -> Vec<Candidate> {
    let n = q.n();
    let qd = q.to_dmatrix();
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let support: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let k = support.len();
        let q_aa = DMatrix::from_fn(k, k, |i, j| qd[(support[i], support[j])]);
        let Some((x_a, s)) = face_critical_point(&q_aa) else {
            continue;
        };
        if s <= tol_zero {
            continue;
        }
        let mut x = vec![0.0; n];
        for (a, &j) in support.iter().enumerate() {
            x[j] = x_a[a];
        }
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        out.push(Candidate {
            value: q.quad(&x),
            support,
            x,
        });
    }
    out
}

fn enumerate(q: &SymMatrix, opts: &ExactOptions) -> Result<(f64, Vec<Candidate>)> {
    if !q.is_finite() {
        return Err(crate::error::invalid("matrix has non-finite entries"));
    }
    check_cap(q.n(), opts.cap_n)?;
    let cands = candidates(q, opts.tol_zero);
    let nu = cands
        .iter()
        .map(|c| c.value)
        .fold(f64::INFINITY, f64::min);
    if !nu.is_finite() {
        return Err(Error::Internal("no KKT candidate found; vertices should always qualify".into()));
    }
    Ok((nu, cands))
}

fn select(nu: f64, cands: Vec<Candidate>, tol: f64, tol_zero: f64) -> Vec<SimplexPoint> {
    let mut sel: Vec<Candidate> = cands.into_iter().filter(|c| c.value <= nu + tol).collect();
    // values inside the band are ties; order by support alone for determinism
    sel.sort_by(|a, b| a.support.cmp(&b.support));
    sel.into_iter()
        .map(|c| {
            SimplexPoint::normalized(c.x, tol_zero).expect("candidate lies on the simplex")
        })
        .collect()
}

/// Global minimum of `x'Qx` over the simplex with one representative
/// minimizer for every optimal support.
pub fn solve_stqp_with(q: &SymMatrix, opts: &ExactOptions) -> Result<SolveResult> {
    let (nu, cands) = enumerate(q, opts)?;
    let minimizers = select(nu, cands, opts.tol, opts.tol_zero);
    let multipliers = minimizers
        .iter()
        .map(|x| q.mul_vec(x.coords()).iter().map(|v| v - nu).collect())
        .collect();
    if opts.verify_global {
        let shifted = q.shift(-nu);
        let (m, _) = enumerate(&shifted, opts)?;
        if m < -1e-9 * (1.0 + q.max_abs()) {
            return Err(Error::Internal(format!(
                "global check failed: nu(Q - nu E) = {m:e}"
            )));
        }
    }
    Ok(SolveResult {
        nu,
        minimizers,
        multipliers,
    })
}

pub fn solve_stqp(q: &SymMatrix) -> Result<SolveResult> {
    solve_stqp_with(q, &ExactOptions::default())
}

/// `nu(Q)` alone.
pub fn nu(q: &SymMatrix) -> Result<f64> {
    Ok(enumerate(q, &ExactOptions::default())?.0)
}

/// All KKT representatives within `tol` of `nu(Q)`, one per support.
pub fn optimal_set(q: &SymMatrix, tol: f64) -> Result<Vec<SimplexPoint>> {
    let opts = ExactOptions::default();
    let (nu, cands) = enumerate(q, &opts)?;
    Ok(select(nu, cands, tol, opts.tol_zero))
}

pub fn is_copositive(m: &SymMatrix, tol: f64) -> Result<bool> {
    Ok(nu(m)? >= -tol)
}

/// Zeros of a copositive matrix on the simplex, one per support.
pub fn copositive_zeros(m: &SymMatrix, tol: f64) -> Result<Vec<SimplexPoint>> {
    let opts = ExactOptions::default();
    let (nu, cands) = enumerate(m, &opts)?;
    if nu < -tol {
        return Err(Error::NotCopositive { nu });
    }
    if nu > tol {
        return Ok(Vec::new());
    }
    let mut zeros = select(nu, cands, tol, opts.tol_zero);
    zeros.retain(|x| m.quad(x.coords()).abs() <= tol);
    Ok(zeros)
}

/// Checks that `x` is a global minimizer: `Q - (x'Qx) E` must be copositive.
pub fn is_global_minimizer(q: &SymMatrix, x: &SimplexPoint, tol: f64) -> Result<bool> {
    check_dim(q.n(), x.n())?;
    let value = q.quad(x.coords());
    is_copositive(&q.shift(-value), tol)
}

pub fn check_kkt(q: &SymMatrix, x: &SimplexPoint, tol: f64) -> Result<Option<KktCertificate>> {
    check_dim(q.n(), x.n())?;
    let value = q.quad(x.coords());
    let s: Vec<f64> = q.mul_vec(x.coords()).iter().map(|v| v - value).collect();
    let ok = s
        .iter()
        .zip(x.coords())
        .all(|(&sj, &xj)| sj >= -tol && (xj * sj).abs() <= tol);
    Ok(ok.then(|| KktCertificate {
        x: x.clone(),
        s,
        value,
    }))
}

/// Tests `d'Qd >= 0` on the cone of critical directions
/// `{d : e'd = 0, d'Qx = 0, d_j >= 0 for j in Z(x)}`.
///
/// Since `d'Qx = d's` once `e'd = 0`, coordinates with `s_j > tol` are fixed
/// at zero. The remaining directions are `d = T [u; v]` with `u` free on the
/// support and `v >= 0` on the active zero coordinates; the free block is
/// eliminated by a Schur complement and the rest is a copositivity test.
pub fn check_second_order(q: &SymMatrix, cert: &KktCertificate, tol: f64) -> Result<SecondOrder> {
    let n = q.n();
    check_dim(n, cert.x.n())?;
    let support = cert.x.support();
    let active: Vec<usize> = cert
        .x
        .zero_set()
        .into_iter()
        .filter(|&j| cert.s[j] <= tol)
        .collect();
    let k = support.len();
    let scale = 1.0 + q.max_abs();

    // orthonormal basis of the sum-zero subspace on the support
    let basis = if k > 1 {
        let c = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64);
        let eig = SymmetricEigen::new(c);
        let cols: Vec<DVector<f64>> = (0..k)
            .filter(|&c| eig.eigenvalues[c] > 0.5)
            .map(|c| eig.eigenvectors.column(c).into_owned())
            .collect();
        cols
    } else {
        Vec::new()
    };
    let nu_ = basis.len();
    let nv = active.len();
    let mut t = DMatrix::zeros(n, nu_ + nv);
    for (c, b) in basis.iter().enumerate() {
        for (a, &j) in support.iter().enumerate() {
            t[(j, c)] = b[a];
        }
    }
    for (c, &j) in active.iter().enumerate() {
        t[(j, nu_ + c)] = 1.0;
        for &i in &support {
            t[(i, nu_ + c)] = -1.0 / k as f64;
        }
    }
    let r = t.transpose() * q.to_dmatrix() * &t;
    let r_uu = r.view((0, 0), (nu_, nu_)).into_owned();
    let r_uv = r.view((0, nu_), (nu_, nv)).into_owned();
    let r_vv = r.view((nu_, nu_), (nv, nv)).into_owned();

    let band = tol * scale;
    if nu_ == 0 {
        if nv == 0 {
            return Ok(SecondOrder::Holds);
        }
        let m = nu(&SymMatrix::from_dmatrix(&r_vv))?;
        return Ok(if m >= -band {
            SecondOrder::Holds
        } else {
            SecondOrder::Fails
        });
    }
    let eig = SymmetricEigen::new(r_uu);
    if eig.eigenvalues.iter().any(|&l| l < -band) {
        return Ok(SecondOrder::Fails);
    }
    if nv == 0 {
        return Ok(SecondOrder::Holds);
    }
    // pseudo-inverse Schur complement, with a range check on the coupling
    let mut pinv = DMatrix::zeros(nu_, nu_);
    for c in 0..nu_ {
        let l = eig.eigenvalues[c];
        let vcol = eig.eigenvectors.column(c);
        if l > band {
            pinv += vcol * vcol.transpose() / l;
        } else if (vcol.transpose() * &r_uv).amax() > band {
            return Ok(SecondOrder::Indeterminate);
        }
    }
    let s = r_vv - r_uv.transpose() * pinv * &r_uv;
    let reduced = SymMatrix::from_dmatrix(&s);
    let m = nu(&reduced)?;
    Ok(if m >= -band {
        SecondOrder::Holds
    } else {
        SecondOrder::Fails
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn supports(pts: &[SimplexPoint]) -> Vec<Vec<usize>> {
        pts.iter().map(|p| p.support()).collect()
    }

    #[test]
    fn example2_minimizer() {
        let r = solve_stqp(&fixtures::example2()).unwrap();
        assert!((r.nu - 0.4).abs() < 1e-12);
        // x_4 and x_5 are interchangeable, so three supports are optimal
        assert_eq!(
            supports(&r.minimizers),
            vec![vec![0, 2, 3], vec![0, 2, 3, 4], vec![0, 2, 4]]
        );
        let x = r.minimizers[0].coords();
        for (a, b) in x.iter().zip([0.2, 0.0, 0.4, 0.4, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn example8_minimizer() {
        let r = solve_stqp(&fixtures::example8()).unwrap();
        assert!((r.nu - 2.0 / 3.0).abs() < 1e-12);
        let x = r.minimizers[0].coords();
        for (a, b) in x.iter().zip([1. / 3., 1. / 3., 1. / 3., 0., 0.]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_faces_reach_zero() {
        // (d_i x_i - d_j x_j)^2 vanishes inside the edge for every scaling
        for k in 1..200 {
            let di = 0.5 + 0.0071 * k as f64;
            let dj = 2.0 - 0.0067 * k as f64;
            let q = SymMatrix::from_rows(&[vec![di * di, -di * dj], vec![-di * dj, dj * dj]]).unwrap();
            let r = solve_stqp(&q).unwrap();
            assert!(r.nu.abs() < 1e-12, "k = {k}: nu = {}", r.nu);
            assert_eq!(r.minimizers[0].support(), vec![0, 1]);
        }
    }

    #[test]
    fn second_order_at_vertices() {
        let q = SymMatrix::from_rows(&[vec![3.5]]).unwrap();
        let x = SimplexPoint::vertex(1, 0);
        let cert = check_kkt(&q, &x, 1e-9).unwrap().unwrap();
        assert_eq!(check_second_order(&q, &cert, 1e-9).unwrap(), SecondOrder::Holds);
        // e_1 of [[0, 0], [0, 1]]: s_2 = 0, so d = (-1, 1) stays critical
        let q = SymMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = SimplexPoint::vertex(2, 0);
        let cert = check_kkt(&q, &x, 1e-9).unwrap().unwrap();
        assert_eq!(check_second_order(&q, &cert, 1e-9).unwrap(), SecondOrder::Holds);
        // e_1 of [[0, 0], [0, -1]] is a KKT point but not a local minimum
        let q = SymMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let cert = check_kkt(&q, &x, 1e-9).unwrap().unwrap();
        assert_eq!(check_second_order(&q, &cert, 1e-9).unwrap(), SecondOrder::Fails);
    }

    #[test]
    fn all_ones_and_identity() {
        let r = solve_stqp(&SymMatrix::ones(4)).unwrap();
        assert!((r.nu - 1.0).abs() < 1e-12);
        assert_eq!(r.minimizers.len(), 15);
        let r = solve_stqp(&SymMatrix::identity(4)).unwrap();
        assert!((r.nu - 0.25).abs() < 1e-12);
        assert_eq!(supports(&r.minimizers), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn example1_optimal_set_is_first_vertex() {
        let set = optimal_set(&fixtures::example1(), 1e-9).unwrap();
        assert_eq!(supports(&set), vec![vec![0]]);
    }

    #[test]
    fn horn_optimal_set_contains_cycle_midpoints() {
        let set = optimal_set(&fixtures::horn(), 1e-9).unwrap();
        let sup = supports(&set);
        for i in 0..5 {
            let mut pair = vec![i, (i + 1) % 5];
            pair.sort();
            assert!(sup.contains(&pair), "{pair:?} missing from {sup:?}");
            let p = set.iter().find(|p| p.support() == pair).unwrap();
            assert!((p.coords()[i] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn copositivity_oracle() {
        assert!(is_copositive(&fixtures::horn(), 1e-9).unwrap());
        assert!(!is_copositive(&SymMatrix::identity(3).scale(-1.0), 1e-9).unwrap());
        assert!(is_copositive(&SymMatrix::ones(3), 1e-9).unwrap());
    }

    #[test]
    fn copositive_zero_sets() {
        assert_eq!(copositive_zeros(&fixtures::horn(), 1e-9).unwrap().len(), 10);
        assert!(copositive_zeros(&SymMatrix::identity(3), 1e-9).unwrap().is_empty());
        let m = fixtures::example4().shift(-1.0);
        let zs = supports(&copositive_zeros(&m, 1e-9).unwrap());
        assert!(zs.contains(&vec![3, 4]));
        assert!(matches!(
            copositive_zeros(&SymMatrix::identity(2).scale(-1.0), 1e-9),
            Err(Error::NotCopositive { .. })
        ));
    }

    #[test]
    fn kkt_certificates() {
        let x = SimplexPoint::new(vec![0.2, 0.0, 0.4, 0.4, 0.0], 1e-8).unwrap();
        let c = check_kkt(&fixtures::example2(), &x, 1e-8).unwrap().unwrap();
        assert!((c.value - 0.4).abs() < 1e-12);
        let c = check_kkt(&SymMatrix::ones(3), &SimplexPoint::barycenter(3), 1e-8)
            .unwrap()
            .unwrap();
        assert!(c.s.iter().all(|v| v.abs() < 1e-12));
        // s = Q e_2 - 3 e has a negative entry
        assert!(check_kkt(&fixtures::example1(), &SimplexPoint::vertex(5, 1), 1e-8)
            .unwrap()
            .is_none());
    }

    #[test]
    fn second_order_conditions() {
        let e = SymMatrix::ones(4);
        let c = check_kkt(&e, &SimplexPoint::barycenter(4), 1e-8).unwrap().unwrap();
        assert_eq!(check_second_order(&e, &c, 1e-9).unwrap(), SecondOrder::Holds);

        let h = fixtures::horn();
        let c = check_kkt(&h, &SimplexPoint::uniform_on(5, &[0, 1]), 1e-8)
            .unwrap()
            .unwrap();
        assert_eq!(check_second_order(&h, &c, 1e-9).unwrap(), SecondOrder::Holds);

        // barycenter of -I is a KKT point and a maximizer
        let m = SymMatrix::identity(3).scale(-1.0);
        let c = check_kkt(&m, &SimplexPoint::barycenter(3), 1e-8).unwrap().unwrap();
        assert_eq!(check_second_order(&m, &c, 1e-9).unwrap(), SecondOrder::Fails);
    }

    #[test]
    fn cap_is_enforced() {
        let q = SymMatrix::identity(15);
        assert!(matches!(solve_stqp(&q), Err(Error::CapExceeded { .. })));
        let opts = ExactOptions {
            cap_n: 3,
            ..Default::default()
        };
        assert!(solve_stqp_with(&SymMatrix::identity(4), &opts).is_err());
    }

    #[test]
    fn global_verification_flag() {
        let opts = ExactOptions {
            verify_global: true,
            ..Default::default()
        };
        let r = solve_stqp_with(&fixtures::example6(), &opts).unwrap();
        assert!(r.nu > 0.48 && r.nu < 0.49);
        assert!(is_global_minimizer(&fixtures::example6(), &r.minimizers[0], 1e-9).unwrap());
        assert!(!is_global_minimizer(&fixtures::example6(), &SimplexPoint::vertex(5, 0), 1e-9).unwrap());
    }
}
