//! Independent oracles for integration tests. Nothing here calls the
//! library's solvers.

#![allow(dead_code)]

use rand::Rng;
use stqp_core::graph::Graph;
use stqp_core::SymMatrix;

pub fn random_symmetric<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// Calls `f` on every point `k / den` of the simplex grid.
pub fn for_each_grid_point(n: usize, den: usize, mut f: impl FnMut(&[f64])) {
    fn rec(k: &mut Vec<usize>, left: usize, n: usize, den: usize, f: &mut dyn FnMut(&[f64])) {
        if k.len() == n - 1 {
            k.push(left);
            let x: Vec<f64> = k.iter().map(|&v| v as f64 / den as f64).collect();
            f(&x);
            k.pop();
            return;
        }
        for v in 0..=left {
            k.push(v);
            rec(k, left - v, n, den, f);
            k.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), den, n, den, &mut f);
}

pub fn quad(q: &SymMatrix, x: &[f64]) -> f64 {
    let n = q.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += x[i] * q.get(i, j) * x[j];
        }
    }
    s
}

/// Minimum of `x'Qx` over the grid with denominator `den`.
pub fn grid_min(q: &SymMatrix, den: usize) -> f64 {
    let mut best = f64::INFINITY;
    for_each_grid_point(q.n(), den, |x| best = best.min(quad(q, x)));
    best
}

/// Upper bound on `grid_min - nu`: `(max_i Q_ii - nu) / den`.
pub fn grid_slack(q: &SymMatrix, nu: f64, den: usize) -> f64 {
    let dmax = (0..q.n()).map(|i| q.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
    (dmax - nu) / den as f64
}

/// Maximum weight clique by checking every vertex subset.
pub fn brute_omega(g: &Graph, w: &[f64]) -> f64 {
    let n = g.n();
    let mut best = 0.0f64;
    for mask in 1u64..(1 << n) {
        let vs: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if is_clique(g, &vs) {
            best = best.max(vs.iter().map(|&i| w[i]).sum());
        }
    }
    best
}

fn psd3(p: &[[f64; 3]; 3]) -> bool {
    // all principal minors nonnegative
    let d = |i: usize, j: usize| p[i][i] * p[j][j] - p[i][j] * p[i][j];
    let det = p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[1][2])
        - p[0][1] * (p[0][1] * p[2][2] - p[1][2] * p[0][2])
        + p[0][2] * (p[0][1] * p[1][2] - p[1][1] * p[0][2]);
    (0..3).all(|i| p[i][i] >= 0.0) && d(0, 1) >= 0.0 && d(0, 2) >= 0.0 && d(1, 2) >= 0.0 && det >= 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpnOracle {
    Member,
    NonMember,
    Unknown,
}

/// Decides SPN membership of a 3x3 matrix with entries in `{-1, 0, 1}`.
///
/// Members: a psd `P <= M` with `P_ii = M_ii` and off-diagonal entries on
/// the quarter grid of `[-1, M_ij]`. Non-members: a negative diagonal, or a
/// simplex grid point (denominator up to 12) with `x'Mx < 0`.
pub fn spn_oracle_3x3(m: &SymMatrix) -> SpnOracle {
    if (0..3).any(|i| m.get(i, i) < 0.0) {
        return SpnOracle::NonMember;
    }
    let choices = |i: usize, j: usize| -> Vec<f64> {
        (0..=8)
            .map(|k| -1.0 + 0.25 * k as f64)
            .filter(|&v| v <= m.get(i, j))
            .collect()
    };
    for &a in &choices(0, 1) {
        for &b in &choices(0, 2) {
            for &c in &choices(1, 2) {
                let p = [
                    [m.get(0, 0), a, b],
                    [a, m.get(1, 1), c],
                    [b, c, m.get(2, 2)],
                ];
                if psd3(&p) {
                    return SpnOracle::Member;
                }
            }
        }
    }
    for den in 1..=12 {
        let mut neg = false;
        for_each_grid_point(3, den, |x| neg |= quad(m, x) < -1e-12);
        if neg {
            return SpnOracle::NonMember;
        }
    }
    SpnOracle::Unknown
}

/// All 729 symmetric 3x3 matrices with entries in `{-1, 0, 1}`.
pub fn all_sign_matrices_3x3() -> Vec<SymMatrix> {
    let mut out = Vec::with_capacity(729);
    for code in 0..729usize {
        let mut c = code;
        let mut v = [0.0; 6];
        for slot in v.iter_mut() {
            *slot = (c % 3) as f64 - 1.0;
            c /= 3;
        }
        let idx = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            _ => 5,
        };
        out.push(SymMatrix::from_fn(3, |i, j| v[idx(i, j)]));
    }
    out
}

pub fn is_clique(g: &Graph, vs: &[usize]) -> bool {
    vs.iter()
        .enumerate()
        .all(|(a, &i)| vs[a + 1..].iter().all(|&j| g.has_edge(i, j)))
}

/// Edges with `2 Q_ij < Q_ii + Q_jj`, computed directly.
pub fn convexity_edges(q: &SymMatrix) -> Vec<(usize, usize)> {
    let n = q.n();
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if 2.0 * q.get(i, j) < q.get(i, i) + q.get(j, j) {
                e.push((i, j));
            }
        }
    }
    e
}
