//! Instances with a prescribed optimal value whose relaxation is provably
//! exact, provably gapped, or governed by a weighted clique number.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact;
use crate::fixtures;
use crate::graph::Graph;
use crate::matrix::{check_dim, check_permutation, SimplexPoint, SymMatrix, DEFAULT_TOL_ZERO};

/// `Q = P + N + lambda E` with `P = (I - e x') K (I - x e')`; the point `x`
/// is optimal and `ell(Q) = nu(Q) = lambda`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactRecipe {
    pub x: SimplexPoint,
    /// Positive semidefinite seed.
    #[serde(rename = "K")]
    pub k: SymMatrix,
    /// Nonnegative, zero on `A(x) x A(x)`.
    pub n_pattern: SymMatrix,
    pub lambda: f64,
}

/// `Q = lambda E + J D [[B, C], [C', H]] D J'` with the Horn matrix `H`;
/// then `nu(Q) = lambda > ell(Q)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapRecipe {
    pub n: usize,
    /// Copositive block of order `n - 5`.
    #[serde(rename = "B")]
    pub b: Option<SymMatrix>,
    /// Nonnegative `(n - 5) x 5` coupling, row-major.
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    /// 0-based permutation: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of the scaled block matrix.
    pub perm: Vec<usize>,
    pub d: Vec<f64>,
    pub lambda: f64,
}

/// A member of `M(G, w)`: diagonal `1/w`, zero on edges, and
/// `(Q_ii + Q_jj)/2 + slack_ij` off the edges.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MgwRecipe {
    pub graph: Graph,
    pub w: Vec<f64>,
    /// Nonnegative increments; entries on edges are ignored.
    pub slacks: Option<SymMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Recipe {
    Exact(ExactRecipe),
    Gap(GapRecipe),
    Mgw(MgwRecipe),
}

impl Recipe {
    pub fn build(&self) -> Result<SymMatrix> {
        match self {
            Recipe::Exact(r) => gen_exact(r),
            Recipe::Gap(r) => gen_gap(r),
            Recipe::Mgw(r) => gen_mgw(&r.graph, &r.w, r.slacks.as_ref()),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Recipe::Exact(r) => r.x.n(),
            Recipe::Gap(r) => r.n,
            Recipe::Mgw(r) => r.graph.n(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeKind {
    Exact,
    Gap,
    #[serde(alias = "Mgw")]
    Mgw,
}

/// A recipe as written in a file. Missing fields are drawn at random when
/// `sample` is set and take fixed defaults otherwise: `x = e/n`, `K = I`,
/// `N = 0` for exact; `B = 0`, `C = 0`, identity permutation and scaling
/// for gap; the complete graph with unit weights for `M(G, w)`; `lambda = 0`.
/// The permutation is 1-based here, as are graph vertices.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeSpec {
    pub kind: Option<RecipeKind>,
    pub n: Option<usize>,
    #[serde(default)]
    pub sample: bool,
    pub seed: Option<u64>,
    #[serde(alias = "λ")]
    pub lambda: Option<f64>,
    pub x: Option<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Option<SymMatrix>,
    #[serde(rename = "N_pattern")]
    pub n_pattern: Option<SymMatrix>,
    /// Edge probability of the random graph, or nonzero density of `N`.
    pub density: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<SymMatrix>,
    #[serde(rename = "C")]
    pub c: Option<Vec<Vec<f64>>>,
    pub perm: Option<Vec<usize>>,
    pub d: Option<Vec<f64>>,
    pub graph: Option<Graph>,
    pub w: Option<Vec<f64>>,
    pub slacks: Option<SymMatrix>,
}

impl RecipeSpec {
    fn dimension(&self) -> Option<usize> {
        self.n
            .or(self.x.as_ref().map(Vec::len))
            .or(self.k.as_ref().map(SymMatrix::n))
            .or(self.n_pattern.as_ref().map(SymMatrix::n))
            .or(self.graph.as_ref().map(Graph::n))
            .or(self.w.as_ref().map(Vec::len))
            .or(self.perm.as_ref().map(Vec::len))
            .or(self.d.as_ref().map(Vec::len))
    }

    /// Fills the missing fields and returns a concrete recipe.
    pub fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Recipe> {
        let kind = self.kind.ok_or_else(|| invalid("recipe needs a kind"))?;
        let n = self
            .dimension()
            .ok_or_else(|| invalid("recipe needs n or a field that fixes it"))?;
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        let s = self.sample;
        let lambda = match self.lambda {
            Some(l) => l,
            None if s => rng.random_range(-2.0..2.0),
            None => 0.0,
        };
        let density = self.density.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&density) {
            return Err(invalid("density must lie in [0, 1]"));
        }
        Ok(match kind {
            RecipeKind::Exact => {
                let x = match &self.x {
                    Some(v) => SimplexPoint::normalized(v.clone(), DEFAULT_TOL_ZERO)?,
                    None if s => {
                        let size = rng.random_range(1..=n);
                        random_simplex_point(n, size, rng)
                    }
                    None => SimplexPoint::barycenter(n),
                };
                let k = match &self.k {
                    Some(k) => k.clone(),
                    None if s => random_psd(n, rng),
                    None => SymMatrix::identity(n),
                };
                let n_pattern = match &self.n_pattern {
                    Some(m) => m.clone(),
                    None if s => random_n_pattern(&x, density, rng),
                    None => SymMatrix::zeros(n),
                };
                Recipe::Exact(ExactRecipe {
                    x,
                    k,
                    n_pattern,
                    lambda,
                })
            }
            RecipeKind::Gap => {
                if n < 5 {
                    return Err(invalid("gap instances need n >= 5"));
                }
                let m = n - 5;
                let drawn = if s { Some(sample_gap(n, rng)?) } else { None };
                let b = match (&self.b, &drawn) {
                    (Some(b), _) => Some(b.clone()),
                    (None, Some(g)) => g.b.clone(),
                    (None, None) => None,
                };
                let c = match (&self.c, &drawn) {
                    (Some(c), _) => c.clone(),
                    (None, Some(g)) => g.c.clone(),
                    (None, None) => vec![vec![0.0; 5]; m],
                };
                let perm = match (&self.perm, &drawn) {
                    (Some(p), _) => {
                        if p.contains(&0) {
                            return Err(invalid("perm is 1-based"));
                        }
                        p.iter().map(|v| v - 1).collect()
                    }
                    (None, Some(g)) => g.perm.clone(),
                    (None, None) => (0..n).collect(),
                };
                let d = match (&self.d, &drawn) {
                    (Some(d), _) => d.clone(),
                    (None, Some(g)) => g.d.clone(),
                    (None, None) => vec![1.0; n],
                };
                Recipe::Gap(GapRecipe {
                    n,
                    b,
                    c,
                    perm,
                    d,
                    lambda,
                })
            }
            RecipeKind::Mgw => {
                let graph = match &self.graph {
                    Some(g) => g.clone(),
                    None if s => random_graph(n, density, rng)?,
                    None => Graph::complete(n)?,
                };
                let w = match &self.w {
                    Some(w) => w.clone(),
                    None if s => (0..n).map(|_| rng.random_range(0.5..3.0)).collect(),
                    None => vec![1.0; n],
                };
                Recipe::Mgw(MgwRecipe {
                    graph,
                    w,
                    slacks: self.slacks.clone(),
                })
            }
        })
    }
}

/// `(I - e x') K (I - x e')`.
pub fn project_px(x: &SimplexPoint, k: &SymMatrix) -> Result<SymMatrix> {
    let n = x.n();
    check_dim(n, k.n())?;
    let xs = x.coords();
    // (I - e x') K (I - x e') = K - e (K x)' - (K x) e' + (x'Kx) E
    let kx = k.mul_vec(xs);
    let xkx = k.quad(xs);
    Ok(SymMatrix::from_fn(n, |i, j| k.get(i, j) - kx[j] - kx[i] + xkx))
}

pub fn gen_exact(r: &ExactRecipe) -> Result<SymMatrix> {
    let n = r.x.n();
    check_dim(n, r.k.n())?;
    check_dim(n, r.n_pattern.n())?;
    let scale = 1.0 + r.k.max_abs();
    if r.k.min_eigenvalue() < -1e-10 * scale {
        return Err(invalid("K must be positive semidefinite"));
    }
    if r.n_pattern.min_entry() < 0.0 {
        return Err(invalid("N_pattern must be nonnegative"));
    }
    let support = r.x.support();
    for &i in &support {
        for &j in &support {
            if r.n_pattern.get(i, j) != 0.0 {
                return Err(invalid(format!(
                    "N_pattern is nonzero at ({}, {}) inside the support of x",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(project_px(&r.x, &r.k)?.add(&r.n_pattern).shift(r.lambda))
}

/// `J D M_hat D J'` without the `lambda E` shift.
pub fn gap_m(r: &GapRecipe) -> Result<SymMatrix> {
    let n = r.n;
    if n < 5 {
        return Err(invalid("gap instances need n >= 5"));
    }
    let m = n - 5;
    check_dim(n, r.d.len())?;
    check_permutation(&r.perm, n)?;
    if r.d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("scaling d must be positive"));
    }
    let b = match &r.b {
        Some(b) => {
            check_dim(m, b.n())?;
            b.clone()
        }
        None if m == 0 => SymMatrix::zeros(1),
        None => SymMatrix::zeros(m),
    };
    if m > 0 && !exact::is_copositive(&b, 1e-9 * (1.0 + b.max_abs()))? {
        return Err(invalid("block B is not copositive"));
    }
    if r.c.len() != m || r.c.iter().any(|row| row.len() != 5) {
        return Err(invalid(format!("C must be {m} x 5")));
    }
    if r.c.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("C must be nonnegative"));
    }
    let h = fixtures::horn();
    let hat = SymMatrix::from_fn(n, |i, j| match (i < m, j < m) {
        (true, true) => b.get(i, j),
        (true, false) => r.c[i][j - m],
        (false, true) => r.c[j][i - m],
        (false, false) => h.get(i - m, j - m),
    });
    hat.diag_scale(&r.d)?.permute(&r.perm)
}

pub fn gen_gap(r: &GapRecipe) -> Result<SymMatrix> {
    Ok(gap_m(r)?.shift(r.lambda))
}

pub fn gen_mgw(g: &Graph, w: &[f64], slacks: Option<&SymMatrix>) -> Result<SymMatrix> {
    let n = g.n();
    check_dim(n, w.len())?;
    if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("weights must be positive"));
    }
    if let Some(s) = slacks {
        check_dim(n, s.n())?;
        if s.min_entry() < 0.0 {
            return Err(invalid("slacks must be nonnegative"));
        }
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0 / w[i]
        } else if g.has_edge(i, j) {
            0.0
        } else {
            (1.0 / w[i] + 1.0 / w[j]) / 2.0 + slacks.map_or(0.0, |s| s.get(i, j))
        }
    }))
}

/// `K = G'G` with standard normal `G`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    let g: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    SymMatrix::from_fn(n, |i, j| (0..n).map(|k| g[k][i] * g[k][j]).sum())
}

/// A point of the simplex with a uniformly chosen support of the given size
/// and exponential weights on it.
pub fn random_simplex_point<R: Rng + ?Sized>(n: usize, support: usize, rng: &mut R) -> SimplexPoint {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut x = vec![0.0; n];
    for &j in &idx[..support.clamp(1, n)] {
        // keep coordinates well above the support threshold
        let v: f64 = Exp1.sample(rng);
        x[j] = 0.05 + v;
    }
    SimplexPoint::normalized(x, DEFAULT_TOL_ZERO).expect("positive mass")
}

/// Entries uniform on `[0, 1]` with probability `density`, outside `A x A`.
pub fn random_n_pattern<R: Rng + ?Sized>(x: &SimplexPoint, density: f64, rng: &mut R) -> SymMatrix {
    let n = x.n();
    let mask = x.support_mask();
    let mut out = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let inside = mask >> i & 1 == 1 && mask >> j & 1 == 1;
            if !inside && rng.random_bool(density) {
                out.set(i, j, rng.random::<f64>());
            }
        }
    }
    out
}

pub fn sample_exact<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ExactRecipe {
    let support = rng.random_range(1..=n);
    let x = random_simplex_point(n, support, rng);
    ExactRecipe {
        k: random_psd(n, rng),
        n_pattern: random_n_pattern(&x, 0.5, rng),
        x,
        lambda: rng.random_range(-2.0..2.0),
    }
}

pub fn sample_gap<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GapRecipe> {
    if n < 5 {
        return Err(invalid("gap instances need n >= 5"));
    }
    let m = n - 5;
    // PSD plus nonnegative is copositive
    let b = (m > 0).then(|| {
        let p = random_psd(m, rng).scale(0.5);
        let nn = SymMatrix::from_fn(m, |_, _| rng.random::<f64>());
        p.add(&nn)
    });
    let c = (0..m)
        .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let d = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    Ok(GapRecipe {
        n,
        b,
        c,
        perm,
        d,
        lambda: rng.random_range(-2.0..2.0),
    })
}

pub fn random_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Random chordal graph: each new vertex is joined to a clique of the
/// graph built so far, which yields a perfect elimination ordering.
pub fn random_chordal_graph<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph> {
    let mut g = Graph::empty(n)?;
    let mut edges = Vec::new();
    for v in 1..n {
        let anchor = rng.random_range(0..v);
        let mut clique = vec![anchor];
        for u in 0..v {
            if u != anchor && g.has_edge(u, anchor) && clique.iter().all(|&c| g.has_edge(u, c)) && rng.random_bool(0.6) {
                clique.push(u);
            }
        }
        if rng.random_bool(0.85) {
            for &c in &clique {
                edges.push((c, v));
            }
        }
        g = Graph::from_edges(n, &edges)?;
    }
    Ok(g)
}

pub fn sample_mgw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<MgwRecipe> {
    let graph = random_graph(n, 0.5, rng)?;
    let w = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
    Ok(MgwRecipe {
        graph,
        w,
        slacks: None,
    })
}

/// `-K + lambda E` with `K` random psd; concave on the simplex.
pub fn sample_concave<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    random_psd(n, rng).scale(-1.0).shift(rng.random_range(-2.0..2.0))
}

/// Moves mass of a DNN-feasible `X` off the non-edges of `G` along
/// `(e_i - e_j)(e_i - e_j)'`; for `Q` in `M(G, w)` the objective does not
/// increase and the result vanishes on every non-edge.
pub fn zero_nonedges(x: &SymMatrix, g: &Graph) -> Result<SymMatrix> {
    check_dim(g.n(), x.n())?;
    let mut out = x.clone();
    for (i, j) in g.complement().edges() {
        let a = out.get(i, j);
        if a > 0.0 {
            out.set(i, i, out.get(i, i) + a);
            out.set(j, j, out.get(j, j) + a);
            out.set(i, j, 0.0);
        }
    }
    Ok(out)
}
