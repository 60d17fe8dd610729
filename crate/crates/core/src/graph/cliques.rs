use super::{mask_to_vec, Graph};
use crate::error::{invalid, Error, Result};

/// Largest graph accepted by clique enumeration.
pub const CLIQUE_CAP_N: usize = 32;

fn check(g: &Graph) -> Result<()> {
    if g.n() > CLIQUE_CAP_N {
        return Err(Error::CapExceeded {
            what: "clique enumeration",
            size: g.n(),
            cap: CLIQUE_CAP_N,
        });
    }
    Ok(())
}

fn bron_kerbosch(g: &Graph, r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
    if p == 0 {
        if x == 0 {
            out.push(r);
        }
        return;
    }
    // pivot with the most neighbours in P
    let ux = p | x;
    let pivot = mask_to_vec(ux)
        .into_iter()
        .max_by_key(|&u| ((p & g.neighbors(u)).count_ones(), std::cmp::Reverse(u)))
        .expect("P is nonempty");
    let mut cand = p & !g.neighbors(pivot);
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        let nv = g.neighbors(v);
        bron_kerbosch(g, r | 1 << v, p & nv, x & nv, out);
        p &= !(1 << v);
        x |= 1 << v;
    }
}

/// All maximal cliques, each sorted, listed in lexicographic order.
pub fn maximal_cliques(g: &Graph) -> Result<Vec<Vec<usize>>> {
    check(g)?;
    let mut masks = Vec::new();
    let all = (1u64 << g.n()) - 1;
    bron_kerbosch(g, 0, all, 0, &mut masks);
    let mut cliques: Vec<Vec<usize>> = masks.into_iter().map(mask_to_vec).collect();
    cliques.sort();
    Ok(cliques)
}

/// A clique of largest total weight; among ties, the lexicographically
/// smallest maximal clique.
pub fn max_weight_clique(g: &Graph, w: &[f64]) -> Result<(Vec<usize>, f64)> {
    crate::matrix::check_dim(g.n(), w.len())?;
    if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("clique weights must be positive"));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for c in maximal_cliques(g)? {
        let weight: f64 = c.iter().map(|&j| w[j]).sum();
        if best.as_ref().is_none_or(|b| weight > b.1) {
            best = Some((c, weight));
        }
    }
    Ok(best.expect("every graph has a maximal clique"))
}
