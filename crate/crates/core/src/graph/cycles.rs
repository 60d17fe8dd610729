//! Odd-cycle questions answered by scanning vertex subsets.

use serde::Serialize;

use super::{mask_to_vec, Graph};
use crate::error::{Error, Result};

/// Largest graph accepted by the subset scans below.
pub const CYCLE_CAP_N: usize = 16;

fn check(g: &Graph, what: &'static str) -> Result<()> {
    if g.n() > CYCLE_CAP_N {
        return Err(Error::CapExceeded {
            what,
            size: g.n(),
            cap: CYCLE_CAP_N,
        });
    }
    Ok(())
}

/// An induced odd cycle of length at least five, in cyclic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OddHole {
    /// The hole lives in the complement (an odd antihole of the graph).
    pub in_complement: bool,
    pub cycle: Vec<usize>,
}

/// Vertices of `mask` in cyclic order, if `mask` induces a cycle in `g`.
fn induced_cycle(g: &Graph, mask: u64) -> Option<Vec<usize>> {
    let verts = mask_to_vec(mask);
    if verts.iter().any(|&v| (g.neighbors(v) & mask).count_ones() != 2) {
        return None;
    }
    let start = verts[0];
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = (g.neighbors(start) & mask).trailing_zeros() as usize;
    while cur != start {
        order.push(cur);
        let next = g.neighbors(cur) & mask & !(1 << prev);
        prev = cur;
        cur = next.trailing_zeros() as usize;
    }
    (order.len() == verts.len()).then_some(order)
}

fn find_odd_hole(g: &Graph) -> Option<Vec<usize>> {
    let n = g.n();
    let mut masks: Vec<u64> = (1u64..(1 << n))
        .filter(|m| m.count_ones() >= 5 && m.count_ones() % 2 == 1)
        .collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.into_iter().find_map(|m| induced_cycle(g, m))
}

/// Perfect iff neither the graph nor its complement has an induced odd
/// cycle of length at least five.
pub fn is_perfect(g: &Graph) -> Result<(bool, Option<OddHole>)> {
    check(g, "perfect-graph test")?;
    if let Some(cycle) = find_odd_hole(g) {
        return Ok((
            false,
            Some(OddHole {
                in_complement: false,
                cycle,
            }),
        ));
    }
    if let Some(cycle) = find_odd_hole(&g.complement()) {
        return Ok((
            false,
            Some(OddHole {
                in_complement: true,
                cycle,
            }),
        ));
    }
    Ok((true, None))
}

/// SPN completable iff every odd cycle induces a complete subgraph. On
/// failure the witness is an odd cycle (in order) whose vertex set is not a
/// clique.
///
/// `reach[mask]` holds, as a bit set, the vertices `v` for which a path from
/// the lowest vertex of `mask` to `v` visits exactly `mask`.
pub fn is_spn_completable(g: &Graph) -> Result<(bool, Option<Vec<usize>>)> {
    check(g, "SPN completability test")?;
    let n = g.n();
    let size = 1usize << n;
    let mut reach = vec![0u32; size];
    for s in 0..n {
        reach[1 << s] = 1 << s;
    }
    for mask in 1..size {
        let ends = reach[mask];
        if ends == 0 {
            continue;
        }
        let low = mask.trailing_zeros();
        let mut e = ends;
        while e != 0 {
            let v = e.trailing_zeros() as usize;
            e &= e - 1;
            // extend only by vertices above the start
            let mut next = g.neighbors(v) as usize & !mask & !((1usize << (low + 1)) - 1);
            while next != 0 {
                let u = next.trailing_zeros() as usize;
                next &= next - 1;
                reach[mask | 1 << u] |= 1 << u;
            }
        }
    }
    let mut masks: Vec<usize> = (1..size)
        .filter(|m| m.count_ones() >= 5 && m.count_ones() % 2 == 1)
        .collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        if g.is_clique_mask(mask as u64) {
            continue;
        }
        let start = mask.trailing_zeros() as usize;
        let closing = reach[mask] as u64 & g.neighbors(start);
        if closing == 0 {
            continue;
        }
        // walk the path back from its end
        let mut v = closing.trailing_zeros() as usize;
        let mut m = mask;
        let mut path = vec![v];
        while v != start {
            m &= !(1 << v);
            let prev = reach[m] as u64 & g.neighbors(v);
            v = prev.trailing_zeros() as usize;
            path.push(v);
        }
        path.reverse();
        return Ok((false, Some(path)));
    }
    Ok((true, None))
}
