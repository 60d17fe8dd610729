//! Removal of linearly dependent equality rows.

use nalgebra::{DMatrix, DVector};

use super::program::{Constraint, SparseSym};
use crate::error::{Error, Result};

fn sym_dot(a: &SparseSym, b: &SparseSym) -> f64 {
    // both entry lists are sorted by (j, i)
    let (ea, eb) = (a.entries(), b.entries());
    let (mut p, mut q, mut s) = (0, 0, 0.0);
    while p < ea.len() && q < eb.len() {
        let ka = (ea[p].1, ea[p].0);
        let kb = (eb[q].1, eb[q].0);
        match ka.cmp(&kb) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                let w = if ea[p].0 == ea[p].1 { 1.0 } else { 2.0 };
                s += w * ea[p].2 * eb[q].2;
                p += 1;
                q += 1;
            }
        }
    }
    s
}

pub(crate) fn row_dot(a: &Constraint, b: &Constraint) -> f64 {
    let mut s = sym_dot(&a.mat, &b.mat);
    for &(k, u) in &a.vec {
        for &(l, v) in &b.vec {
            if k == l {
                s += u * v;
            }
        }
    }
    s
}

/// Outcome of presolve: indices of the rows kept, in their original order.
#[derive(Clone, Debug)]
pub struct Presolved {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

/// Sequential pivoted Cholesky on the Gram matrix of the rows. A row is
/// dropped when its squared distance to the span of the earlier kept rows is
/// at most `tol` times its squared norm; a dropped row whose right-hand side
/// disagrees with that combination makes the system inconsistent.
pub fn remove_dependent_rows(rows: &[Constraint], tol: f64) -> Result<Presolved> {
    let p = rows.len();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    // rows of the lower Cholesky factor of the kept Gram block
    let mut factor: Vec<Vec<f64>> = Vec::new();
    for r in 0..p {
        let g_rr = rows[r].norm_sq();
        if g_rr == 0.0 {
            if rows[r].b.abs() > 1e-12 {
                return Err(Error::InconsistentConstraints { row: r });
            }
            log::warn!("presolve: dropping empty constraint row {r}");
            dropped.push(r);
            continue;
        }
        let g: Vec<f64> = kept.iter().map(|&k| row_dot(&rows[k], &rows[r])).collect();
        // forward solve L l = g
        let mut l = vec![0.0; kept.len()];
        for a in 0..kept.len() {
            let mut v = g[a];
            for (b, lb) in l.iter().enumerate().take(a) {
                v -= factor[a][b] * lb;
            }
            l[a] = v / factor[a][a];
        }
        let resid = g_rr - l.iter().map(|v| v * v).sum::<f64>();
        if resid > tol * g_rr {
            let mut row = l;
            row.push(resid.sqrt());
            factor.push(row);
            kept.push(r);
        } else {
            check_consistent(rows, &kept, r)?;
            log::warn!("presolve: dropping dependent constraint row {r}");
            dropped.push(r);
        }
    }
    Ok(Presolved { kept, dropped })
}

fn check_consistent(rows: &[Constraint], kept: &[usize], r: usize) -> Result<()> {
    let k = kept.len();
    if k == 0 {
        return Err(Error::InconsistentConstraints { row: r });
    }
    let gram = DMatrix::from_fn(k, k, |a, b| row_dot(&rows[kept[a]], &rows[kept[b]]));
    let rhs = DVector::from_fn(k, |a, _| row_dot(&rows[kept[a]], &rows[r]));
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("singular Gram block in presolve".into()))?;
    let implied: f64 = (0..k).map(|a| coef[a] * rows[kept[a]].b).sum();
    let scale = 1.0 + rows[r].b.abs() + implied.abs();
    if (implied - rows[r].b).abs() > 1e-8 * scale {
        return Err(Error::InconsistentConstraints { row: r });
    }
    Ok(())
}
