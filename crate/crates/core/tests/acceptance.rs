//! Acceptance criteria 1 to 8. Each criterion prints one PASS or FAIL line;
//! the test fails if any criterion fails.
//!
//! Run alone with `cargo test -p stqp-core --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stqp_core::exact::{self, copositive_zeros, optimal_set, solve_stqp};
use stqp_core::families::family_verdict;
use stqp_core::fixtures;
use stqp_core::generators::{
    gap_m, gen_exact, gen_gap, gen_mgw, random_chordal_graph, random_graph, sample_exact,
    sample_gap,
};
use stqp_core::graph::{
    clique_bounds, convexity_graph, is_perfect, is_spn_completable, spn_completable_exactness,
    theta, theta_prime, CompletableVerdict, Graph,
};
use stqp_core::relax::{classify_exactness, ell, is_spn, Exactness};
use stqp_core::SymMatrix;

use common::*;

// pinned tolerances
const HORN_ELL: f64 = -0.1056;
const APPROX_TOL: f64 = 1e-3;
const DECIMAL_TOL: f64 = 1e-5;
const NU_TOL: f64 = 1e-9;
const ELL_TOL: f64 = 1e-5;
const GAP_MIN: f64 = 1e-4;
const THETA_PRODUCT_TOL: f64 = 1e-4;
const PERFECT_TOL: f64 = 1e-5;
const WEAK_DUALITY_TOL: f64 = 1e-6;
const SANDWICH_TOL: f64 = 1e-6;
const GRID_DEN: usize = 24;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn supports_of(q: &SymMatrix, tol: f64) -> Result<BTreeSet<Vec<usize>>, String> {
    Ok(optimal_set(q, tol)
        .map_err(err)?
        .iter()
        .map(|x| x.support())
        .collect())
}

fn criterion_1() -> Outcome {
    let h = fixtures::horn();
    let nu = exact::nu(&h).map_err(err)?;
    let l = ell(&h).map_err(err)?.ell;
    let rep = classify_exactness(&h).map_err(err)?;
    ensure((l - HORN_ELL).abs() <= APPROX_TOL, || format!("ell(H) = {l}"))?;
    ensure(nu.abs() <= NU_TOL, || format!("nu(H) = {nu}"))?;
    ensure(rep.verdict == Exactness::PositiveGap, || {
        format!("verdict {:?}", rep.verdict)
    })?;
    Ok(format!("ell(H) = {l:.6}, nu(H) = {nu:.1e}, positive gap"))
}

fn families_of(q: &SymMatrix) -> Result<(bool, bool, bool), String> {
    let f = family_verdict(q).map_err(err)?;
    Ok((f.in_q1, f.in_q2, f.in_q3))
}

fn check_exact_example(
    name: &str,
    q: &SymMatrix,
    value: f64,
    families: (bool, bool, bool),
) -> Result<(), String> {
    let rep = classify_exactness(q).map_err(err)?;
    ensure((rep.nu - value).abs() <= DECIMAL_TOL, || format!("{name}: nu = {}", rep.nu))?;
    ensure((rep.ell - value).abs() <= DECIMAL_TOL, || format!("{name}: ell = {}", rep.ell))?;
    ensure(rep.verdict == Exactness::Exact, || format!("{name}: verdict {:?}", rep.verdict))?;
    let f = families_of(q)?;
    ensure(f == families, || format!("{name}: families {f:?}"))
}

fn criterion_2() -> Outcome {
    let ex1 = fixtures::example1();
    check_exact_example("Example 1", &ex1, 0.0, (true, false, false))?;
    let omega = supports_of(&ex1, NU_TOL)?;
    ensure(omega == BTreeSet::from([vec![0]]), || format!("Example 1: supports {omega:?}"))?;
    check_exact_example("Example 2", &fixtures::example2(), 0.4, (false, true, false))?;
    check_exact_example("Example 3", &fixtures::example3(), 0.5, (false, false, true))?;
    check_exact_example("Example 4", &fixtures::example4(), 1.0, (false, false, false))?;

    let b5 = clique_bounds(&fixtures::example5()).map_err(err)?;
    ensure((b5.ell_full - 0.4472).abs() <= APPROX_TOL, || format!("Example 5: ell {}", b5.ell_full))?;
    ensure((b5.nu_full - 0.4872).abs() <= APPROX_TOL, || format!("Example 5: nu {}", b5.nu_full))?;
    ensure(b5.first_tight && !b5.second_tight, || "Example 5: tightness".into())?;

    let b6 = clique_bounds(&fixtures::example6()).map_err(err)?;
    ensure((b6.ell_full - 0.4472).abs() <= APPROX_TOL, || format!("Example 6: ell {}", b6.ell_full))?;
    ensure((b6.nu_full - 0.4872).abs() <= APPROX_TOL, || format!("Example 6: nu {}", b6.nu_full))?;
    ensure(!b6.first_tight && b6.second_tight, || "Example 6: tightness".into())?;
    let cl: Vec<Vec<usize>> = b6.cliques.iter().map(|r| r.clique.clone()).collect();
    let expect = vec![vec![0, 1, 2], vec![0, 4], vec![2, 3], vec![3, 4]];
    ensure(cl == expect, || format!("Example 6: cliques {cl:?}"))?;

    let q7 = fixtures::example7();
    let g7 = convexity_graph(&q7).map_err(err)?;
    ensure(is_spn_completable(&g7).map_err(err)?.0, || "Example 7: graph not completable".into())?;
    let b7 = clique_bounds(&q7).map_err(err)?;
    ensure(
        (b7.ell_min_clique - 1.0).abs() <= DECIMAL_TOL && (b7.nu_full - 1.0).abs() <= DECIMAL_TOL,
        || format!("Example 7: {} {}", b7.ell_min_clique, b7.nu_full),
    )?;
    let v7 = spn_completable_exactness(&q7).map_err(err)?;
    ensure(v7 == CompletableVerdict::Exact, || format!("Example 7: {v7:?}"))?;
    ensure(
        classify_exactness(&q7).map_err(err)?.verdict == Exactness::Exact,
        || "Example 7: not classified exact".into(),
    )?;

    let q8 = fixtures::example8();
    let rep8 = classify_exactness(&q8).map_err(err)?;
    ensure(
        (rep8.nu - 2.0 / 3.0).abs() <= DECIMAL_TOL && (rep8.ell - 2.0 / 3.0).abs() <= DECIMAL_TOL,
        || format!("Example 8: nu {} ell {}", rep8.nu, rep8.ell),
    )?;
    let g8 = convexity_graph(&q8).map_err(err)?;
    ensure(!is_spn_completable(&g8).map_err(err)?.0, || "Example 8: graph completable".into())?;
    Ok("Examples 1 to 8 match".into())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let n = rng.random_range(2..=4);
        let q = random_symmetric(n, -2.0, 2.0, &mut rng);
        let rep = classify_exactness(&q).map_err(err)?;
        let rel = rep.gap.abs() / rep.nu.abs().max(1.0);
        worst = worst.max(rel);
        ensure(rep.verdict == Exactness::Exact && rel <= ELL_TOL, || {
            format!("instance {k} (n = {n}): {:?}, gap {}", rep.verdict, rep.gap)
        })?;
    }
    Ok(format!("500/500 exact, worst relative gap {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_ell, mut worst_nu): (f64, f64) = (0.0, 0.0);
    for k in 0..100 {
        let r = sample_exact(6, &mut rng);
        let q = gen_exact(&r).map_err(err)?;
        let nu = exact::nu(&q).map_err(err)?;
        let l = ell(&q).map_err(err)?.ell;
        worst_ell = worst_ell.max((l - r.lambda).abs());
        worst_nu = worst_nu.max((nu - r.lambda).abs());
        ensure((l - r.lambda).abs() <= ELL_TOL && (nu - r.lambda).abs() <= NU_TOL, || {
            format!("exact instance {k}: lambda {} nu {nu} ell {l}", r.lambda)
        })?;
    }
    let mut min_gap = f64::INFINITY;
    for k in 0..100 {
        let n = 5 + k % 3;
        let r = sample_gap(n, &mut rng).map_err(err)?;
        let q = gen_gap(&r).map_err(err)?;
        let nu = exact::nu(&q).map_err(err)?;
        let l = ell(&q).map_err(err)?.ell;
        min_gap = min_gap.min(nu - l);
        ensure((nu - r.lambda).abs() <= NU_TOL, || {
            format!("gap instance {k}: nu {nu} lambda {}", r.lambda)
        })?;
        ensure(nu - l >= GAP_MIN, || format!("gap instance {k}: gap {}", nu - l))?;
        let m = gap_m(&r).map_err(err)?;
        let zeros: BTreeSet<Vec<usize>> = copositive_zeros(&m, NU_TOL)
            .map_err(err)?
            .iter()
            .map(|x| x.support())
            .collect();
        let opt = supports_of(&q, NU_TOL)?;
        ensure(zeros == opt, || format!("gap instance {k}: {zeros:?} vs {opt:?}"))?;
    }
    Ok(format!(
        "exact: max |ell - lambda| {worst_ell:.1e}, max |nu - lambda| {worst_nu:.1e}; gap: min gap {min_gap:.4}"
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut graphs: Vec<Graph> = vec![
        Graph::cycle(5).map_err(err)?,
        Graph::cycle(7).map_err(err)?,
        Graph::cycle(7).map_err(err)?.complement(),
    ];
    while graphs.len() < 50 {
        let n = rng.random_range(3..=8);
        graphs.push(random_graph(n, 0.5, &mut rng).map_err(err)?);
    }
    let (mut worst, mut imperfect): (f64, usize) = (0.0, 0);
    for (k, g) in graphs.iter().enumerate() {
        let w: Vec<f64> = (0..g.n()).map(|_| rng.random_range(0.5..3.0)).collect();
        let q = gen_mgw(g, &w, None).map_err(err)?;
        let l = ell(&q).map_err(err)?.ell;
        let tp = theta_prime(&g.complement(), &w).map_err(err)?;
        let dev = (l * tp - 1.0).abs();
        worst = worst.max(dev);
        if !is_perfect(g).map_err(err)?.0 {
            imperfect += 1;
        }
        ensure(dev <= THETA_PRODUCT_TOL, || format!("pair {k}: ell * theta' = {}", l * tp))?;
    }
    ensure(imperfect > 0, || "no imperfect graph sampled".into())?;
    Ok(format!("50 pairs ({imperfect} imperfect), max |ell theta' - 1| {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for k in 0..30 {
        let n = rng.random_range(4..=10);
        let g = random_chordal_graph(n, &mut rng).map_err(err)?;
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        let omega = brute_omega(&g, &w);
        let gbar = g.complement();
        let tp = theta_prime(&gbar, &w).map_err(err)?;
        let t = theta(&gbar, &w).map_err(err)?;
        worst = worst.max((omega - tp).abs()).max((omega - t).abs());
        ensure((omega - tp).abs() <= PERFECT_TOL && (omega - t).abs() <= PERFECT_TOL, || {
            format!("graph {k}: omega {omega} theta' {tp} theta {t}")
        })?;
    }
    Ok(format!("30 chordal graphs, max deviation {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..300 {
        let n = rng.random_range(3..=7);
        let q = random_symmetric(n, -2.0, 2.0, &mut rng);
        let s = solve_stqp(&q).map_err(err)?;
        let l = ell(&q).map_err(err)?.ell;
        ensure(l <= s.nu + WEAK_DUALITY_TOL, || format!("instance {k}: ell {l} > nu {}", s.nu))?;

        // shift invariance
        let lambda = rng.random_range(-3.0..3.0);
        let qs = q.shift(lambda);
        let ss = solve_stqp(&qs).map_err(err)?;
        let ls = ell(&qs).map_err(err)?.ell;
        ensure((ss.nu - s.nu - lambda).abs() <= NU_TOL * (1.0 + lambda.abs()), || {
            format!("instance {k}: shifted nu {} vs {}", ss.nu, s.nu + lambda)
        })?;
        ensure((ls - l - lambda).abs() <= ELL_TOL, || {
            format!("instance {k}: shifted ell {ls} vs {}", l + lambda)
        })?;
        let sup = |r: &exact::SolveResult| -> Vec<Vec<usize>> {
            r.minimizers.iter().map(|x| x.support()).collect()
        };
        ensure(sup(&s) == sup(&ss), || format!("instance {k}: shifted supports differ"))?;
        ensure(
            convexity_graph(&q).map_err(err)? == convexity_graph(&qs).map_err(err)?,
            || format!("instance {k}: shifted convexity graph differs"),
        )?;

        // permutation equivariance: (Q_perm)_{ij} = Q_{perm i, perm j}
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let qp = q.permute(&perm).map_err(err)?;
        let sp = solve_stqp(&qp).map_err(err)?;
        let mut mapped: Vec<Vec<usize>> = sp
            .minimizers
            .iter()
            .map(|x| {
                let mut v: Vec<usize> = x.support().iter().map(|&i| perm[i]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        mapped.sort();
        ensure(mapped == sup(&s), || format!("instance {k}: permuted supports differ"))?;

        // some minimizer is supported on a clique of the convexity graph
        let g = convexity_graph(&q).map_err(err)?;
        ensure(s.minimizers.iter().any(|x| is_clique(&g, &x.support())), || {
            format!("instance {k}: no minimizer on a clique")
        })?;
        let direct = convexity_edges(&q);
        ensure(g.edges() == direct, || format!("instance {k}: convexity edges differ"))?;

        // ell <= min_C ell(Q_CC) <= min_C nu(Q_CC) = nu
        let b = clique_bounds(&q).map_err(err)?;
        ensure(
            b.ell_full <= b.ell_min_clique + SANDWICH_TOL
                && b.ell_min_clique <= b.nu_min_clique + SANDWICH_TOL
                && (b.nu_min_clique - b.nu_full).abs() <= SANDWICH_TOL,
            || format!("instance {k}: clique bounds {b:?}"),
        )?;
    }
    Ok("300 instances: weak duality, shift, permutation, clique support, clique bounds".into())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let q = random_symmetric(5, -2.0, 2.0, &mut rng);
        let nu = exact::nu(&q).map_err(err)?;
        let gmin = grid_min(&q, GRID_DEN);
        let slack = grid_slack(&q, nu, GRID_DEN);
        worst = worst.max(gmin - nu);
        ensure(gmin >= nu - NU_TOL && gmin - nu <= slack + NU_TOL, || {
            format!("instance {k}: nu {nu}, grid {gmin}, slack {slack}")
        })?;
    }
    let mut unknown = 0;
    let cases = all_sign_matrices_3x3();
    for m in &cases {
        let oracle = spn_oracle_3x3(m);
        if oracle == SpnOracle::Unknown {
            unknown += 1;
            continue;
        }
        let cert = is_spn(m).map_err(err)?;
        ensure(cert.is_member() == (oracle == SpnOracle::Member), || {
            format!("SPN disagreement on {m:?}: oracle {oracle:?}, margin {}", cert.margin)
        })?;
    }
    ensure(unknown == 0, || format!("{unknown} 3x3 cases left undecided by the oracle"))?;
    Ok(format!(
        "grid: max nu gap {worst:.2e} on 100 instances; SPN: {} of {} sign matrices agree",
        cases.len(),
        cases.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Horn gap", criterion_1),
        ("example fixtures", criterion_2),
        ("Diananda collapse", criterion_3),
        ("generator soundness", criterion_4),
        ("theta' and ell identity", criterion_5),
        ("perfect graph collapse", criterion_6),
        ("property suites", criterion_7),
        ("oracle cross-check", criterion_8),
    ];
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("panicked".into())))
            .collect()
    });
    let mut failed = Vec::new();
    for (k, ((name, _), out)) in criteria.iter().zip(&outcomes).enumerate() {
        match out {
            Ok(msg) => println!("criterion {} ({name}): PASS  {msg}", k + 1),
            Err(msg) => {
                println!("criterion {} ({name}): FAIL  {msg}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
