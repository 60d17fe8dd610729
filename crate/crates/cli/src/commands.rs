use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stqp_core::exact::{self, check_kkt, check_second_order, ExactOptions, SecondOrder, EXACT_CAP_N};
use stqp_core::families::{family_verdict, FamilyVerdict};
use stqp_core::generators::{Recipe, RecipeSpec};
use stqp_core::graph::{
    clique_bounds, convexity_graph, is_perfect, is_spn_completable, max_weight_clique,
    maximal_cliques, spn_completable_exactness, theta, theta_prime, CliqueBounds,
    CompletableVerdict, Graph, OddHole, CYCLE_CAP_N,
};
use stqp_core::relax::{self, classify_exactness, Exactness, ExactnessReport, SolverStats};
use stqp_core::sdp::MAX_PSD_DIM;
use stqp_core::{Error, SymMatrix};

use crate::output::{emit, to_json, write_atomic, SCHEMA};
use crate::{Failure, Usage};

pub struct Ctx {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub cap_n: Option<usize>,
    pub json_out: Option<PathBuf>,
    pub verbose: bool,
}

impl Ctx {
    fn cap(&self, module_max: usize) -> Result<usize> {
        match self.cap_n {
            Some(c) if c > module_max => {
                Err(Usage(format!("--cap-n {c} exceeds the maximum of {module_max}")).into())
            }
            Some(c) => Ok(c),
            None => Ok(module_max),
        }
    }

    fn check_size(&self, what: &'static str, size: usize, module_max: usize) -> Result<()> {
        let cap = self.cap(module_max)?;
        if size > cap {
            return Err(Error::CapExceeded { what, size, cap }.into());
        }
        Ok(())
    }

    fn emit<T: Serialize>(&self, value: &T) -> Result<()> {
        emit(value, self.json_out.as_deref())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())).into())
}

pub fn load_matrix(path: &Path) -> Result<SymMatrix> {
    SymMatrix::parse_text(&read(path)?)
        .map_err(|e| Usage(format!("{}: {e}", path.display())).into())
}

fn load_graph(path: &Path) -> Result<Graph> {
    Graph::from_json(&read(path)?).map_err(|e| Usage(format!("{}: {e}", path.display())).into())
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

#[derive(Serialize)]
struct Kkt {
    s: Vec<f64>,
    second_order: SecondOrder,
}

#[derive(Serialize)]
struct Minimizer {
    x: Vec<f64>,
    support: Vec<usize>,
    value: f64,
    kkt: Option<Kkt>,
}

#[derive(Serialize)]
struct SolveReport {
    schema: u32,
    command: &'static str,
    n: usize,
    nu: f64,
    minimizers: Vec<Minimizer>,
}

pub fn solve(ctx: &Ctx, path: &Path) -> Result<()> {
    let q = load_matrix(path)?;
    ctx.check_size("matrix dimension", q.n(), EXACT_CAP_N)?;
    let mut opts = ExactOptions::default();
    if let Some(t) = ctx.tol {
        opts.tol = t;
    }
    let res = exact::solve_stqp_with(&q, &opts)?;
    let kkt_tol = opts.tol.max(1e-9) * q.max_abs().max(1.0);
    let mut minimizers = Vec::new();
    for x in &res.minimizers {
        let kkt = match check_kkt(&q, x, kkt_tol)? {
            Some(cert) => Some(Kkt {
                second_order: check_second_order(&q, &cert, kkt_tol)?,
                s: cert.s,
            }),
            None => None,
        };
        minimizers.push(Minimizer {
            x: x.coords().to_vec(),
            support: one_based(&x.support()),
            value: q.quad(x.coords()),
            kkt,
        });
    }
    ctx.emit(&SolveReport {
        schema: SCHEMA,
        command: "solve",
        n: q.n(),
        nu: res.nu,
        minimizers,
    })
}

#[derive(Serialize)]
struct RelaxReport {
    schema: u32,
    command: &'static str,
    n: usize,
    ell: f64,
    sigma: f64,
    #[serde(rename = "X")]
    x: SymMatrix,
    #[serde(rename = "P")]
    p: SymMatrix,
    #[serde(rename = "N")]
    n_mat: SymMatrix,
    solver: SolverStats,
}

pub fn relax(ctx: &Ctx, path: &Path) -> Result<()> {
    let q = load_matrix(path)?;
    ctx.check_size("matrix dimension", q.n(), MAX_PSD_DIM)?;
    let mut opts = relax::relax_options();
    if let Some(t) = ctx.tol {
        opts.gap_tol = t;
        opts.feas_tol = t;
    }
    opts.verbose = ctx.verbose;
    let r = relax::ell_with(&q, &opts)?;
    if !r.is_converged() {
        log::warn!("relaxation ended with {:?}", r.stats.status);
    }
    let (p, n_mat) = r.spn_split;
    ctx.emit(&RelaxReport {
        schema: SCHEMA,
        command: "relax",
        n: q.n(),
        ell: r.ell,
        sigma: r.dual_sigma,
        x: r.primal_x,
        p,
        n_mat,
        solver: r.stats,
    })
}

#[derive(Serialize)]
struct GraphAnalysis {
    /// 1-based vertex pairs.
    edges: Vec<(usize, usize)>,
    perfect: bool,
    odd_hole: Option<OddHole>,
    spn_completable: bool,
    /// Odd cycle that is not a clique, when completability fails.
    odd_cycle: Option<Vec<usize>>,
    maximal_cliques: Vec<Vec<usize>>,
}

fn analyze(g: &Graph) -> Result<GraphAnalysis> {
    let (perfect, odd_hole) = is_perfect(g)?;
    let (spn_completable, odd_cycle) = is_spn_completable(g)?;
    Ok(GraphAnalysis {
        edges: g.edges().iter().map(|&(i, j)| (i + 1, j + 1)).collect(),
        perfect,
        odd_hole: odd_hole.map(|h| OddHole {
            cycle: one_based(&h.cycle),
            ..h
        }),
        spn_completable,
        odd_cycle: odd_cycle.map(|c| one_based(&c)),
        maximal_cliques: maximal_cliques(g)?.iter().map(|c| one_based(c)).collect(),
    })
}

#[derive(Serialize)]
struct MatrixGraphReport {
    #[serde(flatten)]
    graph: GraphAnalysis,
    bounds: CliqueBounds,
    completable_exactness: CompletableVerdict,
}

fn analyze_matrix(q: &SymMatrix) -> Result<MatrixGraphReport> {
    let g = convexity_graph(q)?;
    let mut bounds = clique_bounds(q)?;
    for row in &mut bounds.cliques {
        row.clique = one_based(&row.clique);
    }
    let completable_exactness = match spn_completable_exactness(q)? {
        CompletableVerdict::Inapplicable { odd_cycle } => CompletableVerdict::Inapplicable {
            odd_cycle: one_based(&odd_cycle),
        },
        v => v,
    };
    Ok(MatrixGraphReport {
        graph: analyze(&g)?,
        bounds,
        completable_exactness,
    })
}

#[derive(Serialize)]
struct ClassifyReport {
    schema: u32,
    command: &'static str,
    exactness: ExactnessReport,
    families: FamilyVerdict,
    graph: MatrixGraphReport,
}

pub fn classify(ctx: &Ctx, path: &Path) -> Result<()> {
    let q = load_matrix(path)?;
    ctx.check_size("matrix dimension", q.n(), EXACT_CAP_N)?;
    ctx.emit(&ClassifyReport {
        schema: SCHEMA,
        command: "classify",
        exactness: classify_exactness(&q)?,
        families: family_verdict(&q)?,
        graph: analyze_matrix(&q)?,
    })
}

#[derive(Serialize)]
struct AnalyzeReport {
    schema: u32,
    command: &'static str,
    n: usize,
    #[serde(flatten)]
    graph: GraphAnalysis,
    bounds: Option<CliqueBounds>,
    completable_exactness: Option<CompletableVerdict>,
}

/// Accepts a matrix file, analyzed through its convexity graph, or a graph
/// JSON file.
pub fn analyze_graph(ctx: &Ctx, path: &Path, dot: Option<&Path>) -> Result<()> {
    let text = read(path)?;
    let (g, matrix_part) = if text.trim_start().starts_with('{') {
        let g = load_graph(path)?;
        ctx.check_size("graph order", g.n(), CYCLE_CAP_N)?;
        (g, None)
    } else {
        let q = load_matrix(path)?;
        ctx.check_size("matrix dimension", q.n(), EXACT_CAP_N)?;
        let m = analyze_matrix(&q)?;
        (convexity_graph(&q)?, Some(m))
    };
    if let Some(d) = dot {
        write_atomic(d, &g.to_dot())?;
    }
    let report = match matrix_part {
        Some(m) => AnalyzeReport {
            schema: SCHEMA,
            command: "analyze-graph",
            n: g.n(),
            graph: m.graph,
            bounds: Some(m.bounds),
            completable_exactness: Some(m.completable_exactness),
        },
        None => AnalyzeReport {
            schema: SCHEMA,
            command: "analyze-graph",
            n: g.n(),
            graph: analyze(&g)?,
            bounds: None,
            completable_exactness: None,
        },
    };
    ctx.emit(&report)
}

const SANDWICH_TOL: f64 = 1e-6;

#[derive(Serialize)]
struct ThetaReport {
    schema: u32,
    command: &'static str,
    n: usize,
    weights: Vec<f64>,
    omega: f64,
    clique: Vec<usize>,
    theta: f64,
    theta_prime: f64,
    /// `omega <= theta' <= theta` up to `tol`.
    sandwich_holds: bool,
    tol: f64,
}

pub fn theta_cmd(ctx: &Ctx, path: &Path, weights: Option<Vec<f64>>) -> Result<()> {
    let g = load_graph(path)?;
    ctx.check_size("graph order", g.n(), MAX_PSD_DIM.min(32))?;
    let w = weights.unwrap_or_else(|| vec![1.0; g.n()]);
    if w.len() != g.n() {
        return Err(Usage(format!("expected {} weights, found {}", g.n(), w.len())).into());
    }
    let (clique, omega) = max_weight_clique(&g, &w).map_err(|e| match e {
        Error::InvalidInput(m) => anyhow!(Usage(m)),
        e => e.into(),
    })?;
    let gbar = g.complement();
    let t = theta(&gbar, &w)?;
    let tp = theta_prime(&gbar, &w)?;
    let tol = SANDWICH_TOL * t.abs().max(1.0);
    let sandwich_holds = omega <= tp + tol && tp <= t + tol;
    ctx.emit(&ThetaReport {
        schema: SCHEMA,
        command: "theta",
        n: g.n(),
        weights: w,
        omega,
        clique: one_based(&clique),
        theta: t,
        theta_prime: tp,
        sandwich_holds,
        tol,
    })?;
    if !sandwich_holds {
        bail!(Failure(format!(
            "sandwich inequality fails: omega {omega}, theta' {tp}, theta {t}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Instance {
    file: String,
    recipe_file: String,
    kind: &'static str,
    n: usize,
    promise: String,
    nu: f64,
    ell: f64,
    verdict: Exactness,
    pass: bool,
    detail: Option<String>,
}

#[derive(Serialize)]
struct Manifest {
    schema: u32,
    command: &'static str,
    seed: u64,
    count: usize,
    passed: usize,
    failed: usize,
    instances: Vec<Instance>,
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// Checks the instance against what its recipe guarantees.
fn verify(recipe: &Recipe, q: &SymMatrix) -> Result<(String, ExactnessReport, Option<String>)> {
    let rep = classify_exactness(q)?;
    let (promise, problem) = match recipe {
        Recipe::Exact(r) => {
            let mut p = None;
            if rep.verdict != Exactness::Exact {
                p = Some(format!("verdict {:?}", rep.verdict));
            } else if !close(rep.nu, r.lambda, 1e-9) {
                p = Some(format!("nu {} differs from lambda {}", rep.nu, r.lambda));
            }
            (format!("exact with nu = ell = {}", r.lambda), p)
        }
        Recipe::Gap(r) => {
            let mut p = None;
            if rep.verdict != Exactness::PositiveGap {
                p = Some(format!("verdict {:?}", rep.verdict));
            } else if !close(rep.nu, r.lambda, 1e-9) {
                p = Some(format!("nu {} differs from lambda {}", rep.nu, r.lambda));
            }
            (format!("positive gap with nu = {}", r.lambda), p)
        }
        Recipe::Mgw(r) => {
            let (_, omega) = max_weight_clique(&r.graph, &r.w)?;
            let tp = theta_prime(&r.graph.complement(), &r.w)?;
            let mut p = None;
            if !close(rep.nu, 1.0 / omega, 1e-9) {
                p = Some(format!("nu {} differs from 1/omega {}", rep.nu, 1.0 / omega));
            } else if (rep.ell * tp - 1.0).abs() > 1e-4 {
                p = Some(format!("ell * theta' = {}", rep.ell * tp));
            }
            ("nu = 1/omega and ell = 1/theta'".to_string(), p)
        }
    };
    Ok((promise, rep, problem))
}

pub fn generate(ctx: &Ctx, path: &Path, count: usize, out_dir: &Path) -> Result<()> {
    let spec: RecipeSpec = serde_json::from_str(&read(path)?)
        .map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let seed = ctx.seed.or(spec.seed).unwrap_or(0);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut instances = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let recipe = spec.resolve(&mut rng).map_err(|e| Usage(e.to_string()))?;
        ctx.check_size("matrix dimension", recipe.n(), EXACT_CAP_N)?;
        let q = recipe.build().map_err(|e| Usage(e.to_string()))?;
        let file = format!("instance_{i:03}.txt");
        let recipe_file = format!("instance_{i:03}.recipe.json");
        write_atomic(&out_dir.join(&file), &q.to_text())?;
        write_atomic(&out_dir.join(&recipe_file), &to_json(&recipe)?)?;
        let (promise, rep, detail) = verify(&recipe, &q)?;
        log::info!("{file}: {:?}, nu {}, ell {}", rep.verdict, rep.nu, rep.ell);
        instances.push(Instance {
            file,
            recipe_file,
            kind: match recipe {
                Recipe::Exact(_) => "exact",
                Recipe::Gap(_) => "gap",
                Recipe::Mgw(_) => "mgw",
            },
            n: q.n(),
            promise,
            nu: rep.nu,
            ell: rep.ell,
            verdict: rep.verdict,
            pass: detail.is_none(),
            detail,
        });
    }
    let failed: Vec<String> = instances
        .iter()
        .filter(|i| !i.pass)
        .map(|i| format!("{} ({})", i.file, i.detail.as_deref().unwrap_or("")))
        .collect();
    let manifest = Manifest {
        schema: SCHEMA,
        command: "generate",
        seed,
        count,
        passed: count - failed.len(),
        failed: failed.len(),
        instances,
    };
    write_atomic(&out_dir.join("manifest.json"), &to_json(&manifest)?)?;
    ctx.emit(&manifest)?;
    if !failed.is_empty() {
        bail!(Failure(format!("verification failed: {}", failed.join(", "))));
    }
    Ok(())
}
