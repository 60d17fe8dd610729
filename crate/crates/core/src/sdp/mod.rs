//! Dense interior-point engine for linear programs over `PSD^n x R^m_+`.
//!
//! Every relaxation in the crate (the doubly nonnegative bound, the SPN
//! margin, both theta numbers) is phrased as a [`ConicProgram`] and handed to
//! [`solve_conic`].

mod ipm;
mod presolve;
mod program;

pub use ipm::{
    extract_dual_certificate, solve_conic, ConicSolution, IterationRecord, SolveStatus,
    SolverOptions,
};
pub use presolve::{remove_dependent_rows, Presolved};
pub use program::{ConicProgram, Constraint, SparseSym, MAX_PSD_DIM};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matrix::SymMatrix;

    fn dnn_program(q: &SymMatrix) -> ConicProgram {
        let n = q.n();
        let m = n * (n + 1) / 2;
        let mut prog = ConicProgram::new(q.clone(), vec![0.0; m]);
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

    #[test]
    fn trace_minimization_on_unit_sum() {
        let mut prog = ConicProgram::new(SymMatrix::identity(2), vec![]);
        prog.push(Constraint::new(&SymMatrix::ones(2), &[], 1.0));
        let sol = solve_conic(&prog, &SolverOptions::default()).unwrap();
        assert!(sol.is_converged());
        assert!((sol.primal_obj - 0.5).abs() < 1e-7, "{}", sol.primal_obj);
    }

    #[test]
    fn dnn_of_all_ones_is_one() {
        let prog = dnn_program(&SymMatrix::ones(5));
        let sol = solve_conic(&prog, &SolverOptions::default()).unwrap();
        assert!(sol.is_converged());
        assert!((sol.primal_obj - 1.0).abs() < 1e-7);
        let (y, s, _) = extract_dual_certificate(&sol, &prog).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-6);
        assert!(s.max_abs() < 1e-6);
    }

    #[test]
    fn dnn_of_horn() {
        let prog = dnn_program(&fixtures::horn());
        let sol = solve_conic(&prog, &SolverOptions::default()).unwrap();
        assert!(sol.is_converged(), "{:?}", sol.status);
        assert!((sol.dual_obj + 0.1056).abs() < 1e-3, "{}", sol.dual_obj);
    }

    #[test]
    fn solution_invariants_hold_when_converged() {
        let prog = dnn_program(&fixtures::example5());
        let sol = solve_conic(&prog, &SolverOptions::default()).unwrap();
        assert!(sol.is_converged());
        assert!(sol.primal_residual <= 1e-8 && sol.dual_residual <= 1e-8);
        assert!(sol.rel_gap <= 1e-7);
        assert!(sol.x.min_eigenvalue() >= -1e-9);
        assert!(sol.s_mat.min_eigenvalue() >= -1e-9);
        assert!(sol.z.iter().all(|&v| v >= -1e-9));
        assert!(sol.s_vec.iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn duplicate_rows_are_tolerated() {
        let mut prog = dnn_program(&fixtures::example2());
        prog.push(Constraint::new(&SymMatrix::ones(5), &[0.0; 15], 1.0));
        let sol = solve_conic(&prog, &SolverOptions::default()).unwrap();
        assert!(sol.is_converged());
        assert_eq!(sol.dropped_rows, vec![16]);
        assert!((sol.primal_obj - 0.4).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_rows_are_rejected() {
        let mut prog = dnn_program(&fixtures::example2());
        prog.push(Constraint::new(&SymMatrix::ones(5), &[], 2.0));
        assert!(matches!(
            solve_conic(&prog, &SolverOptions::default()),
            Err(crate::Error::InconsistentConstraints { .. })
        ));
    }

    #[test]
    fn asymmetric_constraint_rows_are_rejected() {
        let rows = vec![vec![1.0, 2.0], vec![0.0, 1.0]];
        assert!(Constraint::from_rows(&rows, &[], 1.0).is_err());
    }

    #[test]
    fn weak_duality_along_the_path() {
        let prog = dnn_program(&fixtures::example6());
        let sol = solve_conic(&prog, &SolverOptions::default()).unwrap();
        for r in &sol.trace {
            if r.primal_residual < 1e-6 && r.dual_residual < 1e-6 {
                assert!(r.primal_obj >= r.dual_obj - 1e-6, "{r:?}");
            }
        }
    }

    #[test]
    fn objective_scaling_scales_the_value() {
        let prog = dnn_program(&fixtures::example6());
        let base = solve_conic(&prog, &SolverOptions::default()).unwrap();
        let big = solve_conic(&prog.with_objective_scaled(1e3), &SolverOptions::default()).unwrap();
        assert!(base.is_converged() && big.is_converged());
        let rel = (big.primal_obj - 1e3 * base.primal_obj).abs() / (1e3 * base.primal_obj.abs());
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn repeated_solves_are_identical() {
        let prog = dnn_program(&fixtures::example8());
        let a = solve_conic(&prog, &SolverOptions::default()).unwrap();
        let b = solve_conic(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.primal_obj.to_bits(), b.primal_obj.to_bits());
        assert_eq!(a.y, b.y);
    }
}
