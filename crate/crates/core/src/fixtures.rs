//! Reference instances with known optimal values and relaxation bounds.
//!
//! The same matrices ship as text files under `crates/core/fixtures/`.

use crate::matrix::SymMatrix;

fn from_rows(rows: [[f64; 5]; 5]) -> SymMatrix {
    SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("fixture matrices are symmetric")
}

/// Minimum entry on the diagonal; `nu = ell = 0`, optimal set `{e_1}`.
pub fn example1() -> SymMatrix {
    from_rows([
        [0., 1., 3., 2., 0.],
        [1., 3., 1., 3., 2.],
        [3., 1., 2., 1., 3.],
        [2., 3., 1., 1., 0.],
        [0., 2., 3., 0., 1.],
    ])
}

/// Positive semidefinite; `nu = ell = 0.4` at `[0.2, 0, 0.4, 0.4, 0]`.
pub fn example2() -> SymMatrix {
    from_rows([
        [2., 0., 0., 0., 0.],
        [0., 2., 1., 0., 0.],
        [0., 1., 1., 0., 0.],
        [0., 0., 0., 1., 1.],
        [0., 0., 0., 1., 1.],
    ])
}

/// Member of `M(G, e)` for the single-edge graph `{(4,5)}`; `nu = ell = 1/2`.
pub fn example3() -> SymMatrix {
    from_rows([
        [1., 1., 1., 1., 1.],
        [1., 1., 1., 1., 1.],
        [1., 1., 1., 1., 1.],
        [1., 1., 1., 1., 0.],
        [1., 1., 1., 0., 1.],
    ])
}

/// Exact (`nu = ell = 1`) but outside all three families.
pub fn example4() -> SymMatrix {
    from_rows([
        [2., 2., 2., 2., 2.],
        [2., 2., 2., 2., 2.],
        [2., 2., 2., 1., 2.],
        [2., 2., 1., 2., 0.],
        [2., 2., 2., 0., 2.],
    ])
}

/// Complete convexity graph; `ell ~ 0.4472 < nu ~ 0.4872`.
pub fn example5() -> SymMatrix {
    from_rows([
        [1., 0., 0.9, 0.9, 0.],
        [0., 1., 0., 0.9, 0.9],
        [0.9, 0., 1., 0., 0.9],
        [0.9, 0.9, 0., 1., 0.],
        [0., 0.9, 0.9, 0., 1.],
    ])
}

/// Convexity graph with maximal cliques {1,2,3}, {1,5}, {3,4}, {4,5}.
pub fn example6() -> SymMatrix {
    from_rows([
        [1., 0., 0.9, 1., 0.],
        [0., 1., 0., 1., 1.],
        [0.9, 0., 1., 0., 1.],
        [1., 1., 0., 1., 0.],
        [0., 1., 1., 0., 1.],
    ])
}

/// Same matrix as [`example4`]; its convexity graph is SPN completable.
pub fn example7() -> SymMatrix {
    example4()
}

/// Exact with `nu = ell = 2/3`, convexity graph not SPN completable.
pub fn example8() -> SymMatrix {
    from_rows([
        [2., 0., 0., 2., 1.],
        [0., 2., 0., 2., 2.],
        [0., 0., 2., 0., 2.],
        [2., 2., 0., 2., 0.],
        [1., 2., 2., 0., 2.],
    ])
}

/// The Horn matrix: copositive, on the boundary of the copositive cone, not SPN.
pub fn horn() -> SymMatrix {
    from_rows([
        [1., -1., 1., 1., -1.],
        [-1., 1., -1., 1., 1.],
        [1., -1., 1., -1., 1.],
        [1., 1., -1., 1., -1.],
        [-1., 1., 1., -1., 1.],
    ])
}

/// All bundled fixtures by file stem.
pub fn all() -> Vec<(&'static str, SymMatrix)> {
    vec![
        ("ex1", example1()),
        ("ex2", example2()),
        ("ex3", example3()),
        ("ex4", example4()),
        ("ex5", example5()),
        ("ex6", example6()),
        ("ex7", example7()),
        ("ex8", example8()),
        ("horn", horn()),
    ]
}
