//! Standard quadratic optimization over the simplex and its doubly
//! nonnegative relaxation.

pub mod error;
pub mod exact;
pub mod families;
pub mod fixtures;
pub mod generators;
pub mod graph;
pub mod matrix;
pub mod relax;
pub mod sdp;

pub use error::{Error, Result};
pub use matrix::{quadratic_form, SimplexPoint, SymMatrix, DEFAULT_TOL_ZERO};
pub use exact::{nu, solve_stqp, ExactOptions, SolveResult};
pub use families::{family_verdict, FamilyVerdict};
pub use generators::{gen_exact, gen_gap, gen_mgw, Recipe, RecipeSpec};
pub use graph::{convexity_graph, Graph};
pub use relax::{classify_exactness, ell, is_spn, Exactness, ExactnessReport};
pub use sdp::{SolveStatus, SolverOptions};
