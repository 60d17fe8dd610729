//! Benchmark harness for the solver crates; see `benches/`.
