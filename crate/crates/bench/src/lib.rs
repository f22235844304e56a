//! Criterion benchmarks for the controller and training loop live in `benches/`.
