//! Criterion benchmarks for the sampling pipeline live in `benches/`.
