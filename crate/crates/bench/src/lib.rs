//! Criterion benchmarks for doflab live in `benches/`.
