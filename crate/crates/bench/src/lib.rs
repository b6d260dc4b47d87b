//! Criterion benchmarks for the shot-geometry engine; see `benches/`.
