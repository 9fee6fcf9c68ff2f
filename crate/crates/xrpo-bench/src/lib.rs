//! Criterion benchmarks for xrpo. See the `benches/` directory.
