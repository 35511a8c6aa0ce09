//! Criterion benchmarks for the iQCC kernels; see `benches/`.
