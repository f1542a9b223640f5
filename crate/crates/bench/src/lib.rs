//! Criterion benchmarks for the hot paths of `bernsim-core`; see `benches/`.
