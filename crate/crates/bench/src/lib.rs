//! Criterion benchmarks for the numerical kernels; the code lives in `benches/kernels.rs`.
