//! Criterion benchmarks for the kernel, sampler and walker hot paths.
//! Run with `cargo bench -p dirheat-bench`.
