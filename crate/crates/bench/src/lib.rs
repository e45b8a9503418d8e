//! Benchmarks for the slab solver live in `benches/`.
