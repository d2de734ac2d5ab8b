//! Benchmark-only crate; the measurements live in `benches/core_ops.rs`.
//! Run with `cargo bench -p sigdetect-bench`.
