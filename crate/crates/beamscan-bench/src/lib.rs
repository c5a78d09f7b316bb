//! Benchmark-only crate; benches/pipeline.rs times the beamscan hot paths
//! (correlation, GLRT, threshold calibration, cluster projection).
