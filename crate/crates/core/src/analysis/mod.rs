//! Experiment harness: sweeps, exponent fits, pseudoconvexity probes and
//! regularity diagnostics for holomorphic maps.

pub mod fit;
pub mod mapping;
pub mod probe;
pub mod sweep;
