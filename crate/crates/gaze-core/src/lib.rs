//! Trace-driven simulation of the Gaze spatial prefetcher.
//!
//! The crate provides the pieces of a desk-scale prefetching study: trace
//! formats and synthetic generators, a simplified three-level cache
//! hierarchy with a cycle-proxy timing model, the Gaze prefetcher with its
//! streaming control, comparison prefetchers, and the evaluation metrics.

pub mod baselines;
pub mod footprint;
pub mod gaze;
pub mod memsys;
pub mod metrics;
pub mod rng;
pub mod sim;
pub mod trace;

pub use footprint::{Footprint, PrefetchPattern};
pub use memsys::{
    AccessOutcome, CacheConfig, FillLevel, Hierarchy, HierarchyConfig, HitKind, IssueResult,
    NullPrefetcher, Prefetcher, PrefetchRequest, ServiceLevel,
};
pub use metrics::{late_fraction, llc_coverage, overall_accuracy, speedup, RunReport};
pub use trace::{MemoryAccess, TraceFormat, TraceSpec};
