//! Shared fixtures for the benchmark targets.

use gaze_core::baselines::{IpStridePrefetcher, NAccessConfig, NAccessPrefetcher, NextLinePrefetcher};
use gaze_core::gaze::{GazeConfig, GazePrefetcher};
use gaze_core::memsys::NullPrefetcher;
use gaze_core::trace::{MemoryAccess, TraceSpec};
use gaze_core::Prefetcher;

pub const PREFETCHERS: &[&str] = &["none", "next-line", "ip-stride", "n-access:2", "gaze"];

pub fn build(name: &str) -> Box<dyn Prefetcher> {
    match name {
        "none" => Box::new(NullPrefetcher),
        "next-line" => Box::new(NextLinePrefetcher::default()),
        "ip-stride" => Box::new(IpStridePrefetcher::default()),
        "n-access:2" => Box::new(NAccessPrefetcher::new(NAccessConfig::new(2))),
        "gaze" => Box::new(GazePrefetcher::new(GazeConfig::default())),
        other => panic!("unknown prefetcher {other}"),
    }
}

pub fn mixed_trace(length: usize) -> Vec<MemoryAccess> {
    TraceSpec::BfsMixed { length, frontier_density: 0.5, seed: 1, instr_step: 1 }
        .generate()
        .unwrap()
}

pub fn streaming_trace(length: usize) -> Vec<MemoryAccess> {
    TraceSpec::Streaming { length, start: 0x100000, instr_step: 1 }.generate().unwrap()
}
