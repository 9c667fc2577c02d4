//! Simplified three-level cache hierarchy with prefetch support.
//!
//! The hierarchy walks L1D, then the in-flight prefetch set, then L2C, LLC
//! and memory. Demand fills are inclusive; prefetch fills go to the
//! requested level plus the LLC. Timing is an in-order cycle proxy: each
//! demand access advances the clock by one base cycle plus whatever the
//! outcome cost beyond an L1D hit.

mod cache;
mod hierarchy;

pub use cache::Cache;
pub use hierarchy::Hierarchy;

use crate::trace::MemoryAccess;

/// Geometry and latency of one cache level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub capacity_bytes: usize,
    pub associativity: usize,
    pub block_bytes: usize,
    pub hit_latency: u64,
}

impl CacheConfig {
    pub fn new(capacity_bytes: usize, associativity: usize, block_bytes: usize, hit_latency: u64) -> Self {
        Self { capacity_bytes, associativity, block_bytes, hit_latency }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.block_bytes.is_power_of_two() {
            return Err(format!("block size {} is not a power of two", self.block_bytes));
        }
        if self.associativity == 0 {
            return Err("associativity must be nonzero".into());
        }
        if self.capacity_bytes == 0
            || !self.capacity_bytes.is_multiple_of(self.associativity * self.block_bytes)
        {
            return Err(format!(
                "capacity {} not divisible by associativity {} x block {}",
                self.capacity_bytes, self.associativity, self.block_bytes
            ));
        }
        Ok(())
    }

    pub fn sets(&self) -> usize {
        self.capacity_bytes / (self.associativity * self.block_bytes)
    }
}

/// Full hierarchy parameters. Defaults model a 48KB/12-way L1D,
/// 512KB/8-way L2C, 2MB/16-way LLC with a flat 200-cycle memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyConfig {
    pub l1d: CacheConfig,
    pub l2c: CacheConfig,
    pub llc: CacheConfig,
    pub mem_latency: u64,
    /// Bounded prefetch FIFO; overflow drops the newest request.
    pub queue_depth: usize,
    /// Requests moved from the queue into flight per demand access.
    pub queue_drain: usize,
    /// In-flight prefetch bound; when full, draining stalls.
    pub mshrs: usize,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            l1d: CacheConfig::new(48 * 1024, 12, 64, 5),
            l2c: CacheConfig::new(512 * 1024, 8, 64, 10),
            llc: CacheConfig::new(2 * 1024 * 1024, 16, 64, 20),
            mem_latency: 200,
            queue_depth: 32,
            queue_drain: 2,
            mshrs: 16,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.l1d.validate()?;
        self.l2c.validate()?;
        self.llc.validate()?;
        let b = self.l1d.block_bytes;
        if self.l2c.block_bytes != b || self.llc.block_bytes != b {
            return Err("all levels must share one block size".into());
        }
        if self.queue_depth == 0 || self.mshrs == 0 {
            return Err("queue depth and mshr count must be nonzero".into());
        }
        Ok(())
    }

    pub fn block_bytes(&self) -> usize {
        self.l1d.block_bytes
    }
}

/// Cache level a prefetch fills into. The LLC is never a direct target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FillLevel {
    L1d,
    L2c,
}

/// Where a demand access was serviced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceLevel {
    L1d,
    L2c,
    Llc,
    Mem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitKind {
    /// Hit on a line brought in by a demand.
    DemandHit,
    /// First demand touch of a completed prefetch.
    PrefetchHit,
    /// Demand arrived while the prefetch was still in flight.
    LatePrefetchHit,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessOutcome {
    pub serviced: ServiceLevel,
    pub latency: u64,
    pub kind: HitKind,
}

/// One prefetch: a block-aligned address and its fill target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefetchRequest {
    pub block_addr: u64,
    pub fill: FillLevel,
}

impl PrefetchRequest {
    pub fn l1(block_addr: u64) -> Self {
        Self { block_addr, fill: FillLevel::L1d }
    }

    pub fn l2(block_addr: u64) -> Self {
        Self { block_addr, fill: FillLevel::L2c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueResult {
    Issued,
    DroppedRedundant,
    DroppedQueueFull,
}

/// Contract between the hierarchy and a prefetcher: after every demand
/// access the prefetcher observes the access and its outcome and returns
/// zero or more requests, which the hierarchy issues in order.
pub trait Prefetcher {
    fn observe(&mut self, access: &MemoryAccess, outcome: &AccessOutcome) -> Vec<PrefetchRequest>;

    /// End-of-trace hook; table-driven prefetchers deactivate and train
    /// their remaining tracked regions here.
    fn flush(&mut self) {}

    fn name(&self) -> &'static str;
}

/// Baseline that never prefetches.
#[derive(Debug, Default)]
pub struct NullPrefetcher;

impl Prefetcher for NullPrefetcher {
    fn observe(&mut self, _access: &MemoryAccess, _outcome: &AccessOutcome) -> Vec<PrefetchRequest> {
        Vec::new()
    }

    fn name(&self) -> &'static str {
        "none"
    }
}
