//! Three-level hierarchy walk, prefetch queue, in-flight tracking, and the
//! cycle-proxy timing model.
//!
//! Demand order per access: complete due prefetches, walk the levels
//! (L1D, in-flight set, L2C, LLC, memory), charge latency, advance the
//! clock. Prefetches triggered by an access are stamped against the cycle
//! at which that access began its walk, so they overlap with the demand
//! that produced them; a demand can then hit them in flight with a residual
//! strictly below the full miss latency.

use std::collections::VecDeque;

use crate::metrics::{DemandCounters, PrefetchCounters};
use crate::trace::MemoryAccess;

use super::{
    AccessOutcome, Cache, FillLevel, HierarchyConfig, HitKind, IssueResult, Prefetcher,
    PrefetchRequest, ServiceLevel,
};

#[derive(Debug, Clone, Copy)]
struct Inflight {
    block: u64,
    fill: FillLevel,
    completes: u64,
    from_mem: bool,
}

pub struct Hierarchy {
    cfg: HierarchyConfig,
    l1d: Cache,
    l2c: Cache,
    llc: Cache,
    queue: VecDeque<PrefetchRequest>,
    inflight: Vec<Inflight>,
    cycle: u64,
    /// Cycle at which the current demand access began its walk; prefetch
    /// completions are stamped against it.
    walk_cycle: u64,
    block_shift: u32,
    finalized: bool,
    pub counters: PrefetchCounters,
    pub demand: DemandCounters,
}

impl Hierarchy {
    pub fn new(cfg: HierarchyConfig) -> Self {
        cfg.validate().expect("valid hierarchy config");
        Self {
            l1d: Cache::new(&cfg.l1d),
            l2c: Cache::new(&cfg.l2c),
            llc: Cache::new(&cfg.llc),
            queue: VecDeque::new(),
            inflight: Vec::new(),
            cycle: 0,
            walk_cycle: 0,
            block_shift: cfg.block_bytes().trailing_zeros(),
            finalized: false,
            cfg,
            counters: PrefetchCounters::default(),
            demand: DemandCounters::default(),
        }
    }

    pub fn cycles(&self) -> u64 {
        self.cycle
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.cfg
    }

    fn block_of(&self, addr: u64) -> u64 {
        addr >> self.block_shift
    }

    /// One demand load: walk, classify, fill, advance the clock.
    pub fn demand_access(&mut self, access: &MemoryAccess) -> AccessOutcome {
        debug_assert!(!self.finalized);
        self.walk_cycle = self.cycle;
        self.complete_due();
        let block = self.block_of(access.vaddr);
        let l1_lat = self.cfg.l1d.hit_latency;
        let l2_lat = self.cfg.l2c.hit_latency;
        let llc_lat = self.cfg.llc.hit_latency;

        let outcome = if let Some((prefetched, from_mem)) = self.l1d.demand_lookup(block) {
            self.demand.l1d_hits += 1;
            if prefetched {
                self.counters.n_a += 1;
                self.counters.timely_useful += 1;
                if from_mem {
                    self.counters.llc_prefetch_hits += 1;
                }
                self.llc.clear_prefetch_tag(block);
            }
            AccessOutcome {
                serviced: ServiceLevel::L1d,
                latency: l1_lat,
                kind: if prefetched { HitKind::PrefetchHit } else { HitKind::DemandHit },
            }
        } else if let Some(pos) = self.inflight.iter().position(|f| f.block == block) {
            let entry = self.inflight.remove(pos);
            self.demand.late_prefetch_hits += 1;
            let residual = entry.completes - self.walk_cycle;
            self.counters.late_useful += 1;
            match entry.fill {
                FillLevel::L1d => self.counters.n_a += 1,
                FillLevel::L2c => self.counters.m_a += 1,
            }
            if entry.from_mem {
                self.counters.llc_prefetch_hits += 1;
            }
            // The fill lands now: the prefetch's own copies (fill level and
            // LLC, already classified useful) plus the demand fill to L1D.
            if entry.fill == FillLevel::L2c {
                if let Some(v) = self.l2c.insert(block, false, false) {
                    if v.prefetched {
                        self.counters.m_b += 1;
                    }
                }
            }
            self.install_demand(block, entry.fill.into());
            if !self.llc.contains(block) {
                self.llc.insert(block, false, false);
            }
            AccessOutcome {
                serviced: entry.fill.into(),
                latency: residual,
                kind: HitKind::LatePrefetchHit,
            }
        } else if let Some((prefetched, from_mem)) = self.l2c.demand_lookup(block) {
            self.demand.l2c_hits += 1;
            if prefetched {
                self.counters.m_a += 1;
                self.counters.timely_useful += 1;
                if from_mem {
                    self.counters.llc_prefetch_hits += 1;
                }
                self.llc.clear_prefetch_tag(block);
            }
            self.install_demand(block, ServiceLevel::L2c);
            AccessOutcome {
                serviced: ServiceLevel::L2c,
                latency: l1_lat + l2_lat,
                kind: if prefetched { HitKind::PrefetchHit } else { HitKind::DemandHit },
            }
        } else if let Some((prefetched, from_mem)) = self.llc.demand_lookup(block) {
            self.demand.llc_hits += 1;
            if prefetched && from_mem {
                // The placement at the fill level was already judged on its
                // own; this touch still proves an off-chip miss was covered.
                self.counters.llc_prefetch_hits += 1;
            }
            self.install_demand(block, ServiceLevel::Llc);
            AccessOutcome {
                serviced: ServiceLevel::Llc,
                latency: l1_lat + l2_lat + llc_lat,
                kind: if prefetched { HitKind::PrefetchHit } else { HitKind::DemandHit },
            }
        } else {
            self.demand.mem_accesses += 1;
            self.counters.llc_demand_misses += 1;
            self.install_demand(block, ServiceLevel::Mem);
            AccessOutcome {
                serviced: ServiceLevel::Mem,
                latency: l1_lat + l2_lat + llc_lat + self.cfg.mem_latency,
                kind: HitKind::Miss,
            }
        };

        self.demand.accesses += 1;
        self.cycle += 1 + outcome.latency.saturating_sub(l1_lat);
        outcome
    }

    /// Inclusive demand fill: installs the block at every level above the
    /// servicing one.
    fn install_demand(&mut self, block: u64, serviced: ServiceLevel) {
        if matches!(serviced, ServiceLevel::Mem) {
            // An evicted LLC line may carry an unclaimed coverage tag;
            // usefulness is judged at the fill level, so nothing to count.
            self.llc.insert(block, false, false);
        }
        if matches!(serviced, ServiceLevel::Mem | ServiceLevel::Llc) {
            if let Some(v) = self.l2c.insert(block, false, false) {
                if v.prefetched {
                    self.counters.m_b += 1;
                }
            }
        }
        if let Some(v) = self.l1d.insert(block, false, false) {
            if v.prefetched {
                self.counters.n_b += 1;
            }
        }
    }

    /// Accepts or rejects a prefetch request at the queue head.
    pub fn issue_prefetch(&mut self, req: PrefetchRequest) -> IssueResult {
        debug_assert!(req.block_addr.is_multiple_of(self.cfg.block_bytes() as u64));
        let block = self.block_of(req.block_addr);
        if self.resident_at_or_above(block, req.fill) || self.inflight_contains(block) {
            self.counters.dropped_redundant += 1;
            return IssueResult::DroppedRedundant;
        }
        if self.queue.len() >= self.cfg.queue_depth {
            self.counters.dropped_queue_full += 1;
            return IssueResult::DroppedQueueFull;
        }
        self.queue.push_back(req);
        self.counters.issued += 1;
        IssueResult::Issued
    }

    fn resident_at_or_above(&self, block: u64, fill: FillLevel) -> bool {
        match fill {
            FillLevel::L1d => self.l1d.contains(block),
            FillLevel::L2c => self.l1d.contains(block) || self.l2c.contains(block),
        }
    }

    fn inflight_contains(&self, block: u64) -> bool {
        self.inflight.iter().any(|f| f.block == block)
    }

    /// Moves up to the configured number of queued requests into flight.
    /// A full in-flight set stalls draining; requests that became redundant
    /// while queued are discarded here.
    pub fn drain_queue(&mut self) {
        for _ in 0..self.cfg.queue_drain {
            if self.inflight.len() >= self.cfg.mshrs {
                break;
            }
            let Some(req) = self.queue.pop_front() else { break };
            let block = self.block_of(req.block_addr);
            if self.resident_at_or_above(block, req.fill) || self.inflight_contains(block) {
                self.counters.dropped_after_issue += 1;
                continue;
            }
            let (latency, from_mem) = self.prefetch_path(block, req.fill);
            self.inflight.push(Inflight {
                block,
                fill: req.fill,
                completes: self.walk_cycle + latency,
                from_mem,
            });
        }
    }

    /// Latency a prefetch pays: the walk cost from its fill level down to
    /// wherever the data is found. A block found in a lower level shortens
    /// the path; otherwise it comes from memory.
    fn prefetch_path(&self, block: u64, fill: FillLevel) -> (u64, bool) {
        let mut lat = match fill {
            FillLevel::L1d => self.cfg.l1d.hit_latency,
            FillLevel::L2c => self.cfg.l2c.hit_latency,
        };
        // Walk the levels strictly below the fill level.
        if fill == FillLevel::L1d {
            lat += self.cfg.l2c.hit_latency;
            if self.l2c.contains(block) {
                return (lat, false);
            }
        }
        lat += self.cfg.llc.hit_latency;
        if self.llc.contains(block) {
            return (lat, false);
        }
        (lat + self.cfg.mem_latency, true)
    }

    /// Installs every in-flight prefetch whose completion time has passed.
    fn complete_due(&mut self) {
        let mut i = 0;
        while i < self.inflight.len() {
            if self.inflight[i].completes <= self.cycle {
                let entry = self.inflight.remove(i);
                self.install_prefetch(entry);
            } else {
                i += 1;
            }
        }
    }

    fn install_prefetch(&mut self, entry: Inflight) {
        let victim = match entry.fill {
            FillLevel::L1d => self.l1d.insert(entry.block, true, entry.from_mem),
            FillLevel::L2c => self.l2c.insert(entry.block, true, entry.from_mem),
        };
        if let Some(v) = victim {
            if v.prefetched {
                match entry.fill {
                    FillLevel::L1d => self.counters.n_b += 1,
                    FillLevel::L2c => self.counters.m_b += 1,
                }
            }
        }
        if !self.llc.contains(entry.block) {
            self.llc.insert(entry.block, true, entry.from_mem);
        }
    }

    /// Runs the full per-access protocol: demand walk, prefetcher callback,
    /// issue, queue drain.
    pub fn step(&mut self, access: &MemoryAccess, prefetcher: &mut dyn Prefetcher) -> AccessOutcome {
        let outcome = self.demand_access(access);
        for req in prefetcher.observe(access, &outcome) {
            self.issue_prefetch(req);
        }
        self.drain_queue();
        outcome
    }

    /// End of run: anything still queued or in flight is pending; installed
    /// prefetches that were never demanded become useless.
    pub fn finalize(&mut self) {
        assert!(!self.finalized);
        self.finalized = true;
        self.counters.pending_at_end = (self.queue.len() + self.inflight.len()) as u64;
        self.counters.n_b += self.l1d.untouched_prefetched().len() as u64;
        self.counters.m_b += self.l2c.untouched_prefetched().len() as u64;
    }
}

impl From<FillLevel> for ServiceLevel {
    fn from(f: FillLevel) -> Self {
        match f {
            FillLevel::L1d => ServiceLevel::L1d,
            FillLevel::L2c => ServiceLevel::L2c,
        }
    }
}
