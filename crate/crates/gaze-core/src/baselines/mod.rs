//! Comparison prefetchers sharing the hierarchy's prefetcher contract.

mod naccess;

pub use naccess::{NAccessConfig, NAccessPrefetcher};

use crate::memsys::{AccessOutcome, Prefetcher, PrefetchRequest};
use crate::trace::MemoryAccess;

/// Prefetches the next sequential block into the L1D, clipped at the
/// region boundary.
pub struct NextLinePrefetcher {
    region_bytes: u64,
    block_bytes: u64,
}

impl NextLinePrefetcher {
    pub fn new(region_bytes: usize, block_bytes: usize) -> Self {
        Self { region_bytes: region_bytes as u64, block_bytes: block_bytes as u64 }
    }
}

impl Default for NextLinePrefetcher {
    fn default() -> Self {
        Self::new(4096, 64)
    }
}

impl Prefetcher for NextLinePrefetcher {
    fn observe(&mut self, access: &MemoryAccess, _outcome: &AccessOutcome) -> Vec<PrefetchRequest> {
        let block_addr = access.vaddr & !(self.block_bytes - 1);
        let next = block_addr + self.block_bytes;
        if next / self.region_bytes != block_addr / self.region_bytes {
            return Vec::new();
        }
        vec![PrefetchRequest::l1(next)]
    }

    fn name(&self) -> &'static str {
        "next-line"
    }
}

#[derive(Debug, Clone, Copy)]
struct IpEntry {
    pc: u64,
    last_block: u64,
    stride: i64,
    confidence: u8,
    stamp: u64,
}

/// Per-PC stride detector: a 64-entry fully-associative LRU table of
/// (last block, stride, 2-bit confidence). A stride confirmed twice
/// prefetches two strides ahead into the L1D, clipped to the region.
pub struct IpStridePrefetcher {
    entries: Vec<IpEntry>,
    capacity: usize,
    stamp: u64,
    region_blocks: u64,
    block_bytes: u64,
    degree: usize,
    confidence_threshold: u8,
}

impl IpStridePrefetcher {
    pub fn new(region_bytes: usize, block_bytes: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity: 64,
            stamp: 0,
            region_blocks: (region_bytes / block_bytes) as u64,
            block_bytes: block_bytes as u64,
            degree: 2,
            confidence_threshold: 2,
        }
    }
}

impl Default for IpStridePrefetcher {
    fn default() -> Self {
        Self::new(4096, 64)
    }
}

impl Prefetcher for IpStridePrefetcher {
    fn observe(&mut self, access: &MemoryAccess, _outcome: &AccessOutcome) -> Vec<PrefetchRequest> {
        let block = access.vaddr / self.block_bytes;
        self.stamp += 1;
        let stamp = self.stamp;
        let Some(entry) = self.entries.iter_mut().find(|e| e.pc == access.pc) else {
            if self.entries.len() == self.capacity {
                let lru = self
                    .entries
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, e)| e.stamp)
                    .map(|(i, _)| i)
                    .unwrap();
                self.entries.swap_remove(lru);
            }
            self.entries.push(IpEntry { pc: access.pc, last_block: block, stride: 0, confidence: 0, stamp });
            return Vec::new();
        };
        entry.stamp = stamp;
        let stride = block as i64 - entry.last_block as i64;
        if stride == entry.stride && stride != 0 {
            entry.confidence = (entry.confidence + 1).min(3);
        } else {
            entry.stride = stride;
            entry.confidence = u8::from(stride != 0);
        }
        entry.last_block = block;
        let mut out = Vec::new();
        if entry.confidence >= self.confidence_threshold {
            let region = block / self.region_blocks;
            for k in 1..=self.degree as i64 {
                let target = block as i64 + k * entry.stride;
                if target < 0 || target as u64 / self.region_blocks != region {
                    break;
                }
                out.push(PrefetchRequest::l1(target as u64 * self.block_bytes));
            }
        }
        out
    }

    fn name(&self) -> &'static str {
        "ip-stride"
    }
}
