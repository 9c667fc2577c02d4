//! Bit-exact storage accounting for the prefetcher tables.
//!
//! Entry layouts:
//!   FT   region tag + LRU + hashed PC + trigger offset
//!   AT   region tag + LRU + hashed PC + stride flag + four offsets
//!        + footprint bit vector + valid bit
//!   PHT  second-offset tag + LRU + footprint bit vector
//!        (the set index is the trigger offset and is not stored)
//!   DPCT hashed PC + LRU
//!   PB   region tag + LRU + 2-bit state per offset
//!
//! The dense counter is reported separately and excluded from the total.

use serde::Serialize;

use super::GazeConfig;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TableStorage {
    pub entries: usize,
    pub entry_bits: u64,
    pub total_bytes: u64,
}

impl TableStorage {
    fn new(entries: usize, entry_bits: u64) -> Self {
        let total_bits = entries as u64 * entry_bits;
        Self { entries, entry_bits, total_bytes: total_bits.div_ceil(8) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StorageReport {
    pub region_bytes: usize,
    pub blocks_per_region: usize,
    pub ft: TableStorage,
    pub at: TableStorage,
    pub pht: TableStorage,
    pub dpct: TableStorage,
    pub pb: TableStorage,
    /// Dense counter width; excluded from the total.
    pub dc_bits: u64,
    pub total_bytes: u64,
}

impl StorageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn storage_report(cfg: &GazeConfig) -> StorageReport {
    cfg.validate().expect("valid gaze config");
    let blocks = cfg.blocks_per_region() as u64;
    let off = cfg.offset_bits() as u64;
    let tag = cfg.region_tag_bits as u64;
    let pc = cfg.pc_hash_bits as u64;
    let lru = |ways: usize| (ways as u64).trailing_zeros() as u64;

    let ft_bits = tag + lru(cfg.ft_ways) + pc + off;
    let at_bits = tag + lru(cfg.at_ways) + pc + 1 + 4 * off + blocks + 1;
    let pht_bits = off + lru(cfg.pht_ways) + blocks;
    let dpct_bits = pc + lru(cfg.dpct_entries);
    let pb_bits = tag + lru(cfg.pb_ways) + 2 * blocks;

    let ft = TableStorage::new(cfg.ft_entries, ft_bits);
    let at = TableStorage::new(cfg.at_entries, at_bits);
    let pht = TableStorage::new(cfg.pht_entries, pht_bits);
    let dpct = TableStorage::new(cfg.dpct_entries, dpct_bits);
    let pb = TableStorage::new(cfg.pb_entries, pb_bits);
    let total_bytes = ft.total_bytes + at.total_bytes + pht.total_bytes + dpct.total_bytes + pb.total_bytes;

    StorageReport {
        region_bytes: cfg.region_bytes,
        blocks_per_region: blocks as usize,
        ft,
        at,
        pht,
        dpct,
        pb,
        dc_bits: 3,
        total_bytes,
    }
}
