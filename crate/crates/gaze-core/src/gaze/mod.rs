//! The Gaze spatial prefetcher.
//!
//! Regions are characterized by their first two accessed blocks: the
//! trigger offset indexes the pattern history table and the second offset
//! is the tag, so a stored footprint is only reused when both match.
//! Regions whose first two blocks are the region head (offsets 0 and 1)
//! are handled by a dedicated streaming module instead: a dense PC table
//! and a dense counter gate a two-stage aggressiveness ramp, with
//! region-local stride prefetching as the backup when nothing matches.

mod storage;
mod tables;

pub use storage::{storage_report, StorageReport, TableStorage};
pub use tables::{DenseCounter, Dpct, PrefetchBuffer, SetAssocTable};

use crate::footprint::{Footprint, PrefetchPattern};
use crate::memsys::{AccessOutcome, FillLevel, Prefetcher, PrefetchRequest};
use crate::trace::MemoryAccess;

use std::collections::HashSet;

/// Table geometry and policy knobs. Defaults model the 4KB-region design
/// point; `for_region_bytes` rescales the derived fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GazeConfig {
    pub region_bytes: usize,
    pub block_bytes: usize,
    pub ft_entries: usize,
    pub ft_ways: usize,
    pub at_entries: usize,
    pub at_ways: usize,
    pub pht_entries: usize,
    pub pht_ways: usize,
    pub dpct_entries: usize,
    pub pb_entries: usize,
    pub pb_ways: usize,
    /// Requests released from the prefetch buffer per observed access.
    pub pb_drain: usize,
    /// Blocks prefetched at the higher aggressiveness in streaming stage 1.
    pub stage1_head: usize,
    /// Blocks promoted (or stride-prefetched) per streaming stage 2 hit.
    pub stage2_degree: usize,
    pub dc_saturated: u8,
    pub dc_half: u8,
    pub dc_fast_floor: u8,
    /// Architectural region tag width, for storage accounting only.
    pub region_tag_bits: u32,
    pub pc_hash_bits: u32,
}

impl Default for GazeConfig {
    fn default() -> Self {
        Self {
            region_bytes: 4096,
            block_bytes: 64,
            ft_entries: 64,
            ft_ways: 8,
            at_entries: 64,
            at_ways: 8,
            pht_entries: 256,
            pht_ways: 4,
            dpct_entries: 8,
            pb_entries: 32,
            pb_ways: 8,
            pb_drain: 2,
            stage1_head: 16,
            stage2_degree: 4,
            dc_saturated: 7,
            dc_half: 4,
            dc_fast_floor: 6,
            region_tag_bits: 36,
            pc_hash_bits: 12,
        }
    }
}

impl GazeConfig {
    /// Default geometry rescaled to another region size; the stage-1 head
    /// stays one quarter of the region.
    pub fn for_region_bytes(region_bytes: usize) -> Self {
        let mut cfg = Self { region_bytes, ..Self::default() };
        cfg.stage1_head = cfg.blocks_per_region() / 4;
        cfg
    }

    pub fn blocks_per_region(&self) -> usize {
        self.region_bytes / self.block_bytes
    }

    pub fn offset_bits(&self) -> u32 {
        self.blocks_per_region().trailing_zeros()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.region_bytes.is_power_of_two() || !self.block_bytes.is_power_of_two() {
            return Err("region and block sizes must be powers of two".into());
        }
        let blocks = self.blocks_per_region();
        if blocks < 8 {
            return Err(format!("region must span at least 8 blocks, got {blocks}"));
        }
        if blocks > crate::footprint::MAX_BLOCKS {
            return Err(format!(
                "region spans {blocks} blocks, above the supported {}",
                crate::footprint::MAX_BLOCKS
            ));
        }
        if self.stage1_head != blocks / 4 {
            return Err(format!(
                "stage-1 head must be a quarter region ({}), got {}",
                blocks / 4,
                self.stage1_head
            ));
        }
        for (name, entries, ways) in [
            ("ft", self.ft_entries, self.ft_ways),
            ("at", self.at_entries, self.at_ways),
            ("pht", self.pht_entries, self.pht_ways),
            ("pb", self.pb_entries, self.pb_ways),
        ] {
            if ways == 0 || entries == 0 || entries % ways != 0 {
                return Err(format!("{name} geometry {entries}/{ways} is not set-divisible"));
            }
        }
        if self.dpct_entries == 0 {
            return Err("dpct needs at least one entry".into());
        }
        if self.dc_half > self.dc_saturated || self.dc_fast_floor > self.dc_saturated {
            return Err("dense counter thresholds exceed saturation".into());
        }
        if self.stage2_degree == 0 || self.pb_drain == 0 {
            return Err("stage-2 degree and drain rate must be nonzero".into());
        }
        Ok(())
    }
}

/// 12-bit XOR-fold of PC bits [2, 50).
pub fn hashed_pc(pc: u64) -> u16 {
    let x = (pc >> 2) & ((1u64 << 48) - 1);
    ((x ^ (x >> 12) ^ (x >> 24) ^ (x >> 36)) & 0xFFF) as u16
}

/// Splits a virtual address into its region id and in-region block offset.
pub fn region_and_offset(cfg: &GazeConfig, vaddr: u64) -> (u64, usize) {
    let region = vaddr >> self_log2(cfg.region_bytes);
    let offset = (vaddr >> self_log2(cfg.block_bytes)) as usize & (cfg.blocks_per_region() - 1);
    (region, offset)
}

fn self_log2(v: usize) -> u32 {
    v.trailing_zeros()
}

/// Which parts of the predictor are active. The ablation variants mirror
/// the full design with either the streaming module or the pattern table
/// removed; with the streaming module off, head-of-region patterns fall
/// through to the pattern table like any other pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GazeVariant {
    Full,
    /// Pattern table only; no streaming module, no stage-2 stride logic.
    PhtOnly,
    /// Streaming module only; no pattern table.
    SmOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionOutcome {
    StreamingHead(PrefetchPattern),
    StreamingProbe(PrefetchPattern),
    PhtHit(PrefetchPattern),
    NoMatch,
}

impl PredictionOutcome {
    pub fn kind(&self) -> PredictionKind {
        match self {
            PredictionOutcome::StreamingHead(_) => PredictionKind::StreamingHead,
            PredictionOutcome::StreamingProbe(_) => PredictionKind::StreamingProbe,
            PredictionOutcome::PhtHit(_) => PredictionKind::PhtHit,
            PredictionOutcome::NoMatch => PredictionKind::NoMatch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionKind {
    StreamingHead,
    StreamingProbe,
    PhtHit,
    NoMatch,
}

/// One region activation as seen by the predictor; recorded when event
/// logging is enabled.
#[derive(Debug, Clone, Copy)]
pub struct PredictionEvent {
    pub region: u64,
    pub trigger: u8,
    pub second: u8,
    pub dc_value: u8,
    pub outcome: PredictionKind,
    /// L1D/L2C state counts of the pattern actually merged into the
    /// prefetch buffer (after the demanded offsets were excluded).
    pub merged_l1: usize,
    pub merged_l2: usize,
}

#[derive(Debug, Default, Clone)]
pub struct GazeStats {
    pub predictions_streaming_head: u64,
    pub predictions_streaming_probe: u64,
    pub predictions_pht_hit: u64,
    pub predictions_no_match: u64,
    pub pht_trains: u64,
    pub dense_trains: u64,
    pub sparse_trains: u64,
    pub ft_evictions: u64,
    pub at_evictions: u64,
    pub stage2_promotions: u64,
    pub stage2_backups: u64,
    /// Pattern-table predictions for a (trigger, second) pair that was
    /// never trained. Strict matching demands this stays zero.
    pub untrained_pht_predictions: u64,
}

#[derive(Debug, Clone)]
struct FtEntry {
    pc_hash: u16,
    trigger: u8,
}

#[derive(Debug, Clone)]
struct AtEntry {
    pc_hash: u16,
    stride_flag: bool,
    trigger: u8,
    second: u8,
    last: u8,
    penultimate: u8,
    footprint: Footprint,
}

pub struct GazePrefetcher {
    cfg: GazeConfig,
    variant: GazeVariant,
    ft: SetAssocTable<FtEntry>,
    at: SetAssocTable<AtEntry>,
    pht: SetAssocTable<Footprint>,
    dpct: Dpct,
    dc: DenseCounter,
    pb: PrefetchBuffer,
    pub stats: GazeStats,
    events: Option<Vec<PredictionEvent>>,
    /// Audit shadow of every (trigger, second) pair ever written to the
    /// pattern table; backs the strict-matching counter.
    trained_pairs: HashSet<(u8, u8)>,
}

impl GazePrefetcher {
    pub fn new(cfg: GazeConfig) -> Self {
        Self::with_variant(cfg, GazeVariant::Full)
    }

    pub fn with_variant(cfg: GazeConfig, variant: GazeVariant) -> Self {
        cfg.validate().expect("valid gaze config");
        let blocks = cfg.blocks_per_region();
        Self {
            variant,
            ft: SetAssocTable::new(cfg.ft_entries, cfg.ft_ways),
            at: SetAssocTable::new(cfg.at_entries, cfg.at_ways),
            pht: SetAssocTable::new(cfg.pht_entries, cfg.pht_ways),
            dpct: Dpct::new(cfg.dpct_entries),
            dc: DenseCounter::new(cfg.dc_saturated, cfg.dc_half, cfg.dc_fast_floor),
            pb: PrefetchBuffer::new(cfg.pb_entries, cfg.pb_ways, blocks),
            stats: GazeStats::default(),
            events: None,
            trained_pairs: HashSet::new(),
            cfg,
        }
    }

    pub fn config(&self) -> &GazeConfig {
        &self.cfg
    }

    pub fn variant(&self) -> GazeVariant {
        self.variant
    }

    pub fn dc_value(&self) -> u8 {
        self.dc.value()
    }

    /// Starts recording one `PredictionEvent` per region activation.
    pub fn enable_event_log(&mut self) {
        self.events = Some(Vec::new());
    }

    pub fn events(&self) -> &[PredictionEvent] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn discarded_pb_patterns(&self) -> u64 {
        self.pb.discarded_patterns
    }

    fn ft_set(&self, region: u64) -> usize {
        (region % self.ft.num_sets() as u64) as usize
    }

    fn at_set(&self, region: u64) -> usize {
        (region % self.at.num_sets() as u64) as usize
    }

    fn pht_set(&self, trigger: u8) -> usize {
        trigger as usize % self.pht.num_sets()
    }

    fn request_for(&self, region: u64, offset: usize, fill: FillLevel) -> PrefetchRequest {
        let addr = (region << self_log2(self.cfg.region_bytes))
            + ((offset as u64) << self_log2(self.cfg.block_bytes));
        PrefetchRequest { block_addr: addr, fill }
    }

    /// Streaming-module routing applies to regions whose first two blocks
    /// are the region head.
    fn is_stream_start(&self, trigger: u8, second: u8) -> bool {
        trigger == 0 && second == 1 && self.variant != GazeVariant::PhtOnly
    }

    /// Footprint prediction from the first two accesses and the trigger
    /// PC hash. Head-of-region pairs consult the streaming module; all
    /// other pairs require an exact (trigger, second) pattern-table match.
    pub fn predict(&mut self, trigger: u8, second: u8, pc_hash: u16) -> PredictionOutcome {
        debug_assert_ne!(trigger, second);
        let blocks = self.cfg.blocks_per_region();
        let head = self.cfg.stage1_head;
        if self.is_stream_start(trigger, second) {
            if self.dpct.contains(pc_hash) || self.dc.is_saturated() {
                let mut p = PrefetchPattern::new(blocks);
                for o in 0..head {
                    p.l1.set(o);
                }
                for o in head..blocks {
                    p.l2.set(o);
                }
                return PredictionOutcome::StreamingHead(p);
            }
            if self.dc.is_half() {
                let mut p = PrefetchPattern::new(blocks);
                for o in 0..head {
                    p.l2.set(o);
                }
                return PredictionOutcome::StreamingProbe(p);
            }
            return PredictionOutcome::NoMatch;
        }
        if self.variant == GazeVariant::SmOnly {
            return PredictionOutcome::NoMatch;
        }
        match self.pht.get_mut(self.pht_set(trigger), second as u64) {
            Some(fp) => {
                let pattern = PrefetchPattern::all_l1(fp);
                if !self.trained_pairs.contains(&(trigger, second)) {
                    self.stats.untrained_pht_predictions += 1;
                }
                PredictionOutcome::PhtHit(pattern)
            }
            None => PredictionOutcome::NoMatch,
        }
    }

    /// Learns from a deactivated region. Head-of-region regions feed the
    /// streaming module: a fully dense footprint records the trigger PC and
    /// bumps the dense counter, anything else decays it. Every other region
    /// overwrites its (trigger, second) pattern-table slot.
    pub fn train(&mut self, victim: &AtEntryView) {
        if self.is_stream_start(victim.trigger, victim.second) {
            if victim.footprint.is_full() {
                self.dpct.insert(victim.pc_hash);
                self.dc.increment();
                self.stats.dense_trains += 1;
            } else {
                self.dc.decrement();
                self.stats.sparse_trains += 1;
            }
            return;
        }
        if self.variant == GazeVariant::SmOnly {
            return;
        }
        let set = self.pht_set(victim.trigger);
        match self.pht.get_mut(set, victim.second as u64) {
            Some(slot) => *slot = victim.footprint,
            None => {
                self.pht.insert(set, victim.second as u64, victim.footprint);
            }
        }
        self.trained_pairs.insert((victim.trigger, victim.second));
        self.stats.pht_trains += 1;
    }

    /// Stage-2 stride check over the last three accesses of a marked
    /// region. Two unit strides promote the next blocks to L1D; two equal
    /// nonzero strides drive the backup region-stride prefetch. Patterns
    /// never cross the region boundary.
    fn stage2_check(&mut self, entry: &AtEntry, new_offset: u8) -> Option<PrefetchPattern> {
        let pattern = stride_pattern(
            self.cfg.blocks_per_region(),
            self.cfg.stage2_degree,
            entry.penultimate,
            entry.last,
            new_offset,
        )?;
        if new_offset as i32 - entry.last as i32 == 1 {
            self.stats.stage2_promotions += 1;
        } else {
            self.stats.stage2_backups += 1;
        }
        Some(pattern)
    }

    fn record_event(&mut self, event: PredictionEvent) {
        if let Some(events) = &mut self.events {
            events.push(event);
        }
    }

    /// Deactivates every tracked region, as if each were evicted. Learned
    /// pattern state survives; transient tracking state does not.
    pub fn flush_tables(&mut self) {
        for (_, victim) in self.at.drain_all() {
            self.train(&AtEntryView::from(&victim));
        }
        self.ft.drain_all();
        self.pb.clear();
    }

    #[cfg(test)]
    fn at_resident(&self, region: u64) -> bool {
        self.at.contains(self.at_set(region), region)
    }

    #[cfg(test)]
    fn ft_resident(&self, region: u64) -> bool {
        self.ft.contains(self.ft_set(region), region)
    }

    #[cfg(test)]
    fn pht_footprint(&self, trigger: u8, second: u8) -> Option<&Footprint> {
        self.pht.peek(trigger as usize % self.pht.num_sets(), second as u64)
    }
}

/// The region-local stride rule behind stage 2. Two equal nonzero strides
/// over the last three offsets yield up to `degree` further blocks at that
/// stride, clipped to the region; unit strides are the promotion case.
pub fn stride_pattern(
    blocks: usize,
    degree: usize,
    penultimate: u8,
    last: u8,
    new_offset: u8,
) -> Option<PrefetchPattern> {
    let s1 = last as i32 - penultimate as i32;
    let s2 = new_offset as i32 - last as i32;
    if s1 != s2 || s1 == 0 {
        return None;
    }
    let mut pattern = PrefetchPattern::new(blocks);
    for k in 1..=degree as i32 {
        let target = new_offset as i32 + k * s1;
        if target < 0 || target >= blocks as i32 {
            break;
        }
        pattern.l1.set(target as usize);
    }
    if pattern.is_empty() {
        None
    } else {
        Some(pattern)
    }
}

/// Borrowed view of a deactivated region handed to `train`.
#[derive(Debug, Clone, Copy)]
pub struct AtEntryView {
    pub pc_hash: u16,
    pub trigger: u8,
    pub second: u8,
    pub footprint: Footprint,
}

impl From<&AtEntry> for AtEntryView {
    fn from(e: &AtEntry) -> Self {
        Self { pc_hash: e.pc_hash, trigger: e.trigger, second: e.second, footprint: e.footprint }
    }
}

impl Prefetcher for GazePrefetcher {
    fn observe(&mut self, access: &MemoryAccess, _outcome: &AccessOutcome) -> Vec<PrefetchRequest> {
        let (region, offset) = region_and_offset(&self.cfg, access.vaddr);
        let off8 = offset as u8;
        let at_set = self.at_set(region);

        if let Some(entry) = self.at.get_mut(at_set, region) {
            // Tracked region: accumulate and run the stride stage.
            entry.footprint.set(offset);
            let snapshot = entry.clone();
            if snapshot.stride_flag {
                if let Some(pattern) = self.stage2_check(&snapshot, off8) {
                    self.pb.merge(region, &pattern);
                }
            }
            let entry = self.at.peek_mut(at_set, region).unwrap();
            entry.penultimate = entry.last;
            entry.last = off8;
        } else {
            let ft_set = self.ft_set(region);
            match self.ft.peek(ft_set, region) {
                Some(fte) if fte.trigger == off8 => {
                    // Repeat touch of the trigger block only refreshes.
                    self.ft.touch(ft_set, region);
                }
                Some(_) => {
                    // Second distinct block: promote to the accumulation
                    // table, then ask the pattern history module.
                    let fte = self.ft.remove(ft_set, region).unwrap();
                    let trigger = fte.trigger;
                    let second = off8;
                    let mut footprint = Footprint::new(self.cfg.blocks_per_region());
                    footprint.set(trigger as usize);
                    footprint.set(second as usize);
                    let entry = AtEntry {
                        pc_hash: fte.pc_hash,
                        stride_flag: false,
                        trigger,
                        second,
                        last: second,
                        penultimate: trigger,
                        footprint,
                    };
                    if let Some((_, victim)) = self.at.insert(at_set, region, entry) {
                        self.stats.at_evictions += 1;
                        self.train(&AtEntryView::from(&victim));
                    }
                    let outcome = self.predict(trigger, second, fte.pc_hash);
                    let (stride_flag, pattern) = match outcome {
                        PredictionOutcome::StreamingHead(p) => {
                            self.stats.predictions_streaming_head += 1;
                            (true, Some(p))
                        }
                        PredictionOutcome::StreamingProbe(p) => {
                            self.stats.predictions_streaming_probe += 1;
                            (true, Some(p))
                        }
                        PredictionOutcome::PhtHit(p) => {
                            self.stats.predictions_pht_hit += 1;
                            (false, Some(p))
                        }
                        PredictionOutcome::NoMatch => {
                            self.stats.predictions_no_match += 1;
                            (true, None)
                        }
                    };
                    let stride_flag = stride_flag && self.variant != GazeVariant::PhtOnly;
                    self.at.peek_mut(at_set, region).unwrap().stride_flag = stride_flag;
                    let mut merged = PrefetchPattern::new(self.cfg.blocks_per_region());
                    if let Some(mut p) = pattern {
                        p.exclude(&footprint);
                        if !p.is_empty() {
                            self.pb.merge(region, &p);
                        }
                        merged = p;
                    }
                    self.record_event(PredictionEvent {
                        region,
                        trigger,
                        second,
                        dc_value: self.dc.value(),
                        outcome: outcome.kind(),
                        merged_l1: merged.l1_count(),
                        merged_l2: merged.l2_count(),
                    });
                }
                None => {
                    // Newly activated region; LRU eviction silently drops a
                    // one-bit pattern.
                    let entry = FtEntry { pc_hash: hashed_pc(access.pc), trigger: off8 };
                    if self.ft.insert(ft_set, region, entry).is_some() {
                        self.stats.ft_evictions += 1;
                    }
                }
            }
        }

        self.pb
            .drain(self.cfg.pb_drain)
            .into_iter()
            .map(|(r, o, level)| self.request_for(r, o, level))
            .collect()
    }

    fn flush(&mut self) {
        self.flush_tables();
    }

    fn name(&self) -> &'static str {
        match self.variant {
            GazeVariant::Full => "gaze",
            GazeVariant::PhtOnly => "gaze-pht-only",
            GazeVariant::SmOnly => "gaze-sm-only",
        }
    }
}
