//! Pattern-table prefetcher keyed by the region's first N distinct-offset
//! accesses.
//!
//! N = 1 is the trigger-offset-only scheme: a direct-mapped 64-entry table
//! indexed by the trigger, predicting at the activation access. N >= 2
//! waits for the Nth distinct access and looks up a 256-entry
//! fully-associative table keyed by the concatenated offsets. Tracking
//! reuses the filter-table / accumulation-table / prefetch-buffer pipeline,
//! so at N = 2 the request stream matches the pattern-table-only
//! configuration of the main prefetcher exactly (up to table organization).

use crate::footprint::{Footprint, PrefetchPattern};
use crate::gaze::{PrefetchBuffer, SetAssocTable};
use crate::memsys::{AccessOutcome, Prefetcher, PrefetchRequest};
use crate::trace::MemoryAccess;

const MAX_KEY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NAccessConfig {
    /// Required aligned initial accesses, 1..=4.
    pub n: usize,
    pub region_bytes: usize,
    pub block_bytes: usize,
    pub ft_entries: usize,
    pub ft_ways: usize,
    pub at_entries: usize,
    pub at_ways: usize,
    /// Pattern table entries: direct-mapped when n == 1, fully associative
    /// otherwise.
    pub table_entries: usize,
    pub pb_entries: usize,
    pub pb_ways: usize,
    pub pb_drain: usize,
}

impl NAccessConfig {
    pub fn new(n: usize) -> Self {
        assert!((1..=MAX_KEY).contains(&n), "n must be in 1..=4");
        Self {
            n,
            region_bytes: 4096,
            block_bytes: 64,
            ft_entries: 64,
            ft_ways: 8,
            at_entries: 64,
            at_ways: 8,
            table_entries: if n == 1 { 64 } else { 256 },
            pb_entries: 32,
            pb_ways: 8,
            pb_drain: 2,
        }
    }

    fn blocks_per_region(&self) -> usize {
        self.region_bytes / self.block_bytes
    }
}

#[derive(Debug, Clone)]
struct FtEntry {
    trigger: u8,
}

#[derive(Debug, Clone)]
struct TrackEntry {
    keys: [u8; MAX_KEY],
    nkeys: u8,
    footprint: Footprint,
}

enum PatternStore {
    Direct(Vec<Option<Footprint>>),
    Assoc(SetAssocTable<Footprint>),
}

impl PatternStore {
    fn lookup(&mut self, key: &[u8]) -> Option<Footprint> {
        match self {
            PatternStore::Direct(slots) => slots[key[0] as usize % slots.len()],
            PatternStore::Assoc(table) => table.get_mut(0, assoc_tag(key)).copied(),
        }
    }

    fn train(&mut self, key: &[u8], footprint: Footprint) {
        match self {
            PatternStore::Direct(slots) => {
                let idx = key[0] as usize % slots.len();
                slots[idx] = Some(footprint);
            }
            PatternStore::Assoc(table) => {
                let tag = assoc_tag(key);
                match table.get_mut(0, tag) {
                    Some(slot) => *slot = footprint,
                    None => {
                        table.insert(0, tag, footprint);
                    }
                }
            }
        }
    }
}

fn assoc_tag(key: &[u8]) -> u64 {
    key.iter().enumerate().fold(0u64, |acc, (i, &k)| acc | (k as u64) << (8 * i))
}

pub struct NAccessPrefetcher {
    cfg: NAccessConfig,
    ft: SetAssocTable<FtEntry>,
    at: SetAssocTable<TrackEntry>,
    store: PatternStore,
    pb: PrefetchBuffer,
    name: &'static str,
}

impl NAccessPrefetcher {
    pub fn new(cfg: NAccessConfig) -> Self {
        assert!((1..=MAX_KEY).contains(&cfg.n));
        let blocks = cfg.blocks_per_region();
        let store = if cfg.n == 1 {
            PatternStore::Direct(vec![None; cfg.table_entries])
        } else {
            PatternStore::Assoc(SetAssocTable::new(cfg.table_entries, cfg.table_entries))
        };
        Self {
            ft: SetAssocTable::new(cfg.ft_entries, cfg.ft_ways),
            at: SetAssocTable::new(cfg.at_entries, cfg.at_ways),
            store,
            pb: PrefetchBuffer::new(cfg.pb_entries, cfg.pb_ways, blocks),
            name: match cfg.n {
                1 => "n-access:1",
                2 => "n-access:2",
                3 => "n-access:3",
                _ => "n-access:4",
            },
            cfg,
        }
    }

    fn region_and_offset(&self, vaddr: u64) -> (u64, usize) {
        let region = vaddr >> self.cfg.region_bytes.trailing_zeros();
        let offset = (vaddr >> self.cfg.block_bytes.trailing_zeros()) as usize
            & (self.cfg.blocks_per_region() - 1);
        (region, offset)
    }

    fn ft_set(&self, region: u64) -> usize {
        (region % self.ft.num_sets() as u64) as usize
    }

    fn at_set(&self, region: u64) -> usize {
        (region % self.at.num_sets() as u64) as usize
    }

    /// Lookup and merge once a region's key is complete. The demanded key
    /// offsets are excluded from the merged pattern.
    fn predict_and_merge(&mut self, region: u64, key: &[u8], demanded: &Footprint) {
        if let Some(fp) = self.store.lookup(key) {
            let mut pattern = PrefetchPattern::all_l1(&fp);
            pattern.exclude(demanded);
            if !pattern.is_empty() {
                self.pb.merge(region, &pattern);
            }
        }
    }

    fn train_victim(&mut self, victim: &TrackEntry) {
        if (victim.nkeys as usize) < self.cfg.n {
            return;
        }
        let key = &victim.keys[..self.cfg.n];
        self.store.train(key, victim.footprint);
    }
}

impl Prefetcher for NAccessPrefetcher {
    fn observe(&mut self, access: &MemoryAccess, _outcome: &AccessOutcome) -> Vec<PrefetchRequest> {
        let (region, offset) = self.region_and_offset(access.vaddr);
        let off8 = offset as u8;
        let at_set = self.at_set(region);

        if let Some(entry) = self.at.get_mut(at_set, region) {
            let new_block = !entry.footprint.get(offset);
            entry.footprint.set(offset);
            if new_block && (entry.nkeys as usize) < MAX_KEY {
                entry.keys[entry.nkeys as usize] = off8;
                entry.nkeys += 1;
                if entry.nkeys as usize == self.cfg.n {
                    let key: Vec<u8> = entry.keys[..self.cfg.n].to_vec();
                    let demanded = entry.footprint;
                    self.predict_and_merge(region, &key, &demanded);
                }
            }
        } else {
            let ft_set = self.ft_set(region);
            match self.ft.peek(ft_set, region) {
                Some(fte) if fte.trigger == off8 => {
                    self.ft.touch(ft_set, region);
                }
                Some(_) => {
                    let fte = self.ft.remove(ft_set, region).unwrap();
                    let trigger = fte.trigger;
                    let mut keys = [0u8; MAX_KEY];
                    keys[0] = trigger;
                    keys[1] = off8;
                    let mut footprint = Footprint::new(self.cfg.blocks_per_region());
                    footprint.set(trigger as usize);
                    footprint.set(offset);
                    let entry = TrackEntry { keys, nkeys: 2, footprint };
                    if let Some((_, victim)) = self.at.insert(at_set, region, entry) {
                        self.train_victim(&victim);
                    }
                    if self.cfg.n == 2 {
                        self.predict_and_merge(region, &[trigger, off8], &footprint);
                    }
                }
                None => {
                    self.ft.insert(ft_set, region, FtEntry { trigger: off8 });
                    if self.cfg.n == 1 {
                        let mut demanded = Footprint::new(self.cfg.blocks_per_region());
                        demanded.set(offset);
                        self.predict_and_merge(region, &[off8], &demanded);
                    }
                }
            }
        }

        let region_shift = self.cfg.region_bytes.trailing_zeros();
        let block_shift = self.cfg.block_bytes.trailing_zeros();
        self.pb
            .drain(self.cfg.pb_drain)
            .into_iter()
            .map(|(r, o, level)| PrefetchRequest {
                block_addr: (r << region_shift) + ((o as u64) << block_shift),
                fill: level,
            })
            .collect()
    }

    fn flush(&mut self) {
        for (_, victim) in self.at.drain_all() {
            self.train_victim(&victim);
        }
        self.ft.drain_all();
    }

    fn name(&self) -> &'static str {
        self.name
    }
}
