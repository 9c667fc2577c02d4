//! Set-associative LRU cache of block addresses.
//!
//! Lines carry a prefetch tag so the hierarchy can classify each prefetched
//! block as useful (first demand touch) or useless (evicted untouched), and
//! a from-memory flag for LLC coverage accounting.

use super::CacheConfig;

#[derive(Debug, Clone, Copy)]
struct Line {
    block: u64,
    stamp: u64,
    /// Set while the line awaits its first demand touch after a prefetch fill.
    prefetched: bool,
    /// The prefetch that installed this line fetched from memory.
    from_mem: bool,
}

/// A line evicted to make room, reported so the owner can classify it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evicted {
    pub block: u64,
    pub prefetched: bool,
}

#[derive(Debug)]
pub struct Cache {
    sets: Vec<Vec<Line>>,
    ways: usize,
    stamp: u64,
}

impl Cache {
    pub fn new(cfg: &CacheConfig) -> Self {
        let sets = cfg.sets();
        Self { sets: vec![Vec::new(); sets], ways: cfg.associativity, stamp: 0 }
    }

    fn set_of(&self, block: u64) -> usize {
        (block % self.sets.len() as u64) as usize
    }

    /// Residency probe; does not disturb LRU order.
    pub fn contains(&self, block: u64) -> bool {
        self.sets[self.set_of(block)].iter().any(|l| l.block == block)
    }

    /// Demand lookup: refreshes LRU and consumes the prefetch tag.
    /// Returns `(prefetched, from_mem)` captured before the tag was cleared.
    pub fn demand_lookup(&mut self, block: u64) -> Option<(bool, bool)> {
        let set = self.set_of(block);
        self.stamp += 1;
        let stamp = self.stamp;
        let line = self.sets[set].iter_mut().find(|l| l.block == block)?;
        line.stamp = stamp;
        let state = (line.prefetched, line.from_mem);
        line.prefetched = false;
        Some(state)
    }

    /// Installs a block, evicting the LRU line of a full set.
    /// Re-installing a resident block refreshes it in place.
    pub fn insert(&mut self, block: u64, prefetched: bool, from_mem: bool) -> Option<Evicted> {
        let set = self.set_of(block);
        self.stamp += 1;
        let stamp = self.stamp;
        let lines = &mut self.sets[set];
        if let Some(line) = lines.iter_mut().find(|l| l.block == block) {
            line.stamp = stamp;
            return None;
        }
        let mut victim = None;
        if lines.len() == self.ways {
            let lru = lines
                .iter()
                .enumerate()
                .min_by_key(|(_, l)| l.stamp)
                .map(|(i, _)| i)
                .unwrap();
            let out = lines.swap_remove(lru);
            victim = Some(Evicted { block: out.block, prefetched: out.prefetched });
        }
        lines.push(Line { block, stamp, prefetched, from_mem });
        victim
    }

    /// Clears a prefetch tag without touching LRU state; used when the
    /// block's coverage credit was claimed at a higher level.
    pub fn clear_prefetch_tag(&mut self, block: u64) {
        let set = self.set_of(block);
        if let Some(line) = self.sets[set].iter_mut().find(|l| l.block == block) {
            line.prefetched = false;
        }
    }

    /// Remaining prefetched-but-untouched blocks; drained by end-of-run
    /// classification.
    pub fn untouched_prefetched(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .sets
            .iter()
            .flatten()
            .filter(|l| l.prefetched)
            .map(|l| l.block)
            .collect();
        out.sort_unstable();
        out
    }

    #[cfg(test)]
    pub fn max_set_len(&self) -> usize {
        self.sets.iter().map(|s| s.len()).max().unwrap_or(0)
    }
}
