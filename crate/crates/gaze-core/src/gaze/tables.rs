//! Hardware table models: set-associative LRU storage, the dense PC table,
//! the dense counter, and the prefetch buffer.

use crate::footprint::{Footprint, PrefetchPattern};
use crate::memsys::FillLevel;

#[derive(Debug, Clone)]
struct Slot<V> {
    tag: u64,
    stamp: u64,
    value: V,
}

/// Set-associative table with true-LRU replacement. Tags are full-width;
/// the storage report accounts for the architectural tag widths separately.
#[derive(Debug)]
pub struct SetAssocTable<V> {
    sets: Vec<Vec<Slot<V>>>,
    ways: usize,
    stamp: u64,
}

impl<V> SetAssocTable<V> {
    pub fn new(entries: usize, ways: usize) -> Self {
        assert!(ways > 0 && entries.is_multiple_of(ways));
        let sets = entries / ways;
        Self { sets: (0..sets).map(|_| Vec::new()).collect(), ways, stamp: 0 }
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn contains(&self, set: usize, tag: u64) -> bool {
        self.sets[set].iter().any(|s| s.tag == tag)
    }

    pub fn peek(&self, set: usize, tag: u64) -> Option<&V> {
        self.sets[set].iter().find(|s| s.tag == tag).map(|s| &s.value)
    }

    /// Value access that leaves replacement recency untouched.
    pub fn peek_mut(&mut self, set: usize, tag: u64) -> Option<&mut V> {
        self.sets[set].iter_mut().find(|s| s.tag == tag).map(|s| &mut s.value)
    }

    /// Lookup that refreshes recency on hit.
    pub fn get_mut(&mut self, set: usize, tag: u64) -> Option<&mut V> {
        self.stamp += 1;
        let stamp = self.stamp;
        let slot = self.sets[set].iter_mut().find(|s| s.tag == tag)?;
        slot.stamp = stamp;
        Some(&mut slot.value)
    }

    /// Recency refresh without value access.
    pub fn touch(&mut self, set: usize, tag: u64) -> bool {
        self.get_mut(set, tag).is_some()
    }

    /// Inserts an entry, evicting the set's LRU slot when full.
    /// Returns the evicted `(tag, value)`, if any.
    pub fn insert(&mut self, set: usize, tag: u64, value: V) -> Option<(u64, V)> {
        debug_assert!(!self.contains(set, tag));
        self.stamp += 1;
        let stamp = self.stamp;
        let slots = &mut self.sets[set];
        let mut evicted = None;
        if slots.len() == self.ways {
            let lru = slots.iter().enumerate().min_by_key(|(_, s)| s.stamp).map(|(i, _)| i).unwrap();
            let out = slots.swap_remove(lru);
            evicted = Some((out.tag, out.value));
        }
        slots.push(Slot { tag, stamp, value });
        evicted
    }

    pub fn remove(&mut self, set: usize, tag: u64) -> Option<V> {
        let slots = &mut self.sets[set];
        let pos = slots.iter().position(|s| s.tag == tag)?;
        Some(slots.swap_remove(pos).value)
    }

    /// Entries in (set, insertion) order with their tags.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64, &V)> {
        self.sets
            .iter()
            .enumerate()
            .flat_map(|(i, slots)| slots.iter().map(move |s| (i, s.tag, &s.value)))
    }

    /// Removes everything, set by set, preserving in-set insertion order.
    pub fn drain_all(&mut self) -> Vec<(u64, V)> {
        let mut out = Vec::new();
        for set in &mut self.sets {
            for slot in set.drain(..) {
                out.push((slot.tag, slot.value));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// 3-bit saturating counter tracking how often recent stream-start regions
/// turned out fully dense. Large values decay fast.
#[derive(Debug, Clone, Copy)]
pub struct DenseCounter {
    value: u8,
    saturated: u8,
    half: u8,
    fast_floor: u8,
}

impl DenseCounter {
    pub fn new(saturated: u8, half: u8, fast_floor: u8) -> Self {
        Self { value: 0, saturated, half, fast_floor }
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn increment(&mut self) {
        self.value = (self.value + 1).min(self.saturated);
    }

    pub fn decrement(&mut self) {
        let step = if self.value >= self.fast_floor { 2 } else { 1 };
        self.value = self.value.saturating_sub(step);
    }

    pub fn is_saturated(&self) -> bool {
        self.value >= self.saturated
    }

    pub fn is_half(&self) -> bool {
        self.value >= self.half
    }
}

/// Fully-associative table of hashed PCs that recently triggered fully
/// dense regions.
#[derive(Debug)]
pub struct Dpct {
    entries: Vec<(u16, u64)>,
    capacity: usize,
    stamp: u64,
}

impl Dpct {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { entries: Vec::new(), capacity, stamp: 0 }
    }

    pub fn insert(&mut self, pc_hash: u16) {
        self.stamp += 1;
        if let Some(e) = self.entries.iter_mut().find(|(h, _)| *h == pc_hash) {
            e.1 = self.stamp;
            return;
        }
        if self.entries.len() == self.capacity {
            let lru = self
                .entries
                .iter()
                .enumerate()
                .min_by_key(|(_, (_, s))| *s)
                .map(|(i, _)| i)
                .unwrap();
            self.entries.swap_remove(lru);
        }
        self.entries.push((pc_hash, self.stamp));
    }

    /// Membership test; a hit counts as a use and refreshes recency.
    pub fn contains(&mut self, pc_hash: u16) -> bool {
        self.stamp += 1;
        let stamp = self.stamp;
        match self.entries.iter_mut().find(|(h, _)| *h == pc_hash) {
            Some(e) => {
                e.1 = stamp;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PbEntry {
    pattern: PrefetchPattern,
    drained: Footprint,
    merge_stamp: u64,
}

/// Per-region pending prefetch patterns with rate-limited draining.
///
/// Draining serves the most recently merged entry first, lowest offset
/// first within it. A drained offset is remembered and never re-queued by
/// later merges into the same entry.
#[derive(Debug)]
pub struct PrefetchBuffer {
    table: SetAssocTable<PbEntry>,
    blocks: usize,
    merge_stamp: u64,
    /// Undrained patterns lost to LRU eviction.
    pub discarded_patterns: u64,
}

impl PrefetchBuffer {
    pub fn new(entries: usize, ways: usize, blocks: usize) -> Self {
        Self {
            table: SetAssocTable::new(entries, ways),
            blocks,
            merge_stamp: 0,
            discarded_patterns: 0,
        }
    }

    fn set_of(&self, region: u64) -> usize {
        (region % self.table.num_sets() as u64) as usize
    }

    /// Max-urgency merge of a pattern into the region's entry, allocating
    /// one (and evicting the LRU entry) if needed.
    pub fn merge(&mut self, region: u64, pattern: &PrefetchPattern) {
        self.merge_stamp += 1;
        let stamp = self.merge_stamp;
        let set = self.set_of(region);
        if let Some(entry) = self.table.get_mut(set, region) {
            let mut p = *pattern;
            p.exclude(&entry.drained);
            entry.pattern.merge_from(&p);
            entry.merge_stamp = stamp;
            return;
        }
        let mut entry = PbEntry {
            pattern: PrefetchPattern::new(self.blocks),
            drained: Footprint::new(self.blocks),
            merge_stamp: stamp,
        };
        entry.pattern.merge_from(pattern);
        if let Some((_, old)) = self.table.insert(set, region, entry) {
            if !old.pattern.is_empty() {
                self.discarded_patterns += 1;
            }
        }
    }

    /// Emits up to `n` pending offsets as `(region, offset, level)`.
    pub fn drain(&mut self, n: usize) -> Vec<(u64, usize, FillLevel)> {
        let mut out = Vec::new();
        while out.len() < n {
            let Some((set, tag)) = self
                .table
                .iter()
                .filter(|(_, _, e)| !e.pattern.is_empty())
                .max_by_key(|(_, _, e)| e.merge_stamp)
                .map(|(s, t, _)| (s, t))
            else {
                break;
            };
            // Draining must not disturb replacement recency, which tracks
            // merges.
            let entry = self.table.peek_mut(set, tag).unwrap();
            let offset = entry
                .pattern
                .l1
                .ones()
                .chain(entry.pattern.l2.ones())
                .min()
                .expect("nonempty pattern");
            let level = if entry.pattern.l1.get(offset) { FillLevel::L1d } else { FillLevel::L2c };
            entry.pattern.l1.clear(offset);
            entry.pattern.l2.clear(offset);
            entry.drained.set(offset);
            out.push((tag, offset, level));
        }
        out
    }

    pub fn clear(&mut self) {
        self.table.drain_all();
    }

    #[cfg(test)]
    pub fn pending(&self, region: u64) -> Option<&PrefetchPattern> {
        self.table.peek(self.set_of(region), region).map(|e| &e.pattern)
    }
}
