//! Spatial footprints and per-offset prefetch patterns.
//!
//! A footprint records which blocks of a region were touched while the
//! region was active. Patterns pair two footprints: the offsets destined
//! for the L1D and the offsets destined for the L2C. The two sets are kept
//! disjoint, with L1D taking precedence.

/// Upper bound on blocks per region (32KB regions with 64B blocks).
pub const MAX_BLOCKS: usize = 512;

const WORDS: usize = MAX_BLOCKS / 64;

/// Fixed-width bit vector over the blocks of one region.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    words: [u64; WORDS],
    len: u16,
}

impl Footprint {
    pub fn new(len: usize) -> Self {
        assert!((1..=MAX_BLOCKS).contains(&len));
        Self { words: [0; WORDS], len: len as u16 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn get(&self, offset: usize) -> bool {
        debug_assert!(offset < self.len());
        self.words[offset / 64] >> (offset % 64) & 1 == 1
    }

    pub fn set(&mut self, offset: usize) {
        debug_assert!(offset < self.len());
        self.words[offset / 64] |= 1 << (offset % 64);
    }

    pub fn clear(&mut self, offset: usize) {
        debug_assert!(offset < self.len());
        self.words[offset / 64] &= !(1 << (offset % 64));
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when every block of the region is marked.
    pub fn is_full(&self) -> bool {
        self.popcount() == self.len()
    }

    pub fn union_with(&mut self, other: &Footprint) {
        debug_assert_eq!(self.len, other.len);
        for (w, o) in self.words.iter_mut().zip(other.words.iter()) {
            *w |= *o;
        }
    }

    /// Removes every offset that is set in `other`.
    pub fn subtract(&mut self, other: &Footprint) {
        debug_assert_eq!(self.len, other.len);
        for (w, o) in self.words.iter_mut().zip(other.words.iter()) {
            *w &= !*o;
        }
    }

    /// Offsets currently set, in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.get(i))
    }

    pub fn from_offsets(len: usize, offsets: &[usize]) -> Self {
        let mut fp = Self::new(len);
        for &o in offsets {
            fp.set(o);
        }
        fp
    }
}

impl std::fmt::Debug for Footprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Footprint[")?;
        for (i, o) in self.ones().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, "]/{}", self.len)
    }
}

/// Per-offset prefetch destinations for one region.
///
/// Encodes the three live states of the stored 2-bit pattern: no prefetch,
/// prefetch to L1D, prefetch to L2C. L1D outranks L2C when patterns merge.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PrefetchPattern {
    pub l1: Footprint,
    pub l2: Footprint,
}

impl PrefetchPattern {
    pub fn new(len: usize) -> Self {
        Self { l1: Footprint::new(len), l2: Footprint::new(len) }
    }

    /// All given offsets to L1D.
    pub fn all_l1(footprint: &Footprint) -> Self {
        Self { l1: *footprint, l2: Footprint::new(footprint.len()) }
    }

    pub fn is_empty(&self) -> bool {
        self.l1.is_empty() && self.l2.is_empty()
    }

    /// Max-urgency merge: L1D beats L2C beats nothing.
    pub fn merge_from(&mut self, other: &PrefetchPattern) {
        self.l1.union_with(&other.l1);
        self.l2.union_with(&other.l2);
        self.l2.subtract(&self.l1);
    }

    /// Drops the given offsets from both levels.
    pub fn exclude(&mut self, mask: &Footprint) {
        self.l1.subtract(mask);
        self.l2.subtract(mask);
    }

    pub fn l1_count(&self) -> usize {
        self.l1.popcount()
    }

    pub fn l2_count(&self) -> usize {
        self.l2.popcount()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_clear() {
        let mut fp = Footprint::new(64);
        assert!(!fp.get(5));
        fp.set(5);
        fp.set(63);
        assert!(fp.get(5));
        assert!(fp.get(63));
        assert_eq!(fp.popcount(), 2);
        fp.clear(5);
        assert!(!fp.get(5));
        assert_eq!(fp.popcount(), 1);
    }

    #[test]
    fn full_region_detection() {
        let mut fp = Footprint::new(32);
        for i in 0..32 {
            fp.set(i);
        }
        assert!(fp.is_full());
        fp.clear(17);
        assert!(!fp.is_full());
    }

    #[test]
    fn wide_region_offsets() {
        let mut fp = Footprint::new(512);
        fp.set(511);
        fp.set(64);
        assert_eq!(fp.ones().collect::<Vec<_>>(), vec![64, 511]);
    }

    #[test]
    fn merge_prefers_l1() {
        let len = 64;
        let mut a = PrefetchPattern::new(len);
        a.l2.set(4);
        let mut b = PrefetchPattern::new(len);
        b.l1.set(4);
        a.merge_from(&b);
        assert!(a.l1.get(4));
        assert!(!a.l2.get(4));

        // and the reverse: an L1D offset is never demoted by an L2C merge
        let mut c = PrefetchPattern::new(len);
        c.l1.set(9);
        let mut d = PrefetchPattern::new(len);
        d.l2.set(9);
        c.merge_from(&d);
        assert!(c.l1.get(9));
        assert!(!c.l2.get(9));
    }
}
