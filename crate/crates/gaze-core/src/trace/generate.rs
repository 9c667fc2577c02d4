//! Synthetic trace generators.
//!
//! Each generator is a pure function of its `TraceSpec`: the same spec
//! always produces a byte-identical trace. Addresses assume 64-byte blocks
//! and, where regions matter, 4KB regions.

use crate::rng::SplitMix64;

use super::{AccessKind, MemoryAccess};

const BLOCK: u64 = 64;
const REGION: u64 = 4096;
const BLOCKS_PER_REGION: u64 = REGION / BLOCK;

/// One entry of a replay library: the in-region access order and the
/// instruction address the accesses are attributed to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayPattern {
    pub offsets: Vec<u8>,
    pub pc: u64,
}

/// One region activation: which region to touch and which library pattern
/// to replay inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation {
    pub region: u64,
    pub pattern: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSpec {
    /// Consecutive block addresses covering whole regions in order.
    Streaming { length: usize, start: u64, instr_step: u64 },
    /// Constant block stride from a start address.
    Strided { length: usize, start: u64, stride_blocks: i64, instr_step: u64 },
    /// Regions activated in sequence, each replaying a library pattern.
    PatternReplay {
        library: Vec<ReplayPattern>,
        activations: Vec<Activation>,
        instr_step: u64,
    },
    /// Uniform random blocks across a contiguous page set.
    Irregular { length: usize, base_region: u64, regions: u64, seed: u64, instr_step: u64 },
    /// Dense sequential frontier scans interleaved with sparse reads that
    /// touch a region header and then a few scattered blocks.
    BfsMixed { length: usize, frontier_density: f64, seed: u64, instr_step: u64 },
    /// Seeded pattern-replay suite with conflicts injected at key depths
    /// one through four; drives the initial-access sweep.
    Conflict { seed: u64, rounds: usize, instr_step: u64 },
}

#[derive(Debug)]
pub enum GenerateError {
    ZeroLength,
    BadParam(String),
}

impl std::fmt::Display for GenerateError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenerateError::ZeroLength => write!(f, "trace length must be nonzero"),
            GenerateError::BadParam(m) => write!(f, "bad generator parameter: {m}"),
        }
    }
}

impl std::error::Error for GenerateError {}

impl TraceSpec {
    pub fn generate(&self) -> Result<Vec<MemoryAccess>, GenerateError> {
        match self {
            TraceSpec::Streaming { length, start, instr_step } => {
                if *length == 0 {
                    return Err(GenerateError::ZeroLength);
                }
                let pc = 0x40_0100;
                Ok((0..*length)
                    .map(|i| MemoryAccess {
                        instr_id: i as u64 * instr_step,
                        pc,
                        vaddr: start + i as u64 * BLOCK,
                        kind: AccessKind::Load,
                    })
                    .collect())
            }
            TraceSpec::Strided { length, start, stride_blocks, instr_step } => {
                if *length == 0 {
                    return Err(GenerateError::ZeroLength);
                }
                if *stride_blocks == 0 {
                    return Err(GenerateError::BadParam("stride must be nonzero".into()));
                }
                let pc = 0x40_0200;
                Ok((0..*length)
                    .map(|i| MemoryAccess {
                        instr_id: i as u64 * instr_step,
                        pc,
                        vaddr: (*start as i64 + i as i64 * stride_blocks * BLOCK as i64) as u64,
                        kind: AccessKind::Load,
                    })
                    .collect())
            }
            TraceSpec::PatternReplay { library, activations, instr_step } => {
                if activations.is_empty() {
                    return Err(GenerateError::ZeroLength);
                }
                for (i, p) in library.iter().enumerate() {
                    if p.offsets.is_empty() {
                        return Err(GenerateError::BadParam(format!("pattern {i} is empty")));
                    }
                    if p.offsets.iter().any(|&o| o as u64 >= BLOCKS_PER_REGION) {
                        return Err(GenerateError::BadParam(format!(
                            "pattern {i} has an offset past the region end"
                        )));
                    }
                }
                let mut out = Vec::new();
                let mut instr = 0u64;
                for a in activations {
                    let pattern = library.get(a.pattern).ok_or_else(|| {
                        GenerateError::BadParam(format!("activation names pattern {}", a.pattern))
                    })?;
                    for &off in &pattern.offsets {
                        out.push(MemoryAccess {
                            instr_id: instr,
                            pc: pattern.pc,
                            vaddr: a.region * REGION + off as u64 * BLOCK,
                            kind: AccessKind::Load,
                        });
                        instr += instr_step;
                    }
                }
                Ok(out)
            }
            TraceSpec::Irregular { length, base_region, regions, seed, instr_step } => {
                if *length == 0 {
                    return Err(GenerateError::ZeroLength);
                }
                if *regions == 0 {
                    return Err(GenerateError::BadParam("page set must be nonempty".into()));
                }
                let mut rng = SplitMix64::new(*seed);
                Ok((0..*length)
                    .map(|i| {
                        let region = base_region + rng.below(*regions);
                        let offset = rng.below(BLOCKS_PER_REGION);
                        MemoryAccess {
                            instr_id: i as u64 * instr_step,
                            pc: 0x40_0300 + rng.below(4) * 0x10,
                            vaddr: region * REGION + offset * BLOCK,
                            kind: AccessKind::Load,
                        }
                    })
                    .collect())
            }
            TraceSpec::BfsMixed { length, frontier_density, seed, instr_step } => {
                generate_bfs_mixed(*length, *frontier_density, *seed, *instr_step)
            }
            TraceSpec::Conflict { seed, rounds, instr_step } => {
                let (library, activations) = conflict_suite(*seed, *rounds);
                TraceSpec::PatternReplay { library, activations, instr_step: *instr_step }
                    .generate()
            }
        }
    }
}

const PC_SCAN: u64 = 0x41_0000;
const PC_HEADER: u64 = 0x41_0040;
const PC_NEIGHBOR: u64 = 0x41_0080;

fn generate_bfs_mixed(
    length: usize,
    frontier_density: f64,
    seed: u64,
    instr_step: u64,
) -> Result<Vec<MemoryAccess>, GenerateError> {
    if length == 0 {
        return Err(GenerateError::ZeroLength);
    }
    if !(0.0..=1.0).contains(&frontier_density) {
        return Err(GenerateError::BadParam("frontier density must be in [0,1]".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(length);
    let mut instr = 0u64;
    // Frontier arrays and vertex data live in separate address ranges; both
    // advance through fresh regions, the way a growing traversal does.
    let mut frontier_region = 0x1_0000u64;
    let mut data_region = 0x8_0000u64;
    let push = |out: &mut Vec<MemoryAccess>, pc: u64, vaddr: u64, instr: &mut u64| {
        out.push(MemoryAccess { instr_id: *instr, pc, vaddr, kind: AccessKind::Load });
        *instr += instr_step;
    };
    while out.len() < length {
        if rng.chance(frontier_density) {
            // Dense burst: scan one whole frontier region in order.
            for off in 0..BLOCKS_PER_REGION {
                push(&mut out, PC_SCAN, frontier_region * REGION + off * BLOCK, &mut instr);
                if out.len() == length {
                    break;
                }
            }
            frontier_region += 1;
        } else {
            // Sparse burst: a few vertices, each touching its structure
            // header (blocks 0 and 1) and then scattered neighbors.
            for _ in 0..(1 + rng.below(4)) {
                push(&mut out, PC_HEADER, data_region * REGION, &mut instr);
                if out.len() == length {
                    break;
                }
                push(&mut out, PC_HEADER, data_region * REGION + BLOCK, &mut instr);
                let reads = 1 + rng.below(3);
                for _ in 0..reads {
                    if out.len() == length {
                        break;
                    }
                    let off = 2 + rng.below(BLOCKS_PER_REGION - 2);
                    push(&mut out, PC_NEIGHBOR, data_region * REGION + off * BLOCK, &mut instr);
                }
                data_region += 1;
                if out.len() == length {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Builds the three-region training set plus a candidate whose first two
/// accesses match exactly one of them. Regions share a trigger offset, so a
/// trigger-only table cannot tell them apart; the filler activations force
/// the training regions out of the accumulation table before the candidate
/// arrives.
pub fn conflict_scenario() -> (TraceSpec, ConflictExpectation) {
    let library = vec![
        ReplayPattern { offsets: vec![0, 4, 8, 12], pc: 0x50_0000 },
        ReplayPattern { offsets: vec![0, 2, 5, 9, 11, 13], pc: 0x50_0010 },
        ReplayPattern { offsets: vec![0, 4, 8, 12], pc: 0x50_0020 },
        ReplayPattern { offsets: vec![3, 7], pc: 0x50_0030 },
    ];
    let base = 0x100u64;
    let mut activations = vec![
        Activation { region: base, pattern: 0 },
        Activation { region: base + 8, pattern: 1 },
        Activation { region: base + 16, pattern: 2 },
    ];
    // Eight fillers in the same accumulation-table set evict all three
    // training regions (8-way sets), forcing their patterns to be learned.
    for k in 0..8 {
        activations.push(Activation { region: base + 24 + 8 * k, pattern: 3 });
    }
    let candidate = base + 96;
    activations.push(Activation { region: candidate, pattern: 1 });
    let spec = TraceSpec::PatternReplay { library, activations, instr_step: 1 };
    let expectation = ConflictExpectation {
        candidate_region: candidate,
        matched_offsets: vec![5, 9, 11, 13],
        trigger_only_offsets: vec![4, 8, 12],
    };
    (spec, expectation)
}

/// What the conflict scenario should produce for the candidate region:
/// the matched pattern minus the two demanded offsets, and the stale
/// pattern a trigger-only table serves instead.
#[derive(Debug, Clone)]
pub struct ConflictExpectation {
    pub candidate_region: u64,
    /// Offsets a two-access match prefetches for the candidate.
    pub matched_offsets: Vec<u8>,
    /// Offsets a trigger-only table prefetches for the candidate.
    pub trigger_only_offsets: Vec<u8>,
}

/// Pattern suite with conflicts at depths 1..4.
///
/// Band layout over offsets 2..64 (then permuted per seed):
///   depth-1 family: two patterns sharing a trigger, diverging at the second
///   depth-2 family: two patterns sharing (trigger, second)
///   depth-3 family: two patterns sharing the first three offsets
///   stubs: two-access patterns sharing a trigger
///   plain: six consistent four-access patterns with unique triggers
///
/// Every round activates both variants of each family in fresh regions, so
/// whichever variant a shallow key currently stores, the other one misuses
/// it; a key deep enough to separate the variants predicts both exactly.
fn conflict_suite(seed: u64, rounds: usize) -> (Vec<ReplayPattern>, Vec<Activation>) {
    let mut rng = SplitMix64::new(seed);
    // Permute offsets 2..64 so each seed exercises different table sets.
    let mut perm: Vec<u8> = (2..64).collect();
    rng.shuffle(&mut perm);
    let p = |band: &[usize]| -> Vec<u8> { band.iter().map(|&i| perm[i - 2]).collect() };

    let mut library = vec![
        // Depth-1: [t, sV, c c c, dV dV] with three divergent offsets.
        ReplayPattern { offsets: p(&[2, 3, 5, 6, 7, 8, 9]), pc: 0x52_0000 },
        ReplayPattern { offsets: p(&[2, 4, 5, 6, 7, 10, 11]), pc: 0x52_0010 },
        // Depth-2: [t, s, uV, e e e, fV fV].
        ReplayPattern { offsets: p(&[12, 13, 14, 16, 17, 18, 19, 20]), pc: 0x52_0020 },
        ReplayPattern { offsets: p(&[12, 13, 15, 16, 17, 18, 21, 22]), pc: 0x52_0030 },
        // Depth-3: [t, s, u, vV, g g g, hV hV].
        ReplayPattern { offsets: p(&[23, 24, 25, 26, 28, 29, 30, 31, 32]), pc: 0x52_0040 },
        ReplayPattern { offsets: p(&[23, 24, 25, 27, 28, 29, 30, 33, 34]), pc: 0x52_0050 },
    ];
    // Stubs: [t, xi], too short to train deep keys.
    let stubs_at = library.len();
    for i in 0..4 {
        library.push(ReplayPattern { offsets: p(&[35, 36 + i]), pc: 0x52_0060 + i as u64 * 0x10 });
    }
    // Plain patterns: unique triggers, stable four-access bodies.
    let plain_at = library.len();
    for i in 0..6 {
        let b = 40 + 4 * i;
        library.push(ReplayPattern {
            offsets: p(&[b, b + 1, b + 2, b + 3]),
            pc: 0x52_1000 + i as u64 * 0x10,
        });
    }

    let mut activations = Vec::new();
    let mut next_region = 0x2000u64;
    for round in 0..rounds {
        let mut round_patterns: Vec<usize> = (0..6).collect(); // both family variants
        round_patterns.extend((0..6).map(|i| plain_at + i));
        round_patterns.push(stubs_at + round % 4);
        round_patterns.push(stubs_at + (round + 2) % 4);
        rng.shuffle(&mut round_patterns);
        for pattern in round_patterns {
            activations.push(Activation { region: next_region, pattern });
            next_region += 1;
        }
    }
    (library, activations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::footprint::Footprint;
    use std::collections::HashMap;

    #[test]
    fn streaming_matches_documented_addresses() {
        let spec = TraceSpec::Streaming { length: 128, start: 0x10000, instr_step: 1 };
        let trace = spec.generate().unwrap();
        assert_eq!(trace.len(), 128);
        assert_eq!(trace[0].vaddr, 0x10000);
        assert_eq!(trace[1].vaddr, 0x10040);
        assert_eq!(trace[127].vaddr, 0x11FC0);
    }

    #[test]
    fn strided_matches_documented_addresses() {
        let spec = TraceSpec::Strided { length: 4, start: 0x0, stride_blocks: 2, instr_step: 1 };
        let addrs: Vec<u64> = spec.generate().unwrap().iter().map(|a| a.vaddr).collect();
        assert_eq!(addrs, vec![0x0, 0x80, 0x100, 0x180]);
    }

    #[test]
    fn generators_are_deterministic() {
        let specs = [
            TraceSpec::Irregular { length: 500, base_region: 10, regions: 32, seed: 9, instr_step: 1 },
            TraceSpec::BfsMixed { length: 500, frontier_density: 0.4, seed: 9, instr_step: 1 },
            TraceSpec::Conflict { seed: 9, rounds: 4, instr_step: 1 },
        ];
        for spec in specs {
            assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        }
    }

    #[test]
    fn streaming_covers_whole_regions() {
        let spec = TraceSpec::Streaming { length: 256, start: 0x40000, instr_step: 1 };
        let trace = spec.generate().unwrap();
        let mut footprints: HashMap<u64, Footprint> = HashMap::new();
        for a in &trace {
            let region = a.vaddr / 4096;
            let offset = (a.vaddr / 64 % 64) as usize;
            footprints.entry(region).or_insert_with(|| Footprint::new(64)).set(offset);
        }
        assert_eq!(footprints.len(), 4);
        for fp in footprints.values() {
            assert_eq!(fp.popcount(), 64);
        }
    }

    #[test]
    fn zero_length_rejected() {
        let spec = TraceSpec::Streaming { length: 0, start: 0, instr_step: 1 };
        assert!(matches!(spec.generate(), Err(GenerateError::ZeroLength)));
    }

    #[test]
    fn replay_emits_pattern_order() {
        let spec = TraceSpec::PatternReplay {
            library: vec![ReplayPattern { offsets: vec![7, 2, 9], pc: 0x1000 }],
            activations: vec![Activation { region: 5, pattern: 0 }],
            instr_step: 2,
        };
        let trace = spec.generate().unwrap();
        let offs: Vec<u64> = trace.iter().map(|a| a.vaddr / 64 % 64).collect();
        assert_eq!(offs, vec![7, 2, 9]);
        assert_eq!(trace[2].instr_id, 4);
        assert!(trace.iter().all(|a| a.vaddr / 4096 == 5));
    }

    #[test]
    fn bfs_mixed_contains_both_phases() {
        let spec = TraceSpec::BfsMixed { length: 2000, frontier_density: 0.5, seed: 3, instr_step: 1 };
        let trace = spec.generate().unwrap();
        assert!(trace.iter().any(|a| a.pc == PC_SCAN));
        assert!(trace.iter().any(|a| a.pc == PC_HEADER));
        assert!(trace.iter().any(|a| a.pc == PC_NEIGHBOR));
        assert_eq!(trace.len(), 2000);
    }

    #[test]
    fn conflict_suite_offsets_stay_distinct() {
        for seed in 0..5 {
            let (library, activations) = conflict_suite(seed, 3);
            for p in &library {
                let mut seen = std::collections::HashSet::new();
                for &o in &p.offsets {
                    assert!((2..64).contains(&o));
                    assert!(seen.insert(o), "duplicate offset in pattern");
                }
            }
            assert!(!activations.is_empty());
        }
    }
}
