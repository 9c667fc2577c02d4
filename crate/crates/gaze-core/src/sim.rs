//! End-to-end simulation: feed a trace through the hierarchy with one
//! prefetcher attached and derive the run metrics.

use crate::memsys::{Hierarchy, HierarchyConfig, NullPrefetcher, Prefetcher};
use crate::metrics::{late_fraction, llc_coverage, overall_accuracy, speedup, RunReport};
use crate::trace::{AccessKind, MemoryAccess};

/// Runs one simulation. Stores are dropped with a counter; loads drive the
/// hierarchy and the prefetcher callback. The prefetcher's remaining
/// tracked state is flushed at the end, then the counters are closed out
/// and checked for conservation.
pub fn run_trace(
    accesses: &[MemoryAccess],
    cfg: HierarchyConfig,
    prefetcher: &mut dyn Prefetcher,
) -> RunReport {
    let mut hierarchy = Hierarchy::new(cfg);
    let mut stores_dropped = 0u64;
    let mut first_instr = None;
    let mut last_instr = 0u64;
    for access in accesses {
        if access.kind == AccessKind::Store {
            stores_dropped += 1;
            continue;
        }
        if first_instr.is_none() {
            first_instr = Some(access.instr_id);
        }
        last_instr = access.instr_id;
        hierarchy.step(access, prefetcher);
    }
    prefetcher.flush();
    hierarchy.finalize();
    let counters = hierarchy.counters;
    assert!(
        counters.conservation_holds(),
        "prefetch accounting identity violated: {counters:?}"
    );
    let instructions = first_instr.map_or(0, |f| last_instr - f + 1);
    RunReport {
        prefetcher: prefetcher.name().to_string(),
        accesses: hierarchy.demand.accesses,
        stores_dropped,
        instructions,
        cycles: hierarchy.cycles(),
        baseline_cycles: None,
        counters,
        demand: hierarchy.demand,
        accuracy: overall_accuracy(&counters),
        coverage: llc_coverage(&counters),
        late_fraction: late_fraction(&counters),
        speedup: None,
    }
}

/// Runs the prefetcher and a no-prefetch baseline on the same trace and
/// config, filling in the speedup proxy.
pub fn run_with_baseline(
    accesses: &[MemoryAccess],
    cfg: HierarchyConfig,
    prefetcher: &mut dyn Prefetcher,
) -> RunReport {
    let baseline = run_trace(accesses, cfg, &mut NullPrefetcher);
    let mut report = run_trace(accesses, cfg, prefetcher);
    report.baseline_cycles = Some(baseline.cycles);
    report.speedup = Some(speedup(report.cycles, baseline.cycles));
    report
}
