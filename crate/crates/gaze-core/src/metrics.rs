//! Run counters, derived metrics, and report serialization.
//!
//! Accuracy is the overall form: useful prefetches at both fill levels over
//! all prefetches at both levels. Coverage is measured at the LLC. Ratios
//! with a zero denominator are undefined and serialize as null, never zero.

use serde::Serialize;

/// Prefetch bookkeeping for one run.
///
/// `n_*` counters are L1D-filled prefetches, `m_*` are L2C-filled; the `a`
/// flavor is useful (demanded before eviction), `b` useless.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrefetchCounters {
    pub n_a: u64,
    pub n_b: u64,
    pub m_a: u64,
    pub m_b: u64,
    pub late_useful: u64,
    pub timely_useful: u64,
    /// Demands that would have missed the LLC but found prefetched data
    /// (resident or in flight).
    pub llc_prefetch_hits: u64,
    /// Demands serviced by memory.
    pub llc_demand_misses: u64,
    /// Requests accepted into the prefetch queue.
    pub issued: u64,
    /// Rejected at issue: block already resident at or above the fill
    /// level, or already in flight.
    pub dropped_redundant: u64,
    /// Rejected at issue: queue full.
    pub dropped_queue_full: u64,
    /// Accepted but found redundant when drained from the queue.
    pub dropped_after_issue: u64,
    /// Still queued or in flight when the run ended.
    pub pending_at_end: u64,
}

impl PrefetchCounters {
    pub fn classified(&self) -> u64 {
        self.n_a + self.n_b + self.m_a + self.m_b
    }

    pub fn useful(&self) -> u64 {
        self.n_a + self.m_a
    }

    /// Every issued request must be classified, dropped after issue, or
    /// still pending; late/timely must partition the useful ones.
    pub fn conservation_holds(&self) -> bool {
        self.issued == self.classified() + self.dropped_after_issue + self.pending_at_end
            && self.late_useful + self.timely_useful == self.useful()
    }
}

/// Demand-side breakdown, mostly for the human report.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DemandCounters {
    pub accesses: u64,
    pub l1d_hits: u64,
    pub l2c_hits: u64,
    pub llc_hits: u64,
    pub late_prefetch_hits: u64,
    pub mem_accesses: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// (n_a + m_a) / (n_a + n_b + m_a + m_b); undefined when nothing was
/// classified.
pub fn overall_accuracy(c: &PrefetchCounters) -> Option<f64> {
    ratio(c.useful(), c.classified())
}

/// Covered LLC misses over covered plus residual LLC misses. A demand that
/// hits an in-flight prefetch counts as covered.
pub fn llc_coverage(c: &PrefetchCounters) -> Option<f64> {
    ratio(c.llc_prefetch_hits, c.llc_prefetch_hits + c.llc_demand_misses)
}

/// Fraction of useful prefetches whose demand arrived while they were
/// still in flight.
pub fn late_fraction(c: &PrefetchCounters) -> Option<f64> {
    ratio(c.late_useful, c.late_useful + c.timely_useful)
}

/// Cycle-proxy speedup: baseline cycles over prefetching cycles (the
/// instruction count is fixed across the pair).
pub fn speedup(cycles_with_prefetch: u64, cycles_without: u64) -> f64 {
    assert!(cycles_with_prefetch > 0);
    cycles_without as f64 / cycles_with_prefetch as f64
}

/// Everything measured in one simulation.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub prefetcher: String,
    pub accesses: u64,
    pub stores_dropped: u64,
    pub instructions: u64,
    pub cycles: u64,
    pub baseline_cycles: Option<u64>,
    pub counters: PrefetchCounters,
    pub demand: DemandCounters,
    pub accuracy: Option<f64>,
    pub coverage: Option<f64>,
    pub late_fraction: Option<f64>,
    pub speedup: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned two-column text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(&format!("{k:<22} {v}\n"));
        };
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
        line("prefetcher", self.prefetcher.clone());
        line("accesses", self.accesses.to_string());
        line("stores dropped", self.stores_dropped.to_string());
        line("instructions", self.instructions.to_string());
        line("cycles", self.cycles.to_string());
        if let Some(b) = self.baseline_cycles {
            line("baseline cycles", b.to_string());
        }
        line("speedup", opt(self.speedup));
        line("accuracy", opt(self.accuracy));
        line("llc coverage", opt(self.coverage));
        line("late fraction", opt(self.late_fraction));
        line("issued", self.counters.issued.to_string());
        line("useful l1d / l2c", format!("{} / {}", self.counters.n_a, self.counters.m_a));
        line("useless l1d / l2c", format!("{} / {}", self.counters.n_b, self.counters.m_b));
        line("late / timely", format!("{} / {}", self.counters.late_useful, self.counters.timely_useful));
        line(
            "dropped r/q/a",
            format!(
                "{} / {} / {}",
                self.counters.dropped_redundant,
                self.counters.dropped_queue_full,
                self.counters.dropped_after_issue
            ),
        );
        line("pending at end", self.counters.pending_at_end.to_string());
        line(
            "demand l1/l2/llc/mem",
            format!(
                "{} / {} / {} / {}",
                self.demand.l1d_hits, self.demand.l2c_hits, self.demand.llc_hits,
                self.demand.mem_accesses
            ),
        );
        out
    }

    pub fn csv_header() -> &'static str {
        "prefetcher,accesses,cycles,speedup,accuracy,coverage,late_fraction,issued,useful,useless"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.prefetcher,
            self.accesses,
            self.cycles,
            opt(self.speedup),
            opt(self.accuracy),
            opt(self.coverage),
            opt(self.late_fraction),
            self.counters.issued,
            self.counters.useful(),
            self.counters.n_b + self.counters.m_b,
        )
    }
}
