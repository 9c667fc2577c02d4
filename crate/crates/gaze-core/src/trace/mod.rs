//! Memory access records, trace file formats, and synthetic generators.

mod format;
mod generate;

pub use format::{read_trace, write_trace, TraceError, TraceFormat, TraceReader, BINARY_MAGIC};
pub use generate::{
    conflict_scenario, Activation, ConflictExpectation, GenerateError, ReplayPattern, TraceSpec,
};

/// Access kind carried by a trace record. Only loads drive the simulation;
/// stores are parsed and dropped by the runner with a counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Load,
    Store,
}

/// One demand access from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryAccess {
    /// Nondecreasing instruction count at the access.
    pub instr_id: u64,
    /// Instruction address.
    pub pc: u64,
    /// Data virtual address.
    pub vaddr: u64,
    pub kind: AccessKind,
}

impl MemoryAccess {
    pub fn load(instr_id: u64, pc: u64, vaddr: u64) -> Self {
        Self { instr_id, pc, vaddr, kind: AccessKind::Load }
    }
}
