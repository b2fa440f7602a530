//! Static per-element operation counts of each variant.
//!
//! Counts follow the statements in the variant source: one add, multiply,
//! divide, square or cube root is 1 Flop, a fused `acc += x * y` is 2.
//! Memory operations count loads and stores of gathered data and of chunk
//! arrays; constants and loop-body locals are taken to be register resident.

use serde::{Deserialize, Serialize};

use super::{baseline, privatized, restructured, RunConfig};

pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

/// Connectivity (4 × u32), gathered coordinates and velocities (24 doubles)
/// and the read-modify-write scatter of 12 doubles.
const STREAM_BYTES_PER_ELEM: f64 = (4 * 4 + 24 * 8 + 2 * 12 * 8) as f64;

/// Vreman evaluation (69) plus the filter width (2).
const VREMAN_FLOPS: u64 = 71;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub name: &'static str,
    pub flops: u64,
    pub mem_ops: u64,
}

const fn step(name: &'static str, flops: u64, mem_ops: u64) -> Step {
    Step { name, flops, mem_ops }
}

/// Self-description of a variant, consumed by reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantDescription {
    pub name: &'static str,
    /// Heap arrays with the chunk as leading dimension.
    pub intermediate_arrays: usize,
    pub intermediate_doubles_per_elem: usize,
    /// Whether intermediates spill to DRAM once a chunk outgrows the cache.
    pub chunk_spills: bool,
    pub steps: &'static [Step],
}

pub(crate) static BASELINE: VariantDescription = VariantDescription {
    name: "B",
    intermediate_arrays: baseline::N_ARRAYS,
    intermediate_doubles_per_elem: 393,
    chunk_spills: true,
    steps: &[
        step("gather", 0, 52),
        step("unknowns 4x3 sub", 12, 36),
        step("jacobian 4g*3*3*4n fma", 288, 468),
        step("det+inverse 4g*(27+5+1+9)", 168, 76),
        step("cartesian derivatives 4g*4n*3*3 fma", 288, 480),
        step("gauss volumes 4g*2", 8, 21),
        step("gauss velocity 4g*3*4n fma", 96, 156),
        step("velocity gradient 4g*3*3*4n fma", 288, 468),
        step("vreman per gauss 4g*71", 4 * VREMAN_FLOPS, 44),
        step("effective viscosity 4g fma", 8, 8),
        step("advection 4g*4n*3 fma", 96, 160),
        step("elemental matrix 4g*4n*4n*(10+3)", 896, 1104),
        step("matrix*unknowns 12*12 fma", 288, 444),
        step("scatter 12 add", 12, 40),
    ],
};

pub(crate) static RESTRUCTURED: VariantDescription = VariantDescription {
    name: "RS",
    intermediate_arrays: restructured::N_ARRAYS,
    intermediate_doubles_per_elem: restructured::INTERMEDIATE_DOUBLES,
    chunk_spills: false,
    steps: &[
        step("gather", 0, 52),
        step("geometry 9+27+5+1+15+1", 58, 25),
        step("velocity gradient 9*3*(sub+fma)", 81, 90),
        step("vreman once + effective viscosity", VREMAN_FLOPS + 2, 11),
        step("gauss velocity 4g*3*4n fma", 96, 60),
        step("convective derivative 4g*3*3 fma", 72, 84),
        step("rhs entries 12*(2+4*3+6+3)", 276, 168),
        step("scatter 12 add", 12, 40),
    ],
};

pub(crate) static PRIVATIZED: VariantDescription = VariantDescription {
    name: "RSP",
    intermediate_arrays: 0,
    intermediate_doubles_per_elem: privatized::INTERMEDIATE_DOUBLES,
    chunk_spills: false,
    steps: &[
        step("gather", 0, 28),
        step("geometry 9+27+5+1+15+1", 58, 0),
        step("velocity gradient 9 sub + 27 fma", 63, 0),
        step("vreman once + effective viscosity", VREMAN_FLOPS + 2, 0),
        step("convection 2+4g*(24+5+4*7)", 270, 0),
        step("diffusion 1+12*(5+2)", 85, 0),
        step("scatter 12 add", 12, 24),
    ],
};

impl VariantDescription {
    pub fn flops_per_elem(&self) -> u64 {
        self.steps.iter().map(|s| s.flops).sum()
    }

    pub fn loadstore_per_elem(&self) -> u64 {
        self.steps.iter().map(|s| s.mem_ops).sum()
    }

    /// The flop count as a sum over named steps, e.g. `gather 0 + ... = 668`.
    pub fn flop_formula(&self) -> String {
        let terms: Vec<String> = self.steps.iter().map(|s| format!("{} [{}]", s.name, s.flops)).collect();
        format!("{} = {}", terms.join(" + "), self.flops_per_elem())
    }

    /// Estimated DRAM bytes per element: streamed inputs and scatter, plus a
    /// write and read-back of all intermediates when a chunk's intermediates
    /// exceed `cache_capacity`.
    pub fn bytes_dram_est(&self, cfg: &RunConfig) -> f64 {
        let footprint = (self.intermediate_doubles_per_elem * 8) as f64;
        let spill = self.chunk_spills && footprint * cfg.vector_dim as f64 > cfg.cache_capacity as f64;
        STREAM_BYTES_PER_ELEM + if spill { 2.0 * footprint } else { 0.0 }
    }

    pub fn ledger(&self, cfg: &RunConfig) -> CounterLedger {
        CounterLedger {
            flops_per_elem: self.flops_per_elem(),
            loadstore_per_elem: self.loadstore_per_elem(),
            intermediate_doubles_per_elem: self.intermediate_doubles_per_elem as u64,
            intermediate_arrays: self.intermediate_arrays as u64,
            bytes_dram_est: self.bytes_dram_est(cfg),
        }
    }
}

/// Per-element operation and footprint counts of one variant run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterLedger {
    /// 1 FMA = 2 Flop
    pub flops_per_elem: u64,
    pub loadstore_per_elem: u64,
    pub intermediate_doubles_per_elem: u64,
    pub intermediate_arrays: u64,
    /// Bytes per element, model estimate.
    pub bytes_dram_est: f64,
}
