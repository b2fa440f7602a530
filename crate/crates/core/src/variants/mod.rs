//! Three code shapes of the same RHS assembly.
//!
//! * `B`: generic element loop in chunks of `vector_dim` elements, every
//!   intermediate in a heap array with the chunk as leading dimension, an
//!   elemental 12×12 matrix multiplied by the nodal unknowns.
//! * `RS`: same chunk layout, tet4 sizes fixed at compile time, gradients
//!   and eddy viscosity once per element, RHS entries computed directly.
//! * `RSP`: the RS math with every intermediate as a per-iteration local.
//!
//! Each variant carries a static [`VariantDescription`] whose per-step
//! operation counts make up the [`CounterLedger`].

mod baseline;
mod ledger;
mod parallel;
mod privatized;
mod restructured;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{assemble_reference, GlobalRhs, NodalVelocity, PhysParams};
use crate::mesh::Mesh;

pub use baseline::assemble_baseline;
pub use ledger::{CounterLedger, Step, VariantDescription, DEFAULT_CACHE_CAPACITY};
pub use privatized::assemble_rsp;
pub use restructured::assemble_rs;

/// Maximum relative RHS difference accepted against the oracle.
pub const VERIFY_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_VECTOR_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantId {
    B,
    RS,
    RSP,
}

impl VariantId {
    pub const ALL: [VariantId; 3] = [VariantId::B, VariantId::RS, VariantId::RSP];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::B => "B",
            VariantId::RS => "RS",
            VariantId::RSP => "RSP",
        }
    }

    pub fn description(self) -> &'static VariantDescription {
        match self {
            VariantId::B => &ledger::BASELINE,
            VariantId::RS => &ledger::RESTRUCTURED,
            VariantId::RSP => &ledger::PRIVATIZED,
        }
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b" => Ok(VariantId::B),
            "rs" => Ok(VariantId::RS),
            "rsp" => Ok(VariantId::RSP),
            _ => Err(Error::InvalidArgument(format!("unknown variant `{s}`"))),
        }
    }
}

/// How parallel workers avoid write conflicts in the scatter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatterStrategy {
    /// One full-size accumulator per worker, summed in worker order.
    #[default]
    PerThread,
    /// Colors processed in sequence; elements of one color share no node and
    /// write straight into the result. Only used by `RSP`.
    Colored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub vector_dim: usize,
    pub n_threads: usize,
    pub reps: usize,
    pub scatter: ScatterStrategy,
    /// Bytes of cache assumed to hold one chunk's intermediates.
    pub cache_capacity: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            vector_dim: DEFAULT_VECTOR_DIM,
            n_threads: 1,
            reps: 5,
            scatter: ScatterStrategy::PerThread,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vector_dim == 0 {
            return Err(Error::InvalidArgument("vector_dim must be >= 1".into()));
        }
        if self.n_threads == 0 {
            return Err(Error::InvalidArgument("n_threads must be >= 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyResult {
    pub variant: VariantId,
    pub rhs: GlobalRhs,
    pub ledger: CounterLedger,
    pub wall_time: f64,
    pub elements_per_second: f64,
}

fn check_inputs(mesh: &Mesh, u: &NodalVelocity, params: &PhysParams, cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    params.validate()?;
    u.validate(mesh)
}

fn finish(
    variant: VariantId,
    mesh: &Mesh,
    cfg: &RunConfig,
    started: Instant,
    rhs: GlobalRhs,
) -> Result<AssemblyResult> {
    let wall_time = started.elapsed().as_secs_f64();
    if let Some(node) = rhs.first_non_finite() {
        return Err(Error::NonFinite { node });
    }
    Ok(AssemblyResult {
        variant,
        rhs,
        ledger: variant.description().ledger(cfg),
        wall_time,
        elements_per_second: if wall_time > 0.0 {
            mesh.n_elems() as f64 / wall_time
        } else {
            0.0
        },
    })
}

/// Runs one variant once.
pub fn assemble(
    variant: VariantId,
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    cfg: &RunConfig,
) -> Result<AssemblyResult> {
    match variant {
        VariantId::B => assemble_baseline(mesh, u, params, cfg),
        VariantId::RS => assemble_rs(mesh, u, params, cfg),
        VariantId::RSP => assemble_rsp(mesh, u, params, cfg),
    }
}

/// Difference of a result against the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsDiff {
    pub max_abs_diff: f64,
    /// `max_abs_diff` over the largest oracle entry; 0 when both are all zero.
    pub max_rel_diff: f64,
    /// Node and component of the largest difference.
    pub location: Option<(usize, usize)>,
}

pub fn compare_rhs(candidate: &GlobalRhs, oracle: &GlobalRhs) -> RhsDiff {
    assert_eq!(candidate.len(), oracle.len(), "rhs length mismatch");
    let mut max_abs_diff = 0.0f64;
    let mut location = None;
    for (n, (c, o)) in candidate.values().iter().zip(oracle.values()).enumerate() {
        for d in 0..3 {
            let diff = (c[d] - o[d]).abs();
            if diff > max_abs_diff || diff.is_nan() {
                max_abs_diff = if diff.is_nan() { f64::INFINITY } else { diff };
                location = Some((n, d));
            }
        }
    }
    let scale = oracle.max_abs();
    let max_rel_diff = if max_abs_diff == 0.0 {
        0.0
    } else if scale > 0.0 {
        max_abs_diff / scale
    } else {
        f64::INFINITY
    };
    RhsDiff {
        max_abs_diff,
        max_rel_diff,
        location,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCheck {
    pub variant: VariantId,
    pub diff: Option<RhsDiff>,
    /// Set when the variant produced a non-finite entry or failed to run.
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub oracle_max_abs: f64,
    pub checks: Vec<VariantCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>14}{:>14}{:>16}  result", "variant", "max |diff|", "max rel", "at (node,comp)")?;
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            match (&c.diff, &c.error) {
                (_, Some(err)) => writeln!(f, "{:<8}{:>44}  {verdict}: {err}", c.variant.name(), "")?,
                (Some(d), None) => {
                    let at = d.location.map_or("-".to_string(), |(n, k)| format!("({n},{k})"));
                    writeln!(
                        f,
                        "{:<8}{:>14.3e}{:>14.3e}{:>16}  {verdict}",
                        c.variant.name(),
                        d.max_abs_diff,
                        d.max_rel_diff,
                        at
                    )?
                }
                (None, None) => writeln!(f, "{:<8}{:>44}  {verdict}", c.variant.name(), "")?,
            }
        }
        Ok(())
    }
}

/// Checks one candidate result (or failure) against the oracle.
pub fn check_variant(
    variant: VariantId,
    outcome: Result<GlobalRhs>,
    oracle: &GlobalRhs,
    tolerance: f64,
) -> VariantCheck {
    match outcome {
        Ok(rhs) => {
            if let Some(node) = rhs.first_non_finite() {
                return VariantCheck {
                    variant,
                    diff: None,
                    error: Some(format!("non-finite output at node {node}")),
                    pass: false,
                };
            }
            let diff = compare_rhs(&rhs, oracle);
            let pass = diff.max_rel_diff <= tolerance;
            VariantCheck {
                variant,
                diff: Some(diff),
                error: None,
                pass,
            }
        }
        Err(e) => VariantCheck {
            variant,
            diff: None,
            error: Some(e.to_string()),
            pass: false,
        },
    }
}

/// Runs the oracle and every variant and compares them.
pub fn verify_variants(
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    cfg: &RunConfig,
) -> Result<VerifyReport> {
    verify_with(mesh, u, params, cfg, |v, m, u, p, c| assemble(v, m, u, p, c).map(|r| r.rhs))
}

/// [`verify_variants`] with a caller-supplied runner, so faults can be
/// injected into a variant's output.
pub fn verify_with<F>(
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    cfg: &RunConfig,
    mut run: F,
) -> Result<VerifyReport>
where
    F: FnMut(VariantId, &Mesh, &NodalVelocity, &PhysParams, &RunConfig) -> Result<GlobalRhs>,
{
    let oracle = assemble_reference(mesh, u, params)?;
    let checks = VariantId::ALL
        .iter()
        .map(|&v| check_variant(v, run(v, mesh, u, params, cfg), &oracle, VERIFY_TOLERANCE))
        .collect();
    Ok(VerifyReport {
        tolerance: VERIFY_TOLERANCE,
        oracle_max_abs: oracle.max_abs(),
        checks,
    })
}
