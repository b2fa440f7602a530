//! Finite-element assembly of the incompressible momentum right-hand side on
//! linear tetrahedra, in three code shapes of increasing optimization.
//!
//! * [`mesh`]: box-mesh generation, text I/O, element geometry and coloring.
//! * [`kernel`]: quadrature, Vreman eddy viscosity, element RHS and the
//!   sequential reference assembly used as the correctness oracle.
//! * [`variants`]: the baseline (`B`), restructured + specialized (`RS`) and
//!   privatized (`RSP`) assemblies with their operation ledgers.
//! * [`perfmodel`]: roofline arithmetic, boundedness classification and
//!   energy estimates, with built-in measurement presets.
//! * [`velocity`]: nodal velocity initializers.

pub mod error;
pub mod kernel;
pub mod mesh;
pub mod perfmodel;
pub mod variants;
pub mod velocity;

pub use error::{Error, Result};
pub use kernel::{GlobalRhs, NodalVelocity, PhysParams};
pub use mesh::Mesh;
pub use variants::{AssemblyResult, CounterLedger, RunConfig, VariantId};

/// A 3-vector of `f64`.
pub type Vec3 = [f64; 3];
