//! Element-level mathematics of the momentum RHS on linear tetrahedra and the
//! sequential reference assembly.
//!
//! The assembled residual is
//!
//! ```text
//! R[a][i] = -rho ∫ N_a (u·∇)u_i dΩ - (mu + rho nu_t) ∫ ∇N_a·∇u_i dΩ
//! ```
//!
//! with Galerkin (non-conservative) convection and the Vreman eddy viscosity
//! `nu_t`, which is constant per element because ∇u is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, Mesh};
use crate::Vec3;

/// Guard on `α:α` in the Vreman quotient.
pub const DENOM_EPSILON: f64 = 1e-30;

pub const DEFAULT_C_VREMAN: f64 = 0.07;

/// 3×3 velocity gradient, `g[i][j] = ∂u_j/∂x_i`.
pub type Tensor3 = [[f64; 3]; 3];

/// Nodal force contributions of one element, `[node][component]`.
pub type LocalRhs = [Vec3; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterWidthRule {
    /// `delta = (6 V)^(1/3)`, the edge length of the equivalent cube-corner tet.
    #[default]
    CbrtVolume,
}

impl FilterWidthRule {
    #[inline]
    pub fn width(self, volume: f64) -> f64 {
        match self {
            FilterWidthRule::CbrtVolume => (6.0 * volume).cbrt(),
        }
    }
}

/// Constant material and model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub rho: f64,
    pub mu: f64,
    pub c_vreman: f64,
    pub filter_width_rule: FilterWidthRule,
}

impl Default for PhysParams {
    /// Non-dimensional, Reynolds number 1600 on a unit length and velocity.
    fn default() -> Self {
        Self {
            rho: 1.0,
            mu: 1.0 / 1600.0,
            c_vreman: DEFAULT_C_VREMAN,
            filter_width_rule: FilterWidthRule::CbrtVolume,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.c_vreman >= 0.0 && self.c_vreman.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c_vreman must be >= 0, got {}",
                self.c_vreman
            )));
        }
        Ok(())
    }
}

/// Symmetric quadrature rule on a tetrahedron in barycentric coordinates.
/// Weights are fractions of the element volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub points: [[f64; 4]; 4],
    pub weights: [f64; 4],
}

/// Four-point rule, exact for polynomials of degree 2.
///
/// Point `g` has barycentric coordinate `a` on node `g` and `b` on the
/// other three, so the linear shape functions at the points are simply
/// `N_n(g) = if n == g { a } else { b }`.
pub fn quadrature_tet4() -> QuadratureRule {
    let s5 = 5f64.sqrt();
    let a = (5.0 + 3.0 * s5) / 20.0;
    let b = (5.0 - s5) / 20.0;
    let mut points = [[b; 4]; 4];
    for (g, p) in points.iter_mut().enumerate() {
        p[g] = a;
    }
    QuadratureRule {
        points,
        weights: [0.25; 4],
    }
}

/// Velocity gradient over a tet4 element, `g[i][j] = Σ_a ∂N_a/∂x_i u_a[j]`.
///
/// Evaluated with velocities relative to node 0; the gradient rows sum to
/// zero so this is the same sum, and a uniform field yields exactly zero.
#[inline]
pub fn velocity_gradient(geom: &ElementGeometry, u_elem: &[Vec3; 4]) -> Tensor3 {
    let mut g = [[0.0; 3]; 3];
    for a in 1..4 {
        let du = [
            u_elem[a][0] - u_elem[0][0],
            u_elem[a][1] - u_elem[0][1],
            u_elem[a][2] - u_elem[0][2],
        ];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += geom.grad_n[a][i] * du[j];
            }
        }
    }
    g
}

/// Vreman eddy viscosity (kinematic, m²/s) from the velocity gradient
/// `alpha[i][j] = ∂u_j/∂x_i`, filter width `delta` and model constant `c`.
///
/// With `beta = delta² alphaᵀ alpha`, the invariant `B_beta` (sum of the
/// principal 2×2 minors of `beta`) equals `delta⁴` times the sum of squared
/// 2×2 minors of `alpha` (Cauchy-Binet), i.e. of its cofactors. That form is
/// a sum of squares, and vanishes exactly when `alpha` is exactly rank one.
#[inline]
pub fn vreman_viscosity(alpha: &Tensor3, delta: f64, c: f64) -> f64 {
    let mut aa = 0.0;
    for row in alpha {
        for v in row {
            aa += v * v;
        }
    }
    if aa <= DENOM_EPSILON {
        return 0.0;
    }
    let m = alpha;
    let cof = [
        m[1][1] * m[2][2] - m[1][2] * m[2][1],
        m[1][2] * m[2][0] - m[1][0] * m[2][2],
        m[1][0] * m[2][1] - m[1][1] * m[2][0],
        m[0][2] * m[2][1] - m[0][1] * m[2][2],
        m[0][0] * m[2][2] - m[0][2] * m[2][0],
        m[0][1] * m[2][0] - m[0][0] * m[2][1],
        m[0][1] * m[1][2] - m[0][2] * m[1][1],
        m[0][2] * m[1][0] - m[0][0] * m[1][2],
        m[0][0] * m[1][1] - m[0][1] * m[1][0],
    ];
    let mut minors = 0.0;
    for k in cof {
        minors += k * k;
    }
    let d2 = delta * delta;
    let bb = d2 * d2 * minors;
    c * (bb.max(0.0) / aa).sqrt()
}

/// The same invariant through the explicit `beta` tensor; kept as a
/// cross-check for [`vreman_viscosity`].
pub fn vreman_viscosity_beta(alpha: &Tensor3, delta: f64, c: f64) -> f64 {
    let aa: f64 = alpha.iter().flatten().map(|v| v * v).sum();
    if aa <= DENOM_EPSILON {
        return 0.0;
    }
    let d2 = delta * delta;
    let beta = |i: usize, j: usize| {
        d2 * (alpha[0][i] * alpha[0][j] + alpha[1][i] * alpha[1][j] + alpha[2][i] * alpha[2][j])
    };
    let (b11, b22, b33) = (beta(0, 0), beta(1, 1), beta(2, 2));
    let (b12, b13, b23) = (beta(0, 1), beta(0, 2), beta(1, 2));
    let bb = b11 * b22 - b12 * b12 + b11 * b33 - b13 * b13 + b22 * b33 - b23 * b23;
    c * (bb.max(0.0) / aa).sqrt()
}

/// RHS contribution of one element.
pub fn element_rhs(
    geom: &ElementGeometry,
    u_elem: &[Vec3; 4],
    params: &PhysParams,
    quad: &QuadratureRule,
) -> LocalRhs {
    let g = velocity_gradient(geom, u_elem);
    let delta = params.filter_width_rule.width(geom.volume);
    let nu_t = vreman_viscosity(&g, delta, params.c_vreman);
    let mu_eff = params.mu + params.rho * nu_t;

    let mut rhs = [[0.0; 3]; 4];
    for (lam, w) in quad.points.iter().zip(quad.weights) {
        let mut ug = [0.0; 3];
        for b in 0..4 {
            for j in 0..3 {
                ug[j] += lam[b] * u_elem[b][j];
            }
        }
        // (u·∇)u_i = Σ_k u_k ∂u_i/∂x_k
        let mut conv = [0.0; 3];
        for i in 0..3 {
            for k in 0..3 {
                conv[i] += ug[k] * g[k][i];
            }
        }
        let scale = params.rho * w * geom.volume;
        for a in 0..4 {
            for i in 0..3 {
                rhs[a][i] -= scale * lam[a] * conv[i];
            }
        }
    }
    for a in 0..4 {
        for i in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += geom.grad_n[a][k] * g[k][i];
            }
            rhs[a][i] -= mu_eff * geom.volume * s;
        }
    }
    rhs
}

/// Per-node velocity field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalVelocity(pub Vec<Vec3>);

impl NodalVelocity {
    pub fn zeros(n: usize) -> Self {
        Self(vec![[0.0; 3]; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    /// Checks length against the mesh and that every entry is finite.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.0.len() != mesh.n_nodes() {
            return Err(Error::Validation(format!(
                "velocity has {} entries, mesh has {} nodes",
                self.0.len(),
                mesh.n_nodes()
            )));
        }
        match self.0.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
            Some(node) => Err(Error::NonFinite { node }),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn gather(&self, tet: &[u32; 4]) -> [Vec3; 4] {
        tet.map(|i| self.0[i as usize])
    }
}

/// Assembled right-hand side, one 3-vector per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalRhs(pub Vec<Vec3>);

impl GlobalRhs {
    pub fn zeros(n: usize) -> Self {
        Self(vec![[0.0; 3]; n])
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn scatter_add(&mut self, tet: &[u32; 4], local: &LocalRhs) {
        for (&n, r) in tet.iter().zip(local) {
            let dst = &mut self.0[n as usize];
            dst[0] += r[0];
            dst[1] += r[1];
            dst[2] += r[2];
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// First node holding a non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.0.iter().position(|v| v.iter().any(|x| !x.is_finite()))
    }

    /// Sum of entries plus sum of absolute entries.
    pub fn checksum(&self) -> f64 {
        let (s, a) = self
            .0
            .iter()
            .flatten()
            .fold((0.0, 0.0), |(s, a), v| (s + v, a + v.abs()));
        s + a
    }

    /// Bitwise equality, distinguishing signed zeros and NaN payloads.
    pub fn bitwise_eq(&self, other: &GlobalRhs) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .flatten()
                .zip(other.0.iter().flatten())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Sequential element loop in index order; the correctness oracle for all
/// optimized variants.
pub fn assemble_reference(mesh: &Mesh, u: &NodalVelocity, params: &PhysParams) -> Result<GlobalRhs> {
    params.validate()?;
    u.validate(mesh)?;
    let quad = quadrature_tet4();
    let mut rhs = GlobalRhs::zeros(mesh.n_nodes());
    for (e, tet) in mesh.connectivity().iter().enumerate() {
        let geom = crate::mesh::element_geometry(mesh, e)?;
        let local = element_rhs(&geom, &u.gather(tet), params, &quad);
        rhs.scatter_add(tet, &local);
    }
    Ok(rhs)
}
