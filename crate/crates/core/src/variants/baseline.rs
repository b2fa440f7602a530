//! Baseline code shape.
//!
//! Element loop in chunks of `vector_dim` elements. Every intermediate lives
//! in a heap array whose fastest index is the element within the chunk, and
//! each contribution is a whole-array statement over the chunk. Node, Gauss
//! point and dimension counts are read from a runtime element description.
//! An elemental 12×12 matrix is formed and multiplied by the nodal unknowns.

use std::hint::black_box;
use std::ops::Range;
use std::time::Instant;

use crate::error::Result;
use crate::kernel::{quadrature_tet4, vreman_viscosity, GlobalRhs, NodalVelocity, PhysParams};
use crate::mesh::Mesh;

use super::parallel::accumulate;
use super::{check_inputs, finish, AssemblyResult, RunConfig, VariantId};

/// Runtime description of a Lagrange element and its quadrature.
pub(crate) struct ElementType {
    pnode: usize,
    pgaus: usize,
    ndime: usize,
    /// `shape[g * pnode + a]`
    shape: Vec<f64>,
    /// `deriv[(g * pnode + a) * ndime + j]`, reference-coordinate derivatives
    deriv: Vec<f64>,
    /// reference-element weights, summing to the reference volume 1/6
    weight: Vec<f64>,
}

impl ElementType {
    pub(crate) fn tet4() -> Self {
        let quad = quadrature_tet4();
        let ref_deriv = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let (pnode, pgaus, ndime) = (4, 4, 3);
        let mut shape = Vec::with_capacity(pgaus * pnode);
        let mut deriv = Vec::with_capacity(pgaus * pnode * ndime);
        for g in 0..pgaus {
            for a in 0..pnode {
                shape.push(quad.points[g][a]);
                deriv.extend_from_slice(&ref_deriv[a]);
            }
        }
        Self {
            pnode,
            pgaus,
            ndime,
            shape,
            deriv,
            weight: quad.weights.iter().map(|w| w / 6.0).collect(),
        }
    }
}

/// Chunk-shaped storage: `k` values per element, element index fastest.
struct ChunkArray {
    data: Vec<f64>,
    vd: usize,
}

impl ChunkArray {
    fn new(per_elem: usize, vd: usize) -> Self {
        Self {
            data: vec![0.0; per_elem * vd],
            vd,
        }
    }

    #[inline(always)]
    fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.vd..(k + 1) * self.vd]
    }

    #[inline(always)]
    fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.vd..(k + 1) * self.vd]
    }
}

/// Number of intermediate arrays allocated by [`Workspace::new`].
pub(crate) const N_ARRAYS: usize = 16;

struct Workspace {
    elcod: ChunkArray,
    elvel: ChunkArray,
    elunk: ChunkArray,
    gpjac: ChunkArray,
    gpdet: ChunkArray,
    gpinv: ChunkArray,
    gpcar: ChunkArray,
    gpvol: ChunkArray,
    elvol: ChunkArray,
    gpvel: ChunkArray,
    gpgve: ChunkArray,
    gpnut: ChunkArray,
    gpmue: ChunkArray,
    gpadv: ChunkArray,
    elmat: ChunkArray,
    elrhs: ChunkArray,
}

impl Workspace {
    fn new(et: &ElementType, vd: usize) -> Self {
        let (p, g, d) = (et.pnode, et.pgaus, et.ndime);
        let ndof = p * d;
        Self {
            elcod: ChunkArray::new(p * d, vd),
            elvel: ChunkArray::new(p * d, vd),
            elunk: ChunkArray::new(p * d, vd),
            gpjac: ChunkArray::new(g * d * d, vd),
            gpdet: ChunkArray::new(g, vd),
            gpinv: ChunkArray::new(g * d * d, vd),
            gpcar: ChunkArray::new(g * p * d, vd),
            gpvol: ChunkArray::new(g, vd),
            elvol: ChunkArray::new(1, vd),
            gpvel: ChunkArray::new(g * d, vd),
            gpgve: ChunkArray::new(g * d * d, vd),
            gpnut: ChunkArray::new(g, vd),
            gpmue: ChunkArray::new(g, vd),
            gpadv: ChunkArray::new(g * p, vd),
            elmat: ChunkArray::new(ndof * ndof, vd),
            elrhs: ChunkArray::new(ndof, vd),
        }
    }
}

/// Intermediate doubles per element held by the workspace for `et`.
#[cfg(test)]
pub(crate) fn intermediate_doubles(et: &ElementType) -> usize {
    let (p, g, d) = (et.pnode, et.pgaus, et.ndime);
    let ndof = p * d;
    3 * p * d + 3 * g * d * d + g * p * d + 4 * g + 1 + g * d + g * p + ndof * ndof + ndof
}

pub fn assemble_baseline(
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    cfg: &RunConfig,
) -> Result<AssemblyResult> {
    check_inputs(mesh, u, params, cfg)?;
    let started = Instant::now();
    // Opaque to the optimizer, like an element type read from input.
    let et = black_box(ElementType::tet4());
    let vd = cfg.vector_dim;
    let rhs = accumulate(
        mesh.n_nodes(),
        mesh.n_elems(),
        cfg.n_threads,
        || Workspace::new(&et, vd),
        |ws, range, acc| {
            let mut start = range.start;
            while start < range.end {
                let end = (start + vd).min(range.end);
                chunk(ws, &et, mesh, u, params, start..end, acc);
                start = end;
            }
        },
    );
    finish(VariantId::B, mesh, cfg, started, rhs)
}

#[allow(clippy::needless_range_loop)]
fn chunk(
    ws: &mut Workspace,
    et: &ElementType,
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    elems: Range<usize>,
    rhs: &mut GlobalRhs,
) {
    let (pnode, pgaus, ndime) = (et.pnode, et.pgaus, et.ndime);
    let ndof = pnode * ndime;
    let nv = elems.len();
    let conn = &mesh.connectivity()[elems];
    let coords = mesh.coords();
    let vel = u.values();

    // gather
    for a in 0..pnode {
        for i in 0..ndime {
            let k = a * ndime + i;
            let dst = ws.elcod.row_mut(k);
            for v in 0..nv {
                dst[v] = coords[conn[v][a] as usize][i];
            }
            let dst = ws.elvel.row_mut(k);
            for v in 0..nv {
                dst[v] = vel[conn[v][a] as usize][i];
            }
        }
    }

    // unknowns relative to the first node
    for a in 0..pnode {
        for i in 0..ndime {
            let (base, val, dst) = (ws.elvel.row(i), ws.elvel.row(a * ndime + i), ws.elunk.row_mut(a * ndime + i));
            for v in 0..nv {
                dst[v] = val[v] - base[v];
            }
        }
    }

    // Jacobian dx_i/dxi_j at every Gauss point
    for g in 0..pgaus {
        for i in 0..ndime {
            for j in 0..ndime {
                let k = (g * ndime + i) * ndime + j;
                ws.gpjac.row_mut(k)[..nv].fill(0.0);
                for a in 0..pnode {
                    let dn = et.deriv[(g * pnode + a) * ndime + j];
                    let (src, dst) = (ws.elcod.row(a * ndime + i), ws.gpjac.row_mut(k));
                    for v in 0..nv {
                        dst[v] += src[v] * dn;
                    }
                }
            }
        }
    }

    // determinant and inverse (3D only)
    assert_eq!(ndime, 3, "baseline supports 3D elements only");
    for g in 0..pgaus {
        let jk = |i: usize, j: usize| (g * 3 + i) * 3 + j;
        for v in 0..nv {
            let m = |i, j| ws.gpjac.row(jk(i, j))[v];
            let c00 = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
            let c01 = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
            let c02 = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
            let c10 = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
            let c11 = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
            let c12 = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
            let c20 = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
            let c21 = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
            let c22 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            let det = m(0, 0) * c00 + m(0, 1) * c01 + m(0, 2) * c02;
            ws.gpdet.row_mut(g)[v] = det;
            let r = 1.0 / det;
            // inverse[j][i] = cofactor[i][j] / det
            let inv = [[c00, c10, c20], [c01, c11, c21], [c02, c12, c22]];
            for j in 0..3 {
                for i in 0..3 {
                    ws.gpinv.row_mut(jk(j, i))[v] = inv[j][i] * r;
                }
            }
        }
    }

    // Cartesian derivatives dN_a/dx_i = sum_j dN_a/dxi_j dxi_j/dx_i
    for g in 0..pgaus {
        for a in 0..pnode {
            for i in 0..ndime {
                let k = (g * pnode + a) * ndime + i;
                ws.gpcar.row_mut(k)[..nv].fill(0.0);
                for j in 0..ndime {
                    let dn = et.deriv[(g * pnode + a) * ndime + j];
                    let (src, dst) = (ws.gpinv.row((g * ndime + j) * ndime + i), ws.gpcar.row_mut(k));
                    for v in 0..nv {
                        dst[v] += dn * src[v];
                    }
                }
            }
        }
    }

    // integration weights and element volume
    ws.elvol.row_mut(0)[..nv].fill(0.0);
    for g in 0..pgaus {
        let w = et.weight[g];
        let (det, dst) = (ws.gpdet.row(g), ws.gpvol.row_mut(g));
        for v in 0..nv {
            dst[v] = w * det[v];
        }
        let (src, dst) = (ws.gpvol.row(g), ws.elvol.row_mut(0));
        for v in 0..nv {
            dst[v] += src[v];
        }
    }

    // velocity at Gauss points
    for g in 0..pgaus {
        for i in 0..ndime {
            let k = g * ndime + i;
            ws.gpvel.row_mut(k)[..nv].fill(0.0);
            for a in 0..pnode {
                let n = et.shape[g * pnode + a];
                let (src, dst) = (ws.elvel.row(a * ndime + i), ws.gpvel.row_mut(k));
                for v in 0..nv {
                    dst[v] += n * src[v];
                }
            }
        }
    }

    // velocity gradient du_j/dx_i at Gauss points
    for g in 0..pgaus {
        for i in 0..ndime {
            for j in 0..ndime {
                let k = (g * ndime + i) * ndime + j;
                ws.gpgve.row_mut(k)[..nv].fill(0.0);
                for a in 0..pnode {
                    let (car, unk) = (ws.gpcar.row((g * pnode + a) * ndime + i), ws.elunk.row(a * ndime + j));
                    let dst = ws.gpgve.row_mut(k);
                    for v in 0..nv {
                        dst[v] += car[v] * unk[v];
                    }
                }
            }
        }
    }

    // turbulent viscosity at Gauss points
    for g in 0..pgaus {
        for v in 0..nv {
            let mut alpha = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    alpha[i][j] = ws.gpgve.row((g * 3 + i) * 3 + j)[v];
                }
            }
            let delta = params.filter_width_rule.width(ws.elvol.row(0)[v]);
            ws.gpnut.row_mut(g)[v] = vreman_viscosity(&alpha, delta, params.c_vreman);
        }
    }

    // effective viscosity
    for g in 0..pgaus {
        let (nut, dst) = (ws.gpnut.row(g), ws.gpmue.row_mut(g));
        for v in 0..nv {
            dst[v] = params.mu + params.rho * nut[v];
        }
    }

    // advection operator u·grad(N_b)
    for g in 0..pgaus {
        for b in 0..pnode {
            let k = g * pnode + b;
            ws.gpadv.row_mut(k)[..nv].fill(0.0);
            for i in 0..ndime {
                let (vel, car) = (ws.gpvel.row(g * ndime + i), ws.gpcar.row((g * pnode + b) * ndime + i));
                let dst = ws.gpadv.row_mut(k);
                for v in 0..nv {
                    dst[v] += vel[v] * car[v];
                }
            }
        }
    }

    // elemental convection + diffusion matrix
    for k in 0..ndof * ndof {
        ws.elmat.row_mut(k)[..nv].fill(0.0);
    }
    for g in 0..pgaus {
        for a in 0..pnode {
            let na = et.shape[g * pnode + a];
            for b in 0..pnode {
                for v in 0..nv {
                    let conv = params.rho * na * ws.gpadv.row(g * pnode + b)[v];
                    let mut dot = 0.0;
                    for i in 0..ndime {
                        dot += ws.gpcar.row((g * pnode + a) * ndime + i)[v]
                            * ws.gpcar.row((g * pnode + b) * ndime + i)[v];
                    }
                    let diff = ws.gpmue.row(g)[v] * dot;
                    let val = ws.gpvol.row(g)[v] * (conv + diff);
                    for id in 0..ndime {
                        let k = (a * ndime + id) * ndof + (b * ndime + id);
                        ws.elmat.row_mut(k)[v] += val;
                    }
                }
            }
        }
    }

    // elemental RHS = -matrix * unknowns
    for r in 0..ndof {
        ws.elrhs.row_mut(r)[..nv].fill(0.0);
        for c in 0..ndof {
            let (m, x) = (ws.elmat.row(r * ndof + c), ws.elunk.row(c));
            let dst = ws.elrhs.row_mut(r);
            for v in 0..nv {
                dst[v] -= m[v] * x[v];
            }
        }
    }

    // scatter, scalar loop
    for v in 0..nv {
        for a in 0..pnode {
            let node = conn[v][a] as usize;
            for i in 0..ndime {
                rhs.0[node][i] += ws.elrhs.row(a * ndime + i)[v];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tet4_description() {
        let et = ElementType::tet4();
        assert!((et.weight.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-16);
        for g in 0..4 {
            let s: f64 = et.shape[g * 4..g * 4 + 4].iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(intermediate_doubles(&et), 393);
        let ws = Workspace::new(&et, 16);
        let total: usize = [
            &ws.elcod, &ws.elvel, &ws.elunk, &ws.gpjac, &ws.gpdet, &ws.gpinv, &ws.gpcar, &ws.gpvol,
            &ws.elvol, &ws.gpvel, &ws.gpgve, &ws.gpnut, &ws.gpmue, &ws.gpadv, &ws.elmat, &ws.elrhs,
        ]
        .iter()
        .map(|a| a.data.len())
        .sum();
        assert_eq!(total, 393 * 16);
    }
}
