//! Restructured and specialized code shape.
//!
//! Keeps the chunked array layout of the baseline but fixes the element to
//! tet4: node and Gauss counts are constants, shape-function gradients and
//! eddy viscosity are computed once per element, and RHS entries are formed
//! directly instead of through an elemental matrix.

use std::ops::Range;
use std::time::Instant;

use crate::error::Result;
use crate::kernel::{vreman_viscosity, GlobalRhs, NodalVelocity, PhysParams};
use crate::mesh::Mesh;

use super::parallel::accumulate;
use super::{check_inputs, finish, AssemblyResult, RunConfig, VariantId};

pub(crate) const NNODE: usize = 4;
pub(crate) const NGAUS: usize = 4;
pub(crate) const NDIME: usize = 3;

/// Barycentric coordinates of the 4-point rule: `(5 + 3√5)/20` on the
/// point's own node, `(5 - √5)/20` on the others.
pub(crate) const GAUSS_A: f64 = 0.5854101966249685;
pub(crate) const GAUSS_B: f64 = 0.1381966011250105;
pub(crate) const GAUSS_W: f64 = 0.25;

/// `N_a` at Gauss point `g`.
#[inline(always)]
pub(crate) const fn shape(g: usize, a: usize) -> f64 {
    if g == a {
        GAUSS_A
    } else {
        GAUSS_B
    }
}

pub(crate) const N_ARRAYS: usize = 9;

struct Workspace {
    vd: usize,
    elcod: Vec<f64>,
    elvel: Vec<f64>,
    gpcar: Vec<f64>,
    elvol: Vec<f64>,
    elgve: Vec<f64>,
    elmue: Vec<f64>,
    gpvel: Vec<f64>,
    gpcon: Vec<f64>,
    elrhs: Vec<f64>,
}

pub(crate) const INTERMEDIATE_DOUBLES: usize =
    3 * NNODE * NDIME + 1 + NDIME * NDIME + 1 + 2 * NGAUS * NDIME + NNODE * NDIME;

impl Workspace {
    fn new(vd: usize) -> Self {
        let arr = |k: usize| vec![0.0; k * vd];
        Self {
            vd,
            elcod: arr(NNODE * NDIME),
            elvel: arr(NNODE * NDIME),
            gpcar: arr(NNODE * NDIME),
            elvol: arr(1),
            elgve: arr(NDIME * NDIME),
            elmue: arr(1),
            gpvel: arr(NGAUS * NDIME),
            gpcon: arr(NGAUS * NDIME),
            elrhs: arr(NNODE * NDIME),
        }
    }
}

pub fn assemble_rs(
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    cfg: &RunConfig,
) -> Result<AssemblyResult> {
    check_inputs(mesh, u, params, cfg)?;
    let started = Instant::now();
    let vd = cfg.vector_dim;
    let rhs = accumulate(
        mesh.n_nodes(),
        mesh.n_elems(),
        cfg.n_threads,
        || Workspace::new(vd),
        |ws, range, acc| {
            let mut start = range.start;
            while start < range.end {
                let end = (start + vd).min(range.end);
                chunk(ws, mesh, u, params, start..end, acc);
                start = end;
            }
        },
    );
    finish(VariantId::RS, mesh, cfg, started, rhs)
}

#[allow(clippy::needless_range_loop)]
fn chunk(
    ws: &mut Workspace,
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    elems: Range<usize>,
    rhs: &mut GlobalRhs,
) {
    let vd = ws.vd;
    let nv = elems.len();
    let conn = &mesh.connectivity()[elems];
    let coords = mesh.coords();
    let vel = u.values();
    // value k of element v lives at [k * vd + v]
    let at = |k: usize, v: usize| k * vd + v;

    for v in 0..nv {
        for a in 0..NNODE {
            let n = conn[v][a] as usize;
            for i in 0..NDIME {
                ws.elcod[at(a * NDIME + i, v)] = coords[n][i];
                ws.elvel[at(a * NDIME + i, v)] = vel[n][i];
            }
        }
    }

    // constant gradients and volume
    for v in 0..nv {
        let x = |a: usize, i: usize| ws.elcod[at(a * NDIME + i, v)];
        let e1 = [x(1, 0) - x(0, 0), x(1, 1) - x(0, 1), x(1, 2) - x(0, 2)];
        let e2 = [x(2, 0) - x(0, 0), x(2, 1) - x(0, 1), x(2, 2) - x(0, 2)];
        let e3 = [x(3, 0) - x(0, 0), x(3, 1) - x(0, 1), x(3, 2) - x(0, 2)];
        let c23 = [
            e2[1] * e3[2] - e2[2] * e3[1],
            e2[2] * e3[0] - e2[0] * e3[2],
            e2[0] * e3[1] - e2[1] * e3[0],
        ];
        let c31 = [
            e3[1] * e1[2] - e3[2] * e1[1],
            e3[2] * e1[0] - e3[0] * e1[2],
            e3[0] * e1[1] - e3[1] * e1[0],
        ];
        let c12 = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        let det = e1[0] * c23[0] + e1[1] * c23[1] + e1[2] * c23[2];
        let r = 1.0 / det;
        for i in 0..NDIME {
            let (g1, g2, g3) = (c23[i] * r, c31[i] * r, c12[i] * r);
            ws.gpcar[at(NDIME + i, v)] = g1;
            ws.gpcar[at(2 * NDIME + i, v)] = g2;
            ws.gpcar[at(3 * NDIME + i, v)] = g3;
            ws.gpcar[at(i, v)] = -(g1 + g2 + g3);
        }
        ws.elvol[v] = det.abs() * (1.0 / 6.0);
    }

    // velocity gradient du_j/dx_i, constant over the element
    for i in 0..NDIME {
        for j in 0..NDIME {
            for v in 0..nv {
                let mut s = 0.0;
                for a in 1..NNODE {
                    s += ws.gpcar[at(a * NDIME + i, v)]
                        * (ws.elvel[at(a * NDIME + j, v)] - ws.elvel[at(j, v)]);
                }
                ws.elgve[at(i * NDIME + j, v)] = s;
            }
        }
    }

    // one eddy viscosity per element
    for v in 0..nv {
        let mut alpha = [[0.0; 3]; 3];
        for i in 0..NDIME {
            for j in 0..NDIME {
                alpha[i][j] = ws.elgve[at(i * NDIME + j, v)];
            }
        }
        let delta = params.filter_width_rule.width(ws.elvol[v]);
        ws.elmue[v] = params.mu + params.rho * vreman_viscosity(&alpha, delta, params.c_vreman);
    }

    // Gauss-point velocity and convective derivative
    for g in 0..NGAUS {
        for j in 0..NDIME {
            for v in 0..nv {
                let mut s = 0.0;
                for b in 0..NNODE {
                    s += shape(g, b) * ws.elvel[at(b * NDIME + j, v)];
                }
                ws.gpvel[at(g * NDIME + j, v)] = s;
            }
        }
        for i in 0..NDIME {
            for v in 0..nv {
                let mut s = 0.0;
                for k in 0..NDIME {
                    s += ws.gpvel[at(g * NDIME + k, v)] * ws.elgve[at(k * NDIME + i, v)];
                }
                ws.gpcon[at(g * NDIME + i, v)] = s;
            }
        }
    }

    // each RHS entry: convection over Gauss points, then diffusion
    for a in 0..NNODE {
        for i in 0..NDIME {
            for v in 0..nv {
                let c = params.rho * GAUSS_W * ws.elvol[v];
                let mut r = 0.0;
                for g in 0..NGAUS {
                    r -= c * shape(g, a) * ws.gpcon[at(g * NDIME + i, v)];
                }
                let mut s = 0.0;
                for k in 0..NDIME {
                    s += ws.gpcar[at(a * NDIME + k, v)] * ws.elgve[at(k * NDIME + i, v)];
                }
                ws.elrhs[at(a * NDIME + i, v)] = r - ws.elmue[v] * ws.elvol[v] * s;
            }
        }
    }

    for v in 0..nv {
        for a in 0..NNODE {
            let node = conn[v][a] as usize;
            for i in 0..NDIME {
                rhs.0[node][i] += ws.elrhs[at(a * NDIME + i, v)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::quadrature_tet4;

    #[test]
    fn constants_match_rule() {
        let q = quadrature_tet4();
        for g in 0..NGAUS {
            assert_eq!(q.weights[g], GAUSS_W);
            for a in 0..NNODE {
                assert_eq!(q.points[g][a].to_bits(), shape(g, a).to_bits());
            }
        }
    }

    #[test]
    fn workspace_size() {
        let ws = Workspace::new(8);
        let total = ws.elcod.len()
            + ws.elvel.len()
            + ws.gpcar.len()
            + ws.elvol.len()
            + ws.elgve.len()
            + ws.elmue.len()
            + ws.gpvel.len()
            + ws.gpcon.len()
            + ws.elrhs.len();
        assert_eq!(total, INTERMEDIATE_DOUBLES * 8);
        assert_eq!(INTERMEDIATE_DOUBLES, 83);
    }
}
