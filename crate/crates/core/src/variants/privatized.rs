//! Privatized code shape: the restructured tet4 math in a single element loop
//! with every intermediate as a per-iteration local. No chunk arrays exist,
//! so `vector_dim` has no effect here.

use std::time::Instant;

use crate::error::Result;
use crate::kernel::{vreman_viscosity, GlobalRhs, LocalRhs, NodalVelocity, PhysParams};
use crate::mesh::{color_elements, Mesh};
use crate::Vec3;

use super::parallel::{accumulate, partition, SharedRhs};
use super::restructured::{shape, GAUSS_W, NDIME, NGAUS, NNODE};
use super::{check_inputs, finish, AssemblyResult, RunConfig, ScatterStrategy, VariantId};

/// Doubles held in the loop-body locals below.
pub(crate) const INTERMEDIATE_DOUBLES: usize =
    // x, u, grad, vol, du, G, mu_eff, u_g, conv, local rhs
    12 + 12 + 12 + 1 + 9 + 9 + 1 + 3 + 3 + 12;

#[inline(always)]
fn element(x: &[Vec3; 4], u: &[Vec3; 4], params: &PhysParams) -> LocalRhs {
    let e1 = [x[1][0] - x[0][0], x[1][1] - x[0][1], x[1][2] - x[0][2]];
    let e2 = [x[2][0] - x[0][0], x[2][1] - x[0][1], x[2][2] - x[0][2]];
    let e3 = [x[3][0] - x[0][0], x[3][1] - x[0][1], x[3][2] - x[0][2]];
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
    let mut grad = [[0.0; 3]; 4];
    for i in 0..NDIME {
        grad[1][i] = c23[i] * r;
        grad[2][i] = c31[i] * r;
        grad[3][i] = c12[i] * r;
        grad[0][i] = -(grad[1][i] + grad[2][i] + grad[3][i]);
    }
    let vol = det.abs() * (1.0 / 6.0);

    let mut gve = [[0.0; 3]; 3];
    for a in 1..NNODE {
        let du = [u[a][0] - u[0][0], u[a][1] - u[0][1], u[a][2] - u[0][2]];
        for i in 0..NDIME {
            for j in 0..NDIME {
                gve[i][j] += grad[a][i] * du[j];
            }
        }
    }
    let delta = params.filter_width_rule.width(vol);
    let mu_eff = params.mu + params.rho * vreman_viscosity(&gve, delta, params.c_vreman);

    let mut out = [[0.0; 3]; 4];
    let c = params.rho * GAUSS_W * vol;
    for g in 0..NGAUS {
        let mut ug = [0.0; 3];
        for b in 0..NNODE {
            let n = shape(g, b);
            ug[0] += n * u[b][0];
            ug[1] += n * u[b][1];
            ug[2] += n * u[b][2];
        }
        let mut conv = [0.0; 3];
        for i in 0..NDIME {
            conv[i] = ug[0] * gve[0][i] + ug[1] * gve[1][i] + ug[2] * gve[2][i];
        }
        for a in 0..NNODE {
            let f = c * shape(g, a);
            out[a][0] -= f * conv[0];
            out[a][1] -= f * conv[1];
            out[a][2] -= f * conv[2];
        }
    }
    let k = mu_eff * vol;
    for a in 0..NNODE {
        for i in 0..NDIME {
            let s = grad[a][0] * gve[0][i] + grad[a][1] * gve[1][i] + grad[a][2] * gve[2][i];
            out[a][i] -= k * s;
        }
    }
    out
}

pub fn assemble_rsp(
    mesh: &Mesh,
    u: &NodalVelocity,
    params: &PhysParams,
    cfg: &RunConfig,
) -> Result<AssemblyResult> {
    check_inputs(mesh, u, params, cfg)?;
    let started = Instant::now();
    let rhs = match cfg.scatter {
        ScatterStrategy::PerThread => per_thread(mesh, u, params, cfg.n_threads),
        ScatterStrategy::Colored => {
            if mesh.colors().is_some() {
                colored(mesh, u, params, cfg.n_threads)
            } else {
                colored(&color_elements(mesh), u, params, cfg.n_threads)
            }
        }
    };
    finish(VariantId::RSP, mesh, cfg, started, rhs)
}

fn per_thread(mesh: &Mesh, u: &NodalVelocity, params: &PhysParams, n_threads: usize) -> GlobalRhs {
    let conn = mesh.connectivity();
    let coords = mesh.coords();
    let vel = u.values();
    accumulate(mesh.n_nodes(), mesh.n_elems(), n_threads, || (), |_, range, acc| {
        for tet in &conn[range] {
            let x = tet.map(|n| coords[n as usize]);
            let ue = tet.map(|n| vel[n as usize]);
            let local = element(&x, &ue, params);
            acc.scatter_add(tet, &local);
        }
    })
}

/// Color by color; within a color, threads take contiguous slices of the
/// class and add into the shared result. Each node receives at most one
/// contribution per color, so the result does not depend on `n_threads`.
fn colored(mesh: &Mesh, u: &NodalVelocity, params: &PhysParams, n_threads: usize) -> GlobalRhs {
    let classes = mesh.color_classes().expect("mesh is colored");
    let conn = mesh.connectivity();
    let coords = mesh.coords();
    let vel = u.values();
    let mut rhs = GlobalRhs::zeros(mesh.n_nodes());
    let shared = SharedRhs::new(&mut rhs);
    let run = |elems: &[u32]| {
        for &e in elems {
            let tet = &conn[e as usize];
            let x = tet.map(|n| coords[n as usize]);
            let ue = tet.map(|n| vel[n as usize]);
            let local = element(&x, &ue, params);
            for (&n, r) in tet.iter().zip(&local) {
                // SAFETY: elements of one color class share no node and
                // classes are processed one after another.
                unsafe { shared.add(n as usize, *r) };
            }
        }
    };
    for class in &classes {
        if n_threads <= 1 {
            run(class);
            continue;
        }
        std::thread::scope(|s| {
            for range in partition(class.len(), n_threads) {
                let slice = &class[range];
                s.spawn(move || run(slice));
            }
        });
    }
    rhs
}
