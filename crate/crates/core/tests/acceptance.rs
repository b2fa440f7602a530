//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tal_core::kernel::{
    assemble_reference, quadrature_tet4, velocity_gradient, vreman_viscosity, PhysParams, Tensor3,
};
use tal_core::mesh::{generate_box_mesh, tet_geometry};
use tal_core::perfmodel::{classify, code_intensity, energy_estimate, machine_balance, Bound, MachineSpec, CounterPreset};
use tal_core::variants::{assemble, compare_rhs, RunConfig, VariantId};
use tal_core::velocity::Initializer;
use tal_core::Vec3;

/// Max relative RHS difference vs the oracle (criteria 1 and 8).
const RHS_TOL: f64 = 1e-12;
const MIN_FLOP_REDUCTION: f64 = 3.0;
const MIN_SPEEDUP_B_OVER_RSP: f64 = 2.0;
const GRADIENT_TOL: f64 = 1e-13;
const N_RANDOM_TETS: usize = 1000;
const N_RANDOM_GRADIENTS: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn initializers() -> Vec<Initializer> {
    vec![
        Initializer::Zero,
        Initializer::Constant([1.5, -0.5, 0.25]),
        Initializer::Shear(2.0),
        Initializer::TaylorGreen,
        Initializer::Random(1),
        Initializer::Random(2),
        Initializer::Random(3),
    ]
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let params = PhysParams::default();
    let cfg = RunConfig::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for dims in [(1, 1, 1), (2, 3, 4), (8, 8, 8)] {
        let mesh = generate_box_mesh(dims.0, dims.1, dims.2, [1.0, 1.0, 1.0]).unwrap();
        for init in initializers() {
            let u = init.apply(&mesh);
            let oracle = assemble_reference(&mesh, &u, &params).unwrap();
            for v in VariantId::ALL {
                let r = assemble(v, &mesh, &u, &params, &cfg).unwrap();
                let d = compare_rhs(&r.rhs, &oracle).max_rel_diff;
                worst = worst.max(d);
                if !(d <= RHS_TOL) {
                    failures.push(format!("{v} {dims:?} {init}: {d:.2e}"));
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 30.0,
        format!("63 cases (rho {}, mu {:.3e}), worst rel diff {worst:.2e} (tol {RHS_TOL:e}), {secs:.2} s {failures:?}", params.rho, params.mu),
    )
}

fn flop_reduction() -> Outcome {
    let cfg = RunConfig::default();
    let b = VariantId::B.description().ledger(&cfg).flops_per_elem as f64;
    let rs = VariantId::RS.description().ledger(&cfg).flops_per_elem as f64;
    let ratio = b / rs;
    outcome(ratio >= MIN_FLOP_REDUCTION, format!("B {b} / RS {rs} = {ratio:.2} (>= {MIN_FLOP_REDUCTION})"))
}

fn footprint_ordering() -> Outcome {
    let cfg = RunConfig::default();
    let [b, rs, rsp] = VariantId::ALL.map(|v| v.description().ledger(&cfg));
    let pass = b.intermediate_doubles_per_elem > rs.intermediate_doubles_per_elem
        && rs.intermediate_doubles_per_elem > rsp.intermediate_doubles_per_elem
        && rsp.intermediate_arrays == 0;
    outcome(
        pass,
        format!(
            "doubles/elem {} > {} > {}, chunk arrays {}/{}/{}",
            b.intermediate_doubles_per_elem,
            rs.intermediate_doubles_per_elem,
            rsp.intermediate_doubles_per_elem,
            b.intermediate_arrays,
            rs.intermediate_arrays,
            rsp.intermediate_arrays
        ),
    )
}

fn median_time(v: VariantId, reps: usize) -> f64 {
    let mesh = generate_box_mesh(32, 32, 32, [1.0; 3]).unwrap();
    let u = Initializer::TaylorGreen.apply(&mesh);
    let params = PhysParams::default();
    let cfg = RunConfig::default();
    assemble(v, &mesh, &u, &params, &cfg).unwrap();
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(assemble(v, &mesh, &u, &params, &cfg).unwrap());
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[reps / 2]
}

fn speedup_ordering() -> Outcome {
    let started = Instant::now();
    let [b, rs, rsp] = VariantId::ALL.map(|v| median_time(v, 5));
    let speedup = b / rsp;
    let pass = b > rs && rs > rsp && speedup >= MIN_SPEEDUP_B_OVER_RSP && started.elapsed().as_secs() < 120;
    let profile = if cfg!(debug_assertions) { "debug-assertions" } else { "release" };
    outcome(
        pass,
        format!(
            "(32,32,32) 1 thread median of 5: B {:.1} ms, RS {:.1} ms, RSP {:.1} ms, B/RSP {speedup:.2}x (>= {MIN_SPEEDUP_B_OVER_RSP}) [{profile}]",
            b * 1e3,
            rs * 1e3,
            rsp * 1e3
        ),
    )
}

fn roofline_reproduction() -> Outcome {
    let cpu = MachineSpec::preset("icelake-8360y-socket").unwrap();
    let gpu = MachineSpec::preset("a100-sxm4-40g").unwrap();
    let (cpu_bal, gpu_bal) = (machine_balance(&cpu), machine_balance(&gpu));
    let cpu_b = &CounterPreset::CpuTable1.dram_points()[0];
    let gpu_pts = CounterPreset::GpuTable2.dram_points();
    let gpu_b = &gpu_pts[0];
    let rspr = gpu_pts.iter().find(|p| p.label == "RSPR").unwrap();
    let (ai_cpu_b, ai_gpu_b, ai_rspr) = (code_intensity(cpu_b), code_intensity(gpu_b), code_intensity(rspr));
    let pass = (cpu_bal - 15.1).abs() <= 0.1
        && (gpu_bal - 7.02).abs() <= 0.05
        && (ai_cpu_b - 24.2).abs() <= 0.1
        && (ai_gpu_b - 0.270).abs() <= 0.005
        && classify(&cpu, cpu_b).bound == Bound::Compute
        && classify(&gpu, gpu_b).bound == Bound::Memory
        && (ai_rspr - 8.89).abs() <= 0.05
        && ai_rspr > 7.0
        && classify(&gpu, rspr).bound == Bound::Compute;
    outcome(
        pass,
        format!(
            "balance cpu {cpu_bal:.3} gpu {gpu_bal:.3}; AI cpu-B {ai_cpu_b:.3} gpu-B {ai_gpu_b:.4} RSPR {ai_rspr:.3}"
        ),
    )
}

fn energy_reproduction() -> Outcome {
    let gpu = energy_estimate(421.0, 0.051);
    let cpu = energy_estimate(683.0, 0.122);
    outcome(
        (21.0..=21.5).contains(&gpu) && (82.0..=84.0).contains(&cpu),
        format!("GPU {gpu:.3} J in [21, 21.5], CPU node {cpu:.3} J in [82, 84]"),
    )
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Worst error of the 4-point rule over all barycentric monomials of degree
/// <= 2, against ∫ λ^k dV / V = 3! Π k_i! / (|k| + 3)!.
fn gauss_monomial_error() -> f64 {
    let q = quadrature_tet4();
    let mut worst = 0.0f64;
    for k0 in 0..=2u32 {
        for k1 in 0..=2 - k0 {
            for k2 in 0..=2 - k0 - k1 {
                for k3 in 0..=2 - k0 - k1 - k2 {
                    let k = [k0, k1, k2, k3];
                    let exact = 6.0 * k.iter().map(|&e| factorial(e)).product::<f64>() / factorial(k.iter().sum::<u32>() + 3);
                    let approx: f64 = q
                        .points
                        .iter()
                        .zip(q.weights)
                        .map(|(p, w)| w * (0..4).map(|i| p[i].powi(k[i] as i32)).product::<f64>())
                        .sum();
                    worst = worst.max((approx - exact).abs() / exact);
                }
            }
        }
    }
    worst
}

fn random_tet(rng: &mut ChaCha8Rng) -> [Vec3; 4] {
    loop {
        let p: [Vec3; 4] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        if let Some(g) = tet_geometry(&p) {
            // keep reasonably shaped tets: volume against the longest edge cubed
            let longest = (0..4)
                .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
                .map(|(a, b)| (0..3).map(|d| (p[a][d] - p[b][d]).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            if g.volume / longest.powi(3) > 0.01 {
                return p;
            }
        }
    }
}

/// Worst relative error of the element gradient on affine fields u = A x + c.
fn affine_gradient_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..N_RANDOM_TETS {
        let p = random_tet(&mut rng);
        let a: Tensor3 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
        let c: Vec3 = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let u = p.map(|x| std::array::from_fn(|j| c[j] + (0..3).map(|k| a[j][k] * x[k]).sum::<f64>()));
        let g = velocity_gradient(&tet_geometry(&p).unwrap(), &u);
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            for j in 0..3 {
                // g[i][j] = du_j/dx_i = a[j][i]
                worst = worst.max((g[i][j] - a[j][i]).abs() / scale);
            }
        }
    }
    worst
}

/// Exactly representable shear tensors a bᵀ with aᵀb = 0: integer b and r,
/// a = b × r.
fn exact_shear(rng: &mut ChaCha8Rng) -> Tensor3 {
    loop {
        let b: [i64; 3] = std::array::from_fn(|_| rng.gen_range(-1000..=1000));
        let r: [i64; 3] = std::array::from_fn(|_| rng.gen_range(-1000..=1000));
        let a = [b[1] * r[2] - b[2] * r[1], b[2] * r[0] - b[0] * r[2], b[0] * r[1] - b[1] * r[0]];
        if a.iter().any(|&v| v != 0) {
            assert_eq!(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], 0);
            return std::array::from_fn(|i| std::array::from_fn(|j| (a[i] * b[j]) as f64));
        }
    }
}

fn kernel_checks() -> Outcome {
    let gauss = gauss_monomial_error();
    let grad = affine_gradient_error();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut shear_max = 0.0f64;
    for _ in 0..10_000 {
        let g = exact_shear(&mut rng);
        let delta = rng.gen_range(1e-3..10.0);
        shear_max = shear_max.max(vreman_viscosity(&g, delta, 0.07));
    }
    for gamma in [1e-6, 1.0, 2.0, 1e6] {
        let mut g = [[0.0; 3]; 3];
        g[1][0] = gamma;
        shear_max = shear_max.max(vreman_viscosity(&g, 0.5, 0.07));
    }
    let mut negative = 0usize;
    for _ in 0..N_RANDOM_GRADIENTS {
        let scale = 10f64.powi(rng.gen_range(-6..6));
        let g: Tensor3 = std::array::from_fn(|_| std::array::from_fn(|_| scale * rng.gen_range(-1.0..1.0)));
        let nu = vreman_viscosity(&g, rng.gen_range(1e-3..10.0), 0.07);
        if !(nu >= 0.0) {
            negative += 1;
        }
    }
    outcome(
        gauss <= 1e-14 && grad <= GRADIENT_TOL && shear_max == 0.0 && negative == 0,
        format!(
            "gauss deg<=2 rel err {gauss:.1e}; affine gradient rel err {grad:.1e} over {N_RANDOM_TETS} tets (<= {GRADIENT_TOL:e}); \
             shear nu_t max {shear_max:e}; {negative} negative nu_t in {N_RANDOM_GRADIENTS}"
        ),
    )
}

fn determinism_and_invariance() -> Outcome {
    let mesh = generate_box_mesh(8, 8, 8, [1.0, 2.0, 0.5]).unwrap();
    let params = PhysParams::default();
    let mut worst_chunk = 0.0f64;
    let mut worst_threads = 0.0f64;
    let mut bitwise = true;
    for init in [Initializer::TaylorGreen, Initializer::Random(11)] {
        let u = init.apply(&mesh);
        for v in VariantId::ALL {
            let run = |vd, t| {
                let cfg = RunConfig { vector_dim: vd, n_threads: t, ..Default::default() };
                assemble(v, &mesh, &u, &params, &cfg).unwrap().rhs
            };
            for t in [1, 2, 4] {
                bitwise &= run(16, t).bitwise_eq(&run(16, t));
            }
            let base = run(16, 1);
            for vd in [1, 7, 16, 4096] {
                worst_chunk = worst_chunk.max(compare_rhs(&run(vd, 1), &base).max_rel_diff);
            }
            for t in [2, 4] {
                worst_threads = worst_threads.max(compare_rhs(&run(16, t), &base).max_rel_diff);
            }
        }
    }
    outcome(
        bitwise && worst_chunk <= RHS_TOL && worst_threads <= RHS_TOL,
        format!("reruns bitwise identical: {bitwise}; vector_dim {{1,7,16,4096}} {worst_chunk:.1e}; threads {{1,2,4}} {worst_threads:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("flop reduction B/RS", flop_reduction),
        ("intermediate footprint ordering", footprint_ordering),
        ("speedup ordering", speedup_ordering),
        ("roofline reproduction", roofline_reproduction),
        ("energy reproduction", energy_reproduction),
        ("numerical kernel checks", kernel_checks),
        ("determinism and chunk invariance", determinism_and_invariance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
