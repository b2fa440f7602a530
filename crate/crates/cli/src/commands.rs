use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tal_core::mesh::{generate_box_mesh, load_mesh};
use tal_core::perfmodel::{roofline_dataset, CodePoint, MachineSpec, CounterPreset, RooflineDataset};
use tal_core::variants::{assemble, verify_with, ScatterStrategy};
use tal_core::velocity::Initializer;
use tal_core::{PhysParams, RunConfig, VariantId};

use crate::bench::{bench_csv, format_checksum, run_bench, sweep_csv, BenchRecord, SweepSpec, Workload};
use crate::cli::{BenchArgs, FieldArgs, MeshArgs, ReportArgs, RooflineArgs, RunArgs, Scatter, SweepArgs, VerifyArgs};
use crate::report;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerificationFailed,
}

const DEFAULT_VERIFY_BOX: [usize; 3] = [4, 4, 4];
const DEFAULT_BENCH_BOX: [usize; 3] = [32, 32, 32];

fn workload(mesh_args: &MeshArgs, field: &FieldArgs, default_dims: [usize; 3]) -> Result<Workload> {
    let (mesh, label, dims) = match (&mesh_args.mesh, &mesh_args.dims) {
        (Some(path), _) => {
            let mesh = load_mesh(path).with_context(|| format!("loading mesh {}", path.display()))?;
            (mesh, path.display().to_string(), None)
        }
        (None, dims) => {
            let d = dims.as_deref().map_or(default_dims, |d| [d[0], d[1], d[2]]);
            let e = &mesh_args.extents;
            let mesh = generate_box_mesh(d[0], d[1], d[2], [e[0], e[1], e[2]])?;
            (mesh, format!("box {}x{}x{}", d[0], d[1], d[2]), Some(d))
        }
    };
    let mut init: Initializer = field.init.parse()?;
    if matches!(init, Initializer::Random(_)) && !field.init.contains([':', ',']) {
        init = Initializer::Random(field.seed.unwrap_or(0));
    }
    let defaults = PhysParams::default();
    let params = PhysParams {
        rho: field.rho.unwrap_or(defaults.rho),
        mu: field.mu.unwrap_or(defaults.mu),
        c_vreman: field.c_vreman.unwrap_or(defaults.c_vreman),
        ..defaults
    };
    params.validate()?;
    log::info!("{label}: {} nodes, {} elements, init {init}", mesh.n_nodes(), mesh.n_elems());
    Ok(Workload::new(mesh, label, dims, init, params))
}

fn scatter(s: Scatter) -> ScatterStrategy {
    match s {
        Scatter::PerThread => ScatterStrategy::PerThread,
        Scatter::Colored => ScatterStrategy::Colored,
    }
}

fn run_config(run: &RunArgs, reps: usize) -> Result<RunConfig> {
    let cfg = RunConfig {
        vector_dim: run.vector_dim,
        n_threads: run.threads,
        reps,
        scatter: scatter(run.scatter),
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn verify(args: &VerifyArgs) -> Result<Status> {
    let w = workload(&args.mesh, &args.field, DEFAULT_VERIFY_BOX)?;
    let cfg = run_config(&args.run, 1)?;
    let report = verify_with(&w.mesh, &w.u, &w.params, &cfg, |v, m, u, p, c| {
        let mut rhs = assemble(v, m, u, p, c)?.rhs;
        if args.inject_fault == Some(v) && !rhs.is_empty() {
            let m = rhs.max_abs();
            let bump = if m > 0.0 { 1e-6 * m } else { 1e-6 };
            let n = rhs.len();
            rhs.0[17 % n][1] += bump;
        }
        Ok(rhs)
    })?;
    println!("{} ({} elements, init {}), tolerance {:e}", w.label, w.mesh.n_elems(), w.init, report.tolerance);
    print!("{report}");
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(if report.all_pass() { Status::Ok } else { Status::VerificationFailed })
}

fn print_record(r: &BenchRecord) {
    let verified = match r.verified {
        Some(true) => "verified",
        Some(false) => "MISMATCH",
        None => "unverified",
    };
    println!(
        "{:<4} {} threads={} vd={} reps={}: median {:.3} ms (min {:.3}, max {:.3}), {:.3} Melem/s, {:.2} GFlop/s, checksum {} [{verified}]",
        r.variant.name(),
        r.mesh,
        r.n_threads,
        r.vector_dim,
        r.reps,
        r.median_time * 1e3,
        r.min_time * 1e3,
        r.max_time * 1e3,
        r.melems_per_s,
        r.gflops(),
        format_checksum(r.checksum)
    );
}

fn save_records(records: &[BenchRecord], stable: bool, json: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    let mut out = records.to_vec();
    if stable {
        out.iter_mut().for_each(BenchRecord::stabilize);
    }
    if let Some(path) = json {
        write_json(path, &out)?;
    }
    if let Some(path) = csv {
        write(path, &bench_csv(&out))?;
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<Status> {
    let w = workload(&args.mesh, &args.field, DEFAULT_BENCH_BOX)?;
    let cfg = run_config(&args.run, args.reps)?;
    let variants = args.variant.map_or(VariantId::ALL.to_vec(), |v| vec![v]);
    let mut records = Vec::new();
    let mut status = Status::Ok;
    for v in variants {
        let out = run_bench(&w, v, &cfg, !args.no_verify)?;
        print_record(&out.record);
        if let Some(check) = out.check.filter(|c| !c.pass) {
            let detail = check.error.clone().unwrap_or_else(|| format!("{:?}", check.diff));
            eprintln!("error: {v} differs from the reference: {detail}");
            status = Status::VerificationFailed;
        }
        records.push(out.record);
    }
    save_records(&records, args.stable_output, args.json.as_deref(), args.csv.as_deref())?;
    Ok(status)
}

pub fn sweep(args: &SweepArgs) -> Result<Status> {
    let spec = SweepSpec { threads: args.thread_list.clone(), variants: args.variants.clone() };
    if spec.threads.is_empty() || spec.variants.is_empty() {
        bail!("sweep needs at least one thread count and one variant");
    }
    let w = workload(&args.mesh, &args.field, DEFAULT_BENCH_BOX)?;
    let mut records = Vec::new();
    for &v in &spec.variants {
        for &t in &spec.threads {
            let run = RunArgs { vector_dim: args.vector_dim, threads: t, scatter: args.scatter };
            let cfg = run_config(&run, args.reps)?;
            let out = run_bench(&w, v, &cfg, false)?;
            log::info!("{v} threads={t}: {:.3} Melem/s", out.record.melems_per_s);
            records.push(out.record);
        }
    }
    if args.stable_output {
        records.iter_mut().for_each(BenchRecord::stabilize);
    }
    let csv = sweep_csv(&records);
    match &args.csv {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.json {
        write_json(path, &records)?;
    }
    Ok(Status::Ok)
}

/// Bench records from a JSON file holding one record or a list.
pub fn read_records(path: &Path) -> Result<Vec<BenchRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))?;
    let records = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|r| vec![r])
    };
    records.with_context(|| format!("{} does not hold bench records", path.display()))
}

fn roofline_points(args: &RooflineArgs) -> Result<(Vec<CodePoint>, Option<MachineSpec>)> {
    if let Some(name) = &args.paper_preset {
        let preset: CounterPreset = name.parse()?;
        let mut points: Vec<CodePoint> = preset
            .columns()
            .iter()
            .map(|c| CodePoint::new(c.label, c.flops_per_elem, c.dram_bytes_per_elem).with_measured(c.gflops))
            .collect();
        if args.l2 {
            points.extend(preset.l2_points());
        }
        return Ok((points, Some(preset.machine())));
    }
    if let Some(path) = &args.from_bench {
        let points = read_records(path)?
            .iter()
            .map(|r| {
                let rate = (r.melems_per_s > 0.0).then_some(r.melems_per_s * 1e6);
                CodePoint::from_ledger(format!("{} t{}", r.variant, r.n_threads), &r.ledger, rate)
            })
            .collect();
        return Ok((points, None));
    }
    let cfg = RunConfig { vector_dim: args.vector_dim, ..Default::default() };
    cfg.validate()?;
    let points = VariantId::ALL
        .iter()
        .map(|&v| CodePoint::from_ledger(v.name(), &v.description().ledger(&cfg), None))
        .collect();
    Ok((points, None))
}

fn print_roofline(ds: &RooflineDataset) {
    let m = &ds.machine;
    println!(
        "{}: {} GB/s, {} GFlop/s, balance {:.3} Flop/B",
        m.name,
        m.mem_bandwidth,
        m.fp_peak,
        ds.reports.first().map_or(0.0, |r| r.machine_balance)
    );
    println!("{:<10}{:>12}{:>10}{:>16}{:>13}", "point", "AI Flop/B", "bound", "attainable GF", "utilization");
    for r in &ds.reports {
        let util = r.utilization.map_or("-".to_string(), |u| format!("{:.1}%", 100.0 * u));
        let bound = format!("{:?}", r.bound).to_lowercase();
        println!("{:<10}{:>12.3}{:>10}{:>16.1}{:>13}", r.label, r.code_ai, bound, r.attainable_gflops, util);
    }
}

pub fn roofline(args: &RooflineArgs) -> Result<Status> {
    let (points, preset_machine) = roofline_points(args)?;
    let machine = match (&args.machine, preset_machine) {
        (Some(name), _) => MachineSpec::preset(name)?,
        (None, Some(m)) => m,
        (None, None) => MachineSpec::preset(MachineSpec::PRESETS[0])?,
    };
    let ds = roofline_dataset(&machine, &points, args.extra_roof)?;
    print_roofline(&ds);
    match &args.csv {
        Some(path) => write(path, &ds.to_csv())?,
        None => print!("\n{}", ds.to_csv()),
    }
    if let Some(path) = &args.gnuplot {
        write(path, &ds.to_gnuplot())?;
    }
    if let Some(path) = &args.json {
        write_json(path, &ds)?;
    }
    Ok(Status::Ok)
}

pub fn report(args: &ReportArgs) -> Result<Status> {
    let machine = MachineSpec::preset(&args.machine)?;
    let mut records = Vec::new();
    for path in &args.inputs {
        records.extend(read_records(path)?);
    }
    let md = report::render(&records, &machine);
    match &args.output {
        Some(path) => write(path, &md)?,
        None => print!("{md}"),
    }
    Ok(Status::Ok)
}
