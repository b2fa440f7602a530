//! Timing protocol: one untimed warm-up, then `reps` timed runs summarized
//! by median, min and max.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tal_core::kernel::assemble_reference;
use tal_core::mesh::Mesh;
use tal_core::variants::{assemble, check_variant, ScatterStrategy, VariantCheck, VERIFY_TOLERANCE};
use tal_core::velocity::Initializer;
use tal_core::{CounterLedger, NodalVelocity, PhysParams, RunConfig, VariantId};

/// Mesh, velocity field and parameters shared by every run of a command.
pub struct Workload {
    pub mesh: Mesh,
    /// `box 32x32x32` or the mesh file path.
    pub label: String,
    pub dims: Option<[usize; 3]>,
    pub init: Initializer,
    pub u: NodalVelocity,
    pub params: PhysParams,
}

impl Workload {
    pub fn new(mesh: Mesh, label: String, dims: Option<[usize; 3]>, init: Initializer, params: PhysParams) -> Self {
        let u = init.apply(&mesh);
        Self { mesh, label, dims, init, u, params }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub variant: VariantId,
    pub mesh: String,
    pub dims: Option<[usize; 3]>,
    pub n_elems: usize,
    pub init: String,
    pub n_threads: usize,
    pub vector_dim: usize,
    pub scatter: ScatterStrategy,
    pub reps: usize,
    /// seconds
    pub median_time: f64,
    pub min_time: f64,
    pub max_time: f64,
    pub melems_per_s: f64,
    pub ledger: CounterLedger,
    /// Sum of entries plus sum of absolute entries.
    pub checksum: f64,
    /// `None` when verification was skipped.
    pub verified: Option<bool>,
}

impl BenchRecord {
    /// Zeroes every timing-dependent field.
    pub fn stabilize(&mut self) {
        self.median_time = 0.0;
        self.min_time = 0.0;
        self.max_time = 0.0;
        self.melems_per_s = 0.0;
    }

    /// Sustained GFlop/s implied by the ledger and the median time.
    pub fn gflops(&self) -> f64 {
        self.melems_per_s * 1e6 * self.ledger.flops_per_elem as f64 / 1e9
    }
}

pub struct BenchOutcome {
    pub record: BenchRecord,
    pub check: Option<VariantCheck>,
}

/// Median, min and max of `times`; the median of an even count is the mean
/// of the two middle values.
pub fn summarize(times: &[f64]) -> (f64, f64, f64) {
    assert!(!times.is_empty());
    let mut t = times.to_vec();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let median = if n % 2 == 1 { t[n / 2] } else { 0.5 * (t[n / 2 - 1] + t[n / 2]) };
    (median, t[0], t[n - 1])
}

pub fn run_bench(w: &Workload, variant: VariantId, cfg: &RunConfig, verify: bool) -> tal_core::Result<BenchOutcome> {
    if cfg.reps < 3 {
        log::warn!("reps = {} gives an unreliable median, use at least 3", cfg.reps);
    }
    let warm = assemble(variant, &w.mesh, &w.u, &w.params, cfg)?;
    let check = if verify {
        let oracle = assemble_reference(&w.mesh, &w.u, &w.params)?;
        Some(check_variant(variant, Ok(warm.rhs.clone()), &oracle, VERIFY_TOLERANCE))
    } else {
        None
    };
    let mut times = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        times.push(assemble(variant, &w.mesh, &w.u, &w.params, cfg)?.wall_time);
    }
    let (median_time, min_time, max_time) = summarize(&times);
    let n_elems = w.mesh.n_elems();
    let record = BenchRecord {
        variant,
        mesh: w.label.clone(),
        dims: w.dims,
        n_elems,
        init: w.init.to_string(),
        n_threads: cfg.n_threads,
        vector_dim: cfg.vector_dim,
        scatter: cfg.scatter,
        reps: cfg.reps,
        median_time,
        min_time,
        max_time,
        melems_per_s: if median_time > 0.0 { n_elems as f64 / median_time / 1e6 } else { 0.0 },
        ledger: warm.ledger,
        checksum: warm.rhs.checksum(),
        verified: check.as_ref().map(|c| c.pass),
    };
    Ok(BenchOutcome { record, check })
}

/// Thread counts and variants of a scaling sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub threads: Vec<usize>,
    pub variants: Vec<VariantId>,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "variant",
    "n_threads",
    "n_elems",
    "vector_dim",
    "median_s",
    "min_s",
    "max_s",
    "melems_per_s",
    "perfect_melems_per_s",
];

/// Sweep CSV with a perfect-scaling column extrapolated from each variant's
/// smallest thread count.
pub fn sweep_csv(records: &[BenchRecord]) -> String {
    let mut base: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for r in records {
        let e = base.entry(r.variant.name()).or_insert((r.n_threads, r.melems_per_s));
        if r.n_threads < e.0 {
            *e = (r.n_threads, r.melems_per_s);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for r in records {
        let (t0, m0) = base[r.variant.name()];
        let perfect = m0 * r.n_threads as f64 / t0 as f64;
        w.write_record([
            r.variant.name().to_string(),
            r.n_threads.to_string(),
            r.n_elems.to_string(),
            r.vector_dim.to_string(),
            r.median_time.to_string(),
            r.min_time.to_string(),
            r.max_time.to_string(),
            r.melems_per_s.to_string(),
            perfect.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[derive(Serialize)]
struct BenchCsvRow<'a> {
    variant: &'a str,
    mesh: &'a str,
    n_elems: usize,
    init: &'a str,
    n_threads: usize,
    vector_dim: usize,
    reps: usize,
    median_s: f64,
    min_s: f64,
    max_s: f64,
    melems_per_s: f64,
    flops_per_elem: u64,
    checksum: String,
}

pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(BenchCsvRow {
            variant: r.variant.name(),
            mesh: &r.mesh,
            n_elems: r.n_elems,
            init: &r.init,
            n_threads: r.n_threads,
            vector_dim: r.vector_dim,
            reps: r.reps,
            median_s: r.median_time,
            min_s: r.min_time,
            max_s: r.max_time,
            melems_per_s: r.melems_per_s,
            flops_per_elem: r.ledger.flops_per_elem,
            checksum: format_checksum(r.checksum),
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// 17 significant digits.
pub fn format_checksum(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tal_core::mesh::generate_box_mesh;

    fn workload() -> Workload {
        let mesh = generate_box_mesh(3, 3, 3, [1.0; 3]).unwrap();
        Workload::new(mesh, "box 3x3x3".into(), Some([3, 3, 3]), Initializer::Random(1), PhysParams::default())
    }

    #[test]
    fn summarize_odd_and_even() {
        assert_eq!(summarize(&[3.0, 1.0, 2.0]), (2.0, 1.0, 3.0));
        assert_eq!(summarize(&[4.0, 1.0, 2.0, 3.0]), (2.5, 1.0, 4.0));
        assert_eq!(summarize(&[7.0]), (7.0, 7.0, 7.0));
    }

    #[test]
    fn record_invariants() {
        let cfg = RunConfig { reps: 3, ..Default::default() };
        let out = run_bench(&workload(), VariantId::RSP, &cfg, true).unwrap();
        let r = &out.record;
        assert!(r.min_time <= r.median_time && r.median_time <= r.max_time);
        assert!((r.melems_per_s - r.n_elems as f64 / r.median_time / 1e6).abs() <= 1e-9 * r.melems_per_s);
        assert_eq!(r.verified, Some(true));
        assert!(out.check.unwrap().pass);
    }

    #[test]
    fn sweep_perfect_column() {
        let w = workload();
        let mut recs = Vec::new();
        for t in [2, 4] {
            let cfg = RunConfig { n_threads: t, reps: 1, ..Default::default() };
            recs.push(run_bench(&w, VariantId::RS, &cfg, false).unwrap().record);
        }
        let csv = sweep_csv(&recs);
        let mut rdr = csv::Reader::from_reader(csv.as_bytes());
        assert_eq!(rdr.headers().unwrap().len(), 9);
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        let perfect4: f64 = rows[1][8].parse().unwrap();
        assert!((perfect4 - 2.0 * recs[0].melems_per_s).abs() <= 1e-9 * perfect4);
    }

    #[test]
    fn checksum_has_17_digits() {
        let s = format_checksum(1.0 / 3.0);
        assert_eq!(s, "3.3333333333333331e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
