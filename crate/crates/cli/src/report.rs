//! Markdown summary of bench records.

use std::fmt::Write as _;

use tal_core::perfmodel::{classify, machine_balance, Bound, CodePoint, MachineSpec};
use tal_core::{CounterLedger, RunConfig, VariantId};

use crate::bench::BenchRecord;

const MISSING: &str = "—";

/// Runs with the same mesh, thread count and chunk length are compared.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Config {
    mesh: String,
    n_threads: usize,
    vector_dim: usize,
}

fn config(r: &BenchRecord) -> Config {
    Config { mesh: r.mesh.clone(), n_threads: r.n_threads, vector_dim: r.vector_dim }
}

fn find<'a>(records: &'a [BenchRecord], c: &Config, v: VariantId) -> Option<&'a BenchRecord> {
    records.iter().find(|r| r.variant == v && config(r) == *c)
}

fn ledger_of(records: &[BenchRecord], v: VariantId) -> CounterLedger {
    records
        .iter()
        .find(|r| r.variant == v)
        .map(|r| r.ledger.clone())
        .unwrap_or_else(|| v.description().ledger(&RunConfig::default()))
}

pub fn render(records: &[BenchRecord], machine: &MachineSpec) -> String {
    let mut out = String::from("# Assembly variant report\n\n");

    let mut configs: Vec<Config> = records.iter().map(config).collect();
    configs.sort();
    configs.dedup();

    out.push_str("## Runtime\n\n");
    out.push_str("| mesh | threads | vector_dim | variant | median ms | min ms | max ms | Melem/s | speedup vs B |\n");
    out.push_str("|---|---:|---:|---|---:|---:|---:|---:|---:|\n");
    for c in &configs {
        let base = find(records, c, VariantId::B).map(|r| r.median_time).filter(|&t| t > 0.0);
        for v in VariantId::ALL {
            match find(records, c, v) {
                Some(r) => {
                    let speedup = match base {
                        Some(b) if r.median_time > 0.0 => format!("{:.2}×", b / r.median_time),
                        _ => MISSING.to_string(),
                    };
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {} |",
                        c.mesh,
                        c.n_threads,
                        c.vector_dim,
                        v,
                        r.median_time * 1e3,
                        r.min_time * 1e3,
                        r.max_time * 1e3,
                        r.melems_per_s,
                        speedup
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {v} | {MISSING} | {MISSING} | {MISSING} | {MISSING} | {MISSING} |",
                        c.mesh, c.n_threads, c.vector_dim
                    );
                }
            }
        }
    }

    out.push_str("\n## Operation ledger (per element)\n\n");
    out.push_str("| variant | flops | loads+stores | intermediate arrays | intermediate doubles | DRAM bytes (est.) |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|\n");
    let ledgers: Vec<(VariantId, CounterLedger)> = VariantId::ALL.iter().map(|&v| (v, ledger_of(records, v))).collect();
    for (v, l) in &ledgers {
        let _ = writeln!(
            out,
            "| {v} | {} | {} | {} | {} | {} |",
            l.flops_per_elem, l.loadstore_per_elem, l.intermediate_arrays, l.intermediate_doubles_per_elem, l.bytes_dram_est
        );
    }
    let _ = writeln!(
        out,
        "\nFlop reduction B/RS: {:.2}×, B/RSP: {:.2}×",
        ledgers[0].1.flops_per_elem as f64 / ledgers[1].1.flops_per_elem as f64,
        ledgers[0].1.flops_per_elem as f64 / ledgers[2].1.flops_per_elem as f64
    );

    let _ = writeln!(
        out,
        "\n## Roofline on {} ({} GB/s, {} GFlop/s, balance {:.2} Flop/B)\n",
        machine.name,
        machine.mem_bandwidth,
        machine.fp_peak,
        machine_balance(machine)
    );
    out.push_str("| run | AI Flop/B | bound | attainable GFlop/s | measured GFlop/s | utilization |\n");
    out.push_str("|---|---:|---|---:|---:|---:|\n");
    for r in records {
        let mut p = CodePoint::new(
            format!("{} t{}", r.variant, r.n_threads),
            r.ledger.flops_per_elem as f64,
            r.ledger.bytes_dram_est,
        );
        if r.melems_per_s > 0.0 {
            p = p.with_measured(r.gflops());
        }
        let rep = classify(machine, &p);
        let bound = match rep.bound {
            Bound::Memory => "memory",
            Bound::Compute => "compute",
        };
        let measured = p.measured_gflops.map_or(MISSING.to_string(), |g| format!("{g:.2}"));
        let util = rep.utilization.map_or(MISSING.to_string(), |u| format!("{:.1}%", 100.0 * u));
        let _ = writeln!(
            out,
            "| {} | {:.3} | {bound} | {:.1} | {measured} | {util} |",
            rep.label, rep.code_ai, rep.attainable_gflops
        );
    }
    out
}
