//! Roofline model, boundedness classification and energy estimates.
//!
//! Built-in presets carry the machine figures and per-element counter
//! measurements of the reference Icelake socket and A100 GPU runs, so the
//! analysis can be reproduced without any measurement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variants::CounterLedger;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub name: String,
    /// GB/s
    pub mem_bandwidth: f64,
    /// GFlop/s
    pub fp_peak: f64,
    /// W
    pub power: Option<f64>,
}

impl MachineSpec {
    pub fn new(name: impl Into<String>, mem_bandwidth: f64, fp_peak: f64, power: Option<f64>) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            mem_bandwidth,
            fp_peak,
            power,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mem_bandwidth > 0.0 && self.mem_bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {}", self.mem_bandwidth)));
        }
        if !(self.fp_peak > 0.0 && self.fp_peak.is_finite()) {
            return Err(Error::InvalidArgument(format!("peak must be > 0, got {}", self.fp_peak)));
        }
        if matches!(self.power, Some(p) if !(p >= 0.0)) {
            return Err(Error::InvalidArgument("power must be >= 0".into()));
        }
        Ok(())
    }

    /// Names accepted by [`MachineSpec::preset`].
    pub const PRESETS: [&'static str; 2] = ["icelake-8360y-socket", "a100-sxm4-40g"];

    /// One Xeon Platinum 8360Y socket: likwid load bandwidth and AVX-512 FMA
    /// peak. A100-SXM4-40GB: Scale-kernel bandwidth, FP64 peak, and the
    /// per-GPU share of system power.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "icelake-8360y-socket" => Self::new(name, 179.0, 2705.0, None),
            "a100-sxm4-40g" => Self::new(name, 1381.0, 9700.0, Some(421.0)),
            _ => Err(Error::InvalidArgument(format!(
                "unknown machine preset `{name}` (expected one of {})",
                Self::PRESETS.join(", ")
            ))),
        }
    }
}

/// Flop/B at which the memory and compute roofs meet.
pub fn machine_balance(spec: &MachineSpec) -> f64 {
    spec.fp_peak / spec.mem_bandwidth
}

/// One code variant placed on the roofline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodePoint {
    pub label: String,
    pub flops_per_elem: f64,
    /// Bytes per element at the chosen memory level.
    pub bytes_per_elem: f64,
    pub measured_gflops: Option<f64>,
}

impl CodePoint {
    pub fn new(label: impl Into<String>, flops_per_elem: f64, bytes_per_elem: f64) -> Self {
        Self {
            label: label.into(),
            flops_per_elem,
            bytes_per_elem,
            measured_gflops: None,
        }
    }

    pub fn with_measured(mut self, gflops: f64) -> Self {
        self.measured_gflops = Some(gflops);
        self
    }

    /// Point from a variant ledger at the estimated DRAM level; a measured
    /// rate in elements/s converts to GFlop/s through the flop count.
    pub fn from_ledger(label: impl Into<String>, ledger: &CounterLedger, elements_per_second: Option<f64>) -> Self {
        let flops = ledger.flops_per_elem as f64;
        Self {
            label: label.into(),
            flops_per_elem: flops,
            bytes_per_elem: ledger.bytes_dram_est,
            measured_gflops: elements_per_second.map(|r| r * flops * 1e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.flops_per_elem > 0.0 && self.bytes_per_elem > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "code point `{}` needs positive flops and bytes",
                self.label
            )));
        }
        Ok(())
    }
}

/// Flop/B of a code point.
pub fn code_intensity(point: &CodePoint) -> f64 {
    point.flops_per_elem / point.bytes_per_elem
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Memory,
    Compute,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Memory => "memory",
            Bound::Compute => "compute",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineReport {
    pub label: String,
    pub machine_balance: f64,
    pub code_ai: f64,
    pub bound: Bound,
    /// GFlop/s
    pub attainable_gflops: f64,
    pub utilization: Option<f64>,
}

/// Places `point` under the roofs of `spec`. A code exactly at the machine
/// balance counts as compute bound.
pub fn classify(spec: &MachineSpec, point: &CodePoint) -> RooflineReport {
    let balance = machine_balance(spec);
    let ai = code_intensity(point);
    let attainable = spec.fp_peak.min(ai * spec.mem_bandwidth);
    RooflineReport {
        label: point.label.clone(),
        machine_balance: balance,
        code_ai: ai,
        bound: if ai >= balance { Bound::Compute } else { Bound::Memory },
        attainable_gflops: attainable,
        utilization: point.measured_gflops.map(|m| m / attainable),
    }
}

/// Joules consumed drawing `power` W for `time` s.
pub fn energy_estimate(power: f64, time: f64) -> f64 {
    debug_assert!(power >= 0.0 && time >= 0.0);
    power * time
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits as i32 - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Measured,
    Attainable,
    Roof,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Measured => "measured",
            RowKind::Attainable => "attainable",
            RowKind::Roof => "roof",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineRow {
    pub label: String,
    pub ai_flop_per_byte: f64,
    pub gflops: f64,
    pub kind: RowKind,
}

/// Plot-ready roofline data: one row per code point followed by roof
/// polyline samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineDataset {
    pub machine: MachineSpec,
    pub reports: Vec<RooflineReport>,
    pub rows: Vec<RooflineRow>,
}

pub const CSV_HEADER: &str = "label,ai_flop_per_byte,gflops,kind";

/// Roof samples per decade of arithmetic intensity.
const ROOF_SAMPLES_PER_DECADE: usize = 8;

/// Builds the dataset for `points`. `extra_roof` adds a lower horizontal
/// compute roof in GFlop/s, e.g. one limited by the instruction mix.
pub fn roofline_dataset(spec: &MachineSpec, points: &[CodePoint], extra_roof: Option<f64>) -> Result<RooflineDataset> {
    spec.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("roofline needs at least one code point".into()));
    }
    for p in points {
        p.validate()?;
    }
    if matches!(extra_roof, Some(r) if !(r > 0.0)) {
        return Err(Error::InvalidArgument("extra roof must be > 0".into()));
    }

    let reports: Vec<RooflineReport> = points.iter().map(|p| classify(spec, p)).collect();
    let mut rows: Vec<RooflineRow> = points
        .iter()
        .zip(&reports)
        .map(|(p, r)| RooflineRow {
            label: p.label.clone(),
            ai_flop_per_byte: r.code_ai,
            gflops: p.measured_gflops.unwrap_or(r.attainable_gflops),
            kind: if p.measured_gflops.is_some() { RowKind::Measured } else { RowKind::Attainable },
        })
        .collect();

    let balance = machine_balance(spec);
    let ais = reports.iter().map(|r| r.code_ai).chain([balance]);
    let lo = ais.clone().fold(f64::INFINITY, f64::min) / 4.0;
    let hi = ais.fold(0.0, f64::max) * 4.0;
    let mut samples = log_samples(lo, hi);
    samples.push(balance);
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    let roof = |name: &str, peak: f64, rows: &mut Vec<RooflineRow>| {
        let knee = peak / spec.mem_bandwidth;
        let mut xs = samples.clone();
        xs.push(knee);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for ai in xs {
            rows.push(RooflineRow {
                label: name.to_string(),
                ai_flop_per_byte: ai,
                gflops: peak.min(ai * spec.mem_bandwidth),
                kind: RowKind::Roof,
            });
        }
    };
    roof("roof", spec.fp_peak, &mut rows);
    if let Some(extra) = extra_roof {
        roof("roof-extra", extra.min(spec.fp_peak), &mut rows);
    }
    Ok(RooflineDataset {
        machine: spec.clone(),
        reports,
        rows,
    })
}

fn log_samples(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let n = (((b - a) * ROOF_SAMPLES_PER_DECADE as f64).ceil() as usize).max(1);
    (0..=n).map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64)).collect()
}

impl RooflineDataset {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.ai_flop_per_byte.to_string(),
                r.gflops.to_string(),
                r.kind.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Gnuplot data: one `index` block for points, one per roof.
    pub fn to_gnuplot(&self) -> String {
        let mut out = format!(
            "# roofline {}: {} GB/s, {} GFlop/s, balance {:.3} Flop/B\n# ai_flop_per_byte gflops label\n",
            self.machine.name,
            self.machine.mem_bandwidth,
            self.machine.fp_peak,
            machine_balance(&self.machine)
        );
        let mut last: Option<(RowKind, &str)> = None;
        for r in &self.rows {
            let key = (r.kind, if r.kind == RowKind::Roof { r.label.as_str() } else { "" });
            let is_point = r.kind != RowKind::Roof;
            if let Some(prev) = last {
                let prev_point = prev.0 != RowKind::Roof;
                if prev_point != is_point || (!is_point && prev.1 != key.1) {
                    out.push_str("\n\n");
                }
            }
            out.push_str(&format!("{} {} \"{}\"\n", r.ai_flop_per_byte, r.gflops, r.label));
            last = Some(key);
        }
        out
    }
}

/// One column of a published counter table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetColumn {
    pub label: &'static str,
    pub flops_per_elem: f64,
    pub dram_bytes_per_elem: f64,
    pub l2_bytes_per_elem: f64,
    pub gflops: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CounterPreset {
    /// Icelake socket counters for B, RS, RSP.
    CpuTable1,
    /// A100 counters for B, P, RS, RSP, RSPR.
    GpuTable2,
}

const fn col(label: &'static str, flops: f64, dram: f64, l2: f64, gflops: f64) -> PresetColumn {
    PresetColumn {
        label,
        flops_per_elem: flops,
        dram_bytes_per_elem: dram,
        l2_bytes_per_elem: l2,
        gflops,
    }
}

const CPU_TABLE1: [PresetColumn; 3] = [
    col("B", 6316.0, 261.0, 12716.0, 13.8),
    col("RS", 1760.0, 218.0, 1120.0, 11.9),
    col("RSP", 1249.0, 241.0, 932.0, 14.2),
];

const GPU_TABLE2: [PresetColumn; 5] = [
    col("B", 6293.0, 23331.0, 35507.0, 163.0),
    col("P", 6148.0, 18721.0, 23837.0, 393.0),
    col("RS", 1663.0, 1170.0, 3052.0, 829.0),
    col("RSP", 1391.0, 442.0, 1304.0, 2020.0),
    col("RSPR", 1333.0, 150.0, 968.0, 2575.0),
];

impl CounterPreset {
    pub fn columns(self) -> &'static [PresetColumn] {
        match self {
            CounterPreset::CpuTable1 => &CPU_TABLE1,
            CounterPreset::GpuTable2 => &GPU_TABLE2,
        }
    }

    /// The machine the counters were measured on.
    pub fn machine(self) -> MachineSpec {
        let name = match self {
            CounterPreset::CpuTable1 => "icelake-8360y-socket",
            CounterPreset::GpuTable2 => "a100-sxm4-40g",
        };
        MachineSpec::preset(name).expect("built-in preset")
    }

    /// DRAM-level points without measured rates.
    pub fn dram_points(self) -> Vec<CodePoint> {
        self.columns()
            .iter()
            .map(|c| CodePoint::new(c.label, c.flops_per_elem, c.dram_bytes_per_elem))
            .collect()
    }

    /// L2-level points carrying the measured GFlop/s.
    pub fn l2_points(self) -> Vec<CodePoint> {
        self.columns()
            .iter()
            .map(|c| CodePoint::new(format!("{}-L2", c.label), c.flops_per_elem, c.l2_bytes_per_elem).with_measured(c.gflops))
            .collect()
    }
}

impl FromStr for CounterPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpu-table1" => Ok(CounterPreset::CpuTable1),
            "gpu-table2" => Ok(CounterPreset::GpuTable2),
            _ => Err(Error::InvalidArgument(format!(
                "unknown preset `{s}` (expected cpu-table1 or gpu-table2)"
            ))),
        }
    }
}
