use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tal_core::VariantId;

#[derive(Debug, Parser)]
#[command(name = "tet-assembly-lab", version, about = "Tet4 momentum RHS assembly variants: verification, benchmarks and roofline analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare every variant against the reference assembly.
    Verify(VerifyArgs),
    /// Time one or all variants.
    Bench(BenchArgs),
    /// Time variants over a list of thread counts.
    Sweep(SweepArgs),
    /// Roofline data from a published counter preset, bench records or the static ledgers.
    Roofline(RooflineArgs),
    /// Markdown summary of bench JSON files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Structured box of NX x NY x NZ hex cells, six tets each.
    #[arg(long = "box", num_args = 3, value_names = ["NX", "NY", "NZ"], conflicts_with = "mesh")]
    pub dims: Option<Vec<usize>>,
    /// Box extents.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], default_values_t = [1.0, 1.0, 1.0])]
    pub extents: Vec<f64>,
    /// Mesh file instead of a box.
    #[arg(long, value_name = "FILE")]
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// zero | constant[:VX:VY:VZ] | shear[:GAMMA] | taylor-green | random[:SEED]
    #[arg(long, value_name = "NAME[:ARGS]", default_value = "taylor-green")]
    pub init: String,
    /// Seed for `--init random` without an explicit seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub c_vreman: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scatter {
    PerThread,
    Colored,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = tal_core::variants::DEFAULT_VECTOR_DIM)]
    pub vector_dim: usize,
    #[arg(long, env = "TAL_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Race-free scatter used by RSP.
    #[arg(long, value_enum, default_value_t = Scatter::PerThread)]
    pub scatter: Scatter,
}

pub fn parse_variant(s: &str) -> Result<VariantId, String> {
    s.parse().map_err(|e: tal_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Write the report as JSON.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Perturb one RHS entry of the given variant before comparison.
    #[arg(long, hide = true, value_parser = parse_variant)]
    pub inject_fault: Option<VariantId>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// b | rs | rsp; all three when omitted.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<VariantId>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Skip the comparison against the reference assembly.
    #[arg(long)]
    pub no_verify: bool,
    /// Zero all timing fields in written files.
    #[arg(long)]
    pub stable_output: bool,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = tal_core::variants::DEFAULT_VECTOR_DIM)]
    pub vector_dim: usize,
    #[arg(long, value_enum, default_value_t = Scatter::PerThread)]
    pub scatter: Scatter,
    /// Comma-separated thread counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub thread_list: Vec<usize>,
    /// Comma-separated variants.
    #[arg(long = "variant", value_delimiter = ',', value_parser = parse_variant, default_value = "b,rs,rsp")]
    pub variants: Vec<VariantId>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long)]
    pub stable_output: bool,
    /// Sweep CSV; printed to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RooflineArgs {
    /// cpu-table1 | gpu-table2
    #[arg(long, conflicts_with = "from_bench")]
    pub paper_preset: Option<String>,
    /// With a preset, also plot its L2-level points.
    #[arg(long, requires = "paper_preset")]
    pub l2: bool,
    /// Bench JSON whose records become measured points.
    #[arg(long, value_name = "PATH")]
    pub from_bench: Option<PathBuf>,
    /// icelake-8360y-socket | a100-sxm4-40g; defaults to the preset's machine.
    #[arg(long)]
    pub machine: Option<String>,
    /// Additional horizontal compute roof in GFlop/s.
    #[arg(long, value_name = "GFLOPS")]
    pub extra_roof: Option<f64>,
    /// Chunk length used for the static ledgers' DRAM estimate.
    #[arg(long, default_value_t = tal_core::variants::DEFAULT_VECTOR_DIM)]
    pub vector_dim: usize,
    /// Roofline CSV; printed to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub gnuplot: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Bench JSON files.
    #[arg(required = true, value_name = "JSON")]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "icelake-8360y-socket")]
    pub machine: String,
    /// Markdown output; printed to stdout when omitted.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}
