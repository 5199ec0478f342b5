use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use patchpeps::network::DEFAULT_BUDGET;
use patchpeps::peps::STATE_VECTOR_CUTOFF;
use patchpeps::LatticeSpec;
use serde::{Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "patchpeps", version, about = "Local expectation values of injective PEPS from finite patches")]
pub struct Cli {
    /// Run all data-parallel loops on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a PEPS file from a built-in family.
    Gen(GenArgs),
    /// Patch estimate at a fixed radius or to a target accuracy.
    Estimate(EstimateArgs),
    /// Exact expectation value by full contraction.
    Oracle(OracleArgs),
    /// Simulated measurement estimate on the patch state.
    Sample(SampleArgs),
    /// Transfer-operator spectrum and correlation functions.
    Transfer(TransferArgs),
    /// Parent-Hamiltonian gap of a chain and its prefixes.
    ParentGap(ParentGapArgs),
    /// Patch-contraction timings over lattice sizes and radii, as CSV.
    BenchScaling(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Estimate(_) => "estimate",
            Command::Oracle(_) => "oracle",
            Command::Sample(_) => "sample",
            Command::Transfer(_) => "transfer",
            Command::ParentGap(_) => "parent-gap",
            Command::BenchScaling(_) => "bench-scaling",
        }
    }
}

/// `RxC` for a grid or `N` for a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeArg(pub Vec<usize>);

impl LatticeArg {
    pub fn spec(&self) -> patchpeps::Result<LatticeSpec> {
        LatticeSpec::new(self.0.clone())
    }
}

impl FromStr for LatticeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let extents = s
            .split('x')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad lattice extent {p:?} in {s:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        if extents.is_empty() || extents.len() > 2 || extents.contains(&0) {
            return Err(format!("lattice {s:?} must look like 8 or 4x4"));
        }
        Ok(LatticeArg(extents))
    }
}

impl fmt::Display for LatticeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

impl Serialize for LatticeArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Inclusive range `a..b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct XRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for XRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("range {s:?} must look like 1..8"))?;
        let parse = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad range bound {p:?}"));
        let (start, end) = (parse(a)?, parse(b)?);
        if start > end {
            return Err(format!("empty range {s:?}"));
        }
        Ok(XRange { start, end })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Product,
    Perturbed,
    Aklt,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    /// Lattice for product and perturbed states, e.g. 3x3 or 8.
    #[arg(long, required_if_eq_any([("kind", "product"), ("kind", "perturbed")]))]
    pub lattice: Option<LatticeArg>,
    /// AKLT chain length.
    #[arg(long, required_if_eq("kind", "aklt"))]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub bond_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub phys_dim: usize,
    /// Perturbation strength.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, required_if_eq("kind", "perturbed"))]
    pub seed: Option<u64>,
    /// Real amplitudes of the product-state site vector, normalised on use.
    /// Defaults to the first basis vector.
    #[arg(long, value_delimiter = ',')]
    pub chi: Option<Vec<f64>>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("radius").required(true).args(["ell", "epsilon"])))]
pub struct EstimateArgs {
    #[arg(long)]
    pub peps: PathBuf,
    /// Preset like pauli-z@1,1 (products joined by `*`) or an observable file.
    #[arg(long)]
    pub obs: String,
    /// Fixed patch radius.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Target accuracy; runs the adaptive ladder unless --from-bound.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// With --epsilon, take the radius from the a-priori bound instead.
    #[arg(long, requires = "epsilon")]
    pub from_bound: bool,
    /// Clustering-rate constant c.
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    /// Declared uniform gap.
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
    /// Fixed condition-number bound; measured when absent.
    #[arg(long)]
    pub kappa_star: Option<f64>,
    /// Largest contraction intermediate, in entries.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub peps: PathBuf,
    #[arg(long)]
    pub obs: String,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = STATE_VECTOR_CUTOFF)]
    pub state_vector_cutoff: usize,
    /// Use one contraction route only.
    #[arg(long)]
    pub no_cross_check: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub peps: PathBuf,
    #[arg(long)]
    pub obs: String,
    #[arg(long)]
    pub ell: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransferArgs {
    #[arg(long)]
    pub peps: PathBuf,
    /// Chain site whose transfer operator is used (default 1).
    #[arg(long, conflicts_with_all = ["column", "width"])]
    pub site: Option<usize>,
    /// Strip column of a 2D state.
    #[arg(long, requires = "width")]
    pub column: Option<usize>,
    #[arg(long, requires = "column")]
    pub width: Option<usize>,
    /// Strip row carrying the dressing.
    #[arg(long, default_value_t = 0)]
    pub row: usize,
    /// Single-site operator preset for the left insertion, e.g. s_z.
    #[arg(long)]
    pub op_a: Option<String>,
    /// Right insertion; defaults to the left one.
    #[arg(long, requires = "op_a")]
    pub op_b: Option<String>,
    /// Ring length of the trace formula.
    #[arg(long, default_value_t = 64)]
    pub length: usize,
    /// Separations, counted as operators between the insertions.
    #[arg(long, default_value = "1..8")]
    pub x_range: XRange,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ParentGapArgs {
    #[arg(long)]
    pub peps: PathBuf,
    /// Longest prefix scanned; defaults to the whole chain.
    #[arg(long, conflicts_with = "window")]
    pub max_n: Option<usize>,
    /// Window size of the local terms; automatic when absent.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub lattice_sizes: Vec<LatticeArg>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ells: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub bond_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub phys_dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Single-site preset placed at the lattice centre.
    #[arg(long, default_value = "pauli-z")]
    pub obs: String,
    /// Timed repetitions per row; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
