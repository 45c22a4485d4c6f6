use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgr_core::{Method, TripleFormat, Variant};

#[derive(Debug, Parser)]
#[command(
    name = "kgr",
    version,
    about = "Knowledge-graph retrieval, perturbation and similarity toolkit"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Root seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker pool width.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Format of graph files written.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,

    /// Override any configuration key, e.g. `--set ppr.alpha=0.9`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Nt,
}

impl From<FormatArg> for TripleFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => TripleFormat::Tsv,
            FormatArg::Nt => TripleFormat::Nt,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct InputArgs {
    /// Triple file (`.tsv` or `.nt`).
    #[arg(long)]
    pub graph: Option<PathBuf>,

    /// JSONL query file.
    #[arg(long)]
    pub queries: Option<PathBuf>,

    /// Comma-separated seed entities for queries without their own.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<String>>,
}

#[derive(Debug, Default, Args)]
pub struct RetrievalArgs {
    /// Number of prized elements per kind.
    #[arg(long)]
    pub k: Option<u32>,

    #[arg(long)]
    pub edge_cost: Option<f64>,

    #[arg(long)]
    pub variant: Option<Variant>,

    /// k-hop radius for extraction.
    #[arg(long)]
    pub hops: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut the k-hop neighborhood of each query's seeds and prune it by PPR.
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        hops: Option<usize>,
    },
    /// Retrieve knowledge for every query.
    Retrieve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Perturb a graph and write it with its edit log.
    Perturb {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// relation_swap | relation_replace | edge_rewire | edge_delete (or RS/RR/ER/ED).
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        level: Option<f64>,
    },
    /// Compare a graph with a perturbed copy.
    Measure {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        perturbed: Option<PathBuf>,
    },
    /// Run the method × level × replicate perturbation grid.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Build prompts from retrieved knowledge and query the generation service.
    Generate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        /// Generation endpoint (falls back to KGR_GEN_URL).
        #[arg(long)]
        gen_url: Option<String>,
        /// Prompt template file.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Summary statistics of a graph.
    Stats {
        #[arg(long)]
        graph: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Extract { .. } => "extract",
            Command::Retrieve { .. } => "retrieve",
            Command::Perturb { .. } => "perturb",
            Command::Measure { .. } => "measure",
            Command::Sweep { .. } => "sweep",
            Command::Generate { .. } => "generate",
            Command::Stats { .. } => "stats",
        }
    }
}
