//! Batch command surface of graphonlab.
//!
//! Every command is a function of its flags and `--seed`. Files named with
//! `--out` are written once, after all work is done. Exit codes: 0 success,
//! 1 usage or input error, 2 verification failure, 3 inconclusive results
//! only.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use graphonlab::density::GraphSpec;
use graphonlab::dsl::{builtin_graph, parse};
use graphonlab::graphon::Graphon;
use graphonlab::graphon_spec::{builtin, is_builtin, parse_spec};
use graphonlab::hypercube::{HypercubeGraphon, DEFAULT_TRUNCATION};
use graphonlab::recipe::Recipe;

mod commands;
pub mod output;

use output::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Caps the worker count when set.
pub const THREADS_ENV: &str = "GRAPHONLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "graphonlab", version, about = "Graphon laboratory: densities, sampling, distances and the verification battery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Builtin name (`constant(p=0.5)`, `half`, `checker`, `hypercubical(L=30)`) or a spec file.
    #[arg(long, default_value = "hypercubical")]
    pub graphon: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples per estimate.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 5e-3)]
    pub tol: f64,
    /// Truncation depth of the hypercubical graphon.
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Files with `graph` blocks; their graphs can be named below.
    #[arg(long)]
    pub graphs: Vec<PathBuf>,
    /// Graph names: from `--graphs` files or builtins K2..K8, E2.., P2.., C3...
    pub names: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grayscale raster of the graphon (PNG, or PGM for a `.pgm` path) and a part-boundary sidecar.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        resolution: u32,
    },
    /// Runs the verification battery and any constraint files.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        constraints: Vec<PathBuf>,
        /// Keep only battery items whose names start with one of these.
        #[arg(long)]
        select: Vec<String>,
        /// Corrupt one kernel pair, e.g. `B1xB4`, as a negative control.
        #[arg(long)]
        mutate: Option<String>,
        /// Print battery item names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Densities `d(H, W)` of the named graphs.
    Density {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graphs: GraphArgs,
    },
    /// Draws a `W`-random graph and writes its edge list.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        graphs: GraphArgs,
    },
    /// L¹ and similarity distances of random pairs of `D` vertices with their bounds.
    Distances {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
    },
    /// Empirical densities in `W`-random graphs of growing order next to `d(H, W)`.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graphs: GraphArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [50, 200, 800])]
        schedule: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

/// A usage problem found after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl Common {
    pub(crate) fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| usage("--seed is required for this command"))
    }

    pub(crate) fn graphon(&self) -> Result<Box<dyn Graphon>> {
        load_graphon(&self.graphon, self.depth)
    }
}

pub fn load_graphon(spec: &str, depth: Option<u32>) -> Result<Box<dyn Graphon>> {
    if is_builtin(spec) {
        let g = builtin(spec).map_err(|e| usage(e.to_string()))?;
        if let Some(d) = depth {
            if !spec.starts_with("hypercubical") {
                return Err(usage("--depth applies to the hypercubical graphon only"));
            }
            if d == 0 || d > graphonlab::graphon_spec::MAX_TRUNCATION {
                return Err(usage(format!("--depth must be between 1 and {}", graphonlab::graphon_spec::MAX_TRUNCATION)));
            }
            let h = g.as_any().downcast_ref::<HypercubeGraphon>().expect("hypercubical builtin");
            return Ok(Box::new(HypercubeGraphon::build(*h.recipe(), d)?));
        }
        return Ok(g);
    }
    let path = PathBuf::from(spec);
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("cannot read graphon spec {spec}: {e}")))?;
    let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    let g = parse_spec(&text, &name).map_err(|e| usage(format!("{spec}: {e}")))?;
    Ok(Box::new(g))
}

/// The hypercubical default when nothing else is named.
pub fn default_hypercube() -> HypercubeGraphon {
    HypercubeGraphon::build(Recipe::default(), DEFAULT_TRUNCATION).expect("default truncation is valid")
}

impl GraphArgs {
    /// Named graphs, or every graph of the files when no names are given.
    pub(crate) fn resolve(&self) -> Result<Vec<(String, GraphSpec)>> {
        let mut table = std::collections::BTreeMap::new();
        let mut order = Vec::new();
        for path in &self.graphs {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let file = parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            for (name, g) in file.graphs {
                order.push(name.clone());
                table.insert(name, g);
            }
        }
        let names = if self.names.is_empty() { order } else { self.names.clone() };
        if names.is_empty() {
            bail!(usage("name at least one graph"));
        }
        names
            .into_iter()
            .map(|n| {
                let g = table.get(&n).cloned().or_else(|| builtin_graph(&n)).ok_or_else(|| usage(format!("unknown graph {n:?}")))?;
                Ok((n, g))
            })
            .collect()
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Messages go to stderr, the rendered report to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(done) => {
            print!("{}", done.stdout);
            if let Some(note) = &done.note {
                eprintln!("{note}");
            }
            done.code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

/// What a command produced: its exit code, the text for stdout and a
/// summary for stderr. Files are already written.
pub struct Done {
    pub code: i32,
    pub stdout: String,
    pub note: Option<String>,
}

pub fn execute(command: &Command) -> Result<Done> {
    match command {
        Command::Heatmap { common, resolution } => commands::heatmap(common, *resolution),
        Command::Verify { common, constraints, select, mutate, list } => {
            commands::verify(common, constraints, select, mutate.as_deref(), *list)
        }
        Command::Density { common, graphs } => commands::density(common, graphs),
        Command::Sample { common, n, graphs } => commands::sample(common, *n, graphs),
        Command::Distances { common, pairs } => commands::distances(common, *pairs),
        Command::Convergence { common, graphs, schedule, trials } => commands::convergence(common, graphs, schedule, *trials),
    }
}
