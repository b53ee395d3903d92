//! Command-line interface exposing every pipeline stage: synthetic graph
//! generation, weight construction, embedding, inductive extension, scree
//! inspection, evaluation, subgraph covers, distance assembly, and the
//! scripted experiments.
//!
//! Stochastic subcommands refuse to run without an explicit `--seed` (or a
//! config file carrying one); there are no silent time-based seeds.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lasekit::eval::{procrustes_align, regress_coordinates, rmse_region, ProcrustesOptions};
use lasekit::experiments::coordreg::{run_coordinate_regression, CoordRegConfig};
use lasekit::experiments::eigendecay::{run_eigendecay, EigendecayConfig};
use lasekit::experiments::reconstruction::{run_reconstruction_sweep, ReconstructionConfig};
use lasekit::experiments::shapes::{run_shapes, ShapesConfig};
use lasekit::graph::{ingest_edge_list, EdgeListFormat, Graph};
use lasekit::io;
use lasekit::latent::{
    build_probability_matrix, sample_graph, sample_latent, KernelSpec, ProbabilityMatrix,
    SupportSpec,
};
use lasekit::local2global::{
    assemble_distances, build_cover, embed_cover, export_precomputed, EmbedCoverOptions,
    ExportFormat, PatchWeighting, SubgraphCover,
};
use lasekit::spectral::eigen::EigenOptions;
use lasekit::spectral::{ase, inductive_lase, lase, scree, subgraph_ase};
use lasekit::weights::{
    attribute_weights, graph_distance_weights, hybrid_weights, soft_threshold_weights,
    subgraph_weights, UnreachablePolicy,
};

#[derive(Parser)]
#[command(
    name = "lasekit",
    version,
    about = "Locally weighted spectral graph embedding toolkit"
)]
struct Cli {
    /// Seed for stochastic subcommands. Required there; never defaulted
    /// from the clock.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps and cover embedding (default: the
    /// LASEKIT_JOBS environment variable, else all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample latent positions and a graph from a latent position model.
    Generate(GenerateArgs),
    /// Construct a node-weight vector with any strategy.
    Weights(WeightsArgs),
    /// Embed a graph (global, locally weighted, or induced-subgraph).
    Embed(EmbedArgs),
    /// Embed an out-of-sample node from a fitted model directory.
    Inductive(InductiveArgs),
    /// Top-k eigenvalues (scree) of the plain or weighted adjacency matrix.
    Scree(ScreeArgs),
    /// Evaluation utilities.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Build a random m-hop subgraph cover.
    Cover(CoverArgs),
    /// Embed a cover and assemble the global precomputed distance matrix.
    Assemble(AssembleArgs),
    /// Run a scripted experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistKind {
    Uniform,
    Gaussian,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    dist: DistKind,
    #[arg(long)]
    n: usize,
    /// Latent dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Uniform box lower corner, comma-separated (broadcast if scalar).
    #[arg(long, default_value = "0")]
    lo: String,
    /// Uniform box upper corner, comma-separated (broadcast if scalar).
    #[arg(long, default_value = "10")]
    hi: String,
    /// Gaussian mean, comma-separated (broadcast if scalar).
    #[arg(long, default_value = "0")]
    mean: String,
    /// Gaussian precision (1 / sigma^2).
    #[arg(long, default_value_t = 1.0)]
    precision: f64,
    /// Optional truncation radius for the Gaussian draw.
    #[arg(long)]
    truncation: Option<f64>,
    #[arg(long, default_value = "gaussian_full")]
    kernel: String,
    /// Output prefix; writes <prefix>.latent.csv, <prefix>.edges,
    /// <prefix>.nodemap.csv.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Also write the dense probability matrix to <prefix>.p.csv.
    #[arg(long)]
    write_p: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyKind {
    Attribute,
    Graphdist,
    Subgraph,
    Hybrid,
    Soft,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long, value_enum)]
    strategy: StrategyKind,
    #[arg(long)]
    graph: PathBuf,
    /// Coordinates CSV (label,x,...); required by attribute/hybrid/soft.
    #[arg(long)]
    coords: Option<PathBuf>,
    /// Centre point for attribute/soft, comma-separated floats.
    #[arg(long)]
    center: Option<String>,
    /// Reference node (label or index) for graphdist/hybrid.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// Power for graph-distance weights.
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Plateau radius for soft-threshold weights.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Node-list file for subgraph weights.
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Give unreachable nodes this weight instead of zero.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Rescale so the weights sum to the node count.
    #[arg(long)]
    normalise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodKind {
    Ase,
    Lase,
    Subgraph,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    method: MethodKind,
    #[arg(long)]
    r: usize,
    /// Weights CSV for the lase method.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Centre node (label or index) for inline weights or the subgraph
    /// method.
    #[arg(long)]
    center: Option<String>,
    /// With --center and --coords: attribute weights exp(-tau d^2).
    #[arg(long)]
    tau: Option<f64>,
    /// With --center alone: graph-distance weights (1/(1+hops))^p.
    #[arg(long)]
    p: Option<f64>,
    /// Hop radius of the subgraph method's m-hop neighbourhood.
    #[arg(long)]
    m: Option<u32>,
    /// Node-list file for the subgraph method.
    #[arg(long)]
    nodes: Option<PathBuf>,
    #[arg(long)]
    coords: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Persist the fitted model (for `inductive`) into this directory.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Dense eigensolver cutoff.
    #[arg(long, default_value_t = 1024)]
    dense_cutoff: usize,
}

#[derive(Args)]
struct InductiveArgs {
    #[arg(long)]
    model_dir: PathBuf,
    /// Dense 0/1 vector, one value per line, ordered like the model's
    /// active node list.
    #[arg(long)]
    connections_file: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScreeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Normalise the weight file before use (scree requires sum w = n).
    #[arg(long)]
    normalise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Region RMSE of reconstructed connection probabilities.
    Rmse {
        #[arg(long)]
        embedding: PathBuf,
        /// Dense probability matrix CSV (header row of indices).
        #[arg(long)]
        pmatrix: PathBuf,
        /// Node-list file defining the region.
        #[arg(long)]
        region: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ordinary least squares from embeddings to coordinates.
    Regress {
        #[arg(long)]
        x_train: PathBuf,
        #[arg(long)]
        y_train: PathBuf,
        #[arg(long)]
        x_test: PathBuf,
        #[arg(long)]
        y_test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Orthogonal Procrustes alignment of two point sets.
    Procrustes {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        center: bool,
        #[arg(long)]
        scale: bool,
        /// Aligned points CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON report (rotation, residual).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    m_hop: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatKind {
    Csv,
    Raw64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PatchWeightKind {
    Uniform,
    Soft,
}

#[derive(Args)]
struct AssembleArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Cover JSON from the `cover` subcommand.
    #[arg(long)]
    cover: PathBuf,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, value_enum, default_value_t = FormatKind::Csv)]
    format: FormatKind,
    #[arg(long, value_enum, default_value_t = PatchWeightKind::Uniform)]
    patch_weights: PatchWeightKind,
    /// Localisation strength for soft patch weights.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    Eigendecay,
    Reconstruction,
    Shapes,
    Coordreg,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    name: ExperimentKind,
    /// JSON config; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "experiment_out")]
    out_dir: PathBuf,
    /// Graph for data-driven experiments (coordreg).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Coordinates for data-driven experiments (coordreg).
    #[arg(long)]
    coords: Option<PathBuf>,
    /// Print the default config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs.or_else(|| {
        std::env::var("LASEKIT_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    }) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| {
        anyhow!("this subcommand is stochastic: pass an explicit --seed (no time-based default)")
    })
}

fn load_graph(path: &PathBuf) -> Result<Graph> {
    let (g, report) = ingest_edge_list(path, EdgeListFormat::Auto)
        .with_context(|| format!("reading edge list {}", path.display()))?;
    if report.self_loops_dropped > 0 || report.duplicate_edges_dropped > 0 {
        eprintln!(
            "note: normalised edge list ({} self-loops, {} duplicate edges dropped)",
            report.self_loops_dropped, report.duplicate_edges_dropped
        );
    }
    Ok(g)
}

fn resolve_node(g: &Graph, spec: &str) -> Result<usize> {
    if let Some(i) = g.index_of(spec) {
        return Ok(i);
    }
    let i: usize = spec
        .parse()
        .map_err(|_| anyhow!("node {spec:?} is neither a known label nor an index"))?;
    if i >= g.node_count() {
        bail!(
            "node index {i} out of range for graph with {} nodes",
            g.node_count()
        );
    }
    Ok(i)
}

fn parse_point(spec: &str, d: usize) -> Result<Vec<f64>> {
    let vals: Result<Vec<f64>> = spec
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad coordinate {t:?} in {spec:?}"))
        })
        .collect();
    let mut vals = vals?;
    if vals.len() == 1 && d > 1 {
        vals = vec![vals[0]; d];
    }
    if vals.len() != d {
        bail!("expected {d} coordinates, got {} in {spec:?}", vals.len());
    }
    Ok(vals)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args, cli.seed),
        Command::Weights(args) => weights(args),
        Command::Embed(args) => embed(args),
        Command::Inductive(args) => inductive(args),
        Command::Scree(args) => scree_cmd(args),
        Command::Eval(cmd) => eval(cmd),
        Command::Cover(args) => cover_cmd(args, cli.seed),
        Command::Assemble(args) => assemble(args),
        Command::Experiment(args) => experiment(args, cli.seed),
    }
}

fn generate(args: GenerateArgs, seed: Option<u64>) -> Result<()> {
    let seed = require_seed(seed)?;
    let support = match args.dist {
        DistKind::Uniform => SupportSpec::UniformBox {
            lo: parse_point(&args.lo, args.d)?,
            hi: parse_point(&args.hi, args.d)?,
        },
        DistKind::Gaussian => SupportSpec::IsotropicGaussian {
            mean: parse_point(&args.mean, args.d)?,
            precision: args.precision,
            truncation_radius: args.truncation,
        },
    };
    let kernel = KernelSpec::parse(&args.kernel)?;
    let sample = sample_latent(&support, args.n, seed)?;
    let p = build_probability_matrix(&sample, &kernel);
    let graph = sample_graph(&p, seed.wrapping_add(1));

    let prefix = args.out_prefix.as_os_str().to_string_lossy().to_string();
    io::write_latent_csv(&sample, format!("{prefix}.latent.csv"))?;
    graph.write_edge_list(format!("{prefix}.edges"))?;
    graph.write_node_map(format!("{prefix}.nodemap.csv"))?;
    if args.write_p {
        io::write_distance_csv(p.matrix(), format!("{prefix}.p.csv"))?;
    }
    println!(
        "generated n={} graph with {} edges under {} kernel",
        graph.node_count(),
        graph.edge_count(),
        kernel.name()
    );
    Ok(())
}

fn weights(args: WeightsArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let coords = match &args.coords {
        Some(path) => Some(io::read_coords_csv(path, &g)?),
        None => None,
    };
    let need = |x: Option<f64>, name: &str| x.ok_or_else(|| anyhow!("--{name} is required here"));
    let w = match args.strategy {
        StrategyKind::Attribute => {
            let coords = coords.ok_or_else(|| anyhow!("attribute weights need --coords"))?;
            let center_spec = args
                .center
                .ok_or_else(|| anyhow!("attribute weights need --center"))?;
            let center = parse_point(&center_spec, coords.ncols())?;
            attribute_weights(&coords, &center, need(args.tau, "tau")?)?
        }
        StrategyKind::Graphdist => {
            let source = args
                .source
                .ok_or_else(|| anyhow!("graphdist weights need --source"))?;
            let dists = g.bfs_distances(resolve_node(&g, &source)?)?;
            let policy = match args.epsilon {
                Some(value) => UnreachablePolicy::Epsilon { value },
                None => UnreachablePolicy::Zero,
            };
            graph_distance_weights(&dists, need(args.power, "power")?, policy)?
        }
        StrategyKind::Subgraph => {
            let nodes = args
                .nodes
                .ok_or_else(|| anyhow!("subgraph weights need --nodes"))?;
            let nodes = io::read_node_list(nodes)?;
            subgraph_weights(g.node_count(), &nodes)?
        }
        StrategyKind::Hybrid => {
            let coords = coords.ok_or_else(|| anyhow!("hybrid weights need --coords"))?;
            let source = args
                .source
                .ok_or_else(|| anyhow!("hybrid weights need --source"))?;
            let dists = g.bfs_distances(resolve_node(&g, &source)?)?;
            hybrid_weights(
                &dists,
                &coords,
                need(args.alpha, "alpha")?,
                need(args.beta, "beta")?,
            )?
        }
        StrategyKind::Soft => {
            let coords = coords.ok_or_else(|| anyhow!("soft weights need --coords"))?;
            let center_spec = args
                .center
                .ok_or_else(|| anyhow!("soft weights need --center"))?;
            let center = parse_point(&center_spec, coords.ncols())?;
            soft_threshold_weights(&coords, &center, need(args.tau, "tau")?, args.rho)?
        }
    };
    let w = if args.normalise { w.normalise()? } else { w };
    io::write_weights_csv(&w, &args.out)?;
    println!(
        "wrote {} weights ({} strictly positive) to {}",
        w.len(),
        w.positive_count(),
        args.out.display()
    );
    Ok(())
}

fn embed(args: EmbedArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let opts = EigenOptions {
        dense_cutoff: args.dense_cutoff,
        ..EigenOptions::default()
    };
    let (embedding, model) = match args.method {
        MethodKind::Ase => ase(&g, args.r, &opts)?,
        MethodKind::Lase => {
            let w = if let Some(path) = &args.weights {
                io::read_weights_csv(path)?
            } else if let Some(center) = &args.center {
                let node = resolve_node(&g, center)?;
                match (&args.coords, args.tau, args.p) {
                    (Some(coords_path), Some(tau), None) => {
                        let coords = io::read_coords_csv(coords_path, &g)?;
                        let center: Vec<f64> =
                            (0..coords.ncols()).map(|k| coords[(node, k)]).collect();
                        attribute_weights(&coords, &center, tau)?
                    }
                    (None, None, Some(p)) => {
                        let dists = g.bfs_distances(node)?;
                        graph_distance_weights(&dists, p, UnreachablePolicy::Zero)?
                    }
                    _ => bail!(
                        "inline lase weights need either --coords with --tau (attribute) or \
                         --p alone (graph distance)"
                    ),
                }
            } else {
                bail!("lase needs --weights FILE, or --center with --tau/--p");
            };
            lase(&g, &w, args.r, &opts)?
        }
        MethodKind::Subgraph => {
            let nodes = if let Some(path) = &args.nodes {
                io::read_node_list(path)?
            } else if let (Some(center), Some(m)) = (&args.center, args.m) {
                g.m_hop_neighborhood(resolve_node(&g, center)?, m)?
            } else {
                bail!("subgraph method needs --nodes FILE, or --center with --m");
            };
            subgraph_ase(&g, &nodes, args.r, &opts)?
        }
    };
    io::write_embedding_csv(&embedding, &args.out)?;
    for warning in model.warnings() {
        eprintln!("warning: {warning}");
    }
    if let Some(dir) = &args.model_out {
        io::save_model(&model, dir)?;
    }
    println!(
        "embedded {} nodes into {} dimensions ({} excluded)",
        embedding.n(),
        embedding.r(),
        embedding.excluded_count()
    );
    Ok(())
}

fn inductive(args: InductiveArgs) -> Result<()> {
    let model = io::load_model(&args.model_dir)?;
    let connections = io::read_connections(&args.connections_file)?;
    let out = inductive_lase(&connections, &model)?;
    let mut table = io::CsvTable::new(
        &(1..=out.len())
            .map(|k| (format!("x{k}"), io::ColType::Float))
            .collect::<Vec<_>>()
            .iter()
            .map(|(n, t)| (n.as_str(), *t))
            .collect::<Vec<_>>(),
    );
    table.push(out.iter().map(|v| io::Cell::Float(*v)).collect())?;
    table.write(&args.out)?;
    println!("inductive embedding written to {}", args.out.display());
    Ok(())
}

fn scree_cmd(args: ScreeArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let w = match &args.weights {
        Some(path) => {
            let w = io::read_weights_csv(path)?;
            Some(if args.normalise { w.normalise()? } else { w })
        }
        None => None,
    };
    let report = scree(&g, w.as_ref(), args.k, &EigenOptions::default())?;
    if report.clipped {
        eprintln!(
            "note: k exceeded the node count and was clipped to {}",
            report.values.len()
        );
    }
    io::write_scree_csv(&report, &args.out)?;
    println!(
        "wrote top {} eigenvalues to {}",
        report.values.len(),
        args.out.display()
    );
    Ok(())
}

fn eval(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Rmse {
            embedding,
            pmatrix,
            region,
            out,
        } => {
            let emb = io::read_embedding_csv(embedding)?;
            let p = ProbabilityMatrix::from_matrix(io::read_distance_csv(pmatrix)?)?;
            let region = io::read_node_list(region)?;
            let report = rmse_region(&emb, &p, &region)?;
            io::write_json(&report, &out)?;
            println!("region rmse {:.6} over {} pairs", report.rmse, report.pairs);
        }
        EvalCommand::Regress {
            x_train,
            y_train,
            x_test,
            y_test,
            out,
        } => {
            let report = regress_coordinates(
                &io::read_matrix_csv(x_train)?,
                &io::read_matrix_csv(y_train)?,
                &io::read_matrix_csv(x_test)?,
                &io::read_matrix_csv(y_test)?,
            )?;
            io::write_json(&report, &out)?;
            println!(
                "train r2 {:.4}, test mse {:.6}{}",
                report.r2_pooled,
                report.mse_pooled,
                if report.rank_deficient {
                    " (rank-deficient design)"
                } else {
                    ""
                }
            );
        }
        EvalCommand::Procrustes {
            x,
            y,
            center,
            scale,
            out,
            report,
        } => {
            let res = procrustes_align(
                &io::read_matrix_csv(x)?,
                &io::read_matrix_csv(y)?,
                ProcrustesOptions { center, scale },
            )?;
            io::write_matrix_csv(&res.aligned, &out)?;
            if let Some(path) = report {
                #[derive(serde::Serialize)]
                struct ProcrustesReport {
                    residual: f64,
                    scale: f64,
                    rank_deficient: bool,
                    rotation: Vec<Vec<f64>>,
                }
                let d = res.rotation.nrows();
                io::write_json(
                    &ProcrustesReport {
                        residual: res.residual,
                        scale: res.scale,
                        rank_deficient: res.rank_deficient,
                        rotation: (0..d)
                            .map(|i| (0..d).map(|j| res.rotation[(i, j)]).collect())
                            .collect(),
                    },
                    path,
                )?;
            }
            println!("procrustes residual {:.6e}", res.residual);
        }
    }
    Ok(())
}

fn cover_cmd(args: CoverArgs, seed: Option<u64>) -> Result<()> {
    let seed = require_seed(seed)?;
    let g = load_graph(&args.graph)?;
    let cover = build_cover(&g, args.m_hop, seed)?;
    io::write_json(&cover, &args.out)?;
    println!(
        "cover of {} nodes with {} patches (m = {})",
        g.node_count(),
        cover.patches.len(),
        cover.m
    );
    Ok(())
}

fn assemble(args: AssembleArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let cover: SubgraphCover = io::read_json(&args.cover)?;
    let opts = EmbedCoverOptions {
        r: args.r,
        weighting: match args.patch_weights {
            PatchWeightKind::Uniform => PatchWeighting::Uniform,
            PatchWeightKind::Soft => PatchWeighting::SoftLase { tau: args.tau },
        },
        eigen: EigenOptions::default(),
    };
    let patches = embed_cover(&g, &cover, &opts)?;
    let reduced = patches
        .iter()
        .filter(|p| p.reduced && !p.degenerate)
        .count();
    let degenerate = patches.iter().filter(|p| p.degenerate).count();
    if reduced > 0 || degenerate > 0 {
        eprintln!("note: {reduced} patches embedded at reduced rank, {degenerate} degenerate");
    }
    let assembly = assemble_distances(g.node_count(), &patches)?;
    let format = match args.format {
        FormatKind::Csv => ExportFormat::Csv,
        FormatKind::Raw64 => ExportFormat::Raw64,
    };
    let meta = export_precomputed(&assembly, &cover, args.r, &args.out, format)?;
    println!(
        "assembled {}x{} distances from {} patches (fill value {:.6})",
        meta.n, meta.n, meta.patches, meta.fill_value
    );
    Ok(())
}

fn experiment(args: ExperimentArgs, seed: Option<u64>) -> Result<()> {
    if args.print_config {
        let json = match args.name {
            ExperimentKind::Eigendecay => {
                serde_json::to_string_pretty(&EigendecayConfig::default())
            }
            ExperimentKind::Reconstruction => {
                serde_json::to_string_pretty(&ReconstructionConfig::default())
            }
            ExperimentKind::Shapes => serde_json::to_string_pretty(&ShapesConfig::default()),
            ExperimentKind::Coordreg => serde_json::to_string_pretty(&CoordRegConfig::default()),
        }?;
        println!("{json}");
        return Ok(());
    }
    if args.config.is_none() && seed.is_none() {
        bail!("experiments are stochastic: pass --seed or a --config carrying a seed");
    }
    std::fs::create_dir_all(&args.out_dir)?;
    match args.name {
        ExperimentKind::Eigendecay => {
            let mut cfg: EigendecayConfig = match &args.config {
                Some(path) => io::read_json(path)?,
                None => EigendecayConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_eigendecay(&cfg, Some(&args.out_dir.join("eigendecay.csv")))?;
            println!("eigendecay results in {}", args.out_dir.display());
        }
        ExperimentKind::Reconstruction => {
            let mut cfg: ReconstructionConfig = match &args.config {
                Some(path) => io::read_json(path)?,
                None => ReconstructionConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let res = run_reconstruction_sweep(&cfg, Some(&args.out_dir))?;
            let (tau, cont) =
                lasekit::experiments::reconstruction::ReconstructionResult::best(&res.continuous);
            let (width, top) =
                lasekit::experiments::reconstruction::ReconstructionResult::best(&res.tophat);
            println!(
                "best continuous rmse {cont:.4} at tau {tau}; best top-hat rmse {top:.4} at width {width}"
            );
        }
        ExperimentKind::Shapes => {
            let mut cfg: ShapesConfig = match &args.config {
                Some(path) => io::read_json(path)?,
                None => ShapesConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_shapes(&cfg, Some(&args.out_dir))?;
            println!("shape embeddings and summary in {}", args.out_dir.display());
        }
        ExperimentKind::Coordreg => {
            let graph_path = args
                .graph
                .ok_or_else(|| anyhow!("coordreg needs --graph"))?;
            let coords_path = args
                .coords
                .ok_or_else(|| anyhow!("coordreg needs --coords"))?;
            let g = load_graph(&graph_path)?;
            let coords = io::read_coords_csv(&coords_path, &g)?;
            let mut cfg: CoordRegConfig = match &args.config {
                Some(path) => io::read_json(path)?,
                None => CoordRegConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run_coordinate_regression(&g, &coords, &cfg, Some(&args.out_dir.join("coordreg.csv")))?;
            println!("regression table in {}", args.out_dir.display());
        }
    }
    Ok(())
}
