use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use gtda::datasets::{label_file, surrogate_predictor, swiss_roll};
use gtda::diagnose::{correct_binary_labels, parse_labels_csv, write_labels_csv, LabelFile};
use gtda::graph::{parse_edge_list, union_graphs, write_edge_list};
use gtda::layout::layout_reeb;
use gtda::lens::{minmax_normalize, parse_lens_csv, write_lens_csv};
use gtda::mapper::{mapper_cover, mapper_reeb, MapperParams};
use gtda::pipeline::{diagnose, gtda_document, node_summaries, run_gtda};
use gtda::preprocess::{
    knn_graph, l2_normalize, parse_embedding_bin, parse_embedding_csv, pca_whiten, EmbeddingMatrix, Metric,
};
use gtda::reeb::project;
use gtda::report::{build_document, emit_report, DocumentParts, ErrorArtifacts};
use gtda::splitter::{GtdaParams, MergeDistance};
use gtda::{Graph, LensMatrix, SmoothingParams};

#[derive(Parser)]
#[command(name = "gtda", version, about = "Reeb networks over prediction lenses")]
struct Cli {
    /// Worker threads (defaults to all cores); results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Reeb net from a graph and a lens.
    Build(BuildArgs),
    /// Build a Reeb net and estimate prediction errors on it.
    Diagnose(DiagnoseArgs),
    /// Classic mapper on the same inputs, for comparison.
    Mapper(MapperArgs),
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Turn embeddings into a k-nearest-neighbor edge list.
    Knn(KnnArgs),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Three-class Swiss roll with a surrogate classifier's outputs.
    SwissRoll(SwissRollArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbeddingFormat {
    Auto,
    Csv,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => Metric::Cosine,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Args, Clone)]
struct EmbeddingArgs {
    /// Embedding matrix, one row per datapoint.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Embedding file format.
    #[arg(long, value_enum, default_value = "auto")]
    format: EmbeddingFormat,
    /// Neighbors per datapoint.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value = "cosine")]
    metric: MetricArg,
    /// Whiten onto this many principal components first.
    #[arg(long)]
    pca: Option<usize>,
    /// Scale rows to unit length before the neighbor search.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Edge list of the datapoint graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// Lens CSV, one row per datapoint.
    #[arg(long)]
    lens: PathBuf,
    /// Labels CSV (vertex,predicted,training_label[,probability][,truth]).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct GtdaArgs {
    /// Sets with at most this many vertices are final (K). Defaults to 5% of
    /// the smallest predicted class when labels are given.
    #[arg(long, short = 'K')]
    max_size: Option<usize>,
    /// Sets whose widest lens spans at most this much are final (d).
    #[arg(long, short = 'd', default_value_t = 0.0)]
    min_diff: f64,
    /// Overlap ratio between the two bins of a split (r).
    #[arg(long, short = 'r', default_value_t = 0.01)]
    overlap: f64,
    /// Sets with at most this many vertices are merged (s1; also -s1).
    #[arg(long, default_value_t = 5)]
    min_node: usize,
    /// Reeb components with at most this many nodes are connected (s2; also -s2).
    #[arg(long, default_value_t = 5)]
    min_component: usize,
    /// Diffusion weight on neighbors, for smoothing and error estimation.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Lens smoothing rounds (S).
    #[arg(long, short = 'S', default_value_t = 5)]
    smooth_steps: usize,
    /// Seed for the layout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    gtda: GtdaArgs,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    gtda: GtdaArgs,
    /// Label diffusion rounds for error estimation.
    #[arg(long, default_value_t = 10)]
    diffuse_steps: usize,
    /// For binary tasks, also write corrected labels.
    #[arg(long)]
    correct: bool,
}

#[derive(Args)]
struct MapperArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Bins per lens.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Fraction of a bin's width added on each side.
    #[arg(long, default_value_t = 0.1)]
    overlap_fraction: f64,
    /// Smooth the lens with the GTDA settings first.
    #[arg(long)]
    smooth: bool,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, short = 'S', default_value_t = 5)]
    smooth_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SwissRollArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1.2)]
    noise: f64,
    /// Fraction of surrogate seeds switched to a wrong class.
    #[arg(long, default_value_t = 0.15)]
    label_noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also add a 2-NN cosine graph on the 2-D features.
    #[arg(long)]
    combined: bool,
    /// Output directory for graph.txt, lens.csv and labels.csv.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct KnnArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// Existing edge list to union the kNN graph with.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Output edge list.
    #[arg(long, short)]
    out: PathBuf,
}

/// A required input that does not exist.
#[derive(Debug)]
struct MissingInput(PathBuf);

impl std::fmt::Display for MissingInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "input file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

fn require(paths: &[Option<&Path>]) -> Result<()> {
    for p in paths.iter().flatten() {
        if !p.is_file() {
            return Err(MissingInput(p.to_path_buf()).into());
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_embeddings(args: &EmbeddingArgs, path: &Path) -> Result<EmbeddingMatrix> {
    let bin = match args.format {
        EmbeddingFormat::Bin => true,
        EmbeddingFormat::Csv => false,
        EmbeddingFormat::Auto => path.extension().is_some_and(|e| e == "bin"),
    };
    let e = if bin {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        parse_embedding_bin(&bytes)
    } else {
        parse_embedding_csv(&read_text(path)?)
    };
    e.with_context(|| format!("embeddings: parsing {}", path.display()))
}

fn embedding_graph(args: &EmbeddingArgs, path: &Path) -> Result<Graph> {
    let mut e = load_embeddings(args, path)?;
    if let Some(dim) = args.pca {
        let w = pca_whiten(&e, dim).context("preprocess: PCA")?;
        e = w.embedding;
    }
    if args.normalize {
        e = l2_normalize(&e).0;
    }
    let g = knn_graph(&e, args.k, args.metric.into()).context("preprocess: kNN graph")?;
    info!("kNN graph: {} vertices, {} edges", g.n(), g.num_edges());
    Ok(g)
}

struct Inputs {
    graph: Graph,
    lens: LensMatrix,
    labels: Option<LabelFile>,
}

fn load_inputs(args: &InputArgs) -> Result<Inputs> {
    require(&[
        args.graph.as_deref(),
        args.embedding.embeddings.as_deref(),
        Some(args.lens.as_path()),
        args.labels.as_deref(),
    ])?;
    let lens = parse_lens_csv(&read_text(&args.lens)?)
        .with_context(|| format!("lens: parsing {}", args.lens.display()))?;
    let base = match &args.graph {
        Some(p) => Some(
            parse_edge_list(&read_text(p)?, Some(lens.n()))
                .with_context(|| format!("graph: parsing {}", p.display()))?,
        ),
        None => None,
    };
    let knn = match &args.embedding.embeddings {
        Some(p) => Some(embedding_graph(&args.embedding, p)?),
        None => None,
    };
    let graph = match (base, knn) {
        (Some(a), Some(b)) => union_graphs(&a, &b).context("graph: combining with kNN graph")?,
        (Some(g), None) | (None, Some(g)) => g,
        (None, None) => bail!("either --graph or --embeddings is required"),
    };
    let labels = match &args.labels {
        Some(p) => Some(
            parse_labels_csv(&read_text(p)?, Some(lens.m()))
                .with_context(|| format!("labels: parsing {}", p.display()))?,
        ),
        None => None,
    };
    if let Some(l) = &labels {
        if l.labels.n() != lens.n() {
            bail!("labels: {} rows but the lens has {}", l.labels.n(), lens.n());
        }
    }
    info!("inputs: {} vertices, {} edges, {} lenses", graph.n(), graph.num_edges(), lens.m());
    Ok(Inputs { graph, lens, labels })
}

fn gtda_params(args: &GtdaArgs, labels: Option<&LabelFile>) -> Result<GtdaParams> {
    let max_size = match (args.max_size, labels) {
        (Some(k), _) => k,
        (None, Some(l)) => {
            let mut sizes = vec![0usize; l.labels.num_classes];
            for &c in &l.labels.predicted {
                sizes[c] += 1;
            }
            let smallest = sizes.into_iter().filter(|&s| s > 0).min().unwrap_or(1);
            let k = ((smallest as f64 * 0.05).round() as usize).max(1);
            info!("max size K = {k} (5% of the smallest predicted class, {smallest})");
            k
        }
        (None, None) => bail!("--max-size (-K) is required when no labels are given"),
    };
    Ok(GtdaParams {
        max_size,
        min_diff: args.min_diff,
        overlap: args.overlap,
        min_node: args.min_node,
        min_component: args.min_component,
        smoothing: SmoothingParams {
            alpha: args.alpha,
            steps: args.smooth_steps,
        },
        merge_distance: MergeDistance::LensLinf,
    })
}

fn cmd_build(args: BuildArgs) -> Result<()> {
    let inputs = load_inputs(&args.input)?;
    let params = gtda_params(&args.gtda, inputs.labels.as_ref())?;
    let run = run_gtda(&inputs.graph, &inputs.lens, &params)?;
    let labels = inputs.labels.as_ref().map(|l| &l.labels);
    let doc = gtda_document(&run, &inputs.lens, labels, None, args.gtda.seed)?;
    let files = emit_report(&args.input.out, &doc, None).context("emit")?;
    info!("wrote {} files to {}", files.len(), args.input.out.display());
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let inputs = load_inputs(&args.input)?;
    let Some(file) = inputs.labels.as_ref() else {
        bail!("diagnose needs --labels");
    };
    let params = gtda_params(&args.gtda, Some(file))?;
    let run = run_gtda(&inputs.graph, &inputs.lens, &params)?;
    let (report, summary) = diagnose(
        &run,
        &file.labels,
        args.diffuse_steps,
        params.smoothing.alpha,
        file.truth.as_deref(),
    )?;
    let corrected = if args.correct {
        Some(correct_binary_labels(&file.labels, &report).context("correct")?)
    } else {
        None
    };
    let doc = gtda_document(&run, &inputs.lens, Some(&file.labels), Some(&report), args.gtda.seed)?;
    let errors = ErrorArtifacts {
        report: &report,
        labels: &file.labels,
        corrected: corrected.as_deref(),
        summary: &summary,
    };
    let files = emit_report(&args.input.out, &doc, Some(errors)).context("emit")?;
    info!("wrote {} files to {}", files.len(), args.input.out.display());
    if let (Some(a), Some(b)) = (summary.auc_gtda, summary.auc_baseline) {
        println!("auc_gtda {a:.4} auc_baseline {b:.4}");
    }
    Ok(())
}

fn cmd_mapper(args: MapperArgs) -> Result<()> {
    let inputs = load_inputs(&args.input)?;
    let mut lens = inputs.lens.clone();
    if args.smooth {
        let sp = SmoothingParams {
            alpha: args.alpha,
            steps: args.smooth_steps,
        };
        lens = gtda::lens::smooth(&lens, &inputs.graph, sp).context("smooth")?;
    }
    let lens = minmax_normalize(&lens);
    let params = MapperParams {
        bins_per_lens: args.bins,
        overlap_fraction: args.overlap_fraction,
    };
    let cells = mapper_cover(&lens, &params).context("mapper cover")?;
    let net = mapper_reeb(&inputs.graph, &cells).context("mapper clustering")?;
    let sizes = net.component_sizes();
    info!(
        "mapper: {} cells, {} nodes, {} components ({} single nodes)",
        cells.len(),
        net.num_nodes(),
        sizes.len(),
        sizes.iter().filter(|&&s| s == 1).count()
    );
    let projection = project(&net, &inputs.graph).context("project")?;
    let layout = layout_reeb(&net, args.seed);
    let doc = build_document(DocumentParts {
        net: &net,
        num_vertices: inputs.graph.n(),
        projection: &projection,
        layout: &layout,
        summaries: node_summaries(&net, &inputs.lens, inputs.labels.as_ref().map(|l| &l.labels))?,
        paths: Vec::new(),
        errors: None,
    });
    emit_report(&args.input.out, &doc, None).context("emit")?;
    Ok(())
}

fn cmd_swiss_roll(args: SwissRollArgs) -> Result<()> {
    let inst = swiss_roll(args.n, args.noise, args.seed).context("synth")?;
    let (lens, labels) = surrogate_predictor(&inst, args.label_noise, args.seed).context("synth")?;
    let graph = if args.combined {
        inst.combined_graph().context("synth")?
    } else {
        inst.graph.clone()
    };
    let out = &args.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let write = |name: &str, text: String| -> Result<()> {
        let p = out.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    write("graph.txt", write_edge_list(&graph))?;
    write("lens.csv", write_lens_csv(&lens))?;
    write("labels.csv", write_labels_csv(&label_file(&inst, labels)))?;
    info!("Swiss roll: {} points, {} edges, written to {}", inst.n(), graph.num_edges(), out.display());
    Ok(())
}

fn cmd_knn(args: KnnArgs) -> Result<()> {
    let Some(path) = args.embedding.embeddings.clone() else {
        bail!("knn needs --embeddings");
    };
    require(&[Some(path.as_path()), args.graph.as_deref()])?;
    let mut g = embedding_graph(&args.embedding, &path)?;
    if let Some(p) = &args.graph {
        let base = parse_edge_list(&read_text(p)?, Some(g.n()))
            .with_context(|| format!("graph: parsing {}", p.display()))?;
        g = union_graphs(&base, &g).context("graph: combining with kNN graph")?;
    }
    fs::write(&args.out, write_edge_list(&g)).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

/// Accepts the two-letter short forms `-s1` and `-s2`.
fn rewrite_args(args: impl Iterator<Item = String>) -> Vec<String> {
    args.map(|a| match a.as_str() {
        "-s1" => "--min-node".to_string(),
        "-s2" => "--min-component".to_string(),
        _ => a,
    })
    .collect()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("starting worker pool")?;
    }
    match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Mapper(a) => cmd_mapper(a),
        Command::Synth(SynthCommand::SwissRoll(a)) => cmd_swiss_roll(a),
        Command::Knn(a) => cmd_knn(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse_from(rewrite_args(std::env::args()));
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<MissingInput>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
