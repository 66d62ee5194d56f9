use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use gnrr_core::ablation::{self, Corruption};
use gnrr_core::embeddings::{pseudo_encode, EmbeddingStore};
use gnrr_core::gnn::{IndividualMode, LayerKind, ModelConfig, RerankModel};
use gnrr_core::gradcheck;
use gnrr_core::lexical::{self, InvertedIndex};
use gnrr_core::metrics::evaluate_run;
use gnrr_core::synth::{self, SynthConfig};
use gnrr_core::training::{self, TrainConfig};

use crate::pipeline::{self, Inputs, RUN_TAG};
use crate::{io, parallel};

/// Graph-based neural re-ranking: BM25 retrieval, corpus graphs, and GNN
/// re-rankers trained with LambdaRank.
#[derive(Debug, Parser)]
#[command(name = "gnrr", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 inverted index from a collection TSV
    Index(IndexArgs),
    /// Write document embeddings, from the pseudo-encoder or an import
    Encode(EncodeArgs),
    /// Build the k-nearest-neighbour corpus graph
    Graph(GraphArgs),
    /// BM25 top-k retrieval for a query file
    Retrieve(RetrieveArgs),
    /// Train a re-ranker with LambdaRank and early stopping
    Train(TrainArgs),
    /// Re-rank a first-stage run with a trained checkpoint
    Rerank(RerankArgs),
    /// Evaluate a run against relevance judgments
    Eval(EvalArgs),
    /// Measure the metric drop when the GNN branch output is corrupted
    Ablate(AblateArgs),
    /// Compare analytic gradients with central finite differences
    Gradcheck(GradcheckArgs),
    /// Generate a synthetic benchmark with planted topic clusters
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Collection TSV (doc_id<TAB>text)
    #[arg(long)]
    pub collection: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = lexical::DEFAULT_K1)]
    pub k1: f64,
    #[arg(long, default_value_t = lexical::DEFAULT_B)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Collection TSV to pseudo-encode
    #[arg(long, required_unless_present = "import")]
    pub collection: Option<PathBuf>,
    /// Query TSV to encode into the same file
    #[arg(long, requires = "collection")]
    pub queries: Option<PathBuf>,
    /// Existing EMB1 file to re-emit normalized; its dimension must equal --dim
    #[arg(long, conflicts_with = "collection")]
    pub import: Option<PathBuf>,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Restrict nodes to this collection's documents (default: every id in the embeddings)
    #[arg(long)]
    pub collection: Option<PathBuf>,
    /// Out-degree of every node
    #[arg(long, default_value_t = gnrr_core::graph::DEFAULT_C)]
    pub c: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Query TSV (query_id<TAB>text)
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = lexical::DEFAULT_TOP_K)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "bm25")]
    pub tag: String,
}

/// Artifacts shared by every command that scores candidates.
#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// First-stage run supplying the candidates
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Embeddings of both the documents and the queries
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long)]
    pub val_queries: PathBuf,
    #[arg(long)]
    pub val_qrels: PathBuf,
    #[arg(long, default_value = "gcn")]
    pub layer: LayerKind,
    /// Number of GNN layers
    #[arg(long = "L", default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value = "identity")]
    pub individual: IndividualMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    /// Checkpoint path; the epoch log goes to <out>.report unless --report is given
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = RUN_TAG)]
    pub tag: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Cutoffs for P@k and nDCG@k
    #[arg(long, default_value = "3,10")]
    pub ks: String,
    /// Per-query CSV (metric,query_id,value); the table goes to stdout regardless
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub qrels: PathBuf,
    /// zero, shuffle or gaussian; repeat or comma-separate for several
    #[arg(long, value_delimiter = ',', default_value = "zero")]
    pub mode: Vec<String>,
    /// Seed for the shuffle and gaussian modes
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the gaussian mode's noise
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value = "3,10")]
    pub ks: String,
    /// CSV destination (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Layer kind, or `all`
    #[arg(long, default_value = "all")]
    pub layer: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub docs: usize,
    #[arg(long)]
    pub queries: usize,
    #[arg(long)]
    pub dim: usize,
    /// Probability that a judged document comes from the query's cluster
    #[arg(long)]
    pub homophily: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write train/val/test files of these sizes, e.g. 200,50,50
    #[arg(long)]
    pub split: Option<String>,
    /// Documents per topic cluster [default: 10]
    #[arg(long)]
    pub cluster_size: Option<usize>,
    /// Probability that a document token is a topic word [default: 0.3]
    #[arg(long)]
    pub topic_rate: Option<f64>,
    /// Average number of clusters sharing each topic word [default: 3]
    #[arg(long)]
    pub topic_share: Option<usize>,
    /// Target-cluster topic words in each query [default: 2]
    #[arg(long)]
    pub query_topic_words: Option<usize>,
    /// Norm of the noise around a document's cluster centroid [default: 1.0]
    #[arg(long)]
    pub doc_noise: Option<f64>,
    /// Norm of the noise around a query's target centroid [default: 2.0]
    #[arg(long)]
    pub query_noise: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(a) => index(a),
        Command::Encode(a) => encode(a),
        Command::Graph(a) => graph(a),
        Command::Retrieve(a) => retrieve(a),
        Command::Train(a) => train(a),
        Command::Rerank(a) => rerank(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Synth(a) => synth(a),
    }
}

fn index(a: IndexArgs) -> Result<()> {
    let collection = io::load_collection(&a.collection)?;
    let index = InvertedIndex::build(&collection, a.k1, a.b)?;
    io::write_bytes(&a.out, &index.to_bytes()?)?;
    println!("n_docs\t{}", index.n_docs());
    println!("avg_dl\t{:.6}", index.avg_dl());
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<()> {
    ensure!(a.dim > 0, "--dim must be positive");
    let store = if let Some(path) = &a.import {
        let mut store = io::load_embeddings(path)?;
        ensure!(store.dim() == a.dim, "{} has dimension {}, expected {}", path.display(), store.dim(), a.dim);
        store.normalize()?;
        store
    } else {
        let mut store = EmbeddingStore::new(a.dim);
        let path = a.collection.as_ref().context("--collection or --import is required")?;
        let mut texts: Vec<(String, String)> =
            io::load_collection(path)?.iter().map(|(i, t)| (i.to_string(), t.to_string())).collect();
        if let Some(q) = &a.queries {
            texts.extend(io::load_queries(q)?.iter().map(|(i, t)| (i.to_string(), t.to_string())));
        }
        for (id, text) in &texts {
            let v = pseudo_encode(text, a.dim, a.seed).with_context(|| format!("encoding {id}"))?;
            store.insert_f64(id, &v)?;
        }
        store.set_normalized_flag(true);
        store
    };
    io::write_bytes(&a.out, &store.to_bytes()?)?;
    eprintln!("encoded {} vectors of dimension {}", store.len(), store.dim());
    Ok(())
}

fn graph(a: GraphArgs) -> Result<()> {
    let store = io::load_embeddings(&a.embeddings)?;
    let collection = a.collection.as_deref().map(io::load_collection).transpose()?;
    let ids = pipeline::graph_ids(&store, collection.as_ref());
    let pool = parallel::pool(a.threads)?;
    let graph = parallel::build_graph(&store, &ids, a.c, &pool)?;
    io::write_bytes(&a.out, &graph.to_bytes()?)?;
    println!("nodes\t{}", graph.len());
    println!("out_degree\t{}", graph.degree());
    Ok(())
}

fn retrieve(a: RetrieveArgs) -> Result<()> {
    let index = io::load_index(&a.index)?;
    let queries = io::load_queries(&a.queries)?;
    let run = pipeline::retrieve_all(&index, &queries, a.k, &a.tag)?;
    io::save_run(&a.out, &run)?;
    eprintln!("retrieved {} rows for {} queries", run.rows.len(), queries.len());
    Ok(())
}

struct Loaded {
    run: gnrr_core::corpus::RunFile,
    graph: gnrr_core::graph::CorpusGraph,
    store: EmbeddingStore,
    queries: gnrr_core::corpus::QuerySet,
}

impl Loaded {
    fn new(a: &ScoringArgs) -> Result<Self> {
        Ok(Self {
            run: io::load_run(&a.run)?,
            graph: io::load_graph(&a.graph)?,
            store: io::load_embeddings(&a.embeddings)?,
            queries: io::load_queries(&a.queries)?,
        })
    }

    fn inputs(&self) -> Inputs<'_> {
        Inputs { run: &self.run, graph: &self.graph, store: &self.store, queries: &self.queries }
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let loaded = Loaded::new(&a.scoring)?;
    let qrels = io::load_qrels(&a.qrels)?;
    let val_queries = io::load_queries(&a.val_queries)?;
    let val_qrels = io::load_qrels(&a.val_qrels)?;

    let mut config = ModelConfig::new(a.layer, loaded.store.dim());
    config.layers = a.layers;
    config.hidden = a.hidden;
    config.individual = a.individual;
    config.seed = a.seed;
    let model = RerankModel::new(config)?;

    let train_set = loaded.inputs().prepare(&model, &qrels)?;
    let val_inputs = Inputs { queries: &val_queries, ..loaded.inputs() };
    let val_set = val_inputs.prepare(&model, &val_qrels)?;
    ensure!(!train_set.is_empty(), "no training query has candidates in {}", a.scoring.run.display());
    ensure!(!val_set.is_empty(), "no validation query has candidates in {}", a.scoring.run.display());
    eprintln!(
        "training {} ({} parameters) on {} queries, validating on {}",
        a.layer,
        model.param_count(),
        train_set.len(),
        val_set.len()
    );

    let tc = TrainConfig { learning_rate: a.lr, epochs: a.epochs, patience: a.patience, seed: a.seed, ..TrainConfig::default() };
    let (best, report) = training::train(model, &train_set, &val_set, &tc)?;
    io::write_bytes(&a.out, &best.to_checkpoint())?;
    let report_path = a.report.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report");
        p.into()
    });
    io::write_bytes(&report_path, report.to_text().as_bytes())?;
    eprintln!(
        "best epoch {} of {} (val nDCG@10 {:.4})",
        report.best_epoch,
        report.epochs.len(),
        report.best_val_ndcg()
    );
    Ok(())
}

fn rerank(a: RerankArgs) -> Result<()> {
    let model = io::load_checkpoint(&a.checkpoint)?;
    let loaded = Loaded::new(&a.scoring)?;
    let run = loaded.inputs().rerank(&model, &a.tag)?;
    io::save_run(&a.out, &run)?;
    eprintln!("re-ranked {} rows", run.rows.len());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let run = io::load_run(&a.run)?;
    let qrels = io::load_qrels(&a.qrels)?;
    let ks = pipeline::parse_ks(&a.ks)?;
    let report = evaluate_run(&run, &qrels, &ks)?;
    print!("{}", report.to_table());
    if let Some(path) = &a.csv {
        io::write_bytes(path, report.to_csv().as_bytes())?;
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let model = io::load_checkpoint(&a.checkpoint)?;
    let loaded = Loaded::new(&a.scoring)?;
    let qrels = io::load_qrels(&a.qrels)?;
    let ks = pipeline::parse_ks(&a.ks)?;
    let modes = a.mode.iter().map(|m| Corruption::parse(m, a.seed, a.sigma)).collect::<Result<Vec<_>, _>>()?;
    let rows = loaded.inputs().ablate(&model, &qrels, &modes, &ks)?;
    let csv = ablation::ablation_csv(&rows);
    match &a.out {
        Some(path) => io::write_bytes(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<()> {
    ensure!(a.trials > 0, "--trials must be positive");
    let kinds: Vec<LayerKind> =
        if a.layer == "all" { LayerKind::ALL.to_vec() } else { vec![a.layer.parse::<LayerKind>()?] };
    let mut failed = Vec::new();
    for kind in kinds {
        let report = gradcheck::gradcheck(kind, a.trials, a.seed)?;
        for (block, err) in &report.max_rel_err {
            println!("{kind}\t{block}\t{err:.3e}");
        }
        let ok = report.passed(gradcheck::TOLERANCE);
        println!("{kind}\tworst\t{:.3e}\t{}", report.worst(), if ok { "pass" } else { "FAIL" });
        if !ok {
            failed.push(kind);
        }
    }
    if !failed.is_empty() {
        bail!("gradient check failed for {failed:?}");
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut config = SynthConfig::new(a.docs, a.queries, a.dim, a.homophily, a.seed);
    config.cluster_size = a.cluster_size.unwrap_or(config.cluster_size);
    config.topic_rate = a.topic_rate.unwrap_or(config.topic_rate);
    config.query_topic_words = a.query_topic_words.unwrap_or(config.query_topic_words);
    config.topic_share = a.topic_share.unwrap_or(config.topic_share);
    config.doc_noise = a.doc_noise.unwrap_or(config.doc_noise);
    config.query_noise = a.query_noise.unwrap_or(config.query_noise);
    let corpus = synth::generate(&config)?;
    let split = a.split.as_deref().map(|s| pipeline::parse_split(s, a.queries)).transpose()?;
    pipeline::write_synth(&corpus, &a.out_dir, split)?;
    eprintln!(
        "wrote {} documents and {} queries to {} ({:.1}% of judged documents in their query's cluster)",
        corpus.collection.len(),
        corpus.queries.len(),
        a.out_dir.display(),
        100.0 * corpus.in_cluster_fraction()
    );
    Ok(())
}
