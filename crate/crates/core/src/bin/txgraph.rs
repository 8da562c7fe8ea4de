use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use txgraph::classify::{evaluate, knn_fit, knn_predict, EvalReport};
use txgraph::dataset::{
    apply_minmax, correlation_matrix, extract_table, feature_rank, fit_minmax, format_value, split,
    summarize_by_label, FeatureTable, Remap,
};
use txgraph::features::{compute_lsi, compute_si, manifest, si_ids, LsiParams, LSI_IDS};
use txgraph::labels::{read_labels, write_labels, Label, LabelRecord};
use txgraph::ledger::{parse_ledger, validate_blocks, write_ledger, RawBlock};
use txgraph::subgraph::{gk_batch, GkParams};
use txgraph::synth::{synth_ledger, Archetype, SynthConfig};
use txgraph::{Error, ErrorClass, TxGraph};

/// Bitcoin address behaviour features on a transaction multigraph.
///
/// Exit codes: 0 success, 2 bad input or arguments, 3 ledger validation
/// failure, 4 computation failure, 5 I/O failure.
#[derive(Parser)]
#[command(name = "txgraph", version, about, long_about = None)]
struct Cli {
    /// TOML file supplying defaults for any flag; explicit flags win.
    #[arg(long, global = true, env = "TXGRAPH_CONFIG")]
    config: Option<PathBuf>,

    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "TXGRAPH_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate or synthesise NDJSON block files.
    #[command(subcommand)]
    Ingest(IngestCmd),
    /// Build, snapshot and inspect the transaction multigraph.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Extract k-hop subgraphs around addresses.
    Subgraph(SubgraphArgs),
    /// Compute feature vectors for individual addresses.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Feature-table pipeline stages.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Baseline classifiers.
    #[command(subcommand)]
    Classify(ClassifyCmd),
    /// Whole pipeline: ledger and labels in, every artifact out.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum IngestCmd {
    /// Parse and validate a ledger file.
    Validate { file: PathBuf },
    /// Generate a labelled synthetic ledger.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: hub, one-shot, periodic-payer.
    #[arg(long, value_delimiter = ',')]
    archetypes: Option<Vec<String>>,
    #[arg(long)]
    addresses_per_archetype: Option<usize>,
    #[arg(long)]
    block_interval: Option<u64>,
    #[arg(long)]
    noise_per_block: Option<usize>,
    #[arg(long)]
    start_height: Option<u64>,
    #[arg(long)]
    start_timestamp: Option<u64>,
    /// Ledger output [default: <out-dir>/ledger.ndjson].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Labels output [default: <out-dir>/labels.csv].
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphInput {
    /// NDJSON ledger file(s), concatenated in the order given.
    #[arg(long)]
    ledger: Vec<PathBuf>,
    /// Graph snapshot written by `graph build`.
    #[arg(long, conflicts_with = "ledger")]
    snapshot: Option<PathBuf>,
}

#[derive(Args, Default)]
struct GkArgs {
    /// Subgraph hop depth.
    #[arg(long)]
    k: Option<usize>,
    /// Subgraph node cap.
    #[arg(long)]
    max_nodes: Option<usize>,
}

#[derive(Args, Default)]
struct LsiArgs {
    /// PageRank damping factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// PageRank L1 convergence tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Build the graph and write a binary snapshot.
    Build {
        #[command(flatten)]
        input: GraphInput,
        /// Snapshot output [default: <out-dir>/graph.snap].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print node and edge counts as JSON.
    Stats {
        #[command(flatten)]
        input: GraphInput,
    },
}

#[derive(Args)]
struct SubgraphArgs {
    #[command(flatten)]
    input: GraphInput,
    /// Seed address; repeatable.
    #[arg(long = "address", required = true)]
    addresses: Vec<String>,
    #[command(flatten)]
    gk: GkArgs,
    #[arg(long)]
    jobs: Option<usize>,
    /// Text output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// The 132 statistical indicators.
    Si {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long = "address", required = true)]
        addresses: Vec<String>,
        /// CSV output [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The 16 structural indicators of each address's k-hop subgraph.
    Lsi {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long = "address", required = true)]
        addresses: Vec<String>,
        #[command(flatten)]
        gk: GkArgs,
        #[command(flatten)]
        lsi: LsiArgs,
        /// CSV output [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FitOn {
    Train,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FeatureSet {
    All,
    Si,
    Lsi,
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// One 148-feature row per labelled address.
    Extract {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        gk: GkArgs,
        #[command(flatten)]
        lsi: LsiArgs,
        #[arg(long)]
        jobs: Option<usize>,
        /// [default: <out-dir>/features.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded shuffle split into train.csv and test.csv.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Min-max scaling with statistics from the train table (or both).
    Normalize {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_enum)]
        fit_on: Option<FitOn>,
    },
    /// Pearson correlation matrix of all feature columns.
    Corr {
        #[arg(long)]
        input: PathBuf,
        /// [default: <out-dir>/corr.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Features by descending ANOVA F score against the label.
    Rank {
        #[arg(long)]
        input: PathBuf,
        /// [default: <out-dir>/rank.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-label average, max, min and median of one feature.
    Summary {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "PDIa1-3")]
        feature: String,
        /// [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an externally published table into manifest column order.
    Import {
        #[arg(long)]
        input: PathBuf,
        /// TOML column mapping.
        #[arg(long)]
        remap: PathBuf,
        /// [default: <out-dir>/features.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ClassifyCmd {
    /// Distance-weighted KNN, evaluated on the test table.
    Knn {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, visible_alias = "k")]
        neighbors: Option<usize>,
        #[arg(long, value_enum, default_value = "all")]
        features: FeatureSet,
        /// [default: <out-dir>/eval.json]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    ledger: Vec<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    gk: GkArgs,
    #[command(flatten)]
    lsi: LsiArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long, value_enum)]
    fit_on: Option<FitOn>,
}

/// Everything a config file may set. Keys mirror the long flag names with
/// underscores.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out_dir: Option<PathBuf>,
    ledger: Option<Vec<PathBuf>>,
    labels: Option<PathBuf>,
    k: Option<usize>,
    max_nodes: Option<usize>,
    alpha: Option<f64>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    seed: Option<u64>,
    test_fraction: Option<f64>,
    jobs: Option<usize>,
    neighbors: Option<usize>,
    fit_on: Option<FitOn>,
    synth: Option<FileSynth>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSynth {
    blocks: Option<usize>,
    seed: Option<u64>,
    archetypes: Option<Vec<Archetype>>,
    addresses_per_archetype: Option<usize>,
    block_interval: Option<u64>,
    noise_per_block: Option<usize>,
    start_height: Option<u64>,
    start_timestamp: Option<u64>,
}

const DEFAULT_SEED: u64 = 9;
const DEFAULT_TEST_FRACTION: f64 = 0.2;
const DEFAULT_NEIGHBORS: usize = 4;

struct Ctx {
    file: FileConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn load(cli: &Cli) -> anyhow::Result<Ctx> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::open(path, e))?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let out_dir = cli
            .out_dir
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Ctx { file, out_dir })
    }

    fn out(&self, flag: &Option<PathBuf>, name: &str) -> PathBuf {
        flag.clone().unwrap_or_else(|| self.out_dir.join(name))
    }

    fn gk(&self, a: &GkArgs) -> txgraph::Result<GkParams> {
        let d = GkParams::default();
        GkParams::new(
            a.k.or(self.file.k).unwrap_or(d.max_depth),
            a.max_nodes.or(self.file.max_nodes).unwrap_or(d.max_nodes),
        )
    }

    fn lsi(&self, a: &LsiArgs) -> txgraph::Result<LsiParams> {
        let d = LsiParams::default();
        let p = LsiParams {
            alpha: a.alpha.or(self.file.alpha).unwrap_or(d.alpha),
            tolerance: a.tolerance.or(self.file.tolerance).unwrap_or(d.tolerance),
            max_iterations: a
                .max_iterations
                .or(self.file.max_iterations)
                .unwrap_or(d.max_iterations),
        };
        p.validate()?;
        Ok(p)
    }

    fn jobs(&self, flag: Option<usize>) -> usize {
        flag.or(self.file.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    fn ledgers(&self, flag: &[PathBuf]) -> Vec<PathBuf> {
        if flag.is_empty() {
            self.file.ledger.clone().unwrap_or_default()
        } else {
            flag.to_vec()
        }
    }
}

fn open(path: &Path) -> txgraph::Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::open(path, e))
}

fn read_blocks(paths: &[PathBuf]) -> anyhow::Result<Vec<RawBlock>> {
    if paths.is_empty() {
        return Err(Error::Config("no ledger given (--ledger or `ledger` in config)".into()).into());
    }
    let mut blocks = Vec::new();
    for p in paths {
        let part = parse_ledger(open(p)?).with_context(|| format!("ledger {}", p.display()))?;
        blocks.extend(part);
    }
    if paths.len() > 1 {
        validate_blocks(&blocks).context("concatenated ledgers")?;
    }
    Ok(blocks)
}

fn load_graph(ctx: &Ctx, input: &GraphInput) -> anyhow::Result<TxGraph> {
    if let Some(snap) = &input.snapshot {
        return TxGraph::read_snapshot(open(snap)?)
            .with_context(|| format!("snapshot {}", snap.display()));
    }
    Ok(TxGraph::build(&read_blocks(&ctx.ledgers(&input.ledger))?)?)
}

fn read_table(path: &Path) -> anyhow::Result<FeatureTable> {
    FeatureTable::read_csv(open(path)?).with_context(|| format!("table {}", path.display()))
}

/// Write through a sibling temporary file so readers never see a partial
/// artifact.
fn write_atomic<F>(path: &Path, body: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(txgraph::Error::from)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).map_err(txgraph::Error::from)?);
        body(&mut w)?;
        w.flush().map_err(txgraph::Error::from)?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path).map_err(txgraph::Error::from)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(txgraph::Error::from)?;
        w.write_all(b"\n").map_err(txgraph::Error::from)?;
        Ok(())
    })
}

fn write_table(path: &Path, t: &FeatureTable) -> anyhow::Result<()> {
    write_atomic(path, |w| Ok(t.write_csv(w)?))
}

/// Write to `path`, or stdout when absent.
fn emit<F>(path: &Option<PathBuf>, body: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    match path {
        Some(p) => write_atomic(p, |w| body(w)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    }
}

fn ingest(ctx: &Ctx, cmd: &IngestCmd) -> anyhow::Result<()> {
    match cmd {
        IngestCmd::Validate { file } => {
            let blocks = parse_ledger(open(file)?)?;
            let txs: usize = blocks.iter().map(|b| b.txs.len()).sum();
            println!("ok: {} blocks, {} transactions", blocks.len(), txs);
        }
        IngestCmd::Synth(a) => {
            let fs = ctx.file.synth.as_ref();
            let d = SynthConfig::default();
            let archetypes = match &a.archetypes {
                Some(names) => names
                    .iter()
                    .map(|n| n.trim().parse::<Archetype>())
                    .collect::<txgraph::Result<Vec<_>>>()?,
                None => fs.and_then(|f| f.archetypes.clone()).unwrap_or(d.archetypes),
            };
            let config = SynthConfig {
                blocks: a.blocks.or(fs.and_then(|f| f.blocks)).unwrap_or(d.blocks),
                archetypes,
                addresses_per_archetype: a
                    .addresses_per_archetype
                    .or(fs.and_then(|f| f.addresses_per_archetype))
                    .unwrap_or(d.addresses_per_archetype),
                start_height: a.start_height.or(fs.and_then(|f| f.start_height)).unwrap_or(d.start_height),
                start_timestamp: a
                    .start_timestamp
                    .or(fs.and_then(|f| f.start_timestamp))
                    .unwrap_or(d.start_timestamp),
                block_interval: a
                    .block_interval
                    .or(fs.and_then(|f| f.block_interval))
                    .unwrap_or(d.block_interval),
                noise_per_block: a
                    .noise_per_block
                    .or(fs.and_then(|f| f.noise_per_block))
                    .unwrap_or(d.noise_per_block),
            };
            let seed = a.seed.or(fs.and_then(|f| f.seed)).unwrap_or(DEFAULT_SEED);
            let ledger = synth_ledger(&config, seed)?;
            write_atomic(&ctx.out(&a.out, "ledger.ndjson"), |w| Ok(write_ledger(&ledger.blocks, w)?))?;
            write_atomic(&ctx.out(&a.labels_out, "labels.csv"), |w| Ok(write_labels(&ledger.labels, w)?))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GraphStats {
    nodes: usize,
    edges: usize,
    addresses: usize,
    transactions: usize,
    merged_edges: usize,
}

fn graph(ctx: &Ctx, cmd: &GraphCmd) -> anyhow::Result<()> {
    match cmd {
        GraphCmd::Build { input, out } => {
            let g = load_graph(ctx, input)?;
            write_atomic(&ctx.out(out, "graph.snap"), |w| Ok(g.write_snapshot(w)?))?;
        }
        GraphCmd::Stats { input } => {
            let g = load_graph(ctx, input)?;
            let stats = GraphStats {
                nodes: g.node_count(),
                edges: g.edge_count(),
                addresses: g.address_count(),
                transactions: g.tx_count(),
                merged_edges: g.merge_parallel_edges().edge_count(),
            };
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
    }
    Ok(())
}

fn subgraph(ctx: &Ctx, a: &SubgraphArgs) -> anyhow::Result<()> {
    let g = load_graph(ctx, &a.input)?;
    let params = ctx.gk(&a.gk)?;
    let subs = gk_batch(&g, &a.addresses, &params, ctx.jobs(a.jobs))?;
    emit(&a.out, |w| {
        for s in &subs {
            s.write_text(&g, &mut *w)?;
        }
        Ok(())
    })
}

fn write_feature_rows<W: Write + ?Sized>(
    w: &mut W,
    ids: &[&str],
    rows: &[(String, Vec<f64>)],
) -> anyhow::Result<()> {
    let mut c = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["address"];
    header.extend_from_slice(ids);
    c.write_record(&header)?;
    for (address, values) in rows {
        let mut rec = vec![address.clone()];
        rec.extend(values.iter().map(|v| format_value(*v)));
        c.write_record(&rec)?;
    }
    c.flush()?;
    Ok(())
}

fn features(ctx: &Ctx, cmd: &FeaturesCmd) -> anyhow::Result<()> {
    match cmd {
        FeaturesCmd::Si { input, addresses, out } => {
            let g = load_graph(ctx, input)?;
            let merged = g.merge_parallel_edges();
            let rows = addresses
                .iter()
                .map(|a| Ok((a.clone(), compute_si(&g, &merged, a)?.values().to_vec())))
                .collect::<txgraph::Result<Vec<_>>>()?;
            emit(out, |w| write_feature_rows(w, &si_ids(), &rows))
        }
        FeaturesCmd::Lsi {
            input,
            addresses,
            gk,
            lsi,
            out,
        } => {
            let g = load_graph(ctx, input)?;
            let (gk, lsi) = (ctx.gk(gk)?, ctx.lsi(lsi)?);
            let subs = gk_batch(&g, addresses, &gk, 1)?;
            let rows = addresses
                .iter()
                .zip(&subs)
                .map(|(a, s)| Ok((a.clone(), compute_lsi(&s.topology(), &lsi)?.values.to_vec())))
                .collect::<txgraph::Result<Vec<_>>>()?;
            emit(out, |w| write_feature_rows(w, &LSI_IDS, &rows))
        }
    }
}

fn read_label_file(ctx: &Ctx, flag: &Option<PathBuf>) -> anyhow::Result<Vec<LabelRecord>> {
    let path = flag
        .clone()
        .or_else(|| ctx.file.labels.clone())
        .ok_or_else(|| Error::Config("no labels file given (--labels or `labels` in config)".into()))?;
    read_labels(open(&path)?).with_context(|| format!("labels {}", path.display()))
}

fn scale(train: &FeatureTable, test: &FeatureTable, fit_on: FitOn) -> anyhow::Result<(FeatureTable, FeatureTable, txgraph::dataset::ScalerState)> {
    let state = match fit_on {
        FitOn::Train => fit_minmax(train)?,
        FitOn::All => {
            let mut both = train.clone();
            both.rows.extend(test.rows.iter().cloned());
            fit_minmax(&both)?
        }
    };
    Ok((apply_minmax(&state, train)?, apply_minmax(&state, test)?, state))
}

fn dataset(ctx: &Ctx, cmd: &DatasetCmd) -> anyhow::Result<()> {
    match cmd {
        DatasetCmd::Extract {
            input,
            labels,
            gk,
            lsi,
            jobs,
            out,
        } => {
            let labels = read_label_file(ctx, labels)?;
            let (gk, lsi) = (ctx.gk(gk)?, ctx.lsi(lsi)?);
            let g = load_graph(ctx, input)?;
            let merged = g.merge_parallel_edges();
            let (table, report) = extract_table(&g, &merged, &labels, &gk, &lsi, ctx.jobs(*jobs))?;
            report_extraction(&report);
            write_table(&ctx.out(out, "features.csv"), &table)?;
        }
        DatasetCmd::Split {
            input,
            seed,
            test_fraction,
        } => {
            let t = read_table(input)?;
            let (train, test) = split(
                &t,
                test_fraction.or(ctx.file.test_fraction).unwrap_or(DEFAULT_TEST_FRACTION),
                seed.or(ctx.file.seed).unwrap_or(DEFAULT_SEED),
            )?;
            write_table(&ctx.out_dir.join("train.csv"), &train)?;
            write_table(&ctx.out_dir.join("test.csv"), &test)?;
        }
        DatasetCmd::Normalize { train, test, fit_on } => {
            let fit_on = fit_on.or(ctx.file.fit_on).unwrap_or(FitOn::Train);
            let (train, test, state) = scale(&read_table(train)?, &read_table(test)?, fit_on)?;
            write_table(&ctx.out_dir.join("train_scaled.csv"), &train)?;
            write_table(&ctx.out_dir.join("test_scaled.csv"), &test)?;
            write_json(&ctx.out_dir.join("scaler.json"), &state)?;
        }
        DatasetCmd::Corr { input, out } => {
            let t = read_table(input)?;
            let m = correlation_matrix(&t)?;
            write_atomic(&ctx.out(out, "corr.csv"), |w| {
                let mut c = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(w);
                let mut header = vec!["feature".to_string()];
                header.extend(t.ids.iter().cloned());
                c.write_record(&header)?;
                for (id, row) in t.ids.iter().zip(&m) {
                    let mut rec = vec![id.clone()];
                    rec.extend(row.iter().map(|v| format_value(*v)));
                    c.write_record(&rec)?;
                }
                c.flush()?;
                Ok(())
            })?;
        }
        DatasetCmd::Rank { input, out } => {
            let ranked = feature_rank(&read_table(input)?)?;
            write_atomic(&ctx.out(out, "rank.csv"), |w| {
                writeln!(w, "rank,feature,f_score")?;
                for (i, (id, f)) in ranked.iter().enumerate() {
                    writeln!(w, "{},{},{}", i + 1, id, format_value(*f))?;
                }
                Ok(())
            })?;
        }
        DatasetCmd::Summary { input, feature, out } => {
            let rows = summarize_by_label(&read_table(input)?, feature)?;
            emit(out, |w| {
                writeln!(w, "label_id,label,count,avg,max,min,median")?;
                for s in &rows {
                    let name = Label::from_id(s.label).map_or("?", Label::name);
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        s.label,
                        name,
                        s.count,
                        format_value(s.avg),
                        format_value(s.max),
                        format_value(s.min),
                        format_value(s.median)
                    )?;
                }
                Ok(())
            })?;
        }
        DatasetCmd::Import { input, remap, out } => {
            let mut text = String::new();
            open(remap)?.read_to_string(&mut text).map_err(txgraph::Error::from)?;
            let table = Remap::from_toml(&text)?.read_csv(open(input)?)?;
            write_table(&ctx.out(out, "features.csv"), &table)?;
        }
    }
    Ok(())
}

fn report_extraction(report: &txgraph::dataset::ExtractionReport) {
    if !report.missing.is_empty() {
        eprintln!("warning: {} labelled addresses not in the graph", report.missing.len());
    }
    for (address, cause) in &report.failures {
        eprintln!("warning: {address}: {cause}");
    }
}

fn feature_subset(t: &FeatureTable, set: FeatureSet) -> txgraph::Result<FeatureTable> {
    match set {
        FeatureSet::All => Ok(t.clone()),
        FeatureSet::Si => t.select(&si_ids()),
        FeatureSet::Lsi => t.select(&LSI_IDS),
    }
}

fn knn_eval(train: &FeatureTable, test: &FeatureTable, k: usize) -> txgraph::Result<EvalReport> {
    let model = knn_fit(train.matrix(), train.labels(), k)?;
    let predicted = knn_predict(&model, &test.matrix())?;
    evaluate(&predicted, &test.labels())
}

fn classify(ctx: &Ctx, cmd: &ClassifyCmd) -> anyhow::Result<()> {
    match cmd {
        ClassifyCmd::Knn {
            train,
            test,
            neighbors,
            features,
            out,
        } => {
            let train = feature_subset(&read_table(train)?, *features)?;
            let test = feature_subset(&read_table(test)?, *features)?;
            let k = neighbors.or(ctx.file.neighbors).unwrap_or(DEFAULT_NEIGHBORS);
            let report = knn_eval(&train, &test, k)?;
            print!("{}", report.to_table());
            write_json(&ctx.out(out, "eval.json"), &report)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ResolvedRun {
    ledger: Vec<PathBuf>,
    labels: PathBuf,
    k: usize,
    max_nodes: usize,
    alpha: f64,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
    test_fraction: f64,
    neighbors: usize,
    fit_on: FitOn,
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Evaluations {
    neighbors: usize,
    train_rows: usize,
    test_rows: usize,
    #[serde(rename = "si+lsi")]
    all: EvalReport,
    si: EvalReport,
    lsi: EvalReport,
}

#[derive(Serialize)]
struct InputDigest {
    path: PathBuf,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct StageTiming {
    stage: &'static str,
    millis: u128,
}

#[derive(Serialize)]
struct RunLog<'a> {
    tool: &'static str,
    version: &'static str,
    status: &'static str,
    failed_stage: Option<&'static str>,
    error: Option<String>,
    config: &'a ResolvedRun,
    config_sha256: String,
    jobs: usize,
    inputs: Vec<InputDigest>,
    stages: Vec<StageTiming>,
    rows: usize,
    missing_addresses: Vec<String>,
    failed_addresses: Vec<(String, String)>,
    /// Artifacts completed before a failure; empty on success.
    partial_artifacts: Vec<String>,
    artifacts: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> InputDigest {
    let bytes = fs::read(path).unwrap_or_default();
    InputDigest {
        path: path.to_path_buf(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    }
}

struct Stages {
    timings: Vec<StageTiming>,
    current: &'static str,
    started: Instant,
}

impl Stages {
    fn new() -> Self {
        Stages {
            timings: Vec::new(),
            current: "config",
            started: Instant::now(),
        }
    }

    fn enter(&mut self, stage: &'static str) {
        self.close();
        self.current = stage;
        self.started = Instant::now();
    }

    fn close(&mut self) {
        self.timings.push(StageTiming {
            stage: self.current,
            millis: self.started.elapsed().as_millis(),
        });
    }
}

fn run(ctx: &Ctx, a: &RunArgs) -> anyhow::Result<()> {
    let mut stages = Stages::new();
    let gk = ctx.gk(&a.gk)?;
    let lsi = ctx.lsi(&a.lsi)?;
    let jobs = ctx.jobs(a.jobs);
    let labels_path = a
        .labels
        .clone()
        .or_else(|| ctx.file.labels.clone())
        .ok_or_else(|| Error::Config("no labels file given (--labels or `labels` in config)".into()))?;
    let config = ResolvedRun {
        ledger: ctx.ledgers(&a.ledger),
        labels: labels_path.clone(),
        k: gk.max_depth,
        max_nodes: gk.max_nodes,
        alpha: lsi.alpha,
        tolerance: lsi.tolerance,
        max_iterations: lsi.max_iterations,
        seed: a.seed.or(ctx.file.seed).unwrap_or(DEFAULT_SEED),
        test_fraction: a
            .test_fraction
            .or(ctx.file.test_fraction)
            .unwrap_or(DEFAULT_TEST_FRACTION),
        neighbors: a.neighbors.or(ctx.file.neighbors).unwrap_or(DEFAULT_NEIGHBORS),
        fit_on: a.fit_on.or(ctx.file.fit_on).unwrap_or(FitOn::Train),
        out_dir: ctx.out_dir.clone(),
    };
    let config_sha256 = sha256_hex(serde_json::to_string(&config)?.as_bytes());
    let mut written: Vec<String> = Vec::new();
    let mut rows = 0;
    let mut report = txgraph::dataset::ExtractionReport::default();

    let result = (|| -> anyhow::Result<()> {
        stages.enter("ingest");
        let labels = read_labels(open(&labels_path)?)
            .with_context(|| format!("labels {}", labels_path.display()))?;
        let blocks = read_blocks(&config.ledger)?;

        stages.enter("graph");
        let g = TxGraph::build(&blocks)?;
        let merged = g.merge_parallel_edges();

        stages.enter("features");
        let (table, rep) = extract_table(&g, &merged, &labels, &gk, &lsi, jobs)?;
        report_extraction(&rep);
        rows = table.len();
        report = rep;

        stages.enter("dataset");
        let (train, test) = split(&table, config.test_fraction, config.seed)?;
        let (train_s, test_s, scaler) = scale(&train, &test, config.fit_on)?;

        stages.enter("classify");
        let mut evals = Vec::with_capacity(3);
        for set in [FeatureSet::All, FeatureSet::Si, FeatureSet::Lsi] {
            evals.push(knn_eval(
                &feature_subset(&train_s, set)?,
                &feature_subset(&test_s, set)?,
                config.neighbors,
            )?);
        }
        let lsi_eval = evals.pop().expect("three evaluations");
        let si_eval = evals.pop().expect("three evaluations");
        let all_eval = evals.pop().expect("three evaluations");
        let evaluations = Evaluations {
            neighbors: config.neighbors,
            train_rows: train.len(),
            test_rows: test.len(),
            all: all_eval,
            si: si_eval,
            lsi: lsi_eval,
        };

        stages.enter("write");
        let dir = &ctx.out_dir;
        let mut save = |name: &str, f: &dyn Fn(&Path) -> anyhow::Result<()>| -> anyhow::Result<()> {
            f(&dir.join(name))?;
            written.push(name.to_string());
            Ok(())
        };
        save("graph.snap", &|p| write_atomic(p, |w| Ok(g.write_snapshot(w)?)))?;
        save("features.csv", &|p| write_table(p, &table))?;
        save("train.csv", &|p| write_table(p, &train))?;
        save("test.csv", &|p| write_table(p, &test))?;
        save("scaler.json", &|p| write_json(p, &scaler))?;
        save("eval.json", &|p| write_json(p, &evaluations))?;
        save("manifest.json", &|p| write_json(p, &manifest()))?;
        Ok(())
    })();
    stages.close();

    let failed = result.as_ref().err();
    let failed_stage = failed.map(|_| stages.current);
    let mut inputs: Vec<InputDigest> = config.ledger.iter().map(|p| digest_file(p)).collect();
    inputs.push(digest_file(&labels_path));
    let log = RunLog {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        status: if failed.is_some() { "failed" } else { "ok" },
        failed_stage,
        error: failed.map(|e| format!("{e:#}")),
        config: &config,
        config_sha256,
        jobs,
        inputs,
        stages: stages.timings,
        rows,
        missing_addresses: report.missing,
        failed_addresses: report.failures,
        partial_artifacts: if failed.is_some() { written.clone() } else { Vec::new() },
        artifacts: written,
    };
    // a failure before any artifact exists leaves the output directory alone
    if failed.is_none() || !log.artifacts.is_empty() {
        write_json(&ctx.out_dir.join("run_log.json"), &log)?;
    }
    match result {
        Ok(()) => {
            eprintln!("done: {} rows, artifacts in {}", log.rows, ctx.out_dir.display());
            Ok(())
        }
        Err(e) => Err(e.context(format!("stage `{}` failed", failed_stage.unwrap_or("?")))),
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let ctx = Ctx::load(cli)?;
    match &cli.command {
        Command::Ingest(c) => ingest(&ctx, c),
        Command::Graph(c) => graph(&ctx, c),
        Command::Subgraph(a) => subgraph(&ctx, a),
        Command::Features(c) => features(&ctx, c),
        Command::Dataset(c) => dataset(&ctx, c),
        Command::Classify(c) => classify(&ctx, c),
        Command::Run(a) => run(&ctx, a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let class = e
        .chain()
        .find_map(|c| c.downcast_ref::<Error>().map(Error::class))
        .or_else(|| {
            e.chain()
                .any(|c| c.downcast_ref::<io::Error>().is_some())
                .then_some(ErrorClass::Io)
        })
        .unwrap_or(ErrorClass::Input);
    class.exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
