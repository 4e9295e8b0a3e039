use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use clairvoyant::correlate::{kendall_tau, rank_systems, TauVariant};
use clairvoyant::engine::{self, Bm25Params, InvertedIndex, TokenizerConfig};
use clairvoyant::extrapolate::{
    build_fused_seed, extrapolate_seed, select_gold, write_extrapolated, ExternalSeedRuns,
    ExtrapolateOptions, Family, FusionPlan, QrelsManifest, SeedSource,
};
use clairvoyant::fusion::{rbc_fuse, RbcParams};
use clairvoyant::metrics::{evaluate, read_mean_csv, write_mean_csv, write_score_csv, MetricId};
use clairvoyant::pipeline::{
    self, build_seed, emit_report, read_worksheet, sample_for_judgment, summarize_worksheet,
    write_worksheet, ExperimentConfig, ExperimentInputs,
};
use clairvoyant::synthetic::{SyntheticCollection, SyntheticSpec};
use clairvoyant::trec_io::{self, qrels_stats, PassageId, QrelsOptions, Run};
use clairvoyant::{Error, ErrorClass, PassageCollection};

#[derive(Parser)]
#[command(
    name = "clairvoyant",
    version,
    about = "Judgment-extrapolation experiments for passage ranking"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a binary inverted index from a collection TSV.
    Index(IndexArgs),
    /// Rank the collection for every topic with BM25.
    Search(SearchArgs),
    /// Rank the collection using passages as queries.
    Qbp(QbpArgs),
    /// Fuse runs topic by topic with rank-biased centroids.
    Fuse(FuseArgs),
    /// Extend gold qrels with the top passages of a seed ranking.
    Extrapolate(ExtrapolateArgs),
    /// Score runs against qrels.
    Evaluate(EvaluateArgs),
    /// Kendall's tau between two per-system summary CSVs.
    Correlate(CorrelateArgs),
    /// Run the full extrapolation sweep described by a config file.
    Sweep(SweepArgs),
    /// Draw a judgment worksheet from the fused seed rankings.
    Sample(SampleArgs),
    /// Tabulate a filled judgment worksheet.
    Summarize(SummarizeArgs),
    /// Print the judgments-per-topic histogram of a qrels file.
    Stats(StatsArgs),
    /// Write a small synthetic collection with runs and a config.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Bm25Opts {
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// Disable the plural stemmer.
    #[arg(long)]
    no_stem: bool,
    /// Truncate each query to its first N tokens.
    #[arg(long)]
    max_query_terms: Option<usize>,
}

impl Bm25Opts {
    fn params(&self) -> Result<Bm25Params> {
        Ok(Bm25Params::new(self.k1, self.b)?)
    }

    fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            stem: !self.no_stem,
        }
    }
}

#[derive(Args)]
struct IndexSource {
    /// Prebuilt index; built from --collection when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    collection: Option<PathBuf>,
}

impl IndexSource {
    fn open(&self, config: TokenizerConfig) -> Result<(InvertedIndex, Option<PassageCollection>)> {
        let collection = self
            .collection
            .as_deref()
            .map(trec_io::read_collection_file)
            .transpose()?;
        let index = match (&self.index, &collection) {
            (Some(p), _) => {
                let index = engine::load_index(p)?;
                if index.config() != config {
                    log::warn!(
                        "index was built with {:?}; ignoring tokenizer flags",
                        index.config()
                    );
                }
                index
            }
            (None, Some(c)) => InvertedIndex::build(c, config)?,
            (None, None) => return Err(config_err("either --index or --collection is required")),
        };
        Ok((index, collection))
    }
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    collection: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    no_stem: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    source: IndexSource,
    /// Topics TSV: `id<TAB>text`.
    #[arg(long)]
    topics: PathBuf,
    #[command(flatten)]
    bm25: Bm25Opts,
    #[arg(long, default_value_t = 1000)]
    depth: usize,
    #[arg(long, default_value = "bm25")]
    tag: String,
    /// Output run file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct QbpArgs {
    #[command(flatten)]
    source: IndexSource,
    #[command(flatten)]
    bm25: Bm25Opts,
    /// Query with each topic's designated gold passage; the run is keyed by topic.
    #[arg(long, conflicts_with = "passages")]
    qrels: Option<PathBuf>,
    /// Seed for choosing the designated gold passage.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// File of passage ids, one per line; the run is keyed by passage id.
    #[arg(long)]
    passages: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    depth: usize,
    #[arg(long, default_value = "bm25")]
    tag: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Input runs.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.98)]
    phi: f64,
    #[arg(long, default_value_t = 100)]
    depth: usize,
    #[arg(long, default_value = "rbc")]
    tag: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExtrapolateArgs {
    /// Gold qrels.
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Topic-keyed seed run. When absent the seed is built from --collection
    /// (BM and FUS only).
    #[arg(long)]
    seed_run: Option<PathBuf>,
    #[command(flatten)]
    source: IndexSource,
    #[command(flatten)]
    bm25: Bm25Opts,
    /// External first-stage run used by FUS.
    #[arg(long)]
    external_first: Option<PathBuf>,
    /// External second-stage run used by FUS, keyed by query passage.
    #[arg(long, requires = "external_first")]
    external_second: Option<PathBuf>,
    #[arg(long, default_value_t = 0.98)]
    phi: f64,
    #[arg(long, default_value_t = 5)]
    fan_out: usize,
    /// Maximum number of added passages per topic.
    #[arg(long, short)]
    d: usize,
    /// Write every depth from 0 to d rather than d alone.
    #[arg(long)]
    all_depths: bool,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long, default_value_t = 100)]
    seed_depth: usize,
    #[arg(long)]
    allow_partial: bool,
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    qrels: PathBuf,
    /// Run files.
    runs: Vec<PathBuf>,
    /// Directory of run files, read in name order.
    #[arg(long)]
    runs_dir: Option<PathBuf>,
    /// Metrics such as RR@10, AP@10, NDCG@10 (repeatable).
    #[arg(long = "metric", short)]
    metrics: Vec<MetricId>,
    /// Truncate runs to this depth before scoring.
    #[arg(long, default_value_t = 10)]
    run_depth: usize,
    /// Emit per-topic scores instead of means.
    #[arg(long)]
    per_topic: bool,
    #[arg(long)]
    lenient: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Summary CSV providing the reference ordering.
    #[arg(long)]
    reference: PathBuf,
    /// Summary CSV to compare.
    #[arg(long)]
    other: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Anchored)]
    variant: VariantArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Unweighted,
    Anchored,
    Symmetric,
}

impl From<VariantArg> for TauVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Unweighted => TauVariant::Unweighted,
            VariantArg::Anchored => TauVariant::Anchored,
            VariantArg::Symmetric => TauVariant::Symmetric,
        }
    }
}

#[derive(Args)]
struct ConfigOverrides {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Comma-separated subset of BM,TCT,FUS.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Option<Vec<Family>>,
    #[arg(long)]
    run_depth: Option<usize>,
    #[arg(long)]
    seed_depth: Option<usize>,
    #[arg(long)]
    allow_partial: bool,
    #[arg(long, value_enum)]
    tau_variant: Option<VariantArg>,
}

impl ConfigOverrides {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(v) = self.d_max {
            cfg.d_max = v;
        }
        if let Some(v) = self.rng_seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = &self.families {
            cfg.families = v.clone();
        }
        if let Some(v) = self.run_depth {
            cfg.run_depth = v;
        }
        if let Some(v) = self.seed_depth {
            cfg.seed_depth = v;
        }
        if let Some(v) = self.tau_variant {
            cfg.tau_variant = v.into();
        }
        cfg.allow_partial |= self.allow_partial;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigOverrides,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    config: ConfigOverrides,
    /// Number of topics to sample.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Fused-ranking ranks to extract.
    #[arg(long, value_delimiter = ',', default_value = "1,2,10")]
    ranks: Vec<usize>,
    /// Previously written fused seed run (e.g. seeds/FUS.run from a sweep).
    #[arg(long)]
    fused_run: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    worksheet: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    qrels: PathBuf,
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, short)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    passages: usize,
    #[arg(long, default_value_t = 25)]
    topics: usize,
    #[arg(long, default_value_t = 10)]
    systems: usize,
    #[arg(long, default_value_t = 2021)]
    seed: u64,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_run_to(run: &Run, path: Option<&Path>) -> Result<()> {
    let mut out = sink(path)?;
    trec_io::write_run(run, &mut out)?;
    out.flush()?;
    Ok(())
}

fn read_run_tagged(path: &Path, cap: Option<usize>) -> Result<Run> {
    let mut run = trec_io::read_run_file(path, cap)?;
    if run.tag().is_empty() {
        run.retag(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    Ok(run)
}

fn cmd_index(a: IndexArgs) -> Result<()> {
    let collection = trec_io::read_collection_file(&a.collection)?;
    let index = InvertedIndex::build(&collection, TokenizerConfig { stem: !a.no_stem })?;
    engine::save_index(&index, &a.output)?;
    eprintln!(
        "indexed {} passages, {} terms, avg length {:.2}",
        index.n_docs(),
        index.n_terms(),
        index.avg_doc_length()
    );
    Ok(())
}

fn cmd_search(a: SearchArgs) -> Result<()> {
    let params = a.bm25.params()?;
    let (index, _) = a.source.open(a.bm25.tokenizer())?;
    let topics = trec_io::read_topics_file(&a.topics)?;
    let mut run = Run::new(a.tag.clone());
    for (id, text) in topics.iter() {
        let bag = index.query_bag(text, a.bm25.max_query_terms);
        run.insert(
            index
                .search_bag(&params, id.clone(), &bag, a.depth)
                .with_tag(a.tag.clone()),
        )?;
    }
    write_run_to(&run, a.output.as_deref())
}

fn cmd_qbp(a: QbpArgs) -> Result<()> {
    let params = a.bm25.params()?;
    let (index, collection) = a.source.open(a.bm25.tokenizer())?;
    let collection =
        collection.ok_or_else(|| config_err("qbp needs --collection for passage text"))?;
    let mut run = Run::new(a.tag.clone());
    if let Some(q) = &a.qrels {
        let gold = select_gold(
            &trec_io::read_qrels_file(q, QrelsOptions::default())?,
            a.rng_seed,
        )?;
        let seed = SeedSource::internal_bm25(
            &gold,
            &index,
            &collection,
            &params,
            a.depth,
            a.bm25.max_query_terms,
        )?;
        for l in seed.rankings() {
            run.insert(l.clone().with_tag(a.tag.clone()))?;
        }
    } else if let Some(p) = &a.passages {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        for id in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let id = PassageId::new(id)?;
            let l = index.query_by_passage(
                &params,
                &id,
                &collection,
                a.depth,
                a.bm25.max_query_terms,
            )?;
            run.insert(l.with_tag(a.tag.clone()))?;
        }
    } else {
        return Err(config_err("qbp needs --qrels or --passages"));
    }
    write_run_to(&run, a.output.as_deref())
}

fn cmd_fuse(a: FuseArgs) -> Result<()> {
    let params = RbcParams::new(a.phi, a.depth)?;
    let runs = a
        .runs
        .iter()
        .map(|p| read_run_tagged(p, None))
        .collect::<Result<Vec<_>>>()?;
    let mut by_topic: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for run in &runs {
        for l in run.lists() {
            by_topic
                .entry(l.topic().clone())
                .or_default()
                .push(l.clone());
        }
    }
    let mut fused = Run::new(a.tag.clone());
    for lists in by_topic.values() {
        fused.insert(rbc_fuse(lists, &params, &a.tag)?)?;
    }
    write_run_to(&fused, a.output.as_deref())
}

fn cmd_extrapolate(a: ExtrapolateArgs) -> Result<()> {
    let qrels = trec_io::read_qrels_file(&a.qrels, QrelsOptions { lenient: a.lenient })?;
    let gold = select_gold(&qrels, a.rng_seed)?;
    let params = a.bm25.params()?;
    let mut manifest_bm25 = false;
    let mut fusion = None;
    let source = match (&a.seed_run, a.family) {
        (Some(p), _) => SeedSource::external(&trec_io::read_run_file(p, Some(a.seed_depth))?),
        (None, Family::BM) => {
            let (index, collection) = a.source.open(a.bm25.tokenizer())?;
            let collection = collection.ok_or_else(|| config_err("BM seeds need --collection"))?;
            manifest_bm25 = true;
            SeedSource::internal_bm25(
                &gold,
                &index,
                &collection,
                &params,
                a.seed_depth,
                a.bm25.max_query_terms,
            )?
        }
        (None, Family::FUS) => {
            let (index, collection) = a.source.open(a.bm25.tokenizer())?;
            let collection = collection.ok_or_else(|| config_err("FUS seeds need --collection"))?;
            let external = match &a.external_first {
                Some(first) => Some(ExternalSeedRuns {
                    first_stage: trec_io::read_run_file(first, None)?,
                    second_stage: a
                        .external_second
                        .as_deref()
                        .map(|p| trec_io::read_run_file(p, None))
                        .transpose()?,
                }),
                None => None,
            };
            let plan = FusionPlan {
                fan_out: a.fan_out,
                rerun_depth: a.seed_depth,
                rbc: RbcParams::new(a.phi, a.seed_depth)?,
                max_query_terms: a.bm25.max_query_terms,
                ..FusionPlan::default()
            };
            manifest_bm25 = true;
            fusion = Some(plan);
            build_fused_seed(
                &gold,
                &index,
                &collection,
                &params,
                external.as_ref(),
                &plan,
            )?
        }
        (None, Family::TCT) => {
            return Err(config_err("TCT seeds must be supplied with --seed-run"))
        }
    };
    let ext = extrapolate_seed(
        &gold,
        &source,
        a.d,
        ExtrapolateOptions {
            depth: Some(a.seed_depth),
            allow_partial: a.allow_partial,
        },
    )?;
    std::fs::create_dir_all(&a.output_dir).map_err(|e| Error::Io {
        path: a.output_dir.clone(),
        source: e,
    })?;
    let depths: Vec<usize> = if a.all_depths {
        (0..=a.d).collect()
    } else {
        vec![a.d]
    };
    for d in depths {
        let at = ext.prefix(d)?;
        let mut manifest = QrelsManifest::for_extrapolation(&at, a.rng_seed, a.seed_depth);
        manifest.family = a.family;
        if manifest_bm25 {
            manifest.bm25 = Some(params);
            manifest.stemming = Some(!a.bm25.no_stem);
        }
        manifest.fusion = fusion;
        write_extrapolated(
            &a.output_dir,
            &format!("{}.d{d:02}", a.family),
            &at,
            &manifest,
        )?;
    }
    if !ext.excluded().is_empty() {
        eprintln!(
            "{} topics excluded for insufficient seed depth",
            ext.excluded().len()
        );
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let qrels = trec_io::read_qrels_file(&a.qrels, QrelsOptions { lenient: a.lenient })?;
    let mut runs = a
        .runs
        .iter()
        .map(|p| read_run_tagged(p, Some(a.run_depth)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &a.runs_dir {
        runs.extend(pipeline::load_run_dir(dir, Some(a.run_depth))?);
    }
    if runs.is_empty() {
        return Err(config_err("no runs given"));
    }
    let metrics = if a.metrics.is_empty() {
        MetricId::defaults()
    } else {
        a.metrics
    };
    let mut tables = Vec::new();
    for run in &runs {
        for &m in &metrics {
            tables.push(evaluate(run, &qrels, m)?);
        }
    }
    let mut out = sink(a.output.as_deref())?;
    if a.per_topic {
        write_score_csv(&tables, &mut out)?;
    } else {
        write_mean_csv(&tables, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn read_means(path: &Path) -> Result<BTreeMap<MetricId, Vec<(String, f64)>>> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut by_metric: BTreeMap<MetricId, Vec<(String, f64)>> = BTreeMap::new();
    for row in read_mean_csv(file)? {
        by_metric
            .entry(row.metric)
            .or_default()
            .push((row.system, row.mean));
    }
    Ok(by_metric)
}

fn cmd_correlate(a: CorrelateArgs) -> Result<()> {
    let reference = read_means(&a.reference)?;
    let other = read_means(&a.other)?;
    let variant: TauVariant = a.variant.into();
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "metric,n_systems,tau_unweighted,tau_weighted")?;
    let mut any = false;
    for (metric, means) in &reference {
        let Some(theirs) = other.get(metric) else {
            continue;
        };
        any = true;
        let r = rank_systems(means.iter().cloned())?;
        let o = rank_systems(theirs.iter().cloned())?;
        let tu = kendall_tau(&r, &o)?;
        let tw = variant.compute(&r, &o)?;
        writeln!(out, "{metric},{},{},{}", tu.n_systems, tu.tau, tw.tau)?;
    }
    out.flush()?;
    if !any {
        return Err(Error::Parse {
            line: 0,
            msg: "the two files share no metric".into(),
        }
        .into());
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let result = pipeline::run_sweep(&cfg)?;
    emit_report(&result, &cfg.output_dir)?;
    print!("{}", pipeline::render_summary(&result));
    eprintln!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let cfg = a.config.load()?;
    cfg.validate_params()?;
    let inputs = ExperimentInputs::load(&cfg)?;
    let gold = select_gold(&inputs.gold, cfg.rng_seed)?;
    let fused = match &a.fused_run {
        Some(p) => SeedSource::external(&trec_io::read_run_file(p, None)?),
        None => {
            let built;
            let index = match &inputs.index {
                Some(i) => i,
                None => {
                    built = InvertedIndex::build(&inputs.collection, cfg.tokenizer)?;
                    &built
                }
            };
            build_seed(Family::FUS, &gold, &inputs, index, &cfg)?
        }
    };
    let rows = sample_for_judgment(
        &fused,
        &gold,
        &inputs.collection,
        inputs.topics.as_ref(),
        a.n,
        &a.ranks,
        cfg.rng_seed,
    )?;
    let mut out = sink(a.output.as_deref())?;
    write_worksheet(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    let file = File::open(&a.worksheet).map_err(|e| Error::Io {
        path: a.worksheet.clone(),
        source: e,
    })?;
    let summary = summarize_worksheet(&read_worksheet(file)?)?;
    print!("{}", summary.render());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let qrels = trec_io::read_qrels_file(&a.qrels, QrelsOptions { lenient: a.lenient })?;
    print!("{}", qrels_stats(&qrels));
    Ok(())
}

const SYNTH_CONFIG: &str = r#"collection = "collection.tsv"
topics = "queries.tsv"
qrels = "qrels.txt"
runs_dir = "runs"
output_dir = "out"
d_max = 20
rng_seed = RNG_SEED

[external]
first_stage = "external/first_stage.run"
second_stage = "external/second_stage.run"
"#;

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let s = SyntheticCollection::generate(SyntheticSpec {
        n_passages: a.passages,
        n_topics: a.topics,
        n_systems: a.systems,
        seed: a.seed,
        ..SyntheticSpec::default()
    })?;
    s.write_to(&a.output_dir)?;
    let rng_seed = 0;
    let gold = select_gold(&s.qrels, rng_seed)?;
    let ext = s.external_seed_runs(&gold, 100)?;
    let dir = a.output_dir.join("external");
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    trec_io::write_run_file(&dir.join("first_stage.run"), &ext.first_stage)?;
    if let Some(second) = &ext.second_stage {
        trec_io::write_run_file(&dir.join("second_stage.run"), second)?;
    }
    let path = a.output_dir.join("config.toml");
    std::fs::write(
        &path,
        SYNTH_CONFIG.replace("RNG_SEED", &rng_seed.to_string()),
    )
    .map_err(|e| Error::Io { path, source: e })?;
    eprintln!("wrote synthetic collection to {}", a.output_dir.display());
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<Error>() {
        return match err.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Internal => 4,
        };
    }
    if e.downcast_ref::<io::Error>().is_some() {
        return 3;
    }
    4
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Qbp(a) => cmd_qbp(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Extrapolate(a) => cmd_extrapolate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Core errors already embed their cause in the message.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
