//! The end-to-end sensitivity sweep and its reports.
//!
//! For every requested family the seed rankings are built once and the
//! extrapolation is computed at `d_max`; the judgments for smaller `d` are
//! prefixes of it. Every system is then evaluated against every `d` under
//! every metric, systems are ordered by mean score, and each ordering is
//! compared with the ordering induced by the gold judgments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{
    kendall_tau, rank_systems, write_tau_csv, SystemOrdering, TauRow, TauVariant,
};
use crate::engine::{self, Bm25Params, InvertedIndex, TokenizerConfig};
use crate::error::{Error, Result};
use crate::extrapolate::{
    build_fused_seed, extrapolate_seed, select_gold, write_extrapolated, ExternalSeedRuns,
    ExtrapolateOptions, ExtrapolatedQrels, Family, FusionPlan, GoldSet, QrelsManifest, SeedSource,
};
use crate::metrics::{evaluate, MetricId};
use crate::trec_io::{self, PassageCollection, Qrels, QrelsOptions, Run, TopicSet};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalPaths {
    /// Topic-keyed run: ranking for each topic's designated gold passage.
    pub first_stage: Option<PathBuf>,
    /// Passage-keyed run: ranking for each passage used as a query.
    pub second_stage: Option<PathBuf>,
}

/// Declarative experiment description, read from TOML. Relative paths are
/// resolved against the directory containing the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub collection: PathBuf,
    pub topics: Option<PathBuf>,
    pub qrels: PathBuf,
    pub runs_dir: PathBuf,
    /// Prebuilt binary index; built from the collection when absent.
    pub index: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub metrics: Vec<MetricId>,
    pub families: Vec<Family>,
    pub d_max: usize,
    /// System runs are truncated to this many passages per topic.
    pub run_depth: usize,
    /// Depth of the BM25 and external seed rankings.
    pub seed_depth: usize,
    pub rng_seed: u64,
    pub allow_partial: bool,
    pub lenient_qrels: bool,
    /// Weighted tau flavour reported in the `tau_weighted` column.
    pub tau_variant: TauVariant,
    pub max_query_terms: Option<usize>,
    pub bm25: Bm25Params,
    pub tokenizer: TokenizerConfig,
    pub fusion: FusionPlan,
    pub external: ExternalPaths,
    /// Write extrapolated qrels for every `d` under `qrels/`.
    pub write_qrels: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            collection: PathBuf::from("collection.tsv"),
            topics: None,
            qrels: PathBuf::from("qrels.txt"),
            runs_dir: PathBuf::from("runs"),
            index: None,
            output_dir: PathBuf::from("out"),
            metrics: MetricId::defaults(),
            families: Family::ALL.to_vec(),
            d_max: 20,
            run_depth: 10,
            seed_depth: 100,
            rng_seed: 0,
            allow_partial: false,
            lenient_qrels: false,
            tau_variant: TauVariant::Anchored,
            max_query_terms: None,
            bm25: Bm25Params::default(),
            tokenizer: TokenizerConfig::default(),
            fusion: FusionPlan::default(),
            external: ExternalPaths::default(),
            write_qrels: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.collection);
        fix(&mut self.qrels);
        fix(&mut self.runs_dir);
        fix(&mut self.output_dir);
        for p in [
            &mut self.topics,
            &mut self.index,
            &mut self.external.first_stage,
            &mut self.external.second_stage,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Checks that do not need the input data.
    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        if self.families.contains(&Family::TCT) && self.external.first_stage.is_none() {
            return Err(Error::Config(
                "family TCT requires external.first_stage".into(),
            ));
        }
        if self.external.second_stage.is_some() && self.external.first_stage.is_none() {
            return Err(Error::Config(
                "external.second_stage requires external.first_stage".into(),
            ));
        }
        Ok(())
    }

    /// The subset of [`validate`](Self::validate) that ignores input paths.
    pub fn validate_params(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::NothingToSweep);
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        if self.run_depth == 0 {
            return Err(Error::Config("run_depth must be >= 1".into()));
        }
        self.bm25.validate()?;
        self.fusion.rbc.validate()?;
        Ok(())
    }

    /// Seed rankings must reach past every gold passage plus `d_max` more.
    pub fn validate_depths(&self, max_gold: usize) -> Result<()> {
        let need = self.d_max + max_gold;
        if self.seed_depth < need {
            return Err(Error::Config(format!(
                "seed_depth {} is below d_max + max gold per topic = {need}",
                self.seed_depth
            )));
        }
        if self.families.contains(&Family::FUS) && self.fusion.rbc.depth < need {
            return Err(Error::Config(format!(
                "fusion.rbc.depth {} is below d_max + max gold per topic = {need}",
                self.fusion.rbc.depth
            )));
        }
        Ok(())
    }
}

/// Everything the sweep reads, already parsed.
#[derive(Debug, Clone)]
pub struct ExperimentInputs {
    pub collection: PassageCollection,
    pub topics: Option<TopicSet>,
    pub gold: Qrels,
    pub systems: Vec<Run>,
    pub external: Option<ExternalSeedRuns>,
    pub index: Option<InvertedIndex>,
}

impl ExperimentInputs {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let collection = trec_io::read_collection_file(&cfg.collection)?;
        if !collection.degenerate().is_empty() {
            log::warn!("{} passages have empty text", collection.degenerate().len());
        }
        let topics = cfg
            .topics
            .as_deref()
            .map(trec_io::read_topics_file)
            .transpose()?;
        let gold = trec_io::read_qrels_file(
            &cfg.qrels,
            QrelsOptions {
                lenient: cfg.lenient_qrels,
            },
        )?;
        let systems = load_run_dir(&cfg.runs_dir, Some(cfg.run_depth))?;
        let external = match &cfg.external.first_stage {
            Some(first) => Some(ExternalSeedRuns {
                first_stage: trec_io::read_run_file(first, None)?,
                second_stage: cfg
                    .external
                    .second_stage
                    .as_deref()
                    .map(|p| trec_io::read_run_file(p, None))
                    .transpose()?,
            }),
            None => None,
        };
        let index = cfg.index.as_deref().map(engine::load_index).transpose()?;
        Ok(Self {
            collection,
            topics,
            gold,
            systems,
            external,
            index,
        })
    }
}

/// Reads every regular file in `dir` as a run, in file-name order. Runs
/// without a tag are named after their file stem.
pub fn load_run_dir(dir: &Path, depth_cap: Option<usize>) -> Result<Vec<Run>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let mut run = trec_io::read_run_file(&p, depth_cap)?;
            if run.tag().is_empty() {
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                run.retag(stem);
            }
            Ok(run)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub family: Family,
    pub metric: MetricId,
    pub d: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemMeanRow {
    pub family: Family,
    pub metric: MetricId,
    pub d: usize,
    pub system: String,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub families: Vec<Family>,
    pub metrics: Vec<MetricId>,
    pub d_max: usize,
    pub scores: Vec<ScoreRow>,
    pub taus: Vec<TauRow>,
    pub system_means: Vec<SystemMeanRow>,
    /// Ordering induced by the gold judgments, per metric.
    pub reference: BTreeMap<MetricId, SystemOrdering>,
    pub gold: GoldSet,
    pub seeds: BTreeMap<Family, SeedSource>,
    pub extrapolations: BTreeMap<Family, ExtrapolatedQrels>,
    pub config: ExperimentConfig,
}

impl SweepResult {
    pub fn score(&self, family: Family, metric: MetricId, d: usize) -> Option<f64> {
        self.scores
            .iter()
            .find(|r| r.family == family && r.metric == metric && r.d == d)
            .map(|r| r.mean)
    }

    pub fn tau(&self, family: Family, metric: MetricId, d: usize) -> Option<&TauRow> {
        let m = metric.to_string();
        let f = family.name();
        self.taus
            .iter()
            .find(|r| r.family == f && r.metric == m && r.d == d)
    }

    pub fn system_mean(
        &self,
        family: Family,
        metric: MetricId,
        d: usize,
        system: &str,
    ) -> Option<f64> {
        self.system_means
            .iter()
            .find(|r| r.family == family && r.metric == metric && r.d == d && r.system == system)
            .map(|r| r.mean)
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Loads inputs from disk and runs the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let inputs = ExperimentInputs::load(cfg)?;
    sweep(&inputs, cfg)
}

/// Builds the seed source for one family.
pub fn build_seed(
    family: Family,
    gold: &GoldSet,
    inputs: &ExperimentInputs,
    index: &InvertedIndex,
    cfg: &ExperimentConfig,
) -> Result<SeedSource> {
    match family {
        Family::BM => SeedSource::internal_bm25(
            gold,
            index,
            &inputs.collection,
            &cfg.bm25,
            cfg.seed_depth,
            cfg.max_query_terms,
        ),
        Family::TCT => {
            let ext = inputs.external.as_ref().ok_or_else(|| {
                Error::Config("family TCT requires external first-stage runs".into())
            })?;
            Ok(SeedSource::external(&ext.first_stage))
        }
        Family::FUS => {
            let mut plan = cfg.fusion;
            plan.max_query_terms = plan.max_query_terms.or(cfg.max_query_terms);
            build_fused_seed(
                gold,
                index,
                &inputs.collection,
                &cfg.bm25,
                inputs.external.as_ref(),
                &plan,
            )
        }
    }
}

/// Runs the sweep over already-loaded inputs.
pub fn sweep(inputs: &ExperimentInputs, cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate_params()?;
    if inputs.gold.is_empty() {
        return Err(Error::Config("gold qrels contain no judged topics".into()));
    }
    let gold = select_gold(&inputs.gold, cfg.rng_seed)?;
    cfg.validate_depths(gold.max_members())?;

    let systems: Vec<Run> = inputs
        .systems
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.truncate(cfg.run_depth);
            r
        })
        .collect();
    if systems.len() < 2 {
        return Err(Error::TooFewSystems(systems.len()));
    }

    let built;
    let index = match &inputs.index {
        Some(i) => i,
        None => {
            built = InvertedIndex::build(&inputs.collection, cfg.tokenizer)?;
            &built
        }
    };

    let mut families = cfg.families.clone();
    families.sort();
    families.dedup();

    let mut seeds = BTreeMap::new();
    let mut extrapolations = BTreeMap::new();
    for &family in &families {
        let seed = build_seed(family, &gold, inputs, index, cfg)?;
        let depth = if family == Family::FUS {
            cfg.fusion.rbc.depth
        } else {
            cfg.seed_depth
        };
        let ext = extrapolate_seed(
            &gold,
            &seed,
            cfg.d_max,
            ExtrapolateOptions {
                depth: Some(depth),
                allow_partial: cfg.allow_partial,
            },
        )?;
        seeds.insert(family, seed);
        extrapolations.insert(family, ext);
    }

    // Reference orderings against the gold judgments.
    let mut reference = BTreeMap::new();
    for &metric in &cfg.metrics {
        let means = systems
            .iter()
            .map(|r| {
                Ok((
                    r.tag().to_string(),
                    evaluate(r, &inputs.gold, metric)?.mean(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        reference.insert(metric, rank_systems(means)?);
    }

    // One work item per (family, d): evaluate every system under every metric.
    let items: Vec<(Family, usize)> = families
        .iter()
        .flat_map(|&f| (0..=cfg.d_max).map(move |d| (f, d)))
        .collect();
    let evaluated: Vec<Vec<Vec<(String, f64)>>> = items
        .par_iter()
        .map(|&(family, d)| {
            let qrels = extrapolations[&family].qrels_at(d)?;
            cfg.metrics
                .iter()
                .map(|&metric| {
                    systems
                        .iter()
                        .map(|r| Ok((r.tag().to_string(), evaluate(r, &qrels, metric)?.mean())))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scores = Vec::new();
    let mut taus = Vec::new();
    let mut system_means = Vec::new();
    for (&(family, d), per_metric) in items.iter().zip(evaluated) {
        for (&metric, means) in cfg.metrics.iter().zip(per_metric) {
            scores.push(ScoreRow {
                family,
                metric,
                d,
                mean: mean_of(means.iter().map(|(_, m)| *m)),
            });
            for (system, mean) in &means {
                system_means.push(SystemMeanRow {
                    family,
                    metric,
                    d,
                    system: system.clone(),
                    mean: *mean,
                });
            }
            let ordering = rank_systems(means)?;
            let reference = &reference[&metric];
            taus.push(TauRow {
                family: family.name().to_string(),
                metric: metric.to_string(),
                d,
                tau_unweighted: kendall_tau(reference, &ordering)?.tau,
                tau_weighted: cfg.tau_variant.compute(reference, &ordering)?.tau,
            });
        }
    }

    Ok(SweepResult {
        families,
        metrics: cfg.metrics.clone(),
        d_max: cfg.d_max,
        scores,
        taus,
        system_means,
        reference,
        gold,
        seeds,
        extrapolations,
        config: cfg.clone(),
    })
}

fn csv_file(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })
}

fn csv_tsv_file(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().delimiter(b'\t').from_writer(file))
}

/// Writes `scores.csv`, `tau.csv`, `means.csv`, `plot.tsv`, `summary.txt`,
/// `manifest.json`, the seed rankings under `seeds/` and, when enabled, the
/// extrapolated qrels with sidecar manifests under `qrels/`.
pub fn emit_report(result: &SweepResult, out: &Path) -> Result<()> {
    if result.families.is_empty() {
        return Err(Error::NothingToSweep);
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut w = csv_file(&out.join("scores.csv"))?;
    w.write_record(["family", "metric", "d", "mean"])?;
    for r in &result.scores {
        w.write_record([
            r.family.name(),
            &r.metric.to_string(),
            &r.d.to_string(),
            &r.mean.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| Error::io(out.join("scores.csv"), e))?;

    let tau_path = out.join("tau.csv");
    let file = std::fs::File::create(&tau_path).map_err(|e| Error::io(&tau_path, e))?;
    write_tau_csv(&result.taus, std::io::BufWriter::new(file))?;

    let mut w = csv_file(&out.join("means.csv"))?;
    w.write_record(["family", "metric", "d", "system", "mean"])?;
    for r in &result.system_means {
        w.write_record([
            r.family.name(),
            &r.metric.to_string(),
            &r.d.to_string(),
            &r.system,
            &r.mean.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out.join("means.csv"), e))?;

    let mut w = csv_tsv_file(&out.join("plot.tsv"))?;
    w.write_record(["family", "metric", "d", "series", "value"])?;
    for (s, t) in result.scores.iter().zip(&result.taus) {
        let (f, m, d) = (s.family.name(), s.metric.to_string(), s.d.to_string());
        w.write_record([f, &m, &d, "score", &s.mean.to_string()])?;
        w.write_record([f, &m, &d, "tau_unweighted", &t.tau_unweighted.to_string()])?;
        w.write_record([f, &m, &d, "tau_weighted", &t.tau_weighted.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(out.join("plot.tsv"), e))?;

    let summary = render_summary(result);
    let path = out.join("summary.txt");
    std::fs::write(&path, summary).map_err(|e| Error::io(path, e))?;

    let manifest = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": result.config,
        "n_systems": result.reference.values().next().map_or(0, SystemOrdering::len),
        "n_topics": result.gold.len(),
        "excluded_topics": result.extrapolations.iter()
            .map(|(f, e)| (f.name(), e.excluded().iter().map(|s| s.topic.clone()).collect::<Vec<_>>()))
            .collect::<BTreeMap<_, _>>(),
    });
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::io(path, e))?;

    let seeds_dir = out.join("seeds");
    std::fs::create_dir_all(&seeds_dir).map_err(|e| Error::io(&seeds_dir, e))?;
    for (family, seed) in &result.seeds {
        trec_io::write_run_file(&seeds_dir.join(format!("{family}.run")), &seed.to_run())?;
    }

    if result.config.write_qrels {
        let qdir = out.join("qrels");
        std::fs::create_dir_all(&qdir).map_err(|e| Error::io(&qdir, e))?;
        for (family, ext) in &result.extrapolations {
            for d in 0..=ext.d() {
                let at = ext.prefix(d)?;
                let mut manifest = QrelsManifest::for_extrapolation(
                    &at,
                    result.config.rng_seed,
                    result.config.seed_depth,
                );
                match family {
                    Family::BM => {
                        manifest.bm25 = Some(result.config.bm25);
                        manifest.stemming = Some(result.config.tokenizer.stem);
                    }
                    Family::FUS => {
                        manifest.bm25 = Some(result.config.bm25);
                        manifest.stemming = Some(result.config.tokenizer.stem);
                        manifest.fusion = Some(result.config.fusion);
                    }
                    Family::TCT => {}
                }
                write_extrapolated(&qdir, &format!("{family}.d{d:02}"), &at, &manifest)?;
            }
        }
    }
    Ok(())
}

/// Plain-text table of mean scores and taus at a few representative depths.
pub fn render_summary(result: &SweepResult) -> String {
    let mut ds: Vec<usize> = [0, 1, 2, 5, 10, 20]
        .into_iter()
        .filter(|&d| d <= result.d_max)
        .collect();
    if !ds.contains(&result.d_max) {
        ds.push(result.d_max);
    }
    let mut s = String::new();
    for (title, pick) in [
        ("mean score", 0usize),
        ("tau (unweighted)", 1),
        ("tau (weighted)", 2),
    ] {
        let _ = writeln!(s, "{title}");
        let _ = write!(s, "{:<8}{:<10}", "family", "metric");
        for d in &ds {
            let _ = write!(s, "{:>9}", format!("d={d}"));
        }
        s.push('\n');
        for &family in &result.families {
            for &metric in &result.metrics {
                let _ = write!(s, "{:<8}{:<10}", family.name(), metric.to_string());
                for &d in &ds {
                    let v = match pick {
                        0 => result.score(family, metric, d),
                        1 => result.tau(family, metric, d).map(|t| t.tau_unweighted),
                        _ => result.tau(family, metric, d).map(|t| t.tau_weighted),
                    };
                    let _ = write!(s, "{:>9}", v.map_or("-".to_string(), |v| format!("{v:.4}")));
                }
                s.push('\n');
            }
        }
        s.push('\n');
    }
    s
}

/// One passage to be judged against its topic's gold anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorksheetRow {
    pub topic: String,
    pub rank: usize,
    pub passage: String,
    pub gold_identical: bool,
    /// Filled in by the assessors: yes / no, blank while unjudged.
    pub consensus: String,
    pub query: String,
    pub anchor: String,
    pub anchor_text: String,
    pub passage_text: String,
}

/// Samples `n` topics uniformly and lists the fused-ranking passages at the
/// requested ranks, next to the gold anchor passage.
pub fn sample_for_judgment(
    fused: &SeedSource,
    gold: &GoldSet,
    collection: &PassageCollection,
    topics: Option<&TopicSet>,
    n: usize,
    ranks: &[usize],
    rng_seed: u64,
) -> Result<Vec<WorksheetRow>> {
    let mut ranks = ranks.to_vec();
    ranks.sort_unstable();
    ranks.dedup();
    if ranks.is_empty() || ranks[0] == 0 {
        return Err(Error::InvalidParam(
            "ranks must be a non-empty set of positive integers".into(),
        ));
    }
    let candidates: Vec<&crate::trec_io::TopicId> = fused
        .rankings()
        .map(|l| l.topic())
        .filter(|t| gold.get(t.as_str()).is_some())
        .collect();
    if n > candidates.len() {
        return Err(Error::InvalidParam(format!(
            "cannot sample {n} topics from {} available",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), n).into_vec();
    picked.sort_unstable();

    let mut rows = Vec::with_capacity(n * ranks.len());
    for i in picked {
        let topic = candidates[i];
        let list = fused
            .ranking(topic.as_str())
            .expect("candidate topics come from the rankings");
        let entry = gold.get(topic.as_str()).expect("filtered above");
        for &rank in &ranks {
            let passage = &list
                .entries()
                .get(rank - 1)
                .ok_or_else(|| Error::RankTooDeep {
                    topic: topic.to_string(),
                    rank,
                    available: list.len(),
                })?
                .passage;
            rows.push(WorksheetRow {
                topic: topic.to_string(),
                rank,
                passage: passage.to_string(),
                gold_identical: *passage == entry.designated,
                consensus: String::new(),
                query: topics
                    .and_then(|t| t.get(topic.as_str()))
                    .unwrap_or_default()
                    .to_string(),
                anchor: entry.designated.to_string(),
                anchor_text: collection
                    .get(entry.designated.as_str())
                    .unwrap_or_default()
                    .to_string(),
                passage_text: collection
                    .get(passage.as_str())
                    .unwrap_or_default()
                    .to_string(),
            });
        }
    }
    Ok(rows)
}

pub fn write_worksheet<W: Write>(rows: &[WorksheetRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_worksheet<R: std::io::Read>(input: R) -> Result<Vec<WorksheetRow>> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Per-rank consensus counts from a filled worksheet.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JudgmentSummary {
    /// rank -> (judged as relevant as the anchor, judged, gold-identical)
    pub per_rank: BTreeMap<usize, (usize, usize, usize)>,
}

fn parse_consensus(value: &str, row: usize) -> Result<Option<bool>> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "yes" | "y" | "1" | "true" => Ok(Some(true)),
        "no" | "n" | "0" | "false" => Ok(Some(false)),
        other => Err(Error::Parse {
            line: row + 2,
            msg: format!("unrecognised consensus value {other:?}"),
        }),
    }
}

pub fn summarize_worksheet(rows: &[WorksheetRow]) -> Result<JudgmentSummary> {
    let mut per_rank: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let e = per_rank.entry(r.rank).or_default();
        if let Some(yes) = parse_consensus(&r.consensus, i)? {
            e.1 += 1;
            if yes {
                e.0 += 1;
            }
        }
        if r.gold_identical {
            e.2 += 1;
        }
    }
    Ok(JudgmentSummary { per_rank })
}

impl JudgmentSummary {
    /// `yes/judged` per rank, comma separated, e.g. `20/20, 16/20, 14/20`.
    pub fn fractions_line(&self) -> String {
        self.per_rank
            .values()
            .map(|(yes, judged, _)| format!("{yes}/{judged}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<40}", "");
        for rank in self.per_rank.keys() {
            let _ = write!(s, "{:>8}", format!("d={rank}"));
        }
        s.push('\n');
        let _ = write!(s, "{:<40}", "judged as relevant as the gold anchor");
        for (yes, judged, _) in self.per_rank.values() {
            let _ = write!(s, "{:>8}", format!("{yes}/{judged}"));
        }
        s.push('\n');
        let _ = write!(s, "{:<40}", "identical to the gold anchor");
        for (_, _, same) in self.per_rank.values() {
            let _ = write!(s, "{:>8}", format!("{same}"));
        }
        s.push('\n');
        let _ = writeln!(s, "\n{}", self.fractions_line());
        s
    }
}
