//! Extrapolated judgments.
//!
//! For each topic one gold passage `g` is designated. A seed system ranks the
//! collection with `g` as the query; the first `d` passages of that ranking
//! that are not already gold are added to the topic's judgments with grade 1:
//!
//! ```text
//! J(q) = G(q) ∪ first_d( ranking(g(q)) \ G(q) )
//! ```
//!
//! The gold set is removed before truncation, so every topic gains exactly
//! `d` passages and the additions at `d` are a prefix of those at `d + 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Bm25Params, InvertedIndex};
use crate::error::{DepthShortfall, Error, Result};
use crate::fusion::{rbc_fuse, RbcParams};
use crate::trec_io::{PassageCollection, PassageId, Qrels, RankedList, Run, TopicId};

/// Which seed ranking produced a set of extrapolated judgments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    BM,
    TCT,
    FUS,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::BM, Family::TCT, Family::FUS];

    pub fn name(self) -> &'static str {
        match self {
            Family::BM => "BM",
            Family::TCT => "TCT",
            Family::FUS => "FUS",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BM" | "BM25" => Ok(Family::BM),
            "TCT" | "EXTERNAL" => Ok(Family::TCT),
            "FUS" | "FUSED" => Ok(Family::FUS),
            _ => Err(Error::InvalidParam(format!(
                "unknown family {s:?}, expected BM, TCT or FUS"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEntry {
    /// Gold passages and their grades.
    pub members: BTreeMap<PassageId, u32>,
    pub designated: PassageId,
}

/// Gold passages per topic, with one designated member used as the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSet {
    entries: BTreeMap<TopicId, GoldEntry>,
}

impl GoldSet {
    pub fn get(&self, topic: &str) -> Option<&GoldEntry> {
        self.entries.get(topic)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TopicId, &GoldEntry)> + '_ {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_members(&self) -> usize {
        self.entries
            .values()
            .map(|e| e.members.len())
            .max()
            .unwrap_or(0)
    }
}

/// Picks the designated gold passage of every topic. Topics with one judged
/// passage use it; otherwise a member is drawn uniformly with an RNG seeded
/// from `seed`, visiting topics in ascending id order.
pub fn select_gold(qrels: &Qrels, seed: u64) -> Result<GoldSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = BTreeMap::new();
    for (topic, judged) in qrels.iter() {
        let members: BTreeMap<PassageId, u32> = judged
            .iter()
            .filter(|(_, &g)| g > 0)
            .map(|(p, &g)| (p.clone(), g))
            .collect();
        let designated = match members.len() {
            0 => return Err(Error::EmptyTopic(topic.to_string())),
            1 => members.keys().next().cloned(),
            n => members.keys().nth(rng.gen_range(0..n)).cloned(),
        }
        .expect("index within bounds");
        entries.insert(
            topic.clone(),
            GoldEntry {
                members,
                designated,
            },
        );
    }
    Ok(GoldSet { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    InternalBm25,
    ExternalRun,
    Fused,
}

impl SeedKind {
    pub fn family(self) -> Family {
        match self {
            SeedKind::InternalBm25 => Family::BM,
            SeedKind::ExternalRun => Family::TCT,
            SeedKind::Fused => Family::FUS,
        }
    }
}

/// Per-topic clairvoyant rankings, i.e. the seed system's ranking for the
/// designated gold passage of each topic.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSource {
    kind: SeedKind,
    rankings: BTreeMap<TopicId, RankedList>,
    fused_inputs: BTreeMap<TopicId, usize>,
}

impl SeedSource {
    /// Runs query-by-passage with the internal BM25 engine for every topic.
    pub fn internal_bm25(
        gold: &GoldSet,
        index: &InvertedIndex,
        collection: &PassageCollection,
        params: &Bm25Params,
        depth: usize,
        max_query_terms: Option<usize>,
    ) -> Result<Self> {
        let topics: Vec<(&TopicId, &GoldEntry)> = gold.iter().collect();
        let rankings = topics
            .par_iter()
            .map(|(topic, entry)| {
                let list = index
                    .query_by_passage(
                        params,
                        &entry.designated,
                        collection,
                        depth,
                        max_query_terms,
                    )?
                    .with_topic((*topic).clone());
                Ok(((*topic).clone(), list))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Self {
            kind: SeedKind::InternalBm25,
            rankings,
            fused_inputs: BTreeMap::new(),
        })
    }

    /// Wraps an externally produced run whose list for each topic is the
    /// ranking for that topic's designated gold passage.
    pub fn external(run: &Run) -> Self {
        let rankings = run
            .lists()
            .map(|l| (l.topic().clone(), l.clone()))
            .collect();
        Self {
            kind: SeedKind::ExternalRun,
            rankings,
            fused_inputs: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> SeedKind {
        self.kind
    }

    pub fn family(&self) -> Family {
        self.kind.family()
    }

    pub fn ranking(&self, topic: &str) -> Option<&RankedList> {
        self.rankings.get(topic)
    }

    pub fn rankings(&self) -> impl Iterator<Item = &RankedList> + '_ {
        self.rankings.values()
    }

    /// Number of second-stage lists fused for `topic` (fused sources only).
    pub fn fused_input_count(&self, topic: &str) -> Option<usize> {
        self.fused_inputs.get(topic).copied()
    }

    /// The seed rankings as a run, tagged by family.
    pub fn to_run(&self) -> Run {
        let tag = self.family().name().to_ascii_lowercase();
        let mut run = Run::new(tag.clone());
        for l in self.rankings.values() {
            run.insert(l.clone().with_tag(tag.clone()))
                .expect("tag was just set");
        }
        run
    }
}

/// Gold judgments plus `d` ordered additions per topic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolatedQrels {
    base: Qrels,
    d: usize,
    family: Family,
    additions: BTreeMap<TopicId, Vec<PassageId>>,
    excluded: Vec<DepthShortfall>,
}

impl ExtrapolatedQrels {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn base(&self) -> &Qrels {
        &self.base
    }

    pub fn additions(&self, topic: &str) -> Option<&[PassageId]> {
        self.additions.get(topic).map(Vec::as_slice)
    }

    /// Topics dropped under `allow_partial` because their ranking was too shallow.
    pub fn excluded(&self) -> &[DepthShortfall] {
        &self.excluded
    }

    /// The same extrapolation truncated to `d` additions per topic.
    pub fn prefix(&self, d: usize) -> Result<Self> {
        if d > self.d {
            return Err(Error::InvalidParam(format!(
                "cannot take {d} additions from an extrapolation of depth {}",
                self.d
            )));
        }
        Ok(Self {
            base: self.base.clone(),
            d,
            family: self.family,
            additions: self
                .additions
                .iter()
                .map(|(t, a)| (t.clone(), a[..d].to_vec()))
                .collect(),
            excluded: self.excluded.clone(),
        })
    }

    /// Materialises the judgments. Excluded topics are absent.
    pub fn to_qrels(&self) -> Qrels {
        self.qrels_with(self.d)
    }

    /// Materialises the judgments using only the first `d` additions.
    pub fn qrels_at(&self, d: usize) -> Result<Qrels> {
        if d > self.d {
            return Err(Error::InvalidParam(format!(
                "cannot take {d} additions from an extrapolation of depth {}",
                self.d
            )));
        }
        Ok(self.qrels_with(d))
    }

    fn qrels_with(&self, d: usize) -> Qrels {
        let mut q = Qrels::new();
        for (topic, judged) in self.base.iter() {
            let Some(adds) = self.additions.get(topic.as_str()) else {
                continue;
            };
            for (p, &g) in judged {
                q.insert(topic.clone(), p.clone(), g)
                    .expect("gold grades are positive");
            }
            for p in &adds[..d] {
                q.insert(topic.clone(), p.clone(), 1)
                    .expect("additions are disjoint from gold");
            }
        }
        q
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExtrapolateOptions {
    /// Only the first `depth` entries of each seed ranking are considered.
    pub depth: Option<usize>,
    /// Drop topics whose ranking is too shallow instead of failing.
    pub allow_partial: bool,
}

/// Builds `J(q) = G(q) ∪ first_d(ranking \ G(q))` for every gold topic.
pub fn extrapolate_seed(
    gold: &GoldSet,
    source: &SeedSource,
    d: usize,
    opts: ExtrapolateOptions,
) -> Result<ExtrapolatedQrels> {
    let mut additions = BTreeMap::new();
    let mut shortfalls = Vec::new();
    for (topic, entry) in gold.iter() {
        let ranking = source.ranking(topic.as_str());
        let considered = ranking.map_or(0, |r| opts.depth.map_or(r.len(), |cap| cap.min(r.len())));
        let picked: Vec<PassageId> = ranking
            .into_iter()
            .flat_map(|r| r.passages().take(considered))
            .filter(|p| !entry.members.contains_key(*p))
            .take(d)
            .cloned()
            .collect();
        if picked.len() < d {
            shortfalls.push(DepthShortfall {
                topic: topic.to_string(),
                needed: d,
                available: picked.len(),
            });
            continue;
        }
        additions.insert(topic.clone(), picked);
    }
    if !shortfalls.is_empty() && !opts.allow_partial {
        return Err(Error::InsufficientDepth(shortfalls));
    }
    for s in &shortfalls {
        log::warn!(
            "excluding topic {} from {} extrapolation: {} of {} additions available",
            s.topic,
            source.family(),
            s.available,
            s.needed
        );
    }
    let mut base = Qrels::new();
    for (topic, entry) in gold.iter() {
        for (p, &g) in &entry.members {
            base.insert(topic.clone(), p.clone(), g)?;
        }
    }
    Ok(ExtrapolatedQrels {
        base,
        d,
        family: source.family(),
        additions,
        excluded: shortfalls,
    })
}

/// Externally supplied rankings standing in for a second retrieval system.
#[derive(Debug, Clone, Default)]
pub struct ExternalSeedRuns {
    /// Ranking for each topic's designated gold passage, keyed by topic.
    pub first_stage: Run,
    /// Rankings keyed by the id of the passage used as the query.
    pub second_stage: Option<Run>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionPlan {
    /// Passages taken from the top of each first-stage ranking.
    pub fan_out: usize,
    /// Depth of every first- and second-stage ranking.
    pub rerun_depth: usize,
    pub rbc: RbcParams,
    /// Skip gold passages when choosing the fan-out queries.
    pub exclude_gold: bool,
    pub max_query_terms: Option<usize>,
}

impl Default for FusionPlan {
    fn default() -> Self {
        Self {
            fan_out: 5,
            rerun_depth: 100,
            rbc: RbcParams::default(),
            exclude_gold: false,
            max_query_terms: None,
        }
    }
}

fn fan_out_picks<'a>(
    list: &'a RankedList,
    gold: &GoldEntry,
    plan: &FusionPlan,
    n: usize,
) -> Vec<&'a PassageId> {
    list.passages()
        .filter(|p| !(plan.exclude_gold && gold.members.contains_key(*p)))
        .take(n)
        .collect()
}

/// Two-stage fused seed rankings.
///
/// Stage one ranks the collection for each topic's designated gold passage
/// with BM25 and, when available, the external system. The top `fan_out`
/// passages of each stage-one ranking are then each issued as queries to
/// every system with stage-two rankings: BM25 always, the external system
/// when `second_stage` runs are supplied. All stage-two rankings are fused
/// with RBC. Without any external runs the top `2 * fan_out` passages of
/// the BM25 stage-one ranking are used, so BM25-only fusion also combines
/// `2 * fan_out` lists.
pub fn build_fused_seed(
    gold: &GoldSet,
    index: &InvertedIndex,
    collection: &PassageCollection,
    bm25: &Bm25Params,
    external: Option<&ExternalSeedRuns>,
    plan: &FusionPlan,
) -> Result<SeedSource> {
    plan.rbc.validate()?;
    if plan.fan_out == 0 || plan.rerun_depth == 0 {
        return Err(Error::InvalidParam(
            "fan_out and rerun_depth must be >= 1".into(),
        ));
    }
    if let Some(ext) = external {
        let missing: Vec<(String, String)> = gold
            .iter()
            .filter(|(t, _)| ext.first_stage.get(t.as_str()).is_none())
            .map(|(t, e)| (t.to_string(), e.designated.to_string()))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingSecondStage(missing));
        }
    }

    enum TopicOutcome {
        Fused(RankedList, usize),
        Missing(Vec<(String, String)>),
    }

    let topics: Vec<(&TopicId, &GoldEntry)> = gold.iter().collect();
    let outcomes = topics
        .par_iter()
        .map(|(topic, entry)| -> Result<TopicOutcome> {
            let bm_first = index.query_by_passage(
                bm25,
                &entry.designated,
                collection,
                plan.rerun_depth,
                plan.max_query_terms,
            )?;
            let queries: Vec<PassageId> = match external {
                Some(ext) => {
                    let ext_first = ext
                        .first_stage
                        .get(topic.as_str())
                        .expect("checked above")
                        .clone()
                        .truncated(plan.rerun_depth);
                    fan_out_picks(&bm_first, entry, plan, plan.fan_out)
                        .into_iter()
                        .chain(fan_out_picks(&ext_first, entry, plan, plan.fan_out))
                        .cloned()
                        .collect()
                }
                None => fan_out_picks(&bm_first, entry, plan, 2 * plan.fan_out)
                    .into_iter()
                    .cloned()
                    .collect(),
            };
            let mut lists = Vec::new();
            let mut missing = Vec::new();
            for q in &queries {
                let bm = index.query_by_passage(
                    bm25,
                    q,
                    collection,
                    plan.rerun_depth,
                    plan.max_query_terms,
                )?;
                lists.push(bm.with_topic((*topic).clone()));
                if let Some(second) = external.and_then(|e| e.second_stage.as_ref()) {
                    match second.get(q.as_str()) {
                        Some(l) => lists.push(
                            l.clone()
                                .truncated(plan.rerun_depth)
                                .with_topic((*topic).clone()),
                        ),
                        None => missing.push((topic.to_string(), q.to_string())),
                    }
                }
            }
            if !missing.is_empty() {
                return Ok(TopicOutcome::Missing(missing));
            }
            if lists.is_empty() {
                return Ok(TopicOutcome::Fused(
                    RankedList::empty((*topic).clone(), "fus"),
                    0,
                ));
            }
            let n = lists.len();
            Ok(TopicOutcome::Fused(rbc_fuse(&lists, &plan.rbc, "fus")?, n))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rankings = BTreeMap::new();
    let mut fused_inputs = BTreeMap::new();
    let mut missing = Vec::new();
    for ((topic, _), outcome) in topics.iter().zip(outcomes) {
        match outcome {
            TopicOutcome::Fused(list, n) => {
                rankings.insert((*topic).clone(), list);
                fused_inputs.insert((*topic).clone(), n);
            }
            TopicOutcome::Missing(m) => missing.extend(m),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingSecondStage(missing));
    }
    Ok(SeedSource {
        kind: SeedKind::Fused,
        rankings,
        fused_inputs,
    })
}

/// Provenance written next to every extrapolated qrels file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrelsManifest {
    pub family: Family,
    pub d: usize,
    pub rng_seed: u64,
    pub seed_depth: usize,
    pub n_topics: usize,
    pub excluded_topics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bm25: Option<Bm25Params>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stemming: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionPlan>,
    pub tool_version: String,
}

impl QrelsManifest {
    pub fn for_extrapolation(ext: &ExtrapolatedQrels, rng_seed: u64, seed_depth: usize) -> Self {
        Self {
            family: ext.family,
            d: ext.d,
            rng_seed,
            seed_depth,
            n_topics: ext.additions.len(),
            excluded_topics: ext.excluded.iter().map(|s| s.topic.clone()).collect(),
            bm25: None,
            stemming: None,
            fusion: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Writes `<stem>.qrels` and `<stem>.manifest.json` into `dir`.
pub fn write_extrapolated(
    dir: &Path,
    stem: &str,
    ext: &ExtrapolatedQrels,
    manifest: &QrelsManifest,
) -> Result<()> {
    crate::trec_io::write_qrels_file(&dir.join(format!("{stem}.qrels")), &ext.to_qrels())?;
    let json = serde_json::to_string_pretty(manifest)?;
    let path = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))
}
