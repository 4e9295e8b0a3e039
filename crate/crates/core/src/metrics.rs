//! Cutoff effectiveness metrics: reciprocal rank, average precision and NDCG.
//!
//! Passages missing from the judgments are non-relevant. RR and AP treat any
//! positive grade as relevant; NDCG uses the grade itself as the gain.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trec_io::{PassageId, Qrels, RankedList, Run, TopicId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    RR,
    AP,
    NDCG,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::RR => "RR",
            MetricKind::AP => "AP",
            MetricKind::NDCG => "NDCG",
        }
    }
}

/// A metric at a rank cutoff, written `RR@10`, `AP@10`, `NDCG@10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MetricId {
    pub kind: MetricKind,
    pub cutoff: usize,
}

impl MetricId {
    pub fn new(kind: MetricKind, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidParam("metric cutoff must be >= 1".into()));
        }
        Ok(Self { kind, cutoff })
    }

    pub fn score<J: Judgments + ?Sized>(&self, list: &RankedList, judged: &J) -> f64 {
        match self.kind {
            MetricKind::RR => rr_at_k(list, judged, self.cutoff),
            MetricKind::AP => ap_at_k(list, judged, self.cutoff),
            MetricKind::NDCG => ndcg_at_k(list, judged, self.cutoff),
        }
    }

    /// The three metrics reported by default, all at cutoff 10.
    pub fn defaults() -> Vec<MetricId> {
        [MetricKind::RR, MetricKind::AP, MetricKind::NDCG]
            .into_iter()
            .map(|kind| MetricId { kind, cutoff: 10 })
            .collect()
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind.name(), self.cutoff)
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParam(format!("unrecognised metric {s:?}, expected e.g. RR@10"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let kind = match name.to_ascii_uppercase().as_str() {
            "RR" | "MRR" | "RECIP_RANK" => MetricKind::RR,
            "AP" | "MAP" => MetricKind::AP,
            "NDCG" => MetricKind::NDCG,
            _ => return Err(bad()),
        };
        let cutoff = k.parse().map_err(|_| bad())?;
        MetricId::new(kind, cutoff)
    }
}

impl TryFrom<String> for MetricId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MetricId> for String {
    fn from(m: MetricId) -> String {
        m.to_string()
    }
}

/// Read access to one topic's judgments.
pub trait Judgments {
    /// Grade of `passage`, 0 when unjudged.
    fn grade(&self, passage: &PassageId) -> u32;
    /// All positive grades.
    fn positive_grades(&self) -> Vec<u32>;

    fn is_relevant(&self, passage: &PassageId) -> bool {
        self.grade(passage) > 0
    }

    fn n_relevant(&self) -> usize {
        self.positive_grades().len()
    }
}

impl Judgments for BTreeMap<PassageId, u32> {
    fn grade(&self, passage: &PassageId) -> u32 {
        self.get(passage).copied().unwrap_or(0)
    }
    fn positive_grades(&self) -> Vec<u32> {
        self.values().copied().filter(|&g| g > 0).collect()
    }
}

impl Judgments for HashMap<PassageId, u32> {
    fn grade(&self, passage: &PassageId) -> u32 {
        self.get(passage).copied().unwrap_or(0)
    }
    fn positive_grades(&self) -> Vec<u32> {
        self.values().copied().filter(|&g| g > 0).collect()
    }
}

impl Judgments for BTreeSet<PassageId> {
    fn grade(&self, passage: &PassageId) -> u32 {
        u32::from(self.contains(passage))
    }
    fn positive_grades(&self) -> Vec<u32> {
        vec![1; self.len()]
    }
}

impl Judgments for HashSet<PassageId> {
    fn grade(&self, passage: &PassageId) -> u32 {
        u32::from(self.contains(passage))
    }
    fn positive_grades(&self) -> Vec<u32> {
        vec![1; self.len()]
    }
}

pub fn rr_at_k<J: Judgments + ?Sized>(list: &RankedList, judged: &J, k: usize) -> f64 {
    list.passages()
        .take(k)
        .position(|p| judged.is_relevant(p))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// AP truncated at `k`, normalised by `min(|relevant|, k)`.
pub fn ap_at_k<J: Judgments + ?Sized>(list: &RankedList, judged: &J, k: usize) -> f64 {
    let n_rel = judged.n_relevant();
    if n_rel == 0 || k == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, p) in list.passages().take(k).enumerate() {
        if judged.is_relevant(p) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / n_rel.min(k) as f64
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// NDCG at `k` with linear gain and `1/log2(rank + 1)` discount. The ideal
/// ranking places every judged passage in grade order.
pub fn ndcg_at_k<J: Judgments + ?Sized>(list: &RankedList, judged: &J, k: usize) -> f64 {
    let dcg: f64 = list
        .passages()
        .take(k)
        .enumerate()
        .map(|(i, p)| f64::from(judged.grade(p)) * discount(i + 1))
        .sum();
    let mut ideal = judged.positive_grades();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| f64::from(g) * discount(i + 1))
        .sum();
    if idcg > 0.0 {
        (dcg / idcg).min(1.0)
    } else {
        0.0
    }
}

/// Per-topic scores of one system under one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub system: String,
    pub metric: MetricId,
    pub scores: BTreeMap<TopicId, f64>,
}

impl ScoreTable {
    /// Mean over topics, accumulated in topic order.
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.values().sum::<f64>() / self.scores.len() as f64
    }
}

/// Scores every topic present in `qrels`; judged topics the run does not
/// cover score 0.
pub fn evaluate(run: &Run, qrels: &Qrels, metric: MetricId) -> Result<ScoreTable> {
    let mut overlap = false;
    let mut scores = BTreeMap::new();
    for (topic, judged) in qrels.iter() {
        let score = match run.get(topic.as_str()) {
            Some(list) => {
                overlap = true;
                metric.score(list, judged)
            }
            None => 0.0,
        };
        scores.insert(topic.clone(), score);
    }
    if !overlap {
        return Err(Error::NoTopicOverlap {
            system: run.tag().to_string(),
        });
    }
    Ok(ScoreTable {
        system: run.tag().to_string(),
        metric,
        scores,
    })
}

/// Long-format per-topic CSV: `system,topic,metric,k,score`.
pub fn write_score_csv<W: Write>(tables: &[ScoreTable], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["system", "topic", "metric", "k", "score"])?;
    for t in tables {
        for (topic, score) in &t.scores {
            w.write_record([
                t.system.as_str(),
                topic.as_str(),
                t.metric.kind.name(),
                &t.metric.cutoff.to_string(),
                &score.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Per-system summary CSV: `system,metric,k,mean`.
pub fn write_mean_csv<W: Write>(tables: &[ScoreTable], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["system", "metric", "k", "mean"])?;
    for t in tables {
        w.write_record([
            t.system.as_str(),
            t.metric.kind.name(),
            &t.metric.cutoff.to_string(),
            &t.mean().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row of a per-system summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMean {
    pub system: String,
    pub metric: MetricId,
    pub mean: f64,
}

/// Reads the output of [`write_mean_csv`].
pub fn read_mean_csv<R: std::io::Read>(input: R) -> Result<Vec<SystemMean>> {
    #[derive(serde::Deserialize)]
    struct Row {
        system: String,
        metric: String,
        k: usize,
        mean: f64,
    }
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row?;
        let metric = format!("{}@{}", row.metric, row.k)
            .parse()
            .map_err(|e: Error| Error::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
        out.push(SystemMean {
            system: row.system,
            metric,
            mean: row.mean,
        });
    }
    Ok(out)
}
