//! Parsing and writing of the plain-text formats the toolkit exchanges:
//! TREC 6-column runs, TREC 4-column qrels, and `id<TAB>text` collections
//! and query files.
//!
//! All ranked lists produced here obey one ordering contract: descending
//! score, ties broken by ascending passage id, ranks rewritten `1..n`.
//! Writers emit LF-terminated lines with topics and passages in sorted order,
//! so writing a parsed value again is byte-identical.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

macro_rules! token_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Result<Self> {
                let value = value.into();
                if value.is_empty() || value.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidId(value));
                }
                Ok(Self(value))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl std::str::FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }
    };
}

token_id!(
    /// Identifier of a topic (query). Never empty, never contains whitespace.
    TopicId
);
token_id!(
    /// Identifier of a retrievable passage. Never empty, never contains whitespace.
    PassageId
);

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub passage: PassageId,
    pub rank: usize,
    pub score: f64,
}

/// The canonical ordering: score descending, then passage id ascending.
pub fn rank_order(a: (&PassageId, f64), b: (&PassageId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// One topic's ranked output.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    topic: TopicId,
    tag: String,
    entries: Vec<ScoredEntry>,
}

impl RankedList {
    /// Builds a list from unordered `(passage, score)` pairs, sorting into the
    /// canonical order and assigning ranks.
    pub fn from_scored<I>(topic: TopicId, tag: impl Into<String>, scored: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PassageId, f64)>,
    {
        let mut scored: Vec<(PassageId, f64)> = scored.into_iter().collect();
        for (p, s) in &scored {
            if !s.is_finite() {
                return Err(Error::NonFiniteScore(p.to_string()));
            }
        }
        scored.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        let mut seen = HashSet::with_capacity(scored.len());
        for (p, _) in &scored {
            if !seen.insert(p) {
                return Err(Error::DuplicatePassage {
                    topic: topic.to_string(),
                    passage: p.to_string(),
                });
            }
        }
        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (passage, score))| ScoredEntry {
                passage,
                rank: i + 1,
                score,
            })
            .collect();
        Ok(Self {
            topic,
            tag: tag.into(),
            entries,
        })
    }

    pub fn empty(topic: TopicId, tag: impl Into<String>) -> Self {
        Self {
            topic,
            tag: tag.into(),
            entries: Vec::new(),
        }
    }

    pub fn topic(&self) -> &TopicId {
        &self.topic
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn entries(&self) -> &[ScoredEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn passages(&self) -> impl Iterator<Item = &PassageId> + '_ {
        self.entries.iter().map(|e| &e.passage)
    }

    /// 1-based rank of `passage`, if present.
    pub fn rank_of(&self, passage: &PassageId) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| &e.passage == passage)
            .map(|i| i + 1)
    }

    pub fn truncate(&mut self, depth: usize) {
        self.entries.truncate(depth);
    }

    pub fn truncated(mut self, depth: usize) -> Self {
        self.truncate(depth);
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn with_topic(mut self, topic: TopicId) -> Self {
        self.topic = topic;
        self
    }
}

/// A system's output over a set of topics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Run {
    tag: String,
    lists: BTreeMap<TopicId, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            lists: BTreeMap::new(),
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Adds a list, replacing any previous list for the same topic. The
    /// list's tag must agree with the run's.
    pub fn insert(&mut self, list: RankedList) -> Result<()> {
        if list.tag != self.tag {
            return Err(Error::TagMismatch {
                expected: self.tag.clone(),
                found: list.tag,
            });
        }
        self.lists.insert(list.topic.clone(), list);
        Ok(())
    }

    /// Renames the run, rewriting every list's tag.
    pub fn retag(&mut self, tag: impl Into<String>) {
        self.tag = tag.into();
        for list in self.lists.values_mut() {
            list.tag = self.tag.clone();
        }
    }

    pub fn get(&self, topic: &str) -> Option<&RankedList> {
        self.lists.get(topic)
    }

    pub fn lists(&self) -> impl Iterator<Item = &RankedList> + '_ {
        self.lists.values()
    }

    pub fn topics(&self) -> impl Iterator<Item = &TopicId> + '_ {
        self.lists.keys()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn truncate(&mut self, depth: usize) {
        for list in self.lists.values_mut() {
            list.truncate(depth);
        }
    }
}

fn read_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.split(b'\n').enumerate().map(|(i, bytes)| {
        let line = i + 1;
        let mut bytes = bytes.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if bytes.last() == Some(&b'\r') {
            bytes.pop();
        }
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
            line,
            msg: "invalid UTF-8".into(),
        })?;
        Ok((line, text))
    })
}

/// Parses a TREC run. Column 2 is ignored (conventionally `Q0`) and the rank
/// column is validated but replaced by the canonical order. Lists are
/// truncated to `depth_cap` after sorting.
pub fn parse_run<R: BufRead>(reader: R, depth_cap: Option<usize>) -> Result<Run> {
    let mut tag: Option<String> = None;
    let mut per_topic: BTreeMap<TopicId, Vec<(PassageId, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(TopicId, PassageId)> = HashSet::new();
    for item in read_lines(reader) {
        let (line, text) = item?;
        let cols: Vec<&str> = text.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 6 columns, found {}", cols.len()),
            });
        }
        let topic = TopicId::new(cols[0])?;
        let passage = PassageId::new(cols[2])?;
        cols[3].parse::<i64>().map_err(|_| Error::Parse {
            line,
            msg: format!("non-numeric rank {:?}", cols[3]),
        })?;
        let score: f64 = cols[4].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("non-numeric score {:?}", cols[4]),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite score {:?}", cols[4]),
            });
        }
        match &tag {
            None => tag = Some(cols[5].to_string()),
            Some(t) if t != cols[5] => {
                return Err(Error::TagMismatch {
                    expected: t.clone(),
                    found: cols[5].to_string(),
                })
            }
            Some(_) => {}
        }
        if !seen.insert((topic.clone(), passage.clone())) {
            return Err(Error::Duplicate {
                line,
                what: format!("(topic, passage) pair ({topic}, {passage})"),
            });
        }
        per_topic.entry(topic).or_default().push((passage, score));
    }
    let tag = tag.unwrap_or_default();
    let mut run = Run::new(tag.clone());
    for (topic, scored) in per_topic {
        let mut list = RankedList::from_scored(topic, tag.clone(), scored)?;
        if let Some(cap) = depth_cap {
            list.truncate(cap);
        }
        run.insert(list)?;
    }
    Ok(run)
}

pub fn write_run<W: Write>(run: &Run, mut out: W) -> std::io::Result<()> {
    for list in run.lists() {
        for e in list.entries() {
            writeln!(
                out,
                "{} Q0 {} {} {} {}",
                list.topic, e.passage, e.rank, e.score, list.tag
            )?;
        }
    }
    Ok(())
}

pub fn run_to_string(run: &Run) -> String {
    let mut buf = Vec::new();
    write_run(run, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("run output is UTF-8")
}

/// Per-topic judgments: passage id to positive grade.
pub type TopicJudgments = BTreeMap<PassageId, u32>;

/// Relevance judgments. Every grade is at least 1 and every topic has at
/// least one judged passage.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels {
    judgments: BTreeMap<TopicId, TopicJudgments>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a judgment. Re-inserting an identical judgment is a no-op;
    /// a different grade for the same pair is a conflict.
    pub fn insert(&mut self, topic: TopicId, passage: PassageId, grade: u32) -> Result<()> {
        self.insert_at(0, topic, passage, grade)
    }

    fn insert_at(
        &mut self,
        line: usize,
        topic: TopicId,
        passage: PassageId,
        grade: u32,
    ) -> Result<()> {
        if grade == 0 {
            return Err(Error::NonPositiveGrade {
                line,
                topic: topic.to_string(),
                passage: passage.to_string(),
                grade: 0,
            });
        }
        let topic_map = self.judgments.entry(topic.clone()).or_default();
        match topic_map.entry(passage) {
            Entry::Vacant(v) => {
                v.insert(grade);
            }
            Entry::Occupied(o) => {
                if *o.get() != grade {
                    return Err(Error::GradeConflict {
                        line,
                        topic: topic.to_string(),
                        passage: o.key().to_string(),
                        first: *o.get(),
                        second: grade,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, topic: &str) -> Option<&TopicJudgments> {
        self.judgments.get(topic)
    }

    pub fn grade(&self, topic: &str, passage: &str) -> Option<u32> {
        self.judgments.get(topic)?.get(passage).copied()
    }

    pub fn topics(&self) -> impl Iterator<Item = &TopicId> + '_ {
        self.judgments.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TopicId, &TopicJudgments)> + '_ {
        self.judgments.iter()
    }

    pub fn n_topics(&self) -> usize {
        self.judgments.len()
    }

    pub fn n_judgments(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn remove_topic(&mut self, topic: &str) -> Option<TopicJudgments> {
        self.judgments.remove(topic)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QrelsOptions {
    /// Drop grade-0 (and negative) lines instead of failing.
    pub lenient: bool,
}

pub fn parse_qrels<R: BufRead>(reader: R, opts: QrelsOptions) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    let mut dropped: BTreeSet<TopicId> = BTreeSet::new();
    for item in read_lines(reader) {
        let (line, text) = item?;
        let cols: Vec<&str> = text.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        let topic = TopicId::new(cols[0])?;
        let passage = PassageId::new(cols[2])?;
        let grade: i64 = cols[3].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("non-numeric grade {:?}", cols[3]),
        })?;
        if grade <= 0 {
            if opts.lenient {
                dropped.insert(topic);
                continue;
            }
            return Err(Error::NonPositiveGrade {
                line,
                topic: topic.to_string(),
                passage: passage.to_string(),
                grade,
            });
        }
        let grade = u32::try_from(grade).map_err(|_| Error::Parse {
            line,
            msg: format!("grade {grade} out of range"),
        })?;
        qrels.insert_at(line, topic, passage, grade)?;
    }
    let unjudged = dropped.iter().filter(|t| qrels.get(t.as_str()).is_none()).count();
    if unjudged > 0 {
        log::warn!("{unjudged} topics have no positive judgments and are excluded");
    }
    Ok(qrels)
}

pub fn write_qrels<W: Write>(qrels: &Qrels, mut out: W) -> std::io::Result<()> {
    for (topic, judged) in qrels.iter() {
        for (passage, grade) in judged {
            writeln!(out, "{topic} 0 {passage} {grade}")?;
        }
    }
    Ok(())
}

pub fn qrels_to_string(qrels: &Qrels) -> String {
    let mut buf = Vec::new();
    write_qrels(qrels, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("qrels output is UTF-8")
}

/// Passage id to text. Passages with empty text are kept but listed as
/// degenerate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassageCollection {
    passages: BTreeMap<PassageId, String>,
    degenerate: Vec<PassageId>,
}

impl PassageCollection {
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PassageId, String)>,
    {
        let mut c = Self::default();
        for (i, (id, text)) in pairs.into_iter().enumerate() {
            c.add(i + 1, id, text)?;
        }
        Ok(c)
    }

    fn add(&mut self, line: usize, id: PassageId, text: String) -> Result<()> {
        if text.trim().is_empty() {
            self.degenerate.push(id.clone());
        }
        match self.passages.entry(id) {
            Entry::Vacant(v) => {
                v.insert(text);
                Ok(())
            }
            Entry::Occupied(o) => Err(Error::Duplicate {
                line,
                what: format!("passage id {}", o.key()),
            }),
        }
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.passages.get(id).map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.passages.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PassageId, &str)> + '_ {
        self.passages.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn degenerate(&self) -> &[PassageId] {
        &self.degenerate
    }
}

/// Topic id to query text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicSet {
    topics: BTreeMap<TopicId, String>,
}

impl TopicSet {
    pub fn get(&self, id: &str) -> Option<&str> {
        self.topics.get(id).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TopicId, &str)> + '_ {
        self.topics.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn insert(&mut self, id: TopicId, text: String) -> Result<()> {
        match self.topics.entry(id) {
            Entry::Vacant(v) => {
                v.insert(text);
                Ok(())
            }
            Entry::Occupied(o) => Err(Error::Duplicate {
                line: 0,
                what: format!("topic id {}", o.key()),
            }),
        }
    }
}

fn parse_tsv<R: BufRead>(
    reader: R,
    mut add: impl FnMut(usize, &str, String) -> Result<()>,
) -> Result<()> {
    for item in read_lines(reader) {
        let (line, text) = item?;
        if text.is_empty() {
            continue;
        }
        let (id, body) = text.split_once('\t').ok_or_else(|| Error::Parse {
            line,
            msg: "missing tab separator".into(),
        })?;
        add(line, id, body.to_string())?;
    }
    Ok(())
}

/// Loads an `id<TAB>text` passage file.
pub fn load_collection<R: BufRead>(reader: R) -> Result<PassageCollection> {
    let mut c = PassageCollection::default();
    parse_tsv(reader, |line, id, text| {
        c.add(line, PassageId::new(id)?, text)
    })?;
    Ok(c)
}

/// Loads an `id<TAB>query` topic file.
pub fn load_topics<R: BufRead>(reader: R) -> Result<TopicSet> {
    let mut t = TopicSet::default();
    parse_tsv(reader, |line, id, text| {
        t.insert(TopicId::new(id)?, text).map_err(|e| match e {
            Error::Duplicate { what, .. } => Error::Duplicate { line, what },
            other => other,
        })
    })?;
    Ok(t)
}

/// Judged-passages-per-topic histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrelsStats {
    pub n_topics: usize,
    pub label_histogram: BTreeMap<usize, usize>,
}

impl QrelsStats {
    pub fn single_label_fraction(&self) -> f64 {
        if self.n_topics == 0 {
            return 0.0;
        }
        self.label_histogram.get(&1).copied().unwrap_or(0) as f64 / self.n_topics as f64
    }

    pub fn max_labels(&self) -> usize {
        self.label_histogram
            .keys()
            .next_back()
            .copied()
            .unwrap_or(0)
    }
}

impl fmt::Display for QrelsStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "topics\t{}", self.n_topics)?;
        for (labels, count) in &self.label_histogram {
            let pct = 100.0 * *count as f64 / self.n_topics.max(1) as f64;
            writeln!(f, "labels={labels}\t{count}\t{pct:.1}%")?;
        }
        Ok(())
    }
}

pub fn qrels_stats(qrels: &Qrels) -> QrelsStats {
    let mut label_histogram = BTreeMap::new();
    for (_, judged) in qrels.iter() {
        *label_histogram.entry(judged.len()).or_insert(0) += 1;
    }
    QrelsStats {
        n_topics: qrels.n_topics(),
        label_histogram,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn read_run_file(path: &Path, depth_cap: Option<usize>) -> Result<Run> {
    parse_run(open(path)?, depth_cap)
}

pub fn read_qrels_file(path: &Path, opts: QrelsOptions) -> Result<Qrels> {
    parse_qrels(open(path)?, opts)
}

pub fn read_collection_file(path: &Path) -> Result<PassageCollection> {
    load_collection(open(path)?)
}

pub fn read_topics_file(path: &Path) -> Result<TopicSet> {
    load_topics(open(path)?)
}

pub(crate) fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_run_file(path: &Path, run: &Run) -> Result<()> {
    write_file(path, |w| write_run(run, w))
}

pub fn write_qrels_file(path: &Path, qrels: &Qrels) -> Result<()> {
    write_file(path, |w| write_qrels(qrels, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tid(s: &str) -> TopicId {
        TopicId::new(s).unwrap()
    }
    fn pid(s: &str) -> PassageId {
        PassageId::new(s).unwrap()
    }

    #[test]
    fn parses_single_run_line() {
        let run = parse_run("q1 Q0 d7 1 12.5 bm25\n".as_bytes(), None).unwrap();
        assert_eq!(run.tag(), "bm25");
        let list = run.get("q1").unwrap();
        assert_eq!(
            list.entries(),
            &[ScoredEntry {
                passage: pid("d7"),
                rank: 1,
                score: 12.5
            }]
        );
    }

    #[test]
    fn reorders_by_score() {
        let run = parse_run("q1 Q0 a 1 5.0 t\nq1 Q0 b 2 9.0 t\n".as_bytes(), None).unwrap();
        let ids: Vec<_> = run
            .get("q1")
            .unwrap()
            .passages()
            .map(|p| p.as_str())
            .collect();
        assert_eq!(ids, ["b", "a"]);
    }

    #[test]
    fn score_ties_break_on_passage_id() {
        let run = parse_run(
            "q1 Q0 z 1 1.0 t\nq1 Q0 m 2 1.0 t\nq1 Q0 a 3 1.0 t\n".as_bytes(),
            None,
        )
        .unwrap();
        let ids: Vec<_> = run
            .get("q1")
            .unwrap()
            .passages()
            .map(|p| p.as_str())
            .collect();
        assert_eq!(ids, ["a", "m", "z"]);
    }

    #[test]
    fn depth_cap_truncates() {
        let text: String = (0..15)
            .map(|i| format!("q1 Q0 d{i} {} {} t\n", i + 1, 100 - i))
            .collect();
        let run = parse_run(text.as_bytes(), Some(10)).unwrap();
        assert_eq!(run.get("q1").unwrap().len(), 10);
    }

    #[test]
    fn run_errors_carry_line_numbers() {
        let err = parse_run("q1 Q0 a 1 1.0 t\nq1 Q0 b 2 t\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_run("q1 Q0 a x 1.0 t\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_run("q1 Q0 a 1 abc t\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_run("q1 Q0 a 1 NaN t\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_run_pair_rejected() {
        let err = parse_run("q1 Q0 a 1 1.0 t\nq1 Q0 a 2 0.5 t\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Duplicate { line: 2, .. }), "{err}");
    }

    #[test]
    fn mixed_tags_rejected() {
        let err = parse_run("q1 Q0 a 1 1.0 t\nq2 Q0 a 1 1.0 u\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::TagMismatch { .. }));
    }

    #[test]
    fn write_run_single_line_and_empty() {
        let mut run = Run::new("bm25");
        run.insert(RankedList::from_scored(tid("q1"), "bm25", [(pid("d7"), 12.5)]).unwrap())
            .unwrap();
        assert_eq!(run_to_string(&run), "q1 Q0 d7 1 12.5 bm25\n");
        assert_eq!(run_to_string(&Run::new("x")), "");
    }

    #[test]
    fn crlf_input_accepted() {
        let run = parse_run("q1 Q0 a 1 1.0 t\r\n".as_bytes(), None).unwrap();
        assert_eq!(run.tag(), "t");
    }

    #[test]
    fn qrels_basic_and_strict_zero() {
        let q = parse_qrels("q1 0 d3 1\n".as_bytes(), QrelsOptions::default()).unwrap();
        assert_eq!(q.grade("q1", "d3"), Some(1));
        let err = parse_qrels("q1 0 d3 0\n".as_bytes(), QrelsOptions::default()).unwrap_err();
        assert!(err.to_string().contains("non-positive grade"), "{err}");
        let q = parse_qrels(
            "q1 0 d3 0\nq1 0 d4 2\n".as_bytes(),
            QrelsOptions { lenient: true },
        )
        .unwrap();
        assert_eq!(q.n_judgments(), 1);
        assert_eq!(q.grade("q1", "d4"), Some(2));
    }

    #[test]
    fn qrels_lenient_drops_all_zero_topic() {
        let q = parse_qrels(
            "q1 0 d3 0\nq2 0 d1 1\n".as_bytes(),
            QrelsOptions { lenient: true },
        )
        .unwrap();
        assert_eq!(q.n_topics(), 1);
        assert!(q.get("q1").is_none());
    }

    #[test]
    fn qrels_conflict_and_repeat() {
        let q = parse_qrels("q1 0 d3 1\nq1 0 d3 1\n".as_bytes(), QrelsOptions::default()).unwrap();
        assert_eq!(q.n_judgments(), 1);
        let err =
            parse_qrels("q1 0 d3 1\nq1 0 d3 2\n".as_bytes(), QrelsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::GradeConflict { line: 2, .. }));
        let err = parse_qrels("q1 0 d3\n".as_bytes(), QrelsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn write_qrels_sorted() {
        let mut q = Qrels::new();
        q.insert(tid("q2"), pid("b"), 1).unwrap();
        q.insert(tid("q1"), pid("d3"), 1).unwrap();
        q.insert(tid("q2"), pid("a"), 2).unwrap();
        assert_eq!(qrels_to_string(&q), "q1 0 d3 1\nq2 0 a 2\nq2 0 b 1\n");
        assert_eq!(qrels_to_string(&Qrels::new()), "");
    }

    #[test]
    fn collection_loading() {
        let c = load_collection("7\thello world\n".as_bytes()).unwrap();
        assert_eq!(c.get("7"), Some("hello world"));
        let c = load_collection("1\ta\n2\tb\n3\tc\td\n".as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.get("3"), Some("c\td"));
        let err = load_collection("1\ta\n1\tb\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Duplicate { line: 2, .. }));
        let err = load_collection("1\ta\n2 b\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let c = load_collection("1\t\n".as_bytes()).unwrap();
        assert_eq!(c.degenerate(), &[pid("1")]);
    }

    #[test]
    fn topics_loading() {
        let t = load_topics("q1\thow long is super bowl game\n".as_bytes()).unwrap();
        assert_eq!(t.get("q1"), Some("how long is super bowl game"));
        assert!(load_topics("q1\ta\nq1\tb\n".as_bytes()).is_err());
    }

    #[test]
    fn stats_single_topic() {
        let q = parse_qrels("q1 0 d1 1\n".as_bytes(), QrelsOptions::default()).unwrap();
        let s = qrels_stats(&q);
        assert_eq!(s.n_topics, 1);
        assert_eq!(s.label_histogram, BTreeMap::from([(1, 1)]));
        assert_eq!(s.single_label_fraction(), 1.0);
    }

    #[test]
    fn ids_reject_whitespace() {
        assert!(TopicId::new("a b").is_err());
        assert!(PassageId::new("").is_err());
    }

    #[test]
    fn ranked_list_rejects_duplicates_anywhere() {
        let err = RankedList::from_scored(
            tid("q"),
            "t",
            [(pid("a"), 3.0), (pid("b"), 2.0), (pid("a"), 1.0)],
        );
        assert!(matches!(err, Err(Error::DuplicatePassage { .. })));
    }
}
