//! A small deterministic test collection.
//!
//! Passages are grouped into topical clusters that share a private
//! vocabulary, so query-by-passage finds cluster neighbours. Each topic's
//! gold passages come from its cluster. System runs are drawn with graded
//! quality: better systems place gold passages higher more often.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{Bm25Params, InvertedIndex, TokenizerConfig};
use crate::error::{Error, Result};
use crate::extrapolate::{ExternalSeedRuns, GoldSet};
use crate::trec_io::{
    self, PassageCollection, PassageId, Qrels, RankedList, Run, TopicId, TopicSet,
};

#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub n_passages: usize,
    pub n_topics: usize,
    pub n_systems: usize,
    pub run_depth: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_passages: 200,
            n_topics: 25,
            n_systems: 10,
            run_depth: 10,
            seed: 2021,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCollection {
    pub collection: PassageCollection,
    pub topics: TopicSet,
    pub qrels: Qrels,
    pub systems: Vec<Run>,
    clusters: Vec<Vec<PassageId>>,
}

const TOPIC_TERMS: usize = 12;
const COMMON_TERMS: usize = 60;

fn pid(i: usize) -> PassageId {
    PassageId::new(format!("p{i:04}")).expect("generated ids are valid")
}

fn tid(t: usize) -> TopicId {
    TopicId::new(format!("q{t:03}")).expect("generated ids are valid")
}

impl SyntheticCollection {
    pub fn generate(spec: SyntheticSpec) -> Result<Self> {
        if spec.n_topics == 0 || spec.n_passages < 2 * spec.n_topics || spec.n_systems < 2 {
            return Err(Error::InvalidParam(
                "synthetic collection needs >= 1 topic, >= 2 passages per topic and >= 2 systems"
                    .into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let per_topic = spec.n_passages / spec.n_topics;

        let mut passages = Vec::with_capacity(spec.n_passages);
        let mut clusters: Vec<Vec<PassageId>> = vec![Vec::new(); spec.n_topics];
        for i in 0..spec.n_passages {
            let t = (i / per_topic).min(spec.n_topics - 1);
            let len = rng.gen_range(20..40);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.45) {
                        format!("t{t}w{}", rng.gen_range(0..TOPIC_TERMS))
                    } else {
                        format!("c{}", rng.gen_range(0..COMMON_TERMS))
                    }
                })
                .collect();
            passages.push((pid(i), words.join(" ")));
            clusters[t].push(pid(i));
        }
        let collection = PassageCollection::from_pairs(passages)?;

        let mut topics = TopicSet::default();
        let mut qrels = Qrels::new();
        for (t, cluster) in clusters.iter().enumerate() {
            let query: Vec<String> = (0..4)
                .map(|_| format!("t{t}w{}", rng.gen_range(0..TOPIC_TERMS)))
                .collect();
            topics.insert(tid(t), query.join(" "))?;
            qrels.insert(tid(t), cluster[0].clone(), 1)?;
            // Every fifth topic has a second gold passage.
            if t % 5 == 4 {
                qrels.insert(tid(t), cluster[1].clone(), 1)?;
            }
        }

        let mut systems = Vec::with_capacity(spec.n_systems);
        for s in 0..spec.n_systems {
            let quality = 0.9 - 0.8 * s as f64 / (spec.n_systems - 1) as f64;
            let tag = format!("sys{s:02}");
            let mut run = Run::new(tag.clone());
            for (t, cluster) in clusters.iter().enumerate() {
                let gold: Vec<&PassageId> = qrels
                    .get(tid(t).as_str())
                    .into_iter()
                    .flat_map(|m| m.keys())
                    .collect();
                let mut others: Vec<&PassageId> =
                    cluster.iter().filter(|p| !gold.contains(p)).collect();
                others.shuffle(&mut rng);
                let mut noise: Vec<usize> = (0..spec.n_passages).collect();
                noise.shuffle(&mut rng);
                let mut order: Vec<PassageId> = others.into_iter().cloned().collect();
                for p in noise.into_iter().map(pid) {
                    if !cluster.contains(&p) && order.len() < spec.run_depth * 3 {
                        order.push(p);
                    }
                }
                // Mix topical and off-topic passages, then insert the gold.
                let cut = ((1.0 - quality) * order.len() as f64 * 0.5) as usize;
                order[..cut.max(1)].shuffle(&mut rng);
                for g in &gold {
                    let slot = if rng.gen_bool(quality) {
                        rng.gen_range(0..3)
                    } else {
                        rng.gen_range(2..spec.run_depth + 5)
                    };
                    order.insert(slot.min(order.len()), (*g).clone());
                }
                order.truncate(spec.run_depth);
                let n = order.len();
                let scored = order
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| (p, (n - i) as f64));
                run.insert(RankedList::from_scored(tid(t), tag.clone(), scored)?)?;
            }
            systems.push(run);
        }

        Ok(Self {
            collection,
            topics,
            qrels,
            systems,
            clusters,
        })
    }

    pub fn clusters(&self) -> &[Vec<PassageId>] {
        &self.clusters
    }

    /// Stand-in for a second retrieval system: BM25 with different
    /// parameters, no stemming, and queries capped at 24 terms. Produces the
    /// topic-keyed first-stage run and a passage-keyed second-stage run
    /// covering every passage.
    pub fn external_seed_runs(&self, gold: &GoldSet, depth: usize) -> Result<ExternalSeedRuns> {
        let index = InvertedIndex::build(&self.collection, TokenizerConfig { stem: false })?;
        let params = Bm25Params::new(1.2, 0.75)?;
        let cap = Some(24);
        let tag = "tct";
        let mut first = Run::new(tag);
        for (topic, entry) in gold.iter() {
            let l =
                index.query_by_passage(&params, &entry.designated, &self.collection, depth, cap)?;
            first.insert(l.with_topic(topic.clone()).with_tag(tag))?;
        }
        let mut second = Run::new(tag);
        for (p, _) in self.collection.iter() {
            let l = index.query_by_passage(&params, p, &self.collection, depth, cap)?;
            second.insert(l.with_tag(tag))?;
        }
        Ok(ExternalSeedRuns {
            first_stage: first,
            second_stage: Some(second),
        })
    }

    /// Writes `collection.tsv`, `queries.tsv`, `qrels.txt` and `runs/*.run`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let runs = dir.join("runs");
        std::fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
        trec_io::write_file(&dir.join("collection.tsv"), |w| {
            use std::io::Write;
            for (id, text) in self.collection.iter() {
                writeln!(w, "{id}\t{text}")?;
            }
            Ok(())
        })?;
        trec_io::write_file(&dir.join("queries.tsv"), |w| {
            use std::io::Write;
            for (id, text) in self.topics.iter() {
                writeln!(w, "{id}\t{text}")?;
            }
            Ok(())
        })?;
        trec_io::write_qrels_file(&dir.join("qrels.txt"), &self.qrels)?;
        for run in &self.systems {
            trec_io::write_run_file(&runs.join(format!("{}.run", run.tag())), run)?;
        }
        Ok(())
    }
}
