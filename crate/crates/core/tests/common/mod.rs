//! From-definition reference implementations used to check the library.
//! Nothing here calls the code paths being checked.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use clairvoyant::trec_io::{PassageId, RankedList, TopicId};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn pid(s: &str) -> PassageId {
    PassageId::new(s).unwrap()
}

pub fn tid(s: &str) -> TopicId {
    TopicId::new(s).unwrap()
}

/// A ranked list whose order is exactly `ids`.
pub fn list_of(topic: &str, ids: &[String]) -> RankedList {
    let n = ids.len();
    RankedList::from_scored(
        tid(topic),
        "t",
        ids.iter()
            .enumerate()
            .map(|(i, p)| (pid(p), (n - i) as f64)),
    )
    .unwrap()
}

pub fn rr_oracle(ranking: &[&str], grades: &HashMap<&str, u32>, k: usize) -> f64 {
    for (i, p) in ranking.iter().enumerate() {
        if i >= k {
            break;
        }
        if grades.get(p).copied().unwrap_or(0) > 0 {
            return 1.0 / (i as f64 + 1.0);
        }
    }
    0.0
}

pub fn ap_oracle(ranking: &[&str], grades: &HashMap<&str, u32>, k: usize) -> f64 {
    let r = grades.values().filter(|&&g| g > 0).count();
    if r == 0 {
        return 0.0;
    }
    let rel = |p: &str| grades.get(p).copied().unwrap_or(0) > 0;
    let mut total = 0.0;
    for i in 1..=k.min(ranking.len()) {
        if rel(ranking[i - 1]) {
            let hits_to_i = ranking[..i].iter().filter(|p| rel(p)).count();
            total += hits_to_i as f64 / i as f64;
        }
    }
    total / r.min(k) as f64
}

pub fn dcg(gains: &[u32], k: usize) -> f64 {
    gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
        .sum()
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Best DCG over every arrangement of the judged grades. Only for small
/// judgment sets.
pub fn ideal_dcg(grades: &[u32], k: usize) -> f64 {
    let judged: Vec<u32> = grades.iter().copied().filter(|&g| g > 0).collect();
    permutations(&judged)
        .into_iter()
        .map(|perm| dcg(&perm, k))
        .fold(0.0, f64::max)
}

pub fn ndcg_with_ideal(ranking: &[&str], grades: &HashMap<&str, u32>, k: usize, ideal: f64) -> f64 {
    let gains: Vec<u32> = ranking
        .iter()
        .map(|p| grades.get(p).copied().unwrap_or(0))
        .collect();
    if ideal == 0.0 {
        0.0
    } else {
        dcg(&gains, k) / ideal
    }
}

pub fn ndcg_oracle(ranking: &[&str], grades: &HashMap<&str, u32>, k: usize) -> f64 {
    let all: Vec<u32> = grades.values().copied().collect();
    ndcg_with_ideal(ranking, grades, k, ideal_dcg(&all, k))
}

/// All `2^n` subsets of `items`.
pub fn subsets<'a>(items: &[&'a str]) -> Vec<Vec<&'a str>> {
    (0..(1u32 << items.len()))
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| *s)
                .collect()
        })
        .collect()
}

pub fn all_permutations(items: &[&'static str]) -> Vec<Vec<&'static str>> {
    permutations(items)
}

/// Kendall's tau by enumerating every unordered pair of systems.
/// `weighted` uses `1/(r+1)` with `r` the 1-based reference rank.
pub fn tau_oracle(reference: &[String], other: &[String], weighted: bool) -> f64 {
    let ref_rank: HashMap<&str, usize> = reference
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i + 1))
        .collect();
    let oth_rank: HashMap<&str, usize> = other
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i + 1))
        .collect();
    let mut names: Vec<&str> = reference.iter().map(String::as_str).collect();
    names.sort();
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..names.len() {
        for b in 0..names.len() {
            if a >= b {
                continue;
            }
            let (x, y) = (names[a], names[b]);
            let dr = ref_rank[x] as i64 - ref_rank[y] as i64;
            let d_o = oth_rank[x] as i64 - oth_rank[y] as i64;
            let sign = if dr.signum() == d_o.signum() {
                1.0
            } else {
                -1.0
            };
            let w = if weighted {
                1.0 / (ref_rank[x] as f64 + 1.0) + 1.0 / (ref_rank[y] as f64 + 1.0)
            } else {
                1.0
            };
            num += sign * w;
            den += w;
        }
    }
    num / den
}

/// Accumulate-and-sort rank-biased centroid fusion.
pub fn rbc_oracle(lists: &[Vec<String>], phi: f64) -> Vec<(String, f64)> {
    let mut acc: BTreeMap<String, f64> = BTreeMap::new();
    for l in lists {
        for (i, p) in l.iter().enumerate() {
            *acc.entry(p.clone()).or_insert(0.0) += (1.0 - phi) * phi.powi(i as i32);
        }
    }
    let mut v: Vec<(String, f64)> = acc.into_iter().collect();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    v
}

/// Random ordering of `n` distinct system names.
pub fn random_ordering<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    let mut v: Vec<String> = (0..n).map(|i| format!("sys{i:02}")).collect();
    v.shuffle(rng);
    v
}

/// BM25 computed straight from the texts, with no index.
pub struct Bm25Oracle {
    pub docs: Vec<(String, Vec<String>)>,
    pub k1: f64,
    pub b: f64,
}

impl Bm25Oracle {
    pub fn score(&self, query: &[String], doc: &str) -> f64 {
        let n = self.docs.len() as f64;
        let avg = self.docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
        let tokens = &self.docs.iter().find(|(id, _)| id == doc).unwrap().1;
        let len = tokens.len() as f64;
        let mut s = 0.0;
        for term in query {
            let df = self.docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let tf = tokens.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * len / avg));
        }
        s
    }

    /// Every document with a positive score, best first, id ascending on ties.
    pub fn rank(&self, query: &[String]) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self
            .docs
            .iter()
            .map(|(id, _)| (id.clone(), self.score(query, id)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        v
    }
}
