//! In-memory inverted index with BM25 ranking.
//!
//! Besides ordinary short-query search the index answers query-by-passage
//! requests: the full token multiset of a stored passage is issued as the
//! query, which yields the passage's nearest neighbours under BM25.
//!
//! Internally documents are numbered in ascending [`PassageId`] order, so
//! posting lists sorted by document number are also sorted by id and a
//! document-number tie-break is the same as an id tie-break.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trec_io::{PassageCollection, PassageId, RankedList, TopicId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub stem: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { stem: true }
    }
}

/// Plural-stripping suffix stemmer. Applying it twice gives the same result
/// as applying it once.
pub fn stem(word: &str) -> Cow<'_, str> {
    if word.len() <= 3 || !word.is_ascii() {
        return Cow::Borrowed(word);
    }
    if let Some(base) = word.strip_suffix("ies") {
        if !base.ends_with('e') && !base.ends_with('a') {
            return Cow::Owned(format!("{base}y"));
        }
        return Cow::Borrowed(word);
    }
    if let Some(base) = word.strip_suffix("es") {
        if !(base.ends_with('a') || base.ends_with('e') || base.ends_with('o')) {
            return Cow::Owned(format!("{base}e"));
        }
        // "aes", "ees", "oes" fall through to the plain "s" rule.
    }
    if word.ends_with('s') && !word.ends_with("us") && !word.ends_with("ss") {
        return Cow::Borrowed(&word[..word.len() - 1]);
    }
    Cow::Borrowed(word)
}

/// Lowercases, splits on anything that is not alphanumeric, and optionally
/// stems each token.
pub fn tokenize(text: &str, config: TokenizerConfig) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if config.stem {
                stem(t).into_owned()
            } else {
                t.to_string()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "k1 must be >= 0, got {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParam(format!(
                "b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// A query as a bag of terms: distinct terms in ascending order with their
/// multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryBag {
    terms: Vec<(String, u32)>,
}

impl QueryBag {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.into()).or_insert(0) += 1;
        }
        Self {
            terms: counts.into_iter().collect(),
        }
    }

    pub fn terms(&self) -> &[(String, u32)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Postings {
    docs: Vec<u32>,
    tfs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    config: TokenizerConfig,
    doc_ids: Vec<PassageId>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: HashMap<String, Postings>,
}

impl InvertedIndex {
    pub fn build(collection: &PassageCollection, config: TokenizerConfig) -> Result<Self> {
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let docs: Vec<(&PassageId, &str)> = collection.iter().collect();
        let counted: Vec<(u32, Vec<(String, u32)>)> = docs
            .par_iter()
            .map(|(_, text)| {
                let tokens = tokenize(text, config);
                let len = tokens.len() as u32;
                let bag = QueryBag::from_tokens(tokens);
                (len, bag.terms)
            })
            .collect();

        let mut postings: HashMap<String, Postings> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (docno, (len, terms)) in counted.into_iter().enumerate() {
            doc_lengths.push(len);
            for (term, tf) in terms {
                let p = postings.entry(term).or_default();
                p.docs.push(docno as u32);
                p.tfs.push(tf);
            }
        }
        let doc_ids = docs.into_iter().map(|(id, _)| id.clone()).collect();
        Ok(Self::assemble(config, doc_ids, doc_lengths, postings))
    }

    fn assemble(
        config: TokenizerConfig,
        doc_ids: Vec<PassageId>,
        doc_lengths: Vec<u32>,
        postings: HashMap<String, Postings>,
    ) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Self {
            config,
            doc_ids,
            doc_lengths,
            avg_doc_length,
            postings,
        }
    }

    pub fn config(&self) -> TokenizerConfig {
        self.config
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    fn docno(&self, passage: &str) -> Option<u32> {
        self.doc_ids
            .binary_search_by(|id| id.as_str().cmp(passage))
            .ok()
            .map(|i| i as u32)
    }

    pub fn contains(&self, passage: &str) -> bool {
        self.docno(passage).is_some()
    }

    pub fn doc_length(&self, passage: &str) -> Option<u32> {
        self.docno(passage).map(|d| self.doc_lengths[d as usize])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, |p| p.docs.len())
    }

    /// Postings for `term` as `(passage, tf)` pairs in ascending id order.
    pub fn postings(&self, term: &str) -> Vec<(&PassageId, u32)> {
        self.postings.get(term).map_or_else(Vec::new, |p| {
            p.docs
                .iter()
                .zip(&p.tfs)
                .map(|(&d, &tf)| (&self.doc_ids[d as usize], tf))
                .collect()
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> + '_ {
        self.postings.keys().map(String::as_str)
    }

    pub fn query_bag(&self, text: &str, max_terms: Option<usize>) -> QueryBag {
        let mut tokens = tokenize(text, self.config);
        if let Some(cap) = max_terms {
            tokens.truncate(cap);
        }
        QueryBag::from_tokens(tokens)
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.n_docs() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, params: &Bm25Params, idf: f64, tf: u32, len: u32) -> f64 {
        let tf = f64::from(tf);
        let norm = if self.avg_doc_length > 0.0 {
            1.0 - params.b + params.b * f64::from(len) / self.avg_doc_length
        } else {
            1.0
        };
        idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }

    /// BM25 score of a single passage. Repeated query terms count once per
    /// occurrence.
    pub fn bm25_score(&self, params: &Bm25Params, query: &QueryBag, passage: &str) -> Result<f64> {
        let docno = self
            .docno(passage)
            .ok_or_else(|| Error::UnknownPassage(passage.to_string()))?;
        let len = self.doc_lengths[docno as usize];
        let mut score = 0.0;
        for (term, qtf) in &query.terms {
            let Some(p) = self.postings.get(term) else {
                continue;
            };
            if let Ok(i) = p.docs.binary_search(&docno) {
                let idf = self.idf(p.docs.len());
                score += f64::from(*qtf) * self.term_weight(params, idf, p.tfs[i], len);
            }
        }
        Ok(score)
    }

    /// Top `depth` passages matching at least one query term.
    pub fn search_bag(
        &self,
        params: &Bm25Params,
        topic: TopicId,
        query: &QueryBag,
        depth: usize,
    ) -> RankedList {
        let mut acc = vec![0.0f64; self.n_docs()];
        let mut touched: Vec<u32> = Vec::new();
        let mut hit = vec![false; self.n_docs()];
        for (term, qtf) in &query.terms {
            let Some(p) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(p.docs.len());
            for (&d, &tf) in p.docs.iter().zip(&p.tfs) {
                let di = d as usize;
                acc[di] +=
                    f64::from(*qtf) * self.term_weight(params, idf, tf, self.doc_lengths[di]);
                if !hit[di] {
                    hit[di] = true;
                    touched.push(d);
                }
            }
        }
        let by_rank =
            |a: &u32, b: &u32| acc[*b as usize].total_cmp(&acc[*a as usize]).then(a.cmp(b));
        if touched.len() > depth && depth > 0 {
            touched.select_nth_unstable_by(depth - 1, by_rank);
        }
        touched.truncate(depth);
        touched.sort_unstable_by(by_rank);
        let scored = touched
            .into_iter()
            .map(|d| (self.doc_ids[d as usize].clone(), acc[d as usize]));
        RankedList::from_scored(topic, "bm25", scored)
            .expect("index ids are unique and scores finite")
    }

    pub fn search(
        &self,
        params: &Bm25Params,
        topic: TopicId,
        query: &str,
        depth: usize,
    ) -> RankedList {
        self.search_bag(params, topic, &self.query_bag(query, None), depth)
    }

    /// Ranks the collection using the text of `seed` as the query. The
    /// returned list's topic is the seed passage id.
    pub fn query_by_passage(
        &self,
        params: &Bm25Params,
        seed: &PassageId,
        collection: &PassageCollection,
        depth: usize,
        max_query_terms: Option<usize>,
    ) -> Result<RankedList> {
        let text = collection
            .get(seed.as_str())
            .ok_or_else(|| Error::UnknownPassage(seed.to_string()))?;
        let bag = self.query_bag(text, max_query_terms);
        let topic = TopicId::new(seed.as_str())?;
        Ok(self.search_bag(params, topic, &bag, depth))
    }
}

const MAGIC: &[u8; 4] = b"CVIX";
const FORMAT_VERSION: u32 = 1;

/// Binary layout, all integers little-endian `u32`:
///
/// ```text
/// magic "CVIX" | version | flags (bit 0: stemming)
/// n_docs | n_docs x (id_len, id bytes, doc_length)
/// n_terms | n_terms x (term_len, term bytes, df, df x (docno, tf))
/// ```
///
/// Documents appear in ascending id order and terms in ascending byte order.
pub fn write_index<W: Write>(index: &InvertedIndex, mut out: W) -> std::io::Result<()> {
    let put = |out: &mut W, v: u32| out.write_all(&v.to_le_bytes());
    out.write_all(MAGIC)?;
    put(&mut out, FORMAT_VERSION)?;
    put(&mut out, u32::from(index.config.stem))?;
    put(&mut out, index.doc_ids.len() as u32)?;
    for (id, &len) in index.doc_ids.iter().zip(&index.doc_lengths) {
        put(&mut out, id.as_str().len() as u32)?;
        out.write_all(id.as_str().as_bytes())?;
        put(&mut out, len)?;
    }
    let mut terms: Vec<&String> = index.postings.keys().collect();
    terms.sort();
    put(&mut out, terms.len() as u32)?;
    for term in terms {
        let p = &index.postings[term];
        put(&mut out, term.len() as u32)?;
        out.write_all(term.as_bytes())?;
        put(&mut out, p.docs.len() as u32)?;
        for (&d, &tf) in p.docs.iter().zip(&p.tfs) {
            put(&mut out, d)?;
            put(&mut out, tf)?;
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::IndexFormat(format!("truncated index: {e}")))?;
        Ok(u32::from_le_bytes(b))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut b = vec![0u8; len];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::IndexFormat(format!("truncated index: {e}")))?;
        String::from_utf8(b).map_err(|_| Error::IndexFormat("invalid UTF-8 string".into()))
    }
}

pub fn read_index<R: Read>(input: R) -> Result<InvertedIndex> {
    let mut r = Reader { inner: input };
    let mut magic = [0u8; 4];
    r.inner
        .read_exact(&mut magic)
        .map_err(|_| Error::IndexFormat("missing magic bytes".into()))?;
    if &magic != MAGIC {
        return Err(Error::IndexFormat("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::IndexFormat(format!("unsupported version {version}")));
    }
    let config = TokenizerConfig {
        stem: r.u32()? & 1 == 1,
    };
    let n_docs = r.u32()? as usize;
    if n_docs == 0 {
        return Err(Error::EmptyCollection);
    }
    let mut doc_ids = Vec::with_capacity(n_docs);
    let mut doc_lengths = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let id = PassageId::new(r.string()?)?;
        if doc_ids.last().is_some_and(|prev: &PassageId| prev >= &id) {
            return Err(Error::IndexFormat(
                "document ids not strictly ascending".into(),
            ));
        }
        doc_ids.push(id);
        doc_lengths.push(r.u32()?);
    }
    let n_terms = r.u32()? as usize;
    let mut postings = HashMap::with_capacity(n_terms);
    for _ in 0..n_terms {
        let term = r.string()?;
        let df = r.u32()? as usize;
        let mut p = Postings {
            docs: Vec::with_capacity(df),
            tfs: Vec::with_capacity(df),
        };
        for _ in 0..df {
            let d = r.u32()?;
            let tf = r.u32()?;
            if d as usize >= n_docs || tf == 0 || p.docs.last().is_some_and(|&prev| prev >= d) {
                return Err(Error::IndexFormat(format!(
                    "corrupt postings for term {term:?}"
                )));
            }
            p.docs.push(d);
            p.tfs.push(tf);
        }
        postings.insert(term, p);
    }
    Ok(InvertedIndex::assemble(
        config,
        doc_ids,
        doc_lengths,
        postings,
    ))
}

pub fn save_index(index: &InvertedIndex, path: &Path) -> Result<()> {
    crate::trec_io::write_file(path, |w| write_index(index, w))
}

pub fn load_index(path: &Path) -> Result<InvertedIndex> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_index(std::io::BufReader::new(f))
}
