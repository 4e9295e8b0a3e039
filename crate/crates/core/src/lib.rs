//! Toolkit for measuring how sensitive system scores and system orderings are
//! to sparse relevance judgments.
//!
//! Gold judgments are extended with passages taken from "clairvoyant"
//! rankings, produced by issuing a known-relevant passage as the query
//! (query-by-passage), optionally fused across many such rankings with
//! rank-biased centroids. Sweeping the number of added passages `d` and
//! re-evaluating a pool of system runs shows how metric scores move and how
//! stable the induced system ordering is under Kendall's tau.
//!
//! Module map:
//! - [`trec_io`]: runs, qrels, collections and topic files.
//! - [`engine`]: inverted index, BM25, query-by-passage.
//! - [`metrics`]: RR@k, AP@k, NDCG@k and run evaluation.
//! - [`fusion`]: rank-biased centroid fusion.
//! - [`extrapolate`]: gold selection and extrapolated qrels.
//! - [`correlate`]: system orderings and Kendall's tau variants.
//! - [`pipeline`]: the end-to-end sweep, reports and judgment worksheets.
//! - [`synthetic`]: a deterministic toy collection for tests and demos.

pub mod correlate;
pub mod engine;
pub mod error;
pub mod extrapolate;
pub mod fusion;
pub mod metrics;
pub mod pipeline;
pub mod synthetic;
pub mod trec_io;

pub use error::{Error, ErrorClass, Result};
pub use trec_io::{PassageCollection, PassageId, Qrels, RankedList, Run, TopicId, TopicSet};
