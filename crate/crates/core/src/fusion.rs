//! Rank-biased centroid fusion.
//!
//! Each input list awards the passage at rank `r` a weight of
//! `(1 - phi) * phi^(r - 1)`; a passage's fused score is the sum of its
//! weights over all lists it appears in. Only ranks matter, never the input
//! scores.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trec_io::{PassageId, RankedList};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbcParams {
    /// Persistence, in `[0, 1)`.
    pub phi: f64,
    /// Length of the fused output list.
    pub depth: usize,
}

impl Default for RbcParams {
    fn default() -> Self {
        Self {
            phi: 0.98,
            depth: 100,
        }
    }
}

impl RbcParams {
    pub fn new(phi: f64, depth: usize) -> Result<Self> {
        let p = Self { phi, depth };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.phi) {
            return Err(Error::InvalidParam(format!(
                "phi must be in [0, 1), got {}",
                self.phi
            )));
        }
        if self.depth == 0 {
            return Err(Error::InvalidParam("fusion depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Weight of a 1-based `rank`.
pub fn rbc_weight(rank: usize, phi: f64) -> f64 {
    debug_assert!(rank >= 1);
    let exp = i32::try_from(rank - 1).unwrap_or(i32::MAX);
    (1.0 - phi) * phi.powi(exp)
}

/// Fuses lists for one topic. The output takes the first list's topic and
/// the given tag, and is truncated to `params.depth`.
pub fn rbc_fuse(lists: &[RankedList], params: &RbcParams, tag: &str) -> Result<RankedList> {
    params.validate()?;
    let first = lists
        .first()
        .ok_or_else(|| Error::InvalidParam("rbc_fuse needs at least one input list".into()))?;
    let topic = first.topic().clone();
    for l in &lists[1..] {
        if l.topic() != &topic {
            return Err(Error::TopicMismatch {
                expected: topic.to_string(),
                found: l.topic().to_string(),
            });
        }
    }
    let mut acc: HashMap<&PassageId, f64> = HashMap::new();
    for list in lists {
        for e in list.entries() {
            *acc.entry(&e.passage).or_insert(0.0) += rbc_weight(e.rank, params.phi);
        }
    }
    // phi = 0 gives deeper ranks zero weight; they still belong to the
    // fused list, ordered by id after the positive-weight passages.
    let fused = RankedList::from_scored(topic, tag, acc.into_iter().map(|(p, s)| (p.clone(), s)))?;
    Ok(fused.truncated(params.depth))
}
