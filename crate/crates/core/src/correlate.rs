//! System orderings and Kendall's tau.
//!
//! Orderings are total: equal mean scores are ordered by ascending system
//! tag, so no tie correction is needed. The top-weighted variant gives the
//! system at reference rank `r` (1-based) weight `1/(r + 1)` and a pair the
//! sum of its two members' weights.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemOrdering {
    entries: Vec<(String, f64)>,
}

impl SystemOrdering {
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn systems(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|(s, _)| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 0-based positions keyed by system tag.
    fn positions(&self) -> HashMap<&str, usize> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.as_str(), i))
            .collect()
    }

    /// The same systems in the opposite order.
    pub fn reversed(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.reverse();
        Self { entries }
    }

    /// Builds an ordering from an explicit sequence of tags, best first.
    /// Scores are synthesised as a decreasing sequence.
    pub fn from_tags<I, S>(tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tags: Vec<String> = tags.into_iter().map(Into::into).collect();
        let n = tags.len();
        rank_systems(
            tags.into_iter()
                .enumerate()
                .map(|(i, t)| (t, (n - i) as f64)),
        )
    }
}

/// Sorts systems by mean score descending, tag ascending on ties.
pub fn rank_systems<I, S>(means: I) -> Result<SystemOrdering>
where
    I: IntoIterator<Item = (S, f64)>,
    S: Into<String>,
{
    let mut entries: Vec<(String, f64)> = means.into_iter().map(|(s, m)| (s.into(), m)).collect();
    if entries.len() < 2 {
        return Err(Error::TooFewSystems(entries.len()));
    }
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut seen = std::collections::HashSet::new();
    for (s, _) in &entries {
        if !seen.insert(s.as_str()) {
            return Err(Error::DuplicateSystem(s.clone()));
        }
    }
    Ok(SystemOrdering { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauResult {
    pub tau: f64,
    pub weighted: bool,
    pub n_systems: usize,
}

/// Positions in `other` of the systems listed in `reference` order.
fn aligned(reference: &SystemOrdering, other: &SystemOrdering) -> Result<Vec<usize>> {
    if reference.len() != other.len() {
        return Err(Error::SystemSetMismatch);
    }
    let pos = other.positions();
    reference
        .systems()
        .map(|s| pos.get(s).copied().ok_or(Error::SystemSetMismatch))
        .collect()
}

fn pair_sum(
    reference: &SystemOrdering,
    other: &SystemOrdering,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<(f64, f64)> {
    let other_pos = aligned(reference, other)?;
    let n = other_pos.len();
    let mut agree = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            // i precedes j in the reference.
            let w = weight(i, j);
            total += w;
            if other_pos[i] < other_pos[j] {
                agree += w;
            } else {
                agree -= w;
            }
        }
    }
    Ok((agree, total))
}

/// Unweighted Kendall's tau: `(C - D) / (n(n-1)/2)`.
pub fn kendall_tau(reference: &SystemOrdering, other: &SystemOrdering) -> Result<TauResult> {
    let other_pos = aligned(reference, other)?;
    let n = other_pos.len();
    let mut concordant: i64 = 0;
    let mut discordant: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if other_pos[i] < other_pos[j] {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n.saturating_sub(1)) / 2) as f64;
    let tau = if pairs > 0.0 {
        (concordant - discordant) as f64 / pairs
    } else {
        1.0
    };
    Ok(TauResult {
        tau,
        weighted: false,
        n_systems: n,
    })
}

/// Hyperbolic pair weight for 0-based reference positions.
fn hyperbolic(i: usize, j: usize) -> f64 {
    1.0 / (i + 2) as f64 + 1.0 / (j + 2) as f64
}

/// Top-weighted tau anchored on the reference ordering's ranks.
pub fn weighted_tau(reference: &SystemOrdering, other: &SystemOrdering) -> Result<TauResult> {
    let (agree, total) = pair_sum(reference, other, hyperbolic)?;
    let tau = if total > 0.0 { agree / total } else { 1.0 };
    Ok(TauResult {
        tau,
        weighted: true,
        n_systems: reference.len(),
    })
}

/// Mean of the weighted tau anchored on each ordering in turn.
pub fn symmetric_weighted_tau(a: &SystemOrdering, b: &SystemOrdering) -> Result<TauResult> {
    let ab = weighted_tau(a, b)?;
    let ba = weighted_tau(b, a)?;
    Ok(TauResult {
        tau: (ab.tau + ba.tau) / 2.0,
        weighted: true,
        n_systems: a.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauVariant {
    Unweighted,
    #[default]
    Anchored,
    Symmetric,
}

impl TauVariant {
    pub fn compute(self, reference: &SystemOrdering, other: &SystemOrdering) -> Result<TauResult> {
        match self {
            TauVariant::Unweighted => kendall_tau(reference, other),
            TauVariant::Anchored => weighted_tau(reference, other),
            TauVariant::Symmetric => symmetric_weighted_tau(reference, other),
        }
    }
}

/// Tau of each ordering against the reference, in ascending `d`.
pub fn tau_curve(
    reference: &SystemOrdering,
    orderings: &BTreeMap<usize, SystemOrdering>,
    weighted: bool,
) -> Result<Vec<(usize, f64)>> {
    let variant = if weighted {
        TauVariant::Anchored
    } else {
        TauVariant::Unweighted
    };
    orderings
        .iter()
        .map(|(&d, o)| Ok((d, variant.compute(reference, o)?.tau)))
        .collect()
}

/// One row of the tau CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauRow {
    pub family: String,
    pub metric: String,
    pub d: usize,
    pub tau_unweighted: f64,
    pub tau_weighted: f64,
}

/// Writes `family,metric,d,tau_unweighted,tau_weighted`.
pub fn write_tau_csv<W: Write>(rows: &[TauRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(tags: &[&str]) -> SystemOrdering {
        SystemOrdering::from_tags(tags.iter().copied()).unwrap()
    }

    #[test]
    fn rank_systems_sorts_and_breaks_ties() {
        let o = rank_systems([("A", 0.5), ("B", 0.7)]).unwrap();
        assert_eq!(o.systems().collect::<Vec<_>>(), ["B", "A"]);
        let o = rank_systems([("B", 0.5), ("A", 0.5)]).unwrap();
        assert_eq!(o.systems().collect::<Vec<_>>(), ["A", "B"]);
        assert!(matches!(
            rank_systems([("A", 0.5), ("A", 0.1)]),
            Err(Error::DuplicateSystem(_))
        ));
        assert!(matches!(
            rank_systems([("A", 0.5)]),
            Err(Error::TooFewSystems(1))
        ));
    }

    #[test]
    fn unweighted_examples() {
        let x = ord(&["a", "b", "c"]);
        assert_eq!(kendall_tau(&x, &x).unwrap().tau, 1.0);
        assert_eq!(kendall_tau(&x, &x.reversed()).unwrap().tau, -1.0);
        let swapped = ord(&["b", "a", "c"]);
        assert!((kendall_tau(&x, &swapped).unwrap().tau - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_examples() {
        let x = ord(&["a", "b", "c", "d"]);
        assert_eq!(weighted_tau(&x, &x).unwrap().tau, 1.0);
        assert_eq!(weighted_tau(&x, &x.reversed()).unwrap().tau, -1.0);
        let top = weighted_tau(&x, &ord(&["b", "a", "c", "d"])).unwrap().tau;
        let bottom = weighted_tau(&x, &ord(&["a", "b", "d", "c"])).unwrap().tau;
        assert!(top < bottom, "{top} vs {bottom}");
    }

    #[test]
    fn mismatched_sets() {
        let x = ord(&["a", "b"]);
        assert!(matches!(
            kendall_tau(&x, &ord(&["a", "c"])),
            Err(Error::SystemSetMismatch)
        ));
        assert!(matches!(
            weighted_tau(&x, &ord(&["a", "b", "c"])),
            Err(Error::SystemSetMismatch)
        ));
    }

    #[test]
    fn symmetric_variant_is_symmetric() {
        let x = ord(&["a", "b", "c", "d", "e"]);
        let y = ord(&["c", "a", "b", "e", "d"]);
        let xy = symmetric_weighted_tau(&x, &y).unwrap().tau;
        let yx = symmetric_weighted_tau(&y, &x).unwrap().tau;
        assert!((xy - yx).abs() < 1e-15);
    }

    #[test]
    fn curve_matches_pointwise() {
        let x = ord(&["a", "b", "c", "d"]);
        let mut m = BTreeMap::new();
        m.insert(0, x.clone());
        m.insert(1, ord(&["b", "a", "c", "d"]));
        m.insert(2, ord(&["d", "c", "b", "a"]));
        let curve = tau_curve(&x, &m, true).unwrap();
        assert_eq!(curve[0], (0, 1.0));
        assert_eq!(curve[1].1, weighted_tau(&x, &m[&1]).unwrap().tau);
        assert_eq!(curve[2], (2, -1.0));
        let curve = tau_curve(&x, &m, false).unwrap();
        assert_eq!(curve[1].1, kendall_tau(&x, &m[&1]).unwrap().tau);
    }

    #[test]
    fn tau_csv_header() {
        let mut buf = Vec::new();
        write_tau_csv(
            &[TauRow {
                family: "BM".into(),
                metric: "RR@10".into(),
                d: 0,
                tau_unweighted: 1.0,
                tau_weighted: 1.0,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "family,metric,d,tau_unweighted,tau_weighted\nBM,RR@10,0,1.0,1.0\n"
        );
    }
}
