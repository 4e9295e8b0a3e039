//! Properties of the metrics, fusion and rank-correlation code.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use clairvoyant::correlate::{kendall_tau, symmetric_weighted_tau, weighted_tau, SystemOrdering};
use clairvoyant::fusion::{rbc_fuse, RbcParams};
use clairvoyant::metrics::{ap_at_k, evaluate, ndcg_at_k, rr_at_k, MetricId};
use clairvoyant::trec_io::{PassageId, Qrels, Run};
use common::*;
use proptest::prelude::*;
use proptest::sample::subsequence;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i:02}")).collect()
}

fn ranking() -> impl Strategy<Value = Vec<String>> {
    (1usize..15).prop_flat_map(|n| Just(ids(n)).prop_shuffle())
}

fn ordering() -> impl Strategy<Value = Vec<String>> {
    (2usize..30).prop_flat_map(|n| {
        Just((0..n).map(|i| format!("s{i:02}")).collect::<Vec<_>>()).prop_shuffle()
    })
}

fn judged(set: &[String]) -> BTreeSet<PassageId> {
    set.iter().map(|p| pid(p)).collect()
}

proptest! {
    #[test]
    fn scores_lie_in_unit_interval(r in ranking(), rel in subsequence(ids(20), 0..20), k in 1usize..12) {
        let list = list_of("q", &r);
        let j = judged(&rel);
        for v in [rr_at_k(&list, &j, k), ap_at_k(&list, &j, k), ndcg_at_k(&list, &j, k)] {
            prop_assert!((0.0..=1.0).contains(&v), "{}", v);
        }
    }

    #[test]
    fn graded_metrics_match_oracles(r in ranking(), grades in proptest::collection::vec(0u32..4, 15), k in 1usize..12) {
        let list = list_of("q", &r);
        let names = ids(15);
        let g: HashMap<&str, u32> = names.iter().zip(&grades).filter(|(_, g)| **g > 0).map(|(p, g)| (p.as_str(), *g)).collect();
        let j: BTreeMap<PassageId, u32> = g.iter().map(|(p, g)| (pid(p), *g)).collect();
        let perm: Vec<&str> = r.iter().map(String::as_str).collect();
        prop_assert!((rr_at_k(&list, &j, k) - rr_oracle(&perm, &g, k)).abs() < 1e-12);
        prop_assert!((ap_at_k(&list, &j, k) - ap_oracle(&perm, &g, k)).abs() < 1e-12);
        // The brute-force ideal is factorial in the number of judged passages.
        if g.len() <= 7 {
            prop_assert!((ndcg_at_k(&list, &j, k) - ndcg_oracle(&perm, &g, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn rr_never_drops_when_judgments_grow(
        r in ranking(),
        small in subsequence(ids(20), 0..10),
        extra in subsequence(ids(20), 0..10),
        k in 1usize..12,
    ) {
        let list = list_of("q", &r);
        let a = judged(&small);
        let mut b = a.clone();
        b.extend(judged(&extra));
        prop_assert!(rr_at_k(&list, &b, k) >= rr_at_k(&list, &a, k));
    }

    #[test]
    fn evaluation_ignores_run_insertion_order(r1 in ranking(), r2 in ranking(), rel in subsequence(ids(20), 1..5)) {
        let mut q = Qrels::new();
        for t in ["a", "b"] {
            for p in &rel {
                q.insert(tid(t), pid(p), 1).unwrap();
            }
        }
        let la = list_of("a", &r1).with_tag("t");
        let lb = list_of("b", &r2).with_tag("t");
        let mut x = Run::new("t");
        x.insert(la.clone()).unwrap();
        x.insert(lb.clone()).unwrap();
        let mut y = Run::new("t");
        y.insert(lb).unwrap();
        y.insert(la).unwrap();
        for m in MetricId::defaults() {
            prop_assert_eq!(evaluate(&x, &q, m).unwrap(), evaluate(&y, &q, m).unwrap());
        }
    }

    #[test]
    fn rbc_matches_oracle(lists in proptest::collection::vec(ranking(), 1..6), phi in 0.0..0.999f64) {
        let ranked: Vec<_> = lists.iter().map(|l| list_of("q", l)).collect();
        let got = rbc_fuse(&ranked, &RbcParams::new(phi, 1000).unwrap(), "f").unwrap();
        let want = rbc_oracle(&lists, phi);
        prop_assert_eq!(got.len(), want.len());
        for (e, (p, w)) in got.entries().iter().zip(&want) {
            prop_assert!((e.score - w).abs() < 1e-12);
            if e.passage.as_str() != p {
                // Only reachable through a floating-point near-tie.
                prop_assert!((got.entries().iter().find(|x| x.passage.as_str() == p).unwrap().score - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rbc_is_invariant_to_list_order(lists in proptest::collection::vec(ranking(), 2..6), phi in 0.1..0.99f64) {
        let ranked: Vec<_> = lists.iter().map(|l| list_of("q", l)).collect();
        let mut rev = ranked.clone();
        rev.reverse();
        let p = RbcParams::new(phi, 1000).unwrap();
        let a = rbc_fuse(&ranked, &p, "f").unwrap();
        let b = rbc_fuse(&rev, &p, "f").unwrap();
        let sa: BTreeMap<_, _> = a.entries().iter().map(|e| (e.passage.clone(), e.score)).collect();
        let sb: BTreeMap<_, _> = b.entries().iter().map(|e| (e.passage.clone(), e.score)).collect();
        prop_assert_eq!(sa.len(), sb.len());
        for (k, v) in &sa {
            prop_assert!((v - sb[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rbc_of_one_list_keeps_its_order(r in ranking(), phi in 0.0..0.99f64) {
        let l = list_of("q", &r);
        let f = rbc_fuse(std::slice::from_ref(&l), &RbcParams::new(phi, 1000).unwrap(), "f").unwrap();
        if phi > 0.0 {
            prop_assert!(f.passages().eq(l.passages()));
        }
        prop_assert!(f.entries().iter().all(|e| e.score <= 1.0 - phi + 1e-15));
    }

    #[test]
    fn tau_matches_pairwise_oracle(a in ordering(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut b = a.clone();
        b.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (ra, rb) = (SystemOrdering::from_tags(a.clone()).unwrap(), SystemOrdering::from_tags(b.clone()).unwrap());
        prop_assert!((kendall_tau(&ra, &rb).unwrap().tau - tau_oracle(&a, &b, false)).abs() < 1e-12);
        prop_assert!((weighted_tau(&ra, &rb).unwrap().tau - tau_oracle(&a, &b, true)).abs() < 1e-12);
        let sym = (tau_oracle(&a, &b, true) + tau_oracle(&b, &a, true)) / 2.0;
        prop_assert!((symmetric_weighted_tau(&ra, &rb).unwrap().tau - sym).abs() < 1e-12);
    }

    #[test]
    fn reversing_the_other_ordering_negates_tau(a in ordering(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut b = a.clone();
        b.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (ra, rb) = (SystemOrdering::from_tags(a).unwrap(), SystemOrdering::from_tags(b).unwrap());
        let rev = rb.reversed();
        prop_assert_eq!(kendall_tau(&ra, &rev).unwrap().tau, -kendall_tau(&ra, &rb).unwrap().tau);
        prop_assert!((weighted_tau(&ra, &rev).unwrap().tau + weighted_tau(&ra, &rb).unwrap().tau).abs() < 1e-12);
    }

    #[test]
    fn unweighted_tau_is_symmetric(a in ordering(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut b = a.clone();
        b.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (ra, rb) = (SystemOrdering::from_tags(a).unwrap(), SystemOrdering::from_tags(b).unwrap());
        prop_assert_eq!(kendall_tau(&ra, &rb).unwrap().tau, kendall_tau(&rb, &ra).unwrap().tau);
    }

    #[test]
    fn each_new_inversion_lowers_tau(a in ordering(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..20)) {
        let reference = SystemOrdering::from_tags(a.clone()).unwrap();
        let pos: HashMap<&str, usize> = a.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut other = a.clone();
        let mut last = (1.0, 1.0);
        for pick in picks {
            let i = pick.index(other.len() - 1);
            // Only swaps that create an inversion relative to the reference.
            if pos[other[i].as_str()] > pos[other[i + 1].as_str()] {
                continue;
            }
            other.swap(i, i + 1);
            let o = SystemOrdering::from_tags(other.clone()).unwrap();
            let now = (kendall_tau(&reference, &o).unwrap().tau, weighted_tau(&reference, &o).unwrap().tau);
            prop_assert!(now.0 < last.0 && now.1 < last.1, "{:?} -> {:?}", last, now);
            last = now;
        }
    }
}

#[test]
fn weighted_tau_penalises_swaps_at_the_top_more() {
    let a: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
    let reference = SystemOrdering::from_tags(a.clone()).unwrap();
    let mut top = a.clone();
    top.swap(0, 1);
    let mut bottom = a.clone();
    bottom.swap(8, 9);
    let t = weighted_tau(&reference, &SystemOrdering::from_tags(top).unwrap())
        .unwrap()
        .tau;
    let b = weighted_tau(&reference, &SystemOrdering::from_tags(bottom).unwrap())
        .unwrap()
        .tau;
    assert!(t < b, "{t} vs {b}");
    let tu = kendall_tau(&reference, &SystemOrdering::from_tags(a.clone()).unwrap())
        .unwrap()
        .tau;
    assert_eq!(tu, 1.0);
}

/// Adding a relevant passage can lower AP@k (the normaliser grows) and
/// NDCG@k (the ideal grows), unlike RR@k.
#[test]
fn ap_and_ndcg_can_drop_when_judgments_grow() {
    let list = list_of("q", &ids(5));
    let small = judged(&["p00".to_string()]);
    let big = judged(&["p00".to_string(), "p09".to_string()]);
    assert!(ap_at_k(&list, &big, 10) < ap_at_k(&list, &small, 10));
    assert!(ndcg_at_k(&list, &big, 10) < ndcg_at_k(&list, &small, 10));
    assert_eq!(rr_at_k(&list, &big, 10), rr_at_k(&list, &small, 10));
}
