//! Randomized invariants shared by the property tests and the acceptance
//! suite. Every check runs 1000 cases from a fixed seed.

#![allow(dead_code)]

use codedcache::combinatorics::{index_rank, index_unrank, subpacketization, RVector};
use codedcache::delivery::{
    check_certificate, decodable, exhaustive_schedule, greedy_schedule, DeliveryMessage,
    DeliverySchedule, RequestVector, SearchLimits, Subfile,
};
use codedcache::error::Error;
use codedcache::exact::{frac_to_exact, Exact, Frac};
use codedcache::placement::{place_beta, CacheState, Layout, PlacementConfig};
use codedcache::rates::{lower_envelope, PointStatus, RatePoint};
use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{RngSeed, TestError, TestRunner};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        rng_seed: RngSeed::Fixed(0x5eed_cafe),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// K <= 4, N <= 3, one to three groups, any valid r-vector.
fn placement() -> impl Strategy<Value = (Layout, RVector)> {
    (
        1u32..=4,
        prop::sample::select(vec![
            vec![1],
            vec![2],
            vec![3],
            vec![1, 1],
            vec![1, 2],
            vec![2, 1],
            vec![1, 1, 1],
        ]),
    )
        .prop_flat_map(|(k, sizes)| {
            let l = sizes.len();
            (Just(k), Just(sizes), prop::collection::vec(0..=k, l))
        })
        .prop_map(|(k, sizes, mut r)| {
            r.sort_unstable_by(|a, b| b.cmp(a));
            (
                Layout::uniform(k, &sizes).unwrap(),
                RVector::new(r).unwrap(),
            )
        })
}

fn case() -> impl Strategy<Value = (CacheState, RequestVector, Vec<u32>)> {
    placement().prop_flat_map(|(layout, r)| {
        let cache = place_beta(&PlacementConfig::new(layout.clone(), r).unwrap()).unwrap();
        let k = layout.users() as usize;
        let n = layout.files();
        (
            Just(cache),
            prop::collection::vec(1..=n, k).prop_map(|d| RequestVector::new(d).unwrap()),
            Just((1..=k as u32).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

fn limits() -> SearchLimits {
    SearchLimits {
        max_nodes: 5_000,
        ..SearchLimits::default()
    }
}

fn permuted_demand(d: &RequestVector, perm: &[u32]) -> RequestVector {
    let mut files = vec![0; d.files().len()];
    for (u, &f) in d.files().iter().enumerate() {
        files[(perm[u] - 1) as usize] = f;
    }
    RequestVector::new(files).unwrap()
}

fn sound(cache: &CacheState, s: &DeliverySchedule, d: &RequestVector) -> bool {
    let report = decodable(cache, s, d).unwrap();
    report.decodable && check_certificate(cache, s, &report)
}

fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    TestRunner::new(config())
        .run(&strategy, test)
        .map_err(|e: TestError<S::Value>| e.to_string())
}

pub fn rank_unrank() -> Result<(), String> {
    let strategy =
        (1u32..=12).prop_flat_map(|k| (Just(k), prop::collection::vec(0..=k, 1..=3), any::<u64>()));
    run(strategy, |(k, r, seed)| {
        let mut r = r;
        r.sort_unstable_by(|a, b| b.cmp(a));
        let r = RVector::new(r).unwrap();
        let s = subpacketization(k, &r).unwrap();
        let rank = seed % s;
        let idx = index_unrank(rank, k, &r).unwrap();
        prop_assert!(idx.validate(k, &r).is_ok());
        prop_assert_eq!(index_rank(&idx, k, &r).unwrap(), rank);
        if rank + 1 < s {
            prop_assert!(idx < index_unrank(rank + 1, k, &r).unwrap());
        }
        Ok(())
    })
}

/// Greedy and exhaustive schedules decode, with certificates that replay;
/// exhaustive never sends more than greedy.
pub fn decodability_soundness() -> Result<(), String> {
    run(case(), |(cache, d, _)| {
        let greedy = greedy_schedule(&cache, &d).unwrap();
        prop_assert!(sound(&cache, &greedy, &d));
        match exhaustive_schedule(&cache, &d, &limits()) {
            Ok(best) => {
                prop_assert!(sound(&cache, &best, &d));
                prop_assert!(best.rate() <= greedy.rate());
            }
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        Ok(())
    })
}

pub fn permutation_equivariance() -> Result<(), String> {
    run(case(), |(cache, d, perm)| {
        let d2 = permuted_demand(&d, &perm);
        let s = greedy_schedule(&cache, &d).unwrap();
        let moved = s.permute(&perm, d2.clone());
        prop_assert!(sound(&cache, &moved, &d2));
        prop_assert_eq!(moved.rate(), s.rate());
        if let (Ok(a), Ok(b)) = (
            exhaustive_schedule(&cache, &d, &limits()),
            exhaustive_schedule(&cache, &d2, &limits()),
        ) {
            prop_assert_eq!(a.rate(), b.rate());
        }
        Ok(())
    })
}

pub fn extra_messages() -> Result<(), String> {
    let strategy = (
        case(),
        prop::collection::vec(any::<prop::sample::Index>(), 1..4),
    );
    run(strategy, |((cache, d, _), picks)| {
        let mut s = greedy_schedule(&cache, &d).unwrap();
        prop_assume!(cache.slot_count() > 0);
        let mut summands: Vec<Subfile> = picks
            .iter()
            .map(|i| {
                let (f, idx) = cache.slot_subfile(i.index(cache.slot_count()));
                Subfile::new(f, idx.clone())
            })
            .collect();
        summands.sort();
        summands.dedup();
        s.messages.push(DeliveryMessage::new(summands).unwrap());
        prop_assert!(sound(&cache, &s, &d));
        Ok(())
    })
}

/// The envelope is non-increasing, convex, and classifies points exactly.
pub fn envelope_monotone() -> Result<(), String> {
    let strategy = prop::collection::vec((0i64..=12, 0i64..=40), 1..12);
    run(strategy, |pts| {
        let points: Vec<RatePoint> = pts
            .iter()
            .enumerate()
            .map(|(i, &(m, r))| {
                RatePoint::new(
                    Frac::new(m, 4),
                    Exact::new(BigInt::from(r), BigInt::from(8)),
                    format!("p{i}"),
                )
            })
            .collect();
        let env = lower_envelope(&points).unwrap();
        let mut xs: Vec<Exact> = points.iter().map(|p| frac_to_exact(p.memory)).collect();
        xs.sort();
        xs.dedup();
        let vals: Vec<Exact> = xs.iter().map(|x| env.value(x).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for (v, x) in vals.windows(3).zip(xs.windows(3)) {
            prop_assert!((&v[1] - &v[0]) * (&x[2] - &x[1]) <= (&v[2] - &v[1]) * (&x[1] - &x[0]));
        }
        for cp in &env.points {
            let v = env.value(&frac_to_exact(cp.point.memory)).unwrap();
            let y = cp.point.exact.clone().unwrap();
            prop_assert!(v <= y);
            prop_assert_eq!(cp.status == PointStatus::Dominated, v < y);
        }
        Ok(())
    })
}
