//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line (visible with
//! `--nocapture`) and fails if the criterion does not hold.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use codedcache::combinatorics::{all_rvectors, enumerate_indices, subpacketization, RVector};
use codedcache::delivery::{
    decodable, toy_schedule_beta, DeliveryMessage, ExhaustiveScheduler, RequestVector, ToyScheduler,
};
use codedcache::exact::{parse_exact, Exact, Frac};
use codedcache::placement::{
    file_name, per_group_cache, place_alpha, place_beta, Layout, PlacementConfig,
};
use codedcache::rates::closed::{alpha_branch_threshold, beta_advantage_threshold};
use codedcache::rates::{
    certify_table_allm, compare_strategies, expected_rate_exact, lower_envelope,
    rate_beta_closed_exact, table_allm, PointStatus,
};
use num_traits::One;

const LIMIT: u64 = 1_000_000;

/// Runs `body` and reports it against `budget`. A run over budget is
/// retried up to four more times and the fastest run counts, so scheduler
/// noise on a loaded machine does not fail sub-millisecond budgets.
fn criterion(n: u32, what: &str, budget: Duration, body: impl Fn()) {
    let mut best = Duration::MAX;
    let mut outcome = Ok(());
    for _ in 0..5 {
        let start = Instant::now();
        outcome = catch_unwind(AssertUnwindSafe(&body));
        best = best.min(start.elapsed());
        if outcome.is_err() || best <= budget {
            break;
        }
    }
    let within = best <= budget;
    let verdict = if outcome.is_ok() && within {
        "PASS"
    } else {
        "FAIL"
    };
    println!("criterion {n:>2}: {verdict} {what} ({best:.2?}, budget {budget:?})");
    if let Err(e) = outcome {
        std::panic::resume_unwind(e);
    }
    assert!(within, "criterion {n} took {best:?}, budget {budget:?}");
}

fn q(s: &str) -> Exact {
    parse_exact(s).unwrap()
}

fn toy_layout(p: &Exact) -> Layout {
    Layout::new(3, &[1, 1], vec![p.clone(), Exact::one() - p]).unwrap()
}

fn toy_cfg() -> PlacementConfig {
    PlacementConfig::new(
        Layout::uniform(3, &[1, 1]).unwrap(),
        RVector::new(vec![2, 1]).unwrap(),
    )
    .unwrap()
}

fn rational_grid(n: u32) -> Vec<Exact> {
    (0..n)
        .map(|i| q("1/2") + q(&format!("{i}/{}", 2 * (n - 1))))
        .collect()
}

#[test]
fn criterion_01_subpacketization() {
    criterion(
        1,
        "S = 6 and the six indices of the example",
        Duration::from_millis(1),
        || {
            let r = RVector::new(vec![2, 1]).unwrap();
            assert_eq!(subpacketization(3, &r).unwrap(), 6);
            let labels: Vec<String> = enumerate_indices(3, &r)
                .unwrap()
                .iter()
                .map(|i| i.to_string())
                .collect();
            assert_eq!(labels, ["12,1", "12,2", "13,1", "13,3", "23,2", "23,3"]);
        },
    );
}

#[test]
fn criterion_02_cache_table() {
    let cfg = toy_cfg();
    criterion(
        2,
        "placement reproduces the reference cache table",
        Duration::from_millis(1),
        || {
            let cache = place_beta(&cfg).unwrap();
            let table = [
                ["A_12,1", "A_12,2", "A_13,1", "A_13,3", "B_12,1", "B_13,1"],
                ["A_12,1", "A_12,2", "A_23,2", "A_23,3", "B_12,2", "B_23,2"],
                ["A_13,1", "A_13,3", "A_23,2", "A_23,3", "B_13,3", "B_23,3"],
            ];
            for (user, expected) in (1..=3).zip(table) {
                let mut got: Vec<String> = cache
                    .entries(user)
                    .iter()
                    .map(|(f, t)| format!("{}_{t}", file_name(*f)))
                    .collect();
                got.sort();
                assert_eq!(got, expected, "user {user}");
            }
        },
    );
}

#[test]
fn criterion_03_cache_accounting() {
    criterion(
        3,
        "per-group cache equals direct counting, K <= 5, L <= 3",
        Duration::from_secs(10),
        || {
            assert_eq!(
                per_group_cache(&toy_cfg()),
                [Frac::new(2, 3), Frac::new(1, 3)]
            );
            let mut configs = 0;
            for k in 1..=5u32 {
                for l in 1..=3usize {
                    // Group sizes 1 or 2 in every combination.
                    for mask in 0..(1u32 << l) {
                        let sizes: Vec<u32> = (0..l).map(|g| 1 + (mask >> g & 1)).collect();
                        let layout = Layout::uniform(k, &sizes).unwrap();
                        for r in all_rvectors(k, l) {
                            let cfg = PlacementConfig::new(layout.clone(), r).unwrap();
                            let cache = place_beta(&cfg).unwrap();
                            let s = cache.subpacketization() as i64;
                            let expected = per_group_cache(&cfg);
                            for user in 1..=k {
                                for (g, group) in layout.groups().iter().enumerate() {
                                    let stored: u64 =
                                        group.files().map(|f| cache.stored_count(user, f)).sum();
                                    assert_eq!(Frac::new(stored as i64, s), expected[g]);
                                }
                                assert_eq!(cache.user_memory(user).unwrap(), cfg.memory());
                            }
                            configs += 1;
                        }
                    }
                }
            }
            assert!(configs > 500);
        },
    );
}

#[test]
fn criterion_04_toy_delivery() {
    let cache = place_beta(&toy_cfg()).unwrap();
    criterion(
        4,
        "reference messages and decodability of all 8 demands",
        Duration::from_secs(1),
        || {
            let table: [(&str, &[&str], Frac); 4] = [
                (
                    "A,A,A",
                    &[
                        "A_{12,1} ⊕ A_{13,1} ⊕ A_{23,2}",
                        "A_{12,2} ⊕ A_{13,3} ⊕ A_{23,3}",
                    ],
                    Frac::new(1, 3),
                ),
                (
                    "A,A,B",
                    &[
                        "B_{12,1} ⊕ A_{23,2}",
                        "B_{13,1} ⊕ A_{23,3}",
                        "B_{12,2} ⊕ A_{13,1}",
                        "B_{23,2} ⊕ A_{13,3}",
                    ],
                    Frac::new(2, 3),
                ),
                (
                    "A,B,B",
                    &[
                        "B_{12,1} ⊕ A_{23,2}",
                        "B_{13,1} ⊕ A_{23,3}",
                        "B_{12,2} ⊕ B_{13,3}",
                        "B_{23,2} ⊕ B_{23,3}",
                    ],
                    Frac::new(2, 3),
                ),
                (
                    "B,B,B",
                    &[
                        "B_{12,1} ⊕ B_{12,2}",
                        "B_{12,1} ⊕ B_{13,3}",
                        "B_{13,1} ⊕ B_{23,2}",
                        "B_{13,1} ⊕ B_{23,3}",
                    ],
                    Frac::new(2, 3),
                ),
            ];
            for (d, messages, rate) in table {
                let d = RequestVector::parse(d).unwrap();
                let s = toy_schedule_beta(&cache, &d).unwrap();
                let mut got = s.messages.clone();
                let mut want: Vec<DeliveryMessage> = messages
                    .iter()
                    .map(|m| DeliveryMessage::parse(m).unwrap())
                    .collect();
                got.sort();
                want.sort();
                assert_eq!(got, want, "{d}");
                assert_eq!(s.rate(), rate);
            }
            let all = RequestVector::all(3, 2);
            assert_eq!(all.len(), 8);
            for d in all {
                let s = toy_schedule_beta(&cache, &d).unwrap();
                assert!(decodable(&cache, &s, &d).unwrap().decodable, "{d}");
            }
        },
    );
}

#[test]
fn criterion_05_expected_toy_rate() {
    criterion(
        5,
        "expected toy rate is 2/3 - p^3/3 on 21 rational p, min with (3,0)",
        Duration::from_secs(30),
        || {
            let toy = place_beta(&toy_cfg()).unwrap();
            let full_a = place_beta(
                &PlacementConfig::new(
                    Layout::uniform(3, &[1, 1]).unwrap(),
                    RVector::new(vec![3, 0]).unwrap(),
                )
                .unwrap(),
            )
            .unwrap();
            let exhaustive = ExhaustiveScheduler::default();
            let grid = rational_grid(21);
            assert_eq!(grid.len(), 21);
            assert_eq!(grid[20], Exact::one());
            for p in grid {
                let pop = [p.clone(), Exact::one() - &p];
                let p3 = &p * &p * &p;
                let nested = expected_rate_exact(&toy, &ToyScheduler, &pop, LIMIT).unwrap();
                assert_eq!(nested, q("2/3") - &p3 / q("3"), "p = {p}");
                let full = expected_rate_exact(&full_a, &exhaustive, &pop, LIMIT).unwrap();
                assert_eq!(full, Exact::one() - &p3);
                assert_eq!(nested.min(full), rate_beta_closed_exact(&p).unwrap());
            }
        },
    );
}

#[test]
fn criterion_06_strategy_alpha() {
    criterion(
        6,
        "alpha L=1 and L=2 rates from placement and search",
        Duration::from_secs(30),
        || {
            let s = ExhaustiveScheduler::default();
            for p in ["1/2", "3/5", "3/4", "153/200", "9/10"] {
                let p = q(p);
                let layout = toy_layout(&p);
                let pop = layout.popularity().to_vec();
                let p3 = &p * &p * &p;
                let b3 = (Exact::one() - &p).pow(3);

                let one_group = layout.regroup(&[2]).unwrap();
                let l1 = place_alpha(&one_group, &[Frac::new(3, 2)]).unwrap();
                let r1 = expected_rate_exact(&l1, &s, &pop, LIMIT).unwrap();
                assert_eq!(r1, q("2/3") - (&p3 + &b3) / q("6"), "L=1, p = {p}");

                let l2 =
                    place_alpha(&layout, &[Frac::from_integer(3), Frac::from_integer(0)]).unwrap();
                let r2 = expected_rate_exact(&l2, &s, &pop, LIMIT).unwrap();
                assert_eq!(r2, Exact::one() - &p3, "L=2, p = {p}");
            }
        },
    );
}

#[test]
fn criterion_07_thresholds() {
    criterion(
        7,
        "thresholds 0.739 and 0.794, max gain <= 0.90 in (0.72, 0.76)",
        Duration::from_secs(1),
        || {
            assert!((alpha_branch_threshold() - 0.739).abs() <= 1e-3);
            assert!((beta_advantage_threshold() - 0.794).abs() <= 1e-3);
            let grid: Vec<f64> = (0..=100).map(|i| 0.5 + 0.005 * f64::from(i)).collect();
            let cmp = compare_strategies(&grid).unwrap();
            assert!(cmp.max_gain.ratio <= 0.90, "{:?}", cmp.max_gain);
            assert!(
                cmp.max_gain.p > 0.72 && cmp.max_gain.p < 0.76,
                "{:?}",
                cmp.max_gain
            );
        },
    );
}

#[test]
fn criterion_08_rvector_rows() {
    criterion(
        8,
        "all nine K=3 r-vector rows certified by exhaustive search",
        Duration::from_secs(120),
        || {
            for p in ["1/2", "3/4", "153/200", "1"] {
                let rows = certify_table_allm(&q(p)).unwrap();
                assert_eq!(rows.len(), 9);
                for row in rows {
                    assert!(row.equal, "p = {p}: {row:?}");
                }
            }
            let p = q("153/200");
            let mem: Vec<Frac> = table_allm(&p).unwrap().iter().map(|r| r.memory).collect();
            let expected = [
                (0, 1),
                (1, 3),
                (2, 3),
                (1, 1),
                (1, 1),
                (4, 3),
                (4, 3),
                (5, 3),
                (2, 1),
            ];
            assert_eq!(mem, expected.map(|(a, b)| Frac::new(a, b)));
        },
    );
}

#[test]
fn criterion_09_convex_hull() {
    criterion(
        9,
        "at p = 1 the (2,2) point is off the envelope",
        Duration::from_secs(1),
        || {
            let rows = table_allm(&Exact::one()).unwrap();
            let env = lower_envelope(&rows).unwrap();
            assert_eq!(env.status_of("beta r=(2,2)"), Some(PointStatus::Dominated));
            assert!(env.vertex_points().all(|p| p.label != "beta r=(2,2)"));
        },
    );
}

#[test]
fn criterion_10_properties() {
    criterion(
        10,
        "property suites, 1000 cases each",
        Duration::from_secs(120),
        || {
            support::decodability_soundness().unwrap();
            support::permutation_equivariance().unwrap();
            support::rank_unrank().unwrap();
            support::envelope_monotone().unwrap();
        },
    );
}
