//! Expected delivery rate over i.i.d. user requests.
//!
//! `R = sum_d P(d) R(d)` with `P(d) = prod_k p_{d_k}`. Per-demand rates do not
//! depend on the popularity, so they are collected once in a [`RateProfile`]
//! and re-weighted for every popularity vector of interest.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::binomial;
use crate::delivery::{RequestVector, Scheduler};
use crate::error::{Error, Result};
use crate::exact::{frac_to_exact, frac_to_f64, Exact, Frac};
use crate::placement::{CacheState, SharedPlacement};

/// Default cap on the number of demands evaluated exactly.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1_000_000;

/// A placement that can price a demand with a given scheduler.
pub trait Placed: Sync {
    fn users(&self) -> u32;

    fn demand_rate(&self, demand: &RequestVector, scheduler: &dyn Scheduler) -> Result<Frac>;
}

impl Placed for CacheState {
    fn users(&self) -> u32 {
        CacheState::users(self)
    }

    fn demand_rate(&self, demand: &RequestVector, scheduler: &dyn Scheduler) -> Result<Frac> {
        Ok(scheduler.schedule(self, demand)?.rate())
    }
}

impl Placed for SharedPlacement {
    fn users(&self) -> u32 {
        SharedPlacement::users(self)
    }

    /// Parts are served independently; their rates add up, each scaled by
    /// the fraction of a file it carries.
    fn demand_rate(&self, demand: &RequestVector, scheduler: &dyn Scheduler) -> Result<Frac> {
        let mut total = Frac::zero();
        for part in self.parts() {
            total += part.weight * scheduler.schedule(&part.cache, demand)?.rate();
        }
        Ok(total)
    }
}

/// Sorted demands (one per multiset of requests) with how many demands each
/// stands for.
pub fn request_types(users: u32, files: u32) -> Result<Vec<(RequestVector, u64)>> {
    let mut out = Vec::new();
    let mut cur = vec![1u32; users as usize];
    loop {
        out.push((RequestVector::new(cur.clone())?, arrangements(&cur)?));
        // Next non-decreasing sequence.
        let Some(i) = cur.iter().rposition(|&f| f < files) else {
            return Ok(out);
        };
        let v = cur[i] + 1;
        for c in &mut cur[i..] {
            *c = v;
        }
    }
}

/// Number of distinct orderings of a sorted demand.
fn arrangements(sorted: &[u32]) -> Result<u64> {
    let mut left = sorted.len() as u64;
    let mut total: u64 = 1;
    for run in sorted.chunk_by(|a, b| a == b) {
        let c = binomial(left, run.len() as u64)?;
        total = total
            .checked_mul(c)
            .ok_or(Error::Overflow("demand multiplicity"))?;
        left -= run.len() as u64;
    }
    Ok(total)
}

/// Number of demands that will be evaluated, with overflow saturating.
fn demand_count(users: u32, files: u32, by_type: bool) -> u64 {
    if by_type {
        binomial(u64::from(files + users - 1), u64::from(users)).unwrap_or(u64::MAX)
    } else {
        u64::from(files).checked_pow(users).unwrap_or(u64::MAX)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub demand: RequestVector,
    /// Demands represented by this entry.
    pub multiplicity: u64,
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    pub rate: Frac,
}

/// Per-demand rates, independent of popularity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateProfile {
    pub users: u32,
    pub files: u32,
    pub entries: Vec<ProfileEntry>,
}

impl RateProfile {
    /// Prices every demand (or every sorted demand when `by_type`).
    pub fn from_fn<F>(users: u32, files: u32, by_type: bool, limit: u64, rate: F) -> Result<Self>
    where
        F: Fn(&RequestVector) -> Result<Frac> + Sync,
    {
        let count = demand_count(users, files, by_type);
        if count > limit {
            return Err(Error::Limit(format!(
                "{count} demands exceed the exact-enumeration limit {limit}; use the Monte Carlo estimate"
            )));
        }
        let demands: Vec<(RequestVector, u64)> = if by_type {
            request_types(users, files)?
        } else {
            RequestVector::all(users, files)
                .into_iter()
                .map(|d| (d, 1))
                .collect()
        };
        let entries = demands
            .into_par_iter()
            .map(|(demand, multiplicity)| {
                rate(&demand).map(|rate| ProfileEntry {
                    demand,
                    multiplicity,
                    rate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RateProfile {
            users,
            files,
            entries,
        })
    }

    pub fn build(
        placement: &dyn Placed,
        scheduler: &dyn Scheduler,
        files: u32,
        limit: u64,
    ) -> Result<Self> {
        Self::from_fn(
            placement.users(),
            files,
            scheduler.rate_is_symmetric(),
            limit,
            |d| placement.demand_rate(d, scheduler),
        )
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.files as usize {
            return Err(Error::validation(format!(
                "popularity has {len} entries for {} files",
                self.files
            )));
        }
        Ok(())
    }

    /// Exact expectation; summation order does not matter.
    pub fn expectation(&self, popularity: &[Exact]) -> Result<Exact> {
        self.check_len(popularity.len())?;
        let mut total = Exact::zero();
        for e in &self.entries {
            if e.rate.is_zero() {
                continue;
            }
            let mut weight = Exact::from_integer(BigInt::from(e.multiplicity));
            for &f in e.demand.files() {
                weight *= &popularity[(f - 1) as usize];
            }
            total += weight * frac_to_exact(e.rate);
        }
        Ok(total)
    }

    /// Floating-point expectation, summed in entry order.
    pub fn expectation_f64(&self, popularity: &[f64]) -> Result<f64> {
        self.check_len(popularity.len())?;
        Ok(self
            .entries
            .iter()
            .map(|e| {
                let p: f64 = e
                    .demand
                    .files()
                    .iter()
                    .map(|&f| popularity[(f - 1) as usize])
                    .product();
                e.multiplicity as f64 * p * frac_to_f64(e.rate)
            })
            .sum())
    }
}

/// Exact expected rate of `placement` under `scheduler`.
///
/// Demands are grouped by request multiset when the scheduler's rate is
/// symmetric, otherwise every demand in `[1:N]^K` is evaluated.
pub fn expected_rate_exact(
    placement: &dyn Placed,
    scheduler: &dyn Scheduler,
    popularity: &[Exact],
    limit: u64,
) -> Result<Exact> {
    RateProfile::build(placement, scheduler, popularity.len() as u32, limit)?
        .expectation(popularity)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / sqrt(n)).
    pub stderr: f64,
    pub samples: u64,
}

/// Monte Carlo estimate of the expected rate from `samples` i.i.d. demands.
///
/// Deterministic for a given seed: demands are drawn sequentially from a
/// ChaCha8 stream, and per-demand rates are cached.
pub fn expected_rate_mc(
    placement: &dyn Placed,
    scheduler: &dyn Scheduler,
    popularity: &[f64],
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::validation("at least one sample is required"));
    }
    let dist = WeightedIndex::new(popularity)
        .map_err(|e| Error::validation(format!("bad popularity: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = placement.users() as usize;
    let symmetric = scheduler.rate_is_symmetric();
    let mut memo: HashMap<Vec<u32>, f64> = HashMap::new();
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut demand = vec![0u32; users];
    for n in 1..=samples {
        for d in demand.iter_mut() {
            *d = dist.sample(&mut rng) as u32 + 1;
        }
        let mut key = demand.clone();
        if symmetric {
            key.sort_unstable();
        }
        let rate = match memo.get(&key) {
            Some(&r) => r,
            None => {
                let r = frac_to_f64(
                    placement.demand_rate(&RequestVector::new(key.clone())?, scheduler)?,
                );
                memo.insert(key, r);
                r
            }
        };
        let delta = rate - mean;
        mean += delta / n as f64;
        m2 += delta * (rate - mean);
    }
    let stderr = if samples > 1 {
        (m2 / (samples - 1) as f64 / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        samples,
    })
}
