//! Families of achievable `(M, R)` points and the curves derived from them.
//!
//! A [`Family`] holds popularity-independent rate profiles for every
//! placement a strategy may use, so one family prices any number of
//! popularity vectors:
//!
//! * `beta`: the nonuniform placement for every r-vector of the layout;
//! * `alpha`: per-group single-level placements with integer replication,
//!   for the layout's grouping and for a single group; memory-sharing between
//!   them is the envelope;
//! * `yma`: one group with the distinct-demand rate of the uniform scheme.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::combinatorics::{all_rvectors, binomial, RVector};
use crate::delivery::{ExhaustiveScheduler, RequestVector, Scheduler};
use crate::error::{Error, Result};
use crate::exact::{exact_to_f64, frac_to_exact, Exact, Frac};
use crate::placement::{place_alpha, place_beta, Layout, PlacementConfig};
use crate::rates::closed::{table_rate_exact, TABLE_ROWS};
use crate::rates::envelope::{lower_envelope, Envelope};
use crate::rates::expectation::RateProfile;
use crate::rates::{RateCurve, RatePoint};

/// Delivery rate of the uniform scheme with replication `t` when the demand
/// has `distinct` different files: `(C(K,t+1) - C(K-D,t+1)) / C(K,t)`.
pub fn classic_rate(users: u32, t: u32, distinct: u32) -> Result<Frac> {
    if t > users || distinct > users {
        return Err(Error::validation(format!(
            "t = {t} and D = {distinct} must not exceed K = {users}"
        )));
    }
    let (k, t64, d) = (u64::from(users), u64::from(t), u64::from(distinct));
    let sent = binomial(k, t64 + 1)? - binomial(k - d, t64 + 1)?;
    let s = binomial(k, t64)?;
    let to_i64 = |x: u64| i64::try_from(x).map_err(|_| Error::Overflow("classic rate"));
    Ok(Frac::new(to_i64(sent)?, to_i64(s)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Alpha,
    Beta,
    Yma,
}

impl Strategy {
    pub fn column(self) -> &'static str {
        match self {
            Strategy::Alpha => "R_alpha",
            Strategy::Beta => "R_beta",
            Strategy::Yma => "R_yma",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Alpha => "alpha",
            Strategy::Beta => "beta",
            Strategy::Yma => "yma",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alpha" => Ok(Strategy::Alpha),
            "beta" => Ok(Strategy::Beta),
            "yma" => Ok(Strategy::Yma),
            other => Err(Error::validation(format!("unknown strategy {other:?}"))),
        }
    }
}

/// One placement of a family; its expected rate is the sum of the listed
/// profiles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub label: String,
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    pub memory: Frac,
    parts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub strategy: Strategy,
    pub users: u32,
    pub files: u32,
    profiles: Vec<RateProfile>,
    pub candidates: Vec<Candidate>,
}

fn frac_label(x: Frac) -> String {
    x.to_string()
}

impl Family {
    /// Nonuniform placements for every r-vector of `layout`'s grouping.
    pub fn beta(layout: &Layout, scheduler: &dyn Scheduler, limit: u64) -> Result<Self> {
        let mut profiles = Vec::new();
        let mut candidates = Vec::new();
        for r in all_rvectors(layout.users(), layout.groups().len()) {
            let cfg = PlacementConfig::new(layout.clone(), r.clone())?;
            let cache = place_beta(&cfg)?;
            profiles.push(RateProfile::build(
                &cache,
                scheduler,
                layout.files(),
                limit,
            )?);
            candidates.push(Candidate {
                label: format!("beta r={r}"),
                memory: cfg.memory(),
                parts: vec![profiles.len() - 1],
            });
        }
        Ok(Family {
            strategy: Strategy::Beta,
            users: layout.users(),
            files: layout.files(),
            profiles,
            candidates,
        })
    }

    /// Per-group placements with integer replication for `layout`'s grouping
    /// and, when it has several groups, for all files in one group.
    ///
    /// Groups are served independently, so the rate of a combination is the
    /// sum of per-group rates and each group is priced once per replication.
    pub fn alpha(layout: &Layout, scheduler: &dyn Scheduler, limit: u64) -> Result<Self> {
        let users = layout.users();
        let mut groupings = vec![layout.clone()];
        if layout.groups().len() > 1 {
            groupings.insert(0, layout.regroup(&[layout.files()])?);
        }
        let mut profiles = Vec::new();
        let mut candidates = Vec::new();
        for grouping in &groupings {
            let groups = grouping.groups().len();
            // part[g][t] -> profile index
            let mut part = vec![Vec::with_capacity(users as usize + 1); groups];
            for (g, slots) in part.iter_mut().enumerate() {
                for t in 0..=users {
                    let mut split = vec![Frac::zero(); groups];
                    split[g] = Frac::from_integer(i64::from(t));
                    let shared = place_alpha(grouping, &split)?;
                    let cache = &shared
                        .parts()
                        .iter()
                        .find(|p| p.group == g)
                        .expect("every group has a part")
                        .cache;
                    profiles.push(RateProfile::build(cache, scheduler, layout.files(), limit)?);
                    slots.push(profiles.len() - 1);
                }
            }
            let sizes: Vec<i64> = grouping
                .groups()
                .iter()
                .map(|g| i64::from(g.size))
                .collect();
            let mut t = vec![0u32; groups];
            loop {
                let memory = t
                    .iter()
                    .zip(&sizes)
                    .map(|(&t, &n)| Frac::new(i64::from(t) * n, i64::from(users)))
                    .sum();
                let ts: Vec<String> = t.iter().map(u32::to_string).collect();
                candidates.push(Candidate {
                    label: format!("alpha L={groups} t=({})", ts.join(",")),
                    memory,
                    parts: t
                        .iter()
                        .enumerate()
                        .map(|(g, &t)| part[g][t as usize])
                        .collect(),
                });
                let Some(i) = t.iter().rposition(|&x| x < users) else {
                    break;
                };
                t[i] += 1;
                for x in &mut t[i + 1..] {
                    *x = 0;
                }
            }
        }
        Ok(Family {
            strategy: Strategy::Alpha,
            users,
            files: layout.files(),
            profiles,
            candidates,
        })
    }

    /// Uniform placement over all files with the distinct-demand rate.
    pub fn yma(users: u32, files: u32, limit: u64) -> Result<Self> {
        let mut profiles = Vec::new();
        let mut candidates = Vec::new();
        for t in 0..=users {
            profiles.push(RateProfile::from_fn(users, files, true, limit, |d| {
                classic_rate(users, t, distinct(d))
            })?);
            candidates.push(Candidate {
                label: format!("yma t={t}"),
                memory: Frac::new(i64::from(t) * i64::from(files), i64::from(users)),
                parts: vec![t as usize],
            });
        }
        Ok(Family {
            strategy: Strategy::Yma,
            users,
            files,
            profiles,
            candidates,
        })
    }

    pub fn build(
        strategy: Strategy,
        layout: &Layout,
        scheduler: &dyn Scheduler,
        limit: u64,
    ) -> Result<Self> {
        match strategy {
            Strategy::Alpha => Self::alpha(layout, scheduler, limit),
            Strategy::Beta => Self::beta(layout, scheduler, limit),
            Strategy::Yma => Self::yma(layout.users(), layout.files(), limit),
        }
    }

    /// Exact `(M, R)` of every candidate under `popularity`.
    pub fn points(&self, popularity: &[Exact]) -> Result<Vec<RatePoint>> {
        let rates: Vec<Exact> = self
            .profiles
            .iter()
            .map(|p| p.expectation(popularity))
            .collect::<Result<_>>()?;
        Ok(self
            .candidates
            .iter()
            .map(|c| {
                let r = c
                    .parts
                    .iter()
                    .fold(Exact::zero(), |acc, &i| acc + &rates[i]);
                RatePoint::new(c.memory, r, c.label.clone())
            })
            .collect())
    }

    pub fn envelope(&self, popularity: &[Exact]) -> Result<Envelope> {
        lower_envelope(&self.points(popularity)?)
    }

    pub fn profiles(&self) -> &[RateProfile] {
        &self.profiles
    }
}

fn distinct(d: &RequestVector) -> u32 {
    let mut f = d.files().to_vec();
    f.sort_unstable();
    f.dedup();
    f.len() as u32
}

/// Envelope rates against memory, one column per family, sampled at every
/// memory value any family can reach without memory-sharing.
pub fn memory_curve(families: &[Family], popularity: &[Exact]) -> Result<RateCurve> {
    let envelopes: Vec<Envelope> = families
        .iter()
        .map(|f| f.envelope(popularity))
        .collect::<Result<_>>()?;
    let mut ms: Vec<Frac> = families
        .iter()
        .flat_map(|f| f.candidates.iter().map(|c| c.memory))
        .collect();
    ms.sort();
    ms.dedup();
    let columns = families
        .iter()
        .map(|f| f.strategy.column().to_string())
        .collect();
    let mut curve = RateCurve::new("M", columns);
    for m in ms {
        let mx = frac_to_exact(m);
        let values = envelopes
            .iter()
            .map(|e| e.value_f64(&mx).unwrap_or(f64::NAN))
            .collect();
        curve.push(crate::exact::frac_to_f64(m), values)?;
    }
    if let Some(f) = families.first() {
        curve.metadata.insert("K".into(), f.users.to_string());
        curve.metadata.insert("N".into(), f.files.to_string());
    }
    let p: Vec<String> = popularity.iter().map(|x| x.to_string()).collect();
    curve.metadata.insert("popularity".into(), p.join(" "));
    Ok(curve)
}

/// Envelope rates at cache size `memory` against the probability `p` of the
/// first of two files.
pub fn popularity_curve(families: &[Family], memory: Frac, grid: &[Exact]) -> Result<RateCurve> {
    if let Some(f) = families.iter().find(|f| f.files != 2) {
        return Err(Error::validation(format!(
            "a p grid needs exactly two files, the layout has {}",
            f.files
        )));
    }
    let columns = families
        .iter()
        .map(|f| f.strategy.column().to_string())
        .collect();
    let mut curve = RateCurve::new("p", columns);
    let m = frac_to_exact(memory);
    let one = Exact::from_integer(BigInt::from(1));
    for p in grid {
        if p < &Exact::zero() || p > &one {
            return Err(Error::validation(format!("p = {p} outside [0, 1]")));
        }
        let pop = [p.clone(), &one - p];
        let mut values = Vec::with_capacity(families.len());
        for f in families {
            let v = f.envelope(&pop)?.value_f64(&m).ok_or_else(|| {
                Error::validation(format!(
                    "M = {memory} is below every {} placement",
                    f.strategy
                ))
            })?;
            values.push(v);
        }
        curve.push(exact_to_f64(p), values)?;
    }
    if let Some(f) = families.first() {
        curve.metadata.insert("K".into(), f.users.to_string());
        curve.metadata.insert("N".into(), "2".into());
    }
    curve.metadata.insert("M".into(), frac_label(memory));
    Ok(curve)
}

fn toy_layout(p: &Exact) -> Result<Layout> {
    let one = Exact::from_integer(BigInt::from(1));
    Layout::new(3, &[1, 1], vec![p.clone(), one - p])
}

fn check_half(p: &Exact) -> Result<()> {
    let half = Exact::new(BigInt::from(1), BigInt::from(2));
    if p < &half || p > &Exact::from_integer(BigInt::from(1)) {
        return Err(Error::validation(format!("p = {p} outside [1/2, 1]")));
    }
    Ok(())
}

/// The nine closed-form `(M, R)` rows for three users and two files.
pub fn table_allm(p: &Exact) -> Result<Vec<RatePoint>> {
    check_half(p)?;
    Ok(TABLE_ROWS
        .iter()
        .map(|&(r1, r2)| {
            let m = Frac::new(i64::from(r1 + r2), 3);
            let r = table_rate_exact((r1, r2), p).expect("listed row");
            RatePoint::new(m, r, format!("beta r=({r1},{r2})"))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub r: (u32, u32),
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    pub memory: Frac,
    pub closed_form: String,
    pub computed: String,
    pub equal: bool,
}

/// Recomputes every row of [`table_allm`] from the placement, the exhaustive
/// scheduler and exact enumeration of all request vectors.
pub fn certify_table_allm(p: &Exact) -> Result<Vec<Certification>> {
    check_half(p)?;
    let layout = toy_layout(p)?;
    let scheduler = ExhaustiveScheduler::default();
    TABLE_ROWS
        .iter()
        .map(|&(r1, r2)| {
            let cfg = PlacementConfig::new(layout.clone(), RVector::new(vec![r1, r2])?)?;
            let cache = place_beta(&cfg)?;
            let computed = RateProfile::build(&cache, &scheduler, 2, u64::MAX)?
                .expectation(layout.popularity())?;
            let closed = table_rate_exact((r1, r2), p).expect("listed row");
            Ok(Certification {
                r: (r1, r2),
                memory: cfg.memory(),
                equal: closed == computed,
                closed_form: closed.to_string(),
                computed: computed.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delivery::AutoScheduler;
    use crate::exact::parse_exact;

    fn q(s: &str) -> Exact {
        parse_exact(s).unwrap()
    }

    #[test]
    fn classic_rate_values() {
        assert_eq!(classic_rate(3, 1, 1).unwrap(), Frac::new(2, 3));
        assert_eq!(classic_rate(3, 1, 2).unwrap(), Frac::from_integer(1));
        assert_eq!(classic_rate(3, 2, 2).unwrap(), Frac::new(1, 3));
        assert_eq!(classic_rate(3, 0, 2).unwrap(), Frac::from_integer(2));
        assert_eq!(classic_rate(3, 3, 2).unwrap(), Frac::zero());
        assert!(classic_rate(3, 4, 1).is_err());
    }

    #[test]
    fn strategy_names() {
        for s in [Strategy::Alpha, Strategy::Beta, Strategy::Yma] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("gamma".parse::<Strategy>().is_err());
    }

    #[test]
    fn toy_families_at_m1() {
        let p = q("0.765");
        let layout = toy_layout(&p).unwrap();
        let pop = layout.popularity().to_vec();
        let s = AutoScheduler::default();
        let beta = Family::beta(&layout, &s, 1 << 20).unwrap();
        let alpha = Family::alpha(&layout, &s, 1 << 20).unwrap();
        assert_eq!(beta.candidates.len(), 10);
        assert_eq!(alpha.candidates.len(), 16 + 4);
        let one = Exact::from_integer(BigInt::from(1));
        assert_eq!(
            beta.envelope(&pop).unwrap().value(&one).unwrap(),
            crate::rates::rate_beta_closed_exact(&p).unwrap()
        );
        assert_eq!(
            alpha.envelope(&pop).unwrap().value(&one).unwrap(),
            crate::rates::rate_alpha_closed_exact(&p).unwrap()
        );
    }

    #[test]
    fn table_rows_at_one() {
        let rows = table_allm(&q("1")).unwrap();
        let env = lower_envelope(&rows).unwrap();
        assert_eq!(
            env.status_of("beta r=(2,2)"),
            Some(crate::rates::PointStatus::Dominated)
        );
        assert!(table_allm(&q("0.4")).is_err());
    }
}
