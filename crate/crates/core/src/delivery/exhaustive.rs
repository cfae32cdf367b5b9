//! Minimum-size delivery search for small instances.
//!
//! The search family is clique messages: a set of targets `(user, subfile)`
//! with distinct users, where each subfile is needed by its target and cached
//! by every other target. Decoding is full GF(2) elimination, so a user may
//! also combine several messages (the chained decoding used by the
//! exact-tradeoff delivery for repeated demands).
//!
//! The search is iterative deepening on the message count. At each node it
//! picks an undecodable `(user, subfile)` pair; any completion must add a
//! message containing that subfile which is not already in the user's span,
//! so only those candidates are branched on. A node is cut when some user
//! still lacks more dimensions than messages remain.

use std::collections::{BTreeSet, HashSet};

use crate::delivery::context::{slots_message, user_views, DecodeState, UserView};
use crate::delivery::{greedy_schedule, DeliverySchedule, RequestVector};
use crate::error::{Error, Result};
use crate::placement::CacheState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_messages: usize,
    pub max_summands: usize,
    /// Search nodes expanded before giving up.
    pub max_nodes: u64,
    /// Clique candidates generated before giving up.
    pub max_candidates: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_messages: 12,
            max_summands: 4,
            max_nodes: 200_000,
            max_candidates: 100_000,
        }
    }
}

fn clique_candidates(views: &[UserView], limits: &SearchLimits) -> Result<Vec<Vec<usize>>> {
    fn rec(
        views: &[UserView],
        next: usize,
        users: &mut Vec<usize>,
        slots: &mut Vec<usize>,
        out: &mut BTreeSet<Vec<usize>>,
        limits: &SearchLimits,
    ) -> Result<()> {
        if next == views.len() {
            if !slots.is_empty() {
                let mut m = slots.clone();
                m.sort_unstable();
                out.insert(m);
                if out.len() > limits.max_candidates {
                    return Err(Error::Infeasible(format!(
                        "more than {} candidate messages",
                        limits.max_candidates
                    )));
                }
            }
            return Ok(());
        }
        rec(views, next + 1, users, slots, out, limits)?;
        if slots.len() == limits.max_summands {
            return Ok(());
        }
        let view = &views[next];
        if !slots.iter().all(|&s| view.is_cached(s)) {
            return Ok(());
        }
        for &x in &view.needed {
            if users.iter().all(|&v| views[v].is_cached(x)) {
                users.push(next);
                slots.push(x);
                rec(views, next + 1, users, slots, out, limits)?;
                users.pop();
                slots.pop();
            }
        }
        Ok(())
    }

    let mut out = BTreeSet::new();
    rec(views, 0, &mut Vec::new(), &mut Vec::new(), &mut out, limits)?;
    let mut list: Vec<Vec<usize>> = out.into_iter().collect();
    // Larger messages first: they serve more users at once.
    list.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    Ok(list)
}

struct Search<'a> {
    views: &'a [UserView],
    candidates: &'a [Vec<usize>],
    by_slot: Vec<Vec<u32>>,
    nodes: u64,
    limits: SearchLimits,
    seen: HashSet<Vec<u32>>,
}

impl Search<'_> {
    fn lower_bound(&self, state: &DecodeState) -> usize {
        self.views
            .iter()
            .enumerate()
            .map(|(u, v)| v.needed.len().saturating_sub(state.rank(u)))
            .max()
            .unwrap_or(0)
    }

    fn dfs(&mut self, state: &DecodeState, chosen: &mut Vec<u32>, left: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return Err(Error::Infeasible(format!(
                "expanded more than {} search nodes",
                self.limits.max_nodes
            )));
        }
        let outstanding = state.outstanding(self.views);
        if outstanding.is_empty() {
            return Ok(true);
        }
        if left == 0 || self.lower_bound(state) > left {
            return Ok(false);
        }

        let mut best: Option<Vec<u32>> = None;
        for &(u, slot) in &outstanding {
            let view = &self.views[u];
            let branch: Vec<u32> = self.by_slot[slot]
                .iter()
                .copied()
                .filter(|&c| {
                    let row = view.residual(&self.candidates[c as usize]);
                    !state_contains(state, u, &row)
                })
                .collect();
            if best.as_ref().is_none_or(|b| branch.len() < b.len()) {
                let empty = branch.is_empty();
                best = Some(branch);
                if empty {
                    break;
                }
            }
        }
        let branch = best.unwrap_or_default();

        for c in branch {
            let mut key = chosen.clone();
            key.push(c);
            key.sort_unstable();
            if !self.seen.insert(key) {
                continue;
            }
            let mut next = state.clone();
            next.push(self.views, &self.candidates[c as usize]);
            chosen.push(c);
            if self.dfs(&next, chosen, left - 1)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

fn state_contains(state: &DecodeState, user: usize, row: &crate::gf2::BitRow) -> bool {
    row.is_zero() || state.contains_row(user, row)
}

/// Smallest schedule of clique messages that every user can decode.
///
/// Returns [`Error::Infeasible`] when no schedule within
/// `limits.max_messages` is found or the node budget runs out.
pub fn exhaustive_schedule(
    cache: &CacheState,
    demand: &RequestVector,
    limits: &SearchLimits,
) -> Result<DeliverySchedule> {
    let views = user_views(cache, demand)?;
    let state = DecodeState::new(&views);
    let build = |slots: &[Vec<usize>]| {
        DeliverySchedule::new(
            demand.clone(),
            cache.subpacketization(),
            slots.iter().map(|m| slots_message(cache, m)).collect(),
        )
    };
    if state.outstanding(&views).is_empty() {
        return Ok(build(&[]));
    }

    // The greedy schedule bounds the search from above when it lies in the
    // searched family.
    let greedy = greedy_schedule(cache, demand)?;
    let greedy_fits = greedy
        .messages
        .iter()
        .all(|m| m.summands().len() <= limits.max_summands);
    let cap = if greedy_fits {
        limits
            .max_messages
            .min(greedy.messages.len().saturating_sub(1))
    } else {
        limits.max_messages
    };

    let candidates = clique_candidates(&views, limits)?;
    let mut by_slot = vec![Vec::new(); cache.slot_count()];
    for (i, c) in candidates.iter().enumerate() {
        for &s in c {
            by_slot[s].push(i as u32);
        }
    }
    let mut search = Search {
        views: &views,
        candidates: &candidates,
        by_slot,
        nodes: 0,
        limits: *limits,
        seen: HashSet::new(),
    };
    let start = search.lower_bound(&state).max(1);
    for depth in start..=cap {
        search.seen.clear();
        let mut chosen = Vec::new();
        if search.dfs(&state, &mut chosen, depth)? {
            let slots: Vec<Vec<usize>> = chosen
                .iter()
                .map(|&c| candidates[c as usize].clone())
                .collect();
            return Ok(build(&slots));
        }
    }
    if greedy_fits && greedy.messages.len() <= limits.max_messages {
        return Ok(greedy);
    }
    Err(Error::Infeasible(format!(
        "no schedule with at most {} messages",
        limits.max_messages
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::RVector;
    use crate::delivery::decodable;
    use crate::exact::Frac;
    use crate::placement::{place_beta, Layout, PlacementConfig};

    fn cache(r: &[u32]) -> CacheState {
        let cfg = PlacementConfig::new(
            Layout::uniform(3, &[1, 1]).unwrap(),
            RVector::new(r.to_vec()).unwrap(),
        )
        .unwrap();
        place_beta(&cfg).unwrap()
    }

    fn rate(c: &CacheState, d: &str) -> Frac {
        let d = RequestVector::parse(d).unwrap();
        let s = exhaustive_schedule(c, &d, &SearchLimits::default()).unwrap();
        assert!(decodable(c, &s, &d).unwrap().decodable);
        s.rate()
    }

    #[test]
    fn toy_rows() {
        let c = cache(&[2, 1]);
        assert_eq!(rate(&c, "A,A,A"), Frac::new(1, 3));
        assert_eq!(rate(&c, "A,A,B"), Frac::new(2, 3));
        assert_eq!(rate(&c, "A,B,B"), Frac::new(2, 3));
        assert_eq!(rate(&c, "B,B,B"), Frac::new(2, 3));
    }

    #[test]
    fn chained_decoding_beats_plain_cliques() {
        // Single-level t = 1 with a common demand: two messages of 1/3.
        let c = cache(&[1, 1]);
        assert_eq!(rate(&c, "A,A,A"), Frac::new(2, 3));
        assert_eq!(rate(&c, "A,A,B"), Frac::from_integer(1));
    }

    #[test]
    fn tight_budget_is_infeasible() {
        let c = cache(&[2, 1]);
        let d = RequestVector::parse("B,B,B").unwrap();
        let limits = SearchLimits {
            max_messages: 2,
            ..SearchLimits::default()
        };
        assert!(matches!(
            exhaustive_schedule(&c, &d, &limits),
            Err(Error::Infeasible(_))
        ));
    }
}
