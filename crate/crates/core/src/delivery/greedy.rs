//! Clique-style greedy delivery.
//!
//! Outstanding needs are pairs `(user, subfile)` ordered by subfile slot
//! (file, then chain rank) and then by user. Each round seeds a message with
//! the first outstanding pair and scans the rest in order, adding a pair when
//! its user is new to the message, its subfile is cached by every user already
//! in the message, and that user caches every subfile already in the message.
//! Every participant can then peel off its own subfile. After each message the
//! outstanding set is recomputed with full GF(2) decoding, so needs satisfied
//! indirectly also disappear.

use crate::delivery::context::{slots_message, user_views, DecodeState};
use crate::delivery::{DeliverySchedule, RequestVector};
use crate::error::Result;
use crate::placement::CacheState;

pub fn greedy_schedule(cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
    let views = user_views(cache, demand)?;
    let mut state = DecodeState::new(&views);
    let mut messages: Vec<Vec<usize>> = Vec::new();

    loop {
        let mut outstanding = state.outstanding(&views);
        if outstanding.is_empty() {
            break;
        }
        outstanding.sort_by_key(|&(u, slot)| (slot, u));
        let mut users: Vec<usize> = Vec::new();
        let mut summands: Vec<usize> = Vec::new();
        for &(u, slot) in &outstanding {
            if users.contains(&u) || summands.contains(&slot) {
                continue;
            }
            let others_hold_it = users.iter().all(|&v| views[v].is_cached(slot));
            let it_holds_others = summands.iter().all(|&s| views[u].is_cached(s));
            if others_hold_it && it_holds_others {
                users.push(u);
                summands.push(slot);
            }
        }
        summands.sort_unstable();
        state.push(&views, &summands);
        messages.push(summands);
    }

    let uncoded = distinct_needed(cache, demand);
    let schedule = if messages.len() > uncoded.len() {
        uncoded.iter().map(|&s| vec![s]).collect()
    } else {
        messages
    };
    Ok(DeliverySchedule::new(
        demand.clone(),
        cache.subpacketization(),
        schedule.iter().map(|m| slots_message(cache, m)).collect(),
    ))
}

/// Every subfile missing at some user that requested its file, ascending.
fn distinct_needed(cache: &CacheState, demand: &RequestVector) -> Vec<usize> {
    let mut slots: Vec<usize> = (1..=cache.users())
        .flat_map(|u| cache.missing_slots(u, demand.of(u)))
        .collect();
    slots.sort_unstable();
    slots.dedup();
    slots
}

/// Sends every needed subfile on its own.
pub fn uncoded_schedule(cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
    demand.check(cache.users(), u32::MAX)?;
    let messages = distinct_needed(cache, demand)
        .iter()
        .map(|&s| slots_message(cache, &[s]))
        .collect();
    Ok(DeliverySchedule::new(
        demand.clone(),
        cache.subpacketization(),
        messages,
    ))
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

    #[test]
    fn fully_cached_needs_nothing() {
        let c = cache(&[3, 3]);
        let d = RequestVector::parse("A,B,A").unwrap();
        let s = greedy_schedule(&c, &d).unwrap();
        assert!(s.messages.is_empty());
        assert_eq!(s.rate(), Frac::from_integer(0));
    }

    #[test]
    fn toy_all_a() {
        let c = cache(&[2, 1]);
        let d = RequestVector::parse("A,A,A").unwrap();
        let s = greedy_schedule(&c, &d).unwrap();
        assert!(decodable(&c, &s, &d).unwrap().decodable);
        assert!(s.rate() <= Frac::new(2, 3));
    }

    #[test]
    fn uncached_file_goes_uncoded() {
        let c = cache(&[3, 0]);
        let d = RequestVector::parse("A,A,B").unwrap();
        let s = greedy_schedule(&c, &d).unwrap();
        assert_eq!(s.rate(), Frac::from_integer(1));
        assert!(decodable(&c, &s, &d).unwrap().decodable);
        assert_eq!(
            uncoded_schedule(&c, &d).unwrap().rate(),
            Frac::from_integer(1)
        );
    }
}
