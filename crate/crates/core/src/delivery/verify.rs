//! GF(2) decodability check with per-user certificates.
//!
//! For user `k`, cached subfiles are known constants, so each message reduces
//! to the XOR of its uncached summands. User `k` can decode a missing subfile
//! of `d_k` iff its unit vector lies in the span of those reduced messages.
//! Elimination tracks which messages were combined, giving the certificate.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::delivery::context::{schedule_slots, user_views};
use crate::delivery::{DeliverySchedule, RequestVector, Subfile};
use crate::error::{Error, Result};
use crate::placement::{CacheState, FileId};

/// How one subfile is recovered: XOR the listed messages and the listed
/// cached subfiles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Recovery {
    pub subfile: Subfile,
    /// 0-based message positions in the schedule.
    pub messages: Vec<usize>,
    pub cached: Vec<Subfile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UserCertificate {
    pub user: u32,
    pub requested: FileId,
    pub recovered: Vec<Recovery>,
    /// Needed subfiles outside the span.
    pub missing: Vec<Subfile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecodeReport {
    pub decodable: bool,
    pub users: Vec<UserCertificate>,
}

/// Checks that every user recovers every subfile of its requested file.
pub fn decodable(
    cache: &CacheState,
    schedule: &DeliverySchedule,
    demand: &RequestVector,
) -> Result<DecodeReport> {
    if &schedule.demand != demand {
        return Err(Error::validation(format!(
            "schedule answers {} but {} was requested",
            schedule.demand, demand
        )));
    }
    let messages = schedule_slots(cache, schedule)?;
    let views = user_views(cache, demand)?;
    let subfile = |slot: usize| {
        let (f, idx) = cache.slot_subfile(slot);
        Subfile::new(f, idx.clone())
    };

    let mut users = Vec::with_capacity(views.len());
    for view in &views {
        let mut basis = view.basis(messages.len());
        for m in &messages {
            basis.insert(view.residual(m));
        }
        let mut recovered = Vec::new();
        let mut missing = Vec::new();
        for &slot in &view.needed {
            match basis.express(&view.unit(slot)) {
                Some(combo) => {
                    let used: Vec<usize> = combo.ones().collect();
                    // Cached summands appearing an odd number of times.
                    let mut odd = BTreeSet::new();
                    for &i in &used {
                        for &s in &messages[i] {
                            if view.is_cached(s) && !odd.insert(s) {
                                odd.remove(&s);
                            }
                        }
                    }
                    recovered.push(Recovery {
                        subfile: subfile(slot),
                        messages: used,
                        cached: odd.into_iter().map(subfile).collect(),
                    });
                }
                None => missing.push(subfile(slot)),
            }
        }
        users.push(UserCertificate {
            user: view.user,
            requested: demand.of(view.user),
            recovered,
            missing,
        });
    }
    Ok(DecodeReport {
        decodable: users.iter().all(|u| u.missing.is_empty()),
        users,
    })
}

/// Replays a certificate symbolically: for every recovery, the XOR of the
/// named messages and cached subfiles must be exactly the target subfile,
/// and every named cached subfile must really be in that user's cache.
pub fn check_certificate(
    cache: &CacheState,
    schedule: &DeliverySchedule,
    report: &DecodeReport,
) -> bool {
    report.users.iter().all(|cert| {
        cert.recovered.iter().all(|rec| {
            let mut odd: BTreeSet<&Subfile> = BTreeSet::new();
            let mut parts: Vec<&Subfile> = rec.cached.iter().collect();
            for &i in &rec.messages {
                let Some(m) = schedule.messages.get(i) else {
                    return false;
                };
                parts.extend(m.summands());
            }
            for s in parts {
                if !odd.remove(s) {
                    odd.insert(s);
                }
            }
            odd.len() == 1
                && odd.contains(&rec.subfile)
                && rec
                    .cached
                    .iter()
                    .all(|s| cache.holds(cert.user, s.file, &s.tau))
        })
    })
}
