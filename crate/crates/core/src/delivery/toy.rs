//! Hand-built delivery for three users, two singleton groups and
//! `r = (2, 1)`, where file A sits in the better-cached group.

use crate::delivery::{DeliveryMessage, DeliverySchedule, RequestVector};
use crate::error::{Error, Result};
use crate::placement::{CacheState, CoveredFile};

/// Messages for the sorted demands `(A,A,A)`, `(A,A,B)`, `(A,B,B)`, `(B,B,B)`.
const CANONICAL: [&[&str]; 4] = [
    &[
        "A_{12,1} + A_{13,1} + A_{23,2}",
        "A_{12,2} + A_{13,3} + A_{23,3}",
    ],
    &[
        "B_{12,1} + A_{23,2}",
        "B_{13,1} + A_{23,3}",
        "B_{12,2} + A_{13,1}",
        "B_{23,2} + A_{13,3}",
    ],
    &[
        "B_{12,1} + A_{23,2}",
        "B_{13,1} + A_{23,3}",
        "B_{12,2} + B_{13,3}",
        "B_{23,2} + B_{23,3}",
    ],
    &[
        "B_{12,1} + B_{12,2}",
        "B_{12,1} + B_{13,3}",
        "B_{13,1} + B_{23,2}",
        "B_{13,1} + B_{23,3}",
    ],
];

pub(crate) fn is_toy_placement(cache: &CacheState) -> bool {
    cache.users() == 3
        && cache.r().as_slice() == [2, 1]
        && cache.files()
            == [
                CoveredFile { id: 1, level: 0 },
                CoveredFile { id: 2, level: 1 },
            ]
}

/// The canonical schedule for a sorted demand.
pub fn canonical_schedule(sorted: &RequestVector) -> Result<DeliverySchedule> {
    let count_b = sorted.files().iter().filter(|&&f| f == 2).count();
    let rows = CANONICAL[count_b];
    let messages = rows
        .iter()
        .map(|m| DeliveryMessage::parse(m))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeliverySchedule::new(sorted.clone(), 6, messages))
}

/// Table-driven schedule for the three-user example.
///
/// Unsorted demands are answered by relabelling users: the demand is sorted
/// by `(file, user)` (see [`RequestVector::canonical`]), the sorted demand's
/// schedule is looked up, and canonical user `j` is renamed to the original
/// user it came from in every chain of every message.
pub fn toy_schedule_beta(cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
    if !is_toy_placement(cache) {
        return Err(Error::Unsupported(
            "the table schedule needs K = 3, files A and B in singleton groups, r = (2,1)".into(),
        ));
    }
    demand.check(3, 2)?;
    let (sorted, perm) = demand.canonical();
    let canonical = canonical_schedule(&sorted)?;
    Ok(canonical.permute(&perm, demand.clone()))
}
