use crate::delivery::{DeliveryMessage, DeliverySchedule, RequestVector};
use crate::error::{Error, Result};
use crate::gf2::{BitRow, EchelonBasis};
use crate::placement::CacheState;

const CACHED: usize = usize::MAX;

/// What one user knows and wants, with unknown subfiles numbered densely.
#[derive(Clone, Debug)]
pub(crate) struct UserView {
    pub user: u32,
    /// slot -> column among this user's unknown slots, or `CACHED`.
    column: Vec<usize>,
    pub width: usize,
    /// Slots of the requested file the user lacks, ascending.
    pub needed: Vec<usize>,
}

impl UserView {
    pub fn is_cached(&self, slot: usize) -> bool {
        self.column[slot] == CACHED
    }

    /// The message with every cached summand stripped out.
    pub fn residual(&self, message: &[usize]) -> BitRow {
        let mut row = BitRow::zeros(self.width);
        for &slot in message {
            let col = self.column[slot];
            if col != CACHED {
                row.flip(col);
            }
        }
        row
    }

    pub fn unit(&self, slot: usize) -> BitRow {
        BitRow::unit(self.width, self.column[slot])
    }

    pub fn basis(&self, tags: usize) -> EchelonBasis {
        EchelonBasis::new(self.width, tags)
    }
}

pub(crate) fn user_views(cache: &CacheState, demand: &RequestVector) -> Result<Vec<UserView>> {
    if demand.users() != cache.users() {
        return Err(Error::validation(format!(
            "request vector has {} entries for {} users",
            demand.users(),
            cache.users()
        )));
    }
    let slots = cache.slot_count();
    Ok((1..=cache.users())
        .map(|user| {
            let stored = cache.storage(user);
            let mut column = vec![CACHED; slots];
            let mut width = 0;
            for (slot, c) in column.iter_mut().enumerate() {
                if !stored.get(slot) {
                    *c = width;
                    width += 1;
                }
            }
            UserView {
                user,
                column,
                width,
                needed: cache.missing_slots(user, demand.of(user)),
            }
        })
        .collect())
}

/// Summands of a message as slots of `cache`.
pub(crate) fn message_slots(cache: &CacheState, message: &DeliveryMessage) -> Result<Vec<usize>> {
    message
        .summands()
        .iter()
        .map(|s| {
            cache.slot(s.file, &s.tau).ok_or_else(|| {
                Error::validation(format!("summand {s} is not a subfile of this placement"))
            })
        })
        .collect()
}

pub(crate) fn schedule_slots(
    cache: &CacheState,
    schedule: &DeliverySchedule,
) -> Result<Vec<Vec<usize>>> {
    if schedule.subpacketization != cache.subpacketization() {
        return Err(Error::validation(format!(
            "schedule uses S = {} but the placement has S = {}",
            schedule.subpacketization,
            cache.subpacketization()
        )));
    }
    schedule
        .messages
        .iter()
        .map(|m| message_slots(cache, m))
        .collect()
}

/// Builds a message from slots.
pub(crate) fn slots_message(cache: &CacheState, slots: &[usize]) -> DeliveryMessage {
    let summands = slots
        .iter()
        .map(|&slot| {
            let (file, idx) = cache.slot_subfile(slot);
            crate::delivery::Subfile::new(file, idx.clone())
        })
        .collect();
    DeliveryMessage::new(summands).expect("slots are distinct")
}

/// Incremental decoding state of every user.
#[derive(Clone)]
pub(crate) struct DecodeState {
    bases: Vec<EchelonBasis>,
}

impl DecodeState {
    pub fn new(views: &[UserView]) -> Self {
        DecodeState {
            bases: views.iter().map(|v| v.basis(0)).collect(),
        }
    }

    /// Adds a message; returns which users gained rank.
    pub fn push(&mut self, views: &[UserView], message: &[usize]) -> Vec<bool> {
        views
            .iter()
            .zip(&mut self.bases)
            .map(|(v, b)| {
                let row = v.residual(message);
                !row.is_zero() && b.insert(row)
            })
            .collect()
    }

    pub fn contains_row(&self, user: usize, row: &BitRow) -> bool {
        self.bases[user].contains(row)
    }

    pub fn knows(&self, views: &[UserView], user: usize, slot: usize) -> bool {
        self.bases[user].contains(&views[user].unit(slot))
    }

    pub fn rank(&self, user: usize) -> usize {
        self.bases[user].rank()
    }

    /// Needed slots not yet decodable, as `(user index, slot)`.
    pub fn outstanding(&self, views: &[UserView]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, v) in views.iter().enumerate() {
            for &slot in &v.needed {
                if !self.knows(views, u, slot) {
                    out.push((u, slot));
                }
            }
        }
        out
    }
}
