//! Delivery phase: XOR broadcast messages, decodability checking and
//! schedule generators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::combinatorics::SubfileIndex;
use crate::error::{Error, Result};
use crate::exact::Frac;
use crate::placement::{file_name, parse_file, CacheState, FileId};

mod context;
pub mod exhaustive;
pub mod greedy;
pub mod toy;
pub mod verify;

pub use exhaustive::{exhaustive_schedule, SearchLimits};
pub use greedy::{greedy_schedule, uncoded_schedule};
pub use toy::toy_schedule_beta;
pub use verify::{check_certificate, decodable, DecodeReport, Recovery, UserCertificate};

/// One subfile of one file.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subfile {
    pub file: FileId,
    pub tau: SubfileIndex,
}

impl Subfile {
    pub fn new(file: FileId, tau: SubfileIndex) -> Self {
        Subfile { file, tau }
    }

    /// Parses `A_{12,1}` (braces optional, `∅` for an empty set).
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::validation(format!("cannot parse subfile {text:?}"));
        let (file, rest) = text.trim().split_once('_').ok_or_else(bad)?;
        let file = parse_file(file).ok_or_else(bad)?;
        let rest = rest.trim_start_matches('{').trim_end_matches('}');
        let mut levels = Vec::new();
        for set in rest.split(',') {
            let set = set.trim();
            let users: Vec<u32> = if set == "∅" || set.is_empty() {
                Vec::new()
            } else if set.contains('.') {
                set.split('.')
                    .map(|u| u.parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?
            } else {
                set.chars()
                    .map(|c| c.to_digit(10).ok_or_else(bad))
                    .collect::<Result<_>>()?
            };
            levels.push(users);
        }
        let refs: Vec<&[u32]> = levels.iter().map(|v| v.as_slice()).collect();
        Ok(Subfile::new(file, SubfileIndex::from_users(&refs)?))
    }

    /// Relabels users: user `u` becomes `perm[u - 1]`.
    pub fn permute(&self, perm: &[u32]) -> Self {
        Subfile::new(self.file, self.tau.permute(perm))
    }
}

impl fmt::Display for Subfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{{{}}}", file_name(self.file), self.tau)
    }
}

/// XOR of distinct subfiles, each of size `1/S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subfile>", into = "Vec<Subfile>")]
pub struct DeliveryMessage {
    summands: Vec<Subfile>,
}

impl DeliveryMessage {
    /// Summands are stored sorted; repeated summands are rejected since they
    /// would cancel.
    pub fn new(mut summands: Vec<Subfile>) -> Result<Self> {
        if summands.is_empty() {
            return Err(Error::validation("a message needs at least one summand"));
        }
        summands.sort();
        if let Some(w) = summands.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!("summand {} repeated", w[0])));
        }
        Ok(DeliveryMessage { summands })
    }

    /// Parses `A_{12,1} + B_{13,3}` (`⊕` also accepted).
    pub fn parse(text: &str) -> Result<Self> {
        let parts = text
            .split(['+', '⊕'])
            .map(Subfile::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }

    pub fn summands(&self) -> &[Subfile] {
        &self.summands
    }

    pub fn permute(&self, perm: &[u32]) -> Self {
        let mut summands: Vec<_> = self.summands.iter().map(|s| s.permute(perm)).collect();
        summands.sort();
        DeliveryMessage { summands }
    }
}

impl TryFrom<Vec<Subfile>> for DeliveryMessage {
    type Error = Error;
    fn try_from(v: Vec<Subfile>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DeliveryMessage> for Vec<Subfile> {
    fn from(m: DeliveryMessage) -> Self {
        m.summands
    }
}

impl fmt::Display for DeliveryMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.summands.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// The file requested by each user, `d_k` for users `1..=K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestVector(Vec<FileId>);

impl RequestVector {
    pub fn new(files: Vec<FileId>) -> Result<Self> {
        if files.is_empty() {
            return Err(Error::validation("request vector is empty"));
        }
        if files.contains(&0) {
            return Err(Error::validation("file ids are 1-based"));
        }
        Ok(RequestVector(files))
    }

    /// Parses `A,A,B` or `1,1,2`.
    pub fn parse(text: &str) -> Result<Self> {
        let files = text
            .split(',')
            .map(|t| parse_file(t).ok_or_else(|| Error::validation(format!("bad file name {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(files)
    }

    /// Checks length `K` and ids in `1..=N`.
    pub fn check(&self, users: u32, files: u32) -> Result<()> {
        if self.0.len() != users as usize {
            return Err(Error::validation(format!(
                "request vector has {} entries for {users} users",
                self.0.len()
            )));
        }
        if let Some(&f) = self.0.iter().find(|&&f| f == 0 || f > files) {
            return Err(Error::validation(format!(
                "file id {f} outside 1..={files}"
            )));
        }
        Ok(())
    }

    pub fn files(&self) -> &[FileId] {
        &self.0
    }

    pub fn users(&self) -> u32 {
        self.0.len() as u32
    }

    /// File requested by 1-indexed `user`.
    pub fn of(&self, user: u32) -> FileId {
        self.0[(user - 1) as usize]
    }

    /// Sorted copy and the relabelling that maps it back.
    ///
    /// Users are sorted by `(file, user)`. The returned `perm` sends canonical
    /// user `j` to the original user `perm[j - 1]`, so for every `j`
    /// `self.of(perm[j - 1]) == canonical.of(j)`.
    pub fn canonical(&self) -> (RequestVector, Vec<u32>) {
        let mut users: Vec<u32> = (1..=self.users()).collect();
        users.sort_by_key(|&u| (self.of(u), u));
        let sorted = users.iter().map(|&u| self.of(u)).collect();
        (RequestVector(sorted), users)
    }

    /// Every request vector over `files` files for `users` users, in
    /// lexicographic order.
    pub fn all(users: u32, files: u32) -> Vec<RequestVector> {
        let mut out = Vec::new();
        let mut cur = vec![1; users as usize];
        loop {
            out.push(RequestVector(cur.clone()));
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < files {
                    cur[i] += 1;
                    for c in &mut cur[i + 1..] {
                        *c = 1;
                    }
                    break;
                }
            }
        }
    }
}

impl fmt::Display for RequestVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, &file) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", file_name(file))?;
        }
        write!(f, ")")
    }
}

/// Broadcast messages answering one request vector on one placement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliverySchedule {
    pub demand: RequestVector,
    #[serde(rename = "S")]
    pub subpacketization: u64,
    pub messages: Vec<DeliveryMessage>,
}

impl DeliverySchedule {
    pub fn new(
        demand: RequestVector,
        subpacketization: u64,
        messages: Vec<DeliveryMessage>,
    ) -> Self {
        DeliverySchedule {
            demand,
            subpacketization,
            messages,
        }
    }

    /// Size of the broadcast in file units, `|messages| / S`.
    pub fn rate(&self) -> Frac {
        Frac::new(self.messages.len() as i64, self.subpacketization as i64)
    }

    /// One message per line in `A_{12,1} + A_{13,1}` notation.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }

    pub fn permute(&self, perm: &[u32], demand: RequestVector) -> Self {
        DeliverySchedule {
            demand,
            subpacketization: self.subpacketization,
            messages: self.messages.iter().map(|m| m.permute(perm)).collect(),
        }
    }
}

/// Something that produces a delivery schedule for a placement and demand.
pub trait Scheduler: Sync {
    fn name(&self) -> &str;

    fn schedule(&self, cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule>;

    /// Whether the schedule size depends only on the multiset of requests.
    /// Expected-rate computations then evaluate one demand per request type.
    fn rate_is_symmetric(&self) -> bool {
        true
    }
}

/// The fixed message table for the three-user, two-file example.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyScheduler;

impl Scheduler for ToyScheduler {
    fn name(&self) -> &str {
        "toy"
    }

    fn schedule(&self, cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
        toy_schedule_beta(cache, demand)
    }
}

/// Clique-style greedy; see [`greedy_schedule`].
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyScheduler;

impl Scheduler for GreedyScheduler {
    fn name(&self) -> &str {
        "greedy"
    }

    fn schedule(&self, cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
        greedy_schedule(cache, demand)
    }

    fn rate_is_symmetric(&self) -> bool {
        false
    }
}

/// Minimum-size schedule search; see [`exhaustive_schedule`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExhaustiveScheduler {
    pub limits: SearchLimits,
}

impl Scheduler for ExhaustiveScheduler {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn schedule(&self, cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
        exhaustive_schedule(cache, demand, &self.limits)
    }
}

/// Exhaustive search, falling back to greedy when the budget runs out.
#[derive(Clone, Copy, Debug, Default)]
pub struct AutoScheduler {
    pub limits: SearchLimits,
}

impl Scheduler for AutoScheduler {
    fn name(&self) -> &str {
        "auto"
    }

    fn schedule(&self, cache: &CacheState, demand: &RequestVector) -> Result<DeliverySchedule> {
        match exhaustive_schedule(cache, demand, &self.limits) {
            Err(Error::Infeasible(_)) => greedy_schedule(cache, demand),
            other => other,
        }
    }

    fn rate_is_symmetric(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_messages() {
        let m = DeliveryMessage::parse("A_{23,2} + A_{12,1} ⊕ A_{13,1}").unwrap();
        assert_eq!(m.to_string(), "A_{12,1} + A_{13,1} + A_{23,2}");
        assert!(DeliveryMessage::parse("A_{12,1} + A_{12,1}").is_err());
        let e = Subfile::parse("B_{1,∅}").unwrap();
        assert_eq!(e.to_string(), "B_{1,∅}");
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<DeliveryMessage>(&json).unwrap(), m);
        assert!(serde_json::from_str::<DeliveryMessage>("[]").is_err());
    }

    #[test]
    fn request_vectors() {
        let d = RequestVector::parse("B,A,A").unwrap();
        assert_eq!(d.to_string(), "(B,A,A)");
        let (c, perm) = d.canonical();
        assert_eq!(c.to_string(), "(A,A,B)");
        assert_eq!(perm, [2, 3, 1]);
        for j in 1..=3 {
            assert_eq!(d.of(perm[j - 1]), c.of(j as u32));
        }
        assert!(d.check(3, 2).is_ok());
        assert!(d.check(3, 1).is_err());
        assert!(d.check(2, 2).is_err());
        assert!(RequestVector::parse("A,,B").is_err());
        assert_eq!(RequestVector::all(3, 2).len(), 8);
        assert_eq!(RequestVector::all(2, 3)[3].files(), [2, 1]);
    }
}
