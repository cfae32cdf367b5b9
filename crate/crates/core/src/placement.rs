//! Placement phase: who caches which subfile.
//!
//! Files are split into `S` equal subfiles labelled by nested chains (see
//! [`crate::combinatorics`]). Under the nonuniform scheme every file shares
//! the same `S`, and user `k` caches subfile `tau` of a file in group `l` iff
//! `k ∈ tau_l`. The grouping baseline instead places each group on its own
//! with a single-level chain, memory-sharing between two integer replication
//! degrees when the requested degree is fractional.

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::combinatorics::{enumerate_indices, RVector, SubfileIndex};
use crate::error::{Error, Result};
use crate::exact::{exact_to_f64, Exact, Frac};
use crate::gf2::BitRow;

/// 1-indexed file identifier.
pub type FileId = u32;

/// Tolerance on `sum(p) == 1`.
pub const POPULARITY_TOLERANCE: f64 = 1e-12;

/// Display name of a file: `A`, `B`, … `Z`, then `W27`, `W28`, ….
pub fn file_name(id: FileId) -> String {
    if (1..=26).contains(&id) {
        char::from(b'A' + (id - 1) as u8).to_string()
    } else {
        format!("W{id}")
    }
}

/// Parses a file name produced by [`file_name`] or a bare 1-based number.
pub fn parse_file(token: &str) -> Option<FileId> {
    let t = token.trim();
    if let Ok(n) = t.parse::<FileId>() {
        return Some(n);
    }
    let mut chars = t.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => Some(c as FileId - 'A' as FileId + 1),
        (Some('W'), Some(_)) => t[1..].parse().ok(),
        _ => None,
    }
}

/// A contiguous block of files sharing one replication degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Group {
    pub size: u32,
    pub first_file: FileId,
}

impl Group {
    pub fn files(&self) -> impl Iterator<Item = FileId> {
        self.first_file..self.first_file + self.size
    }
}

/// Users, file groups and request probabilities, without a cache allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    users: u32,
    groups: Vec<Group>,
    popularity: Vec<Exact>,
}

impl Layout {
    /// Groups are laid out in order: group 1 holds files `1..=N_1`, and so on.
    pub fn new(users: u32, group_sizes: &[u32], popularity: Vec<Exact>) -> Result<Self> {
        if users == 0 {
            return Err(Error::validation("user count must be at least 1"));
        }
        if users > crate::combinatorics::MAX_USERS {
            return Err(Error::validation(format!(
                "user count {users} is too large"
            )));
        }
        if group_sizes.is_empty() {
            return Err(Error::validation("at least one file group is required"));
        }
        if let Some(pos) = group_sizes.iter().position(|&n| n == 0) {
            return Err(Error::validation(format!("group {} is empty", pos + 1)));
        }
        let mut groups = Vec::with_capacity(group_sizes.len());
        let mut next = 1;
        for &size in group_sizes {
            groups.push(Group {
                size,
                first_file: next,
            });
            next += size;
        }
        let files = (next - 1) as usize;
        if popularity.len() != files {
            return Err(Error::validation(format!(
                "popularity has {} entries for {files} files",
                popularity.len()
            )));
        }
        if let Some(i) = popularity.iter().position(|p| p.is_negative()) {
            return Err(Error::validation(format!(
                "negative probability for file {}",
                file_name(i as FileId + 1)
            )));
        }
        let total: Exact = popularity.iter().sum();
        if (exact_to_f64(&total) - 1.0).abs() > POPULARITY_TOLERANCE {
            return Err(Error::validation(format!(
                "popularity sums to {}, expected 1",
                exact_to_f64(&total)
            )));
        }
        Ok(Layout {
            users,
            groups,
            popularity,
        })
    }

    /// Equal popularity `1/N` for every file.
    pub fn uniform(users: u32, group_sizes: &[u32]) -> Result<Self> {
        let files: u32 = group_sizes.iter().sum();
        let p = if files == 0 {
            Exact::zero()
        } else {
            Exact::one() / Exact::from_integer(files.into())
        };
        Self::new(users, group_sizes, vec![p; files as usize])
    }

    pub fn users(&self) -> u32 {
        self.users
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn files(&self) -> u32 {
        self.groups.iter().map(|g| g.size).sum()
    }

    pub fn popularity(&self) -> &[Exact] {
        &self.popularity
    }

    pub fn popularity_f64(&self) -> Vec<f64> {
        self.popularity.iter().map(exact_to_f64).collect()
    }

    /// 0-based group of a file.
    pub fn group_of(&self, file: FileId) -> Option<usize> {
        self.groups
            .iter()
            .position(|g| file >= g.first_file && file < g.first_file + g.size)
    }

    /// Same users and popularity with a different grouping.
    pub fn regroup(&self, group_sizes: &[u32]) -> Result<Self> {
        Self::new(self.users, group_sizes, self.popularity.clone())
    }

    pub fn with_popularity(&self, popularity: Vec<Exact>) -> Result<Self> {
        let sizes: Vec<u32> = self.groups.iter().map(|g| g.size).collect();
        Self::new(self.users, &sizes, popularity)
    }
}

/// Sorts files by decreasing popularity (stable on ties) and cuts the sorted
/// list into groups of the given sizes.
///
/// Returns the reordering (`order[j]` is the original 0-based index of the
/// file that becomes file `j + 1`) and the regrouped layout.
pub fn group_by_popularity(
    users: u32,
    popularity: &[Exact],
    group_sizes: &[u32],
) -> Result<(Vec<usize>, Layout)> {
    let mut order: Vec<usize> = (0..popularity.len()).collect();
    order.sort_by(|&a, &b| popularity[b].cmp(&popularity[a]));
    let sorted = order.iter().map(|&i| popularity[i].clone()).collect();
    let layout = Layout::new(users, group_sizes, sorted)?;
    Ok((order, layout))
}

/// A layout plus an r-vector: everything the nonuniform placement needs.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementConfig {
    layout: Layout,
    r: RVector,
}

impl PlacementConfig {
    pub fn new(layout: Layout, r: RVector) -> Result<Self> {
        if r.len() != layout.groups.len() {
            return Err(Error::validation(format!(
                "r-vector has {} entries for {} groups",
                r.len(),
                layout.groups.len()
            )));
        }
        r.check_users(layout.users)?;
        Ok(PlacementConfig { layout, r })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn users(&self) -> u32 {
        self.layout.users
    }

    pub fn r(&self) -> &RVector {
        &self.r
    }

    pub fn files(&self) -> u32 {
        self.layout.files()
    }

    /// Cache size per user, `M = sum(N_l r_l) / K`.
    pub fn memory(&self) -> Frac {
        let total: i64 = self
            .layout
            .groups
            .iter()
            .zip(self.r.as_slice())
            .map(|(g, &r)| i64::from(g.size) * i64::from(r))
            .sum();
        Frac::new(total, i64::from(self.layout.users))
    }
}

/// One cached file: which chain level decides its placement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoveredFile {
    pub id: FileId,
    pub level: usize,
}

/// Cache contents of every user for one family of equal-size subfiles.
///
/// Subfiles are addressed by a dense slot `file_pos * S + rank`, where
/// `file_pos` is the position in [`CacheState::files`] and `rank` the chain
/// rank.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheState {
    users: u32,
    r: RVector,
    indices: Vec<SubfileIndex>,
    files: Vec<CoveredFile>,
    storage: Vec<BitRow>,
}

impl CacheState {
    /// Applies the placement rule to the listed files.
    pub fn build(users: u32, r: RVector, files: Vec<CoveredFile>) -> Result<Self> {
        let indices = enumerate_indices(users, &r)?;
        if let Some(f) = files.iter().find(|f| f.level >= r.len()) {
            return Err(Error::validation(format!(
                "file {} uses chain level {} of {}",
                file_name(f.id),
                f.level + 1,
                r.len()
            )));
        }
        let s = indices.len();
        let slots = s
            .checked_mul(files.len())
            .ok_or(Error::Overflow("slot count"))?;
        let mut storage = vec![BitRow::zeros(slots); users as usize];
        for (pos, file) in files.iter().enumerate() {
            for (rank, idx) in indices.iter().enumerate() {
                let mut holders = idx.level(file.level);
                while holders != 0 {
                    let user = holders.trailing_zeros() as usize;
                    storage[user].set(pos * s + rank);
                    holders &= holders - 1;
                }
            }
        }
        Ok(CacheState {
            users,
            r,
            indices,
            files,
            storage,
        })
    }

    pub fn users(&self) -> u32 {
        self.users
    }

    pub fn r(&self) -> &RVector {
        &self.r
    }

    pub fn subpacketization(&self) -> u64 {
        self.indices.len() as u64
    }

    pub fn indices(&self) -> &[SubfileIndex] {
        &self.indices
    }

    pub fn files(&self) -> &[CoveredFile] {
        &self.files
    }

    pub fn slot_count(&self) -> usize {
        self.indices.len() * self.files.len()
    }

    pub fn file_position(&self, file: FileId) -> Option<usize> {
        self.files.iter().position(|f| f.id == file)
    }

    pub fn covers(&self, file: FileId) -> bool {
        self.file_position(file).is_some()
    }

    /// Slot of `(file, idx)`, if the file is covered and the chain is one of
    /// the enumerated indices.
    pub fn slot(&self, file: FileId, idx: &SubfileIndex) -> Option<usize> {
        let pos = self.file_position(file)?;
        let rank = self.indices.binary_search(idx).ok()?;
        Some(pos * self.indices.len() + rank)
    }

    pub fn slot_subfile(&self, slot: usize) -> (FileId, &SubfileIndex) {
        let s = self.indices.len();
        (self.files[slot / s].id, &self.indices[slot % s])
    }

    /// Whether 1-indexed `user` stores the slot.
    pub fn holds_slot(&self, user: u32, slot: usize) -> bool {
        self.storage[(user - 1) as usize].get(slot)
    }

    pub fn holds(&self, user: u32, file: FileId, idx: &SubfileIndex) -> bool {
        self.slot(file, idx)
            .is_some_and(|slot| self.holds_slot(user, slot))
    }

    pub fn storage(&self, user: u32) -> &BitRow {
        &self.storage[(user - 1) as usize]
    }

    /// Slots of `file` that `user` does not store, ascending. Empty when the
    /// file is not covered by this state.
    pub fn missing_slots(&self, user: u32, file: FileId) -> Vec<usize> {
        let Some(pos) = self.file_position(file) else {
            return Vec::new();
        };
        let s = self.indices.len();
        let row = self.storage(user);
        (pos * s..(pos + 1) * s)
            .filter(|&slot| !row.get(slot))
            .collect()
    }

    /// Cached subfiles of `user`, ordered by file then chain rank.
    pub fn entries(&self, user: u32) -> Vec<(FileId, SubfileIndex)> {
        self.storage(user)
            .ones()
            .map(|slot| {
                let (f, idx) = self.slot_subfile(slot);
                (f, idx.clone())
            })
            .collect()
    }

    /// Number of stored subfiles of `file` at `user`.
    pub fn stored_count(&self, user: u32, file: FileId) -> u64 {
        let Some(pos) = self.file_position(file) else {
            return 0;
        };
        let s = self.indices.len();
        let row = self.storage(user);
        (pos * s..(pos + 1) * s)
            .filter(|&slot| row.get(slot))
            .count() as u64
    }

    /// Cache used by `user`, counted entry by entry, in file units.
    pub fn user_memory(&self, user: u32) -> Result<Frac> {
        if user == 0 || user > self.users {
            return Err(Error::validation(format!(
                "user {user} outside 1..={}",
                self.users
            )));
        }
        let count = i64::try_from(self.storage(user).count_ones())
            .map_err(|_| Error::Overflow("cache entry count"))?;
        Ok(Frac::new(count, self.indices.len() as i64))
    }

    /// JSON-friendly view.
    pub fn export(&self) -> CacheExport {
        CacheExport {
            users: self.users,
            subpacketization: self.subpacketization(),
            r: self.r.as_slice().to_vec(),
            files: self
                .files
                .iter()
                .map(|f| FileExport {
                    id: f.id,
                    name: file_name(f.id),
                    level: f.level + 1,
                })
                .collect(),
            caches: (1..=self.users)
                .map(|user| UserCacheExport {
                    user,
                    entries: self
                        .entries(user)
                        .into_iter()
                        .map(|(file, tau)| EntryExport {
                            label: format!("{}_{{{}}}", file_name(file), tau),
                            file,
                            tau,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CacheExport {
    #[serde(rename = "K")]
    pub users: u32,
    #[serde(rename = "S")]
    pub subpacketization: u64,
    pub r: Vec<u32>,
    pub files: Vec<FileExport>,
    pub caches: Vec<UserCacheExport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileExport {
    pub id: FileId,
    pub name: String,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserCacheExport {
    pub user: u32,
    pub entries: Vec<EntryExport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryExport {
    pub file: FileId,
    pub tau: SubfileIndex,
    pub label: String,
}

/// Nonuniform placement: one chain family shared by all files, file `i`
/// cached by user `k` on subfile `tau` iff `k ∈ tau_{g_i}`.
pub fn place_beta(cfg: &PlacementConfig) -> Result<CacheState> {
    let files = cfg
        .layout
        .groups
        .iter()
        .enumerate()
        .flat_map(|(level, g)| g.files().map(move |id| CoveredFile { id, level }))
        .collect();
    CacheState::build(cfg.users(), cfg.r.clone(), files)
}

/// `M_l = r_l N_l / K` for each group.
pub fn per_group_cache(cfg: &PlacementConfig) -> Vec<Frac> {
    let k = i64::from(cfg.users());
    cfg.layout
        .groups
        .iter()
        .zip(cfg.r.as_slice())
        .map(|(g, &r)| Frac::new(i64::from(r) * i64::from(g.size), k))
        .collect()
}

/// One memory-sharing share of a group under the grouping baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementPart {
    /// 0-based group.
    pub group: usize,
    /// Fraction of every file of the group handled by this part.
    pub weight: Frac,
    /// Integer replication degree `t` of the part.
    pub replication: u32,
    pub cache: CacheState,
}

/// Independent per-group placements, possibly memory-shared.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedPlacement {
    users: u32,
    parts: Vec<PlacementPart>,
}

impl SharedPlacement {
    /// Wraps a single nonuniform placement as one full-weight part.
    pub fn single(cache: CacheState) -> Self {
        SharedPlacement {
            users: cache.users(),
            parts: vec![PlacementPart {
                group: 0,
                weight: Frac::one(),
                replication: cache.r().get(0),
                cache,
            }],
        }
    }

    pub fn users(&self) -> u32 {
        self.users
    }

    pub fn parts(&self) -> &[PlacementPart] {
        &self.parts
    }

    /// Cache used by `user` summed over parts.
    pub fn user_memory(&self, user: u32) -> Result<Frac> {
        let mut total = Frac::zero();
        for part in &self.parts {
            total += part.weight * part.cache.user_memory(user)?;
        }
        Ok(total)
    }
}

/// Grouping baseline: each group gets its own single-level placement with
/// replication degree `split[g]` (in `[0, K]`, possibly fractional).
///
/// A fractional degree `t` is realized by memory-sharing: a fraction
/// `ceil(t) - t` of each file is placed with `floor(t)` and the rest with
/// `ceil(t)`.
pub fn place_alpha(layout: &Layout, split: &[Frac]) -> Result<SharedPlacement> {
    if split.len() != layout.groups.len() {
        return Err(Error::validation(format!(
            "split has {} entries for {} groups",
            split.len(),
            layout.groups.len()
        )));
    }
    let k = Frac::from_integer(i64::from(layout.users));
    let mut parts = Vec::new();
    for (g, (group, &t)) in layout.groups.iter().zip(split).enumerate() {
        if t.is_negative() || t > k {
            return Err(Error::validation(format!(
                "replication {t} of group {} outside [0, {}]",
                g + 1,
                layout.users
            )));
        }
        let low = t.floor();
        let high_weight = t - low;
        let low_t = low.to_integer().to_u32().expect("bounded by K");
        let shares = [(low_t, Frac::one() - high_weight), (low_t + 1, high_weight)];
        for (replication, weight) in shares {
            if weight.is_zero() {
                continue;
            }
            let files = group
                .files()
                .map(|id| CoveredFile { id, level: 0 })
                .collect();
            let cache = CacheState::build(layout.users, RVector::new(vec![replication])?, files)?;
            parts.push(PlacementPart {
                group: g,
                weight,
                replication,
                cache,
            });
        }
    }
    Ok(SharedPlacement {
        users: layout.users,
        parts,
    })
}
