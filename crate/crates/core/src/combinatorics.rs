//! Nested subset chains indexing subfiles, and the sub-packetization count.
//!
//! A subfile of every file is labelled by a chain `tau_1 ⊇ tau_2 ⊇ … ⊇ tau_L`
//! of user subsets with `|tau_l| = r_l`. User sets are bitmasks: bit `i - 1`
//! stands for user `i` (users are 1-indexed in all public output).
//!
//! Chains are totally ordered lexicographically on their masks, compared as
//! unsigned integers: first by `tau_1`, then by `tau_2`, and so on. This is the
//! order of [`enumerate_indices`] and the numbering of [`index_rank`]. For
//! `K = 3, r = (2, 1)` it gives `12,1  12,2  13,1  13,3  23,2  23,3`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Bitmask of users; bit `i - 1` is user `i`.
pub type UserSet = u64;

/// Largest supported user count (one bit per user in a `u64`).
pub const MAX_USERS: u32 = 63;

/// Largest sub-packetization that will be materialized.
pub const MAX_SUBPACKETIZATION: u64 = 1_000_000;

/// Per-group replication degrees `(r_1, …, r_L)`, non-increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RVector(Vec<u32>);

impl RVector {
    /// Builds an r-vector, rejecting empty or increasing sequences.
    ///
    /// Groups are never reordered here; callers that hold an unsorted
    /// r-vector must permute their groups first.
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("r-vector must have at least one group"));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] < w[1]) {
            return Err(Error::validation(format!(
                "r-vector must be non-increasing, found {} followed by {}",
                w[0], w[1]
            )));
        }
        Ok(RVector(values))
    }

    /// Checks `0 <= r_l <= K` and the user-count limit.
    pub fn check_users(&self, users: u32) -> Result<()> {
        if users == 0 {
            return Err(Error::validation("user count must be at least 1"));
        }
        if users > MAX_USERS {
            return Err(Error::validation(format!(
                "user count {users} exceeds the supported maximum {MAX_USERS}"
            )));
        }
        if self.0[0] > users {
            return Err(Error::validation(format!(
                "r_1 = {} exceeds the user count {users}",
                self.0[0]
            )));
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Number of groups `L`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, group: usize) -> u32 {
        self.0[group]
    }
}

impl fmt::Display for RVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

/// One nested chain `(tau_1, …, tau_L)` labelling a subfile.
///
/// The derived ordering is the documented enumeration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubfileIndex {
    chain: Vec<UserSet>,
}

impl SubfileIndex {
    /// Builds an index from raw masks without checking it against an r-vector.
    pub fn from_masks(chain: Vec<UserSet>) -> Self {
        SubfileIndex { chain }
    }

    /// Builds an index from 1-indexed user lists, one per level.
    pub fn from_users(levels: &[&[u32]]) -> Result<Self> {
        let mut chain = Vec::with_capacity(levels.len());
        for level in levels {
            chain.push(users_to_mask(level)?);
        }
        Ok(SubfileIndex { chain })
    }

    pub fn masks(&self) -> &[UserSet] {
        &self.chain
    }

    /// `tau_l` for 0-based level `l`.
    pub fn level(&self, level: usize) -> UserSet {
        self.chain[level]
    }

    pub fn levels(&self) -> usize {
        self.chain.len()
    }

    /// Whether 1-indexed `user` belongs to `tau_level` (0-based level).
    pub fn contains(&self, level: usize, user: u32) -> bool {
        self.chain[level] >> (user - 1) & 1 == 1
    }

    /// Checks the chain against `(K, r)`: right length, nesting, sizes, and
    /// no users beyond `K`.
    pub fn validate(&self, users: u32, r: &RVector) -> Result<()> {
        if self.chain.len() != r.len() {
            return Err(Error::validation(format!(
                "index has {} levels, r-vector has {}",
                self.chain.len(),
                r.len()
            )));
        }
        let all = full_set(users);
        let mut parent = all;
        for (level, (&mask, &size)) in self.chain.iter().zip(r.as_slice()).enumerate() {
            if mask & !parent != 0 {
                return Err(Error::validation(format!(
                    "tau_{} is not contained in its parent",
                    level + 1
                )));
            }
            if mask.count_ones() != size {
                return Err(Error::validation(format!(
                    "|tau_{}| = {} but r_{} = {size}",
                    level + 1,
                    mask.count_ones(),
                    level + 1
                )));
            }
            parent = mask;
        }
        Ok(())
    }

    /// Applies a user relabelling: user `u` becomes `perm[u - 1]`.
    pub fn permute(&self, perm: &[u32]) -> SubfileIndex {
        SubfileIndex {
            chain: self.chain.iter().map(|&m| permute_set(m, perm)).collect(),
        }
    }

    /// The chain as 1-indexed user lists.
    pub fn to_users(&self) -> Vec<Vec<u32>> {
        self.chain.iter().map(|&m| mask_to_users(m)).collect()
    }
}

impl fmt::Display for SubfileIndex {
    /// Compact label such as `12,1`; sets with a user above 9 are
    /// dot-separated (`3.10`), the empty set prints as `∅`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &mask) in self.chain.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write_set(f, mask)?;
        }
        Ok(())
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, mask: UserSet) -> fmt::Result {
    if mask == 0 {
        return write!(f, "∅");
    }
    let users = mask_to_users(mask);
    let sep = if users.iter().any(|&u| u > 9) {
        "."
    } else {
        ""
    };
    for (j, u) in users.iter().enumerate() {
        if j > 0 {
            write!(f, "{sep}")?;
        }
        write!(f, "{u}")?;
    }
    Ok(())
}

impl Serialize for SubfileIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_users().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SubfileIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let levels: Vec<Vec<u32>> = Vec::deserialize(deserializer)?;
        let mut chain = Vec::with_capacity(levels.len());
        for level in &levels {
            chain.push(users_to_mask(level).map_err(serde::de::Error::custom)?);
        }
        Ok(SubfileIndex { chain })
    }
}

pub fn full_set(users: u32) -> UserSet {
    if users >= 64 {
        u64::MAX
    } else {
        (1u64 << users) - 1
    }
}

pub fn mask_to_users(mask: UserSet) -> Vec<u32> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() + 1);
        m &= m - 1;
    }
    out
}

pub fn users_to_mask(users: &[u32]) -> Result<UserSet> {
    let mut mask = 0;
    for &u in users {
        if u == 0 || u > MAX_USERS {
            return Err(Error::validation(format!("user id {u} out of range")));
        }
        let bit = 1u64 << (u - 1);
        if mask & bit != 0 {
            return Err(Error::validation(format!("user {u} listed twice")));
        }
        mask |= bit;
    }
    Ok(mask)
}

/// Image of a user set under `u -> perm[u - 1]`.
pub fn permute_set(mask: UserSet, perm: &[u32]) -> UserSet {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let u = m.trailing_zeros() as usize;
        out |= 1u64 << (perm[u] - 1);
        m &= m - 1;
    }
    out
}

/// Exact binomial coefficient with overflow detection.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or(Error::Overflow("binomial coefficient"))?
            / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return Err(Error::Overflow("binomial coefficient"));
        }
    }
    Ok(acc as u64)
}

fn binomial_small(n: u32, k: u32) -> u64 {
    // Only called with n <= 63, where every C(n, k) fits in a u64.
    binomial(u64::from(n), u64::from(k)).expect("C(n, k) fits for n <= 63")
}

/// Sub-packetization `S = K! / ((K - r_1)! (r_1 - r_2)! … r_L!)`.
///
/// Computed as `C(K, r_1) · C(r_1, r_2) · … · C(r_{L-1}, r_L)`, one factor per
/// nesting level.
pub fn subpacketization(users: u32, r: &RVector) -> Result<u64> {
    r.check_users(users)?;
    let mut parent = users;
    let mut s: u64 = 1;
    for &size in r.as_slice() {
        s = s
            .checked_mul(binomial_small(parent, size))
            .ok_or(Error::Overflow("sub-packetization"))?;
        parent = size;
    }
    Ok(s)
}

/// Number of chain completions below each level: `tail[l]` counts the
/// choices of `tau_{l+1}, …, tau_L` once `tau_l` is fixed.
fn tail_counts(r: &RVector) -> Vec<u64> {
    let sizes = r.as_slice();
    let mut tail = vec![1u64; sizes.len()];
    for l in (0..sizes.len().saturating_sub(1)).rev() {
        tail[l] = tail[l + 1] * binomial_small(sizes[l], sizes[l + 1]);
    }
    tail
}

/// All `S` chains for `(K, r)` in ascending lexicographic mask order.
pub fn enumerate_indices(users: u32, r: &RVector) -> Result<Vec<SubfileIndex>> {
    let s = subpacketization(users, r)?;
    if s > MAX_SUBPACKETIZATION {
        return Err(Error::Limit(format!(
            "sub-packetization {s} exceeds {MAX_SUBPACKETIZATION}"
        )));
    }
    let mut out = Vec::with_capacity(s as usize);
    let mut chain = Vec::with_capacity(r.len());
    extend_chains(full_set(users), r.as_slice(), &mut chain, &mut out);
    debug_assert_eq!(out.len() as u64, s);
    Ok(out)
}

fn extend_chains(
    parent: UserSet,
    sizes: &[u32],
    chain: &mut Vec<UserSet>,
    out: &mut Vec<SubfileIndex>,
) {
    let Some((&size, rest)) = sizes.split_first() else {
        out.push(SubfileIndex::from_masks(chain.clone()));
        return;
    };
    for child in subsets_in_order(parent, size) {
        chain.push(child);
        extend_chains(child, rest, chain, out);
        chain.pop();
    }
}

/// The `size`-element subsets of `parent` in increasing numeric order.
pub fn subsets_in_order(parent: UserSet, size: u32) -> Vec<UserSet> {
    let n = parent.count_ones();
    if size > n {
        return Vec::new();
    }
    if size == 0 {
        return vec![0];
    }
    let positions = mask_positions(parent);
    let mut out = Vec::with_capacity(binomial_small(n, size) as usize);
    // Gosper's hack over compressed positions; expansion is monotone so the
    // order carries over to the parent's bits.
    let mut c: u64 = (1u64 << size) - 1;
    let limit = 1u128 << n;
    while u128::from(c) < limit {
        out.push(expand(c, &positions));
        let lowest = c & c.wrapping_neg();
        let ripple = c.wrapping_add(lowest);
        if ripple == 0 {
            break;
        }
        c = (((ripple ^ c) >> 2) / lowest) | ripple;
    }
    out
}

fn mask_positions(mask: UserSet) -> Vec<u32> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros());
        m &= m - 1;
    }
    out
}

fn expand(compressed: u64, positions: &[u32]) -> UserSet {
    let mut out = 0;
    let mut c = compressed;
    while c != 0 {
        out |= 1u64 << positions[c.trailing_zeros() as usize];
        c &= c - 1;
    }
    out
}

/// Position of `child` among the equal-size subsets of `parent` in numeric
/// order (combinatorial number system on compressed bit positions).
fn subset_rank(child: UserSet, parent: UserSet) -> u64 {
    let mut rank = 0;
    let mut seen = 0u32;
    let mut compressed_pos = 0u32;
    let mut p = parent;
    while p != 0 {
        let bit = p & p.wrapping_neg();
        if child & bit != 0 {
            seen += 1;
            rank += binomial_small(compressed_pos, seen);
        }
        compressed_pos += 1;
        p &= p - 1;
    }
    rank
}

fn subset_unrank(mut rank: u64, parent: UserSet, size: u32) -> UserSet {
    let positions = mask_positions(parent);
    let mut compressed = 0u64;
    let mut upper = positions.len() as u32;
    for i in (1..=size).rev() {
        let mut c = upper;
        while c > 0 && binomial_small(c - 1, i) > rank {
            c -= 1;
        }
        let c = c - 1;
        rank -= binomial_small(c, i);
        compressed |= 1 << c;
        upper = c;
    }
    expand(compressed, &positions)
}

/// Dense number of `idx` in `[0, S)`, consistent with [`enumerate_indices`].
pub fn index_rank(idx: &SubfileIndex, users: u32, r: &RVector) -> Result<u64> {
    r.check_users(users)?;
    idx.validate(users, r)?;
    let tail = tail_counts(r);
    let mut parent = full_set(users);
    let mut rank = 0;
    for (level, &mask) in idx.masks().iter().enumerate() {
        rank += subset_rank(mask, parent) * tail[level];
        parent = mask;
    }
    Ok(rank)
}

/// Inverse of [`index_rank`].
pub fn index_unrank(rank: u64, users: u32, r: &RVector) -> Result<SubfileIndex> {
    let s = subpacketization(users, r)?;
    if rank >= s {
        return Err(Error::validation(format!(
            "rank {rank} out of range [0, {s})"
        )));
    }
    let tail = tail_counts(r);
    let mut parent = full_set(users);
    let mut rest = rank;
    let mut chain = Vec::with_capacity(r.len());
    for (level, &size) in r.as_slice().iter().enumerate() {
        let digit = rest / tail[level];
        rest %= tail[level];
        let child = subset_unrank(digit, parent, size);
        chain.push(child);
        parent = child;
    }
    Ok(SubfileIndex::from_masks(chain))
}

/// Every non-increasing r-vector of length `groups` with entries in `[0, K]`.
pub fn all_rvectors(users: u32, groups: usize) -> Vec<RVector> {
    fn rec(max: u32, left: usize, cur: &mut Vec<u32>, out: &mut Vec<RVector>) {
        if left == 0 {
            out.push(RVector(cur.clone()));
            return;
        }
        for v in 0..=max {
            cur.push(v);
            rec(v, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if groups > 0 {
        rec(users, groups, &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(v: &[u32]) -> RVector {
        RVector::new(v.to_vec()).unwrap()
    }

    fn labels(users: u32, r: &[u32]) -> Vec<String> {
        enumerate_indices(users, &rv(r))
            .unwrap()
            .iter()
            .map(|i| i.to_string())
            .collect()
    }

    /// Counts chains by checking every tuple of masks.
    fn brute_force_count(users: u32, r: &[u32]) -> u64 {
        let all: Vec<UserSet> = (0..=full_set(users)).collect();
        let mut count = 0;
        let mut stack: Vec<(usize, UserSet)> = vec![(0, full_set(users))];
        while let Some((level, parent)) = stack.pop() {
            if level == r.len() {
                count += 1;
                continue;
            }
            for &m in &all {
                if m & !parent == 0 && m.count_ones() == r[level] {
                    stack.push((level + 1, m));
                }
            }
        }
        count
    }

    #[test]
    fn toy_subpacketization_and_order() {
        assert_eq!(subpacketization(3, &rv(&[2, 1])).unwrap(), 6);
        assert_eq!(
            labels(3, &[2, 1]),
            ["12,1", "12,2", "13,1", "13,3", "23,2", "23,3"]
        );
    }

    #[test]
    fn degenerate_vectors() {
        assert_eq!(subpacketization(3, &rv(&[0, 0])).unwrap(), 1);
        assert_eq!(labels(3, &[0, 0]), ["∅,∅"]);
        assert_eq!(labels(2, &[2, 2]), ["12,12"]);
        assert_eq!(labels(3, &[1, 0]), ["1,∅", "2,∅", "3,∅"]);
        assert_eq!(labels(4, &[2]), ["12", "13", "23", "14", "24", "34"]);
    }

    #[test]
    fn four_users_three_one() {
        assert_eq!(brute_force_count(4, &[3, 1]), 12);
        assert_eq!(subpacketization(4, &rv(&[3, 1])).unwrap(), 12);
    }

    #[test]
    fn counts_match_brute_force() {
        for users in 1..=6 {
            for groups in 1..=3 {
                for r in all_rvectors(users, groups) {
                    let s = subpacketization(users, &r).unwrap();
                    assert_eq!(s, brute_force_count(users, r.as_slice()), "K={users} r={r}");
                    let idx = enumerate_indices(users, &r).unwrap();
                    assert_eq!(idx.len() as u64, s);
                    assert!(idx.windows(2).all(|w| w[0] < w[1]), "strictly sorted");
                    for (i, ix) in idx.iter().enumerate() {
                        ix.validate(users, &r).unwrap();
                        assert_eq!(index_rank(ix, users, &r).unwrap(), i as u64);
                        assert_eq!(&index_unrank(i as u64, users, &r).unwrap(), ix);
                    }
                }
            }
        }
    }

    #[test]
    fn rank_of_last_toy_index() {
        let r = rv(&[2, 1]);
        let idx = SubfileIndex::from_users(&[&[2, 3], &[3]]).unwrap();
        assert_eq!(index_rank(&idx, 3, &r).unwrap(), 5);
        let first = SubfileIndex::from_users(&[&[1, 2], &[1]]).unwrap();
        assert_eq!(index_rank(&first, 3, &r).unwrap(), 0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(RVector::new(vec![1, 2]).is_err());
        assert!(RVector::new(vec![]).is_err());
        assert!(subpacketization(3, &rv(&[4, 1])).is_err());
        assert!(subpacketization(0, &rv(&[0])).is_err());
        let r = rv(&[2, 1]);
        let not_nested = SubfileIndex::from_users(&[&[1, 2], &[3]]).unwrap();
        assert!(matches!(
            index_rank(&not_nested, 3, &r),
            Err(Error::Validation(_))
        ));
        let wrong_size = SubfileIndex::from_users(&[&[1], &[1]]).unwrap();
        assert!(index_rank(&wrong_size, 3, &r).is_err());
        assert!(index_unrank(6, 3, &r).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(
            binomial(200, 100),
            Err(Error::Overflow("binomial coefficient"))
        );
        assert_eq!(binomial(67, 33).unwrap(), 14226520737620288370);
        let big = rv(&[31, 15, 7, 3, 1]);
        assert!(enumerate_indices(63, &big).is_err());
    }

    #[test]
    fn permutation_is_a_bijection() {
        let r = rv(&[3, 2, 1]);
        let idx = enumerate_indices(5, &r).unwrap();
        let perm = [3, 5, 1, 2, 4];
        let mut image: Vec<_> = idx.iter().map(|i| i.permute(&perm)).collect();
        image.sort();
        assert_eq!(image, idx);
    }
}
