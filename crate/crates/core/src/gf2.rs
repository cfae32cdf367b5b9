//! Bit vectors and incremental Gaussian elimination over GF(2).

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn unit(len: usize, bit: usize) -> Self {
        let mut row = Self::zeros(len);
        row.set(bit);
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    #[inline]
    pub fn flip(&mut self, bit: usize) {
        self.words[bit / 64] ^= 1 << (bit % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct EchelonRow {
    pivot: usize,
    value: BitRow,
    combo: BitRow,
}

/// Row-echelon basis built one vector at a time.
///
/// Every stored row carries a `combo` recording which inserted vectors were
/// XORed together to produce it, so membership queries can return a witness.
/// Rows are reduced against all earlier rows on insertion, which makes a
/// single pass in insertion order enough to reduce any query vector.
#[derive(Clone, Debug)]
pub struct EchelonBasis {
    width: usize,
    tags: usize,
    rows: Vec<EchelonRow>,
    inserted: usize,
}

impl EchelonBasis {
    /// `width` columns; `tags` bits of combination tracking (0 disables it).
    pub fn new(width: usize, tags: usize) -> Self {
        EchelonBasis {
            width,
            tags,
            rows: Vec::new(),
            inserted: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, value: &mut BitRow, combo: &mut BitRow) {
        for row in &self.rows {
            if value.get(row.pivot) {
                value.xor_assign(&row.value);
                if self.tags > 0 {
                    combo.xor_assign(&row.combo);
                }
            }
        }
    }

    /// Inserts the next vector, tagged with its insertion number. Returns
    /// whether it increased the rank.
    pub fn insert(&mut self, mut value: BitRow) -> bool {
        debug_assert_eq!(value.len(), self.width);
        let mut combo = BitRow::zeros(self.tags);
        if self.inserted < self.tags {
            combo.set(self.inserted);
        }
        self.inserted += 1;
        self.reduce(&mut value, &mut combo);
        match value.first_one() {
            Some(pivot) => {
                self.rows.push(EchelonRow {
                    pivot,
                    value,
                    combo,
                });
                true
            }
            None => false,
        }
    }

    /// Whether `target` lies in the span.
    pub fn contains(&self, target: &BitRow) -> bool {
        let mut value = target.clone();
        for row in &self.rows {
            if value.get(row.pivot) {
                value.xor_assign(&row.value);
            }
        }
        value.is_zero()
    }

    /// The inserted vectors whose XOR equals `target`, if any.
    pub fn express(&self, target: &BitRow) -> Option<BitRow> {
        let mut value = target.clone();
        let mut combo = BitRow::zeros(self.tags);
        self.reduce(&mut value, &mut combo);
        value.is_zero().then_some(combo)
    }
}
