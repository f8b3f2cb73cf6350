//! Fixed-universe bitset with a maintained popcount. Backs dense group
//! subsets and BFS frontiers over canonical indices.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
    nbits: u64,
    count: u64,
}

impl Bitset {
    pub fn new(nbits: u64) -> Self {
        let nwords = ((nbits + 63) / 64) as usize;
        Bitset {
            words: vec![0u64; nwords],
            nbits,
            count: 0,
        }
    }

    #[inline]
    pub fn nbits(&self) -> u64 {
        self.nbits
    }

    #[inline]
    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Sets bit `i`; returns true iff it was newly set.
    #[inline]
    pub fn set(&mut self, i: u64) -> bool {
        debug_assert!(i < self.nbits);
        let w = (i >> 6) as usize;
        let mask = 1u64 << (i & 63);
        if self.words[w] & mask == 0 {
            self.words[w] |= mask;
            self.count += 1;
            true
        } else {
            false
        }
    }

    #[inline]
    pub fn get(&self, i: u64) -> bool {
        debug_assert!(i < self.nbits);
        self.words[(i >> 6) as usize] & (1u64 << (i & 63)) != 0
    }

    pub fn union_in_place(&mut self, other: &Bitset) {
        debug_assert_eq!(self.nbits, other.nbits);
        let mut count = 0u64;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
            count += a.count_ones() as u64;
        }
        self.count = count;
    }

    /// self := self & !other, returning the new count.
    pub fn subtract_in_place(&mut self, other: &Bitset) -> u64 {
        debug_assert_eq!(self.nbits, other.nbits);
        let mut count = 0u64;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
            count += a.count_ones() as u64;
        }
        self.count = count;
        count
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
        self.count = 0;
    }

    /// Ascending iterator over set bit positions.
    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            widx: 0,
            cur: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    widx: usize,
    cur: u64,
}

impl Iterator for Ones<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        while self.cur == 0 {
            self.widx += 1;
            if self.widx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.widx];
        }
        let tz = self.cur.trailing_zeros() as u64;
        self.cur &= self.cur - 1;
        Some((self.widx as u64) * 64 + tz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_iter() {
        let mut b = Bitset::new(200);
        for i in [0u64, 63, 64, 127, 199, 64] {
            b.set(i);
        }
        assert_eq!(b.count(), 5);
        assert!(b.get(63) && b.get(64) && !b.get(65));
        let ones: Vec<u64> = b.iter_ones().collect();
        assert_eq!(ones, vec![0, 63, 64, 127, 199]);
    }

    #[test]
    fn union_subtract_counts() {
        let mut a = Bitset::new(100);
        let mut b = Bitset::new(100);
        for i in 0..50 {
            a.set(i);
        }
        for i in 25..75 {
            b.set(i);
        }
        a.union_in_place(&b);
        assert_eq!(a.count(), 75);
        a.subtract_in_place(&b);
        assert_eq!(a.count(), 25);
        assert_eq!(a.iter_ones().count(), 25);
    }
}
