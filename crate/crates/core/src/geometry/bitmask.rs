/// Fixed-length bit set backed by 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmask {
    len: usize,
    words: Vec<u64>,
}

impl Bitmask {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut m = Self::new(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                m.set(i);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &Bitmask) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Number of bits set in `self` but not in `other`.
    pub fn count_without(&self, other: &Bitmask) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    /// True iff every bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Bitmask) -> bool {
        self.count_without(other) == 0
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_count() {
        let mut m = Bitmask::new(130);
        m.set(0);
        m.set(64);
        m.set(129);
        assert!(m.get(64) && !m.get(63));
        assert_eq!(m.count_ones(), 3);
        assert_eq!(m.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
    }

    #[test]
    fn union_and_difference() {
        let a = Bitmask::from_bools(&[true, false, true, false]);
        let b = Bitmask::from_bools(&[false, false, true, true]);
        assert_eq!(a.count_without(&b), 1);
        let mut c = a.clone();
        c.union_with(&b);
        assert_eq!(c.count_ones(), 3);
        assert!(a.is_subset_of(&c) && b.is_subset_of(&c));
    }
}
