use std::fmt;

/// Largest number of tasks a decision vector can hold.
pub const MAX_TASKS: usize = 64;

/// A binary decision vector over at most [`MAX_TASKS`] tasks, packed into a
/// word. Bit `i` holds the decision for task `i` (0-based).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decisions {
    bits: u64,
    len: usize,
}

impl Decisions {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_TASKS, "decision vector longer than {MAX_TASKS}");
        Decisions { bits: 0, len }
    }

    pub fn from_bits(bits: u64, len: usize) -> Self {
        assert!(len <= MAX_TASKS, "decision vector longer than {MAX_TASKS}");
        Decisions {
            bits: bits & mask(len),
            len,
        }
    }

    pub fn from_slice(values: &[bool]) -> Self {
        let mut d = Decisions::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            d.set(i, v);
        }
        d
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.bits >> i) & 1 == 1
    }

    #[inline]
    pub fn bit(&self, i: usize) -> usize {
        ((self.bits >> i) & 1) as usize
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.bits ^= 1 << i;
    }

    pub fn flipped(mut self, i: usize) -> Self {
        self.flip(i);
        self
    }

    /// Positions where `self` and `other` differ, as a bit mask.
    pub fn diff_mask(&self, other: &Decisions) -> u64 {
        self.bits ^ other.bits
    }

    pub fn hamming(&self, other: &Decisions) -> u32 {
        self.diff_mask(other).count_ones()
    }

    /// Copies the bits of `tasks` from `source` into `self`.
    pub fn overwrite(&mut self, source: &Decisions, tasks: &[usize]) {
        for &t in tasks {
            self.set(t, source.get(t));
        }
    }
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Debug for Decisions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Decisions({self})")
    }
}

impl fmt::Display for Decisions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
