use std::cmp::Ordering;
use std::fmt;

/// Largest number of variables a jet may carry.
pub const MAX_VARS: usize = 8;
/// Largest exponent of a single variable.
pub const MAX_EXPONENT: u32 = u8::MAX as u32;

const BYTE_SUM: u64 = 0x0101_0101_0101_0101;

/// Exponent vector of a monomial, packed one byte per variable.
///
/// Variable `i` lives in byte `7 - i`, so comparing the packed words compares
/// exponent vectors lexicographically. Ordering is graded: total degree first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(u64);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex(0);

    /// Panics when more than [`MAX_VARS`] exponents are given or one exceeds [`MAX_EXPONENT`].
    pub fn new(exponents: &[u32]) -> Self {
        assert!(exponents.len() <= MAX_VARS, "at most {MAX_VARS} variables");
        let mut packed = 0u64;
        for (i, &e) in exponents.iter().enumerate() {
            assert!(e <= MAX_EXPONENT, "exponent {e} exceeds {MAX_EXPONENT}");
            packed |= (e as u64) << Self::shift(i);
        }
        MultiIndex(packed)
    }

    pub fn unit(var: usize) -> Self {
        MultiIndex(1u64 << Self::shift(var))
    }

    #[inline]
    fn shift(var: usize) -> u32 {
        8 * (7 - var as u32)
    }

    #[inline]
    pub fn get(self, var: usize) -> u32 {
        ((self.0 >> Self::shift(var)) & 0xff) as u32
    }

    #[inline]
    pub fn total_degree(self) -> usize {
        // byte sums stay below 256 because degrees are bounded by truncation orders
        (self.0.wrapping_mul(BYTE_SUM) >> 56) as usize
    }

    pub fn exponents(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.get(i)).collect()
    }

    /// Key for pure lexicographic order (`x1` most significant).
    #[inline]
    pub(crate) fn lex_key(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn add(self, other: MultiIndex) -> MultiIndex {
        MultiIndex(self.0 + other.0)
    }

    pub fn with(self, var: usize, exponent: u32) -> MultiIndex {
        let cleared = self.0 & !(0xffu64 << Self::shift(var));
        MultiIndex(cleared | ((exponent as u64) << Self::shift(var)))
    }

    /// Drops variable `var`, shifting later variables down by one slot.
    pub fn remove_var(self, var: usize, nvars: usize) -> MultiIndex {
        let mut e = self.exponents(nvars);
        e.remove(var);
        MultiIndex::new(&e)
    }

    /// Inserts a zero exponent at position `var`.
    pub fn insert_var(self, var: usize, nvars: usize) -> MultiIndex {
        let mut e = self.exponents(nvars);
        e.insert(var, 0);
        MultiIndex::new(&e)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<u32> = (0..MAX_VARS).map(|i| self.get(i)).collect();
        let last = e.iter().rposition(|&x| x != 0).map_or(0, |p| p + 1);
        write!(f, "{:?}", &e[..last])
    }
}
