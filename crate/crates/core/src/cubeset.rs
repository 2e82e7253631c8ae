//! Subsets of the whole cube `{-1, 1}^n` as bitsets indexed by vector code.
//!
//! Every half-cube is a Hamming ball of the same radius, so `H(x)` is the
//! ball around the origin translated by `x`. Translation by XOR moves whole
//! words for the high code bits and shuffles bits inside a word for the low
//! six, which makes intersecting a set with `H(x)` a single pass over the
//! words with 64 candidates per operation.

use crate::error::{ensure_dim, Result};
use crate::hypercube::{ensure_exact, ModelParams, SpinVector};

/// Masks selecting the low half of each 2^(j+1)-bit block.
const LOW_HALF: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// Moves bit `b` of `w` to position `b ^ xl` for `xl < 64`.
#[inline]
fn xor_shuffle(mut w: u64, xl: u64) -> u64 {
    for (j, mask) in LOW_HALF.iter().enumerate() {
        if xl >> j & 1 == 1 {
            let s = 1u32 << j;
            w = ((w & mask) << s) | ((w >> s) & mask);
        }
    }
    w
}

/// A set of points of the cube, stored as a bitset over codes `0..2^n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CubeSet {
    n: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for CubeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CubeSet(n={}, len={})", self.n, self.len())
    }
}

impl CubeSet {
    fn mask(n: usize) -> u64 {
        if n >= 6 {
            u64::MAX
        } else {
            (1u64 << (1usize << n)) - 1
        }
    }

    fn words_for(n: usize) -> usize {
        if n >= 6 {
            1 << (n - 6)
        } else {
            1
        }
    }

    pub fn empty(n: usize) -> Result<Self> {
        ensure_exact(n)?;
        Ok(Self { n, words: vec![0; Self::words_for(n)] })
    }

    pub fn full(n: usize) -> Result<Self> {
        ensure_exact(n)?;
        Ok(Self { n, words: vec![Self::mask(n); Self::words_for(n)] })
    }

    pub fn from_codes<I: IntoIterator<Item = u64>>(n: usize, codes: I) -> Result<Self> {
        let mut s = Self::empty(n)?;
        for c in codes {
            s.insert(c);
        }
        Ok(s)
    }

    /// Points within Hamming distance `radius` of the origin code 0.
    pub fn ball_at_origin(n: usize, radius: Option<usize>) -> Result<Self> {
        let mut s = Self::empty(n)?;
        if let Some(r) = radius {
            if r >= n {
                return Self::full(n);
            }
            for y in 0..1u64 << n {
                if y.count_ones() as usize <= r {
                    s.insert(y);
                }
            }
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn insert(&mut self, code: u64) {
        assert!(code < 1u64 << self.n, "code {code:#x} outside dimension {}", self.n);
        self.words[(code >> 6) as usize] |= 1 << (code & 63);
    }

    pub fn remove(&mut self, code: u64) {
        assert!(code < 1u64 << self.n, "code {code:#x} outside dimension {}", self.n);
        self.words[(code >> 6) as usize] &= !(1 << (code & 63));
    }

    pub fn contains(&self, code: u64) -> bool {
        code < 1u64 << self.n && self.words[(code >> 6) as usize] >> (code & 63) & 1 == 1
    }

    pub fn contains_vector(&self, y: &SpinVector) -> bool {
        y.n() == self.n && y.code().is_some_and(|c| self.contains(c))
    }

    pub fn len(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Smallest member code.
    pub fn first(&self) -> Option<u64> {
        self.words
            .iter()
            .position(|&w| w != 0)
            .map(|i| ((i as u64) << 6) | self.words[i].trailing_zeros() as u64)
    }

    /// Member codes in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let base = (i as u64) << 6;
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as u64;
                    rest &= rest - 1;
                    Some(base | b)
                }
            })
        })
    }

    pub fn vectors(&self) -> impl Iterator<Item = SpinVector> + '_ {
        self.iter().map(|c| SpinVector::from_code(self.n, c).expect("member codes fit"))
    }

    /// `{ y ^ shift : y ∈ self }`.
    pub fn translated(&self, shift: u64) -> CubeSet {
        let hi = (shift >> 6) as usize;
        let lo = shift & 63;
        let words = (0..self.words.len()).map(|w| xor_shuffle(self.words[w ^ hi], lo)).collect();
        CubeSet { n: self.n, words }
    }

    /// `self ∩ { y ^ shift : y ∈ other }` in place.
    pub fn intersect_translated(&mut self, other: &CubeSet, shift: u64) {
        debug_assert_eq!(self.n, other.n);
        let hi = (shift >> 6) as usize;
        let lo = shift & 63;
        for (w, word) in self.words.iter_mut().enumerate() {
            *word &= xor_shuffle(other.words[w ^ hi], lo);
        }
    }

    /// Whether `self ∩ { y ^ shift : y ∈ other }` is empty, without allocating.
    pub fn disjoint_translated(&self, other: &CubeSet, shift: u64) -> bool {
        let hi = (shift >> 6) as usize;
        let lo = shift & 63;
        self.words
            .iter()
            .enumerate()
            .all(|(w, &word)| word & xor_shuffle(other.words[w ^ hi], lo) == 0)
    }

    pub fn intersect_with(&mut self, other: &CubeSet) -> Result<()> {
        ensure_dim(self.n, other.n)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        Ok(())
    }

    pub fn union_with(&mut self, other: &CubeSet) -> Result<()> {
        ensure_dim(self.n, other.n)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &CubeSet) -> bool {
        self.n == other.n && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// The set of points within Hamming distance 1 of a member.
    pub fn dilated(&self) -> CubeSet {
        let mut out = self.clone();
        for j in 0..self.n {
            if j < 6 {
                let s = 1u32 << j;
                let mask = LOW_HALF[j];
                for (o, &w) in out.words.iter_mut().zip(&self.words) {
                    *o |= ((w & mask) << s) | ((w >> s) & mask);
                }
            } else {
                let stride = 1usize << (j - 6);
                for (w, o) in out.words.iter_mut().enumerate() {
                    *o |= self.words[w ^ stride];
                }
            }
        }
        out
    }
}

/// The half-cube `H(0)` of a model, ready to be translated onto any center.
#[derive(Debug, Clone)]
pub struct HalfcubeTemplate {
    params: ModelParams,
    origin: CubeSet,
}

impl HalfcubeTemplate {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self { params: *params, origin: CubeSet::ball_at_origin(params.n(), params.radius())? })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `H(x)` for the center with code `center`.
    pub fn halfcube(&self, center: u64) -> CubeSet {
        self.origin.translated(center)
    }

    /// `set ← set ∩ H(center)`.
    pub fn restrict(&self, set: &mut CubeSet, center: u64) {
        set.intersect_translated(&self.origin, center);
    }

    /// Whether `set ∩ H(center) = ∅`.
    pub fn misses(&self, set: &CubeSet, center: u64) -> bool {
        set.disjoint_translated(&self.origin, center)
    }

    /// Every center `x` with `set ∩ H(x) ≠ ∅`, i.e. the union of the balls
    /// around the members of `set`.
    pub fn reach(&self, set: &CubeSet) -> CubeSet {
        let n = self.params.n();
        match self.params.radius() {
            None => CubeSet::empty(n).expect("same dimension"),
            Some(r) if r >= n && !set.is_empty() => CubeSet::full(n).expect("same dimension"),
            Some(r) => {
                let mut cur = set.clone();
                for _ in 0..r {
                    let next = cur.dilated();
                    if next == cur {
                        break;
                    }
                    cur = next;
                }
                cur
            }
        }
    }
}
