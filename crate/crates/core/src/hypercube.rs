//! Spin vectors on the discrete cube, half-cubes and the two automorphism
//! actions (sign switching and label exchanging).
//!
//! A spin vector of dimension `n` is stored bit-packed in little-endian
//! 64-bit words: bit `i` of the packing is coordinate `i` (0-based), and a
//! set bit encodes spin `+1`. With this encoding the bilinear form reduces to
//! `x·y = n − 2·popcount(x XOR y)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_dim, Error, Result};

/// Largest dimension for which the whole cube may be enumerated.
pub const EXACT_CAP: usize = 30;

pub(crate) fn ensure_exact(n: usize) -> Result<()> {
    if n > EXACT_CAP {
        Err(Error::ExactRegimeExceeded { n, cap: EXACT_CAP })
    } else {
        Ok(())
    }
}

/// Dimension and margin of the model.
///
/// Construction resolves the real threshold `κ√n` into the smallest integer
/// dot product that meets it, using exact arithmetic on the binary value of
/// `κ`, so membership tests never compare floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    kappa: f64,
    min_dot: i64,
}

impl ModelParams {
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be finite, got {kappa}")));
        }
        let ni = n as i64;
        let approx = kappa * (n as f64).sqrt();
        // Any dot lies in [-n, n]; a threshold of n + 1 means no dot qualifies.
        let mut d = if approx > (ni + 1) as f64 {
            ni + 1
        } else if approx < -(ni + 1) as f64 {
            -ni - 1
        } else {
            approx.ceil() as i64
        };
        while d > -ni - 1 && dot_meets(d - 1, kappa, n) {
            d -= 1;
        }
        while d <= ni && !dot_meets(d, kappa, n) {
            d += 1;
        }
        Ok(Self { n, kappa, min_dot: d.max(-ni) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The real threshold `κ√n`.
    pub fn threshold(&self) -> f64 {
        self.kappa * (self.n as f64).sqrt()
    }

    /// Smallest integer dot product `d` with `d ≥ κ√n`.
    pub fn min_dot(&self) -> i64 {
        self.min_dot
    }

    /// Whether an exact dot product satisfies the inclusive half-cube inequality.
    pub fn accepts_dot(&self, dot: i64) -> bool {
        dot >= self.min_dot
    }

    /// Hamming radius of every half-cube: `y ∈ H(x)` iff `dist(x, y) ≤ radius`.
    /// `None` when every half-cube is empty.
    pub fn radius(&self) -> Option<usize> {
        let slack = self.n as i64 - self.min_dot;
        if slack < 0 {
            None
        } else {
            Some(((slack / 2) as usize).min(self.n))
        }
    }
}

/// Exact test of `d ≥ κ√n`.
fn dot_meets(d: i64, kappa: f64, n: usize) -> bool {
    if kappa == 0.0 {
        return d >= 0;
    }
    let d2 = BigUint::from(d.unsigned_abs()).pow(2);
    let k2n = kappa_sq_times(kappa, n);
    // Compare d² with κ²·n, both scaled by a common power of two.
    let ord = match k2n {
        (m, e) if e >= 0 => d2.cmp(&(m << (e as usize))),
        (m, e) => (d2 << ((-e) as usize)).cmp(&m),
    };
    if kappa > 0.0 {
        d > 0 && ord.is_ge()
    } else {
        d >= 0 || ord.is_le()
    }
}

/// `κ²·n` as `mantissa · 2^exp` with an integer mantissa.
fn kappa_sq_times(kappa: f64, n: usize) -> (BigUint, i64) {
    let bits = kappa.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    let m = BigUint::from(mant).pow(2) * BigUint::from(n as u64);
    (m, 2 * exp)
}

/// A point of `{-1, 1}^n`, bit-packed with bit 1 encoding spin `+1`.
///
/// Unused high bits of the last word are always zero, so equality of the
/// packed words is equality of vectors.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinVector {
    n: usize,
    words: Vec<u64>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

fn tail_mask(n: usize) -> u64 {
    match n % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl SpinVector {
    /// The all-`+1` vector.
    pub fn ones(n: usize) -> Self {
        let mut v = Self { n, words: vec![u64::MAX; word_count(n)] };
        v.canonicalize();
        v
    }

    /// The all-`-1` vector.
    pub fn minus_ones(n: usize) -> Self {
        Self { n, words: vec![0; word_count(n)] }
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut v = Self::minus_ones(spins.len());
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => v.words[i / 64] |= 1 << (i % 64),
                -1 => {}
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "spin components must be ±1, got {other} at position {i}"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Builds a vector from its integer code (bit `i` is coordinate `i`).
    pub fn from_code(n: usize, code: u64) -> Result<Self> {
        if n > 64 || (n < 64 && code >> n != 0) {
            return Err(Error::InvalidParameter(format!("code {code:#x} does not fit in dimension {n}")));
        }
        Ok(Self { n, words: vec![code] })
    }

    /// Builds a vector from packed words, clearing bits past `n`.
    pub fn from_words(n: usize, mut words: Vec<u64>) -> Result<Self> {
        ensure_dim(word_count(n), words.len())?;
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(n);
        }
        Ok(Self { n, words })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let words = (0..word_count(n)).map(|_| rng.random::<u64>()).collect();
        let mut v = Self { n, words };
        v.canonicalize();
        v
    }

    fn canonicalize(&mut self) {
        let mask = tail_mask(self.n);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Integer code of the vector; `None` when `n > 64`.
    pub fn code(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    /// Spin at 0-based coordinate `i`.
    pub fn spin(&self, i: usize) -> i8 {
        if self.bit(i) {
            1
        } else {
            -1
        }
    }

    /// Whether coordinate `i` is `+1`.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.n, "coordinate {i} out of range for dimension {}", self.n);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_spin(&mut self, i: usize, positive: bool) {
        assert!(i < self.n, "coordinate {i} out of range for dimension {}", self.n);
        if positive {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.n, "coordinate {i} out of range for dimension {}", self.n);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn spins(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.n).map(move |i| self.spin(i))
    }

    /// Number of `+1` components.
    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Componentwise product `self ∘ other`.
    pub fn product(&self, other: &SpinVector) -> Result<SpinVector> {
        ensure_dim(self.n, other.n)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| !(a ^ b)).collect();
        let mut v = Self { n: self.n, words };
        v.canonicalize();
        Ok(v)
    }
}

impl fmt::Display for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:0x", self.n)?;
        let top = self.words.iter().rposition(|&w| w != 0);
        match top {
            None => write!(f, "0"),
            Some(t) => {
                write!(f, "{:X}", self.words[t])?;
                for w in self.words[..t].iter().rev() {
                    write!(f, "{w:016X}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinVector({self})")
    }
}

impl FromStr for SpinVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected \"n:0x<hex>\", got {s:?}"));
        let (n, hex) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let hex = hex.trim();
        let hex = hex.strip_prefix("0x").or_else(|| hex.strip_prefix("0X")).ok_or_else(bad)?;
        if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let digits = hex.trim_start_matches('0');
        let wc = word_count(n);
        let mut words = vec![0u64; (digits.len() * 4).div_ceil(64).max(wc)];
        for (pos, ch) in digits.bytes().rev().enumerate() {
            let nibble = (ch as char).to_digit(16).expect("checked hex digit") as u64;
            words[pos / 16] |= nibble << (pos % 16 * 4);
        }
        let overflow = words[wc..].iter().any(|&w| w != 0)
            || (wc > 0 && words[wc - 1] & !tail_mask(n) != 0);
        if overflow {
            return Err(Error::Parse(format!("{s:?} has bits beyond dimension {n}")));
        }
        words.truncate(wc);
        Ok(Self { n, words })
    }
}

impl Serialize for SpinVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `x · y = Σ xⁱ yⁱ`, computed as `n − 2·popcount(x XOR y)`.
pub fn dot(x: &SpinVector, y: &SpinVector) -> Result<i64> {
    Ok(x.n as i64 - 2 * hamming(x, y)? as i64)
}

/// Number of coordinates where `u` and `v` differ.
pub fn hamming(u: &SpinVector, v: &SpinVector) -> Result<usize> {
    ensure_dim(u.n, v.n)?;
    Ok(u.words.iter().zip(&v.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum())
}

/// Whether `y ∈ H(center)`, i.e. `center · y ≥ κ√n`.
pub fn in_halfcube(y: &SpinVector, center: &SpinVector, params: &ModelParams) -> Result<bool> {
    ensure_dim(params.n, center.n)?;
    Ok(params.accepts_dot(dot(center, y)?))
}

/// Sign switching `g ∘ x = (g¹x¹, …, gⁿxⁿ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignSwitch {
    pub g: SpinVector,
}

impl SignSwitch {
    pub fn new(g: SpinVector) -> Self {
        Self { g }
    }

    pub fn identity(n: usize) -> Self {
        Self { g: SpinVector::ones(n) }
    }

    pub fn n(&self) -> usize {
        self.g.n
    }

    pub fn apply(&self, x: &SpinVector) -> Result<SpinVector> {
        self.g.product(x)
    }
}

pub fn apply_sign_switch(g: &SignSwitch, x: &SpinVector) -> Result<SpinVector> {
    g.apply(x)
}

/// Label exchanging `σ ∘ x = (x^{σ⁻¹(1)}, …, x^{σ⁻¹(n)})`.
///
/// Indices are 0-based: `images[i] = σ(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &j) in images.iter().enumerate() {
            if j >= n {
                return Err(Error::NotAPermutation(format!("image {j} of {i} is out of range 0..{n}")));
            }
            if inverse[j] != usize::MAX {
                return Err(Error::NotAPermutation(format!(
                    "{j} is the image of both {} and {i}",
                    inverse[j]
                )));
            }
            inverse[j] = i;
        }
        Ok(Self { forward: images, inverse })
    }

    pub fn identity(n: usize) -> Self {
        let forward: Vec<usize> = (0..n).collect();
        Self { inverse: forward.clone(), forward }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut forward: Vec<usize> = (0..n).collect();
        forward.shuffle(rng);
        Self::new(forward).expect("shuffle yields a bijection")
    }

    pub fn n(&self) -> usize {
        self.forward.len()
    }

    /// `σ(i)`.
    pub fn image(&self, i: usize) -> usize {
        self.forward[i]
    }

    /// `σ⁻¹(j)`.
    pub fn preimage(&self, j: usize) -> usize {
        self.inverse[j]
    }

    pub fn images(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> Permutation {
        Self { forward: self.inverse.clone(), inverse: self.forward.clone() }
    }

    pub fn apply(&self, x: &SpinVector) -> Result<SpinVector> {
        ensure_dim(self.n(), x.n)?;
        let mut out = SpinVector::minus_ones(x.n);
        for i in 0..x.n {
            if x.bit(i) {
                out.set_spin(self.forward[i], true);
            }
        }
        Ok(out)
    }
}

pub fn apply_permutation(sigma: &Permutation, x: &SpinVector) -> Result<SpinVector> {
    sigma.apply(x)
}

/// All members of `H(center)`, in increasing code order.
pub fn halfcube(center: &SpinVector, params: &ModelParams) -> Result<Vec<SpinVector>> {
    ensure_dim(params.n, center.n)?;
    ensure_exact(params.n)?;
    let c = center.code().expect("exact regime fits one word");
    let Some(r) = params.radius() else { return Ok(Vec::new()) };
    Ok((0..1u64 << params.n)
        .filter(|y| (y ^ c).count_ones() as usize <= r)
        .map(|y| SpinVector { n: params.n, words: vec![y] })
        .collect())
}

/// Exact `|H(x) \ H(y)|` by a Gray-code walk over the whole cube, keeping
/// both dot products up to date one coordinate flip at a time.
pub fn halfcube_diff_size(x: &SpinVector, y: &SpinVector, params: &ModelParams) -> Result<u64> {
    ensure_dim(params.n, x.n)?;
    ensure_dim(params.n, y.n)?;
    ensure_exact(params.n)?;
    let n = params.n;
    // Per-coordinate increments applied when z^j goes from -1 to +1.
    let step_x: Vec<i64> = (0..n).map(|j| 2 * x.spin(j) as i64).collect();
    let step_y: Vec<i64> = (0..n).map(|j| 2 * y.spin(j) as i64).collect();
    // z starts at all -1.
    let mut dx: i64 = -step_x.iter().sum::<i64>() / 2;
    let mut dy: i64 = -step_y.iter().sum::<i64>() / 2;
    let mut z: u64 = 0;
    let t = params.min_dot;
    let mut count = (dx >= t && dy < t) as u64;
    for i in 1..1u64 << n {
        let j = i.trailing_zeros() as usize;
        z ^= 1 << j;
        if z >> j & 1 == 1 {
            dx += step_x[j];
            dy += step_y[j];
        } else {
            dx -= step_x[j];
            dy -= step_y[j];
        }
        count += (dx >= t && dy < t) as u64;
    }
    Ok(count)
}
