//! Agreement-pattern encoding of spin sequences, automorphism witnesses,
//! admissibility and gentle mappings.
//!
//! A sequence `Y = (y_1, …, y_k)` is recorded as its first vector together
//! with the partition of the coordinates into classes `I_a`, one for every
//! pattern `a ∈ {-1, 1}^{k-1}`: coordinate `j` lies in `I_a` when the `j`-th
//! component of `y_1 ∘ y_i` equals `a_{i-1}` for every `i ≥ 2`.
//!
//! Patterns are stored as `(k-1)`-bit integers using the spin encoding of
//! [`SpinVector`]: bit `i - 2` is set when `a_{i-1} = +1`, so the all-`+1`
//! pattern is `2^{k-1} - 1`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::hypercube::{Permutation, SignSwitch, SpinVector};

/// Largest supported sequence length.
pub const MAX_K: usize = 20;

/// Default admissibility constant.
pub const DEFAULT_C2: f64 = 4.0;

/// An ordered sequence of `k ≥ 1` spin vectors of a common dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<SpinVector>", into = "Vec<SpinVector>")]
pub struct SpinSequence {
    vectors: Vec<SpinVector>,
}

impl TryFrom<Vec<SpinVector>> for SpinSequence {
    type Error = Error;

    fn try_from(vectors: Vec<SpinVector>) -> Result<Self> {
        Self::new(vectors)
    }
}

impl From<SpinSequence> for Vec<SpinVector> {
    fn from(seq: SpinSequence) -> Self {
        seq.vectors
    }
}

impl SpinSequence {
    pub fn new(vectors: Vec<SpinVector>) -> Result<Self> {
        let k = vectors.len();
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidParameter(format!("sequence length must be in 1..={MAX_K}, got {k}")));
        }
        let n = vectors[0].n();
        for v in &vectors[1..] {
            ensure_dim(n, v.n())?;
        }
        Ok(Self { vectors })
    }

    /// `k` i.i.d. uniform vectors.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..k).map(|_| SpinVector::random(n, rng)).collect())
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn n(&self) -> usize {
        self.vectors[0].n()
    }

    pub fn vectors(&self) -> &[SpinVector] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> &SpinVector {
        &self.vectors[i]
    }

    pub fn sign_switched(&self, g: &SignSwitch) -> Result<Self> {
        let vectors = self.vectors.iter().map(|v| g.apply(v)).collect::<Result<_>>()?;
        Ok(Self { vectors })
    }

    pub fn permuted(&self, sigma: &Permutation) -> Result<Self> {
        let vectors = self.vectors.iter().map(|v| sigma.apply(v)).collect::<Result<_>>()?;
        Ok(Self { vectors })
    }

    /// Pattern code of coordinate `j`.
    fn pattern_at(&self, j: usize) -> usize {
        let first = self.vectors[0].bit(j);
        self.vectors[1..]
            .iter()
            .enumerate()
            .fold(0, |acc, (i, v)| acc | (((v.bit(j) == first) as usize) << i))
    }

    /// `|I_a|` for every pattern `a`, indexed by pattern code.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; 1 << (self.k() - 1)];
        for j in 0..self.n() {
            sizes[self.pattern_at(j)] += 1;
        }
        sizes
    }
}

/// The encoding `(y_1, (I_a)_a)` of a sequence. Class indices are 0-based
/// and sorted; the JSON form uses 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternPartition {
    pub first: SpinVector,
    pub classes: Vec<Vec<usize>>,
}

impl PatternPartition {
    /// Sequence length implied by the number of classes.
    pub fn k(&self) -> usize {
        self.classes.len().trailing_zeros() as usize + 1
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    fn validate(&self) -> Result<()> {
        let c = self.classes.len();
        if c == 0 || !c.is_power_of_two() {
            return Err(Error::MalformedEncoding(format!("{c} classes is not a power of two")));
        }
        let n = self.first.n();
        let mut seen = vec![false; n];
        for (a, class) in self.classes.iter().enumerate() {
            for &j in class {
                if j >= n {
                    return Err(Error::MalformedEncoding(format!("index {} outside 1..={n}", j + 1)));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::MalformedEncoding(format!("index {} appears twice (class {a})", j + 1)));
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedEncoding(format!("index {} belongs to no class", j + 1)));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    first: SpinVector,
    classes: BTreeMap<String, Vec<usize>>,
}

impl Serialize for PatternPartition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut classes: Vec<(usize, Vec<usize>)> = self
            .classes
            .iter()
            .enumerate()
            .map(|(a, c)| (a, c.iter().map(|j| j + 1).collect()))
            .collect();
        classes.sort_by_key(|(a, _)| *a);
        use serde::ser::SerializeStruct;
        struct Classes(Vec<(usize, Vec<usize>)>);
        impl Serialize for Classes {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (a, c) in &self.0 {
                    m.serialize_entry(&a.to_string(), c)?;
                }
                m.end()
            }
        }
        let mut st = serializer.serialize_struct("PatternPartition", 2)?;
        st.serialize_field("first", &self.first)?;
        st.serialize_field("classes", &Classes(classes))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PatternPartition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PartitionJson::deserialize(deserializer)?;
        let count = raw.classes.len();
        let mut classes = vec![Vec::new(); count];
        for (key, idx) in raw.classes {
            let a: usize = key.parse().map_err(|_| D::Error::custom(format!("bad pattern key {key:?}")))?;
            if a >= count {
                return Err(D::Error::custom(format!("pattern {a} out of range for {count} classes")));
            }
            let mut idx = idx
                .into_iter()
                .map(|j| j.checked_sub(1).ok_or_else(|| D::Error::custom("indices are 1-based")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            idx.sort_unstable();
            classes[a] = idx;
        }
        let pp = PatternPartition { first: raw.first, classes };
        pp.validate().map_err(D::Error::custom)?;
        Ok(pp)
    }
}

pub fn encode(seq: &SpinSequence) -> PatternPartition {
    let mut classes = vec![Vec::new(); 1 << (seq.k() - 1)];
    for j in 0..seq.n() {
        classes[seq.pattern_at(j)].push(j);
    }
    PatternPartition { first: seq.vectors[0].clone(), classes }
}

/// Inverse of [`encode`]: `y_i^j = y_1^j · a_{i-1}` for `j ∈ I_a`.
pub fn decode(pp: &PatternPartition, k: usize) -> Result<SpinSequence> {
    if k == 0 || k > MAX_K || pp.classes.len() != 1 << (k - 1) {
        return Err(Error::MalformedEncoding(format!(
            "{} classes do not match sequence length {k}",
            pp.classes.len()
        )));
    }
    pp.validate()?;
    let n = pp.first.n();
    let mut vectors = vec![pp.first.clone()];
    for i in 0..k - 1 {
        let mut v = SpinVector::minus_ones(n);
        for (a, class) in pp.classes.iter().enumerate() {
            let agrees = a >> i & 1 == 1;
            for &j in class {
                v.set_spin(j, pp.first.bit(j) == agrees);
            }
        }
        vectors.push(v);
    }
    SpinSequence::new(vectors)
}

/// Whether sign switching leaves the classes unchanged.
pub fn sign_switch_invariance_check(g: &SignSwitch, seq: &SpinSequence) -> bool {
    match seq.sign_switched(g) {
        Ok(switched) => encode(&switched).classes == encode(seq).classes,
        Err(_) => false,
    }
}

/// A label exchange followed by a sign switch: `x ↦ g ∘ (σ ∘ x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomorphismWitness {
    pub sigma: Permutation,
    pub g: SignSwitch,
}

impl AutomorphismWitness {
    pub fn apply(&self, seq: &SpinSequence) -> Result<SpinSequence> {
        seq.permuted(&self.sigma)?.sign_switched(&self.g)
    }

    pub fn maps(&self, source: &SpinSequence, target: &SpinSequence) -> bool {
        self.apply(source).is_ok_and(|image| &image == target)
    }
}

/// Finds `(σ, g)` with `g ∘ (σ ∘ source) = target`, given equal class sizes.
///
/// Within each class the i-th smallest source index is sent to the i-th
/// smallest target index; then `g = t_1 ∘ (σ ∘ s_1)`.
pub fn match_automorphism(source: &SpinSequence, target: &SpinSequence) -> Result<AutomorphismWitness> {
    ensure_dim(source.n(), target.n())?;
    if source.k() != target.k() {
        return Err(Error::InvalidParameter(format!(
            "sequence lengths differ: {} vs {}",
            source.k(),
            target.k()
        )));
    }
    let (ps, pt) = (encode(source), encode(target));
    let mut images = vec![0; source.n()];
    for (a, (cs, ct)) in ps.classes.iter().zip(&pt.classes).enumerate() {
        if cs.len() != ct.len() {
            return Err(Error::NoWitness { pattern: a, source_size: cs.len(), target_size: ct.len() });
        }
        for (&s, &t) in cs.iter().zip(ct) {
            images[s] = t;
        }
    }
    let sigma = Permutation::new(images)?;
    let g = SignSwitch::new(target.get(0).product(&sigma.apply(source.get(0))?)?);
    let witness = AutomorphismWitness { sigma, g };
    assert!(witness.maps(source, target), "classwise pairing must reproduce the target");
    Ok(witness)
}

/// Admissibility constant `C₂`; the allowed deviation is `C₂·√(n ln n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityParams {
    c2: f64,
}

impl Default for AdmissibilityParams {
    fn default() -> Self {
        Self { c2: DEFAULT_C2 }
    }
}

impl AdmissibilityParams {
    pub fn new(c2: f64) -> Result<Self> {
        if !(c2.is_finite() && c2 > 0.0) {
            return Err(Error::InvalidParameter(format!("c2 must be a positive real, got {c2}")));
        }
        Ok(Self { c2 })
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn slack(&self, n: usize) -> f64 {
        let n = n as f64;
        self.c2 * (n * n.ln()).sqrt()
    }

    /// Per-vector Hamming budget `2^k · C₂ · √(n ln n)` of a gentle mapping.
    pub fn gentle_radius(&self, n: usize, k: usize) -> f64 {
        (1u64 << k) as f64 * self.slack(n)
    }
}

fn sizes_admissible(sizes: &[usize], n: usize, params: &AdmissibilityParams) -> bool {
    let expected = n as f64 / sizes.len() as f64;
    let slack = params.slack(n);
    sizes.iter().all(|&s| (s as f64 - expected).abs() <= slack)
}

pub fn is_admissible(seq: &SpinSequence, params: &AdmissibilityParams) -> bool {
    sizes_admissible(&seq.class_sizes(), seq.n(), params)
}

/// Number of inadmissible sequences among `trials` i.i.d. uniform draws,
/// for each constant in `c2s` (all constants judge the same draws).
pub fn inadmissibility_counts(n: usize, k: usize, c2s: &[f64], trials: u64, seed: u64) -> Result<Vec<u64>> {
    use rayon::prelude::*;
    let params = c2s.iter().map(|&c| AdmissibilityParams::new(c)).collect::<Result<Vec<_>>>()?;
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidParameter(format!("k must be in 1..={MAX_K}")));
    }
    let flags: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(seed, crate::rng::tag::ADMISSIBILITY, t);
            let seq = SpinSequence::random(n, k, &mut rng).expect("valid shape");
            let sizes = seq.class_sizes();
            params.iter().map(|p| !sizes_admissible(&sizes, n, p)).collect()
        })
        .collect();
    Ok((0..params.len()).map(|i| flags.iter().filter(|f| f[i]).count() as u64).collect())
}

/// A gentle mapping anchored at an admissible reference sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GentleMap {
    reference: SpinSequence,
    params: AdmissibilityParams,
    target_sizes: Vec<usize>,
}

impl GentleMap {
    pub fn reference(&self) -> &SpinSequence {
        &self.reference
    }

    pub fn params(&self) -> &AdmissibilityParams {
        &self.params
    }

    pub fn target_sizes(&self) -> &[usize] {
        &self.target_sizes
    }

    pub fn n(&self) -> usize {
        self.reference.n()
    }

    pub fn k(&self) -> usize {
        self.reference.k()
    }

    fn check_shape(&self, z: &SpinSequence) -> Result<()> {
        ensure_dim(self.n(), z.n())?;
        if z.k() != self.k() {
            return Err(Error::InvalidParameter(format!(
                "sequence length {} does not match the map's {}",
                z.k(),
                self.k()
            )));
        }
        Ok(())
    }
}

pub fn build_gentle_map(reference: &SpinSequence, params: &AdmissibilityParams) -> Result<GentleMap> {
    if !is_admissible(reference, params) {
        return Err(Error::NotAdmissible { c2: params.c2() });
    }
    Ok(GentleMap { reference: reference.clone(), params: *params, target_sizes: reference.class_sizes() })
}

/// Draws a uniform reference sequence, retrying until it is admissible.
pub fn random_admissible<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    params: &AdmissibilityParams,
    rng: &mut R,
) -> Result<SpinSequence> {
    for _ in 0..10_000 {
        let seq = SpinSequence::random(n, k, rng)?;
        if is_admissible(&seq, params) {
            return Ok(seq);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no admissible sequence found for n = {n}, k = {k}, c2 = {}",
        params.c2()
    )))
}

/// Moves indices between classes until every class has its target size.
///
/// Patterns are visited in increasing order. Oversized classes give up their
/// largest indices to a pool; undersized classes then take from the pool in
/// increasing index order. A class either only gives or only takes.
fn rebalance(mut classes: Vec<Vec<usize>>, targets: &[usize]) -> Vec<Vec<usize>> {
    let mut pool = Vec::new();
    for (class, &t) in classes.iter_mut().zip(targets) {
        if class.len() > t {
            pool.extend(class.drain(t..));
        }
    }
    pool.sort_unstable();
    let mut pool = pool.into_iter();
    for (class, &t) in classes.iter_mut().zip(targets) {
        if class.len() < t {
            class.extend(pool.by_ref().take(t - class.len()));
            class.sort_unstable();
        }
    }
    debug_assert!(pool.next().is_none());
    classes
}

/// Evaluates the gentle mapping `f`. Inadmissible input is returned unchanged;
/// otherwise `f_1(z) = z_1` and the classes are rebalanced to the reference
/// sizes. The result depends on `z` only through `z_1` and its classes.
pub fn gentle_apply(map: &GentleMap, z: &SpinSequence) -> Result<SpinSequence> {
    map.check_shape(z)?;
    if !is_admissible(z, &map.params) {
        return Ok(z.clone());
    }
    let pp = encode(z);
    let classes = rebalance(pp.classes, &map.target_sizes);
    decode(&PatternPartition { first: pp.first, classes }, z.k())
}

/// The witness `(σ, g)` with `g ∘ (σ ∘ f(z)) = reference` for admissible `z`.
pub fn compose_to_reference(map: &GentleMap, z: &SpinSequence) -> Result<AutomorphismWitness> {
    map.check_shape(z)?;
    if !is_admissible(z, &map.params) {
        return Err(Error::NotAdmissible { c2: map.params.c2() });
    }
    match_automorphism(&gentle_apply(map, z)?, &map.reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::hamming;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sv(s: &[i8]) -> SpinVector {
        SpinVector::from_spins(s).unwrap()
    }

    fn seq(vs: &[&[i8]]) -> SpinSequence {
        SpinSequence::new(vs.iter().map(|v| sv(v)).collect()).unwrap()
    }

    #[test]
    fn encode_examples() {
        let y = seq(&[&[1, 1, 1], &[1, -1, 1]]);
        let pp = encode(&y);
        assert_eq!(pp.first, sv(&[1, 1, 1]));
        // Pattern 1 is (+1), pattern 0 is (−1).
        assert_eq!(pp.classes, vec![vec![1], vec![0, 2]]);
        assert_eq!(decode(&pp, 2).unwrap(), y);

        let single = seq(&[&[1, -1, -1, 1]]);
        assert_eq!(encode(&single).classes, vec![vec![0, 1, 2, 3]]);

        let same = seq(&[&[1, -1, 1], &[1, -1, 1]]);
        assert_eq!(encode(&same).classes, vec![vec![], vec![0, 1, 2]]);
    }

    #[test]
    fn decode_constant_sequence() {
        let y1 = sv(&[1, -1, -1, 1, 1]);
        let k = 4;
        let mut classes = vec![Vec::new(); 1 << (k - 1)];
        classes[(1 << (k - 1)) - 1] = (0..5).collect();
        let out = decode(&PatternPartition { first: y1.clone(), classes }, k).unwrap();
        assert!(out.vectors().iter().all(|v| *v == y1));
    }

    #[test]
    fn decode_rejects_malformed() {
        let first = sv(&[1, 1, 1]);
        let overlap = PatternPartition { first: first.clone(), classes: vec![vec![0, 1], vec![1, 2]] };
        assert!(matches!(decode(&overlap, 2), Err(Error::MalformedEncoding(_))));
        let missing = PatternPartition { first: first.clone(), classes: vec![vec![0], vec![2]] };
        assert!(matches!(decode(&missing, 2), Err(Error::MalformedEncoding(_))));
        let wrong_k = PatternPartition { first, classes: vec![vec![0], vec![1, 2]] };
        assert!(matches!(decode(&wrong_k, 3), Err(Error::MalformedEncoding(_))));
    }

    #[test]
    fn partition_json_uses_one_based_indices() {
        let pp = encode(&seq(&[&[1, 1, 1], &[1, -1, 1]]));
        let json = serde_json::to_string(&pp).unwrap();
        assert_eq!(json, r#"{"first":"3:0x7","classes":{"0":[2],"1":[1,3]}}"#);
        let back: PatternPartition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pp);
        assert!(serde_json::from_str::<PatternPartition>(r#"{"first":"3:0x7","classes":{"0":[2],"1":[1]}}"#).is_err());
    }

    #[test]
    fn invariance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = SpinSequence::random(32, 4, &mut rng).unwrap();
        assert!(sign_switch_invariance_check(&SignSwitch::identity(32), &y));
        assert!(sign_switch_invariance_check(&SignSwitch::new(SpinVector::random(32, &mut rng)), &y));
        let self_switch = SignSwitch::new(y.get(0).clone());
        assert!(sign_switch_invariance_check(&self_switch, &y));
        assert_eq!(encode(&y.sign_switched(&self_switch).unwrap()).first, SpinVector::ones(32));
    }

    #[test]
    fn witness_hand_example() {
        let x = seq(&[&[1, 1, 1], &[1, -1, 1]]);
        let y = seq(&[&[-1, -1, -1], &[-1, -1, 1]]);
        let w = match_automorphism(&x, &y).unwrap();
        assert_eq!(w.sigma.images(), &[0, 2, 1]);
        assert_eq!(w.g.g, sv(&[-1, -1, -1]));
        assert!(w.maps(&x, &y));

        let id = match_automorphism(&x, &x).unwrap();
        assert_eq!(id.sigma, Permutation::identity(3));
        assert_eq!(id.g, SignSwitch::identity(3));
    }

    #[test]
    fn witness_refuses_mismatched_sizes() {
        let x = seq(&[&[1, 1, 1], &[1, -1, 1]]);
        let y = seq(&[&[1, 1, 1], &[1, -1, -1]]);
        match match_automorphism(&x, &y) {
            Err(Error::NoWitness { pattern: 0, source_size: 1, target_size: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn admissibility_examples() {
        let p4 = AdmissibilityParams::new(4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(is_admissible(&SpinSequence::random(10, 1, &mut rng).unwrap(), &AdmissibilityParams::new(1e-9).unwrap()));

        let y1 = SpinVector::ones(100);
        let mut y2 = SpinVector::ones(100);
        for j in 0..50 {
            y2.flip(j);
        }
        let half = SpinSequence::new(vec![y1.clone(), y2]).unwrap();
        assert_eq!(half.class_sizes(), vec![50, 50]);
        assert!(is_admissible(&half, &p4));

        let mut y3 = SpinVector::ones(100);
        for j in 0..10 {
            y3.flip(j);
        }
        let skewed = SpinSequence::new(vec![y1, y3]).unwrap();
        assert_eq!(skewed.class_sizes(), vec![10, 90]);
        let tight = AdmissibilityParams::new(0.1).unwrap();
        // 0.1·√(100·ln 100) ≈ 2.146 < 40.
        assert!((tight.slack(100) - 2.146).abs() < 1e-3);
        assert!(!is_admissible(&skewed, &tight));
        assert!(AdmissibilityParams::new(0.0).is_err());
        assert!(AdmissibilityParams::new(-1.0).is_err());
    }

    #[test]
    fn gentle_map_construction() {
        let p = AdmissibilityParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_admissible(64, 3, &p, &mut rng).unwrap();
        assert!(build_gentle_map(&x, &p).is_ok());

        let constant = SpinSequence::new(vec![SpinVector::ones(16)]).unwrap();
        assert!(build_gentle_map(&constant, &p).is_ok());

        let tight = AdmissibilityParams::new(0.1).unwrap();
        let y1 = SpinVector::ones(100);
        let bad = SpinSequence::new(vec![y1.clone(), y1]).unwrap();
        assert!(matches!(build_gentle_map(&bad, &tight), Err(Error::NotAdmissible { .. })));
    }

    /// A sequence on `n` coordinates whose classes are consecutive runs of
    /// the given sizes, with `y_1` all `+1`.
    fn with_sizes(sizes: &[usize]) -> SpinSequence {
        let n: usize = sizes.iter().sum();
        let k = sizes.len().trailing_zeros() as usize + 1;
        let mut classes = Vec::new();
        let mut start = 0;
        for &s in sizes {
            classes.push((start..start + s).collect());
            start += s;
        }
        decode(&PatternPartition { first: SpinVector::ones(n), classes }, k).unwrap()
    }

    #[test]
    fn gentle_apply_leaves_inadmissible_input() {
        let p = AdmissibilityParams::new(0.5).unwrap();
        let map = build_gentle_map(&with_sizes(&[25, 25, 25, 25]), &p).unwrap();
        let z = with_sizes(&[70, 10, 10, 10]);
        assert!(!is_admissible(&z, &p));
        assert_eq!(gentle_apply(&map, &z).unwrap(), z);
        assert!(matches!(compose_to_reference(&map, &z), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn gentle_apply_identity_when_sizes_match() {
        let p = AdmissibilityParams::default();
        let map = build_gentle_map(&with_sizes(&[30, 20, 26, 24]), &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma = Permutation::random(100, &mut rng);
        let z = with_sizes(&[30, 20, 26, 24]).permuted(&sigma).unwrap();
        assert_eq!(gentle_apply(&map, &z).unwrap(), z);
    }

    #[test]
    fn gentle_apply_moves_exactly_the_surplus() {
        let p = AdmissibilityParams::new(1.0).unwrap();
        // slack = √(100 ln 100) ≈ 21.5
        let map = build_gentle_map(&with_sizes(&[25, 25, 25, 25]), &p).unwrap();
        let z = with_sizes(&[31, 23, 23, 23]);
        assert!(is_admissible(&z, &p));
        let f = gentle_apply(&map, &z).unwrap();
        assert_eq!(f.class_sizes(), vec![25, 25, 25, 25]);
        assert_eq!(f.get(0), z.get(0));
        let (before, after) = (encode(&z), encode(&f));
        // Class 0 = 0..31 donates its six largest indices 25..31; classes
        // 1..3 each receive two of them in increasing order.
        assert_eq!(after.classes[0], (0..25).collect::<Vec<_>>());
        assert_eq!(after.classes[1], [vec![25, 26], (31..54).collect()].concat());
        assert_eq!(after.classes[2], [vec![27, 28], (54..77).collect()].concat());
        assert_eq!(after.classes[3], [vec![29, 30], (77..100).collect()].concat());
        let moved: usize = before
            .classes
            .iter()
            .zip(&after.classes)
            .map(|(b, a)| b.iter().filter(|j| !a.contains(j)).count())
            .sum();
        assert_eq!(moved, 6);
        assert!(is_admissible(&f, &p));
    }

    #[test]
    fn compose_examples() {
        let p = AdmissibilityParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_admissible(256, 3, &p, &mut rng).unwrap();
        let map = build_gentle_map(&x, &p).unwrap();
        let w = compose_to_reference(&map, &x).unwrap();
        assert_eq!(w.sigma, Permutation::identity(256));
        assert_eq!(w.g, SignSwitch::identity(256));
        for _ in 0..20 {
            let z = random_admissible(256, 3, &p, &mut rng).unwrap();
            let w = compose_to_reference(&map, &z).unwrap();
            assert!(w.maps(&gentle_apply(&map, &z).unwrap(), &x));
        }
        let wrong_k = SpinSequence::random(256, 2, &mut rng).unwrap();
        assert!(compose_to_reference(&map, &wrong_k).is_err());
    }

    #[test]
    fn inadmissibility_decreases_with_c2() {
        // Small c2 values make the failure event common enough to see the ordering.
        let counts = inadmissibility_counts(256, 3, &[0.05, 0.1, 0.2, 0.4], 2000, 5).unwrap();
        assert!(counts.windows(2).all(|w| w[0] > w[1]), "{counts:?}");
        let rerun = inadmissibility_counts(256, 3, &[0.05, 0.1, 0.2, 0.4], 2000, 5).unwrap();
        assert_eq!(counts, rerun);
    }

    fn seq_strategy() -> impl Strategy<Value = SpinSequence> {
        (1usize..=64, 1usize..=5, any::<u64>()).prop_map(|(n, k, seed)| {
            SpinSequence::random(n, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn encoding_is_a_bijection(y in seq_strategy()) {
            let pp = encode(&y);
            prop_assert_eq!(pp.class_sizes().iter().sum::<usize>(), y.n());
            let back = decode(&pp, y.k()).unwrap();
            prop_assert_eq!(&back, &y);
            prop_assert_eq!(encode(&back), pp);
        }

        #[test]
        fn classes_invariant_under_sign_switch(y in seq_strategy(), seed in any::<u64>()) {
            let g = SignSwitch::new(SpinVector::random(y.n(), &mut ChaCha8Rng::seed_from_u64(seed)));
            prop_assert!(sign_switch_invariance_check(&g, &y));
        }

        #[test]
        fn witness_found_for_equivalent_sequences(y in seq_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = Permutation::random(y.n(), &mut rng);
            let g = SignSwitch::new(SpinVector::random(y.n(), &mut rng));
            let target = y.permuted(&sigma).unwrap().sign_switched(&g).unwrap();
            let w = match_automorphism(&y, &target).unwrap();
            prop_assert!(w.maps(&y, &target));
        }

        #[test]
        fn gentle_map_is_symmetric_and_close(n in 32usize..=300, k in 1usize..=4, c2 in 0.2f64..4.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = AdmissibilityParams::new(c2).unwrap();
            let Ok(x) = random_admissible(n, k, &p, &mut rng) else { return Ok(()) };
            let map = build_gentle_map(&x, &p).unwrap();
            let z = SpinSequence::random(n, k, &mut rng).unwrap();
            let f = gentle_apply(&map, &z).unwrap();
            let radius = p.gentle_radius(n, k);
            for i in 0..k {
                prop_assert!(hamming(z.get(i), f.get(i)).unwrap() as f64 <= radius);
            }
            if is_admissible(&z, &p) {
                prop_assert_eq!(f.class_sizes(), x.class_sizes());
                for (b, a) in encode(&z).classes.iter().zip(&encode(&f).classes) {
                    let sym = b.iter().filter(|j| !a.contains(j)).count() + a.iter().filter(|j| !b.contains(j)).count();
                    prop_assert!(sym as f64 <= 2.0 * p.slack(n));
                }
            }
            for _ in 0..5 {
                let g = SignSwitch::new(SpinVector::random(n, &mut rng));
                let lhs = gentle_apply(&map, &z.sign_switched(&g).unwrap()).unwrap();
                prop_assert_eq!(lhs, f.sign_switched(&g).unwrap());
            }
        }
    }
}
