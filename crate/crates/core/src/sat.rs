//! Realized disorders, exact emptiness decisions and disorder sampling.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::cubeset::{CubeSet, HalfcubeTemplate};
use crate::error::{Error, Result};
use crate::hypercube::{ensure_exact, ModelParams, SignSwitch, SpinVector};

/// The active centers `{x : ω_x = 1}` of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Disorder {
    params: ModelParams,
    active: Vec<u64>,
    p: Option<f64>,
}

impl Disorder {
    /// Builds a disorder from center codes; duplicates collapse.
    pub fn new(params: ModelParams, mut active: Vec<u64>) -> Result<Self> {
        ensure_exact(params.n())?;
        let size = 1u64 << params.n();
        if let Some(&bad) = active.iter().find(|&&c| c >= size) {
            return Err(Error::InvalidParameter(format!(
                "center code {bad:#x} does not fit dimension {}",
                params.n()
            )));
        }
        active.sort_unstable();
        active.dedup();
        Ok(Self { params, active, p: None })
    }

    /// Records the selection probability the disorder was drawn with.
    pub fn with_probability(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn active(&self) -> &[u64] {
        &self.active
    }

    pub fn probability(&self) -> Option<f64> {
        self.p
    }

    pub fn centers(&self) -> impl Iterator<Item = SpinVector> + '_ {
        let n = self.params.n();
        self.active.iter().map(move |&c| SpinVector::from_code(n, c).expect("codes fit"))
    }

    pub fn contains(&self, code: u64) -> bool {
        self.active.binary_search(&code).is_ok()
    }

    pub fn is_subset(&self, other: &Disorder) -> bool {
        self.active.iter().all(|&c| other.contains(c))
    }

    /// Adds one center.
    pub fn with_center(&self, code: u64) -> Result<Self> {
        let mut active = self.active.clone();
        active.push(code);
        let mut d = Self::new(self.params, active)?;
        d.p = self.p;
        Ok(d)
    }

    /// `{ g ∘ x : x active }`.
    pub fn sign_switched(&self, g: &SignSwitch) -> Result<Self> {
        crate::error::ensure_dim(self.params.n(), g.n())?;
        let mask = (1u64 << self.params.n()) - 1;
        let gc = g.g.code().expect("exact regime");
        let mut d = Self::new(self.params, self.active.iter().map(|c| !(c ^ gc) & mask).collect())?;
        d.p = self.p;
        Ok(d)
    }

    pub fn to_instance(&self) -> Instance {
        Instance { n: self.params.n(), kappa: self.params.kappa(), active: self.active.clone() }
    }
}

/// On-disk form of a disorder: `{"n": …, "kappa": …, "active": [codes…]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub kappa: f64,
    pub active: Vec<u64>,
}

impl Instance {
    pub fn into_disorder(self) -> Result<Disorder> {
        Disorder::new(ModelParams::new(self.n, self.kappa)?, self.active)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Solver route used to decide emptiness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Recomputes every dot product coordinate by coordinate.
    Naive,
    /// Walks the cube in reflected Gray order, updating each dot by `±2`.
    GrayCode,
    /// Intersects translated half-cube bitsets, 64 candidates per word.
    BitParallel,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Naive, Backend::GrayCode, Backend::BitParallel];
}

/// Outcome of an exact solve. The witness is the smallest surviving code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub empty: bool,
    pub count: u64,
    pub witness: Option<SpinVector>,
    pub backend: Backend,
}

pub fn solve(d: &Disorder) -> Result<SolveResult> {
    solve_with(d, Backend::BitParallel)
}

pub fn solve_with(d: &Disorder, backend: Backend) -> Result<SolveResult> {
    let n = d.params.n();
    ensure_exact(n)?;
    let (count, first) = match backend {
        Backend::Naive => solve_naive(d),
        Backend::GrayCode => solve_gray(d),
        Backend::BitParallel => {
            let set = solution_set(d)?;
            (set.len(), set.first())
        }
    };
    Ok(SolveResult {
        empty: count == 0,
        count,
        witness: first.map(|c| SpinVector::from_code(n, c).expect("code fits")),
        backend,
    })
}

fn solve_naive(d: &Disorder) -> (u64, Option<u64>) {
    let n = d.params.n();
    let centers: Vec<SpinVector> = d.centers().collect();
    let mut count = 0;
    let mut first = None;
    for y in 0..1u64 << n {
        let yv = SpinVector::from_code(n, y).expect("code fits");
        let ok = centers.iter().all(|x| {
            let dot: i64 = (0..n).map(|i| (x.spin(i) * yv.spin(i)) as i64).sum();
            d.params.accepts_dot(dot)
        });
        if ok {
            count += 1;
            first.get_or_insert(y);
        }
    }
    (count, first)
}

fn solve_gray(d: &Disorder) -> (u64, Option<u64>) {
    let n = d.params.n();
    let t = d.params.min_dot();
    // steps[c][j] = 2·x_c^j: the change of dot(x_c, z) when z^j goes -1 → +1.
    let steps: Vec<Vec<i64>> = d
        .active
        .iter()
        .map(|&c| (0..n).map(|j| if c >> j & 1 == 1 { 2 } else { -2 }).collect())
        .collect();
    // z = 0 (all -1): dot(x, z) = -Σ x^j.
    let mut dots: Vec<i64> = steps.iter().map(|s| -s.iter().sum::<i64>() / 2).collect();
    let mut violated = dots.iter().filter(|&&v| v < t).count();
    let mut z = 0u64;
    let mut count = (violated == 0) as u64;
    let mut first = (violated == 0).then_some(0);
    for i in 1..1u64 << n {
        let j = i.trailing_zeros() as usize;
        z ^= 1 << j;
        let up = z >> j & 1 == 1;
        for (dot, s) in dots.iter_mut().zip(&steps) {
            let before = *dot >= t;
            *dot += if up { s[j] } else { -s[j] };
            let after = *dot >= t;
            if before != after {
                if after {
                    violated -= 1;
                } else {
                    violated += 1;
                }
            }
        }
        if violated == 0 {
            count += 1;
            first = Some(first.map_or(z, |f: u64| f.min(z)));
        }
    }
    (count, first)
}

/// The exact set `A = ⋂_{x active} H(x)`; the whole cube when no center is active.
pub fn solution_set(d: &Disorder) -> Result<CubeSet> {
    let template = HalfcubeTemplate::new(&d.params)?;
    Ok(solution_set_with(d, &template))
}

pub(crate) fn solution_set_with(d: &Disorder, template: &HalfcubeTemplate) -> CubeSet {
    let mut set = CubeSet::full(d.params.n()).expect("exact regime checked");
    for &c in &d.active {
        template.restrict(&mut set, c);
        if set.is_empty() {
            break;
        }
    }
    set
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must lie in [0, 1], got {p}")))
    }
}

/// Marks each of the `2^n` centers independently with probability `p`:
/// draws `K ~ Binomial(2^n, p)`, then `K` distinct codes uniformly.
pub fn sample_disorder<R: Rng + ?Sized>(params: &ModelParams, p: f64, rng: &mut R) -> Result<Disorder> {
    check_probability(p, "p")?;
    ensure_exact(params.n())?;
    let population = 1u64 << params.n();
    let k = Binomial::new(population, p)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    let active = rand::seq::index::sample(rng, population as usize, k as usize)
        .into_iter()
        .map(|c| c as u64)
        .collect();
    Ok(Disorder::new(*params, active)?.with_probability(p))
}

/// A pair of disorders with `low.active ⊆ high.active`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSample {
    pub low: Disorder,
    pub high: Disorder,
}

/// Monotone coupling of Bernoulli(`p`) and Bernoulli(`p_hi`) disorders.
///
/// Draws the high disorder, then keeps each of its centers independently
/// with probability `p / p_hi`; this equals thresholding one uniform per
/// center at both levels.
pub fn sample_coupled<R: Rng + ?Sized>(params: &ModelParams, p: f64, p_hi: f64, rng: &mut R) -> Result<CouplingSample> {
    check_probability(p, "p")?;
    check_probability(p_hi, "p_hi")?;
    if p > p_hi {
        return Err(Error::InvalidParameter(format!("coupling needs p ≤ p_hi, got {p} > {p_hi}")));
    }
    let high = sample_disorder(params, p_hi, rng)?;
    let keep = if p_hi > 0.0 { p / p_hi } else { 1.0 };
    let low_active = high.active.iter().copied().filter(|_| keep >= 1.0 || rng.random::<f64>() < keep).collect();
    let low = Disorder::new(*params, low_active)?.with_probability(p);
    Ok(CouplingSample { low, high })
}

/// Lazy sampler without replacement over `0..size` (sparse Fisher–Yates).
#[derive(Debug, Clone)]
struct SparseShuffle {
    size: u64,
    drawn: u64,
    swapped: HashMap<u64, u64>,
}

impl SparseShuffle {
    fn new(size: u64) -> Self {
        Self { size, drawn: 0, swapped: HashMap::new() }
    }

    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u64> {
        if self.drawn == self.size {
            return None;
        }
        let i = self.drawn;
        let j = rng.random_range(i..self.size);
        let at_j = self.swapped.get(&j).copied().unwrap_or(j);
        let at_i = self.swapped.get(&i).copied().unwrap_or(i);
        self.swapped.insert(j, at_i);
        self.swapped.remove(&i);
        self.drawn += 1;
        Some(at_j)
    }
}

/// All Bernoulli(p) disorders of one trial at once.
///
/// Each center carries a uniform label `U_x`; the disorder at level `p` is
/// `{x : U_x ≤ p}`. The labels are generated lazily in increasing order as
/// order statistics of `2^n` uniforms, each attached to a fresh uniformly
/// chosen center, so any prefix costs only its own length. Disorders taken
/// from the same path at `p ≤ p'` are nested.
#[derive(Debug, Clone)]
pub struct DisorderPath<R> {
    params: ModelParams,
    rng: R,
    shuffle: SparseShuffle,
    log_survival: f64,
    labels: Vec<(f64, u64)>,
}

impl<R: Rng> DisorderPath<R> {
    pub fn new(params: &ModelParams, rng: R) -> Result<Self> {
        ensure_exact(params.n())?;
        Ok(Self {
            params: *params,
            rng,
            shuffle: SparseShuffle::new(1u64 << params.n()),
            log_survival: 0.0,
            labels: Vec::new(),
        })
    }

    /// The next `(U, code)` in increasing `U` order; `None` once every center is labelled.
    fn advance(&mut self) -> Option<(f64, u64)> {
        let remaining = self.shuffle.size - self.shuffle.drawn;
        let code = self.shuffle.next(&mut self.rng)?;
        // (1 - U_(i+1)) = (1 - U_(i)) · V^{1/(M - i)}, V uniform on (0, 1].
        let v = 1.0 - self.rng.random::<f64>();
        self.log_survival += v.ln() / remaining as f64;
        let u = -self.log_survival.exp_m1();
        self.labels.push((u, code));
        Some((u, code))
    }

    fn label(&mut self, i: usize) -> Option<(f64, u64)> {
        while self.labels.len() <= i {
            self.advance()?;
        }
        Some(self.labels[i])
    }

    /// The disorder `{x : U_x ≤ p}`.
    pub fn disorder_at(&mut self, p: f64) -> Result<Disorder> {
        check_probability(p, "p")?;
        let mut active = Vec::new();
        let mut i = 0;
        while let Some((u, code)) = self.label(i) {
            if u > p && p < 1.0 {
                break;
            }
            active.push(code);
            i += 1;
        }
        Ok(Disorder::new(self.params, active)?.with_probability(p))
    }

    /// The smallest `p` at which the disorder's intersection is empty, or
    /// `None` if it stays nonempty with every center active.
    pub fn critical_probability(&mut self, template: &HalfcubeTemplate) -> Option<f64> {
        let mut set = CubeSet::full(self.params.n()).expect("exact regime checked");
        let mut i = 0;
        while let Some((u, code)) = self.label(i) {
            template.restrict(&mut set, code);
            if set.is_empty() {
                return Some(u);
            }
            i += 1;
        }
        None
    }
}
