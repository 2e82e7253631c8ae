//! Monte Carlo and exact estimators built on the solvers.
//!
//! All Monte Carlo routines run trials in parallel with one random stream
//! per trial (see [`crate::rng`]) and aggregate integer counts, so their
//! output depends only on the seed and parameters.
//!
//! Emptiness curves are sampled along [`DisorderPath`]s: trial `t` uses the
//! same path at every `p`, so the estimated curve is nondecreasing in `p`
//! for every seed and thresholds for different levels are nested.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubeset::{CubeSet, HalfcubeTemplate};
use crate::error::{Error, Result};
use crate::hypercube::{ensure_exact, halfcube_diff_size, ModelParams, SpinVector};
use crate::rng::{stream, tag};
use crate::sat::{sample_disorder, solution_set_with, Disorder, DisorderPath};
use crate::stats::{mean_stderr, wilson, Z95};
use crate::symmetry::{gentle_apply, GentleMap, SpinSequence};

/// Largest dimension for full enumeration of all disorders.
pub const EXACT_DISORDER_CAP: usize = 4;

/// Largest dimension for the per-sample pivotal and scan routines.
pub const SCAN_CAP: usize = 20;

/// Default relative bracket width at which bisection stops.
pub const DEFAULT_REL_TOL: f64 = 0.02;

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::InvalidParameter("trials must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must lie in [0, 1], got {p}")))
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::ExactRegimeExceeded { n, cap })
    } else {
        Ok(())
    }
}

/// One point of the emptiness curve with its Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub trials: u64,
    pub empty_hits: u64,
    pub theta_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl CurvePoint {
    pub fn from_counts(p: f64, empty_hits: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson(empty_hits, trials, Z95);
        Self { p, trials, empty_hits, theta_hat: empty_hits as f64 / trials as f64, ci_lo, ci_hi }
    }
}

fn path(params: &ModelParams, seed: u64, trial: u64) -> Result<DisorderPath<rand_chacha::ChaCha8Rng>> {
    DisorderPath::new(params, stream(seed, tag::DISORDER_PATH, trial))
}

/// Estimates `P_p(⋂ H(x) = ∅)` at every `p` in `ps` by exact solves of
/// `trials` sampled disorders per point.
pub fn estimate_curve(params: &ModelParams, ps: &[f64], trials: u64, seed: u64) -> Result<Vec<CurvePoint>> {
    ensure_exact(params.n())?;
    check_trials(trials)?;
    for &p in ps {
        check_probability(p, "p")?;
    }
    let template = HalfcubeTemplate::new(params)?;
    let outcomes: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut path = path(params, seed, t)?;
            ps.iter()
                .map(|&p| Ok(solution_set_with(&path.disorder_at(p)?, &template).is_empty()))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let hits = outcomes.iter().filter(|o| o[i]).count() as u64;
            CurvePoint::from_counts(p, hits, trials)
        })
        .collect())
}

/// Estimate of `p_N(θ)` with the final bisection bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub theta: f64,
    pub p_hat: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub trials_per_eval: u64,
    pub seed: u64,
    pub evaluations: u32,
    /// Whether the Wilson intervals at the bracket ends lie strictly on
    /// either side of `θ`.
    pub separated: bool,
}

/// Critical probabilities of a batch of disorder paths.
///
/// For each trial, the disorder at level `p` is empty exactly when `p` is at
/// least the trial's critical probability, so the empirical curve at any
/// `p` is a count over this sample and equals what [`estimate_curve`]
/// reports on the same seed.
#[derive(Debug, Clone)]
pub struct CriticalSample {
    params: ModelParams,
    seed: u64,
    /// Sorted; `f64::INFINITY` for paths that never become empty.
    critical: Vec<f64>,
}

impl CriticalSample {
    pub fn draw(params: &ModelParams, trials: u64, seed: u64) -> Result<Self> {
        ensure_exact(params.n())?;
        check_trials(trials)?;
        let template = HalfcubeTemplate::new(params)?;
        let mut critical: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| Ok(path(params, seed, t)?.critical_probability(&template).unwrap_or(f64::INFINITY)))
            .collect::<Result<_>>()?;
        critical.sort_by(f64::total_cmp);
        Ok(Self { params: *params, seed, critical })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn trials(&self) -> u64 {
        self.critical.len() as u64
    }

    pub fn critical_probabilities(&self) -> &[f64] {
        &self.critical
    }

    pub fn empty_hits(&self, p: f64) -> u64 {
        self.critical.partition_point(|&c| c <= p) as u64
    }

    pub fn point(&self, p: f64) -> CurvePoint {
        CurvePoint::from_counts(p, self.empty_hits(p), self.trials())
    }

    /// Bisection for `θ̂(p) = θ`, keeping `θ̂(p_lo) < θ ≤ θ̂(p_hi)` and
    /// halving until `(p_hi − p_lo)/p_lo ≤ rel_tol`. Starts from `[0, 1]`
    /// and halves `p_hi` while `p_lo = 0`.
    pub fn threshold(&self, theta: f64, rel_tol: f64) -> Result<ThresholdEstimate> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
        }
        if rel_tol.is_nan() || rel_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {rel_tol}")));
        }
        let trials = self.trials() as f64;
        let reaches = |p: f64| self.empty_hits(p) as f64 / trials >= theta;
        let mut evaluations = 1;
        if !reaches(1.0) {
            return Err(Error::BracketNotEstablished { theta, at_one: self.point(1.0).theta_hat });
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while lo == 0.0 || (hi - lo) / lo > rel_tol {
            let mid = if lo == 0.0 { hi / 2.0 } else { 0.5 * (lo + hi) };
            if mid <= lo || mid >= hi || evaluations >= 4000 {
                break;
            }
            evaluations += 1;
            if reaches(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (at_lo, at_hi) = (self.point(lo), self.point(hi));
        Ok(ThresholdEstimate {
            theta,
            p_hat: 0.5 * (lo + hi),
            p_lo: lo,
            p_hi: hi,
            trials_per_eval: self.trials(),
            seed: self.seed,
            evaluations,
            separated: at_lo.ci_hi < theta && at_hi.ci_lo > theta,
        })
    }
}

/// Estimates `p_N(θ)` by monotone bisection on the emptiness curve.
pub fn find_threshold(params: &ModelParams, theta: f64, trials_per_eval: u64, seed: u64) -> Result<ThresholdEstimate> {
    CriticalSample::draw(params, trials_per_eval, seed)?.threshold(theta, DEFAULT_REL_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessWindow {
    pub eps: f64,
    pub lower: ThresholdEstimate,
    pub upper: ThresholdEstimate,
    /// `p̂_N(1 − ε) / p̂_N(ε)`.
    pub ratio: f64,
}

/// The window ratio `p̂_N(1 − ε)/p̂_N(ε)`, both ends on the same paths.
pub fn sharpness_window(params: &ModelParams, eps: f64, trials_per_eval: u64, seed: u64) -> Result<SharpnessWindow> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    let sample = CriticalSample::draw(params, trials_per_eval, seed)?;
    sharpness_from(&sample, eps, DEFAULT_REL_TOL)
}

pub fn sharpness_from(sample: &CriticalSample, eps: f64, rel_tol: f64) -> Result<SharpnessWindow> {
    let lower = sample.threshold(eps, rel_tol)?;
    let upper = sample.threshold(1.0 - eps, rel_tol)?;
    Ok(SharpnessWindow { eps, ratio: upper.p_hat / lower.p_hat, lower, upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceMethod {
    ExactEnumeration,
    PivotalMc,
}

/// Total influence `I_f(p)` of the emptiness indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEstimate {
    pub p: f64,
    pub i_hat: f64,
    pub method: InfluenceMethod,
    pub stderr: f64,
    pub trials: u64,
}

/// The emptiness indicator enumerated over every disorder of a tiny cube.
///
/// Stores, for each number `w` of active centers, how many disorders of
/// weight `w` are empty and the total number of pivotal centers over them,
/// so `E_p[f]` and `Σ_x P(x pivotal)` are exact polynomials in `p`.
#[derive(Debug, Clone)]
pub struct ExactModel {
    params: ModelParams,
    centers: usize,
    empty_by_weight: Vec<u64>,
    pivotal_by_weight: Vec<u64>,
}

impl ExactModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        check_cap(params.n(), EXACT_DISORDER_CAP)?;
        let m = 1usize << params.n();
        let template = HalfcubeTemplate::new(params)?;
        let halfcubes: Vec<u64> = (0..m as u64).map(|x| template.halfcube(x).words()[0]).collect();
        let full = CubeSet::full(params.n())?.words()[0];
        let disorders = 1usize << m;
        let mut solution = vec![full; disorders];
        for w in 1..disorders {
            let low = w.trailing_zeros() as usize;
            solution[w] = solution[w & (w - 1)] & halfcubes[low];
        }
        let mut empty_by_weight = vec![0; m + 1];
        let mut pivotal_by_weight = vec![0; m + 1];
        for w in 0..disorders {
            let weight = w.count_ones() as usize;
            let f = solution[w] == 0;
            if f {
                empty_by_weight[weight] += 1;
            }
            let pivotal = (0..m).filter(|&x| (solution[w ^ (1 << x)] == 0) != f).count() as u64;
            pivotal_by_weight[weight] += pivotal;
        }
        Ok(Self { params: *params, centers: m, empty_by_weight, pivotal_by_weight })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn weighted(&self, coeffs: &[u64], p: f64) -> f64 {
        let m = self.centers as i32;
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi(m - k as i32))
            .sum()
    }

    /// `E_p[f]`, the exact emptiness probability.
    pub fn emptiness_probability(&self, p: f64) -> f64 {
        self.weighted(&self.empty_by_weight, p)
    }

    /// `dE_p[f]/dp` by differentiating the polynomial term by term.
    pub fn emptiness_derivative(&self, p: f64) -> f64 {
        let m = self.centers as i32;
        self.empty_by_weight
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let k = k as i32;
                let up = if k > 0 { k as f64 * p.powi(k - 1) * (1.0 - p).powi(m - k) } else { 0.0 };
                let down = if k < m { (m - k) as f64 * p.powi(k) * (1.0 - p).powi(m - k - 1) } else { 0.0 };
                c as f64 * (up - down)
            })
            .sum()
    }

    /// `Σ_x P(x is pivotal)`.
    pub fn pivotal_sum(&self, p: f64) -> f64 {
        self.weighted(&self.pivotal_by_weight, p)
    }

    /// `I_f(p) = 2p(1 − p) Σ_x P(x is pivotal)`.
    pub fn influence(&self, p: f64) -> f64 {
        2.0 * p * (1.0 - p) * self.pivotal_sum(p)
    }
}

pub fn influence_exact(params: &ModelParams, p: f64) -> Result<InfluenceEstimate> {
    check_probability(p, "p")?;
    let model = ExactModel::new(params)?;
    Ok(InfluenceEstimate {
        p,
        i_hat: model.influence(p),
        method: InfluenceMethod::ExactEnumeration,
        stderr: 0.0,
        trials: 0,
    })
}

/// Number of pivotal centers of a realized disorder.
///
/// An inactive `x` is pivotal iff `A ≠ ∅` and `A ∩ H(x) = ∅`; since the
/// half-cubes are balls, those are the centers outside the radius-`r`
/// neighbourhood of `A`. An active `x` is pivotal iff `A = ∅` but the
/// intersection without `x` is not.
pub(crate) fn pivotal_count(d: &Disorder, template: &HalfcubeTemplate) -> u64 {
    let n = d.params().n();
    let active = d.active();
    let full = CubeSet::full(n).expect("exact regime checked");
    let mut prefix = Vec::with_capacity(active.len() + 1);
    prefix.push(full.clone());
    for &c in active {
        let mut next = prefix.last().expect("seeded").clone();
        template.restrict(&mut next, c);
        prefix.push(next);
    }
    let a = prefix.last().expect("seeded");
    if !a.is_empty() {
        return (1u64 << n) - template.reach(a).len();
    }
    let mut suffix = full;
    let mut count = 0;
    for i in (0..active.len()).rev() {
        let mut without = prefix[i].clone();
        without.intersect_with(&suffix).expect("same dimension");
        if !without.is_empty() {
            count += 1;
        }
        template.restrict(&mut suffix, active[i]);
    }
    count
}

/// Unbiased estimate of `I_f(p)` from exact pivotal counts of sampled disorders.
pub fn influence_mc(params: &ModelParams, p: f64, trials: u64, seed: u64) -> Result<InfluenceEstimate> {
    check_probability(p, "p")?;
    check_cap(params.n(), SCAN_CAP)?;
    check_trials(trials)?;
    let template = HalfcubeTemplate::new(params)?;
    let counts: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, tag::INFLUENCE, t);
            let d = sample_disorder(params, p, &mut rng)?;
            Ok(pivotal_count(&d, &template) as f64)
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_stderr(&counts);
    let scale = 2.0 * p * (1.0 - p);
    Ok(InfluenceEstimate { p, i_hat: scale * mean, method: InfluenceMethod::PivotalMc, stderr: scale * se, trials })
}

/// Both sides of the Margulis–Russo identity at `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MargulisRusso {
    pub p: f64,
    pub dp: f64,
    /// Central difference of the exact `E_p[f]`.
    pub lhs: f64,
    /// `I_f(p) / (2p(1 − p))`.
    pub rhs: f64,
    pub gap: f64,
}

pub fn margulis_russo_check(params: &ModelParams, p: f64, dp: f64) -> Result<MargulisRusso> {
    if !(dp > 0.0 && p - dp > 0.0 && p + dp < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < p - dp and p + dp < 1, got p = {p}, dp = {dp}")));
    }
    let model = ExactModel::new(params)?;
    let lhs = (model.emptiness_probability(p + dp) - model.emptiness_probability(p - dp)) / (2.0 * dp);
    let rhs = model.influence(p) / (2.0 * p * (1.0 - p));
    Ok(MargulisRusso { p, dp, lhs, rhs, gap: (lhs - rhs).abs() })
}

/// A Monte Carlo probability with its standard error and Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ProbabilityEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let estimate = hits as f64 / trials as f64;
        let (ci_lo, ci_hi) = wilson(hits, trials, Z95);
        Self { hits, trials, estimate, stderr: (estimate * (1.0 - estimate) / trials as f64).sqrt(), ci_lo, ci_hi }
    }
}

fn check_set(a: &CubeSet, params: &ModelParams, map: &GentleMap) -> Result<()> {
    crate::error::ensure_dim(params.n(), a.n())?;
    crate::error::ensure_dim(params.n(), map.n())?;
    check_cap(params.n(), SCAN_CAP)
}

fn code_of(v: &SpinVector) -> u64 {
    v.code().expect("scan regime fits one word")
}

/// `q(A)`: the probability that `A ∩ ⋂_i H(f_i(Y)) = ∅` for a uniform
/// `k`-sequence `Y` and the gentle mapping `f`.
pub fn q_of_a(a: &CubeSet, params: &ModelParams, map: &GentleMap, trials: u64, seed: u64) -> Result<ProbabilityEstimate> {
    check_set(a, params, map)?;
    check_trials(trials)?;
    let template = HalfcubeTemplate::new(params)?;
    let k = map.k();
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            if a.is_empty() {
                return Ok(true);
            }
            let mut rng = stream(seed, tag::Q_OF_A, t);
            let y = SpinSequence::random(params.n(), k, &mut rng)?;
            let f = gentle_apply(map, &y)?;
            let mut rest = a.clone();
            for v in f.vectors() {
                template.restrict(&mut rest, code_of(v));
                if rest.is_empty() {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<_>>()?;
    Ok(ProbabilityEstimate::from_counts(hits.iter().filter(|&&h| h).count() as u64, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalExperimentParams {
    pub k: usize,
    /// `⌊n / √(ln n)⌋`.
    pub n_star: usize,
    /// `(ln n)^{-1/3}`.
    pub q_threshold: f64,
    pub trials: u64,
}

impl RemovalExperimentParams {
    pub fn new(n: usize, k: usize, trials: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("the removal experiment needs n ≥ 2".into()));
        }
        check_trials(trials)?;
        let ln = (n as f64).ln();
        let n_star = (n as f64 / ln.sqrt()).floor() as usize;
        let rp = Self { k, n_star, q_threshold: ln.powf(-1.0 / 3.0), trials };
        rp.check(n)?;
        Ok(rp)
    }

    pub fn budget(&self) -> usize {
        self.k * self.n_star
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.n_star == 0 {
            return Err(Error::InvalidParameter("k and n_star must be positive".into()));
        }
        if n < 64 && self.budget() as u64 > 1u64 << n {
            return Err(Error::InvalidParameter(format!(
                "budget k·n_star = {} exceeds the 2^{n} centers",
                self.budget()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub q: ProbabilityEstimate,
    pub removal: ProbabilityEstimate,
    /// Removal rate after the first `b` uniform half-cubes, `b = 1..=k·n_star`.
    pub rate_by_budget: Vec<f64>,
    /// Largest `c` with `removal ≥ 1 − exp(−c·q·n_star)`; `None` when
    /// removal is certain or `q = 0`.
    pub implied_c: Option<f64>,
    pub q_meets_threshold: bool,
}

impl RemovalReport {
    pub fn q_hat(&self) -> f64 {
        self.q.estimate
    }

    pub fn removal_rate(&self) -> f64 {
        self.removal.estimate
    }
}

/// Estimates `q(A)` and the probability that `k·n_star` uniform half-cubes
/// remove all of `A`, recording the rate at every intermediate budget.
pub fn removal_experiment(
    a: &CubeSet,
    params: &ModelParams,
    map: &GentleMap,
    rp: &RemovalExperimentParams,
    seed: u64,
) -> Result<RemovalReport> {
    check_set(a, params, map)?;
    rp.check(params.n())?;
    if rp.k != map.k() {
        return Err(Error::InvalidParameter(format!("k = {} does not match the map's {}", rp.k, map.k())));
    }
    let q = q_of_a(a, params, map, rp.trials, seed)?;
    let template = HalfcubeTemplate::new(params)?;
    let budget = rp.budget();
    let n = params.n();
    // First budget at which A is emptied, or budget + 1 if never.
    let first_empty: Vec<usize> = (0..rp.trials)
        .into_par_iter()
        .map(|t| {
            if a.is_empty() {
                return 0;
            }
            let mut rng = stream(seed, tag::REMOVAL, t);
            let mut rest = a.clone();
            for b in 1..=budget {
                template.restrict(&mut rest, code_of(&SpinVector::random(n, &mut rng)));
                if rest.is_empty() {
                    return b;
                }
            }
            budget + 1
        })
        .collect();
    let rate_by_budget: Vec<f64> = (1..=budget)
        .map(|b| first_empty.iter().filter(|&&f| f <= b).count() as f64 / rp.trials as f64)
        .collect();
    let removal = ProbabilityEstimate::from_counts(first_empty.iter().filter(|&&f| f <= budget).count() as u64, rp.trials);
    let implied_c = (removal.estimate < 1.0 && q.estimate > 0.0)
        .then(|| -(1.0 - removal.estimate).ln() / (q.estimate * rp.n_star as f64));
    Ok(RemovalReport { q_meets_threshold: q.estimate >= rp.q_threshold, q, removal, rate_by_budget, implied_c })
}

/// A set of centers whose forced activation makes emptiness likely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingCertificate {
    pub set: Vec<SpinVector>,
    pub delta: f64,
    pub confidence: f64,
    pub trials: u64,
    /// Conditional emptiness estimate on the certification draws.
    pub estimate: f64,
    /// Its Wilson lower bound; at least `1 − delta`.
    pub lower_bound: f64,
    /// Selection probability of the fresh disorders.
    pub p: f64,
}

/// Estimates `P_p(⋂_{ω_x = 1} H(x) ∩ ⋂_j H(x_j) = ∅)` for a fixed set of
/// centers on `trials` fresh disorders of one stream family.
pub fn conditional_emptiness(
    params: &ModelParams,
    p: f64,
    set: &[u64],
    trials: u64,
    seed: u64,
    stream_tag: u64,
) -> Result<ProbabilityEstimate> {
    let template = HalfcubeTemplate::new(params)?;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut a = fresh_solution_set(params, p, &template, seed, stream_tag, t)?;
            for &c in set {
                template.restrict(&mut a, c);
            }
            Ok(a.is_empty() as u64)
        })
        .sum::<Result<u64>>()?;
    Ok(ProbabilityEstimate::from_counts(hits, trials))
}

fn fresh_solution_set(
    params: &ModelParams,
    p: f64,
    template: &HalfcubeTemplate,
    seed: u64,
    stream_tag: u64,
    t: u64,
) -> Result<CubeSet> {
    let mut rng = stream(seed, stream_tag, t);
    Ok(solution_set_with(&sample_disorder(params, p, &mut rng)?, template))
}

/// Greedy forward search for a `(1 − δ)`-boosting set among the active
/// centers of `d`.
///
/// Fresh disorders are drawn at `d`'s recorded probability (or its active
/// fraction). Each step adds the candidate that empties the most selection
/// draws; the current set is certified on an independent batch of draws
/// and returned once its Wilson lower bound reaches `1 − δ`.
pub fn boosting_search(
    d: &Disorder,
    delta: f64,
    k_max: usize,
    trials: u64,
    seed: u64,
) -> Result<Option<BoostingCertificate>> {
    let params = *d.params();
    ensure_exact(params.n())?;
    check_trials(trials)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta must lie in [0, 1], got {delta}")));
    }
    let p = d
        .probability()
        .unwrap_or_else(|| d.active().len() as f64 / (1u64 << params.n()) as f64);
    let template = HalfcubeTemplate::new(&params)?;
    let draw = |stream_tag| -> Result<Vec<CubeSet>> {
        (0..trials)
            .into_par_iter()
            .map(|t| fresh_solution_set(&params, p, &template, seed, stream_tag, t))
            .collect()
    };
    let mut select = draw(tag::BOOST_SELECT)?;
    let mut certify = draw(tag::BOOST_CERTIFY)?;
    let mut chosen: Vec<u64> = Vec::new();
    loop {
        let hits = certify.iter().filter(|a| a.is_empty()).count() as u64;
        let est = ProbabilityEstimate::from_counts(hits, trials);
        if est.ci_lo >= 1.0 - delta {
            return Ok(Some(BoostingCertificate {
                set: chosen.iter().map(|&c| SpinVector::from_code(params.n(), c)).collect::<Result<_>>()?,
                delta,
                confidence: 0.95,
                trials,
                estimate: est.estimate,
                lower_bound: est.ci_lo,
                p,
            }));
        }
        if chosen.len() >= k_max {
            return Ok(None);
        }
        let best = d
            .active()
            .iter()
            .filter(|c| !chosen.contains(c))
            .map(|&c| {
                let score = select.par_iter().filter(|a| template.misses(a, c)).count();
                (score, std::cmp::Reverse(c))
            })
            .max();
        let Some((_, std::cmp::Reverse(c))) = best else { return Ok(None) };
        chosen.push(c);
        select.par_iter_mut().for_each(|a| template.restrict(a, c));
        certify.par_iter_mut().for_each(|a| template.restrict(a, c));
    }
}

/// Worst observed `|H(x) \ H(y)| / ((m ln n / n)^{1/2} 2^n)` at distance `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleScanRow {
    pub n: usize,
    pub m: usize,
    pub samples: u64,
    pub max_diff: u64,
    pub max_ratio: f64,
}

/// Exact half-cube differences for sampled pairs at each Hamming distance in `dists`.
pub fn angle_scan(params: &ModelParams, dists: &[usize], samples: u64, seed: u64) -> Result<Vec<AngleScanRow>> {
    let n = params.n();
    check_cap(n, SCAN_CAP)?;
    check_trials(samples)?;
    if let Some(&m) = dists.iter().find(|&&m| m > n) {
        return Err(Error::InvalidParameter(format!("distance {m} exceeds n = {n}")));
    }
    if n < 2 && dists.iter().any(|&m| m > 0) {
        return Err(Error::InvalidParameter("the ratio needs n ≥ 2 (ln n > 0)".into()));
    }
    dists
        .iter()
        .map(|&m| {
            let diffs: Vec<u64> = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let mut rng = stream(seed, tag::ANGLE_SCAN, (m as u64) << 32 | s);
                    let x = SpinVector::random(n, &mut rng);
                    let mut y = x.clone();
                    for i in rand::seq::index::sample(&mut rng, n, m) {
                        y.flip(i);
                    }
                    halfcube_diff_size(&x, &y, params)
                })
                .collect::<Result<_>>()?;
            let max_diff = diffs.into_iter().max().unwrap_or(0);
            let scale = ((m as f64) * (n as f64).ln() / n as f64).sqrt() * (1u64 << n) as f64;
            let max_ratio = if m == 0 { 0.0 } else { max_diff as f64 / scale };
            Ok(AngleScanRow { n, m, samples, max_diff, max_ratio })
        })
        .collect()
}

/// `α̂(n) = p̂_N(θ)·2^n/n` for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub n: usize,
    pub theta: f64,
    pub p_hat: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub alpha_hat: f64,
}

/// Threshold scaled by `2^n/n` for each dimension in `ns`.
pub fn threshold_band(kappa: f64, ns: &[usize], theta: f64, trials: u64, seed: u64) -> Result<Vec<BandRow>> {
    ns.iter()
        .map(|&n| {
            let params = ModelParams::new(n, kappa)?;
            let est = find_threshold(&params, theta, trials, seed)?;
            Ok(BandRow {
                n,
                theta,
                p_hat: est.p_hat,
                p_lo: est.p_lo,
                p_hi: est.p_hi,
                alpha_hat: est.p_hat * (1u64 << n) as f64 / n as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::solve;
    use crate::symmetry::{build_gentle_map, random_admissible, AdmissibilityParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, kappa: f64) -> ModelParams {
        ModelParams::new(n, kappa).unwrap()
    }

    /// `E_p[f]` and `Σ_x P(x pivotal)` by direct summation over disorders,
    /// re-solving each one and each single-center flip.
    fn brute_force(params: &ModelParams, p: f64) -> (f64, f64) {
        let m = 1u64 << params.n();
        let mut e = 0.0;
        let mut piv = 0.0;
        let empty = |w: u64| {
            let d = Disorder::new(*params, (0..m).filter(|x| w >> x & 1 == 1).collect()).unwrap();
            solve(&d).unwrap().empty
        };
        for w in 0..1u64 << m {
            let k = w.count_ones() as i32;
            let mu = p.powi(k) * (1.0 - p).powi(m as i32 - k);
            let f = empty(w);
            if f {
                e += mu;
            }
            piv += mu * (0..m).filter(|x| empty(w ^ (1 << x)) != f).count() as f64;
        }
        (e, piv)
    }

    #[test]
    fn exact_model_matches_brute_force() {
        for n in 1..=3 {
            for kappa in [-0.8, 0.0, 0.6] {
                let prm = params(n, kappa);
                let model = ExactModel::new(&prm).unwrap();
                for p in [0.1, 0.37, 0.8] {
                    let (e, piv) = brute_force(&prm, p);
                    assert!((model.emptiness_probability(p) - e).abs() < 1e-12);
                    assert!((model.pivotal_sum(p) - piv).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_dimensional_closed_forms() {
        let model = ExactModel::new(&params(1, 0.0)).unwrap();
        for p in [0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            assert!((model.emptiness_probability(p) - p * p).abs() < 1e-15);
            assert!((model.influence(p) - 4.0 * p * p * (1.0 - p)).abs() < 1e-15);
            assert!((model.emptiness_derivative(p) - 2.0 * p).abs() < 1e-15);
        }
        assert_eq!(influence_exact(&params(3, 0.0), 0.0).unwrap().i_hat, 0.0);
        assert_eq!(influence_exact(&params(3, 0.0), 1.0).unwrap().i_hat, 0.0);
        assert!(matches!(influence_exact(&params(5, 0.0), 0.5), Err(Error::ExactRegimeExceeded { .. })));
    }

    #[test]
    fn pivotal_count_matches_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=7 {
            for kappa in [-0.5, 0.0, 0.7, 3.0] {
                let prm = params(n, kappa);
                let template = HalfcubeTemplate::new(&prm).unwrap();
                for _ in 0..10 {
                    let d = sample_disorder(&prm, rand::Rng::random_range(&mut rng, 0.0..0.3), &mut rng).unwrap();
                    let f = solve(&d).unwrap().empty;
                    let brute = (0..1u64 << n)
                        .filter(|&x| {
                            let mut others: Vec<u64> = d.active().iter().copied().filter(|&c| c != x).collect();
                            let off = solve(&Disorder::new(prm, others.clone()).unwrap()).unwrap().empty;
                            others.push(x);
                            let on = solve(&Disorder::new(prm, others).unwrap()).unwrap().empty;
                            debug_assert!(f == off || f == on);
                            on != off
                        })
                        .count() as u64;
                    assert_eq!(pivotal_count(&d, &template), brute, "n={n} kappa={kappa}");
                }
            }
        }
    }

    #[test]
    fn curve_extremes() {
        let pts = estimate_curve(&params(6, 0.0), &[0.0], 200, 1).unwrap();
        assert_eq!(pts[0].theta_hat, 0.0);
        let infeasible = estimate_curve(&params(1, 2.0), &[1.0], 200, 1).unwrap();
        assert_eq!(infeasible[0].theta_hat, 1.0);
    }

    #[test]
    fn curve_one_dimensional() {
        let pt = &estimate_curve(&params(1, 0.0), &[0.5], 20_000, 3).unwrap()[0];
        let sigma = (0.25f64 * 0.75 / 20_000.0).sqrt();
        assert!((pt.theta_hat - 0.25).abs() <= 3.0 * sigma, "{pt:?}");
        assert!(pt.ci_lo <= pt.theta_hat && pt.theta_hat <= pt.ci_hi);
    }

    #[test]
    fn critical_sample_agrees_with_curve() {
        let prm = params(9, 0.0);
        let ps: Vec<f64> = (1..=12).map(|i| i as f64 * 0.004).collect();
        let curve = estimate_curve(&prm, &ps, 300, 17).unwrap();
        let sample = CriticalSample::draw(&prm, 300, 17).unwrap();
        for pt in &curve {
            assert_eq!(sample.empty_hits(pt.p), pt.empty_hits, "p = {}", pt.p);
        }
        assert!(curve.windows(2).all(|w| w[0].empty_hits <= w[1].empty_hits));
    }

    #[test]
    fn threshold_one_dimensional() {
        let est = find_threshold(&params(1, 0.0), 0.25, 20_000, 1).unwrap();
        assert!(est.p_lo <= est.p_hat && est.p_hat <= est.p_hi);
        assert!((est.p_hi - est.p_lo) / est.p_lo <= DEFAULT_REL_TOL);
        // θ̂ within 3σ of 0.25 moves p by at most ~0.0092/(2p).
        assert!((est.p_hat - 0.5).abs() < 0.02, "{est:?}");
    }

    #[test]
    fn thresholds_are_nested() {
        let sample = CriticalSample::draw(&params(10, 0.0), 400, 5).unwrap();
        let ps: Vec<f64> = [0.1, 0.3, 0.3001, 0.5, 0.7, 0.9]
            .iter()
            .map(|&t| sample.threshold(t, DEFAULT_REL_TOL).unwrap().p_hat)
            .collect();
        assert!(ps.windows(2).all(|w| w[0] <= w[1]), "{ps:?}");
    }

    #[test]
    fn threshold_errors() {
        let prm = params(2, 0.0);
        assert!(find_threshold(&prm, 0.0, 10, 1).is_err());
        assert!(find_threshold(&prm, 1.0, 10, 1).is_err());
        // κ ≤ −√n: every center lies in its own antipode's half-cube, never empty.
        let never = params(4, -2.0);
        assert!(matches!(find_threshold(&never, 0.5, 50, 1), Err(Error::BracketNotEstablished { .. })));
    }

    #[test]
    fn sharpness_one_dimensional() {
        let w = sharpness_window(&params(1, 0.0), 0.25, 40_000, 2).unwrap();
        assert!((w.ratio - 3f64.sqrt()).abs() < 0.06, "{w:?}");
        let near_half = sharpness_window(&params(1, 0.0), 0.4999, 40_000, 2).unwrap();
        assert!((near_half.ratio - 1.0).abs() < 0.05, "{near_half:?}");
        assert!(sharpness_window(&params(1, 0.0), 0.5, 10, 2).is_err());
    }

    #[test]
    fn influence_mc_one_dimensional() {
        let est = influence_mc(&params(1, 0.0), 0.5, 20_000, 4).unwrap();
        assert!((est.i_hat - 0.5).abs() <= 3.0 * est.stderr, "{est:?}");
        let zero = influence_mc(&params(6, 0.0), 0.0, 100, 4).unwrap();
        assert_eq!((zero.i_hat, zero.stderr), (0.0, 0.0));
    }

    #[test]
    fn margulis_russo_one_and_two_dimensional() {
        for p in [0.2, 0.5, 0.7] {
            let r = margulis_russo_check(&params(1, 0.0), p, 1e-3).unwrap();
            assert!((r.rhs - 2.0 * p).abs() < 1e-12);
            assert!(r.gap < 1e-10, "{r:?}");
        }
        let r = margulis_russo_check(&params(2, 0.0), 0.5, 1e-3).unwrap();
        assert!(r.gap <= 1e-5, "{r:?}");
        let flipped = margulis_russo_check(&params(2, 0.0), 0.5, 1e-3).unwrap();
        assert_eq!(r, flipped);
        assert!(margulis_russo_check(&params(2, 0.0), 0.001, 0.01).is_err());
    }

    #[test]
    fn q_and_removal_trivial_cases() {
        let prm = params(8, 0.0);
        let ap = AdmissibilityParams::default();
        let x = random_admissible(8, 2, &ap, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let map = build_gentle_map(&x, &ap).unwrap();
        let empty = CubeSet::empty(8).unwrap();
        assert_eq!(q_of_a(&empty, &prm, &map, 50, 1).unwrap().estimate, 1.0);
        let rp = RemovalExperimentParams::new(8, 2, 50).unwrap();
        assert_eq!(removal_experiment(&empty, &prm, &map, &rp, 1).unwrap().removal_rate(), 1.0);

        let infeasible = params(8, 3.0);
        let full = CubeSet::full(8).unwrap();
        assert_eq!(q_of_a(&full, &infeasible, &map, 50, 1).unwrap().estimate, 1.0);
    }

    #[test]
    fn removal_rate_grows_with_budget() {
        let prm = params(10, 0.0);
        let ap = AdmissibilityParams::default();
        let x = random_admissible(10, 2, &ap, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let map = build_gentle_map(&x, &ap).unwrap();
        let d = sample_disorder(&prm, 0.004, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let a = crate::sat::solution_set(&d).unwrap();
        let rp = RemovalExperimentParams::new(10, 2, 500).unwrap();
        assert_eq!(rp.n_star, 6);
        let rep = removal_experiment(&a, &prm, &map, &rp, 9).unwrap();
        assert_eq!(rep.rate_by_budget.len(), 12);
        assert!(rep.rate_by_budget.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*rep.rate_by_budget.last().unwrap(), rep.removal_rate());
    }

    #[test]
    fn removal_params_validation() {
        assert!(RemovalExperimentParams::new(1, 2, 10).is_err());
        assert!(RemovalExperimentParams::new(2, 3, 10).is_err());
        let rp = RemovalExperimentParams::new(14, 2, 10).unwrap();
        assert_eq!(rp.n_star, 8);
        assert!((rp.q_threshold - (14f64).ln().powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn boosting_trivial_cases() {
        let prm = params(8, 0.0);
        let d = sample_disorder(&prm, 0.02, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let cert = boosting_search(&d, 1.0, 4, 50, 1).unwrap().unwrap();
        assert!(cert.set.is_empty());

        // κ > √n: every half-cube is empty, so any nonempty fresh disorder is empty-intersecting.
        let infeasible = params(4, 3.0);
        let dense = sample_disorder(&infeasible, 0.9, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let cert = boosting_search(&dense, 0.1, 4, 200, 1).unwrap().unwrap();
        assert!(cert.set.is_empty());
    }

    #[test]
    fn boosting_finds_a_sound_set_near_threshold() {
        let prm = params(10, 0.0);
        let p_half = find_threshold(&prm, 0.5, 400, 3).unwrap().p_hat;
        let d = sample_disorder(&prm, p_half, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let cert = boosting_search(&d, 0.2, 8, 400, 11).unwrap().expect("certificate");
        assert!(cert.lower_bound >= 0.8);
        let codes: Vec<u64> = cert.set.iter().map(|v| v.code().unwrap()).collect();
        assert!(codes.iter().all(|c| d.contains(*c)));
        let again = conditional_emptiness(&prm, cert.p, &codes, 400, 11, tag::BOOST_CERTIFY).unwrap();
        assert_eq!(again.estimate, cert.estimate);
        let reproduced = (100..120)
            .filter(|&s| conditional_emptiness(&prm, cert.p, &codes, 400, s, tag::BOOST_CERTIFY).unwrap().estimate >= 0.8)
            .count();
        assert!(reproduced >= 18, "{reproduced}/20");
    }

    #[test]
    fn angle_scan_examples() {
        let rows = angle_scan(&params(2, 0.0), &[0, 2], 20, 1).unwrap();
        assert_eq!(rows[0].max_ratio, 0.0);
        assert_eq!(rows[1].max_diff, 1);
        let expected = 1.0 / ((2.0 * 2f64.ln() / 2.0).sqrt() * 4.0);
        assert!((rows[1].max_ratio - expected).abs() < 1e-12);
        assert!((rows[1].max_ratio - 0.30).abs() < 0.01);
        assert!(angle_scan(&params(4, 0.0), &[5], 10, 1).is_err());
    }
}
