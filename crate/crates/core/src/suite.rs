//! Randomized battery of the exact symmetry, encoding and solver properties.
//!
//! Every check runs a fixed number of cases drawn from its own seeded
//! stream. A single failure in any case is a failed row.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{halfcube, hamming, ModelParams, Permutation, SignSwitch, SpinVector};
use crate::rng::{stream, tag};
use crate::sat::{sample_disorder, solve_with, Backend};
use crate::symmetry::{
    build_gentle_map, compose_to_reference, decode, encode, gentle_apply, match_automorphism, random_admissible,
    sign_switch_invariance_check, AdmissibilityParams, SpinSequence,
};

pub const DEFAULT_CASES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub cases: u64,
    pub c2: f64,
    /// Replaces the sign-switch action by a faulty one that also flips the
    /// first coordinate whenever the last is −1. Only for checking that the
    /// suite can fail.
    pub mutate: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 0, cases: DEFAULT_CASES, c2: crate::symmetry::DEFAULT_C2, mutate: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub cases: u64,
    pub failures: u64,
    /// Inputs of the first failing case.
    pub first_failure: Option<String>,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>6} {:>9}  status", "check", "cases", "failures");
        for r in &self.rows {
            let status = if r.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{:<24} {:>6} {:>9}  {status}", r.check, r.cases, r.failures);
            if let Some(f) = &r.first_failure {
                let _ = writeln!(out, "    first failure: {f}");
            }
        }
        out
    }
}

type Case = fn(&mut rand_chacha::ChaCha8Rng, &SuiteConfig) -> Result<Option<String>>;

const CHECKS: &[(&str, Case)] = &[
    ("halfcube-sign-switch", halfcube_sign_switch),
    ("halfcube-permutation", halfcube_permutation),
    ("encoding-bijection", encoding_bijection),
    ("encoding-invariance", encoding_invariance),
    ("automorphism-witness", automorphism_witness),
    ("gentle-mapping", gentle_mapping),
    ("backend-agreement", backend_agreement),
];

pub fn lemma_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.cases == 0 {
        return Err(Error::InvalidParameter("cases must be at least 1".into()));
    }
    let rows = CHECKS
        .iter()
        .enumerate()
        .map(|(id, (name, case))| {
            let outcomes: Vec<Option<String>> = (0..cfg.cases)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(cfg.seed, tag::LEMMA_SUITE, (id as u64) << 32 | i);
                    case(&mut rng, cfg)
                })
                .collect::<Result<_>>()?;
            Ok(CheckRow {
                check: name.to_string(),
                cases: cfg.cases,
                failures: outcomes.iter().filter(|o| o.is_some()).count() as u64,
                first_failure: outcomes.into_iter().flatten().next(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport { seed: cfg.seed, rows })
}

fn random_params<R: Rng>(rng: &mut R, max_n: usize) -> ModelParams {
    let n = rng.random_range(1..=max_n);
    let kappa = [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 1.5][rng.random_range(0..7)];
    ModelParams::new(n, kappa).expect("valid")
}

fn sorted_codes(vs: impl IntoIterator<Item = SpinVector>) -> Vec<u64> {
    let mut codes: Vec<u64> = vs.into_iter().map(|v| v.code().expect("small n")).collect();
    codes.sort_unstable();
    codes
}

fn switch(g: &SignSwitch, x: &SpinVector, cfg: &SuiteConfig) -> SpinVector {
    let mut y = g.apply(x).expect("same dimension");
    if cfg.mutate && x.n() >= 2 && !y.bit(x.n() - 1) {
        y.flip(0);
    }
    y
}

fn halfcube_sign_switch(rng: &mut rand_chacha::ChaCha8Rng, cfg: &SuiteConfig) -> Result<Option<String>> {
    let params = random_params(rng, 12);
    let x = SpinVector::random(params.n(), rng);
    let g = SignSwitch::new(SpinVector::random(params.n(), rng));
    let lhs = sorted_codes(halfcube(&switch(&g, &x, cfg), &params)?);
    let rhs = sorted_codes(halfcube(&x, &params)?.iter().map(|y| switch(&g, y, cfg)));
    Ok((lhs != rhs).then(|| format!("n={} kappa={} x={x} g={}", params.n(), params.kappa(), g.g)))
}

fn halfcube_permutation(rng: &mut rand_chacha::ChaCha8Rng, _: &SuiteConfig) -> Result<Option<String>> {
    let params = random_params(rng, 12);
    let x = SpinVector::random(params.n(), rng);
    let sigma = Permutation::random(params.n(), rng);
    let lhs = sorted_codes(halfcube(&sigma.apply(&x)?, &params)?);
    let rhs = sorted_codes(halfcube(&x, &params)?.iter().map(|y| sigma.apply(y).expect("same dimension")));
    Ok((lhs != rhs).then(|| format!("n={} kappa={} x={x} sigma={:?}", params.n(), params.kappa(), sigma.images())))
}

fn random_sequence<R: Rng>(rng: &mut R) -> SpinSequence {
    let n = rng.random_range(1..=64);
    let k = rng.random_range(1..=5);
    SpinSequence::random(n, k, rng).expect("valid shape")
}

fn encoding_bijection(rng: &mut rand_chacha::ChaCha8Rng, _: &SuiteConfig) -> Result<Option<String>> {
    let y = random_sequence(rng);
    let pp = encode(&y);
    let ok = pp.class_sizes().iter().sum::<usize>() == y.n() && decode(&pp, y.k())? == y && encode(&decode(&pp, y.k())?) == pp;
    Ok((!ok).then(|| format!("sequence={:?}", y.vectors())))
}

fn encoding_invariance(rng: &mut rand_chacha::ChaCha8Rng, cfg: &SuiteConfig) -> Result<Option<String>> {
    let y = random_sequence(rng);
    let g = SignSwitch::new(SpinVector::random(y.n(), rng));
    let ok = if cfg.mutate {
        let switched = SpinSequence::new(y.vectors().iter().map(|v| switch(&g, v, cfg)).collect())?;
        encode(&switched).classes == encode(&y).classes
    } else {
        sign_switch_invariance_check(&g, &y)
    };
    Ok((!ok).then(|| format!("sequence={:?} g={}", y.vectors(), g.g)))
}

fn automorphism_witness(rng: &mut rand_chacha::ChaCha8Rng, _: &SuiteConfig) -> Result<Option<String>> {
    let source = random_sequence(rng);
    let sigma = Permutation::random(source.n(), rng);
    let g = SignSwitch::new(SpinVector::random(source.n(), rng));
    let target = source.permuted(&sigma)?.sign_switched(&g)?;
    let found = match_automorphism(&source, &target)?;
    if !found.maps(&source, &target) {
        return Ok(Some(format!("source={:?} target={:?}", source.vectors(), target.vectors())));
    }
    if source.k() >= 2 {
        // Moving one coordinate to another class must leave no witness.
        let mut vs = target.vectors().to_vec();
        let j = rng.random_range(1..source.k());
        vs[j].flip(rng.random_range(0..source.n()));
        let broken = SpinSequence::new(vs)?;
        if !matches!(match_automorphism(&source, &broken), Err(Error::NoWitness { .. })) {
            return Ok(Some(format!("witness for unequal classes: source={:?}", source.vectors())));
        }
    }
    Ok(None)
}

fn gentle_mapping(rng: &mut rand_chacha::ChaCha8Rng, cfg: &SuiteConfig) -> Result<Option<String>> {
    let ap = AdmissibilityParams::new(cfg.c2)?;
    let n = rng.random_range(16..=64);
    let k = rng.random_range(1..=3);
    let reference = random_admissible(n, k, &ap, rng)?;
    let map = build_gentle_map(&reference, &ap)?;
    let z = SpinSequence::random(n, k, rng)?;
    let g = SignSwitch::new(SpinVector::random(n, rng));
    let fz = gentle_apply(&map, &z)?;
    let symmetric = gentle_apply(&map, &z.sign_switched(&g)?)? == fz.sign_switched(&g)?;
    let radius = ap.gentle_radius(n, k);
    let close = z.vectors().iter().zip(fz.vectors()).all(|(a, b)| hamming(a, b).expect("same n") as f64 <= radius);
    let anchored = if crate::symmetry::is_admissible(&z, &ap) {
        fz.class_sizes() == map.target_sizes() && compose_to_reference(&map, &z)?.maps(&fz, &reference)
    } else {
        fz == z
    };
    let ok = symmetric && close && anchored;
    Ok((!ok).then(|| format!("n={n} k={k} reference={:?} z={:?}", reference.vectors(), z.vectors())))
}

fn backend_agreement(rng: &mut rand_chacha::ChaCha8Rng, _: &SuiteConfig) -> Result<Option<String>> {
    let params = random_params(rng, 10);
    let mut ps = [0.001, 0.01, 0.05, 0.2, 0.5];
    ps.shuffle(rng);
    let d = sample_disorder(&params, ps[0], rng)?;
    let results: Vec<_> = Backend::ALL.iter().map(|&b| solve_with(&d, b)).collect::<Result<_>>()?;
    let ok = results.windows(2).all(|w| (w[0].empty, w[0].count, &w[0].witness) == (w[1].empty, w[1].count, &w[1].witness));
    Ok((!ok).then(|| format!("instance={}", d.to_instance().to_json().unwrap_or_default())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = lemma_suite(&SuiteConfig { cases: 200, ..Default::default() }).unwrap();
        assert!(report.all_passed(), "{}", report.table());
        assert_eq!(report.rows.len(), CHECKS.len());
    }

    #[test]
    fn mutant_is_caught() {
        let report = lemma_suite(&SuiteConfig { cases: 100, mutate: true, ..Default::default() }).unwrap();
        assert!(!report.all_passed());
        assert!(report.table().contains("FAIL"));
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = SuiteConfig { seed: 9, cases: 50, ..Default::default() };
        assert_eq!(lemma_suite(&cfg).unwrap().table(), lemma_suite(&cfg).unwrap().table());
    }
}
