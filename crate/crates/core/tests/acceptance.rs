//! Acceptance battery: one line per criterion; exits nonzero if any fails.
//!
//! Criterion 11 re-runs criteria 1 to 10 on a thread pool of a different
//! size and compares their serialized outputs byte for byte.

use std::time::Instant;

use perclab::estimators::{
    angle_scan, estimate_curve, influence_exact, influence_mc, margulis_russo_check, removal_experiment,
    sharpness_from, threshold_band, CriticalSample, ExactModel, RemovalExperimentParams, DEFAULT_REL_TOL,
};
use perclab::rng::stream;
use perclab::suite::{lemma_suite, SuiteConfig};
use perclab::symmetry::inadmissibility_counts;
use perclab::{
    build_gentle_map, sample_coupled, sample_disorder, solution_set, solve_with, AdmissibilityParams, Backend,
    ModelParams,
};
use rand::Rng;
use serde_json::json;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized experiment output, compared across thread counts.
    artifact: String,
}

fn params(n: usize, kappa: f64) -> ModelParams {
    ModelParams::new(n, kappa).unwrap()
}

fn lemma_battery() -> Outcome {
    let report = lemma_suite(&SuiteConfig { seed: SEED, cases: 1000, ..Default::default() }).unwrap();
    let failures: u64 = report.rows.iter().map(|r| r.failures).sum();
    Outcome {
        pass: report.all_passed(),
        detail: format!("{} checks x 1000 cases, {failures} failures", report.rows.len()),
        artifact: report.table(),
    }
}

fn backend_equivalence() -> Outcome {
    use rayon::prelude::*;
    let rows: Vec<(usize, f64, usize, bool, u64, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(SEED, 100, i);
            let n = rng.random_range(8..=20);
            let kappa = [0.0, 0.5, 1.0][rng.random_range(0..3)];
            let scale = rng.random_range(0.05..3.0);
            let p = (scale * n as f64 / (n as f64).exp2()).min(1.0);
            let d = sample_disorder(&params(n, kappa), p, &mut rng).unwrap();
            let r: Vec<_> = Backend::ALL.iter().map(|&b| solve_with(&d, b).unwrap()).collect();
            let agree = r.windows(2).all(|w| (w[0].empty, w[0].count) == (w[1].empty, w[1].count));
            (n, kappa, d.active().len(), r[0].empty, r[0].count, agree)
        })
        .collect();
    let bad = rows.iter().filter(|r| !r.5).count();
    let empties = rows.iter().filter(|r| r.3).count();
    Outcome {
        pass: bad == 0,
        detail: format!("1000 instances, n in 8..=20, {empties} empty, {bad} disagreements"),
        artifact: format!("{rows:?}"),
    }
}

fn exact_oracles() -> Outcome {
    let mut worst_curve: f64 = 0.0;
    let mut worst_influence: f64 = 0.0;
    let mut log = Vec::new();
    for n in 1..=4 {
        for kappa in [0.0, 0.5] {
            let prm = params(n, kappa);
            let model = ExactModel::new(&prm).unwrap();
            let ps = [0.1, 0.3, 0.5];
            let curve = estimate_curve(&prm, &ps, 20_000, SEED).unwrap();
            for pt in &curve {
                let e = model.emptiness_probability(pt.p);
                let sigma = (e * (1.0 - e) / pt.trials as f64).sqrt();
                let z = if sigma > 0.0 { (pt.theta_hat - e).abs() / sigma } else if pt.theta_hat == e { 0.0 } else { f64::INFINITY };
                worst_curve = worst_curve.max(z);
                log.push(json!({"n": n, "kappa": kappa, "p": pt.p, "theta_hat": pt.theta_hat, "exact": e}));
            }
            for p in ps {
                let mc = influence_mc(&prm, p, 20_000, SEED).unwrap();
                let exact = influence_exact(&prm, p).unwrap().i_hat;
                let z = if mc.stderr > 0.0 { (mc.i_hat - exact).abs() / mc.stderr } else if mc.i_hat == exact { 0.0 } else { f64::INFINITY };
                worst_influence = worst_influence.max(z);
                log.push(json!({"n": n, "kappa": kappa, "p": p, "i_mc": mc.i_hat, "i_exact": exact}));
            }
        }
    }
    let one = ExactModel::new(&params(1, 0.0)).unwrap();
    let closed = (1..100)
        .map(|i| i as f64 / 100.0)
        .map(|p| {
            let e = (one.emptiness_probability(p) - p * p).abs() / (p * p);
            let i = (one.influence(p) - 4.0 * p * p * (1.0 - p)).abs() / (4.0 * p * p * (1.0 - p));
            e.max(i)
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: worst_curve <= 3.0 && worst_influence <= 3.0 && closed <= 8.0 * f64::EPSILON,
        detail: format!(
            "max |z| curve {worst_curve:.2}, influence {worst_influence:.2}; n=1 closed forms rel err {closed:.1e}"
        ),
        artifact: serde_json::to_string(&log).unwrap(),
    }
}

fn margulis_russo() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut log = Vec::new();
    for n in 1..=4 {
        for p in [0.2, 0.5, 0.8] {
            let r = margulis_russo_check(&params(n, 0.0), p, 1e-3).unwrap();
            worst = worst.max(r.gap);
            log.push(r);
        }
    }
    Outcome {
        pass: worst <= 1e-4,
        detail: format!("n in 1..=4, p in {{0.2, 0.5, 0.8}}, dp = 1e-3: max gap {worst:.2e}"),
        artifact: serde_json::to_string(&log).unwrap(),
    }
}

fn monotone_coupling() -> Outcome {
    use rayon::prelude::*;
    let prm = params(16, 0.0);
    let scale = 16.0 / 65536.0;
    let results: Vec<(bool, bool, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(SEED, 101, i);
            let lo = rng.random_range(0.2..2.0) * scale;
            let hi = lo * rng.random_range(1.0..3.0);
            let c = sample_coupled(&prm, lo, hi, &mut rng).unwrap();
            let (a_lo, a_hi) = (solution_set(&c.low).unwrap(), solution_set(&c.high).unwrap());
            (c.low.is_subset(&c.high), a_hi.is_subset(&a_lo), a_lo.is_empty() <= a_hi.is_empty())
        })
        .collect();
    let bad = results.iter().filter(|r| !(r.0 && r.1 && r.2)).count();
    Outcome {
        pass: bad == 0,
        detail: format!("{} coupled draws at n=16, {bad} violations", results.len()),
        artifact: format!("{results:?}"),
    }
}

fn threshold_band_check() -> Outcome {
    let ns: Vec<usize> = (10..=20).step_by(2).collect();
    let rows = threshold_band(0.0, &ns, 0.5, 1000, SEED).unwrap();
    let alphas: Vec<f64> = rows.iter().map(|r| r.alpha_hat).collect();
    let in_band = alphas.iter().all(|a| (0.2..=5.0).contains(a));
    let ratios: Vec<f64> = alphas.windows(2).map(|w| w[1] / w[0]).collect();
    let steady = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    Outcome {
        pass: in_band && steady,
        detail: format!(
            "alpha_hat {} ; consecutive ratios {}",
            fmt_list(&alphas),
            fmt_list(&ratios)
        ),
        artifact: serde_json::to_string(&rows).unwrap(),
    }
}

fn sharpness_trend() -> Outcome {
    let ns = [8, 12, 16, 20];
    let windows: Vec<_> = ns
        .iter()
        .map(|&n| {
            let sample = CriticalSample::draw(&params(n, 0.0), 2000, SEED).unwrap();
            sharpness_from(&sample, 0.1, DEFAULT_REL_TOL).unwrap()
        })
        .collect();
    let ratios: Vec<f64> = windows.iter().map(|w| w.ratio).collect();
    let at_least_one = ratios.iter().all(|&r| r >= 1.0 - DEFAULT_REL_TOL);
    let trend = ratios[3] <= ratios[0];
    Outcome {
        pass: at_least_one && trend,
        detail: format!("eps = 0.1, window ratios at n = 8, 12, 16, 20: {}", fmt_list(&ratios)),
        artifact: serde_json::to_string(&windows).unwrap(),
    }
}

fn angle_constant() -> Outcome {
    let mut per_n = Vec::new();
    let mut log = Vec::new();
    for n in 10..=20 {
        let dists: Vec<usize> = (1..=n).collect();
        let rows = angle_scan(&params(n, 0.0), &dists, 200, SEED).unwrap();
        per_n.push(rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max));
        log.push(rows);
    }
    let finite = per_n.iter().all(|c| c.is_finite() && *c > 0.0);
    let overall = per_n.iter().copied().fold(0.0, f64::max);
    Outcome {
        pass: finite && overall <= 2.0 * per_n[0],
        detail: format!("max ratio per n = 10..=20: {}", fmt_list(&per_n)),
        artifact: serde_json::to_string(&log).unwrap(),
    }
}

fn admissibility_tail() -> Outcome {
    let counts = inadmissibility_counts(4096, 3, &[1.0, 2.0, 4.0], 10_000, SEED).unwrap();
    Outcome {
        pass: counts[2] == 0 && counts.windows(2).all(|w| w[0] >= w[1]),
        detail: format!("n = 4096, k = 3, 10^4 draws: inadmissible at C2 = 1, 2, 4: {counts:?}"),
        artifact: format!("{counts:?}"),
    }
}

fn removal_monotonicity() -> Outcome {
    let prm = params(14, 0.0);
    let p_half = CriticalSample::draw(&prm, 500, SEED).unwrap().threshold(0.5, DEFAULT_REL_TOL).unwrap().p_hat;
    let ap = AdmissibilityParams::default();
    let reference = perclab::symmetry::random_admissible(14, 2, &ap, &mut stream(SEED, 102, 0)).unwrap();
    let map = build_gentle_map(&reference, &ap).unwrap();
    let rp = RemovalExperimentParams::new(14, 2, 2000).unwrap();
    // Several solution sets around the median threshold, nonempty ones only.
    let mut reports = Vec::new();
    for i in 0..40 {
        if reports.len() == 5 {
            break;
        }
        let d = sample_disorder(&prm, p_half, &mut stream(SEED, 103, i)).unwrap();
        let a = solution_set(&d).unwrap();
        if a.is_empty() {
            continue;
        }
        reports.push((a.len(), removal_experiment(&a, &prm, &map, &rp, SEED + i).unwrap()));
    }
    let monotone = reports.iter().all(|(_, r)| r.rate_by_budget.windows(2).all(|w| w[0] <= w[1]));
    let dominates = reports.iter().all(|(_, r)| r.removal_rate() >= r.q_hat() - 3.0 * r.q.stderr);
    let summary: Vec<String> = reports
        .iter()
        .map(|(size, r)| {
            let c = r.implied_c.map_or("inf".to_string(), |c| format!("{c:.3}"));
            format!("|A|={size} q={:.3} rate={:.3} c<={c}", r.q_hat(), r.removal_rate())
        })
        .collect();
    Outcome {
        pass: !reports.is_empty() && monotone && dominates,
        detail: format!("n = 14, k = 2, budget {}: {}", rp.budget(), summary.join("; ")),
        artifact: serde_json::to_string(&reports.iter().map(|(s, r)| (s, r)).collect::<Vec<_>>()).unwrap(),
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("exact lemma suite", lemma_battery),
    ("solver backend equivalence", backend_equivalence),
    ("exact oracle agreement", exact_oracles),
    ("Margulis-Russo identity", margulis_russo),
    ("monotone coupling", monotone_coupling),
    ("threshold band", threshold_band_check),
    ("sharpness trend", sharpness_trend),
    ("half-cube angle constant", angle_constant),
    ("admissibility tail", admissibility_tail),
    ("removal monotonicity", removal_monotonicity),
];

fn main() {
    let mut outcomes = Vec::new();
    let mut all = true;
    for (i, (name, f)) in CRITERIA.iter().enumerate() {
        let clock = Instant::now();
        let o = f();
        println!(
            "criterion {:>2} {:<28} {} ({:.1}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64(),
            o.detail
        );
        all &= o.pass;
        outcomes.push(o);
    }

    let threads = if rayon::current_num_threads() == 3 { 2 } else { 3 };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let clock = Instant::now();
    let differing: Vec<usize> = pool.install(|| {
        CRITERIA
            .iter()
            .zip(&outcomes)
            .enumerate()
            .filter(|(_, ((_, f), o))| f().artifact != o.artifact)
            .map(|(i, _)| i + 1)
            .collect()
    });
    let deterministic = differing.is_empty();
    println!(
        "criterion 11 {:<28} {} ({:.1}s) criteria 1-10 re-run on {threads} threads (default {}); differing: {differing:?}",
        "determinism",
        if deterministic { "PASS" } else { "FAIL" },
        clock.elapsed().as_secs_f64(),
        rayon::current_num_threads(),
    );
    all &= deterministic;
    if !all {
        eprintln!("at least one acceptance criterion failed");
        std::process::exit(1);
    }
}
