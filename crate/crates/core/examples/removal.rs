//! q(A) under a gentle mapping and the removal rate by uniform half-cubes.
use perclab::estimators::{find_threshold, removal_experiment, RemovalExperimentParams};
use perclab::symmetry::random_admissible;
use perclab::{build_gentle_map, sample_disorder, solution_set, AdmissibilityParams, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perclab::Result<()> {
    let (n, k) = (14, 2);
    let params = ModelParams::new(n, 0.0)?;
    let p = 0.8 * find_threshold(&params, 0.5, 500, 1)?.p_hat;
    let ap = AdmissibilityParams::default();
    let map = build_gentle_map(&random_admissible(n, k, &ap, &mut ChaCha8Rng::seed_from_u64(1))?, &ap)?;
    let rp = RemovalExperimentParams::new(n, k, 2000)?;
    println!("n_star = {}, q threshold = {:.3}", rp.n_star, rp.q_threshold);
    for seed in 0..4 {
        let a = solution_set(&sample_disorder(&params, p, &mut ChaCha8Rng::seed_from_u64(seed))?)?;
        if a.is_empty() {
            continue;
        }
        let r = removal_experiment(&a, &params, &map, &rp, seed)?;
        println!(
            "|A| = {:>4}: q = {:.3} ± {:.3}, removal = {:.3}, implied c = {:?}",
            a.len(),
            r.q_hat(),
            r.q.stderr,
            r.removal_rate(),
            r.implied_c
        );
    }
    Ok(())
}
