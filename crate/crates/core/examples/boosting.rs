//! Greedy search for a boosting set near the median threshold.
use perclab::estimators::{boosting_search, find_threshold};
use perclab::{sample_disorder, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perclab::Result<()> {
    let params = ModelParams::new(12, 0.0)?;
    let p = find_threshold(&params, 0.5, 500, 1)?.p_hat;
    println!("p_hat(0.5) = {p:.5}");
    for seed in 0..5 {
        let d = sample_disorder(&params, p, &mut ChaCha8Rng::seed_from_u64(seed))?.with_probability(p);
        match boosting_search(&d, 0.2, 8, 400, seed)? {
            Some(c) => println!(
                "seed {seed}: {} active, set of {} with estimate {:.3} (lower bound {:.3})",
                d.active().len(),
                c.set.len(),
                c.estimate,
                c.lower_bound
            ),
            None => println!("seed {seed}: {} active, no certificate within 8 centers", d.active().len()),
        }
    }
    Ok(())
}
