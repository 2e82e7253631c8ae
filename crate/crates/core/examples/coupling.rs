//! The monotone coupling of disorders at two selection probabilities.
use perclab::{sample_coupled, solution_set, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perclab::Result<()> {
    let params = ModelParams::new(14, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let c = sample_coupled(&params, 0.001, 0.003, &mut rng)?;
        let (lo, hi) = (solution_set(&c.low)?, solution_set(&c.high)?);
        println!(
            "active {:>3} -> {:>3}, solutions {:>5} -> {:>5}, nested {}",
            c.low.active().len(),
            c.high.active().len(),
            lo.len(),
            hi.len(),
            hi.is_subset(&lo)
        );
    }
    Ok(())
}
