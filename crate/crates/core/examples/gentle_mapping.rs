//! Rebalancing a uniform sequence onto the class sizes of a reference.
use perclab::symmetry::random_admissible;
use perclab::{build_gentle_map, compose_to_reference, gentle_apply, hamming, AdmissibilityParams, SpinSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perclab::Result<()> {
    let (n, k) = (256, 3);
    let params = AdmissibilityParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reference = random_admissible(n, k, &params, &mut rng)?;
    let map = build_gentle_map(&reference, &params)?;
    let z = SpinSequence::random(n, k, &mut rng)?;
    let fz = gentle_apply(&map, &z)?;
    println!("reference sizes {:?}", map.target_sizes());
    println!("z sizes         {:?}", z.class_sizes());
    println!("f(z) sizes      {:?}", fz.class_sizes());
    for (i, (a, b)) in z.vectors().iter().zip(fz.vectors()).enumerate() {
        println!("  dist(z_{}, f_{}(z)) = {}", i + 1, i + 1, hamming(a, b)?);
    }
    println!("budget 2^k C2 sqrt(n ln n) = {:.1}", params.gentle_radius(n, k));
    let w = compose_to_reference(&map, &z)?;
    println!("witness maps f(z) to the reference: {}", w.maps(&fz, &reference));
    Ok(())
}
