//! Half-cubes, their sizes and overlaps, and the two automorphism actions.
use perclab::{apply_permutation, apply_sign_switch, halfcube_diff_size, hypercube::halfcube, ModelParams};
use perclab::{Permutation, SignSwitch, SpinVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perclab::Result<()> {
    let x: SpinVector = "4:0xB".parse()?;
    println!("x = {x}, spins {:?}", x.spins().collect::<Vec<_>>());

    for kappa in [-1.0, 0.0, 0.5, 1.0, 2.5] {
        let params = ModelParams::new(4, kappa)?;
        println!(
            "kappa {kappa:>4}: min dot {:>3}, radius {:?}, |H(x)| = {}",
            params.min_dot(),
            params.radius(),
            halfcube(&x, &params)?.len()
        );
    }

    let params = ModelParams::new(10, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = SpinVector::random(10, &mut rng);
    for m in [1, 2, 5, 10] {
        let mut y = x.clone();
        (0..m).for_each(|i| y.flip(i));
        println!("n = 10, dist {m:>2}: |H(x) \\ H(y)| = {}", halfcube_diff_size(&x, &y, &params)?);
    }

    let g = SignSwitch::new(SpinVector::random(10, &mut rng));
    let sigma = Permutation::random(10, &mut rng);
    let gx = apply_sign_switch(&g, &x)?;
    let sx = apply_permutation(&sigma, &x)?;
    println!("g = {}, g∘x = {gx}, σ∘x = {sx}", g.g);
    Ok(())
}
