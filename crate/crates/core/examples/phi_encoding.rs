//! Agreement-pattern encoding of spin sequences and automorphism witnesses.
use perclab::{decode, encode, match_automorphism, Permutation, SignSwitch, SpinSequence, SpinVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perclab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y = SpinSequence::random(12, 3, &mut rng)?;
    let pp = encode(&y);
    println!("first = {}", pp.first);
    for (pattern, class) in pp.classes.iter().enumerate() {
        println!("  pattern {pattern:02b}: {class:?}");
    }
    assert_eq!(decode(&pp, 3)?, y);
    println!("partition JSON: {}", serde_json::to_string(&pp)?);

    let sigma = Permutation::random(12, &mut rng);
    let g = SignSwitch::new(SpinVector::random(12, &mut rng));
    let target = y.permuted(&sigma)?.sign_switched(&g)?;
    let w = match_automorphism(&y, &target)?;
    println!("witness σ = {:?}, g = {}, maps: {}", w.sigma.images(), w.g.g, w.maps(&y, &target));
    Ok(())
}
