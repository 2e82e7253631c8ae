//! Exact and sampled influence, and both sides of the Margulis–Russo identity.
use perclab::estimators::{influence_exact, influence_mc, margulis_russo_check};
use perclab::ModelParams;

fn main() -> perclab::Result<()> {
    println!("n    p    lhs           rhs           gap");
    for n in 1..=4 {
        let params = ModelParams::new(n, 0.0)?;
        for p in [0.2, 0.5, 0.8] {
            let r = margulis_russo_check(&params, p, 1e-3)?;
            println!("{n}  {p:.1}  {:.10}  {:.10}  {:.2e}", r.lhs, r.rhs, r.gap);
        }
    }
    let params = ModelParams::new(4, 0.0)?;
    let exact = influence_exact(&params, 0.3)?;
    let mc = influence_mc(&params, 0.3, 20_000, 1)?;
    println!("n = 4, p = 0.3: exact I = {:.5}, sampled I = {:.5} ± {:.5}", exact.i_hat, mc.i_hat, mc.stderr);
    let big = ModelParams::new(12, 0.0)?;
    let mc = influence_mc(&big, 0.003, 2000, 1)?;
    println!("n = 12, p = 0.003: sampled I = {:.3} ± {:.3}", mc.i_hat, mc.stderr);
    Ok(())
}
