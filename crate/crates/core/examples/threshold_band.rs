//! Median threshold in units of n 2^{-n} across dimensions.
use perclab::estimators::threshold_band;

fn main() -> perclab::Result<()> {
    println!(" n   p_hat        alpha_hat");
    for row in threshold_band(0.0, &[8, 10, 12, 14, 16], 0.5, 1000, 1)? {
        println!("{:>2}   {:.3e}    {:.3}", row.n, row.p_hat, row.alpha_hat);
    }
    Ok(())
}
