//! Emptiness curve, threshold and sharpness window at one dimension.
use perclab::estimators::{estimate_curve, sharpness_from, CriticalSample, DEFAULT_REL_TOL};
use perclab::ModelParams;

fn main() -> perclab::Result<()> {
    let params = ModelParams::new(12, 0.0)?;
    let ps: Vec<f64> = (1..=8).map(|i| i as f64 * 0.0008).collect();
    println!("p        theta_hat  [ci_lo, ci_hi]");
    for pt in estimate_curve(&params, &ps, 1000, 7)? {
        println!("{:.4}   {:.3}      [{:.3}, {:.3}]", pt.p, pt.theta_hat, pt.ci_lo, pt.ci_hi);
    }
    let sample = CriticalSample::draw(&params, 1000, 7)?;
    for theta in [0.1, 0.5, 0.9] {
        let t = sample.threshold(theta, DEFAULT_REL_TOL)?;
        println!("p_N({theta}) in [{:.5}, {:.5}], p_hat = {:.5}", t.p_lo, t.p_hi, t.p_hat);
    }
    let w = sharpness_from(&sample, 0.1, DEFAULT_REL_TOL)?;
    println!("window ratio p(0.9)/p(0.1) = {:.3}", w.ratio);
    Ok(())
}
