//! Empirical constant of the half-cube difference bound.
use perclab::estimators::angle_scan;
use perclab::ModelParams;

fn main() -> perclab::Result<()> {
    for n in [8, 12, 16] {
        let params = ModelParams::new(n, 0.0)?;
        let dists: Vec<usize> = (0..=n).step_by(2).collect();
        let rows = angle_scan(&params, &dists, 50, 1)?;
        let line: Vec<String> = rows.iter().map(|r| format!("{}:{:.3}", r.m, r.max_ratio)).collect();
        println!("n = {n:>2}  {}", line.join("  "));
    }
    Ok(())
}
