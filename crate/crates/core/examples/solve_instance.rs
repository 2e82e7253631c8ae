//! Exact emptiness of one instance with all three backends.
use perclab::{solve_with, Backend, Instance};

fn main() -> perclab::Result<()> {
    let instance = Instance::from_json(r#"{"n": 6, "kappa": 0.5, "active": [0, 7, 21, 42, 63]}"#)?;
    let disorder = instance.into_disorder()?;
    for backend in Backend::ALL {
        let r = solve_with(&disorder, backend)?;
        let witness = r.witness.map(|w| w.to_string()).unwrap_or_else(|| "-".into());
        println!("{backend:?}: empty {}, count {}, witness {witness}", r.empty, r.count);
    }
    println!("{}", disorder.to_instance().to_json()?);
    Ok(())
}
