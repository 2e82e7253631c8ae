//! The randomized battery of exact properties.
use perclab::suite::{lemma_suite, SuiteConfig};

fn main() -> perclab::Result<()> {
    let report = lemma_suite(&SuiteConfig { cases: 300, ..Default::default() })?;
    print!("{}", report.table());
    std::process::exit(if report.all_passed() { 0 } else { 1 });
}
