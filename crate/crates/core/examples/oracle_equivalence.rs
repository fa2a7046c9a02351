//! Checks the greedy controller against exhaustive enumeration on random
//! single-step instances.

use crowdasm::cli::check_oracle_equivalence;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let outcome = check_oracle_equivalence(200, 1);
    println!("{}: {} ({})", outcome.name, if outcome.passed { "ok" } else { "MISMATCH" }, outcome.detail);
    Ok(())
}
