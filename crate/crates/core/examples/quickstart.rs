//! Simulates the built-in two-skill market and prints a per-step digest.
//!
//! `cargo run --example quickstart`

use crowdasm::metrics::{average_backlog, time_averaged_profit};
use crowdasm::{run, MarketConfig, Policy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MarketConfig {
        horizon: 12,
        ..MarketConfig::default()
    };
    let trace = run(&cfg, Policy::CrowdAsm)?;

    println!("config {}", &trace.header.config_hash[..16]);
    println!(" t   q_before  demand  served  a       delta");
    for s in &trace.steps {
        println!(
            "{:>2}   {:<8}  {:<6}  {:<6}  {:<6}  {:>7.3}",
            s.t,
            format!("{:?}", s.q_before),
            format!("{:?}", s.demand),
            format!("{:?}", s.served_tasks),
            format!("{:?}", s.plan.a),
            s.expected_profit
        );
    }
    println!(
        "average profit {:.4}, average backlog {:.2}",
        time_averaged_profit(&trace)?,
        average_backlog(&trace)?
    );
    Ok(())
}
