//! Every policy on the stress market over the same 10 seeds.

use crowdasm::metrics::{average_backlog, mean_with_ci, time_averaged_profit};
use crowdasm::{fixtures, run, MarketConfig, Policy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = MarketConfig {
        horizon: 60,
        ..fixtures::load("stress")?
    };
    println!("policy        profit (95% CI)     backlog");
    for policy in [Policy::CrowdAsm, Policy::Never, Policy::Max, Policy::Random] {
        let mut profit = Vec::new();
        let mut backlog = Vec::new();
        for seed in 0..10 {
            let trace = run(&MarketConfig { seed, ..base.clone() }, policy)?;
            profit.push(time_averaged_profit(&trace)?);
            backlog.push(average_backlog(&trace)?);
        }
        let (p, h) = mean_with_ci(&profit).unwrap();
        let (b, _) = mean_with_ci(&backlog).unwrap();
        println!("{:<12}  {p:>7.3} +- {h:<6.3}   {b:>7.2}", policy.name());
    }
    Ok(())
}
