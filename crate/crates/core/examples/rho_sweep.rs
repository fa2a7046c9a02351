//! Backlog and profit on the stress market as rho varies, over 30 seeds.

use crowdasm::metrics::{average_backlog, mean_with_ci, time_averaged_profit};
use crowdasm::{fixtures, run, MarketConfig, Policy};
use rayon::prelude::*;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = fixtures::load("stress")?;
    println!("  rho   backlog (95% CI)     profit (95% CI)");
    for rho in [0.1, 0.5, 1.0, 5.0, 10.0] {
        let runs: Vec<(f64, f64)> = (0..30u64)
            .into_par_iter()
            .map(|seed| {
                let trace = run(&MarketConfig { rho, seed, ..base.clone() }, Policy::CrowdAsm).expect("valid");
                (average_backlog(&trace).unwrap(), time_averaged_profit(&trace).unwrap())
            })
            .collect();
        let backlog: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let profit: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let (b, bh) = mean_with_ci(&backlog).unwrap();
        let (p, ph) = mean_with_ci(&profit).unwrap();
        println!("{rho:>5}   {b:>7.2} +- {bh:<6.2}     {p:>7.3} +- {ph:.3}");
    }
    Ok(())
}
