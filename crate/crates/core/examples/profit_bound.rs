//! Time-averaged profit against `delta_opt - xi / rho` on every bundled
//! scripted instance.

use crowdasm::cli::BOUND_RHOS;
use crowdasm::metrics::{bound_check, time_averaged_profit, DETERMINISTIC_TOLERANCE};
use crowdasm::oracle::horizon_optimal_profit;
use crowdasm::{fixtures, run, MarketConfig, Policy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("fixture          rho    delta_opt  avg_profit  rhs       margin   ok");
    for (name, cfg) in fixtures::scripted() {
        let opt = horizon_optimal_profit(&cfg)?;
        for rho in BOUND_RHOS {
            let cfg = MarketConfig { rho, ..cfg.clone() };
            let avg = time_averaged_profit(&run(&cfg, Policy::CrowdAsm)?)?;
            let r = bound_check(avg, opt.delta_opt, cfg.xi(), rho, DETERMINISTIC_TOLERANCE);
            println!(
                "{name:<15}  {rho:>4}  {:>9.4}  {avg:>10.4}  {:>8.4}  {:>7.4}  {}",
                r.delta_opt, r.bound_rhs, r.margin, r.satisfied
            );
        }
    }
    Ok(())
}
