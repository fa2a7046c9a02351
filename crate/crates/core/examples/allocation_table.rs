//! Worker-by-worker allocation table for one step, with the controller's
//! reasoning. The worker rated 62 up / 136 down sits below the reliability
//! threshold and gets nothing.

use crowdasm::domain::{MarketConfig, WorkerSpec};
use crowdasm::scheduler::{assemble_teams, plan_mobilization};
use crowdasm::simulator::Simulation;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = MarketConfig::default();
    cfg.workers.push(WorkerSpec {
        skill: 1,
        successes: 62,
        failures: 136,
        logged_in: false,
        count: 1,
    });
    cfg.workers.push(WorkerSpec {
        skill: 0,
        successes: 62,
        failures: 136,
        logged_in: true,
        count: 1,
    });
    let mut sim = Simulation::new(&cfg);
    let ctx = sim.begin_step()?;
    let workers = sim.workers().to_vec();
    let plan = plan_mobilization(&ctx.state, &workers, &ctx.batch, &cfg);
    let teams = assemble_teams(&plan, &workers, &ctx.batch, &cfg)?;

    println!("worker  skill  reliability  status     mobilized  teamed");
    for w in &workers {
        let mobilized = plan.mobilized[w.skill.0].contains(&w.id);
        let teamed = teams.member_ids().any(|id| id == w.id);
        let status = if w.is_logged_in() { "logged-in" } else { "offline" };
        println!(
            "{:>6}  {:>5}  {:>11.3}  {:<9}  {:>9}  {:>6}",
            w.id,
            w.skill.0,
            w.reliability(),
            status,
            u8::from(mobilized),
            u8::from(teamed)
        );
    }
    println!();
    for line in &plan.explanations {
        println!("{line}");
    }
    Ok(())
}
