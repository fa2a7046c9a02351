//! One planning step in detail: who is mobilized and which teams form.

use crowdasm::scheduler::assemble_teams;
use crowdasm::simulator::Simulation;
use crowdasm::{oracle, MarketConfig, Policy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MarketConfig::default();
    let mut sim = Simulation::new(&cfg);
    let ctx = sim.begin_step()?;
    let workers = sim.workers().to_vec();
    let plan = oracle::decide(Policy::CrowdAsm, &ctx, &workers, &cfg, &mut rand::rng())?;

    println!("demand per type {:?}, budget {}", ctx.batch.demand, ctx.batch.budget);
    println!("mobilize {:?} (ids {:?}), spend {:.2}", plan.a, plan.mobilized, plan.total_cost);
    let teams = assemble_teams(&plan, &workers, &ctx.batch, &cfg)?;
    for team in &teams.teams {
        let members: Vec<String> = team
            .members
            .iter()
            .map(|m| format!("w{}:s{}", m.worker, m.skill.0))
            .collect();
        println!("type {} #{}: {}", team.task_type, team.instance, members.join(" "));
    }
    Ok(())
}
