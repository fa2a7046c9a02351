//! Beta reputation, the eligibility threshold and pool reliability.

use crowdasm::domain::SkillId;
use crowdasm::reputation::{pool_reliability, record_outcome, reliability, Presence, RatingHistory, Worker};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon = 0.5;
    for (s, f) in [(0, 0), (4, 1), (62, 136), (9, 0)] {
        let r = reliability(RatingHistory::new(s, f));
        println!("{s:>3} up {f:>3} down -> r = {r:.3}, eligible {}", r >= epsilon);
    }

    let mut workers: Vec<Worker> = [(4, 1), (62, 136), (2, 2)]
        .into_iter()
        .enumerate()
        .map(|(id, (s, f))| Worker {
            id: id as u32,
            skill: SkillId(0),
            history: RatingHistory::new(s, f),
            presence: Presence::Offline,
        })
        .collect();
    println!("pool reliability {:.4}", pool_reliability(&workers, SkillId(0), epsilon)?);

    // a run of failures pushes worker 2 under the threshold
    for _ in 0..3 {
        workers[2] = record_outcome(workers[2].clone(), false);
    }
    println!(
        "after three failures worker 2 has r = {:.3}; pool reliability {:.4}",
        workers[2].reliability(),
        pool_reliability(&workers, SkillId(0), epsilon)?
    );
    Ok(())
}
