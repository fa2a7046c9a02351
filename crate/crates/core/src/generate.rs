//! Seeded random scenarios for property checks and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{BudgetSchedule, DemandMode, MarketConfig, SkillId, TaskTypeSpec, WorkerSpec};
use crate::reputation::{Presence, RatingHistory, Worker};
use crate::scheduler::TaskRequestBatch;

fn requirements<R: Rng>(rng: &mut R, skills: usize, max: u32) -> Vec<u32> {
    let mut req: Vec<u32> = (0..skills).map(|_| rng.random_range(0..=max)).collect();
    if req.iter().all(|&n| n == 0) {
        req[rng.random_range(0..skills)] = 1;
    }
    req
}

/// A full market with up to 4 skills, up to 3 task types and 200 steps.
/// Demand is Poisson and outcomes are Bernoulli, so every seed differs.
pub fn random_scenario(seed: u64) -> MarketConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skills = rng.random_range(1..=4);
    let types = rng.random_range(1..=3);
    let task_types = (0..types)
        .map(|id| TaskTypeSpec {
            id,
            requirements: requirements(&mut rng, skills, 2),
            price: rng.random_range(0.5..3.0),
            demand_cap: rng.random_range(1..=5),
            positive_ratings: rng.random_range(1..=20),
            service_time: rng.random_range(1..=3),
        })
        .collect();
    let mut workers = Vec::new();
    for skill in 0..skills {
        for _ in 0..rng.random_range(1..=6) {
            workers.push(WorkerSpec {
                skill,
                successes: rng.random_range(0..15),
                failures: rng.random_range(0..15),
                logged_in: rng.random_bool(0.4),
                count: rng.random_range(1..=3),
            });
        }
    }
    let budget = if rng.random_bool(0.3) {
        BudgetSchedule::PerStep((0..10).map(|_| rng.random_range(0.0..12.0)).collect())
    } else {
        BudgetSchedule::Constant(rng.random_range(0.0..12.0))
    };
    MarketConfig {
        skills,
        task_types,
        alpha1: rng.random_range(0.0..1.5),
        alpha2: -rng.random_range(0.05..1.0),
        alpha3: rng.random_range(0.05..0.5),
        epsilon: rng.random_range(0.3..0.7),
        rho: rng.random_range(0.1..10.0),
        mobilization_cost: (0..skills).map(|_| rng.random_range(0.5..3.0)).collect(),
        mobilization_cap: (0..skills).map(|_| rng.random_range(0..=4)).collect(),
        budget_per_step: budget,
        arrival_rates: (0..skills).map(|_| rng.random_range(0.0..1.0)).collect(),
        arrival_script: None,
        workers,
        horizon: 200,
        seed: rng.random(),
        demand_mode: DemandMode::Poisson,
        rollback_infeasible: rng.random_bool(0.8),
        ..MarketConfig::default()
    }
}

/// One planning step in isolation.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub config: MarketConfig,
    pub workers: Vec<Worker>,
    pub batch: TaskRequestBatch,
}

/// Up to 3 skills with caps up to 3, up to 2 task types with at most 3
/// requests each: small enough to enumerate every mobilization vector.
pub fn random_tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skills = rng.random_range(1..=3);
    let types = rng.random_range(1..=2);
    let task_types: Vec<TaskTypeSpec> = (0..types)
        .map(|id| TaskTypeSpec {
            id,
            requirements: requirements(&mut rng, skills, 2),
            price: rng.random_range(0.5..3.0),
            demand_cap: 3,
            positive_ratings: rng.random_range(1..=20),
            service_time: 1,
        })
        .collect();
    let workers = (0..rng.random_range(0..=14))
        .map(|id| Worker {
            id,
            skill: SkillId(rng.random_range(0..skills)),
            history: RatingHistory::new(rng.random_range(0..12), rng.random_range(0..12)),
            presence: if rng.random_bool(0.4) {
                Presence::LoggedIn
            } else {
                Presence::Offline
            },
        })
        .collect();
    let config = MarketConfig {
        skills,
        task_types,
        epsilon: rng.random_range(0.3..0.7),
        rho: rng.random_range(0.1..10.0),
        mobilization_cost: (0..skills).map(|_| rng.random_range(0.2..4.0)).collect(),
        mobilization_cap: (0..skills).map(|_| rng.random_range(0..=3)).collect(),
        arrival_rates: vec![0.0; skills],
        workers: Vec::new(),
        rollback_infeasible: true,
        ..MarketConfig::default()
    };
    let batch = TaskRequestBatch {
        demand: (0..types).map(|_| rng.random_range(0..=3)).collect(),
        prices: config.task_types.iter().map(|t| t.price).collect(),
        budget: rng.random_range(0.0..12.0),
    };
    TinyInstance { config, workers, batch }
}
