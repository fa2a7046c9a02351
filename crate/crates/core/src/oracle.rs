//! Ground-truth references and comparison policies.
//!
//! [`brute_force_mobilization`] enumerates every mobilization vector for a
//! given served set. [`horizon_optimal_profit`] searches every sequence of
//! (mobilization, served set) choices on a scripted instance and returns the
//! best achievable time-averaged profit, an upper bound for any causal policy
//! on the same script.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{validate_config, MarketConfig};
use crate::reputation::{pool_reliabilities, Worker};
use crate::scheduler::{
    budget_spend, mobilization_cost, mobilization_score, plan_from_choice, plan_mobilization, serves,
    MobilizationPlan, SkillQueueState, TaskRequestBatch,
};
use crate::simulator::{SimError, Simulation, StepContext};

/// Limit on mobilization vectors enumerated per step.
pub const MAX_STEP_SPACE: u128 = 1_000_000;
/// Limit on the horizon search's sequence space.
pub const MAX_SEQUENCE_SPACE: u128 = 10_000_000;
pub const MAX_ORACLE_HORIZON: u64 = 8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search space of {size} exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("no mobilization vector can serve the requested task types")]
    Infeasible,
    #[error("horizon search needs a deterministic scripted instance: {0}")]
    NotDeterministic(&'static str),
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error("unknown policy '{0}' (expected crowdasm, never, max, random or oracle-step)")]
    UnknownPolicy(String),
    #[error(transparent)]
    Simulation(Box<SimError>),
}

impl From<SimError> for OracleError {
    fn from(e: SimError) -> Self {
        OracleError::Simulation(Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_a: Vec<u32>,
    pub best_objective: f64,
    /// Vectors satisfying the cap, threshold and budget constraints.
    pub evaluated_count: u64,
    pub served_set: Vec<bool>,
}

/// Upper bounds per skill: the cap and the eligible offline pool.
fn mobilization_limits(state: &SkillQueueState, cfg: &MarketConfig) -> Vec<u32> {
    cfg.mobilization_cap
        .iter()
        .zip(&state.offline_eligible)
        .map(|(&cap, &pool)| cap.min(pool))
        .collect()
}

/// Calls `visit` for every vector in `0..=limits[0] x 0..=limits[1] x ...`,
/// in lexicographic order.
fn for_each_vector(limits: &[u32], mut visit: impl FnMut(&[u32])) {
    let mut a = vec![0u32; limits.len()];
    loop {
        visit(&a);
        let mut i = limits.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if a[i] < limits[i] {
                a[i] += 1;
                break;
            }
            a[i] = 0;
        }
    }
}

fn space_size(limits: &[u32]) -> u128 {
    limits.iter().map(|&l| u128::from(l) + 1).product()
}

/// Exhaustive minimum of `sum_m a_m (q_m - rho c_m / r_m)` over vectors that
/// respect the cap, threshold and budget constraints and staff exactly the
/// served set, mobilizing no more than each skill's shortfall.
pub fn brute_force_mobilization(
    state: &SkillQueueState,
    workers: &[Worker],
    batch: &TaskRequestBatch,
    cfg: &MarketConfig,
    served: &[bool],
) -> Result<OracleResult, OracleError> {
    let caps = &cfg.mobilization_cap;
    let size = space_size(caps);
    if size > MAX_STEP_SPACE {
        return Err(OracleError::SearchSpaceTooLarge {
            size,
            limit: MAX_STEP_SPACE,
        });
    }
    let pool = pool_reliabilities(workers, cfg.skills, cfg.epsilon);
    let mut scores = Vec::with_capacity(cfg.skills);
    for m in 0..cfg.skills {
        scores.push(pool[m].map(|r| mobilization_score(state.q[m], cfg.rho, cfg.mobilization_cost[m], r)));
    }
    let shortfall: Vec<u64> = (0..cfg.skills)
        .map(|m| {
            let need: u64 = cfg
                .task_types
                .iter()
                .filter(|t| served[t.id])
                .map(|t| u64::from(t.requires(m)) * u64::from(batch.demand[t.id]))
                .sum();
            need.saturating_sub(u64::from(state.logged_in[m]))
        })
        .collect();

    let mut evaluated = 0u64;
    let mut best: Option<(Vec<u32>, f64)> = None;
    for_each_vector(caps, |a| {
        let eligible = a.iter().zip(&state.offline_eligible).all(|(&a, &n)| a <= n);
        if !eligible || budget_spend(a, &cfg.mobilization_cost) > batch.budget {
            return;
        }
        evaluated += 1;
        let staffs_exactly = a
            .iter()
            .zip(&shortfall)
            .all(|(&a, &s)| u64::from(a) == s);
        if !staffs_exactly {
            return;
        }
        let mut value = 0.0;
        for (m, &a_m) in a.iter().enumerate() {
            if a_m > 0 {
                match scores[m] {
                    Some(Ok(s)) => value += f64::from(a_m) * s,
                    _ => return,
                }
            }
        }
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((a.to_vec(), value));
        }
    });
    let (best_a, best_objective) = best.ok_or(OracleError::Infeasible)?;
    Ok(OracleResult {
        best_a,
        best_objective,
        evaluated_count: evaluated,
        served_set: served.to_vec(),
    })
}

fn subsets(types: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..(1 << types)).map(move |bits| (0..types).map(|k| bits & (1 << k) != 0).collect())
}

/// Every feasible (mobilization, served set) pair for a step.
fn feasible_choices(ctx: &StepContext, cfg: &MarketConfig) -> Vec<(Vec<u32>, Vec<bool>)> {
    let limits = mobilization_limits(&ctx.state, cfg);
    let mut out = Vec::new();
    for_each_vector(&limits, |a| {
        if budget_spend(a, &cfg.mobilization_cost) > ctx.batch.budget {
            return;
        }
        for served in subsets(cfg.task_types.len()) {
            if serves(&ctx.state, cfg, &ctx.batch.demand, a, &served) {
                out.push((a.to_vec(), served));
            }
        }
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonOptimum {
    /// Best time-averaged profit.
    pub delta_opt: f64,
    /// Distinct states expanded by the search.
    pub states_expanded: u64,
}

/// Best time-averaged profit over every feasible choice sequence of a
/// scripted, deterministic instance.
pub fn horizon_optimal_profit(cfg: &MarketConfig) -> Result<HorizonOptimum, OracleError> {
    let cfg = validate_config(cfg.clone()).map_err(SimError::from)?;
    if cfg.arrival_script.is_none() {
        return Err(OracleError::NotDeterministic("arrival_script is missing"));
    }
    if !cfg.is_deterministic_instance() {
        return Err(OracleError::NotDeterministic(
            "needs deterministic demand and always_success outcomes",
        ));
    }
    if cfg.horizon == 0 {
        return Err(OracleError::EmptyHorizon);
    }
    if cfg.horizon > MAX_ORACLE_HORIZON {
        return Err(OracleError::SearchSpaceTooLarge {
            size: u128::from(cfg.horizon),
            limit: u128::from(MAX_ORACLE_HORIZON),
        });
    }
    let per_step = space_size(&cfg.mobilization_cap) << cfg.task_types.len();
    let size = per_step.checked_pow(cfg.horizon as u32).unwrap_or(u128::MAX);
    if size > MAX_SEQUENCE_SPACE {
        return Err(OracleError::SearchSpaceTooLarge {
            size,
            limit: MAX_SEQUENCE_SPACE,
        });
    }

    let mut memo = HashMap::new();
    let sim = Simulation::new(&cfg);
    let total = best_remaining(&sim, &cfg, &mut memo)?;
    Ok(HorizonOptimum {
        delta_opt: total / cfg.horizon as f64,
        states_expanded: memo.len() as u64,
    })
}

type ReplayKey = (u64, Vec<Worker>, Vec<crate::simulator::ActiveTeam>);

fn best_remaining(
    sim: &Simulation<'_>,
    cfg: &MarketConfig,
    memo: &mut HashMap<ReplayKey, f64>,
) -> Result<f64, OracleError> {
    if sim.is_finished() {
        return Ok(0.0);
    }
    let key = sim.replay_key();
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let mut prepared = sim.clone();
    let ctx = prepared.begin_step()?;
    let mut best = f64::NEG_INFINITY;
    for (a, served) in feasible_choices(&ctx, cfg) {
        let plan = plan_from_choice(&ctx.state, prepared.workers(), cfg, &a, &served);
        let mut child = prepared.clone();
        let ledger = child.finish_step(ctx.clone(), plan)?;
        let value = ledger.expected_profit + best_remaining(&child, cfg, memo)?;
        if value > best {
            best = value;
        }
    }
    memo.insert(key, best);
    Ok(best)
}

/// Mobilization rule run by the simulator each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    CrowdAsm,
    /// Never mobilizes.
    Never,
    /// Mobilizes up to the caps within budget, skill by skill, ignoring scores.
    Max,
    /// Uniformly random feasible mobilization vector.
    Random,
    /// Exhaustive per-step minimizer of the drift-plus-penalty bound.
    OracleStep,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::CrowdAsm,
        Policy::Never,
        Policy::Max,
        Policy::Random,
        Policy::OracleStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::CrowdAsm => "crowdasm",
            Policy::Never => "never",
            Policy::Max => "max",
            Policy::Random => "random",
            Policy::OracleStep => "oracle-step",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| OracleError::UnknownPolicy(s.to_string()))
    }
}

/// Looks up one of the comparison baselines by name.
pub fn baseline_policy(name: &str) -> Result<Policy, OracleError> {
    match name.parse()? {
        p @ (Policy::Never | Policy::Max | Policy::Random) => Ok(p),
        _ => Err(OracleError::UnknownPolicy(name.to_string())),
    }
}

/// Serves task types in id order while capacity lasts.
fn serve_in_id_order(state: &SkillQueueState, cfg: &MarketConfig, demand: &[u32], a: &[u32]) -> Vec<bool> {
    let mut available: Vec<u64> = state
        .logged_in
        .iter()
        .zip(a)
        .map(|(&n, &a)| u64::from(n) + u64::from(a))
        .collect();
    cfg.task_types
        .iter()
        .map(|task| {
            let need = |m: usize| u64::from(task.requires(m)) * u64::from(demand[task.id]);
            let fits = demand[task.id] > 0 && (0..cfg.skills).all(|m| need(m) <= available[m]);
            if fits {
                for (m, avail) in available.iter_mut().enumerate() {
                    *avail -= need(m);
                }
            }
            fits
        })
        .collect()
}

fn max_mobilization(state: &SkillQueueState, cfg: &MarketConfig, budget: f64) -> Vec<u32> {
    let limits = mobilization_limits(state, cfg);
    let mut a = vec![0u32; cfg.skills];
    for m in 0..cfg.skills {
        while a[m] < limits[m] {
            a[m] += 1;
            if budget_spend(&a, &cfg.mobilization_cost) > budget {
                a[m] -= 1;
                break;
            }
        }
    }
    a
}

fn random_mobilization<R: Rng + ?Sized>(
    state: &SkillQueueState,
    cfg: &MarketConfig,
    budget: f64,
    rng: &mut R,
) -> Result<Vec<u32>, OracleError> {
    let limits = mobilization_limits(state, cfg);
    let size = space_size(&limits);
    if size > MAX_STEP_SPACE {
        return Err(OracleError::SearchSpaceTooLarge {
            size,
            limit: MAX_STEP_SPACE,
        });
    }
    let mut feasible = Vec::new();
    for_each_vector(&limits, |a| {
        if budget_spend(a, &cfg.mobilization_cost) <= budget {
            feasible.push(a.to_vec());
        }
    });
    let pick = rng.random_range(0..feasible.len());
    Ok(feasible.swap_remove(pick))
}

/// Minimizes `sum_m q_m (a_m - consumed_m) - rho (revenue - c(a))` over
/// every feasible (mobilization, served set) pair, ties to the first pair in
/// lexicographic order.
fn oracle_step(ctx: &StepContext, workers: &[Worker], cfg: &MarketConfig) -> Result<MobilizationPlan, OracleError> {
    let limits = mobilization_limits(&ctx.state, cfg);
    let size = space_size(&limits) << cfg.task_types.len();
    if size > MAX_STEP_SPACE {
        return Err(OracleError::SearchSpaceTooLarge {
            size,
            limit: MAX_STEP_SPACE,
        });
    }
    let pool = pool_reliabilities(workers, cfg.skills, cfg.epsilon);
    let mut best: Option<(f64, Vec<u32>, Vec<bool>)> = None;
    for (a, served) in feasible_choices(ctx, cfg) {
        let cost = mobilization_cost(&a, &cfg.mobilization_cost, &pool).map_err(SimError::from)?;
        let mut drift = 0.0;
        for m in 0..cfg.skills {
            let consumed: u64 = cfg
                .task_types
                .iter()
                .filter(|t| served[t.id])
                .map(|t| u64::from(t.requires(m)) * u64::from(ctx.batch.demand[t.id]))
                .sum();
            drift += f64::from(ctx.state.q[m]) * (f64::from(a[m]) - consumed as f64);
        }
        let revenue: f64 = (0..served.len())
            .filter(|&k| served[k])
            .map(|k| ctx.expected_demand[k] * ctx.batch.prices[k])
            .sum();
        let value = drift - cfg.rho * (revenue - cost);
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, a, served));
        }
    }
    let (_, a, served) = best.expect("the idle choice is always feasible");
    Ok(plan_from_choice(&ctx.state, workers, cfg, &a, &served))
}

/// Plans one step under `policy`.
pub fn decide<R: Rng + ?Sized>(
    policy: Policy,
    ctx: &StepContext,
    workers: &[Worker],
    cfg: &MarketConfig,
    rng: &mut R,
) -> Result<MobilizationPlan, OracleError> {
    let choice = |a: Vec<u32>| {
        let served = serve_in_id_order(&ctx.state, cfg, &ctx.batch.demand, &a);
        plan_from_choice(&ctx.state, workers, cfg, &a, &served)
    };
    Ok(match policy {
        Policy::CrowdAsm => plan_mobilization(&ctx.state, workers, &ctx.batch, cfg),
        Policy::Never => choice(vec![0; cfg.skills]),
        Policy::Max => choice(max_mobilization(&ctx.state, cfg, ctx.batch.budget)),
        Policy::Random => choice(random_mobilization(&ctx.state, cfg, ctx.batch.budget, rng)?),
        Policy::OracleStep => oracle_step(ctx, workers, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reputation::Presence;
    use crate::scheduler::tests::{arb_instance, one_skill_config, worker};
    use crate::simulator::run;
    use proptest::prelude::*;

    #[test]
    fn vector_enumeration_is_lexicographic() {
        let mut seen = Vec::new();
        for_each_vector(&[1, 2], |a| seen.push(a.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]]
        );
    }

    #[test]
    fn positive_scores_and_no_shortfall_give_zero() {
        let cfg = MarketConfig {
            rho: 0.01,
            ..one_skill_config(1.0, 3, 1)
        };
        let workers = vec![
            worker(0, 0, 0.9, Presence::LoggedIn),
            worker(1, 0, 0.9, Presence::LoggedIn),
            worker(2, 0, 0.8, Presence::Offline),
        ];
        let state = SkillQueueState::observe(&workers, 1, cfg.epsilon);
        let batch = TaskRequestBatch {
            demand: vec![2],
            prices: vec![1.0],
            budget: 5.0,
        };
        let r = brute_force_mobilization(&state, &workers, &batch, &cfg, &[true]).unwrap();
        assert_eq!(r.best_a, vec![0]);
        assert_eq!(r.best_objective, 0.0);
        // a in {0, 1}: only one eligible offline worker
        assert_eq!(r.evaluated_count, 2);
    }

    #[test]
    fn three_worker_instance_matches_controller() {
        let cfg = one_skill_config(2.0, 3, 1);
        let workers = vec![
            worker(0, 0, 0.9, Presence::Offline),
            worker(1, 0, 0.8, Presence::Offline),
            worker(2, 0, 0.3, Presence::Offline),
        ];
        let state = SkillQueueState::observe(&workers, 1, 0.5);
        let batch = TaskRequestBatch {
            demand: vec![2],
            prices: vec![1.0],
            budget: 5.0,
        };
        let plan = plan_mobilization(&state, &workers, &batch, &cfg);
        let r = brute_force_mobilization(&state, &workers, &batch, &cfg, &plan.served).unwrap();
        assert_eq!(r.best_a, vec![2]);
        assert_eq!(r.best_objective, plan.objective());
        // a = 0, 1, 2 are within budget (cost 2 each), a = 3 exceeds the eligible pool
        assert_eq!(r.evaluated_count, 3);
    }

    #[test]
    fn zero_budget_forces_zero() {
        let cfg = one_skill_config(1.0, 3, 1);
        let workers = vec![worker(0, 0, 0.9, Presence::Offline)];
        let state = SkillQueueState::observe(&workers, 1, 0.5);
        let batch = TaskRequestBatch {
            demand: vec![1],
            prices: vec![1.0],
            budget: 0.0,
        };
        let r = brute_force_mobilization(&state, &workers, &batch, &cfg, &[false]).unwrap();
        assert_eq!(r.best_a, vec![0]);
        assert_eq!(r.evaluated_count, 1);
        assert!(matches!(
            brute_force_mobilization(&state, &workers, &batch, &cfg, &[true]),
            Err(OracleError::Infeasible)
        ));
    }

    #[test]
    fn oversized_space_is_refused() {
        let mut cfg = one_skill_config(1.0, 3, 1);
        cfg.mobilization_cap = vec![2_000_000];
        let state = SkillQueueState::observe(&[], 1, 0.5);
        let batch = TaskRequestBatch {
            demand: vec![0],
            prices: vec![1.0],
            budget: 0.0,
        };
        assert!(matches!(
            brute_force_mobilization(&state, &[], &batch, &cfg, &[true]),
            Err(OracleError::SearchSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!(matches!("greedy".parse::<Policy>(), Err(OracleError::UnknownPolicy(_))));
        assert!(baseline_policy("max").is_ok());
        assert!(baseline_policy("crowdasm").is_err());
        assert_eq!(serde_json::to_string(&Policy::OracleStep).unwrap(), "\"oracle-step\"");
    }

    #[test]
    fn never_costs_nothing() {
        let trace = run(&MarketConfig::default(), Policy::Never).unwrap();
        assert!(trace.steps.iter().all(|s| s.plan.total_cost == 0.0));
    }

    #[test]
    fn max_with_huge_budget_hits_caps() {
        let cfg = MarketConfig {
            budget_per_step: crate::domain::BudgetSchedule::Constant(1e9),
            ..MarketConfig::default()
        };
        let trace = run(&cfg, Policy::Max).unwrap();
        let first = &trace.steps[0];
        let state = SkillQueueState::observe(&crate::simulator::initial_roster(&cfg), cfg.skills, cfg.epsilon);
        for m in 0..cfg.skills {
            assert_eq!(first.plan.a[m], cfg.mobilization_cap[m].min(state.offline_eligible[m]));
        }
    }

    #[test]
    fn random_is_reproducible() {
        let a = run(&MarketConfig::default(), Policy::Random).unwrap();
        let b = run(&MarketConfig::default(), Policy::Random).unwrap();
        let seq = |t: &crate::simulator::SimulationTrace| t.steps.iter().map(|s| s.plan.a.clone()).collect::<Vec<_>>();
        assert_eq!(seq(&a), seq(&b));
        assert!(seq(&a).iter().any(|a| a.iter().any(|&x| x > 0)));
    }

    #[test]
    fn horizon_search_requires_a_script() {
        assert!(matches!(
            horizon_optimal_profit(&MarketConfig::default()),
            Err(OracleError::NotDeterministic(_))
        ));
    }

    fn scripted(horizon: u64) -> MarketConfig {
        let mut cfg = one_skill_config(1.0, 2, 1);
        cfg.task_types[0].demand_cap = 2;
        cfg.task_types[0].positive_ratings = 4;
        cfg.budget_per_step = crate::domain::BudgetSchedule::Constant(2.0);
        cfg.workers = vec![
            crate::domain::WorkerSpec { skill: 0, successes: 3, failures: 1, logged_in: true, count: 1 },
            crate::domain::WorkerSpec { skill: 0, successes: 4, failures: 0, logged_in: false, count: 2 },
        ];
        cfg.arrival_script = Some(vec![vec![0]; horizon as usize]);
        cfg.outcome_model = crate::domain::OutcomeModel::AlwaysSuccess;
        cfg.horizon = horizon;
        cfg
    }

    #[test]
    fn one_step_horizon_is_the_best_single_step() {
        let cfg = scripted(1);
        let opt = horizon_optimal_profit(&cfg).unwrap().delta_opt;
        let mut sim = Simulation::new(&cfg);
        let ctx = sim.begin_step().unwrap();
        let mut best = f64::NEG_INFINITY;
        for a in 0..=2u32 {
            for served in [false, true] {
                if !serves(&ctx.state, &cfg, &ctx.batch.demand, &[a], &[served]) {
                    continue;
                }
                let plan = plan_from_choice(&ctx.state, sim.workers(), &cfg, &[a], &[served]);
                let profit = crate::simulator::step_profit(&[served], &ctx.expected_demand, &ctx.batch.prices, plan.scored_cost);
                best = best.max(profit);
            }
        }
        assert_eq!(opt, best);
    }

    #[test]
    fn horizon_optimum_dominates_every_policy() {
        let cfg = scripted(4);
        let opt = horizon_optimal_profit(&cfg).unwrap().delta_opt;
        for p in Policy::ALL {
            let trace = run(&cfg, p).unwrap();
            let avg = crate::metrics::time_averaged_profit(&trace).unwrap();
            assert!(opt >= avg - 1e-9, "{p}: {avg} > {opt}");
        }
    }

    #[test]
    fn horizon_optimum_is_monotone_in_budget_and_caps() {
        let base = scripted(3);
        let opt = horizon_optimal_profit(&base).unwrap().delta_opt;
        let richer = MarketConfig {
            budget_per_step: crate::domain::BudgetSchedule::Constant(5.0),
            ..base.clone()
        };
        assert!(horizon_optimal_profit(&richer).unwrap().delta_opt >= opt - 1e-12);
        let wider = MarketConfig {
            mobilization_cap: vec![3],
            ..base.clone()
        };
        assert!(horizon_optimal_profit(&wider).unwrap().delta_opt >= opt - 1e-12);
        let tight = MarketConfig {
            budget_per_step: crate::domain::BudgetSchedule::Constant(0.0),
            ..base
        };
        assert!(horizon_optimal_profit(&tight).unwrap().delta_opt <= opt + 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn controller_matches_brute_force((cfg, workers, batch) in arb_instance()) {
            let cfg = MarketConfig { rollback_infeasible: true, ..cfg };
            let state = SkillQueueState::observe(&workers, cfg.skills, cfg.epsilon);
            let plan = plan_mobilization(&state, &workers, &batch, &cfg);
            let r = brute_force_mobilization(&state, &workers, &batch, &cfg, &plan.served).unwrap();
            prop_assert!((r.best_objective - plan.objective()).abs() <= 1e-12);
            prop_assert_eq!(&r.best_a, &plan.a);
            prop_assert!(budget_spend(&r.best_a, &cfg.mobilization_cost) <= batch.budget);
            for m in 0..cfg.skills {
                prop_assert!(r.best_a[m] <= cfg.mobilization_cap[m]);
            }
        }

        #[test]
        fn oracle_step_plans_are_feasible((cfg, workers, batch) in arb_instance()) {
            let state = SkillQueueState::observe(&workers, cfg.skills, cfg.epsilon);
            let ctx = StepContext {
                t: 0,
                q_before: state.q.clone(),
                arrivals: vec![0; cfg.skills],
                expected_demand: batch.demand.iter().map(|&d| f64::from(d)).collect(),
                state,
                batch,
            };
            let plan = oracle_step(&ctx, &workers, &cfg).unwrap();
            prop_assert!(plan.total_cost <= ctx.batch.budget);
            prop_assert!(serves(&ctx.state, &cfg, &ctx.batch.demand, &plan.a, &plan.served));
        }
    }
}
