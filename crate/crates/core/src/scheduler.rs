//! The CrowdAsm controller.
//!
//! Each step the controller scores every skill pool with
//! `q_m - rho * c_m / r_m`, orders the pending task types by the
//! requirement-weighted sum of those scores, and walks them in that order.
//! A type whose logged-in capacity falls short mobilizes offline workers
//! (most reliable first) up to the shortfall, the per-skill cap and the
//! remaining budget. Types that still cannot be fully staffed are not
//! served, and by default their tentative mobilizations are undone.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{MarketConfig, SkillId};
use crate::reputation::{pool_reliabilities, Worker};

/// Per-skill view of the worker pools at decision time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillQueueState {
    /// Available (logged-in, idle) workers, whatever their reliability.
    pub q: Vec<u32>,
    /// Available workers meeting the reliability threshold.
    pub logged_in: Vec<u32>,
    /// Offline workers meeting the reliability threshold.
    pub offline_eligible: Vec<u32>,
}

impl SkillQueueState {
    pub fn observe(workers: &[Worker], skills: usize, epsilon: f64) -> Self {
        let mut state = SkillQueueState {
            q: vec![0; skills],
            logged_in: vec![0; skills],
            offline_eligible: vec![0; skills],
        };
        for w in workers {
            let m = w.skill.0;
            if w.is_logged_in() {
                state.q[m] += 1;
                if w.is_eligible(epsilon) {
                    state.logged_in[m] += 1;
                }
            } else if w.is_offline() && w.is_eligible(epsilon) {
                state.offline_eligible[m] += 1;
            }
        }
        state
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequestBatch {
    /// Realized demand per task type.
    pub demand: Vec<u32>,
    pub prices: Vec<f64>,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilizationPlan {
    /// Workers mobilized per skill.
    pub a: Vec<u32>,
    /// Whether each task type is fully served this step.
    pub served: Vec<bool>,
    /// Order in which task types were considered.
    pub order: Vec<usize>,
    /// Ids of mobilized workers per skill.
    pub mobilized: Vec<Vec<u32>>,
    /// Plain spend `sum_m c_m a_m`, bounded by the step budget.
    pub total_cost: f64,
    /// Reliability-weighted cost `sum_m c_m a_m / r_m`.
    pub scored_cost: f64,
    pub pool_reliability: Vec<Option<f64>>,
    /// Mobilization scores; `None` where the offline pool is unusable.
    pub scores: Vec<Option<f64>>,
    pub explanations: Vec<String>,
}

impl MobilizationPlan {
    /// `sum_m a_m * score_m`, the quantity the controller minimizes.
    pub fn objective(&self) -> f64 {
        objective(&self.a, &self.scores)
    }

    pub fn idle(skills: usize, types: usize) -> Self {
        MobilizationPlan {
            a: vec![0; skills],
            served: vec![false; types],
            order: (0..types).collect(),
            mobilized: vec![Vec::new(); skills],
            total_cost: 0.0,
            scored_cost: 0.0,
            pool_reliability: vec![None; skills],
            scores: vec![None; skills],
            explanations: Vec::new(),
        }
    }
}

pub fn objective(a: &[u32], scores: &[Option<f64>]) -> f64 {
    a.iter()
        .zip(scores)
        .map(|(&a, s)| if a == 0 { 0.0 } else { f64::from(a) * s.unwrap_or(0.0) })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamMember {
    pub worker: u32,
    pub skill: SkillId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub task_type: usize,
    pub instance: u32,
    pub members: Vec<TeamMember>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamAssignment {
    pub teams: Vec<Team>,
}

impl TeamAssignment {
    pub fn member_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.teams.iter().flat_map(|t| t.members.iter().map(|m| m.worker))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulerError {
    #[error("pool reliability must lie in (0, 1), got {0}")]
    ReliabilityOutOfRange(f64),
    #[error("{0} has mobilized workers but no pool reliability")]
    MissingReliability(SkillId),
    #[error("plan marks task type {task} served but {skill} is short of workers")]
    InternalInconsistency { task: usize, skill: SkillId },
}

/// `q - rho * c / r`; lower scores are mobilized earlier.
pub fn mobilization_score(q: u32, rho: f64, cost: f64, r_tilde: f64) -> Result<f64, SchedulerError> {
    if !(r_tilde > 0.0 && r_tilde < 1.0) {
        return Err(SchedulerError::ReliabilityOutOfRange(r_tilde));
    }
    Ok(f64::from(q) - rho * cost / r_tilde)
}

/// Reliability-weighted mobilization cost `sum_m c_m a_m / r_m`.
pub fn mobilization_cost(a: &[u32], costs: &[f64], r_tilde: &[Option<f64>]) -> Result<f64, SchedulerError> {
    let mut total = 0.0;
    for (m, (&a_m, &c_m)) in a.iter().zip(costs).enumerate() {
        if a_m == 0 {
            continue;
        }
        let r = r_tilde
            .get(m)
            .copied()
            .flatten()
            .ok_or(SchedulerError::MissingReliability(SkillId(m)))?;
        total += c_m * f64::from(a_m) / r;
    }
    Ok(total)
}

/// Plain spend `sum_m c_m a_m`, summed in skill order.
pub fn budget_spend(a: &[u32], costs: &[f64]) -> f64 {
    a.iter().zip(costs).map(|(&a, &c)| c * f64::from(a)).sum()
}

/// Orders task types by `sum_m n_{m,k} * score_m`, ascending, ties by id.
pub fn sort_task_requests(batch: &TaskRequestBatch, scores: &[f64], requirements: &[Vec<u32>]) -> Vec<usize> {
    let keys: Vec<f64> = requirements
        .iter()
        .map(|req| {
            req.iter()
                .zip(scores)
                .map(|(&n, &s)| f64::from(n) * s)
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..batch.demand.len().min(requirements.len())).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    order
}

fn by_reliability_then_id(a: &&Worker, b: &&Worker) -> Ordering {
    b.reliability()
        .total_cmp(&a.reliability())
        .then(a.id.cmp(&b.id))
}

/// Offline workers of `skill` meeting the threshold, most reliable first.
pub fn mobilization_candidates(workers: &[Worker], skill: usize, epsilon: f64) -> Vec<&Worker> {
    let mut out: Vec<&Worker> = workers
        .iter()
        .filter(|w| w.skill.0 == skill && w.is_offline() && w.is_eligible(epsilon))
        .collect();
    out.sort_by(by_reliability_then_id);
    out
}

fn skill_scores(state: &SkillQueueState, cfg: &MarketConfig, pool: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..cfg.skills)
        .map(|m| {
            pool[m].and_then(|r| mobilization_score(state.q[m], cfg.rho, cfg.mobilization_cost[m], r).ok())
        })
        .collect()
}

/// Runs the controller for one step.
pub fn plan_mobilization(
    state: &SkillQueueState,
    workers: &[Worker],
    batch: &TaskRequestBatch,
    cfg: &MarketConfig,
) -> MobilizationPlan {
    let skills = cfg.skills;
    let pool = pool_reliabilities(workers, skills, cfg.epsilon);
    let scores = skill_scores(state, cfg, &pool);
    // a skill without a usable offline pool cannot mobilize; only its queue matters for ordering
    let sort_scores: Vec<f64> = scores
        .iter()
        .zip(&state.q)
        .map(|(s, &q)| s.unwrap_or(f64::from(q)))
        .collect();
    let requirements: Vec<Vec<u32>> = cfg.task_types.iter().map(|t| t.requirements.clone()).collect();
    let order = sort_task_requests(batch, &sort_scores, &requirements);
    let candidates: Vec<Vec<&Worker>> = (0..skills)
        .map(|m| mobilization_candidates(workers, m, cfg.epsilon))
        .collect();

    let mut a = vec![0u32; skills];
    let mut available: Vec<u64> = state.logged_in.iter().map(|&n| u64::from(n)).collect();
    let mut served = vec![false; cfg.task_types.len()];
    let mut explanations = Vec::new();

    for &k in &order {
        let task = &cfg.task_types[k];
        let demand = batch.demand[k];
        if demand == 0 {
            explanations.push(format!("type {k}: no requests"));
            continue;
        }
        let mut tentative = vec![0u32; skills];
        let mut short: Option<(usize, u64)> = None;

        for (m, n) in task.required_skills() {
            let need = u64::from(n) * u64::from(demand);
            let shortfall = need.saturating_sub(available[m]);
            let spend_before = budget_spend(&a, &cfg.mobilization_cost);
            // Only skills actually short of workers mobilize.
            if shortfall > 0 {
                while u64::from(tentative[m]) < shortfall
                    && a[m] < cfg.mobilization_cap[m]
                    && (a[m] as usize) < candidates[m].len()
                {
                    let mut trial = a.clone();
                    trial[m] += 1;
                    if budget_spend(&trial, &cfg.mobilization_cost) > batch.budget {
                        break;
                    }
                    a = trial;
                    tentative[m] += 1;
                }
            }
            let spend_after = budget_spend(&a, &cfg.mobilization_cost);
            let missing = shortfall - u64::from(tentative[m]);
            if missing > 0 && short.is_none() {
                short = Some((m, missing));
            }
            explanations.push(format!(
                "type {k} / skill {m}: score {}, need {need}, available {}, shortfall {shortfall}, \
                 mobilized {}, budget used {:.4}, remaining {:.4}",
                scores[m].map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}")),
                available[m],
                tentative[m],
                spend_after - spend_before,
                batch.budget - spend_after,
            ));
        }

        match short {
            None => {
                served[k] = true;
                for (m, n) in task.required_skills() {
                    available[m] = available[m] + u64::from(tentative[m]) - u64::from(n) * u64::from(demand);
                }
                explanations.push(format!("type {k}: served {demand} task(s)"));
            }
            Some((m, missing)) => {
                if cfg.rollback_infeasible {
                    for (a_m, t_m) in a.iter_mut().zip(&tentative) {
                        *a_m -= t_m;
                    }
                } else {
                    for (avail, t_m) in available.iter_mut().zip(&tentative) {
                        *avail += u64::from(*t_m);
                    }
                }
                explanations.push(format!(
                    "type {k}: not served, skill {m} short by {missing} worker(s){}",
                    if cfg.rollback_infeasible && tentative.iter().any(|&t| t > 0) {
                        "; tentative mobilizations released"
                    } else {
                        ""
                    }
                ));
            }
        }
    }

    let mobilized: Vec<Vec<u32>> = candidates
        .iter()
        .zip(&a)
        .map(|(c, &n)| c.iter().take(n as usize).map(|w| w.id).collect())
        .collect();
    let scored_cost = mobilization_cost(&a, &cfg.mobilization_cost, &pool)
        .expect("mobilized skills always have an eligible offline pool");
    MobilizationPlan {
        total_cost: budget_spend(&a, &cfg.mobilization_cost),
        scored_cost,
        a,
        served,
        order,
        mobilized,
        pool_reliability: pool,
        scores,
        explanations,
    }
}

/// Builds a plan from an externally chosen mobilization vector and served set.
/// The most reliable eligible offline workers are mobilized.
pub fn plan_from_choice(
    state: &SkillQueueState,
    workers: &[Worker],
    cfg: &MarketConfig,
    a: &[u32],
    served: &[bool],
) -> MobilizationPlan {
    let pool = pool_reliabilities(workers, cfg.skills, cfg.epsilon);
    let scores = skill_scores(state, cfg, &pool);
    let mobilized: Vec<Vec<u32>> = (0..cfg.skills)
        .map(|m| {
            mobilization_candidates(workers, m, cfg.epsilon)
                .into_iter()
                .take(a[m] as usize)
                .map(|w| w.id)
                .collect()
        })
        .collect();
    let scored_cost =
        mobilization_cost(a, &cfg.mobilization_cost, &pool).expect("choices only mobilize eligible workers");
    MobilizationPlan {
        a: a.to_vec(),
        served: served.to_vec(),
        order: (0..served.len()).collect(),
        mobilized,
        total_cost: budget_spend(a, &cfg.mobilization_cost),
        scored_cost,
        pool_reliability: pool,
        scores,
        explanations: Vec::new(),
    }
}

/// Capacity check: can logged-in plus mobilized workers staff `served`?
/// A type without requests is never served.
pub fn serves(state: &SkillQueueState, cfg: &MarketConfig, demand: &[u32], a: &[u32], served: &[bool]) -> bool {
    if served.iter().zip(demand).any(|(&s, &n)| s && n == 0) {
        return false;
    }
    (0..cfg.skills).all(|m| {
        let need: u64 = cfg
            .task_types
            .iter()
            .zip(served)
            .filter(|(_, &s)| s)
            .map(|(t, _)| u64::from(t.requires(m)) * u64::from(demand[t.id]))
            .sum();
        u64::from(state.logged_in[m]) + u64::from(a[m]) >= need
    })
}

/// Concrete teams for every served task instance.
pub fn assemble_teams(
    plan: &MobilizationPlan,
    workers: &[Worker],
    batch: &TaskRequestBatch,
    cfg: &MarketConfig,
) -> Result<TeamAssignment, SchedulerError> {
    let mut pools: Vec<Vec<u32>> = (0..cfg.skills)
        .map(|m| {
            let mut logged: Vec<&Worker> = workers
                .iter()
                .filter(|w| w.skill.0 == m && w.is_logged_in() && w.is_eligible(cfg.epsilon))
                .collect();
            logged.sort_by(by_reliability_then_id);
            let mut fresh: Vec<&Worker> = plan.mobilized[m]
                .iter()
                .filter_map(|id| workers.get(*id as usize))
                .collect();
            fresh.sort_by(by_reliability_then_id);
            // popped from the back, so store in reverse preference order
            logged.iter().chain(fresh.iter()).rev().map(|w| w.id).collect()
        })
        .collect();

    // id order keeps team composition independent of the planning order
    let mut teams = Vec::new();
    for k in 0..plan.served.len() {
        if !plan.served[k] {
            continue;
        }
        let task = &cfg.task_types[k];
        for instance in 0..batch.demand[k] {
            let mut members = Vec::new();
            for (m, n) in task.required_skills() {
                for _ in 0..n {
                    let worker = pools[m].pop().ok_or(SchedulerError::InternalInconsistency {
                        task: k,
                        skill: SkillId(m),
                    })?;
                    members.push(TeamMember {
                        worker,
                        skill: SkillId(m),
                    });
                }
            }
            teams.push(Team {
                task_type: k,
                instance,
                members,
            });
        }
    }
    Ok(TeamAssignment { teams })
}
