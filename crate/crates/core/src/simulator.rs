//! Discrete-time market engine.
//!
//! One step runs six phases in a fixed order:
//!
//! 1. workers finishing service and fresh arrivals rejoin the available pool,
//! 2. demand is computed from the pooled reliabilities and realized,
//! 3. the policy plans mobilization and teams are assembled,
//! 4. team members become busy for the task's service time,
//! 5. tasks completing this step draw an outcome and rate their team,
//! 6. the per-skill queue update is checked and the step is recorded.
//!
//! The available-worker count obeys `q(t+1) = q(t) - mu(t) + a(t)` exactly,
//! with `mu_m = sum_k n_{m,k} * served_k - arrivals_m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{self, DemandDiagnostics, DemandError, DemandParams};
use crate::domain::{validate_config, ConfigError, DemandForm, MarketConfig, OutcomeModel, SkillId};
use crate::metrics::lyapunov_value;
use crate::oracle::{self, OracleError, Policy};
use crate::reputation::{pool_reliabilities, record_outcome, Presence, RatingHistory, Worker};
use crate::scheduler::{
    assemble_teams, MobilizationPlan, SchedulerError, SkillQueueState, TaskRequestBatch, TeamAssignment,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Oracle(#[from] Box<OracleError>),
    #[error("step {t}: plan mobilizes worker {worker}, who is not an eligible offline worker")]
    InvalidMobilization { t: u64, worker: u32 },
    #[error("step {t}: queue update broken for {skill}")]
    QueueLaw { t: u64, skill: SkillId },
    #[error("horizon of {0} steps already reached")]
    HorizonReached(u64),
}

impl From<OracleError> for SimError {
    fn from(e: OracleError) -> Self {
        SimError::Oracle(Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLedger {
    pub t: u64,
    pub budget: f64,
    /// Available workers at the start of the step.
    pub q_before: Vec<u32>,
    pub q_after: Vec<u32>,
    /// Returning plus freshly arrived workers.
    pub arrivals: Vec<u32>,
    /// Net consumption `sum_k n_{m,k} served_k - arrivals_m`.
    pub mu: Vec<i64>,
    pub expected_demand: Vec<f64>,
    pub demand: Vec<u32>,
    pub served_tasks: Vec<u32>,
    pub plan: MobilizationPlan,
    pub teams: TeamAssignment,
    /// `sum_k d_k f_k p_k - c(a)`.
    pub expected_profit: f64,
    pub realized_revenue: f64,
    /// `L(q_before)`.
    pub lyapunov: f64,
    /// Workers that received a rating this step.
    pub rated_workers: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub config_hash: String,
    pub seed: u64,
    pub demand_form: DemandForm,
    pub policy: Policy,
    pub horizon: u64,
    pub config: MarketConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepLedger>,
    pub final_roster: Vec<Worker>,
    pub diagnostics: DemandDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct ActiveTeam {
    members: Vec<u32>,
    /// Last step of service; ratings are applied at the end of it.
    finishes: u64,
}

/// Everything the policy sees when deciding a step.
#[derive(Debug, Clone)]
pub struct StepContext {
    pub t: u64,
    pub q_before: Vec<u32>,
    pub arrivals: Vec<u32>,
    pub state: SkillQueueState,
    pub batch: TaskRequestBatch,
    pub expected_demand: Vec<f64>,
}

/// `sum_k d_k f_k p_k - cost`.
pub fn step_profit(served: &[bool], expected: &[f64], prices: &[f64], cost: f64) -> f64 {
    let revenue: f64 = served
        .iter()
        .zip(expected)
        .zip(prices)
        .filter(|((&d, _), _)| d)
        .map(|((_, &f), &p)| f * p)
        .sum();
    revenue - cost
}

/// Reliability used by the demand model for each skill: the offline pool
/// when one qualifies, else every eligible worker of the skill, else the
/// uninformed prior.
fn demand_reliabilities(workers: &[Worker], pool: &[Option<f64>], epsilon: f64) -> Vec<Option<f64>> {
    pool.iter()
        .enumerate()
        .map(|(m, r)| {
            r.or_else(|| {
                let (sum, n) = workers
                    .iter()
                    .filter(|w| w.skill.0 == m)
                    .map(Worker::reliability)
                    .filter(|&r| r >= epsilon)
                    .fold((0.0, 0u32), |(s, n), r| (s + r, n + 1));
                Some(if n > 0 { sum / f64::from(n) } else { 0.5 })
            })
        })
        .collect()
}

pub fn initial_roster(cfg: &MarketConfig) -> Vec<Worker> {
    let mut roster = Vec::new();
    for spec in &cfg.workers {
        for _ in 0..spec.count {
            roster.push(Worker {
                id: roster.len() as u32,
                skill: SkillId(spec.skill),
                history: RatingHistory::new(spec.successes, spec.failures),
                presence: if spec.logged_in {
                    Presence::LoggedIn
                } else {
                    Presence::Offline
                },
            });
        }
    }
    roster
}

fn available_counts(workers: &[Worker], skills: usize) -> Vec<u32> {
    let mut q = vec![0; skills];
    for w in workers.iter().filter(|w| w.is_logged_in()) {
        q[w.skill.0] += 1;
    }
    q
}

#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    cfg: &'a MarketConfig,
    workers: Vec<Worker>,
    active: Vec<ActiveTeam>,
    t: u64,
    rng: ChaCha8Rng,
    diagnostics: DemandDiagnostics,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a MarketConfig) -> Self {
        Simulation {
            cfg,
            workers: initial_roster(cfg),
            active: Vec::new(),
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            diagnostics: DemandDiagnostics::default(),
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn workers(&self) -> &[Worker] {
        &self.workers
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn diagnostics(&self) -> DemandDiagnostics {
        self.diagnostics
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.cfg.horizon
    }

    /// State that fully determines the rest of a deterministic run.
    pub(crate) fn replay_key(&self) -> (u64, Vec<Worker>, Vec<ActiveTeam>) {
        (self.t, self.workers.clone(), self.active.clone())
    }

    /// Phases 1 and 2: returns, arrivals and demand.
    pub fn begin_step(&mut self) -> Result<StepContext, SimError> {
        if self.is_finished() {
            return Err(SimError::HorizonReached(self.cfg.horizon));
        }
        let cfg = self.cfg;
        let t = self.t;
        let skills = cfg.skills;
        let q_before = available_counts(&self.workers, skills);

        let mut arrivals = vec![0u32; skills];
        for w in &mut self.workers {
            if matches!(w.presence, Presence::Busy { until } if until <= t) {
                w.presence = Presence::LoggedIn;
                arrivals[w.skill.0] += 1;
            }
        }
        for m in 0..skills {
            let fresh = match &cfg.arrival_script {
                Some(script) => script.get(t as usize).map_or(0, |row| row[m]),
                None => match Poisson::new(cfg.arrival_rates[m]) {
                    Ok(dist) => dist.sample(&mut self.rng) as u32,
                    Err(_) => 0,
                },
            };
            for _ in 0..fresh {
                self.workers.push(Worker {
                    id: self.workers.len() as u32,
                    skill: SkillId(m),
                    history: RatingHistory::default(),
                    presence: Presence::LoggedIn,
                });
            }
            arrivals[m] += fresh;
        }

        let pool = pool_reliabilities(&self.workers, skills, cfg.epsilon);
        let for_demand = demand_reliabilities(&self.workers, &pool, cfg.epsilon);
        let params = DemandParams::from_config(cfg);
        let mut expected_demand = Vec::with_capacity(cfg.task_types.len());
        let mut realized = Vec::with_capacity(cfg.task_types.len());
        for task in &cfg.task_types {
            let r_task = crate::reputation::task_reliability(task, &for_demand)
                .expect("every skill has a demand reliability");
            let f = demand::evaluate(task.price, r_task, task.positive_ratings, &params, &mut self.diagnostics)?;
            realized.push(demand::realize_demand(f, task.demand_cap, cfg.demand_mode, &mut self.rng));
            expected_demand.push(f);
        }

        Ok(StepContext {
            t,
            q_before,
            arrivals,
            state: SkillQueueState::observe(&self.workers, skills, cfg.epsilon),
            batch: TaskRequestBatch {
                demand: realized,
                prices: cfg.task_types.iter().map(|t| t.price).collect(),
                budget: cfg.budget_per_step.at(t),
            },
            expected_demand,
        })
    }

    /// Phases 3 to 6 for a plan chosen against `ctx`.
    pub fn finish_step(&mut self, ctx: StepContext, plan: MobilizationPlan) -> Result<StepLedger, SimError> {
        let cfg = self.cfg;
        let t = ctx.t;
        let skills = cfg.skills;

        for &id in plan.mobilized.iter().flatten() {
            match self.workers.get(id as usize) {
                Some(w) if w.is_offline() && w.is_eligible(cfg.epsilon) => {}
                _ => return Err(SimError::InvalidMobilization { t, worker: id }),
            }
        }
        let teams = assemble_teams(&plan, &self.workers, &ctx.batch, cfg)?;
        for &id in plan.mobilized.iter().flatten() {
            self.workers[id as usize].presence = Presence::LoggedIn;
        }

        for team in &teams.teams {
            let service = u64::from(cfg.task_types[team.task_type].service_time);
            let members: Vec<u32> = team.members.iter().map(|m| m.worker).collect();
            for &id in &members {
                self.workers[id as usize].presence = Presence::Busy { until: t + service };
            }
            self.active.push(ActiveTeam {
                members,
                finishes: t + service - 1,
            });
        }

        let mut rated_workers = 0;
        let (done, still_active): (Vec<_>, Vec<_>) = std::mem::take(&mut self.active)
            .into_iter()
            .partition(|team| team.finishes <= t);
        self.active = still_active;
        for team in done {
            let success = match cfg.outcome_model {
                OutcomeModel::AlwaysSuccess => true,
                OutcomeModel::Bernoulli => {
                    let mean = team
                        .members
                        .iter()
                        .map(|&id| self.workers[id as usize].reliability())
                        .sum::<f64>()
                        / team.members.len() as f64;
                    self.rng.random_bool(mean)
                }
            };
            for &id in &team.members {
                let w = &mut self.workers[id as usize];
                *w = record_outcome(w.clone(), success);
                rated_workers += 1;
            }
        }

        let served_tasks: Vec<u32> = plan
            .served
            .iter()
            .zip(&ctx.batch.demand)
            .map(|(&d, &n)| if d { n } else { 0 })
            .collect();
        let q_after = available_counts(&self.workers, skills);
        let mut mu = Vec::with_capacity(skills);
        for m in 0..skills {
            let consumed: i64 = cfg
                .task_types
                .iter()
                .map(|task| i64::from(task.requires(m)) * i64::from(served_tasks[task.id]))
                .sum();
            let mu_m = consumed - i64::from(ctx.arrivals[m]);
            if i64::from(q_after[m]) != i64::from(ctx.q_before[m]) - mu_m + i64::from(plan.a[m]) {
                return Err(SimError::QueueLaw { t, skill: SkillId(m) });
            }
            mu.push(mu_m);
        }

        let expected_profit = step_profit(&plan.served, &ctx.expected_demand, &ctx.batch.prices, plan.scored_cost);
        let realized_revenue = served_tasks
            .iter()
            .zip(&ctx.batch.prices)
            .map(|(&n, &p)| f64::from(n) * p)
            .sum();
        self.t += 1;
        Ok(StepLedger {
            t,
            budget: ctx.batch.budget,
            lyapunov: lyapunov_value(&ctx.q_before),
            q_before: ctx.q_before,
            q_after,
            arrivals: ctx.arrivals,
            mu,
            expected_demand: ctx.expected_demand,
            demand: ctx.batch.demand,
            served_tasks,
            plan,
            teams,
            expected_profit,
            realized_revenue,
            rated_workers,
        })
    }

    /// One full step under `policy`.
    pub fn step(&mut self, policy: Policy) -> Result<StepLedger, SimError> {
        let ctx = self.begin_step()?;
        let plan = oracle::decide(policy, &ctx, &self.workers, self.cfg, &mut self.rng)?;
        self.finish_step(ctx, plan)
    }

    pub fn into_trace(self, policy: Policy, steps: Vec<StepLedger>) -> SimulationTrace {
        SimulationTrace {
            header: TraceHeader {
                config_hash: self.cfg.content_hash(),
                seed: self.cfg.seed,
                demand_form: self.cfg.demand_form,
                policy,
                horizon: self.cfg.horizon,
                config: self.cfg.clone(),
            },
            steps,
            final_roster: self.workers,
            diagnostics: self.diagnostics,
        }
    }
}

/// Simulates the whole horizon under `policy`.
pub fn run(cfg: &MarketConfig, policy: Policy) -> Result<SimulationTrace, SimError> {
    let cfg = validate_config(cfg.clone())?;
    let mut sim = Simulation::new(&cfg);
    let mut steps = Vec::with_capacity(cfg.horizon as usize);
    while !sim.is_finished() {
        steps.push(sim.step(policy)?);
    }
    Ok(sim.into_trace(policy, steps))
}
