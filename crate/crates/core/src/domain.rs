//! Scenario configuration, validation and the derived constants used by the
//! profit-bound analysis.
//!
//! A scenario is one JSON document whose keys are exactly the field names of
//! [`MarketConfig`]. Missing keys fall back to the built-in default market;
//! unknown keys are rejected so that typos surface immediately.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Index of a worker skill, dense in `0..M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillId(pub usize);

impl fmt::Display for SkillId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "skill {}", self.0)
    }
}

/// One kind of collaborative task and the team it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTypeSpec {
    pub id: usize,
    /// Workers of each skill needed by one task instance (`n_{m,k}`).
    pub requirements: Vec<u32>,
    /// Price charged per completed task.
    pub price: f64,
    /// Hard per-step cap on realized demand.
    pub demand_cap: u32,
    /// Positive ratings accumulated for this task type, at least 1.
    pub positive_ratings: u32,
    /// Steps a serving worker stays busy.
    #[serde(default = "one")]
    pub service_time: u32,
}

fn one() -> u32 {
    1
}

impl TaskTypeSpec {
    pub fn requires(&self, skill: usize) -> u32 {
        self.requirements.get(skill).copied().unwrap_or(0)
    }

    /// Skills with a non-zero requirement.
    pub fn required_skills(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.requirements
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, n)| n > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    Deterministic,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandForm {
    /// `f = e^{a1} r^{a2} n^{a3} p`
    Exact,
    /// `f = a2 a3 n e^{a1} r p`, clamped at zero
    Linearized,
}

impl fmt::Display for DemandForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemandForm::Exact => "exact",
            DemandForm::Linearized => "linearized",
        })
    }
}

/// How a finished task's quality is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeModel {
    /// Success with probability equal to the team's mean reliability.
    Bernoulli,
    /// Every task succeeds. Used by scripted instances.
    AlwaysSuccess,
}

/// Per-step budget: a constant, or a schedule whose last entry repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetSchedule {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl BudgetSchedule {
    pub fn at(&self, t: u64) -> f64 {
        match self {
            BudgetSchedule::Constant(b) => *b,
            BudgetSchedule::PerStep(v) => {
                let i = (t as usize).min(v.len().saturating_sub(1));
                v.get(i).copied().unwrap_or(0.0)
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            BudgetSchedule::Constant(b) => vec![*b],
            BudgetSchedule::PerStep(v) => v.clone(),
        }
    }
}

/// Initial roster entry; `count` copies are created with consecutive ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSpec {
    pub skill: usize,
    #[serde(default)]
    pub successes: u32,
    #[serde(default)]
    pub failures: u32,
    #[serde(default)]
    pub logged_in: bool,
    #[serde(default = "one")]
    pub count: u32,
}

/// Full description of one market scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub skills: usize,
    pub task_types: Vec<TaskTypeSpec>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub mobilization_cost: Vec<f64>,
    pub mobilization_cap: Vec<u32>,
    pub budget_per_step: BudgetSchedule,
    /// Mean fresh arrivals per skill and step (Poisson), joining the available pool.
    pub arrival_rates: Vec<f64>,
    /// Scripted arrivals `[t][m]`; replaces the Poisson arrivals when present.
    pub arrival_script: Option<Vec<Vec<u32>>>,
    pub workers: Vec<WorkerSpec>,
    pub horizon: u64,
    pub seed: u64,
    pub demand_mode: DemandMode,
    pub demand_form: DemandForm,
    pub outcome_model: OutcomeModel,
    /// Undo a task type's tentative mobilizations when it cannot be fully staffed.
    pub rollback_infeasible: bool,
}

impl Default for MarketConfig {
    fn default() -> Self {
        let worker = |skill, successes, failures, logged_in, count| WorkerSpec {
            skill,
            successes,
            failures,
            logged_in,
            count,
        };
        MarketConfig {
            skills: 2,
            task_types: vec![
                TaskTypeSpec {
                    id: 0,
                    requirements: vec![1, 1],
                    price: 1.0,
                    demand_cap: 4,
                    positive_ratings: 4,
                    service_time: 1,
                },
                TaskTypeSpec {
                    id: 1,
                    requirements: vec![0, 2],
                    price: 1.5,
                    demand_cap: 2,
                    positive_ratings: 9,
                    service_time: 1,
                },
            ],
            alpha1: 1.0,
            alpha2: -0.5,
            alpha3: 0.25,
            epsilon: 0.5,
            rho: 1.0,
            mobilization_cost: vec![1.0, 2.0],
            mobilization_cap: vec![3, 3],
            budget_per_step: BudgetSchedule::Constant(10.0),
            arrival_rates: vec![0.3, 0.3],
            arrival_script: None,
            workers: vec![
                worker(0, 6, 1, true, 2),
                worker(0, 3, 2, false, 4),
                worker(0, 1, 4, false, 1),
                worker(1, 8, 2, true, 2),
                worker(1, 2, 1, false, 5),
                worker(1, 0, 3, false, 1),
            ],
            horizon: 50,
            seed: 42,
            demand_mode: DemandMode::Deterministic,
            demand_form: DemandForm::Exact,
            outcome_model: OutcomeModel::Bernoulli,
            rollback_infeasible: true,
        }
    }
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("task type {task}: price must be positive and finite, got {price}")]
    NegativePrice { task: usize, price: f64 },
    #[error("demand coefficients need alpha2 < 0 and alpha3 > 0, got alpha2={alpha2}, alpha3={alpha3}")]
    BadAlphaSigns { alpha2: f64, alpha3: f64 },
    #[error("task type {task}: requires no workers at all")]
    EmptyRequirements { task: usize },
    #[error("rho must be positive and finite, got {0}")]
    NonPositiveRho(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("at least one skill is required")]
    NoSkills,
    #[error("task type at position {position} has id {id}; ids must be dense 0..K")]
    TaskIdOutOfOrder { position: usize, id: usize },
    #[error("{field}: expected {expected} entries, got {got}")]
    LengthMismatch {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("task type {task}: positive_ratings must be at least 1")]
    ZeroPositiveRatings { task: usize },
    #[error("task type {task}: service_time must be at least 1")]
    ZeroServiceTime { task: usize },
    #[error("{field}: value {value} must be finite and non-negative")]
    BadValue { field: String, value: f64 },
    #[error("{field}: value {value} must be finite and positive")]
    NonPositiveValue { field: String, value: f64 },
    #[error("alpha1 must be finite, got {0}")]
    NonFiniteAlpha1(f64),
    #[error("worker entry {entry}: skill {skill} out of range")]
    WorkerSkillOutOfRange { entry: usize, skill: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario ({} problem(s))", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

/// Check every scenario invariant and return the config untouched, or the
/// full list of violations.
pub fn validate_config(raw: MarketConfig) -> Result<MarketConfig, ConfigError> {
    let mut out = Vec::new();
    let m = raw.skills;
    if m == 0 {
        out.push(Violation::NoSkills);
    }
    let len_check = |out: &mut Vec<Violation>, field: &str, got: usize| {
        if got != m {
            out.push(Violation::LengthMismatch {
                field: field.to_string(),
                expected: m,
                got,
            });
        }
    };
    len_check(&mut out, "mobilization_cost", raw.mobilization_cost.len());
    len_check(&mut out, "mobilization_cap", raw.mobilization_cap.len());
    len_check(&mut out, "arrival_rates", raw.arrival_rates.len());

    for (position, task) in raw.task_types.iter().enumerate() {
        if task.id != position {
            out.push(Violation::TaskIdOutOfOrder {
                position,
                id: task.id,
            });
        }
        len_check(
            &mut out,
            &format!("task_types[{position}].requirements"),
            task.requirements.len(),
        );
        if !(task.price > 0.0 && task.price.is_finite()) {
            out.push(Violation::NegativePrice {
                task: task.id,
                price: task.price,
            });
        }
        if task.requirements.iter().all(|&n| n == 0) {
            out.push(Violation::EmptyRequirements { task: task.id });
        }
        if task.positive_ratings == 0 {
            out.push(Violation::ZeroPositiveRatings { task: task.id });
        }
        if task.service_time == 0 {
            out.push(Violation::ZeroServiceTime { task: task.id });
        }
    }

    if !(raw.alpha2 < 0.0 && raw.alpha3 > 0.0) || !raw.alpha2.is_finite() || !raw.alpha3.is_finite() {
        out.push(Violation::BadAlphaSigns {
            alpha2: raw.alpha2,
            alpha3: raw.alpha3,
        });
    }
    if !raw.alpha1.is_finite() {
        out.push(Violation::NonFiniteAlpha1(raw.alpha1));
    }
    if !(raw.rho > 0.0 && raw.rho.is_finite()) {
        out.push(Violation::NonPositiveRho(raw.rho));
    }
    if !(raw.epsilon > 0.0 && raw.epsilon < 1.0) {
        out.push(Violation::EpsilonOutOfRange(raw.epsilon));
    }
    for (i, &c) in raw.mobilization_cost.iter().enumerate() {
        if !(c > 0.0 && c.is_finite()) {
            out.push(Violation::NonPositiveValue {
                field: format!("mobilization_cost[{i}]"),
                value: c,
            });
        }
    }
    for (i, b) in raw.budget_per_step.values().into_iter().enumerate() {
        if !(b >= 0.0 && b.is_finite()) {
            out.push(Violation::BadValue {
                field: format!("budget_per_step[{i}]"),
                value: b,
            });
        }
    }
    for (i, &r) in raw.arrival_rates.iter().enumerate() {
        if !(r >= 0.0 && r.is_finite()) {
            out.push(Violation::BadValue {
                field: format!("arrival_rates[{i}]"),
                value: r,
            });
        }
    }
    if let Some(script) = &raw.arrival_script {
        for (t, row) in script.iter().enumerate() {
            len_check(&mut out, &format!("arrival_script[{t}]"), row.len());
        }
    }
    for (entry, w) in raw.workers.iter().enumerate() {
        if w.skill >= m {
            out.push(Violation::WorkerSkillOutOfRange {
                entry,
                skill: w.skill,
            });
        }
    }

    if out.is_empty() {
        Ok(raw)
    } else {
        Err(ConfigError { violations: out })
    }
}

/// Per-skill upper bound on worker consumption: `sum_k n_{m,k} * T_k^max`.
pub fn compute_mu_max(skills: usize, task_types: &[TaskTypeSpec]) -> Vec<u64> {
    (0..skills)
        .map(|m| {
            task_types
                .iter()
                .map(|t| u64::from(t.requires(m)) * u64::from(t.demand_cap))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("vectors differ in length: {0} vs {1}")]
pub struct LengthMismatch(pub usize, pub usize);

/// Drift slack `xi = 1/2 * sum_m (a_max_m^2 + mu_max_m^2)`.
pub fn compute_xi(a_max: &[u32], mu_max: &[u64]) -> Result<f64, LengthMismatch> {
    if a_max.len() != mu_max.len() {
        return Err(LengthMismatch(a_max.len(), mu_max.len()));
    }
    let sum: f64 = a_max
        .iter()
        .zip(mu_max)
        .map(|(&a, &mu)| {
            let (a, mu) = (f64::from(a), mu as f64);
            a * a + mu * mu
        })
        .sum();
    Ok(0.5 * sum)
}

impl MarketConfig {
    pub fn from_json(text: &str) -> Result<MarketConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn mu_max(&self) -> Vec<u64> {
        compute_mu_max(self.skills, &self.task_types)
    }

    pub fn xi(&self) -> f64 {
        compute_xi(&self.mobilization_cap, &self.mu_max()).expect("validated config has aligned vectors")
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Scripted arrivals, deterministic demand and outcomes: every run of the
    /// same mobilization sequence replays identically.
    pub fn is_deterministic_instance(&self) -> bool {
        self.arrival_script.is_some()
            && self.demand_mode == DemandMode::Deterministic
            && self.outcome_model == OutcomeModel::AlwaysSuccess
    }
}
