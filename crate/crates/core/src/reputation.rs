//! Beta-reputation scores for individual workers and the pooled reliability
//! aggregates the cost and demand models consume.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{SkillId, TaskTypeSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingHistory {
    pub successes: u32,
    pub failures: u32,
}

impl RatingHistory {
    pub fn new(successes: u32, failures: u32) -> Self {
        RatingHistory {
            successes,
            failures,
        }
    }

    pub fn total(&self) -> u64 {
        u64::from(self.successes) + u64::from(self.failures)
    }
}

/// Expected value of the beta posterior: `(s + 1) / (s + f + 2)`.
pub fn reliability(history: RatingHistory) -> f64 {
    (f64::from(history.successes) + 1.0) / (history.total() as f64 + 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Presence {
    LoggedIn,
    Offline,
    /// Serving a task; rejoins the available pool at step `until`.
    Busy { until: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Worker {
    pub id: u32,
    pub skill: SkillId,
    pub history: RatingHistory,
    pub presence: Presence,
}

impl Worker {
    pub fn reliability(&self) -> f64 {
        reliability(self.history)
    }

    pub fn busy_until(&self) -> Option<u64> {
        match self.presence {
            Presence::Busy { until } => Some(until),
            _ => None,
        }
    }

    pub fn is_eligible(&self, epsilon: f64) -> bool {
        self.reliability() >= epsilon
    }

    pub fn is_logged_in(&self) -> bool {
        self.presence == Presence::LoggedIn
    }

    pub fn is_offline(&self) -> bool {
        self.presence == Presence::Offline
    }
}

/// Returns `worker` with one more success or failure on record.
pub fn record_outcome(mut worker: Worker, success: bool) -> Worker {
    if success {
        worker.history.successes += 1;
    } else {
        worker.history.failures += 1;
    }
    worker
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ReputationError {
    #[error("{0}: no offline worker meets the reliability threshold")]
    NoEligibleWorkers(SkillId),
    #[error("task type {task}: no pool reliability for required {skill}")]
    MissingSkillReliability { task: usize, skill: SkillId },
}

/// Mean reliability of offline workers of `skill` whose reliability is at
/// least `epsilon`.
pub fn pool_reliability(
    workers: &[Worker],
    skill: SkillId,
    epsilon: f64,
) -> Result<f64, ReputationError> {
    let (sum, count) = workers
        .iter()
        .filter(|w| w.skill == skill && w.is_offline())
        .map(Worker::reliability)
        .filter(|&r| r >= epsilon)
        .fold((0.0, 0usize), |(s, c), r| (s + r, c + 1));
    if count == 0 {
        return Err(ReputationError::NoEligibleWorkers(skill));
    }
    Ok(sum / count as f64)
}

/// Pool reliabilities for every skill, `None` where no offline worker qualifies.
pub fn pool_reliabilities(workers: &[Worker], skills: usize, epsilon: f64) -> Vec<Option<f64>> {
    (0..skills)
        .map(|m| pool_reliability(workers, SkillId(m), epsilon).ok())
        .collect()
}

/// Requirement-weighted mean of the pool reliabilities of the skills `task` needs.
pub fn task_reliability(
    task: &TaskTypeSpec,
    pool_reliabilities: &[Option<f64>],
) -> Result<f64, ReputationError> {
    let mut weighted = 0.0;
    let mut heads = 0u64;
    for (m, n) in task.required_skills() {
        let r = pool_reliabilities
            .get(m)
            .copied()
            .flatten()
            .ok_or(ReputationError::MissingSkillReliability {
                task: task.id,
                skill: SkillId(m),
            })?;
        weighted += f64::from(n) * r;
        heads += u64::from(n);
    }
    Ok(weighted / heads as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn offline(id: u32, skill: usize, s: u32, f: u32) -> Worker {
        Worker {
            id,
            skill: SkillId(skill),
            history: RatingHistory::new(s, f),
            presence: Presence::Offline,
        }
    }

    /// Roster whose offline skill-0 workers have exactly the given reliabilities.
    fn pool_with(reliabilities: &[(u32, u32)]) -> Vec<Worker> {
        reliabilities
            .iter()
            .enumerate()
            .map(|(i, &(s, f))| offline(i as u32, 0, s, f))
            .collect()
    }

    fn task(requirements: Vec<u32>) -> TaskTypeSpec {
        TaskTypeSpec {
            id: 0,
            requirements,
            price: 1.0,
            demand_cap: 1,
            positive_ratings: 1,
            service_time: 1,
        }
    }

    #[test]
    fn reliability_examples() {
        assert_eq!(reliability(RatingHistory::new(0, 0)), 0.5);
        assert!((reliability(RatingHistory::new(4, 0)) - 5.0 / 6.0).abs() < 1e-15);
        assert!((reliability(RatingHistory::new(1, 3)) - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn record_outcome_increments_one_counter() {
        let w = offline(3, 1, 0, 0);
        let after = record_outcome(w.clone(), true);
        assert_eq!(after.history, RatingHistory::new(1, 0));
        assert_eq!((after.id, after.skill, after.presence), (w.id, w.skill, w.presence));
        let w = offline(3, 1, 2, 1);
        assert_eq!(record_outcome(w, false).history, RatingHistory::new(2, 2));
    }

    #[test]
    fn pool_reliability_examples() {
        // (8,0) -> 0.9, (6,2) -> 0.7, (2,7) -> 3/11
        let roster = pool_with(&[(8, 0), (6, 2)]);
        let r = pool_reliability(&roster, SkillId(0), 0.5).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert_eq!(pool_reliability(&roster, SkillId(0), 0.8).unwrap(), 0.9);
        // 62 successes, 136 failures: 63/200 = 0.315
        let low = pool_with(&[(62, 136)]);
        assert_eq!(low[0].reliability(), 0.315);
        assert_eq!(
            pool_reliability(&low, SkillId(0), 0.5),
            Err(ReputationError::NoEligibleWorkers(SkillId(0)))
        );
    }

    #[test]
    fn pool_reliability_ignores_logged_in_and_other_skills() {
        let mut roster = pool_with(&[(8, 0)]);
        roster.push(Worker {
            presence: Presence::LoggedIn,
            ..offline(1, 0, 0, 8)
        });
        roster.push(offline(2, 1, 0, 8));
        assert_eq!(pool_reliability(&roster, SkillId(0), 0.05).unwrap(), 0.9);
        assert!(pool_reliability(&[], SkillId(0), 0.5).is_err());
    }

    #[test]
    fn task_reliability_examples() {
        assert_eq!(task_reliability(&task(vec![1]), &[Some(0.8)]).unwrap(), 0.8);
        let r = task_reliability(&task(vec![1, 1]), &[Some(0.6), Some(1.0)]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        let r = task_reliability(&task(vec![3, 1]), &[Some(0.8), Some(0.4)]).unwrap();
        assert!((r - 0.7).abs() < 1e-12);
        // a missing pool is fine when the skill is not required
        assert_eq!(task_reliability(&task(vec![0, 2]), &[None, Some(0.6)]).unwrap(), 0.6);
        assert_eq!(
            task_reliability(&task(vec![1, 2]), &[None, Some(0.6)]),
            Err(ReputationError::MissingSkillReliability {
                task: 0,
                skill: SkillId(0)
            })
        );
    }

    proptest! {
        #[test]
        fn reliability_is_strictly_inside_unit_interval(s in 0u32..100_000, f in 0u32..100_000) {
            let r = reliability(RatingHistory::new(s, f));
            prop_assert!(r > 0.0 && r < 1.0);
            prop_assert!(reliability(RatingHistory::new(s + 1, f)) > r);
        }

        #[test]
        fn reliability_approaches_success_ratio(s in 1u32..20, f in 1u32..20) {
            let ratio = f64::from(s) / f64::from(s + f);
            let k = 10_000;
            let r = reliability(RatingHistory::new(s * k, f * k));
            prop_assert!((r - ratio).abs() < 1e-3);
        }

        #[test]
        fn outcome_then_reliability_has_no_hidden_state(s in 0u32..1000, f in 0u32..1000, ok: bool) {
            let w = record_outcome(offline(0, 0, s, f), ok);
            let manual = if ok { RatingHistory::new(s + 1, f) } else { RatingHistory::new(s, f + 1) };
            prop_assert_eq!(w.reliability(), reliability(manual));
        }

        #[test]
        fn pooled_value_never_below_threshold(
            hist in prop::collection::vec((0u32..30, 0u32..30), 0..12),
            eps in 0.05f64..0.95,
        ) {
            let roster = pool_with(&hist);
            if let Ok(r) = pool_reliability(&roster, SkillId(0), eps) {
                prop_assert!(r >= eps - 1e-12);
                prop_assert!(r < 1.0);
            }
        }

        #[test]
        fn task_reliability_is_a_convex_combination(
            reqs in prop::collection::vec(0u32..5, 3),
            pools in prop::collection::vec(0.01f64..0.99, 3),
        ) {
            prop_assume!(reqs.iter().any(|&n| n > 0));
            let pools_opt: Vec<_> = pools.iter().map(|&r| Some(r)).collect();
            let r = task_reliability(&task(reqs.clone()), &pools_opt).unwrap();
            let used: Vec<f64> = reqs.iter().zip(&pools).filter(|(n, _)| **n > 0).map(|(_, r)| *r).collect();
            let lo = used.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = used.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
        }
    }
}
