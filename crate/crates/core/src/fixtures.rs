//! Scenario files shipped with the crate.

use crate::domain::{validate_config, ConfigError, MarketConfig};

/// Scripted instances small enough for the horizon search: `(name, json)`.
pub const SCRIPTED: [(&str, &str); 5] = [
    ("tiny3", include_str!("../fixtures/tiny3.json")),
    ("pair_team", include_str!("../fixtures/pair_team.json")),
    ("shared_skill", include_str!("../fixtures/shared_skill.json")),
    ("long_service", include_str!("../fixtures/long_service.json")),
    ("reputation_gate", include_str!("../fixtures/reputation_gate.json")),
];

/// Frozen reference values per scripted instance: the horizon optimum, the
/// slack constant and the controller's trajectory.
const EXPECTED: [(&str, &str); 5] = [
    ("tiny3", include_str!("../fixtures/tiny3.expected.json")),
    ("pair_team", include_str!("../fixtures/pair_team.expected.json")),
    ("shared_skill", include_str!("../fixtures/shared_skill.expected.json")),
    ("long_service", include_str!("../fixtures/long_service.expected.json")),
    ("reputation_gate", include_str!("../fixtures/reputation_gate.expected.json")),
];

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct Trajectory {
    pub q_before: Vec<Vec<u32>>,
    pub q_after: Vec<Vec<u32>>,
    pub a: Vec<Vec<u32>>,
    pub served_tasks: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct Expected {
    pub delta_opt: f64,
    pub xi: f64,
    pub crowdasm: Trajectory,
}

pub fn expected(name: &str) -> Option<Expected> {
    EXPECTED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| serde_json::from_str(text).expect("bundled reference values parse"))
}

/// Stochastic 3-skill market used for the rho trade-off study.
pub const STRESS: &str = include_str!("../fixtures/stress.json");

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("unknown fixture '{0}'")]
    Unknown(String),
    #[error("fixture does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Parses and validates a bundled fixture by name (`stress` included).
pub fn load(name: &str) -> Result<MarketConfig, FixtureError> {
    let text = if name == "stress" {
        STRESS
    } else {
        SCRIPTED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| FixtureError::Unknown(name.to_string()))?
    };
    Ok(validate_config(MarketConfig::from_json(text)?)?)
}

pub fn scripted() -> impl Iterator<Item = (&'static str, MarketConfig)> {
    SCRIPTED
        .iter()
        .map(|(name, _)| (*name, load(name).expect("bundled fixtures are valid")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads() {
        for (name, cfg) in scripted() {
            assert!(cfg.is_deterministic_instance(), "{name}");
            assert!(cfg.horizon <= 6, "{name}");
        }
        for (name, _) in SCRIPTED {
            let e = expected(name).unwrap();
            assert_eq!(e.xi, load(name).unwrap().xi(), "{name}");
        }
        assert!(!load("stress").unwrap().is_deterministic_instance());
        assert!(matches!(load("nope"), Err(FixtureError::Unknown(_))));
    }
}
