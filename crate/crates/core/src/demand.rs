//! Crowdsourcer demand: the log-linear price/reputation model, its linearized
//! variant, and realization into integer task counts.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DemandForm, DemandMode, MarketConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub form: DemandForm,
}

impl DemandParams {
    pub fn from_config(cfg: &MarketConfig) -> Self {
        DemandParams {
            alpha1: cfg.alpha1,
            alpha2: cfg.alpha2,
            alpha3: cfg.alpha3,
            form: cfg.demand_form,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DemandError {
    #[error("price must be positive and finite, got {0}")]
    NonPositivePrice(f64),
    #[error("reliability must lie in (0, 1), got {0}")]
    ReliabilityOutOfRange(f64),
    #[error("positive rating count must be at least 1")]
    ZeroPositiveRatings,
}

fn check_domain(price: f64, r_tilde: f64, n_plus: u32) -> Result<(), DemandError> {
    if !(price > 0.0 && price.is_finite()) {
        return Err(DemandError::NonPositivePrice(price));
    }
    if !(r_tilde > 0.0 && r_tilde < 1.0) {
        return Err(DemandError::ReliabilityOutOfRange(r_tilde));
    }
    if n_plus == 0 {
        return Err(DemandError::ZeroPositiveRatings);
    }
    Ok(())
}

/// `e^{a1} * r^{a2} * n^{a3} * p`; linear in the price.
pub fn expected_demand(
    price: f64,
    r_tilde: f64,
    n_plus: u32,
    params: &DemandParams,
) -> Result<f64, DemandError> {
    check_domain(price, r_tilde, n_plus)?;
    Ok(params.alpha1.exp() * r_tilde.powf(params.alpha2) * f64::from(n_plus).powf(params.alpha3) * price)
}

/// `beta = a2 * a3 * n * e^{a1}`.
pub fn linearized_coefficient(n_plus: u32, params: &DemandParams) -> f64 {
    params.alpha2 * params.alpha3 * f64::from(n_plus) * params.alpha1.exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedDemand {
    /// `beta * r * p` before clamping; negative whenever `a2 < 0 < a3`.
    pub raw: f64,
    pub value: f64,
    pub clamped: bool,
}

pub fn linearized_demand(
    price: f64,
    r_tilde: f64,
    n_plus: u32,
    params: &DemandParams,
) -> Result<LinearizedDemand, DemandError> {
    check_domain(price, r_tilde, n_plus)?;
    let raw = linearized_coefficient(n_plus, params) * r_tilde * price;
    let clamped = raw < 0.0;
    Ok(LinearizedDemand {
        raw,
        value: if clamped { 0.0 } else { raw },
        clamped,
    })
}

/// Running counters surfaced in run summaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandDiagnostics {
    pub negative_clamps: u64,
}

/// Evaluates the configured demand form.
pub fn evaluate(
    price: f64,
    r_tilde: f64,
    n_plus: u32,
    params: &DemandParams,
    diagnostics: &mut DemandDiagnostics,
) -> Result<f64, DemandError> {
    match params.form {
        DemandForm::Exact => expected_demand(price, r_tilde, n_plus, params),
        DemandForm::Linearized => {
            let d = linearized_demand(price, r_tilde, n_plus, params)?;
            if d.clamped {
                diagnostics.negative_clamps += 1;
            }
            Ok(d.value)
        }
    }
}

/// Turns expected demand into an integer task count no larger than `cap`.
pub fn realize_demand<R: Rng + ?Sized>(expected: f64, cap: u32, mode: DemandMode, rng: &mut R) -> u32 {
    if expected.is_nan() || expected <= 0.0 {
        return 0;
    }
    let draw = match mode {
        DemandMode::Deterministic => (expected + 0.5).floor(),
        DemandMode::Poisson => match Poisson::new(expected) {
            Ok(dist) => dist.sample(rng),
            Err(_) => f64::from(cap),
        },
    };
    if draw >= f64::from(cap) {
        cap
    } else {
        draw as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(a1: f64, a2: f64, a3: f64) -> DemandParams {
        DemandParams {
            alpha1: a1,
            alpha2: a2,
            alpha3: a3,
            form: DemandForm::Exact,
        }
    }

    #[test]
    fn zero_exponents_leave_the_price() {
        assert_eq!(expected_demand(1.0, 0.7, 5, &params(0.0, 0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn demand_is_linear_in_price() {
        let p = params(0.3, -0.4, 0.6);
        let one = expected_demand(1.7, 0.6, 7, &p).unwrap();
        let two = expected_demand(3.4, 0.6, 7, &p).unwrap();
        assert!((two - 2.0 * one).abs() <= 1e-12 * two);
    }

    #[test]
    fn closed_form_reference_value() {
        // e * 0.81^-0.5 * 16^0.25 * 2, evaluated independently: 12.08125257...
        let f = expected_demand(2.0, 0.81, 16, &params(1.0, -0.5, 0.25)).unwrap();
        assert!((f - 12.081_252_570_929_09).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let p = params(1.0, -0.5, 0.25);
        assert_eq!(expected_demand(0.0, 0.5, 1, &p), Err(DemandError::NonPositivePrice(0.0)));
        assert_eq!(expected_demand(1.0, 1.0, 1, &p), Err(DemandError::ReliabilityOutOfRange(1.0)));
        assert_eq!(expected_demand(1.0, 0.0, 1, &p), Err(DemandError::ReliabilityOutOfRange(0.0)));
        assert!(linearized_demand(-1.0, 0.5, 1, &p).is_err());
    }

    #[test]
    fn linearized_examples() {
        let zero = params(1.0, -0.5, 0.0);
        for &(price, r) in &[(1.0, 0.3), (5.0, 0.9)] {
            let d = linearized_demand(price, r, 4, &zero).unwrap();
            assert_eq!(d.value, 0.0);
        }
        // beta = 2 via a1 = 0, a2*a3*n = 2
        let two = params(0.0, 1.0, 2.0);
        assert_eq!(linearized_coefficient(1, &two), 2.0);
        let d = linearized_demand(3.0, 0.5, 1, &two).unwrap();
        assert_eq!((d.raw, d.value, d.clamped), (3.0, 3.0, false));

        let negative = params(0.0, -0.5, 0.25);
        assert_eq!(linearized_coefficient(16, &negative), -2.0);
        let mut diag = DemandDiagnostics::default();
        let p = DemandParams {
            form: DemandForm::Linearized,
            ..negative
        };
        assert_eq!(evaluate(1.0, 0.5, 16, &p, &mut diag).unwrap(), 0.0);
        assert_eq!(diag.negative_clamps, 1);
    }

    #[test]
    fn realize_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(realize_demand(0.0, 10, DemandMode::Deterministic, &mut rng), 0);
        assert_eq!(realize_demand(0.0, 10, DemandMode::Poisson, &mut rng), 0);
        assert_eq!(realize_demand(2.5, 10, DemandMode::Deterministic, &mut rng), 3);
        assert_eq!(realize_demand(2.49, 10, DemandMode::Deterministic, &mut rng), 2);
        assert_eq!(realize_demand(12.08, 4, DemandMode::Deterministic, &mut rng), 4);
    }

    /// Knuth's multiplication method, independent of `rand_distr`.
    fn knuth_poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u32 {
        let limit = (-lambda).exp();
        let mut k = 0;
        let mut p = 1.0;
        loop {
            p *= rng.random::<f64>();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }

    #[test]
    fn poisson_sample_mean() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let ours: u64 = (0..n)
            .map(|_| u64::from(realize_demand(4.0, 10, DemandMode::Poisson, &mut rng)))
            .sum();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reference: u64 = (0..n).map(|_| u64::from(knuth_poisson(4.0, &mut rng).min(10))).sum();
        let ours = ours as f64 / n as f64;
        let reference = reference as f64 / n as f64;
        // capping at 10 removes ~0.003 of mass above the cap
        assert!((ours - 4.0).abs() < 0.05, "mean {ours}");
        assert!((ours - reference).abs() < 0.05, "{ours} vs {reference}");
    }

    proptest! {
        #[test]
        fn monotone_in_reliability_and_ratings(
            a1 in -2.0f64..2.0, a2 in -3.0f64..-0.01, a3 in 0.01f64..3.0,
            r in 0.05f64..0.9, n in 1u32..100, price in 0.1f64..10.0,
        ) {
            let p = params(a1, a2, a3);
            let base = expected_demand(price, r, n, &p).unwrap();
            prop_assert!(base >= 0.0 && base.is_finite());
            prop_assert!(expected_demand(price, r + 0.05, n, &p).unwrap() < base);
            prop_assert!(expected_demand(price, r, n + 1, &p).unwrap() > base);
        }

        #[test]
        fn realized_never_exceeds_cap(expected in 0.0f64..50.0, cap in 0u32..20, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            prop_assert!(realize_demand(expected, cap, DemandMode::Poisson, &mut rng) <= cap);
            let a = realize_demand(expected, cap, DemandMode::Deterministic, &mut rng);
            let b = realize_demand(expected, cap, DemandMode::Deterministic, &mut ChaCha8Rng::seed_from_u64(0));
            prop_assert!(a <= cap);
            prop_assert_eq!(a, b);
        }
    }
}
