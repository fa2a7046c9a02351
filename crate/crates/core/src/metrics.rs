//! Lyapunov diagnostics, time-averaged profit and the profit-bound check.

mod export;

pub use export::{
    bound_table_csv, export_report, line_chart_svg, summary_json, trace_csv, BoundRow, Format, RunSummary,
    SummaryDocument,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::SimulationTrace;

/// Tolerance for bound checks on deterministic scripted runs.
pub const DETERMINISTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("drift needs at least two steps, trace has {0}")]
    TraceTooShort(usize),
    #[error("trace has no steps")]
    EmptyTrace,
}

/// `L(q) = 1/2 * sum_m q_m^2`.
pub fn lyapunov_value(q: &[u32]) -> f64 {
    0.5 * q.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>()
}

/// Per-step drift `L(q(t+1)) - L(q(t))` between consecutive ledger entries.
pub fn drift_series(trace: &SimulationTrace) -> Result<Vec<f64>, MetricsError> {
    if trace.steps.len() < 2 {
        return Err(MetricsError::TraceTooShort(trace.steps.len()));
    }
    Ok(trace
        .steps
        .windows(2)
        .map(|w| w[1].lyapunov - w[0].lyapunov)
        .collect())
}

pub fn time_averaged_profit(trace: &SimulationTrace) -> Result<f64, MetricsError> {
    mean(trace.steps.iter().map(|s| s.expected_profit))
}

/// Mean over steps of the total available-worker backlog `sum_m q_m(t)`.
pub fn average_backlog(trace: &SimulationTrace) -> Result<f64, MetricsError> {
    mean(trace.steps.iter().map(|s| s.q_before.iter().map(|&q| f64::from(q)).sum::<f64>()))
}

fn mean(values: impl Iterator<Item = f64>) -> Result<f64, MetricsError> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return Err(MetricsError::EmptyTrace);
    }
    Ok(sum / n as f64)
}

/// Where a bound report's `delta_opt` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumSource {
    /// Exhaustive search over every choice sequence of a scripted instance.
    HorizonSearch,
    /// Mean full-service revenue at zero cost along the run itself.
    FullServiceRelaxation,
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rho: f64,
    pub xi: f64,
    pub delta_opt: f64,
    pub avg_profit: f64,
    /// `delta_opt - xi / rho`
    pub bound_rhs: f64,
    pub satisfied: bool,
    /// `avg_profit - bound_rhs`
    pub margin: f64,
    pub tolerance: f64,
    pub source: OptimumSource,
}

/// Checks `avg_profit >= delta_opt - xi / rho` up to `tolerance`.
pub fn bound_check(avg_profit: f64, delta_opt: f64, xi: f64, rho: f64, tolerance: f64) -> BoundReport {
    let bound_rhs = delta_opt - xi / rho;
    let margin = avg_profit - bound_rhs;
    BoundReport {
        rho,
        xi,
        delta_opt,
        avg_profit,
        bound_rhs,
        satisfied: margin >= -tolerance,
        margin,
        tolerance,
        source: OptimumSource::Supplied,
    }
}

/// Mean full-service revenue `sum_k f_k p_k` along a trace.
pub fn full_service_revenue(trace: &SimulationTrace) -> Result<f64, MetricsError> {
    mean(trace.steps.iter().map(|s| {
        s.expected_demand
            .iter()
            .zip(&trace.header.config.task_types)
            .map(|(f, t)| f * t.price)
            .sum::<f64>()
    }))
}

/// Bound report for a finished run. Scripted instances get the exact
/// optimum from the horizon search; anything else falls back to the
/// full-service revenue at zero cost, which no policy can exceed.
pub fn bound_for_trace(trace: &SimulationTrace) -> Result<BoundReport, MetricsError> {
    let cfg = &trace.header.config;
    let avg = time_averaged_profit(trace)?;
    let report = match crate::oracle::horizon_optimal_profit(cfg) {
        Ok(opt) => BoundReport {
            source: OptimumSource::HorizonSearch,
            ..bound_check(avg, opt.delta_opt, cfg.xi(), cfg.rho, DETERMINISTIC_TOLERANCE)
        },
        Err(_) => BoundReport {
            source: OptimumSource::FullServiceRelaxation,
            ..bound_check(avg, full_service_revenue(trace)?, cfg.xi(), cfg.rho, DETERMINISTIC_TOLERANCE)
        },
    };
    Ok(report)
}

/// Mean with the half-width of a 95% normal-approximation interval.
pub fn mean_with_ci(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, 1.96 * (var / n as f64).sqrt()))
}

/// Mean and standard error.
pub fn mean_and_stderr(values: &[f64]) -> Option<(f64, f64)> {
    mean_with_ci(values).map(|(m, hw)| (m, hw / 1.96))
}
