//! Command-line front end: `run`, `sweep`, `verify` and `report`.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;

use crate::domain::{validate_config, MarketConfig};
use crate::fixtures;
use crate::generate::random_tiny_instance;
use crate::metrics::{
    bound_check, bound_for_trace, bound_table_csv, export_report, summary_json, BoundReport, BoundRow, Format,
    OptimumSource, RunSummary, DETERMINISTIC_TOLERANCE,
};
use crate::oracle::{brute_force_mobilization, horizon_optimal_profit, Policy};
use crate::scheduler::{plan_mobilization, SkillQueueState};
use crate::simulator::{run, SimulationTrace};

#[derive(Debug, Parser)]
#[command(name = "crowdasm", version, about = "Budgeted team assembly for collaborative crowdsourcing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its trace and report.
    Run(RunArgs),
    /// Run the cross product of comma-separated override lists.
    Sweep(RunArgs),
    /// Oracle-equivalence and profit-bound checks on bundled instances.
    Verify(VerifyArgs),
    /// Re-render reports from stored `trace.json` files.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, env = "CROWDASM_OUT", default_value = "crowdasm-out")]
    pub out: PathBuf,
    /// Repeatable; defaults to csv and json.
    #[arg(long = "format")]
    pub formats: Vec<Format>,
}

impl OutputArgs {
    fn formats(&self) -> Vec<Format> {
        if self.formats.is_empty() {
            vec![Format::Csv, Format::Json]
        } else {
            self.formats.clone()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario JSON file, or the name of a bundled fixture. Built-in defaults when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = "crowdasm")]
    pub policy: Policy,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted-key override `KEY=VALUE`, e.g. `rho=2` or `task_types.0.price=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Random tiny instances for the per-step oracle comparison.
    #[arg(long, default_value_t = 500)]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Stored trace JSON; repeatable.
    #[arg(long = "trace", required = true)]
    pub traces: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("crowdasm: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::Verify(args) => verify_command(args),
        Command::Report(args) => report_command(args),
    }
}

/// Reads a scenario file, falling back to bundled fixtures by name
/// (`tiny3` or `tiny3.json`).
pub fn load_scenario(path: Option<&Path>) -> Result<Value, CliError> {
    let Some(path) = path else {
        return Ok(serde_json::to_value(MarketConfig::default()).expect("config serializes"));
    };
    let text = if path.exists() {
        fs::read_to_string(path)?
    } else {
        let name = path.to_string_lossy();
        let name = name.strip_suffix(".json").unwrap_or(&name);
        let bundled = fixtures::SCRIPTED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| *text)
            .or((name == "stress").then_some(fixtures::STRESS));
        match bundled {
            Some(text) => text.to_string(),
            None => return Err(CliError::Io(format!("{}: no such file or bundled fixture", path.display()))),
        }
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `key` (dotted, numeric segments index arrays) to `raw` parsed as
/// JSON, or as a string when it is not valid JSON.
pub fn apply_override(config: &mut Value, key: &str, raw: &str) -> Result<(), CliError> {
    let mut node = config;
    for segment in key.split('.') {
        if let Value::Object(map) = node {
            if !map.contains_key(segment) {
                map.insert(segment.to_string(), Value::Null);
            }
        }
        node = match node {
            Value::Object(map) => map.get_mut(segment).expect("inserted above"),
            Value::Array(items) => {
                let len = items.len();
                segment
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| items.get_mut(i))
                    .ok_or_else(|| CliError::Usage(format!("--set {key}: index '{segment}' out of range 0..{len}")))?
            }
            _ => return Err(CliError::Usage(format!("--set {key}: '{segment}' does not name a field"))),
        };
    }
    *node = parse_value(raw);
    Ok(())
}

fn split_override(entry: &str) -> Result<(&str, &str), CliError> {
    entry
        .split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{entry}'")))
}

/// Applies overrides and the seed, then validates.
pub fn effective_config(
    base: &Value,
    overrides: &[(String, String)],
    seed: Option<u64>,
) -> Result<MarketConfig, CliError> {
    let mut value = base.clone();
    for (k, v) in overrides {
        apply_override(&mut value, k, v)?;
    }
    if let Some(seed) = seed {
        value["seed"] = Value::from(seed);
    }
    let cfg: MarketConfig =
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid scenario: {e}")))?;
    validate_config(cfg).map_err(|e| CliError::Usage(e.to_string()))
}

fn simulate(cfg: &MarketConfig, policy: Policy) -> Result<(SimulationTrace, Option<BoundReport>), CliError> {
    let trace = run(cfg, policy).map_err(|e| CliError::Usage(e.to_string()))?;
    let bound = bound_for_trace(&trace).ok();
    Ok((trace, bound))
}

fn log_run(label: &str, trace: &SimulationTrace, bound: Option<&BoundReport>) {
    let summary = RunSummary::from_trace(trace, bound.cloned());
    eprintln!(
        "{label}: policy={} seed={} steps={} avg_profit={} avg_backlog={}{}",
        summary.policy,
        summary.seed,
        trace.steps.len(),
        summary.avg_profit.map_or_else(|| "n/a".into(), |p| format!("{p:.6}")),
        summary.avg_backlog.map_or_else(|| "n/a".into(), |b| format!("{b:.3}")),
        bound.map_or_else(String::new, |b| format!(" bound_satisfied={}", b.satisfied)),
    );
}

fn run_command(args: &RunArgs) -> Result<(), CliError> {
    let base = load_scenario(args.scenario.as_deref())?;
    let overrides = args
        .overrides
        .iter()
        .map(|e| split_override(e).map(|(k, v)| (k.to_string(), v.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = effective_config(&base, &overrides, args.seed)?;
    let (trace, bound) = simulate(&cfg, args.policy)?;
    log_run("run", &trace, bound.as_ref());
    export_report(&[(trace, bound)], &args.output.out, &args.output.formats())?;
    Ok(())
}

/// Expands `--set` entries into the cross product of their comma lists.
/// The first key varies slowest. Values starting with `[` or `{` are taken
/// whole.
pub fn sweep_entries(overrides: &[String]) -> Result<Vec<Vec<(String, String)>>, CliError> {
    let mut entries: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for raw in overrides {
        let (key, values) = split_override(raw)?;
        let values: Vec<&str> = if values.starts_with('[') || values.starts_with('{') {
            vec![values]
        } else {
            values.split(',').collect()
        };
        entries = entries
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut e = prefix.clone();
                    e.push((key.to_string(), v.to_string()));
                    e
                })
            })
            .collect();
    }
    Ok(entries)
}

fn sweep_command(args: &RunArgs) -> Result<(), CliError> {
    let base = load_scenario(args.scenario.as_deref())?;
    let entries = sweep_entries(&args.overrides)?;
    let configs = entries
        .iter()
        .map(|e| effective_config(&base, e, args.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<_> = configs
        .par_iter()
        .map(|cfg| simulate(cfg, args.policy))
        .collect::<Result<_, _>>()?;

    let out = &args.output.out;
    let formats = args.output.formats();
    let mut rows = Vec::new();
    for (i, ((trace, bound), entry)) in results.iter().zip(&entries).enumerate() {
        let label = entry.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
        log_run(&format!("entry {i} [{label}]"), trace, bound.as_ref());
        export_report(&[(trace.clone(), bound.clone())], &out.join(format!("entry_{i:03}")), &formats)?;
        if let Some(report) = bound {
            rows.push(BoundRow {
                entry: i,
                overrides: label,
                report: report.clone(),
                avg_backlog: crate::metrics::average_backlog(trace).ok(),
            });
        }
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("bound_table.csv"), bound_table_csv(&rows))?;
    let summaries: Vec<RunSummary> = results
        .iter()
        .map(|(t, b)| RunSummary::from_trace(t, b.clone()))
        .collect();
    fs::write(out.join("summary.json"), summary_json(&summaries))?;
    Ok(())
}

/// One named check of the verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Per-step controller objective against the exhaustive minimum on `count`
/// random tiny instances.
pub fn check_oracle_equivalence(count: u64, seed: u64) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for i in 0..count {
        let inst = random_tiny_instance(seed.wrapping_add(i));
        let state = SkillQueueState::observe(&inst.workers, inst.config.skills, inst.config.epsilon);
        let plan = plan_mobilization(&state, &inst.workers, &inst.batch, &inst.config);
        match brute_force_mobilization(&state, &inst.workers, &inst.batch, &inst.config, &plan.served) {
            Ok(r) => {
                let diff = (r.best_objective - plan.objective()).abs();
                worst = worst.max(diff);
                if diff > 1e-12 {
                    failures.push(format!("instance {i}: diff {diff:e}"));
                }
            }
            Err(e) => failures.push(format!("instance {i}: {e}")),
        }
    }
    CheckOutcome {
        name: format!("oracle equivalence on {count} tiny instances"),
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("max |diff| = {worst:e}")
        } else {
            failures.join("; ")
        },
    }
}

pub const BOUND_RHOS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];

/// Profit bound on one bundled scripted fixture for every rho in
/// [`BOUND_RHOS`], against both the recomputed and the frozen optimum.
pub fn check_fixture_bound(name: &str, cfg: &MarketConfig) -> CheckOutcome {
    let mut problems = Vec::new();
    let mut margins = Vec::new();
    let frozen = fixtures::expected(name).map(|e| e.delta_opt);
    for rho in BOUND_RHOS {
        let cfg = MarketConfig { rho, ..cfg.clone() };
        let opt = match horizon_optimal_profit(&cfg) {
            Ok(o) => o.delta_opt,
            Err(e) => {
                problems.push(format!("rho {rho}: {e}"));
                continue;
            }
        };
        if let Some(f) = frozen {
            if (f - opt).abs() > DETERMINISTIC_TOLERANCE {
                problems.push(format!("optimum {opt} drifted from frozen {f}"));
            }
        }
        match run(&cfg, Policy::CrowdAsm) {
            Ok(trace) => {
                let avg = crate::metrics::time_averaged_profit(&trace).unwrap_or(f64::NAN);
                let report = BoundReport {
                    source: OptimumSource::HorizonSearch,
                    ..bound_check(avg, opt, cfg.xi(), rho, DETERMINISTIC_TOLERANCE)
                };
                if !report.satisfied {
                    problems.push(format!("rho {rho}: margin {}", report.margin));
                }
                margins.push(report.margin);
            }
            Err(e) => problems.push(format!("rho {rho}: {e}")),
        }
    }
    CheckOutcome {
        name: format!("profit bound on {name}"),
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "min margin {:.6}",
                margins.iter().copied().fold(f64::INFINITY, f64::min)
            )
        } else {
            problems.join("; ")
        },
    }
}

pub fn verification_suite(instances: u64, seed: u64) -> Vec<CheckOutcome> {
    let mut out = vec![check_oracle_equivalence(instances, seed)];
    out.extend(fixtures::scripted().map(|(name, cfg)| check_fixture_bound(name, &cfg)));
    out
}

fn verify_command(args: &VerifyArgs) -> Result<(), CliError> {
    let outcomes = verification_suite(args.instances, args.seed);
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn report_command(args: &ReportArgs) -> Result<(), CliError> {
    let mut runs = Vec::new();
    for path in &args.traces {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let trace: SimulationTrace =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let bound = bound_for_trace(&trace).ok();
        runs.push((trace, bound));
    }
    let files = export_report(&runs, &args.output.out, &args.output.formats())?;
    eprintln!("report: {} run(s), {} file(s) written", runs.len(), files.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_overrides_reach_nested_fields() {
        let mut v = serde_json::to_value(MarketConfig::default()).unwrap();
        apply_override(&mut v, "task_types.1.price", "2.5").unwrap();
        apply_override(&mut v, "demand_mode", "poisson").unwrap();
        apply_override(&mut v, "mobilization_cap", "[1,1]").unwrap();
        let cfg: MarketConfig = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(cfg.task_types[1].price, 2.5);
        assert_eq!(cfg.mobilization_cap, vec![1, 1]);
        assert!(apply_override(&mut v, "task_types.9.price", "1").is_err());
        assert!(apply_override(&mut v, "rho.x", "1").is_err());
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let base = serde_json::to_value(MarketConfig::default()).unwrap();
        let err = effective_config(&base, &[("rhoo".into(), "1".into())], None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let err = effective_config(&base, &[("rho".into(), "-1".into())], None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn sweep_expands_in_override_order() {
        let e = sweep_entries(&["rho=0.1,1".into(), "epsilon=0.4,0.6".into()]).unwrap();
        let flat: Vec<String> = e
            .iter()
            .map(|x| x.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(
            flat,
            ["rho=0.1 epsilon=0.4", "rho=0.1 epsilon=0.6", "rho=1 epsilon=0.4", "rho=1 epsilon=0.6"]
        );
        assert_eq!(sweep_entries(&["mobilization_cap=[1,2]".into()]).unwrap().len(), 1);
        assert_eq!(sweep_entries(&[]).unwrap(), vec![Vec::new()]);
    }

    #[test]
    fn bundled_names_resolve() {
        assert!(load_scenario(Some(Path::new("tiny3.json"))).is_ok());
        assert!(load_scenario(Some(Path::new("stress"))).is_ok());
        assert_eq!(load_scenario(Some(Path::new("missing.json"))).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn parse_errors_map_to_usage() {
        assert_eq!(main_with_args(["crowdasm", "frobnicate"]), 1);
        assert_eq!(main_with_args(["crowdasm", "run", "--policy", "greedy"]), 1);
        assert_eq!(main_with_args(["crowdasm", "report"]), 1);
        assert_eq!(main_with_args(["crowdasm", "--help"]), 0);
    }
}
