//! CSV, JSON and SVG renderings of simulation traces. Every writer is a pure
//! function of its inputs, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{average_backlog, drift_series, time_averaged_profit, BoundReport};
use crate::domain::DemandForm;
use crate::oracle::Policy;
use crate::simulator::SimulationTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format '{other}' (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub policy: Policy,
    pub seed: u64,
    pub demand_form: DemandForm,
    pub horizon: u64,
    pub avg_profit: Option<f64>,
    pub avg_backlog: Option<f64>,
    pub total_mobilized: u64,
    pub total_spend: f64,
    pub demanded_tasks: u64,
    pub served_tasks: u64,
    pub negative_demand_clamps: u64,
    pub bound: Option<BoundReport>,
}

impl RunSummary {
    pub fn from_trace(trace: &SimulationTrace, bound: Option<BoundReport>) -> Self {
        let steps = &trace.steps;
        RunSummary {
            config_hash: trace.header.config_hash.clone(),
            policy: trace.header.policy,
            seed: trace.header.seed,
            demand_form: trace.header.demand_form,
            horizon: trace.header.horizon,
            avg_profit: time_averaged_profit(trace).ok(),
            avg_backlog: average_backlog(trace).ok(),
            total_mobilized: steps.iter().flat_map(|s| &s.plan.a).map(|&a| u64::from(a)).sum(),
            total_spend: steps.iter().map(|s| s.plan.total_cost).sum(),
            demanded_tasks: steps.iter().flat_map(|s| &s.demand).map(|&n| u64::from(n)).sum(),
            served_tasks: steps.iter().flat_map(|s| &s.served_tasks).map(|&n| u64::from(n)).sum(),
            negative_demand_clamps: trace.diagnostics.negative_clamps,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub run_count: usize,
    pub runs: Vec<RunSummary>,
}

pub fn summary_json(runs: &[RunSummary]) -> String {
    let doc = SummaryDocument {
        run_count: runs.len(),
        runs: runs.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
    text.push('\n');
    text
}

/// Per-step table: `t`, `q_m`, `T_k`, `T_served_k`, `d_k`, `a_m`, `cost`,
/// `delta`, `realized_revenue`, `lyapunov`.
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let skills = trace.header.config.skills;
    let types = trace.header.config.task_types.len();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# config_hash={} policy={} seed={} demand_form={}",
        trace.header.config_hash, trace.header.policy, trace.header.seed, trace.header.demand_form
    );
    let mut header = vec!["t".to_string()];
    header.extend((0..skills).map(|m| format!("q_{m}")));
    header.extend((0..types).map(|k| format!("T_{k}")));
    header.extend((0..types).map(|k| format!("T_served_{k}")));
    header.extend((0..types).map(|k| format!("d_{k}")));
    header.extend((0..skills).map(|m| format!("a_{m}")));
    header.extend(["cost", "delta", "realized_revenue", "lyapunov"].map(String::from));
    let _ = writeln!(out, "{}", header.join(","));

    for s in &trace.steps {
        let mut row = vec![s.t.to_string()];
        row.extend(s.q_before.iter().map(u32::to_string));
        row.extend(s.demand.iter().map(u32::to_string));
        row.extend(s.served_tasks.iter().map(u32::to_string));
        row.extend(s.plan.served.iter().map(|&d| u8::from(d).to_string()));
        row.extend(s.plan.a.iter().map(u32::to_string));
        row.push(s.plan.scored_cost.to_string());
        row.push(s.expected_profit.to_string());
        row.push(s.realized_revenue.to_string());
        row.push(s.lyapunov.to_string());
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub entry: usize,
    pub overrides: String,
    pub report: BoundReport,
    pub avg_backlog: Option<f64>,
}

pub fn bound_table_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from(
        "entry,overrides,rho,xi,delta_opt,source,avg_profit,bound_rhs,margin,satisfied,avg_backlog\n",
    );
    for row in rows {
        let r = &row.report;
        let source = serde_json::to_value(r.source)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},\"{}\",{},{},{},{},{},{},{},{},{}",
            row.entry,
            row.overrides.replace('"', "\"\""),
            r.rho,
            r.xi,
            r.delta_opt,
            source,
            r.avg_profit,
            r.bound_rhs,
            r.margin,
            r.satisfied,
            row.avg_backlog.map_or_else(String::new, |b| b.to_string()),
        );
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Self-contained static line chart, one polyline per series.
pub fn line_chart_svg(title: &str, series: &[(String, Vec<f64>)]) -> String {
    let (w, h) = (640.0, 360.0);
    let (left, right, top, bottom) = (56.0, 16.0, 32.0, 40.0);
    let points: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let x = |i: usize| left + (w - left - right) * i as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| top + (h - top - bottom) * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        svg,
        r##"<g stroke="#444"><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/><line x1="{left}" y1="{}" x2="{}" y2="{}"/></g>"##,
        h - bottom,
        h - bottom,
        w - right,
        h - bottom
    );
    let _ = writeln!(svg, r#"<text x="4" y="{}">{hi:.2}</text>"#, top + 4.0);
    let _ = writeln!(svg, r#"<text x="4" y="{}">{lo:.2}</text>"#, h - bottom);
    let _ = writeln!(svg, r#"<text x="{}" y="{}">t</text>"#, w / 2.0, h - 8.0);
    for (i, (name, values)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            w - right - 120.0,
            top + 14.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn charts(trace: &SimulationTrace) -> Vec<(&'static str, String)> {
    let profit: Vec<f64> = trace.steps.iter().map(|s| s.expected_profit).collect();
    let mut out = vec![(
        "profit.svg",
        line_chart_svg("expected profit per step", &[("delta".to_string(), profit)]),
    )];
    let queues: Vec<(String, Vec<f64>)> = (0..trace.header.config.skills)
        .map(|m| {
            (
                format!("q_{m}"),
                trace.steps.iter().map(|s| f64::from(s.q_before[m])).collect(),
            )
        })
        .collect();
    out.push(("queues.svg", line_chart_svg("available workers per skill", &queues)));
    if let Ok(drift) = drift_series(trace) {
        out.push(("drift.svg", line_chart_svg("Lyapunov drift", &[("drift".to_string(), drift)])));
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> io::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

/// Writes the requested renderings of `runs` into `dir` and returns the
/// files written. A single run gets unprefixed file names; several runs get
/// one `run_NNN` prefix each. `summary.json` always covers every run.
pub fn export_report(
    runs: &[(SimulationTrace, Option<BoundReport>)],
    dir: &Path,
    formats: &[Format],
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let prefix = |i: usize| {
        if runs.len() == 1 {
            String::new()
        } else {
            format!("run_{i:03}_")
        }
    };
    for (i, (trace, _)) in runs.iter().enumerate() {
        let p = prefix(i);
        if formats.contains(&Format::Csv) {
            write(dir, &format!("{p}trace.csv"), &trace_csv(trace), &mut written)?;
        }
        if formats.contains(&Format::Json) {
            let text = serde_json::to_string(trace).map_err(io::Error::other)?;
            write(dir, &format!("{p}trace.json"), &text, &mut written)?;
        }
        if formats.contains(&Format::Svg) {
            for (name, svg) in charts(trace) {
                write(dir, &format!("{p}{name}"), &svg, &mut written)?;
            }
        }
    }
    if formats.contains(&Format::Json) || runs.is_empty() {
        let summaries: Vec<RunSummary> = runs
            .iter()
            .map(|(trace, bound)| RunSummary::from_trace(trace, bound.clone()))
            .collect();
        write(dir, "summary.json", &summary_json(&summaries), &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MarketConfig;
    use crate::metrics::bound_check;
    use crate::simulator::run;

    #[test]
    fn empty_report_has_zero_runs() {
        let dir = tempfile::tempdir().unwrap();
        let files = export_report(&[], dir.path(), &[Format::Csv]).unwrap();
        assert_eq!(files, vec![dir.path().join("summary.json")]);
        let doc: SummaryDocument = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(doc.run_count, 0);
        assert!(doc.runs.is_empty());
    }

    #[test]
    fn identical_runs_give_identical_bytes() {
        let cfg = MarketConfig::default();
        let a = run(&cfg, Policy::CrowdAsm).unwrap();
        let b = run(&cfg, Policy::CrowdAsm).unwrap();
        assert_eq!(trace_csv(&a), trace_csv(&b));
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let all = [Format::Csv, Format::Json, Format::Svg];
        let f1 = export_report(&[(a, None)], d1.path(), &all).unwrap();
        let f2 = export_report(&[(b, None)], d2.path(), &all).unwrap();
        assert_eq!(f1.len(), f2.len());
        for (x, y) in f1.iter().zip(&f2) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let names: Vec<_> = f1.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert!(names.contains(&"drift.svg".to_string()));
    }

    #[test]
    fn csv_columns_follow_the_schema() {
        let trace = run(&MarketConfig { horizon: 2, ..MarketConfig::default() }, Policy::CrowdAsm).unwrap();
        let text = trace_csv(&trace);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config_hash="));
        assert_eq!(
            lines.next().unwrap(),
            "t,q_0,q_1,T_0,T_1,T_served_0,T_served_1,d_0,d_1,a_0,a_1,cost,delta,realized_revenue,lyapunov"
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn rho_sweep_table_has_increasing_rhs() {
        let rows: Vec<BoundRow> = [0.5, 1.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &rho)| BoundRow {
                entry: i,
                overrides: format!("rho={rho}"),
                report: bound_check(1.0, 2.0, 6.5, rho, 1e-9),
                avg_backlog: Some(1.0),
            })
            .collect();
        let table = bound_table_csv(&rows);
        assert_eq!(table.lines().count(), 4);
        let rhs: Vec<f64> = table
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(7).unwrap().parse().unwrap())
            .collect();
        assert!(rhs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn svg_is_self_contained() {
        let svg = line_chart_svg("a<b", &[("x".into(), vec![1.0, 2.0, 0.5])]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("href"));
        assert!(line_chart_svg("flat", &[("x".into(), vec![])]).contains("</svg>"));
    }
}
