//! Writes CSV, JSON and SVG renderings of a run to a temporary directory.

use crowdasm::metrics::{bound_for_trace, export_report, Format};
use crowdasm::{fixtures, run, Policy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = fixtures::load("long_service")?;
    let trace = run(&cfg, Policy::CrowdAsm)?;
    let bound = bound_for_trace(&trace)?;
    let dir = std::env::temp_dir().join(format!("crowdasm-example-{}", std::process::id()));
    let files = export_report(&[(trace, Some(bound))], &dir, &[Format::Csv, Format::Json, Format::Svg])?;
    for f in &files {
        println!("{} ({} bytes)", f.display(), std::fs::metadata(f)?.len());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
