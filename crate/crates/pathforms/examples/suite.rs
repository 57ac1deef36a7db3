//! Run a small structure suite the way the CLI does and write its report.

use pathforms::experiments::report::{emit_report, format_table};
use pathforms::experiments::{run_suite, RunConfig};

fn main() -> pathforms::Result<()> {
    let cfg = RunConfig { steps: 32, samples: 500, suite: vec!["structure".into()], ..RunConfig::default() };
    cfg.validate()?;
    let report = run_suite(&cfg)?;
    print!("{}", format_table(&report));
    let dir = std::env::temp_dir().join("pathforms-example");
    for p in emit_report(&report, &dir, false)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
