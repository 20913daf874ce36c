use std::process::ExitCode;

use clap::Parser;
use covergen::verify::{default_grid, Verdict};
use covergen_cli::{emit_report, list_scenarios, run, Cli, RunConfig};

fn main() -> ExitCode {
    // usage errors exit 64 so they never read as a verdict
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(64);
        }
    };
    if cfg.list_scenarios {
        print!("{}", list_scenarios(&default_grid()));
        if cfg.scenarios.is_empty() {
            return ExitCode::SUCCESS;
        }
    }
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let reports = run(&cfg.scenarios);
    for r in &reports {
        let mark = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        };
        eprintln!("{mark:>12}  {:<44} rel_err={:.3e}", r.scenario, r.rel_err);
    }
    ExitCode::from(emit_report(&reports, cfg.out.as_deref()) as u8)
}
