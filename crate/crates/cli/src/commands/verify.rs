use dbar_core::verify::run_suites;

use super::Outcome;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Output;

pub fn cmd_verify(cfg: &RunConfig, out: &Output, quiet: bool) -> Result<Outcome, CliError> {
    let report = run_suites(cfg.run.seed, cfg.verify.fixture()?)?;
    out.write("verify.csv", |w, h| report.write_csv(w, h))?;
    if !quiet {
        for row in report.failures() {
            eprintln!(
                "FAIL {}/{}: {:.3e} > {:.3e}",
                row.suite, row.check, row.value, row.tolerance
            );
        }
        let failed = report.failures().count();
        println!("checks={} failed={failed}", report.rows.len());
    }
    Ok(if report.all_passed() {
        Outcome::Success
    } else {
        Outcome::VerifyFailed
    })
}
