//! Run every built-in cross-check suite and print one line per comparison.
//! This is the same machinery behind `bdfactor verify`.

use bdfactor::verify::{run_suite, Suite};

fn main() -> bdfactor::Result<()> {
    let mut all = true;
    for suite in [Suite::Rw, Suite::RaDarboux, Suite::ArDarboux, Suite::Stieltjes] {
        let report = run_suite(suite)?;
        println!("suite {}:", report.suite);
        for check in &report.checks {
            println!(
                "  [{}] {} ({:.3e} vs {:.1e})",
                if check.pass { "PASS" } else { "FAIL" },
                check.name,
                check.max_error,
                check.threshold
            );
        }
        all &= report.pass;
    }
    println!("{}", if all { "all suites pass" } else { "FAILURES" });
    std::process::exit(if all { 0 } else { 1 });
}
