//! Runs every acceptance check and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let start = Instant::now();
    let report = hamcap::verify::run_all();
    println!();
    for c in &report.criteria {
        println!("{}", c.line());
        for d in &c.details {
            println!("      {d}");
        }
    }
    println!(
        "\nacceptance: {} of {} criteria passed in {:.1} s",
        report.criteria.iter().filter(|c| c.pass).count(),
        report.criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
