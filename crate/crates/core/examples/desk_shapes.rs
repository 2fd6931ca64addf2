//! Runs the default desk configuration and prints the shape report.

use genai_abm::{run_ensemble, shape_check, summarize, ModelParams};

fn main() {
    let params = ModelParams::default();
    let runs = run_ensemble(&params, 10).expect("valid defaults");
    let summary = summarize(&runs).expect("shared grid");
    for check in shape_check(&summary, &params).checks {
        println!(
            "{:<20} {}",
            check.kind.name(),
            if check.passed { "pass" } else { "FAIL" }
        );
        for d in check.diagnostics {
            println!("    {:<26} {:?}", d.name, d.value);
        }
    }
}
