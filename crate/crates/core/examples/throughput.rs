//! Times one full-scale run (100k agents x 1000 steps) and reports the
//! agent-update rate.

use std::time::Instant;

use genai_abm::{run_ensemble, ModelParams};

fn main() {
    let runs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let params = ModelParams::full_scale();
    let start = Instant::now();
    let ens = run_ensemble(&params, runs).expect("valid preset");
    let secs = start.elapsed().as_secs_f64();
    let updates = (params.n_agents * params.n_steps * runs) as f64;
    println!(
        "{runs} run(s) on {} thread(s): {secs:.2} s, {:.3e} agent-updates/s (final adoption {:.4})",
        rayon::current_num_threads(),
        updates / secs,
        ens[0].rows.last().unwrap().adoption
    );
}
