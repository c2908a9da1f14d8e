//! The three comparison strategies against DAIS on a single scenario.

use d2d_dais::experiment::RunConfig;
use d2d_dais::metrics::measure_decisions;
use d2d_dais::Strategy;

fn main() {
    let cfg = RunConfig::default();
    let sc = cfg.scenario(200, 4).unwrap();
    println!(
        "{:<15} {:>10} {:>10} {:>9} {:>11}",
        "strategy", "SE", "power", "clusters", "link evals"
    );
    for s in Strategy::ALL {
        let m = measure_decisions(s, &sc, &cfg.sim).unwrap();
        println!(
            "{:<15} {:>10.2} {:>10.0} {:>9} {:>11}",
            s.name(),
            m.spectral_efficiency,
            m.total_tx_power,
            m.cluster_count,
            m.link_evaluations
        );
    }
}
