//! Link evaluations spent by WDR selection and by sum-rate selection.

use d2d_dais::experiment::RunConfig;
use d2d_dais::sim::{run_strategy, Strategy};

fn main() {
    let cfg = RunConfig::default();
    println!(
        "{:>6} {:>14} {:>14} {:>8}",
        "N", "dais/decision", "sum/decision", "ratio"
    );
    for n in [50, 100, 300] {
        let sc = cfg.scenario(n, 1).unwrap();
        let per = |s| {
            let out = run_strategy(s, &sc, &cfg.sim).unwrap();
            let sel: u64 = out.decisions.iter().map(|d| d.link_evaluations).sum();
            sel as f64 / n as f64
        };
        let (w, s) = (per(Strategy::Dais), per(Strategy::SumRate));
        println!("{n:>6} {w:>14.1} {s:>14.1} {:>8.1}", s / w);
    }
}
