//! Full arrival loop: every UE switches on and decides, then the forest.

use std::collections::BTreeMap;

use d2d_dais::dais::Branch;
use d2d_dais::experiment::RunConfig;
use d2d_dais::metrics::mode_histogram;
use d2d_dais::sim::{run_strategy, Strategy};

fn main() {
    let cfg = RunConfig::default();
    let sc = cfg.scenario(300, 7).unwrap();
    let out = run_strategy(Strategy::Dais, &sc, &cfg.sim).unwrap();

    let mut branches: BTreeMap<Branch, usize> = BTreeMap::new();
    for d in &out.decisions {
        *branches.entry(d.branch).or_default() += 1;
    }
    for (b, n) in branches {
        println!("{b:?}: {n}");
    }
    for (m, n) in mode_histogram(&out.topology) {
        println!("{m}: {n}");
    }
    let per = out.link_evaluations as f64 / sc.n_ues as f64;
    println!(
        "{} link evaluations ({per:.1} per UE)",
        out.link_evaluations
    );
}
