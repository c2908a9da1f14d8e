//! Generate a scenario, write it out, read it back.

use d2d_dais::experiment::RunConfig;
use d2d_dais::Scenario;

fn main() {
    let cfg = RunConfig::default();
    let sc = cfg.scenario(20, 42).unwrap();
    let dir = std::env::temp_dir();
    let path = dir.join("d2d-dais-example-scenario.json");
    sc.save(&path).unwrap();
    let back = Scenario::load(&path).unwrap();
    assert_eq!(back, sc);
    println!(
        "{} UEs, {} shadow pairs, {} bytes, fingerprint {:016x}",
        back.n_ues,
        back.shadow.pairs().count(),
        std::fs::metadata(&path).unwrap().len(),
        back.fingerprint()
    );
    let first = &back.nodes[0];
    println!(
        "node 0 at ({:.1}, {:.1}) battery {:.3}",
        first.x, first.y, first.battery
    );
    std::fs::remove_file(path).unwrap();
}
