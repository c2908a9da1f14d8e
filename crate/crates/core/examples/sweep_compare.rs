//! Small sweep, its summary and the ratio table, written to stdout.

use d2d_dais::experiment::{
    compare, summarize, sweep, write_comparison, write_rows, write_summary, RunConfig,
};
use d2d_dais::Strategy;

fn main() {
    let cfg = RunConfig::default();
    let strategies = [Strategy::Dais, Strategy::NoD2d, Strategy::RandomCluster];
    let rows = sweep(&[50, 200], &[1, 2, 3], &strategies, &cfg).unwrap();

    write_rows(&rows, std::io::stdout()).unwrap();
    println!();
    write_summary(&summarize(&rows), std::io::stdout()).unwrap();
    println!();
    let table = compare(&rows, Strategy::Dais, &strategies[1..]).unwrap();
    write_comparison(&table, std::io::stdout()).unwrap();
}
