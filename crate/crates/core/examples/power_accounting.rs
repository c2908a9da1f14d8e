//! Transmit power of hand-built clusters.

use d2d_dais::metrics::{cluster_stats, power_saved, total_tx_power};
use d2d_dais::model::{Area, BaseStation, ServingLimits, UeNode};
use d2d_dais::{NodeId, Position, Topology, TransmissionMode};

fn main() {
    let mut t = Topology::new(
        BaseStation {
            pos: Position::new(500.0, 500.0),
            antenna_gain_db: 40.0,
        },
        Area::default(),
        ServingLimits::default(),
    );
    for i in 0..11 {
        t.insert(UeNode::new(
            NodeId(i),
            Position::new(100.0 + i as f64, 100.0),
            0.9,
            260.0,
            130.0,
        ))
        .unwrap();
    }
    println!("all cellular: {} mW", total_tx_power(&t));

    t.set_mode(NodeId(10), TransmissionMode::D2dRelay).unwrap();
    for i in 0..10 {
        t.set_mode(NodeId(i), TransmissionMode::D2dClient).unwrap();
        t.attach(NodeId(i), NodeId(10)).unwrap();
    }
    println!(
        "one relay, ten clients: {} mW, {} mW saved, clusters {:?}",
        total_tx_power(&t),
        power_saved(&t),
        cluster_stats(&t)
    );
}
