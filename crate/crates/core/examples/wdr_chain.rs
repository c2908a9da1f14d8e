//! Bottleneck rates along a relay chain, and how re-parenting refreshes them.

use d2d_dais::model::{Area, BaseStation, Position, ServingLimits, UeNode};
use d2d_dais::wdr::{cached_wdr, refresh_all};
use d2d_dais::{NodeId, Result, Topology, TransmissionMode};

fn main() {
    let mut t = Topology::new(
        BaseStation {
            pos: Position::new(500.0, 500.0),
            antenna_gain_db: 40.0,
        },
        Area::default(),
        ServingLimits::default(),
    );
    let modes = [
        TransmissionMode::D2dMultiHopRelay,
        TransmissionMode::D2dRelay,
        TransmissionMode::D2dClient,
    ];
    for (i, m) in modes.into_iter().enumerate() {
        let mut n = UeNode::new(
            NodeId(i as u32),
            Position::new(400.0 - 50.0 * i as f64, 500.0),
            1.0,
            260.0,
            130.0,
        );
        n.mode = m;
        t.insert(n).unwrap();
    }
    t.attach(NodeId(1), NodeId(0)).unwrap();
    t.attach(NodeId(2), NodeId(1)).unwrap();

    // made-up rates: strong backhaul, weak middle hop
    let links = |a: NodeId, _b: NodeId| -> Result<f64> { Ok([6.0, 1.5, 4.0][a.0 as usize]) };
    refresh_all(&mut t, &links).unwrap();
    for id in t.ids() {
        println!(
            "{id}: {:?} wdr {}",
            t.node(id).unwrap().mode,
            cached_wdr(&t, id).unwrap()
        );
    }
}
