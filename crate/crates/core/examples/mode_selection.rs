//! One UE choosing its transmission mode from a handful of adverts.

use d2d_dais::dais::{select_with_stats, Beliefs, NeighborAdvert, UeView};
use d2d_dais::model::DaisParams;
use d2d_dais::wdr::Wdr;
use d2d_dais::{NodeId, Position, Result, TransmissionMode};

fn advert(id: u32, x: f64, mode: TransmissionMode, wdr: f64, served: usize) -> NeighborAdvert {
    NeighborAdvert {
        id: NodeId(id),
        pos: Position::new(x, 0.0),
        mode,
        wdr: Wdr::Finite(wdr),
        served_count: served,
        battery: 0.9,
    }
}

fn main() {
    let params = DaisParams::default();
    let ue = UeView {
        id: NodeId(0),
        pos: Position::new(0.0, 0.0),
        battery: 0.9,
    };
    let mut beliefs = Beliefs::new(ue.id, Wdr::Finite(1.25));
    beliefs.upsert(advert(1, 60.0, TransmissionMode::D2dRelay, 1.4, 2));
    beliefs.upsert(advert(2, 80.0, TransmissionMode::D2dMultiHopRelay, 3.0, 0));
    beliefs.upsert(advert(3, 150.0, TransmissionMode::D2dRelay, 0.6, 4));

    let links = |_: NodeId, _: NodeId| -> Result<f64> { Ok(5.0) };
    let (d, stats) = select_with_stats(&ue, &beliefs, &params, &links).unwrap();
    println!("{:?} -> target {:?}", d.branch, d.target);
    println!(
        "UE becomes {:?}, target becomes {:?}",
        d.self_mode, d.target_mode
    );
    println!(
        "{} belief entries scanned, {} links evaluated",
        stats.entries_scanned, stats.link_evaluations
    );
}
