//! Perceive, deliberate, execute: the agent trace for a single startup.

use d2d_dais::bdix::{default_plans, Agent, EventKind, PlanContext};
use d2d_dais::dais::NeighborAdvert;
use d2d_dais::model::{Area, BaseStation, DaisParams, ServingLimits};
use d2d_dais::wdr::Wdr;
use d2d_dais::{NodeId, Position, Result, Topology, TransmissionMode};

fn main() {
    let topology = Topology::new(
        BaseStation {
            pos: Position::new(500.0, 500.0),
            antenna_gain_db: 40.0,
        },
        Area::default(),
        ServingLimits::default(),
    );
    let params = DaisParams::default();
    let links = |_: NodeId, _: NodeId| -> Result<f64> { Ok(4.0) };
    let ctx = PlanContext {
        topology: &topology,
        params: &params,
        links: &links,
    };

    let mut agent = Agent::new(NodeId(7), Position::new(100.0, 100.0), 0.8, default_plans())
        .unwrap()
        .with_log();
    agent.enqueue(EventKind::NeighborAdvertReceived(NeighborAdvert {
        id: NodeId(3),
        pos: Position::new(140.0, 100.0),
        mode: TransmissionMode::D2dRelay,
        wdr: Wdr::Finite(6.0),
        served_count: 1,
        battery: 0.9,
    }));
    agent.enqueue(EventKind::AgentStartup { bs_link_rate: 2.0 });
    let out = agent.run_to_quiescence(&ctx).unwrap();

    for entry in agent.log() {
        println!("{entry:?}");
    }
    println!("actions: {:?}", out.actions);
}
