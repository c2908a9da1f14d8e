//! Comparison strategies: everyone on the BS, random clustering, and mode
//! selection scored by the network-wide sum rate.

use std::cell::Cell;
use std::collections::BTreeMap;

use rand::Rng;

use crate::bdix::{Action, Agent, Goal, Plan, PlanContext, PlanLibrary, PlanOutput, ServePlan};
use crate::channel::LinkRates;
use crate::dais::{
    apply_decision, feasible_candidates, Beliefs, Candidate, ModeDecision, SelectionStats, UeView,
};
use crate::error::{D2dError, Result};
use crate::model::{distance, DaisParams, NodeId, Topology, TransmissionMode};
use crate::scenario::Scenario;

/// Every UE cellular, parent BS.
pub fn no_d2d_assign(scenario: &Scenario) -> Topology {
    scenario.cellular_topology()
}

/// Each UE becomes a cluster head with probability `p_ch`; the rest join
/// the nearest head with room within the WiFi-Direct radius, or stay
/// cellular.
pub fn random_cluster_assign<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
    p_ch: f64,
) -> Result<Topology> {
    if !(0.0..=1.0).contains(&p_ch) {
        return Err(D2dError::InvalidParams(format!(
            "p_ch {p_ch} outside [0, 1]"
        )));
    }
    let mut topo = scenario.cellular_topology();
    let ids: Vec<NodeId> = scenario.ids().collect();
    let heads: Vec<NodeId> = ids
        .iter()
        .copied()
        .filter(|_| rng.random_bool(p_ch))
        .collect();
    for &h in &heads {
        topo.set_mode(h, TransmissionMode::D2dRelay)?;
    }
    let radius = scenario.radio.wifi_direct_radius;
    let cap = topo.limits.d_serving_cap;
    for &u in &ids {
        if heads.binary_search(&u).is_ok() {
            continue;
        }
        let pos = topo.position(u)?;
        let mut best: Option<(f64, NodeId)> = None;
        for &h in &heads {
            let d = distance(pos, topo.position(h)?);
            if d <= radius && topo.node(h)?.served.len() < cap && best.is_none_or(|b| (d, h) < b)
            {
                best = Some((d, h));
            }
        }
        if let Some((_, h)) = best {
            topo.set_mode(u, TransmissionMode::D2dClient)?;
            topo.attach(u, h)?;
        }
    }
    Ok(topo)
}

/// Sum over all UEs of the bottleneck rate of their path, every link
/// evaluated afresh.
pub fn network_sum_rate(topology: &Topology, links: &dyn LinkRates) -> Result<f64> {
    let mut uplink: BTreeMap<NodeId, (NodeId, f64)> = BTreeMap::new();
    for n in topology.nodes() {
        let parent = n.parent.ok_or_else(|| D2dError::TopologyCorruption {
            node: n.id,
            reason: "node has no parent".into(),
        })?;
        uplink.insert(n.id, (parent, links.link_rate(n.id, parent)?));
    }
    let mut delivered: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut total = 0.0;
    for &id in uplink.keys() {
        let mut chain = Vec::new();
        let mut cur = id;
        let mut w = f64::INFINITY;
        while !cur.is_bs() {
            if let Some(&d) = delivered.get(&cur) {
                w = d;
                break;
            }
            if chain.len() > uplink.len() {
                return Err(D2dError::TopologyCorruption {
                    node: id,
                    reason: "cycle on path to BS".into(),
                });
            }
            chain.push(cur);
            cur = uplink.get(&cur).ok_or(D2dError::NotFound(cur))?.0;
        }
        for &c in chain.iter().rev() {
            w = w.min(uplink[&c].1);
            delivered.insert(c, w);
        }
        total += delivered[&id];
    }
    Ok(total)
}

/// Considers every candidate accepted by the five predicates plus the
/// default branch, and keeps the one with the highest network sum rate
/// once applied to a copy of `topology`. Ties keep predicate priority.
pub fn sum_rate_select(
    ue: &UeView,
    beliefs: &Beliefs,
    topology: &Topology,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<(ModeDecision, SelectionStats)> {
    let (mut cands, mut stats) = feasible_candidates(ue, beliefs, params, links)?;
    cands.sort_by(|a, b| {
        a.branch.cmp(&b.branch).then_with(|| {
            if a.beats(b) {
                std::cmp::Ordering::Less
            } else if b.beats(a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    });
    let options = cands
        .iter()
        .map(|c: &Candidate| ModeDecision::new(c.branch, beliefs.get(c.id), ue, params))
        .chain(std::iter::once(ModeDecision::default_for(ue, params)));

    let evals = Cell::new(0u64);
    let counting = |a: NodeId, b: NodeId| {
        evals.set(evals.get() + 1);
        links.link_rate(a, b)
    };
    let mut best: Option<(f64, ModeDecision)> = None;
    for d in options {
        let mut trial = topology.clone();
        match apply_decision(&mut trial, ue.id, &d) {
            Ok(_) => {}
            Err(D2dError::StaleDecision { .. }) => continue,
            Err(e) => return Err(e),
        }
        let s = network_sum_rate(&trial, &counting)?;
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, d));
        }
    }
    stats.link_evaluations += evals.get();
    let decision = best.map_or_else(|| ModeDecision::default_for(ue, params), |(_, d)| d);
    Ok((decision, stats))
}

/// Mode selection by [`sum_rate_select`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SumRatePlan;

impl Plan for SumRatePlan {
    fn run(&self, agent: &Agent, ctx: &PlanContext<'_>) -> Result<PlanOutput> {
        let (d, stats) = sum_rate_select(
            &agent.view(),
            &agent.beliefs,
            ctx.topology,
            ctx.params,
            ctx.links,
        )?;
        Ok(PlanOutput {
            actions: vec![Action::Decide(d)],
            stats,
        })
    }
}

/// The default plan library with mode selection swapped for [`SumRatePlan`].
pub fn sum_rate_plans() -> PlanLibrary {
    let mut lib: PlanLibrary = BTreeMap::new();
    lib.insert(Goal::SelectTransmissionMode, Box::new(SumRatePlan));
    lib.insert(Goal::ServeAttachedClients, Box::new(ServePlan));
    lib
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{RadioParams, TopologyLinks};
    use crate::dais::{select_transmission_mode, Branch, NeighborAdvert};
    use crate::model::{validate_topology, Area, BaseStation, Position, ServingLimits, UeNode};
    use crate::scenario::{generate, stream_rng};
    use crate::wdr::{refresh_all, Wdr};

    fn sc(n: usize, seed: u64) -> Scenario {
        generate(
            n,
            seed,
            Area::default(),
            RadioParams::default(),
            DaisParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn no_d2d_is_all_cellular() {
        let s = sc(10, 1);
        let t = no_d2d_assign(&s);
        assert_eq!(t.len(), 10);
        assert!(t
            .nodes()
            .all(|n| n.mode == TransmissionMode::Cellular && n.parent == Some(NodeId::BS)));
        assert!(validate_topology(&t).is_empty());
        let ch = s.channel();
        let links = TopologyLinks::new(&t, &ch);
        let direct: f64 = t
            .ids()
            .map(|u| links.link_rate(u, NodeId::BS).unwrap())
            .sum();
        assert_eq!(network_sum_rate(&t, &links).unwrap(), direct);
    }

    #[test]
    fn random_cluster_boundaries() {
        let s = sc(50, 3);
        let all = random_cluster_assign(&s, &mut stream_rng(3, 2), 1.0).unwrap();
        assert!(all
            .nodes()
            .all(|n| n.mode == TransmissionMode::D2dRelay && n.served.is_empty()));
        let none = random_cluster_assign(&s, &mut stream_rng(3, 2), 0.0).unwrap();
        assert_eq!(none, no_d2d_assign(&s));
        let a = random_cluster_assign(&s, &mut stream_rng(3, 2), 0.14).unwrap();
        let b = random_cluster_assign(&s, &mut stream_rng(3, 2), 0.14).unwrap();
        assert_eq!(a, b);
        assert!(validate_topology(&a).is_empty());
        for n in a.nodes().filter(|n| n.mode == TransmissionMode::D2dClient) {
            let head = n.parent.unwrap();
            assert!(distance(n.pos, a.position(head).unwrap()) <= 200.0);
        }
        assert!(random_cluster_assign(&s, &mut stream_rng(3, 2), 1.5).is_err());
    }

    #[test]
    fn sum_rate_examples() {
        let mut t = Topology::new(
            BaseStation {
                pos: Position::new(500.0, 500.0),
                antenna_gain_db: 40.0,
            },
            Area::default(),
            ServingLimits::default(),
        );
        let links = |_: NodeId, _: NodeId| Ok(3.976);
        assert_eq!(network_sum_rate(&t, &links).unwrap(), 0.0);
        t.insert(UeNode::new(
            NodeId(0),
            Position::new(1.0, 1.0),
            1.0,
            260.0,
            130.0,
        ))
        .unwrap();
        assert_eq!(network_sum_rate(&t, &links).unwrap(), 3.976);
        t.insert(UeNode::new(
            NodeId(1),
            Position::new(2.0, 1.0),
            1.0,
            260.0,
            130.0,
        ))
        .unwrap();
        assert_eq!(network_sum_rate(&t, &links).unwrap(), 2.0 * 3.976);
        // Client behind a weak relay delivers the relay's bottleneck.
        t.set_mode(NodeId(0), TransmissionMode::D2dRelay).unwrap();
        t.set_mode(NodeId(1), TransmissionMode::D2dClient).unwrap();
        t.attach(NodeId(1), NodeId(0)).unwrap();
        let links = |a: NodeId, _: NodeId| Ok(if a == NodeId(0) { 1.5 } else { 2.0 });
        assert_eq!(network_sum_rate(&t, &links).unwrap(), 3.0);
    }

    fn small_world() -> (Topology, Beliefs, UeView) {
        let mut t = Topology::new(
            BaseStation {
                pos: Position::new(500.0, 500.0),
                antenna_gain_db: 40.0,
            },
            Area::default(),
            ServingLimits::default(),
        );
        let mut r = UeNode::new(NodeId(1), Position::new(450.0, 500.0), 1.0, 260.0, 130.0);
        r.mode = TransmissionMode::D2dRelay;
        t.insert(r).unwrap();
        t.insert(UeNode::new(
            NodeId(0),
            Position::new(400.0, 500.0),
            1.0,
            260.0,
            130.0,
        ))
        .unwrap();
        let links = |a: NodeId, b: NodeId| {
            Ok(if b.is_bs() {
                if a == NodeId(1) {
                    10.0
                } else {
                    2.0
                }
            } else {
                8.0
            })
        };
        refresh_all(&mut t, &links).unwrap();
        let mut beliefs = Beliefs::new(NodeId(0), Wdr::Finite(2.0));
        beliefs.upsert(NeighborAdvert::from_topology(&t, NodeId(1)).unwrap());
        let ue = UeView {
            id: NodeId(0),
            pos: Position::new(400.0, 500.0),
            battery: 1.0,
        };
        (t, beliefs, ue)
    }

    #[test]
    fn dominant_candidate_matches_dais_and_leaves_topology_alone() {
        let (t, beliefs, ue) = small_world();
        let links = |a: NodeId, b: NodeId| {
            Ok(if b.is_bs() {
                if a == NodeId(1) {
                    10.0
                } else {
                    2.0
                }
            } else {
                8.0
            })
        };
        let p = DaisParams::default();
        let before = t.fingerprint();
        let (d, stats) = sum_rate_select(&ue, &beliefs, &t, &p, &links).unwrap();
        assert_eq!(t.fingerprint(), before);
        let dais = select_transmission_mode(&ue, &beliefs, &p, &links).unwrap();
        assert_eq!(d, dais);
        assert_eq!(d.branch, Branch::ConnectAsClient);
        // One candidate link plus two full-network passes of two links.
        assert_eq!(stats.link_evaluations, 1 + 2 * 2);
    }

    #[test]
    fn empty_beliefs_give_default() {
        let (t, _, ue) = small_world();
        let p = DaisParams::default();
        let empty = Beliefs::new(NodeId(0), Wdr::Finite(2.0));
        let links = |_: NodeId, _: NodeId| Ok(1.0);
        let (d, _) = sum_rate_select(&ue, &empty, &t, &p, &links).unwrap();
        assert_eq!(d.branch, Branch::DefaultMhrToBs);
    }
}
