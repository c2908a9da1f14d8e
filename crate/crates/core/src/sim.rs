//! The arrival loop: UEs switch on one by one in a seeded order, each
//! agent hears the adverts of serving nodes within LTE-Direct range,
//! decides once, and the forest is updated before the next arrival.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::baselines::{no_d2d_assign, random_cluster_assign, sum_rate_plans};
use crate::bdix::{default_plans, Action, Agent, EventKind, PlanContext, PlanLibrary};
use crate::channel::{LinkRates, TopologyLinks};
use crate::dais::{apply_decision, Branch, ModeDecision, NeighborAdvert};
use crate::error::{D2dError, Result};
use crate::model::{distance, validate_topology, NodeId, Topology};
use crate::scenario::{stream_rng, Scenario, STREAM_CLUSTERING};
use crate::wdr::{refresh_all, refresh_subtree, Wdr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Dais,
    SumRate,
    RandomCluster,
    NoD2d,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Dais,
        Strategy::SumRate,
        Strategy::RandomCluster,
        Strategy::NoD2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Dais => "dais",
            Strategy::SumRate => "sum_rate",
            Strategy::RandomCluster => "random_cluster",
            Strategy::NoD2d => "no_d2d",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = D2dError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| D2dError::InvalidParams(format!("unknown strategy '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Head probability of the random-clustering baseline.
    pub p_ch: f64,
    /// Measure wall-clock decision time. Off keeps output byte-stable.
    pub timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            p_ch: 0.14,
            timing: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionRecord {
    pub ue: NodeId,
    pub branch: Branch,
    pub target: Option<NodeId>,
    /// Link evaluations spent by the selection plan.
    pub link_evaluations: u64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub topology: Topology,
    /// One record per arrival; empty for the centralised baselines.
    pub decisions: Vec<DecisionRecord>,
    /// Every link evaluated while building the topology.
    pub link_evaluations: u64,
    pub decision_time: Duration,
}

pub fn run_strategy(
    strategy: Strategy,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<RunOutcome> {
    match strategy {
        Strategy::Dais => run_agents(scenario, default_plans, cfg.timing),
        Strategy::SumRate => run_agents(scenario, sum_rate_plans, cfg.timing),
        Strategy::NoD2d => run_centralised(scenario, cfg.timing, |s| Ok(no_d2d_assign(s))),
        Strategy::RandomCluster => run_centralised(scenario, cfg.timing, |s| {
            random_cluster_assign(s, &mut stream_rng(s.seed, STREAM_CLUSTERING), cfg.p_ch)
        }),
    }
}

fn run_centralised(
    scenario: &Scenario,
    timing: bool,
    assign: impl FnOnce(&Scenario) -> Result<Topology>,
) -> Result<RunOutcome> {
    let t0 = timing.then(Instant::now);
    let mut topology = assign(scenario)?;
    let decision_time = t0.map(|t| t.elapsed()).unwrap_or_default();
    let geometry = scenario.cellular_topology();
    let channel = scenario.channel();
    let counter = Cell::new(0);
    refresh_all(
        &mut topology,
        &TopologyLinks::counted(&geometry, &channel, &counter),
    )?;
    finish(topology, Vec::new(), counter.get(), decision_time)
}

fn finish(
    topology: Topology,
    decisions: Vec<DecisionRecord>,
    evals: u64,
    time: Duration,
) -> Result<RunOutcome> {
    let violations = validate_topology(&topology);
    if let Some(v) = violations.first() {
        return Err(D2dError::Invariant(format!(
            "{} violation(s), first: {v:?}",
            violations.len()
        )));
    }
    Ok(RunOutcome {
        topology,
        decisions,
        link_evaluations: evals,
        decision_time: time,
    })
}

/// Arrival loop with one agent per UE, built from `plans`.
pub fn run_agents(
    scenario: &Scenario,
    plans: impl Fn() -> PlanLibrary,
    timing: bool,
) -> Result<RunOutcome> {
    run_agents_observed(scenario, plans, timing, &mut |_, _| Ok(()))
}

/// [`run_agents`], calling `observe` with the topology after each decision
/// has been applied and its caches refreshed.
pub fn run_agents_observed(
    scenario: &Scenario,
    plans: impl Fn() -> PlanLibrary,
    timing: bool,
    observe: &mut dyn FnMut(&Topology, &DecisionRecord) -> Result<()>,
) -> Result<RunOutcome> {
    let geometry = scenario.cellular_topology();
    let channel = scenario.channel();
    let counter = Cell::new(0u64);
    let links = TopologyLinks::counted(&geometry, &channel, &counter);
    let params = &scenario.dais;
    let range = scenario.radio.lte_direct_radius;

    let mut topology = scenario.empty_topology();
    let mut board: BTreeMap<NodeId, NeighborAdvert> = BTreeMap::new();
    let mut agents: BTreeMap<NodeId, Agent> = BTreeMap::new();
    let mut decisions = Vec::with_capacity(scenario.n_ues);
    let mut elapsed = Duration::ZERO;

    for u in scenario.arrival_order() {
        let node = scenario.ue_node(u)?;
        let pos = node.pos;
        let battery = node.battery;
        topology.insert(node)?;
        let bs_rate = links.link_rate(u, NodeId::BS)?;
        let n = topology.node_mut(u)?;
        n.cache.uplink_rate = Some(bs_rate);
        n.cache.wdr = Some(Wdr::Finite(bs_rate));

        let mut agent = Agent::new(u, pos, battery, plans())?;
        for adv in board.values().filter(|a| distance(a.pos, pos) <= range) {
            agent.enqueue(EventKind::NeighborAdvertReceived(*adv));
        }
        agent.enqueue(EventKind::AgentStartup {
            bs_link_rate: bs_rate,
        });

        let t0 = timing.then(Instant::now);
        let out = agent.run_to_quiescence(&PlanContext {
            topology: &topology,
            params,
            links: &links,
        })?;
        if let Some(t) = t0 {
            elapsed += t.elapsed();
        }
        let decision = out
            .actions
            .iter()
            .find_map(|a| match a {
                Action::Decide(d) => Some(*d),
                _ => None,
            })
            .ok_or_else(|| D2dError::Invariant(format!("agent {u} made no decision")))?;

        let (decision, roots) = match apply_decision(&mut topology, u, &decision) {
            Ok(r) => (decision, r),
            Err(D2dError::StaleDecision { .. }) => {
                let d = ModeDecision::default_for(&agent.view(), params);
                (d, apply_decision(&mut topology, u, &d)?)
            }
            Err(e) => return Err(e),
        };
        let record = DecisionRecord {
            ue: u,
            branch: decision.branch,
            target: decision.target,
            link_evaluations: out.stats.link_evaluations,
        };

        let mut affected = vec![u];
        affected.extend(decision.target);
        for &r in &roots {
            refresh_subtree(&mut topology, r, &links)?;
            affected.extend(topology.subtree(r)?);
        }
        affected.sort();
        affected.dedup();
        observe(&topology, &record)?;
        decisions.push(record);

        agent.beliefs.clear_neighbors();
        agents.insert(u, agent);
        for id in affected {
            let n = topology.node(id)?;
            let wdr = n.cache.wdr.ok_or_else(|| D2dError::TopologyCorruption {
                node: id,
                reason: "no current WDR after refresh".into(),
            })?;
            let (mode, served_count) = (n.mode, n.served.len());
            if mode.is_serving() {
                board.insert(id, NeighborAdvert::from_topology(&topology, id)?);
            } else {
                board.remove(&id);
            }
            if let Some(a) = agents.get_mut(&id) {
                a.enqueue(EventKind::RoleChangeRequested {
                    mode,
                    served_count,
                    wdr,
                });
                a.run_to_quiescence(&PlanContext {
                    topology: &topology,
                    params,
                    links: &links,
                })?;
            }
        }
    }
    finish(topology, decisions, counter.get(), elapsed)
}
