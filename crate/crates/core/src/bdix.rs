//! Belief-desire-intention agent loop for a single UE.
//!
//! Each processed event goes through the same three steps: [`Agent::perceive`]
//! updates beliefs, [`Agent::deliberate`] re-selects the intention by
//! priority, and [`Agent::execute_step`] runs the plan bound to that
//! intention once. [`Agent::step`] chains the three.
//!
//! Desires are the fixed priority table below; the plan library maps each
//! goal to a [`Plan`]. Mode selection is the only decision-making plan; the
//! serving plan just re-advertises the node.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::channel::LinkRates;
use crate::dais::{
    select_with_stats, Beliefs, ModeDecision, NeighborAdvert, SelectionStats, UeView,
};
use crate::error::{D2dError, Result};
use crate::model::{DaisParams, NodeId, Position, Topology, TransmissionMode};
use crate::wdr::Wdr;

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    /// The agent switched on and connected to the BS over a link of the
    /// given rate.
    AgentStartup {
        bs_link_rate: f64,
    },
    NeighborAdvertReceived(NeighborAdvert),
    NeighborWithdrawn(NodeId),
    /// Another agent's decision changed this node's role or position in
    /// the forest. Always accepted.
    RoleChangeRequested {
        mode: TransmissionMode,
        served_count: usize,
        wdr: Wdr,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Goal {
    SelectTransmissionMode,
    ServeAttachedClients,
    Idle,
}

impl Goal {
    pub fn priority(self) -> i32 {
        match self {
            Goal::SelectTransmissionMode => 2,
            Goal::ServeAttachedClients => 1,
            Goal::Idle => 0,
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Intention {
    pub goal: Goal,
    pub priority: i32,
}

impl Intention {
    pub fn new(goal: Goal) -> Self {
        Self {
            goal,
            priority: goal.priority(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Decide(ModeDecision),
    Broadcast(NeighborAdvert),
}

/// What the agent knows about its own node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfState {
    pub pos: Position,
    pub battery: f64,
    pub mode: TransmissionMode,
    pub served_count: usize,
    /// Startup seen and no mode decided yet.
    pub selection_pending: bool,
}

/// Everything a plan may read besides the agent itself.
pub struct PlanContext<'a> {
    pub topology: &'a Topology,
    pub params: &'a DaisParams,
    pub links: &'a dyn LinkRates,
}

pub trait Plan: Send + Sync {
    fn run(&self, agent: &Agent, ctx: &PlanContext<'_>) -> Result<PlanOutput>;
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanOutput {
    pub actions: Vec<Action>,
    pub stats: SelectionStats,
}

/// Mode selection by the priority chain of candidate predicates.
#[derive(Clone, Copy, Debug, Default)]
pub struct DaisPlan;

impl Plan for DaisPlan {
    fn run(&self, agent: &Agent, ctx: &PlanContext<'_>) -> Result<PlanOutput> {
        let (decision, stats) =
            select_with_stats(&agent.view(), &agent.beliefs, ctx.params, ctx.links)?;
        Ok(PlanOutput {
            actions: vec![Action::Decide(decision)],
            stats,
        })
    }
}

/// Re-advertises the node's current state.
#[derive(Clone, Copy, Debug, Default)]
pub struct ServePlan;

impl Plan for ServePlan {
    fn run(&self, agent: &Agent, _ctx: &PlanContext<'_>) -> Result<PlanOutput> {
        let s = agent.state;
        Ok(PlanOutput {
            actions: vec![Action::Broadcast(NeighborAdvert {
                id: agent.node,
                pos: s.pos,
                mode: s.mode,
                wdr: agent.beliefs.self_wdr,
                served_count: s.served_count,
                battery: s.battery,
            })],
            stats: SelectionStats::default(),
        })
    }
}

pub type PlanLibrary = BTreeMap<Goal, Box<dyn Plan>>;

/// Mode selection by DAIS plus advertising while serving.
pub fn default_plans() -> PlanLibrary {
    let mut lib: PlanLibrary = BTreeMap::new();
    lib.insert(Goal::SelectTransmissionMode, Box::new(DaisPlan));
    lib.insert(Goal::ServeAttachedClients, Box::new(ServePlan));
    lib
}

#[derive(Clone, Debug, PartialEq)]
pub enum LogEntry {
    Perceived(u64),
    Deliberated(Goal),
    Executed { goal: Goal, actions: usize },
}

pub struct Agent {
    pub node: NodeId,
    pub beliefs: Beliefs,
    pub intention: Intention,
    pub state: SelfState,
    plans: PlanLibrary,
    queue: VecDeque<Event>,
    last_seq: Option<u64>,
    next_seq: u64,
    log: Option<Vec<LogEntry>>,
}

impl fmt::Debug for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Agent")
            .field("node", &self.node)
            .field("intention", &self.intention)
            .field("state", &self.state)
            .field("beliefs", &self.beliefs.len())
            .finish()
    }
}

impl Agent {
    /// A switched-off UE. Fails on an empty plan library.
    pub fn new(node: NodeId, pos: Position, battery: f64, plans: PlanLibrary) -> Result<Self> {
        if plans.is_empty() {
            return Err(D2dError::MissingPlan("<empty library>".into()));
        }
        Ok(Self {
            node,
            beliefs: Beliefs::new(node, Wdr::Finite(0.0)),
            intention: Intention::new(Goal::Idle),
            state: SelfState {
                pos,
                battery,
                mode: TransmissionMode::Cellular,
                served_count: 0,
                selection_pending: false,
            },
            plans,
            queue: VecDeque::new(),
            last_seq: None,
            next_seq: 0,
            log: None,
        })
    }

    /// Keep an ordered log of perceive/deliberate/execute steps.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn log(&self) -> &[LogEntry] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn view(&self) -> UeView {
        UeView {
            id: self.node,
            pos: self.state.pos,
            battery: self.state.battery,
        }
    }

    fn record(&mut self, e: LogEntry) {
        if let Some(l) = self.log.as_mut() {
            l.push(e);
        }
    }

    /// Queues an event stamped with the next sequence number.
    pub fn enqueue(&mut self, kind: EventKind) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push_back(Event { seq, kind });
        seq
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn perceive(&mut self, event: Event) -> Result<()> {
        if let Some(last) = self.last_seq {
            if event.seq <= last {
                return Err(D2dError::Sequencing {
                    agent: self.node,
                    last,
                    got: event.seq,
                });
            }
        }
        self.last_seq = Some(event.seq);
        self.next_seq = self.next_seq.max(event.seq + 1);
        match event.kind {
            EventKind::AgentStartup { bs_link_rate } => {
                self.beliefs.self_wdr = Wdr::Finite(bs_link_rate);
                self.state.mode = TransmissionMode::Cellular;
                self.state.served_count = 0;
                self.state.selection_pending = true;
            }
            EventKind::NeighborAdvertReceived(a) => {
                self.beliefs.upsert(a);
            }
            EventKind::NeighborWithdrawn(id) => {
                self.beliefs.remove(id);
            }
            EventKind::RoleChangeRequested {
                mode,
                served_count,
                wdr,
            } => {
                self.state.mode = mode;
                self.state.served_count = served_count;
                self.beliefs.self_wdr = wdr;
            }
        }
        self.record(LogEntry::Perceived(event.seq));
        Ok(())
    }

    /// Keeps the current intention while it is still the highest-priority
    /// applicable goal, otherwise switches to that goal.
    pub fn deliberate(&mut self) -> Intention {
        let applicable = |g: Goal, s: &SelfState| match g {
            Goal::SelectTransmissionMode => s.selection_pending,
            Goal::ServeAttachedClients => s.mode.is_serving() && s.served_count > 0,
            Goal::Idle => true,
        };
        let top = [
            Goal::SelectTransmissionMode,
            Goal::ServeAttachedClients,
            Goal::Idle,
        ]
        .into_iter()
        .find(|&g| applicable(g, &self.state))
        .unwrap_or(Goal::Idle);
        if self.intention.goal != top {
            self.intention = Intention::new(top);
        }
        self.record(LogEntry::Deliberated(self.intention.goal));
        self.intention
    }

    /// Runs the plan bound to the current intention once.
    pub fn execute_step(&mut self, ctx: &PlanContext<'_>) -> Result<PlanOutput> {
        let goal = self.intention.goal;
        let out = if goal == Goal::Idle && !self.plans.contains_key(&goal) {
            PlanOutput::default()
        } else {
            let plan = self
                .plans
                .get(&goal)
                .ok_or_else(|| D2dError::MissingPlan(goal.to_string()))?;
            plan.run(self, ctx)?
        };
        if out.actions.iter().any(|a| matches!(a, Action::Decide(_))) {
            self.state.selection_pending = false;
        }
        self.record(LogEntry::Executed {
            goal,
            actions: out.actions.len(),
        });
        Ok(out)
    }

    /// Pops the next queued event, if any, and processes it.
    pub fn step(&mut self, ctx: &PlanContext<'_>) -> Result<Option<PlanOutput>> {
        let Some(ev) = self.queue.pop_front() else {
            return Ok(None);
        };
        self.perceive(ev)?;
        self.deliberate();
        self.execute_step(ctx).map(Some)
    }

    /// Processes every queued event, concatenating the outputs.
    pub fn run_to_quiescence(&mut self, ctx: &PlanContext<'_>) -> Result<PlanOutput> {
        let mut total = PlanOutput::default();
        while let Some(out) = self.step(ctx)? {
            total.actions.extend(out.actions);
            total.stats.entries_scanned += out.stats.entries_scanned;
            total.stats.link_evaluations += out.stats.link_evaluations;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dais::Branch;
    use crate::model::{Area, BaseStation, ServingLimits};

    fn topo() -> Topology {
        Topology::new(
            BaseStation {
                pos: Position::new(500.0, 500.0),
                antenna_gain_db: 40.0,
            },
            Area::default(),
            ServingLimits::default(),
        )
    }

    fn advert(id: u32) -> NeighborAdvert {
        NeighborAdvert {
            id: NodeId(id),
            pos: Position::new(10.0 * id as f64, 0.0),
            mode: TransmissionMode::D2dRelay,
            wdr: Wdr::Finite(1.0),
            served_count: 1,
            battery: 0.9,
        }
    }

    fn agent() -> Agent {
        Agent::new(NodeId(0), Position::new(0.0, 0.0), 0.9, default_plans())
            .unwrap()
            .with_log()
    }

    fn no_links(_: NodeId, _: NodeId) -> Result<f64> {
        Ok(1.0)
    }

    #[test]
    fn perceive_updates_table() {
        let mut a = agent();
        a.perceive(Event {
            seq: 0,
            kind: EventKind::NeighborAdvertReceived(advert(1)),
        })
        .unwrap();
        assert_eq!(a.beliefs.len(), 1);
        a.perceive(Event {
            seq: 1,
            kind: EventKind::NeighborAdvertReceived(advert(1)),
        })
        .unwrap();
        assert_eq!(a.beliefs.len(), 1);
        a.perceive(Event {
            seq: 2,
            kind: EventKind::NeighborWithdrawn(NodeId(1)),
        })
        .unwrap();
        assert!(a.beliefs.is_empty());
        let err = a
            .perceive(Event {
                seq: 2,
                kind: EventKind::NeighborWithdrawn(NodeId(1)),
            })
            .unwrap_err();
        assert!(matches!(err, D2dError::Sequencing { .. }));
    }

    #[test]
    fn deliberation_priorities() {
        let mut a = agent();
        assert_eq!(a.deliberate().goal, Goal::Idle);
        a.perceive(Event {
            seq: 0,
            kind: EventKind::AgentStartup { bs_link_rate: 2.0 },
        })
        .unwrap();
        assert_eq!(a.deliberate().goal, Goal::SelectTransmissionMode);

        // Client with nothing new to act on keeps its intention.
        let mut c = agent();
        c.state.mode = TransmissionMode::D2dClient;
        let before = c.deliberate();
        c.perceive(Event {
            seq: 0,
            kind: EventKind::NeighborAdvertReceived(advert(3)),
        })
        .unwrap();
        assert_eq!(c.deliberate(), before);

        // Relay serving, then losing its last child.
        let mut r = agent();
        r.state.mode = TransmissionMode::D2dRelay;
        r.state.served_count = 2;
        assert_eq!(r.deliberate().goal, Goal::ServeAttachedClients);
        r.perceive(Event {
            seq: 0,
            kind: EventKind::RoleChangeRequested {
                mode: TransmissionMode::D2dRelay,
                served_count: 0,
                wdr: Wdr::Finite(1.0),
            },
        })
        .unwrap();
        assert_eq!(r.deliberate().goal, Goal::Idle);
    }

    #[test]
    fn execute_examples() {
        let t = topo();
        let p = DaisParams::default();
        let ctx = PlanContext {
            topology: &t,
            params: &p,
            links: &no_links,
        };

        let mut a = agent();
        a.enqueue(EventKind::AgentStartup { bs_link_rate: 2.0 });
        let out = a.step(&ctx).unwrap().unwrap();
        match out.actions.as_slice() {
            [Action::Decide(d)] => assert_eq!(d.branch, Branch::DefaultMhrToBs),
            other => panic!("unexpected {other:?}"),
        }

        let mut r = agent();
        r.state.mode = TransmissionMode::D2dRelay;
        r.state.served_count = 2;
        r.deliberate();
        let out = r.execute_step(&ctx).unwrap();
        assert!(matches!(out.actions.as_slice(), [Action::Broadcast(ad)] if ad.served_count == 2));

        let mut idle = agent();
        idle.deliberate();
        assert!(idle.execute_step(&ctx).unwrap().actions.is_empty());
    }

    #[test]
    fn missing_plan_is_configuration_error() {
        let t = topo();
        let p = DaisParams::default();
        let ctx = PlanContext {
            topology: &t,
            params: &p,
            links: &no_links,
        };
        let mut lib: PlanLibrary = BTreeMap::new();
        lib.insert(Goal::ServeAttachedClients, Box::new(ServePlan));
        let mut a = Agent::new(NodeId(0), Position::new(0.0, 0.0), 0.9, lib).unwrap();
        a.enqueue(EventKind::AgentStartup { bs_link_rate: 1.0 });
        assert!(matches!(a.step(&ctx), Err(D2dError::MissingPlan(_))));
        assert!(Agent::new(NodeId(0), Position::new(0.0, 0.0), 0.9, BTreeMap::new()).is_err());
    }

    #[test]
    fn one_deliberation_per_event() {
        let t = topo();
        let p = DaisParams::default();
        let ctx = PlanContext {
            topology: &t,
            params: &p,
            links: &no_links,
        };
        let mut a = agent();
        for i in 1..=3 {
            a.enqueue(EventKind::NeighborAdvertReceived(advert(i)));
        }
        a.enqueue(EventKind::AgentStartup { bs_link_rate: 5.0 });
        a.run_to_quiescence(&ctx).unwrap();
        let log = a.log();
        assert_eq!(log.len(), 4 * 3);
        for chunk in log.chunks(3) {
            assert!(matches!(chunk[0], LogEntry::Perceived(_)));
            assert!(matches!(chunk[1], LogEntry::Deliberated(_)));
            assert!(matches!(chunk[2], LogEntry::Executed { .. }));
        }
        assert_eq!(
            log.last(),
            Some(&LogEntry::Executed {
                goal: Goal::SelectTransmissionMode,
                actions: 1
            })
        );
    }
}
