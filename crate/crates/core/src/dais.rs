//! Transmission-mode selection run by each agent at startup.
//!
//! Five candidate predicates are evaluated in a fixed priority order; the
//! first one with a qualifying neighbour decides the branch, and when none
//! qualifies the UE stays on the BS as a multi-hop relay.
//!
//! | # | branch                              | candidate role | distance band           | children       |
//! |---|-------------------------------------|----------------|-------------------------|----------------|
//! | 1 | [`Branch::ConnectAsClient`]         | relay          | `d <= cluster`          | `< D`          |
//! | 2 | [`Branch::PromoteMhrToRelayAndJoin`]| multi-hop      | `d <= cluster`          | `0`            |
//! | 3 | [`Branch::DemoteRelayToMhrAndJoinAsRelay`] | relay   | `cluster <= d <= query` | `0`            |
//! | 4 | [`Branch::BecomeMhrAndAdoptRelay`]  | relay          | `cluster <= d <= query` | any            |
//! | 5 | [`Branch::BecomeRelayUnderMhr`]     | multi-hop      | `query <= d <= multihop`| `0`            |
//!
//! Branches 1, 2, 3 and 5 attach the UE below the candidate. They require
//! the WDR the UE would obtain through the candidate, `min(link, wdr_c)`,
//! to beat its current WDR by the `perc_data_rate` margin, and rank
//! candidates by that value. Branch 4 attaches the candidate below the UE:
//! the candidate's advertised WDR must be at most `(1 - perc)` times the
//! WDR it would obtain through the UE, and candidates rank by advertised
//! WDR. Ties go to the nearer candidate, then the smaller id.
//!
//! With the battery option enabled, the node that takes a serving role is
//! gated on its battery: the candidate in branches 3, 4 and 5, the UE
//! itself in branch 4 and in the default branch (a UE that cannot serve
//! falls back to plain cellular).

use std::collections::BTreeMap;

use crate::channel::LinkRates;
use crate::error::{D2dError, Result};
use crate::model::{distance, DaisParams, NodeId, Position, Topology, TransmissionMode};
use crate::wdr::{incremental_wdr, Wdr};

/// What a serving node broadcasts over proximity services.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborAdvert {
    pub id: NodeId,
    pub pos: Position,
    pub mode: TransmissionMode,
    pub wdr: Wdr,
    pub served_count: usize,
    pub battery: f64,
}

impl NeighborAdvert {
    /// Advert mirroring the current state of `id` in `topology`. Requires a
    /// current WDR cache.
    pub fn from_topology(topology: &Topology, id: NodeId) -> Result<Self> {
        let n = topology.node(id)?;
        let wdr = n.cache.wdr.ok_or_else(|| D2dError::TopologyCorruption {
            node: id,
            reason: "advert requested without a current WDR".into(),
        })?;
        Ok(Self {
            id,
            pos: n.pos,
            mode: n.mode,
            wdr,
            served_count: n.served.len(),
            battery: n.battery,
        })
    }
}

/// An agent's informational state: its own WDR and the neighbour table.
#[derive(Clone, Debug, PartialEq)]
pub struct Beliefs {
    owner: NodeId,
    pub self_wdr: Wdr,
    neighbors: BTreeMap<NodeId, NeighborAdvert>,
}

impl Beliefs {
    pub fn new(owner: NodeId, self_wdr: Wdr) -> Self {
        Self {
            owner,
            self_wdr,
            neighbors: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    /// Inserts or replaces an advert. Adverts from the owner are ignored.
    pub fn upsert(&mut self, advert: NeighborAdvert) -> bool {
        if advert.id == self.owner {
            return false;
        }
        self.neighbors.insert(advert.id, advert);
        true
    }

    pub fn remove(&mut self, id: NodeId) -> Option<NeighborAdvert> {
        self.neighbors.remove(&id)
    }

    pub fn get(&self, id: NodeId) -> Option<&NeighborAdvert> {
        self.neighbors.get(&id)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self) -> impl Iterator<Item = &NeighborAdvert> {
        self.neighbors.values()
    }

    pub fn clear_neighbors(&mut self) {
        self.neighbors.clear();
    }
}

/// The deciding UE as it sees itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UeView {
    pub id: NodeId,
    pub pos: Position,
    pub battery: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    ConnectAsClient,
    PromoteMhrToRelayAndJoin,
    DemoteRelayToMhrAndJoinAsRelay,
    BecomeMhrAndAdoptRelay,
    BecomeRelayUnderMhr,
    DefaultMhrToBs,
}

impl Branch {
    /// Candidate branches in evaluation order.
    pub const PRIORITY: [Branch; 5] = [
        Branch::ConnectAsClient,
        Branch::PromoteMhrToRelayAndJoin,
        Branch::DemoteRelayToMhrAndJoinAsRelay,
        Branch::BecomeMhrAndAdoptRelay,
        Branch::BecomeRelayUnderMhr,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn has_target(self) -> bool {
        self != Branch::DefaultMhrToBs
    }

    /// Candidate transmits to the UE (rather than the UE to the candidate).
    fn candidate_is_child(self) -> bool {
        self == Branch::BecomeMhrAndAdoptRelay
    }
}

/// Target state the decision was computed against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TargetSnapshot {
    pub mode: TransmissionMode,
    pub served_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeDecision {
    pub branch: Branch,
    pub target: Option<NodeId>,
    pub self_mode: TransmissionMode,
    pub target_mode: Option<TransmissionMode>,
    pub snapshot: Option<TargetSnapshot>,
}

impl ModeDecision {
    /// The decision implementing `branch` against `target`.
    pub fn new(
        branch: Branch,
        target: Option<&NeighborAdvert>,
        ue: &UeView,
        params: &DaisParams,
    ) -> Self {
        use TransmissionMode::*;
        let (self_mode, target_mode) = match branch {
            Branch::ConnectAsClient => (D2dClient, Some(D2dRelay)),
            Branch::PromoteMhrToRelayAndJoin => (D2dClient, Some(D2dRelay)),
            Branch::DemoteRelayToMhrAndJoinAsRelay => (D2dRelay, Some(D2dMultiHopRelay)),
            Branch::BecomeMhrAndAdoptRelay => (D2dMultiHopRelay, Some(D2dRelay)),
            Branch::BecomeRelayUnderMhr => (D2dRelay, Some(D2dMultiHopRelay)),
            Branch::DefaultMhrToBs if params.battery_ok(ue.battery) => (D2dMultiHopRelay, None),
            Branch::DefaultMhrToBs => (Cellular, None),
        };
        let target = target.filter(|_| branch.has_target());
        Self {
            branch,
            target: target.map(|t| t.id),
            self_mode,
            target_mode: target.and(target_mode),
            snapshot: target.map(|t| TargetSnapshot {
                mode: t.mode,
                served_count: t.served_count,
            }),
        }
    }

    pub fn default_for(ue: &UeView, params: &DaisParams) -> Self {
        Self::new(Branch::DefaultMhrToBs, None, ue, params)
    }

    /// Branch and target agree: only the default branch has no target.
    pub fn is_consistent(&self) -> bool {
        self.branch.has_target() == self.target.is_some()
    }
}

/// Operation counts of one selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelectionStats {
    pub entries_scanned: u64,
    pub link_evaluations: u64,
}

/// A feasible candidate and its ranking value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub branch: Branch,
    pub id: NodeId,
    pub score: f64,
    pub distance: f64,
}

impl Candidate {
    /// Higher score, then nearer, then smaller id.
    pub fn beats(&self, other: &Candidate) -> bool {
        match self.score.partial_cmp(&other.score) {
            Some(std::cmp::Ordering::Greater) => true,
            Some(std::cmp::Ordering::Less) => false,
            _ => (self.distance, self.id) < (other.distance, other.id),
        }
    }
}

/// Checks that need no link evaluation. Every condition here is necessary
/// for the branch to accept the candidate.
fn prefilter(
    branch: Branch,
    ue: &UeView,
    self_wdr: f64,
    adv: &NeighborAdvert,
    d: f64,
    p: &DaisParams,
) -> bool {
    use TransmissionMode::*;
    let near = d <= p.max_distance_form_cluster;
    let relay_band = p.max_distance_form_cluster <= d && d <= p.max_query_d2dr_distance;
    let multihop_band = p.max_query_d2dr_distance <= d && d <= p.max_distance_multihop;
    let improves = adv.wdr.value() >= (1.0 + p.perc_data_rate) * self_wdr;
    match branch {
        Branch::ConnectAsClient => {
            adv.mode == D2dRelay && near && adv.served_count < p.d_serving_cap && improves
        }
        Branch::PromoteMhrToRelayAndJoin => {
            adv.mode == D2dMultiHopRelay && near && adv.served_count == 0 && improves
        }
        Branch::DemoteRelayToMhrAndJoinAsRelay => {
            adv.mode == D2dRelay
                && relay_band
                && adv.served_count == 0
                && p.battery_ok(adv.battery)
                && improves
        }
        Branch::BecomeMhrAndAdoptRelay => {
            adv.mode == D2dRelay
                && relay_band
                && p.battery_ok(adv.battery)
                && p.battery_ok(ue.battery)
                && adv.wdr.value() <= (1.0 - p.perc_data_rate) * self_wdr
        }
        Branch::BecomeRelayUnderMhr => {
            adv.mode == D2dMultiHopRelay
                && multihop_band
                && adv.served_count == 0
                && p.battery_ok(adv.battery)
                && improves
        }
        Branch::DefaultMhrToBs => false,
    }
}

/// Full acceptance given the link rate of the prospective new link.
fn score(
    branch: Branch,
    self_wdr: Wdr,
    adv: &NeighborAdvert,
    link: f64,
    p: &DaisParams,
) -> Option<f64> {
    if branch.candidate_is_child() {
        let via_ue = incremental_wdr(self_wdr, link).value();
        let w = adv.wdr.value();
        (w <= (1.0 - p.perc_data_rate) * via_ue).then_some(w)
    } else {
        let via = incremental_wdr(adv.wdr, link).value();
        (via >= (1.0 + p.perc_data_rate) * self_wdr.value()).then_some(via)
    }
}

/// Link rates between the UE and its neighbours, each evaluated at most
/// once per selection.
struct PairLinks<'a> {
    ue: NodeId,
    links: &'a dyn LinkRates,
    /// `(neighbour, candidate transmits)` to rate; `None` when the pair has
    /// no usable link (co-located nodes).
    memo: BTreeMap<(NodeId, bool), Option<f64>>,
    evaluations: u64,
}

impl<'a> PairLinks<'a> {
    fn new(ue: NodeId, links: &'a dyn LinkRates) -> Self {
        Self {
            ue,
            links,
            memo: BTreeMap::new(),
            evaluations: 0,
        }
    }

    fn rate(&mut self, cand: NodeId, candidate_transmits: bool) -> Result<Option<f64>> {
        if let Some(&r) = self.memo.get(&(cand, candidate_transmits)) {
            return Ok(r);
        }
        let (from, to) = if candidate_transmits {
            (cand, self.ue)
        } else {
            (self.ue, cand)
        };
        self.evaluations += 1;
        let r = match self.links.link_rate(from, to) {
            Ok(r) => Some(r),
            Err(D2dError::DegenerateGeometry { .. }) => None,
            Err(e) => return Err(e),
        };
        self.memo.insert((cand, candidate_transmits), r);
        Ok(r)
    }
}

/// One pass over the belief table for `branches`, reporting every accepted
/// candidate to `visit`.
fn scan(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    pair: &mut PairLinks<'_>,
    branches: &[Branch],
    stats: &mut SelectionStats,
    mut visit: impl FnMut(Candidate),
) -> Result<()> {
    let self_wdr = beliefs.self_wdr;
    for adv in beliefs.neighbors() {
        stats.entries_scanned += 1;
        if adv.id == ue.id {
            continue;
        }
        let d = distance(ue.pos, adv.pos);
        for &b in branches {
            if !prefilter(b, ue, self_wdr.value(), adv, d, params) {
                continue;
            }
            let Some(link) = pair.rate(adv.id, b.candidate_is_child())? else {
                continue;
            };
            if let Some(s) = score(b, self_wdr, adv, link, params) {
                visit(Candidate {
                    branch: b,
                    id: adv.id,
                    score: s,
                    distance: d,
                });
            }
        }
    }
    Ok(())
}

fn best_for(
    branch: Branch,
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    pair: &mut PairLinks<'_>,
    stats: &mut SelectionStats,
) -> Result<Option<Candidate>> {
    let mut best: Option<Candidate> = None;
    scan(ue, beliefs, params, pair, &[branch], stats, |c| {
        if best.is_none_or(|b| c.beats(&b)) {
            best = Some(c);
        }
    })?;
    Ok(best)
}

/// Best candidate for a single predicate.
pub fn find_candidate(
    branch: Branch,
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<Option<NodeId>> {
    let mut pair = PairLinks::new(ue.id, links);
    let best = best_for(
        branch,
        ue,
        beliefs,
        params,
        &mut pair,
        &mut SelectionStats::default(),
    )?;
    Ok(best.map(|c| c.id))
}

/// Nearby relay with the best WDR through it.
pub fn find_max_d2dr(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<Option<NodeId>> {
    find_candidate(Branch::ConnectAsClient, ue, beliefs, params, links)
}

/// Nearby childless multi-hop relay that could become the UE's relay.
pub fn find_max_d2dmhr_no_connections(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<Option<NodeId>> {
    find_candidate(Branch::PromoteMhrToRelayAndJoin, ue, beliefs, params, links)
}

/// Farther childless relay that could turn multi-hop and take the UE as relay.
pub fn find_max_d2dr_no_connections_to_be_d2dmhr(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<Option<NodeId>> {
    find_candidate(
        Branch::DemoteRelayToMhrAndJoinAsRelay,
        ue,
        beliefs,
        params,
        links,
    )
}

/// Farther relay, clearly worse off than the UE, that the UE could adopt.
pub fn find_max_d2dr_to_use_ue_d2dmhr(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<Option<NodeId>> {
    find_candidate(Branch::BecomeMhrAndAdoptRelay, ue, beliefs, params, links)
}

/// Distant childless multi-hop relay the UE could relay through.
pub fn find_max_d2dmhr_as_multihop(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<Option<NodeId>> {
    find_candidate(Branch::BecomeRelayUnderMhr, ue, beliefs, params, links)
}

/// Every candidate accepted by any of the five predicates, in belief-table
/// order and branch order within a neighbour.
pub fn feasible_candidates(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<(Vec<Candidate>, SelectionStats)> {
    let mut out = Vec::new();
    let mut stats = SelectionStats::default();
    let mut pair = PairLinks::new(ue.id, links);
    scan(
        ue,
        beliefs,
        params,
        &mut pair,
        &Branch::PRIORITY,
        &mut stats,
        |c| out.push(c),
    )?;
    stats.link_evaluations = pair.evaluations;
    Ok((out, stats))
}

/// Runs the five predicates in priority order and returns the decision of
/// the first that has a candidate.
pub fn select_transmission_mode(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<ModeDecision> {
    select_with_stats(ue, beliefs, params, links).map(|(d, _)| d)
}

/// [`select_transmission_mode`] plus its operation counts. Later
/// predicates are not evaluated once one has a candidate; a link rate
/// needed by several predicates is evaluated once.
pub fn select_with_stats(
    ue: &UeView,
    beliefs: &Beliefs,
    params: &DaisParams,
    links: &dyn LinkRates,
) -> Result<(ModeDecision, SelectionStats)> {
    let mut stats = SelectionStats::default();
    let mut pair = PairLinks::new(ue.id, links);
    let mut decision = ModeDecision::default_for(ue, params);
    for b in Branch::PRIORITY {
        if let Some(c) = best_for(b, ue, beliefs, params, &mut pair, &mut stats)? {
            decision = ModeDecision::new(c.branch, beliefs.get(c.id), ue, params);
            break;
        }
    }
    stats.link_evaluations = pair.evaluations;
    Ok((decision, stats))
}

fn stale(ue: NodeId, reason: impl Into<String>) -> D2dError {
    D2dError::StaleDecision {
        ue,
        reason: reason.into(),
    }
}

/// Applies `decision` for `ue`, updating modes, parent links and served
/// sets. Returns the roots of the subtrees whose cached WDR was dropped.
///
/// The UE must still be a fresh cellular node on the BS and the target must
/// still match the snapshot the decision was computed against; otherwise
/// the topology is left untouched and a stale-decision error is returned.
pub fn apply_decision(
    topology: &mut Topology,
    ue: NodeId,
    decision: &ModeDecision,
) -> Result<Vec<NodeId>> {
    use TransmissionMode::*;
    if !decision.is_consistent() {
        return Err(stale(ue, "branch and target disagree"));
    }
    {
        let n = topology.node(ue)?;
        if n.mode != Cellular || n.parent != Some(NodeId::BS) || !n.served.is_empty() {
            return Err(stale(ue, "UE is no longer a fresh cellular node"));
        }
    }
    let Some(target) = decision.target else {
        topology.set_mode(ue, decision.self_mode)?;
        return Ok(Vec::new());
    };
    if target == ue {
        return Err(stale(ue, "decision targets the UE itself"));
    }
    let t = topology
        .node(target)
        .map_err(|_| stale(ue, format!("target {target} vanished")))?;
    if let Some(snap) = decision.snapshot {
        if t.mode != snap.mode || t.served.len() != snap.served_count {
            return Err(stale(ue, format!("target {target} changed since snapshot")));
        }
    }
    let cap = topology.limits.d_serving_cap;
    match decision.branch {
        Branch::ConnectAsClient => {
            if t.mode != D2dRelay || t.served.len() >= cap {
                return Err(stale(ue, "relay is full or no longer a relay"));
            }
            topology.set_mode(ue, D2dClient)?;
            topology.attach(ue, target)?;
            Ok(vec![ue])
        }
        Branch::PromoteMhrToRelayAndJoin => {
            if t.mode != D2dMultiHopRelay || !t.served.is_empty() {
                return Err(stale(ue, "multi-hop relay gained children"));
            }
            topology.set_mode(target, D2dRelay)?;
            topology.set_mode(ue, D2dClient)?;
            topology.attach(ue, target)?;
            Ok(vec![ue])
        }
        Branch::DemoteRelayToMhrAndJoinAsRelay => {
            if t.mode != D2dRelay || !t.served.is_empty() {
                return Err(stale(ue, "relay gained children"));
            }
            topology.set_mode(target, D2dMultiHopRelay)?;
            topology.set_mode(ue, D2dRelay)?;
            topology.attach(ue, target)?;
            Ok(vec![ue])
        }
        Branch::BecomeMhrAndAdoptRelay => {
            if t.mode != D2dRelay {
                return Err(stale(ue, "target is no longer a relay"));
            }
            topology.set_mode(ue, D2dMultiHopRelay)?;
            topology.attach(target, ue)?;
            Ok(vec![target])
        }
        Branch::BecomeRelayUnderMhr => {
            if t.mode != D2dMultiHopRelay || !t.served.is_empty() {
                return Err(stale(ue, "multi-hop relay gained children"));
            }
            topology.set_mode(ue, D2dRelay)?;
            topology.attach(ue, target)?;
            Ok(vec![ue])
        }
        Branch::DefaultMhrToBs => unreachable!("default branch has no target"),
    }
}
