//! Nodes, roles and the serving-link forest rooted at the base station.
//!
//! A [`Topology`] keeps both directions of every serving link: each
//! [`UeNode`] records its `parent` and the set of nodes it `served`. The
//! mutation API ([`Topology::attach`]) keeps the two in step; the raw
//! accessor [`Topology::node_mut`] does not, which is what lets tests build
//! corrupted forests for [`validate_topology`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{D2dError, Result};
use crate::wdr::Wdr;

/// Identifier of a UE, or the reserved [`NodeId::BS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    /// The base station. Never a key in [`Topology::nodes`].
    pub const BS: NodeId = NodeId(u32::MAX);

    pub fn is_bs(self) -> bool {
        self == Self::BS
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bs() {
            write!(f, "BS")
        } else {
            write!(f, "UE{}", self.0)
        }
    }
}

/// Planar position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Rectangular deployment area `[0, w] x [0, h]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub w: f64,
    pub h: f64,
}

impl Area {
    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.w).contains(&p.x) && (0.0..=self.h).contains(&p.y)
    }

    pub fn center(&self) -> Position {
        Position::new(self.w / 2.0, self.h / 2.0)
    }
}

impl Default for Area {
    fn default() -> Self {
        Self {
            w: 1000.0,
            h: 1000.0,
        }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmissionMode {
    /// Plain UE talking straight to the BS.
    Cellular,
    /// Served by a D2D relay (cluster member).
    D2dClient,
    /// Cluster head: serves clients, backhauls to the BS or a multi-hop relay.
    D2dRelay,
    /// Relays for D2D relays (or sits alone) toward the BS.
    D2dMultiHopRelay,
}

impl TransmissionMode {
    pub const ALL: [TransmissionMode; 4] = [
        TransmissionMode::Cellular,
        TransmissionMode::D2dClient,
        TransmissionMode::D2dRelay,
        TransmissionMode::D2dMultiHopRelay,
    ];

    /// Whether a node in this mode may have children.
    pub fn is_serving(self) -> bool {
        matches!(self, Self::D2dRelay | Self::D2dMultiHopRelay)
    }

    /// Whether `parent` (in mode `parent_mode`, `None` for the BS) is an
    /// allowed upstream for a node in this mode.
    pub fn accepts_parent(self, parent_mode: Option<TransmissionMode>) -> bool {
        use TransmissionMode::*;
        match (self, parent_mode) {
            (Cellular, None) => true,
            (D2dClient, Some(D2dRelay)) => true,
            (D2dRelay, None | Some(D2dMultiHopRelay)) => true,
            (D2dMultiHopRelay, None | Some(D2dMultiHopRelay)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for TransmissionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Cellular => "cellular",
            Self::D2dClient => "d2d_client",
            Self::D2dRelay => "d2d_relay",
            Self::D2dMultiHopRelay => "d2d_multi_hop_relay",
        };
        f.write_str(s)
    }
}

/// Per-node link cache maintained by the WDR bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct LinkCache {
    pub(crate) uplink_rate: Option<f64>,
    pub(crate) wdr: Option<Wdr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UeNode {
    pub id: NodeId,
    pub pos: Position,
    /// Remaining battery as a fraction of capacity.
    pub battery: f64,
    pub mode: TransmissionMode,
    pub parent: Option<NodeId>,
    pub served: BTreeSet<NodeId>,
    pub tx_power_cellular: f64,
    pub tx_power_d2d: f64,
    pub(crate) cache: LinkCache,
}

impl UeNode {
    /// A freshly switched-on UE: cellular, attached to the BS.
    pub fn new(
        id: NodeId,
        pos: Position,
        battery: f64,
        tx_power_cellular: f64,
        tx_power_d2d: f64,
    ) -> Self {
        Self {
            id,
            pos,
            battery,
            mode: TransmissionMode::Cellular,
            parent: Some(NodeId::BS),
            served: BTreeSet::new(),
            tx_power_cellular,
            tx_power_d2d,
            cache: LinkCache::default(),
        }
    }

    /// Transmit power of this node's uplink.
    pub fn uplink_power(&self) -> f64 {
        match self.parent {
            Some(p) if !p.is_bs() => self.tx_power_d2d,
            _ => self.tx_power_cellular,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub pos: Position,
    pub antenna_gain_db: f64,
}

/// Serving limits checked by [`validate_topology`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServingLimits {
    /// Clients a D2D relay may serve.
    pub d_serving_cap: usize,
    /// Hard ceiling on children of any serving node.
    pub max_users_ch: usize,
}

impl Default for ServingLimits {
    fn default() -> Self {
        Self {
            d_serving_cap: 200,
            max_users_ch: 255,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub bs: BaseStation,
    pub area: Area,
    pub limits: ServingLimits,
    nodes: BTreeMap<NodeId, UeNode>,
}

impl Topology {
    pub fn new(bs: BaseStation, area: Area, limits: ServingLimits) -> Self {
        Self {
            bs,
            area,
            limits,
            nodes: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Result<&UeNode> {
        self.nodes.get(&id).ok_or(D2dError::NotFound(id))
    }

    /// Raw mutable access. Bypasses parent/served bookkeeping.
    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut UeNode> {
        self.nodes.get_mut(&id).ok_or(D2dError::NotFound(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &UeNode> {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Position of a UE or the BS.
    pub fn position(&self, id: NodeId) -> Result<Position> {
        if id.is_bs() {
            Ok(self.bs.pos)
        } else {
            self.node(id).map(|n| n.pos)
        }
    }

    /// Inserts a node as given. If its parent is a UE already present, the
    /// parent's served set is updated as well.
    pub fn insert(&mut self, node: UeNode) -> Result<()> {
        let id = node.id;
        if id.is_bs() || self.nodes.contains_key(&id) {
            return Err(D2dError::DuplicateNode(id));
        }
        let parent = node.parent;
        self.nodes.insert(id, node);
        if let Some(p) = parent.filter(|p| !p.is_bs()) {
            if let Some(pn) = self.nodes.get_mut(&p) {
                pn.served.insert(id);
            }
        }
        Ok(())
    }

    pub fn set_mode(&mut self, id: NodeId, mode: TransmissionMode) -> Result<()> {
        self.node_mut(id)?.mode = mode;
        Ok(())
    }

    /// Re-parents `child` under `parent` (a UE or the BS), keeping served
    /// sets in step and dropping the cached link state of the moved subtree.
    pub fn attach(&mut self, child: NodeId, parent: NodeId) -> Result<()> {
        if child == parent {
            return Err(D2dError::TopologyCorruption {
                node: child,
                reason: "node cannot serve itself".into(),
            });
        }
        if !parent.is_bs() && !self.contains(parent) {
            return Err(D2dError::NotFound(parent));
        }
        let old = self.node(child)?.parent;
        if let Some(op) = old.filter(|p| !p.is_bs()) {
            if let Some(on) = self.nodes.get_mut(&op) {
                on.served.remove(&child);
            }
        }
        self.node_mut(child)?.parent = Some(parent);
        if !parent.is_bs() {
            self.node_mut(parent)?.served.insert(child);
        }
        self.invalidate_subtree(child)?;
        Ok(())
    }

    /// `root` followed by all nodes below it, breadth first.
    pub fn subtree(&self, root: NodeId) -> Result<Vec<NodeId>> {
        let mut out = vec![root];
        let mut i = 0;
        while i < out.len() {
            let n = self.node(out[i])?;
            out.extend(n.served.iter().copied());
            i += 1;
            if out.len() > self.nodes.len() {
                return Err(D2dError::TopologyCorruption {
                    node: root,
                    reason: "served sets contain a cycle".into(),
                });
            }
        }
        Ok(out)
    }

    pub(crate) fn invalidate_subtree(&mut self, root: NodeId) -> Result<()> {
        let ids = self.subtree(root)?;
        self.node_mut(root)?.cache.uplink_rate = None;
        for id in ids {
            self.node_mut(id)?.cache.wdr = None;
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of the structural state (ids, positions,
    /// modes, links, batteries). Cached link state is excluded.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.bs.pos.x.to_bits().hash(&mut h);
        self.bs.pos.y.to_bits().hash(&mut h);
        for n in self.nodes.values() {
            n.id.hash(&mut h);
            n.pos.x.to_bits().hash(&mut h);
            n.pos.y.to_bits().hash(&mut h);
            n.battery.to_bits().hash(&mut h);
            n.mode.hash(&mut h);
            n.parent.hash(&mut h);
            n.served.hash(&mut h);
            n.tx_power_cellular.to_bits().hash(&mut h);
            n.tx_power_d2d.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Nodes from `node` up to (not including) the BS, following parent links.
pub fn path_to_bs(topology: &Topology, node: NodeId) -> Result<Vec<NodeId>> {
    let mut path = Vec::new();
    let mut cur = node;
    loop {
        let n = match topology.node(cur) {
            Ok(n) => n,
            Err(e) if cur == node => return Err(e),
            Err(_) => {
                return Err(D2dError::TopologyCorruption {
                    node: cur,
                    reason: "parent link points to a missing node".into(),
                })
            }
        };
        path.push(cur);
        if path.len() > topology.len() {
            return Err(D2dError::TopologyCorruption {
                node,
                reason: "cycle in parent links".into(),
            });
        }
        match n.parent {
            Some(p) if p.is_bs() => return Ok(path),
            Some(p) => cur = p,
            None => {
                return Err(D2dError::TopologyCorruption {
                    node: cur,
                    reason: "node has no parent".into(),
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    BatteryOutOfRange {
        node: NodeId,
        battery: f64,
    },
    OutsideArea {
        node: NodeId,
    },
    Detached {
        node: NodeId,
    },
    DanglingParent {
        node: NodeId,
        parent: NodeId,
    },
    Cycle {
        node: NodeId,
    },
    Role {
        node: NodeId,
        mode: TransmissionMode,
        parent: NodeId,
        parent_mode: Option<TransmissionMode>,
    },
    SelfServed {
        node: NodeId,
    },
    ServedByNonServing {
        node: NodeId,
        mode: TransmissionMode,
    },
    Cap {
        node: NodeId,
        served: usize,
        cap: usize,
    },
    /// `child` is in `node`'s served set but does not point back, or the
    /// reverse.
    Duality {
        node: NodeId,
        child: NodeId,
    },
}

/// Checks every forest, role and cap invariant. An empty report means the
/// topology is valid.
pub fn validate_topology(topology: &Topology) -> Vec<Violation> {
    let mut out = Vec::new();
    let limits = topology.limits;

    for n in topology.nodes() {
        if !(0.0..=1.0).contains(&n.battery) {
            out.push(Violation::BatteryOutOfRange {
                node: n.id,
                battery: n.battery,
            });
        }
        if !topology.area.contains(n.pos) {
            out.push(Violation::OutsideArea { node: n.id });
        }
        if n.served.contains(&n.id) {
            out.push(Violation::SelfServed { node: n.id });
        }
        if !n.served.is_empty() && !n.mode.is_serving() {
            out.push(Violation::ServedByNonServing {
                node: n.id,
                mode: n.mode,
            });
        }
        if n.mode == TransmissionMode::D2dRelay && n.served.len() > limits.d_serving_cap {
            out.push(Violation::Cap {
                node: n.id,
                served: n.served.len(),
                cap: limits.d_serving_cap,
            });
        } else if n.served.len() > limits.max_users_ch {
            out.push(Violation::Cap {
                node: n.id,
                served: n.served.len(),
                cap: limits.max_users_ch,
            });
        }
        for &c in &n.served {
            let back = topology.node(c).ok().and_then(|cn| cn.parent);
            if back != Some(n.id) {
                out.push(Violation::Duality {
                    node: n.id,
                    child: c,
                });
            }
        }

        match n.parent {
            None => out.push(Violation::Detached { node: n.id }),
            Some(p) if p.is_bs() => {
                if !n.mode.accepts_parent(None) {
                    out.push(Violation::Role {
                        node: n.id,
                        mode: n.mode,
                        parent: p,
                        parent_mode: None,
                    });
                }
            }
            Some(p) => match topology.node(p) {
                Err(_) => out.push(Violation::DanglingParent {
                    node: n.id,
                    parent: p,
                }),
                Ok(pn) => {
                    if !n.mode.accepts_parent(Some(pn.mode)) {
                        out.push(Violation::Role {
                            node: n.id,
                            mode: n.mode,
                            parent: p,
                            parent_mode: Some(pn.mode),
                        });
                    }
                    if !pn.served.contains(&n.id) {
                        out.push(Violation::Duality {
                            node: p,
                            child: n.id,
                        });
                    }
                }
            },
        }
    }

    // Nodes on a parent-link cycle. Walks are memoised by colour.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Rooted,
        Looping,
    }
    let mut mark: BTreeMap<NodeId, Mark> = BTreeMap::new();
    for start in topology.ids() {
        if mark.contains_key(&start) {
            continue;
        }
        let mut trail = Vec::new();
        let mut cur = start;
        let verdict = loop {
            match mark.get(&cur) {
                Some(Mark::Rooted) => break Mark::Rooted,
                Some(Mark::Looping) => break Mark::Looping,
                Some(Mark::Open) => {
                    // Closed a loop: everything from `cur` onward in the trail is on it.
                    let pos = trail.iter().position(|&t| t == cur).unwrap_or(0);
                    for &t in &trail[pos..] {
                        out.push(Violation::Cycle { node: t });
                    }
                    break Mark::Looping;
                }
                None => {}
            }
            mark.insert(cur, Mark::Open);
            trail.push(cur);
            match topology.node(cur).ok().and_then(|n| n.parent) {
                Some(p) if p.is_bs() => break Mark::Rooted,
                Some(p) if topology.contains(p) => cur = p,
                // Detached or dangling, already reported above.
                _ => break Mark::Looping,
            }
        };
        for t in trail {
            mark.insert(t, verdict);
        }
    }

    out
}

/// Thresholds and limits steering the mode-selection plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaisParams {
    pub max_users_ch: usize,
    pub d_serving_cap: usize,
    pub max_query_d2dr_distance: f64,
    pub max_distance_form_cluster: f64,
    /// m/s. Housed for completeness; the static scenario never moves nodes.
    pub max_speed_backhauling: f64,
    pub max_distance_multihop: f64,
    /// Housed for completeness; the static scenario never moves nodes.
    pub max_distance_move_away: f64,
    pub perc_data_rate: f64,
    pub battery_threshold: f64,
    pub battery_option_enabled: bool,
    /// Mean of the battery level distribution.
    pub battery_mean: f64,
    /// Variance of the battery level distribution (before clipping).
    pub battery_variance: f64,
}

impl Default for DaisParams {
    fn default() -> Self {
        Self {
            max_users_ch: 255,
            d_serving_cap: 200,
            max_query_d2dr_distance: 200.0,
            max_distance_form_cluster: 100.0,
            max_speed_backhauling: 1.5,
            max_distance_multihop: 1000.0,
            max_distance_move_away: 100.0,
            perc_data_rate: 0.2,
            battery_threshold: 0.7,
            battery_option_enabled: false,
            battery_mean: 0.6,
            battery_variance: 0.4,
        }
    }
}

impl DaisParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(D2dError::InvalidParams(m.to_string()));
        if !(self.max_distance_form_cluster <= self.max_query_d2dr_distance
            && self.max_query_d2dr_distance <= self.max_distance_multihop)
        {
            return bad("need max_distance_form_cluster <= max_query_d2dr_distance <= max_distance_multihop");
        }
        if !(self.perc_data_rate > 0.0 && self.perc_data_rate < 1.0) {
            return bad("perc_data_rate must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.battery_threshold) {
            return bad("battery_threshold must lie in [0, 1]");
        }
        if self.d_serving_cap > self.max_users_ch {
            return bad("d_serving_cap may not exceed max_users_ch");
        }
        if !(self.battery_variance >= 0.0) {
            return bad("battery_variance must be non-negative");
        }
        Ok(())
    }

    pub fn limits(&self) -> ServingLimits {
        ServingLimits {
            d_serving_cap: self.d_serving_cap,
            max_users_ch: self.max_users_ch,
        }
    }

    /// Whether a node with `battery` may hold a serving role.
    pub fn battery_ok(&self, battery: f64) -> bool {
        !self.battery_option_enabled || battery >= self.battery_threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TransmissionMode::*;

    fn topo() -> Topology {
        Topology::new(
            BaseStation {
                pos: Position::new(500.0, 500.0),
                antenna_gain_db: 40.0,
            },
            Area::default(),
            ServingLimits {
                d_serving_cap: 3,
                max_users_ch: 5,
            },
        )
    }

    fn ue(id: u32, mode: TransmissionMode) -> UeNode {
        let mut n = UeNode::new(
            NodeId(id),
            Position::new(id as f64, 10.0),
            0.5,
            260.0,
            130.0,
        );
        n.mode = mode;
        n
    }

    fn chain() -> Topology {
        // c -> r -> m -> BS
        let mut t = topo();
        t.insert(ue(3, D2dMultiHopRelay)).unwrap();
        t.insert(ue(2, D2dRelay)).unwrap();
        t.insert(ue(1, D2dClient)).unwrap();
        t.attach(NodeId(2), NodeId(3)).unwrap();
        t.attach(NodeId(1), NodeId(2)).unwrap();
        t
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)),
            5.0
        );
        assert_eq!(
            distance(Position::new(500.0, 500.0), Position::new(500.0, 500.0)),
            0.0
        );
        assert_eq!(
            distance(Position::new(100.0, 200.0), Position::new(400.0, 600.0)),
            500.0
        );
    }

    #[test]
    fn paths() {
        let t = chain();
        assert_eq!(
            path_to_bs(&t, NodeId(1)).unwrap(),
            vec![NodeId(1), NodeId(2), NodeId(3)]
        );
        assert_eq!(path_to_bs(&t, NodeId(3)).unwrap(), vec![NodeId(3)]);

        let mut t = topo();
        t.insert(ue(0, D2dRelay)).unwrap();
        t.insert(ue(1, D2dClient)).unwrap();
        t.attach(NodeId(1), NodeId(0)).unwrap();
        assert_eq!(
            path_to_bs(&t, NodeId(1)).unwrap(),
            vec![NodeId(1), NodeId(0)]
        );
        assert!(matches!(
            path_to_bs(&t, NodeId(9)),
            Err(D2dError::NotFound(_))
        ));
    }

    #[test]
    fn cycle_is_corruption() {
        let mut t = chain();
        t.node_mut(NodeId(3)).unwrap().parent = Some(NodeId(1));
        assert!(matches!(
            path_to_bs(&t, NodeId(1)),
            Err(D2dError::TopologyCorruption { .. })
        ));
        let v = validate_topology(&t);
        assert!(v.iter().any(|x| matches!(x, Violation::Cycle { .. })));
    }

    #[test]
    fn valid_chain_has_no_violations() {
        assert!(validate_topology(&chain()).is_empty());
    }

    #[test]
    fn client_under_client_is_role_violation() {
        let mut t = topo();
        t.insert(ue(0, D2dClient)).unwrap();
        t.insert(ue(1, D2dClient)).unwrap();
        t.attach(NodeId(1), NodeId(0)).unwrap();
        let v = validate_topology(&t);
        assert!(v.iter().any(|x| matches!(
            x,
            Violation::Role {
                node: NodeId(1),
                ..
            }
        )));
    }

    #[test]
    fn relay_over_cap() {
        let mut t = topo();
        t.insert(ue(0, D2dRelay)).unwrap();
        for i in 1..=4 {
            t.insert(ue(i, D2dClient)).unwrap();
            t.attach(NodeId(i), NodeId(0)).unwrap();
        }
        let v = validate_topology(&t);
        assert_eq!(
            v,
            vec![Violation::Cap {
                node: NodeId(0),
                served: 4,
                cap: 3
            }]
        );
    }

    #[test]
    fn broken_duality_is_reported() {
        let mut t = chain();
        t.node_mut(NodeId(2)).unwrap().served.clear();
        let v = validate_topology(&t);
        assert!(v.contains(&Violation::Duality {
            node: NodeId(2),
            child: NodeId(1)
        }));
    }

    #[test]
    fn attach_moves_between_served_sets() {
        let mut t = chain();
        t.insert(ue(4, D2dRelay)).unwrap();
        t.node_mut(NodeId(4)).unwrap().mode = D2dRelay;
        t.attach(NodeId(1), NodeId(4)).unwrap();
        assert!(t.node(NodeId(2)).unwrap().served.is_empty());
        assert!(t.node(NodeId(4)).unwrap().served.contains(&NodeId(1)));
        assert!(validate_topology(&t).is_empty());
    }

    #[test]
    fn default_params_are_consistent() {
        DaisParams::default().validate().unwrap();
        let p = DaisParams {
            d_serving_cap: 300,
            ..DaisParams::default()
        };
        assert!(p.validate().is_err());
    }
}
