//! Weighted data rate: the bottleneck link rate on a node's path to the BS.
//!
//! Nodes cache their uplink rate and WDR. Re-parenting a node drops the
//! cache of its whole subtree ([`crate::model::Topology::attach`]);
//! [`refresh_subtree`] rebuilds it top-down, reusing cached uplink rates so
//! that only the moved link is re-evaluated.

use std::cmp::Ordering;
use std::fmt;

use crate::channel::LinkRates;
use crate::error::{D2dError, Result};
use crate::model::{path_to_bs, NodeId, Topology};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wdr {
    Finite(f64),
    /// The BS end of every path.
    Unbounded,
}

impl Wdr {
    /// Numeric value, `+inf` for [`Wdr::Unbounded`].
    pub fn value(self) -> f64 {
        match self {
            Wdr::Finite(v) => v,
            Wdr::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Wdr::Unbounded)
    }

    pub fn min_rate(self, rate: f64) -> Wdr {
        match self {
            Wdr::Unbounded => Wdr::Finite(rate),
            Wdr::Finite(v) => Wdr::Finite(v.min(rate)),
        }
    }
}

impl PartialOrd for Wdr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Wdr::Unbounded, Wdr::Unbounded) => Some(Ordering::Equal),
            (Wdr::Unbounded, Wdr::Finite(_)) => Some(Ordering::Greater),
            (Wdr::Finite(_), Wdr::Unbounded) => Some(Ordering::Less),
            (Wdr::Finite(a), Wdr::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Wdr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wdr::Finite(v) => write!(f, "{v}"),
            Wdr::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Minimum over the link rates of one path.
pub fn path_wdr(rates: &[f64]) -> Result<Wdr> {
    rates
        .iter()
        .copied()
        .reduce(f64::min)
        .map(Wdr::Finite)
        .ok_or(D2dError::EmptyPath)
}

/// WDR of a node after attaching it by a link of `new_link_rate` below a
/// parent whose WDR is `parent_wdr`.
pub fn incremental_wdr(parent_wdr: Wdr, new_link_rate: f64) -> Wdr {
    parent_wdr.min_rate(new_link_rate)
}

/// WDR of `node` recomputed from scratch over its whole path.
pub fn node_wdr(topology: &Topology, node: NodeId, links: &dyn LinkRates) -> Result<Wdr> {
    if node.is_bs() {
        return Ok(Wdr::Unbounded);
    }
    let path = path_to_bs(topology, node)?;
    let mut rates = Vec::with_capacity(path.len());
    for &hop in &path {
        let parent = topology.node(hop)?.parent.unwrap_or(NodeId::BS);
        rates.push(links.link_rate(hop, parent)?);
    }
    path_wdr(&rates)
}

/// Cached WDR, if the node's cache is current.
pub fn cached_wdr(topology: &Topology, node: NodeId) -> Option<Wdr> {
    if node.is_bs() {
        return Some(Wdr::Unbounded);
    }
    topology.node(node).ok().and_then(|n| n.cache.wdr)
}

/// Cached uplink rate, if current.
pub fn cached_uplink_rate(topology: &Topology, node: NodeId) -> Option<f64> {
    topology.node(node).ok().and_then(|n| n.cache.uplink_rate)
}

/// Rebuilds cached uplink rates and WDRs for `root` and everything below
/// it. Only links without a cached rate are evaluated. The root's parent
/// must already carry a current WDR.
pub fn refresh_subtree(topology: &mut Topology, root: NodeId, links: &dyn LinkRates) -> Result<()> {
    let order = topology.subtree(root)?;
    for id in order {
        let node = topology.node(id)?;
        let parent = node.parent.ok_or_else(|| D2dError::TopologyCorruption {
            node: id,
            reason: "node has no parent".into(),
        })?;
        let parent_wdr =
            cached_wdr(topology, parent).ok_or_else(|| D2dError::TopologyCorruption {
                node: id,
                reason: format!("parent {parent} has no current WDR"),
            })?;
        let rate = match node.cache.uplink_rate {
            Some(r) => r,
            None => links.link_rate(id, parent)?,
        };
        let n = topology.node_mut(id)?;
        n.cache.uplink_rate = Some(rate);
        n.cache.wdr = Some(incremental_wdr(parent_wdr, rate));
    }
    Ok(())
}

/// Rebuilds every cache in the topology, roots first.
pub fn refresh_all(topology: &mut Topology, links: &dyn LinkRates) -> Result<()> {
    let roots: Vec<NodeId> = topology
        .nodes()
        .filter(|n| n.parent == Some(NodeId::BS))
        .map(|n| n.id)
        .collect();
    for r in roots {
        refresh_subtree(topology, r, links)?;
    }
    Ok(())
}
