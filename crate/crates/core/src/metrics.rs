//! Network-level measurements of a finished topology.

use std::collections::BTreeMap;

use crate::channel::{LinkRates, TopologyLinks};
use crate::error::Result;
use crate::model::{NodeId, Topology, TransmissionMode};
use crate::scenario::Scenario;
use crate::sim::{run_strategy, SimConfig, Strategy};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    /// b/s/Hz summed over every parent link.
    pub spectral_efficiency: f64,
    /// mW.
    pub total_tx_power: f64,
    /// mW.
    pub power_saved: f64,
    pub cluster_count: usize,
    pub mean_cluster_size: f64,
    pub mode_histogram: BTreeMap<TransmissionMode, usize>,
    /// Wall-clock time spent in mode selection, µs. Zero unless timing is on.
    pub decision_time_total: f64,
    pub link_evaluations: u64,
}

/// Sum of the rates of every UE's parent link (unit bandwidth).
pub fn spectral_efficiency(topology: &Topology, links: &dyn LinkRates) -> Result<f64> {
    let mut total = 0.0;
    for n in topology.nodes() {
        total += links.link_rate(n.id, n.parent.unwrap_or(NodeId::BS))?;
    }
    Ok(total)
}

/// Uplink transmit power summed over UEs: D2D power on UE-to-UE links,
/// cellular power on UE-to-BS links.
pub fn total_tx_power(topology: &Topology) -> f64 {
    topology.nodes().map(|n| n.uplink_power()).sum()
}

/// Power saved against every UE transmitting to the BS.
pub fn power_saved(topology: &Topology) -> f64 {
    let all_cellular: f64 = topology.nodes().map(|n| n.tx_power_cellular).sum();
    all_cellular - total_tx_power(topology)
}

/// Relays with at least one client, and the mean number of clients each.
pub fn cluster_stats(topology: &Topology) -> (usize, f64) {
    let sizes: Vec<usize> = topology
        .nodes()
        .filter(|n| n.mode == TransmissionMode::D2dRelay && !n.served.is_empty())
        .map(|n| n.served.len())
        .collect();
    if sizes.is_empty() {
        return (0, 0.0);
    }
    (
        sizes.len(),
        sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
    )
}

/// Node count per mode; every mode is present, possibly with zero.
pub fn mode_histogram(topology: &Topology) -> BTreeMap<TransmissionMode, usize> {
    let mut h: BTreeMap<TransmissionMode, usize> =
        TransmissionMode::ALL.iter().map(|&m| (m, 0)).collect();
    for n in topology.nodes() {
        *h.entry(n.mode).or_default() += 1;
    }
    h
}

/// Every static metric of `topology`; the timing and counter fields are
/// left at zero.
pub fn topology_metrics(topology: &Topology, links: &dyn LinkRates) -> Result<RunMetrics> {
    let (cluster_count, mean_cluster_size) = cluster_stats(topology);
    Ok(RunMetrics {
        spectral_efficiency: spectral_efficiency(topology, links)?,
        total_tx_power: total_tx_power(topology),
        power_saved: power_saved(topology),
        cluster_count,
        mean_cluster_size,
        mode_histogram: mode_histogram(topology),
        decision_time_total: 0.0,
        link_evaluations: 0,
    })
}

/// Runs `strategy` over `scenario` and measures the result.
pub fn measure_decisions(
    strategy: Strategy,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<RunMetrics> {
    let out = run_strategy(strategy, scenario, cfg)?;
    let geometry = scenario.cellular_topology();
    let channel = scenario.channel();
    let mut m = topology_metrics(&out.topology, &TopologyLinks::new(&geometry, &channel))?;
    m.decision_time_total = out.decision_time.as_secs_f64() * 1e6;
    m.link_evaluations = out.link_evaluations;
    Ok(m)
}
