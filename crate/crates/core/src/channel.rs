//! Log-distance path loss with frozen log-normal shadowing, mapped to
//! spectral efficiency through the Shannon bound.
//!
//! All powers are in mW and the noise floor is a linear power, so
//!
//! ```text
//! snr  = P_tx * G_tx * G_rx * shadow / (d^alpha * N0)
//! rate = B * log2(1 + snr)
//! ```
//!
//! With `bandwidth_hz = 1` the rate is directly in b/s/Hz. There is no
//! interference term: every link is assumed to sit on its own resource block.

use std::cell::Cell;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{D2dError, Result};
use crate::model::{distance, NodeId, Topology, UeNode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub pathloss_exponent: f64,
    pub bs_antenna_gain_db: f64,
    pub ue_antenna_gain_db: f64,
    /// Linear noise power, mW.
    pub noise_n0: f64,
    pub shadowing_sigma_db: f64,
    pub bandwidth_hz: f64,
    pub wifi_direct_radius: f64,
    pub lte_direct_radius: f64,
    pub bs_range: f64,
    /// Default cellular uplink power given to every UE at build time.
    pub ue_power_mw: f64,
    /// Default D2D transmit power given to every UE at build time.
    pub d2d_power_mw: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            pathloss_exponent: 3.5,
            bs_antenna_gain_db: 40.0,
            ue_antenna_gain_db: 2.0,
            noise_n0: 0.0001,
            shadowing_sigma_db: 8.0,
            bandwidth_hz: 1.0,
            wifi_direct_radius: 200.0,
            lte_direct_radius: 1000.0,
            bs_range: 1000.0,
            ue_power_mw: 260.0,
            d2d_power_mw: 130.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(D2dError::InvalidParams(m.to_string()));
        if !(self.pathloss_exponent > 2.0) {
            return bad("pathloss_exponent must exceed 2");
        }
        if !(self.noise_n0 > 0.0) {
            return bad("noise_n0 must be positive");
        }
        if !(self.wifi_direct_radius > 0.0 && self.lte_direct_radius > 0.0 && self.bs_range > 0.0) {
            return bad("radii must be positive");
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return bad("shadowing_sigma_db must be non-negative");
        }
        if !(self.bandwidth_hz > 0.0 && self.ue_power_mw > 0.0 && self.d2d_power_mw > 0.0) {
            return bad("bandwidth and powers must be positive");
        }
        Ok(())
    }
}

pub fn db_to_linear(g_db: f64) -> f64 {
    10f64.powf(g_db / 10.0)
}

/// One log-normal shadowing factor `10^(X/10)`, `X ~ N(0, sigma_db^2)`.
/// `sigma_db == 0` returns exactly 1 without consuming randomness.
pub fn sample_shadowing<R: Rng + ?Sized>(rng: &mut R, sigma_db: f64) -> f64 {
    if sigma_db == 0.0 {
        return 1.0;
    }
    let n = Normal::new(0.0, sigma_db).expect("finite non-negative sigma");
    db_to_linear(n.sample(rng))
}

pub fn link_snr(
    tx_power_mw: f64,
    tx_gain_db: f64,
    rx_gain_db: f64,
    d: f64,
    params: &RadioParams,
    shadow: f64,
) -> Result<f64> {
    if d <= 0.0 {
        return Err(D2dError::DegenerateGeometry {
            a: NodeId::BS,
            b: NodeId::BS,
        });
    }
    let gain = db_to_linear(tx_gain_db) * db_to_linear(rx_gain_db);
    Ok(tx_power_mw * gain * shadow / (d.powf(params.pathloss_exponent) * params.noise_n0))
}

pub fn link_rate(snr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + snr).log2()
}

/// Frozen per-pair shadowing factors over `n_ues` UEs plus the BS.
///
/// Stored as a packed lower triangle over endpoint indices `0..=n_ues`,
/// where index `n_ues` stands for the BS.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowTable {
    n_ues: usize,
    factors: Vec<f64>,
}

impl ShadowTable {
    pub fn pair_count(n_ues: usize) -> usize {
        (n_ues + 1) * n_ues / 2
    }

    /// Draws one factor per unordered pair in [`ShadowTable::pairs`] order.
    pub fn sample<R: Rng + ?Sized>(n_ues: usize, sigma_db: f64, rng: &mut R) -> Self {
        let factors = (0..Self::pair_count(n_ues))
            .map(|_| sample_shadowing(rng, sigma_db))
            .collect();
        Self { n_ues, factors }
    }

    pub fn uniform(n_ues: usize, factor: f64) -> Self {
        Self {
            n_ues,
            factors: vec![factor; Self::pair_count(n_ues)],
        }
    }

    pub fn from_factors(n_ues: usize, factors: Vec<f64>) -> Result<Self> {
        if factors.len() != Self::pair_count(n_ues) {
            return Err(D2dError::Validation(format!(
                "shadow table has {} entries, expected {}",
                factors.len(),
                Self::pair_count(n_ues)
            )));
        }
        Ok(Self { n_ues, factors })
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    fn endpoint(&self, id: NodeId) -> Option<usize> {
        if id.is_bs() {
            Some(self.n_ues)
        } else {
            let i = id.0 as usize;
            (i < self.n_ues).then_some(i)
        }
    }

    fn endpoint_id(&self, i: usize) -> NodeId {
        if i == self.n_ues {
            NodeId::BS
        } else {
            NodeId(i as u32)
        }
    }

    fn index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let (i, j) = (self.endpoint(a)?, self.endpoint(b)?);
        if i == j {
            return None;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        Some(hi * (hi - 1) / 2 + lo)
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.index(a, b).map(|k| self.factors[k])
    }

    pub fn set(&mut self, a: NodeId, b: NodeId, factor: f64) -> Result<()> {
        let k = self
            .index(a, b)
            .ok_or_else(|| D2dError::Validation(format!("no shadow slot for pair ({a}, {b})")))?;
        self.factors[k] = factor;
        Ok(())
    }

    /// All pairs `(a, b, factor)` in storage order; the BS pairs come last.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (1..=self.n_ues).flat_map(move |hi| {
            (0..hi).map(move |lo| {
                (
                    self.endpoint_id(lo),
                    self.endpoint_id(hi),
                    self.factors[hi * (hi - 1) / 2 + lo],
                )
            })
        })
    }
}

/// Radio model plus the frozen shadow table of one scenario.
#[derive(Clone, Debug)]
pub struct Channel {
    pub radio: RadioParams,
    pub shadow: ShadowTable,
}

impl Channel {
    pub fn new(radio: RadioParams, shadow: ShadowTable) -> Self {
        Self { radio, shadow }
    }

    /// Rate of the link on which `from` transmits toward `to` (a UE or the
    /// BS). UE-to-BS links use the cellular power and the BS antenna gain;
    /// UE-to-UE links use the D2D power and UE gains on both ends.
    pub fn uplink_rate(&self, topology: &Topology, from: &UeNode, to: NodeId) -> Result<f64> {
        uplink(topology, from, to, &self.radio, &self.shadow)
    }
}

/// Rate of the link `a -> b`, `b` being a UE or the BS.
pub fn link_rate_between(
    topology: &Topology,
    a: NodeId,
    b: NodeId,
    params: &RadioParams,
    shadow: &ShadowTable,
) -> Result<f64> {
    if a == b {
        return Err(D2dError::DegenerateGeometry { a, b });
    }
    uplink(topology, topology.node(a)?, b, params, shadow)
}

fn uplink(
    topology: &Topology,
    from: &UeNode,
    to: NodeId,
    r: &RadioParams,
    shadow: &ShadowTable,
) -> Result<f64> {
    let (power, rx_gain, to_pos) = if to.is_bs() {
        (
            from.tx_power_cellular,
            topology.bs.antenna_gain_db,
            topology.bs.pos,
        )
    } else {
        (
            from.tx_power_d2d,
            r.ue_antenna_gain_db,
            topology.node(to)?.pos,
        )
    };
    let d = distance(from.pos, to_pos);
    let factor = shadow.get(from.id, to).unwrap_or(1.0);
    let snr = link_snr(power, r.ue_antenna_gain_db, rx_gain, d, r, factor)
        .map_err(|_| D2dError::DegenerateGeometry { a: from.id, b: to })?;
    Ok(link_rate(snr, r.bandwidth_hz))
}

/// Source of link rates for the selection algorithms.
pub trait LinkRates {
    /// Rate of the link on which `from` transmits to `to`.
    fn link_rate(&self, from: NodeId, to: NodeId) -> Result<f64>;
}

impl<F> LinkRates for F
where
    F: Fn(NodeId, NodeId) -> Result<f64>,
{
    fn link_rate(&self, from: NodeId, to: NodeId) -> Result<f64> {
        self(from, to)
    }
}

/// Link rates over a topology snapshot, optionally counting every
/// evaluation into a shared counter.
#[derive(Clone, Copy)]
pub struct TopologyLinks<'a> {
    pub topology: &'a Topology,
    pub channel: &'a Channel,
    pub counter: Option<&'a Cell<u64>>,
}

impl<'a> TopologyLinks<'a> {
    pub fn new(topology: &'a Topology, channel: &'a Channel) -> Self {
        Self {
            topology,
            channel,
            counter: None,
        }
    }

    pub fn counted(topology: &'a Topology, channel: &'a Channel, counter: &'a Cell<u64>) -> Self {
        Self {
            topology,
            channel,
            counter: Some(counter),
        }
    }
}

impl LinkRates for TopologyLinks<'_> {
    fn link_rate(&self, from: NodeId, to: NodeId) -> Result<f64> {
        if let Some(c) = self.counter {
            c.set(c.get() + 1);
        }
        if from == to {
            return Err(D2dError::DegenerateGeometry { a: from, b: to });
        }
        let node = self.topology.node(from)?;
        self.channel.uplink_rate(self.topology, node, to)
    }
}
