//! Seeded scenario generation and the versioned JSON scenario file.
//!
//! Randomness comes from ChaCha8 streams keyed by the scenario seed:
//! stream 0 builds the scenario (positions, then batteries, then the
//! shadow table), stream 1 fixes the UE arrival order, stream 2 feeds the
//! random-clustering baseline.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, RadioParams, ShadowTable};
use crate::error::{D2dError, Result};
use crate::model::{Area, BaseStation, DaisParams, NodeId, Position, Topology, UeNode};

pub const SCENARIO_VERSION: u32 = 1;

pub const STREAM_SCENARIO: u64 = 0;
pub const STREAM_ARRIVAL: u64 = 1;
pub const STREAM_CLUSTERING: u64 = 2;

/// Deterministic generator for one of the scenario's random streams.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub battery: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub n_ues: usize,
    pub area: Area,
    pub bs: Position,
    pub radio: RadioParams,
    pub dais: DaisParams,
    pub nodes: Vec<NodeSpec>,
    pub shadow: ShadowTable,
}

/// Battery level before clipping, `N(mean, variance)`.
pub fn battery_draw<R: Rng + ?Sized>(rng: &mut R, params: &DaisParams) -> f64 {
    Normal::new(params.battery_mean, params.battery_variance.sqrt())
        .expect("validated battery distribution")
        .sample(rng)
}

/// Battery level clipped to `[0, 1]`.
pub fn sample_battery<R: Rng + ?Sized>(rng: &mut R, params: &DaisParams) -> f64 {
    battery_draw(rng, params).clamp(0.0, 1.0)
}

/// `n` UEs placed uniformly over `area`, BS at the centre.
pub fn generate(
    n: usize,
    seed: u64,
    area: Area,
    radio: RadioParams,
    dais: DaisParams,
) -> Result<Scenario> {
    if n == 0 {
        return Err(D2dError::EmptyScenario);
    }
    if u32::try_from(n).map_or(true, |v| v == u32::MAX) {
        return Err(D2dError::InvalidParams(format!("too many UEs: {n}")));
    }
    radio.validate()?;
    dais.validate()?;
    let mut rng = stream_rng(seed, STREAM_SCENARIO);
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(0.0..=area.w),
                rng.random_range(0.0..=area.h),
            )
        })
        .collect();
    let nodes = positions
        .into_iter()
        .enumerate()
        .map(|(i, (x, y))| NodeSpec {
            id: i as u32,
            x,
            y,
            battery: 0.0,
        })
        .collect::<Vec<_>>();
    let nodes = nodes
        .into_iter()
        .map(|mut s| {
            s.battery = sample_battery(&mut rng, &dais);
            s
        })
        .collect();
    let shadow = ShadowTable::sample(n, radio.shadowing_sigma_db, &mut rng);
    Ok(Scenario {
        seed,
        n_ues: n,
        area,
        bs: area.center(),
        radio,
        dais,
        nodes,
        shadow,
    })
}

impl Scenario {
    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|s| NodeId(s.id))
    }

    /// Empty topology carrying the BS, area and serving limits.
    pub fn empty_topology(&self) -> Topology {
        Topology::new(
            BaseStation {
                pos: self.bs,
                antenna_gain_db: self.radio.bs_antenna_gain_db,
            },
            self.area,
            self.dais.limits(),
        )
    }

    /// Node `id` as a fresh cellular UE with the default powers.
    pub fn ue_node(&self, id: NodeId) -> Result<UeNode> {
        let s = self
            .nodes
            .get(id.0 as usize)
            .ok_or(D2dError::NotFound(id))?;
        Ok(UeNode::new(
            id,
            Position::new(s.x, s.y),
            s.battery,
            self.radio.ue_power_mw,
            self.radio.d2d_power_mw,
        ))
    }

    /// Every UE as a fresh cellular node on the BS. Also serves as the
    /// static geometry link rates are evaluated against.
    pub fn cellular_topology(&self) -> Topology {
        let mut t = self.empty_topology();
        for id in self.ids() {
            let node = self.ue_node(id).expect("listed node");
            t.insert(node).expect("ids are unique");
        }
        t
    }

    pub fn channel(&self) -> Channel {
        Channel::new(self.radio.clone(), self.shadow.clone())
    }

    /// Seeded permutation of node ids in which the agents start up.
    pub fn arrival_order(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.ids().collect();
        ids.shuffle(&mut stream_rng(self.seed, STREAM_ARRIVAL));
        ids
    }

    /// Hash over every stored bit of the scenario.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.to_json().hash(&mut h);
        h.finish()
    }

    /// Checks the structural invariants of a loaded or hand-edited scenario.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(D2dError::Validation(m));
        self.radio.validate()?;
        self.dais.validate()?;
        if self.n_ues == 0 {
            return Err(D2dError::EmptyScenario);
        }
        if self.nodes.len() != self.n_ues {
            return bad(format!(
                "n_ues is {} but {} nodes are listed",
                self.n_ues,
                self.nodes.len()
            ));
        }
        if !self.area.contains(self.bs) {
            return bad("BS outside the area".into());
        }
        for (i, s) in self.nodes.iter().enumerate() {
            if s.id as usize != i {
                return bad(format!("node {i} has id {}", s.id));
            }
            if !self.area.contains(Position::new(s.x, s.y)) {
                return bad(format!("node {i} outside the area"));
            }
            if !(0.0..=1.0).contains(&s.battery) {
                return bad(format!("node {i} battery {} outside [0, 1]", s.battery));
            }
        }
        if self.shadow.n_ues() != self.n_ues {
            return bad("shadow table size does not match n_ues".into());
        }
        if let Some((a, b, f)) = self
            .shadow
            .pairs()
            .find(|p| !(p.2.is_finite() && p.2 > 0.0))
        {
            return bad(format!("shadow factor {f} for ({a}, {b}) is not positive"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            version: SCENARIO_VERSION,
            seed: self.seed,
            n_ues: self.n_ues,
            area: self.area,
            bs: self.bs,
            radio: self.radio.clone(),
            dais: self.dais.clone(),
            nodes: self.nodes.clone(),
            shadow: self
                .shadow
                .pairs()
                .map(|(a, b, factor)| ShadowEntry {
                    a: a.0,
                    b: b.0,
                    factor,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            version: u32,
        }
        let probe: Probe = serde_json::from_str(text).map_err(parse_error)?;
        if probe.version != SCENARIO_VERSION {
            return Err(D2dError::Version {
                found: probe.version,
                expected: SCENARIO_VERSION,
            });
        }
        let file: ScenarioFile = serde_json::from_str(text).map_err(parse_error)?;
        let expected = ShadowTable::pair_count(file.nodes.len());
        if file.shadow.len() != expected {
            return Err(D2dError::Validation(format!(
                "shadow lists {} pairs, expected {expected}",
                file.shadow.len()
            )));
        }
        let skeleton = ShadowTable::uniform(file.nodes.len(), 1.0);
        for (entry, (a, b, _)) in file.shadow.iter().zip(skeleton.pairs()) {
            if (entry.a, entry.b) != (a.0, b.0) {
                return Err(D2dError::Validation(format!(
                    "shadow entry ({}, {}) out of order, expected ({}, {})",
                    entry.a, entry.b, a.0, b.0
                )));
            }
        }
        let shadow = ShadowTable::from_factors(
            file.nodes.len(),
            file.shadow.iter().map(|e| e.factor).collect(),
        )?;
        let sc = Scenario {
            seed: file.seed,
            n_ues: file.n_ues,
            area: file.area,
            bs: file.bs,
            radio: file.radio,
            dais: file.dais,
            nodes: file.nodes,
            shadow,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| D2dError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = fs::File::create(path).map_err(io)?;
        f.write_all(self.to_json().as_bytes()).map_err(io)?;
        f.write_all(b"\n").map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| D2dError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

fn parse_error(e: serde_json::Error) -> D2dError {
    D2dError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShadowEntry {
    a: u32,
    b: u32,
    factor: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    seed: u64,
    n_ues: usize,
    area: Area,
    bs: Position,
    radio: RadioParams,
    dais: DaisParams,
    nodes: Vec<NodeSpec>,
    shadow: Vec<ShadowEntry>,
}
