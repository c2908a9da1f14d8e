//! Generators, a brute-force predicate oracle and property checks shared by
//! the invariant suite and the acceptance run.

#![allow(dead_code)]

use std::collections::BTreeMap;

use d2d_dais::baselines::{no_d2d_assign, random_cluster_assign, sum_rate_plans, sum_rate_select};
use d2d_dais::bdix::default_plans;
use d2d_dais::channel::{RadioParams, TopologyLinks};
use d2d_dais::dais::{
    find_candidate, select_transmission_mode, Beliefs, Branch, NeighborAdvert, UeView,
};
use d2d_dais::experiment::{rows_to_string, run_one, RunConfig};
use d2d_dais::model::{distance, validate_topology, Area, DaisParams};
use d2d_dais::scenario::{generate, stream_rng, Scenario};
use d2d_dais::sim::{run_agents_observed, Strategy as RunStrategy};
use d2d_dais::wdr::{cached_wdr, node_wdr, Wdr};
use d2d_dais::{D2dError, NodeId, Position, Result, TransmissionMode};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// A UE, up to nine adverts and a link table over them.
#[derive(Clone, Debug)]
pub struct Instance {
    pub ue: UeView,
    pub beliefs: Beliefs,
    pub params: DaisParams,
    /// `(from, to)` rates; pairs at zero distance are absent.
    pub rates: BTreeMap<(NodeId, NodeId), f64>,
}

impl Instance {
    pub fn links(&self) -> impl Fn(NodeId, NodeId) -> Result<f64> + '_ {
        move |a, b| {
            self.rates
                .get(&(a, b))
                .copied()
                .ok_or(D2dError::DegenerateGeometry { a, b })
        }
    }
}

// Coarse grids so that score and distance ties actually occur.
const RATES: [f64; 8] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 9.0];
const COORDS: [f64; 12] = [
    0.0, 30.0, 60.0, 80.0, 100.0, 120.0, 150.0, 200.0, 250.0, 400.0, 700.0, 1000.0,
];

fn mode() -> impl Strategy<Value = TransmissionMode> {
    prop_oneof![
        4 => Just(TransmissionMode::D2dRelay),
        4 => Just(TransmissionMode::D2dMultiHopRelay),
        1 => Just(TransmissionMode::Cellular),
        1 => Just(TransmissionMode::D2dClient),
    ]
}

fn advert_parts() -> impl Strategy<Value = (usize, usize, TransmissionMode, usize, usize, f64)> {
    (
        0..COORDS.len(),
        0..3usize,
        mode(),
        0..RATES.len(),
        0..4usize,
        0.0..1.0f64,
    )
}

pub fn instance() -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec((advert_parts(), 0..RATES.len(), 0..RATES.len()), 0..=9),
        0..RATES.len(),
        0.0..1.0f64,
        any::<bool>(),
        prop_oneof![Just(0.2), Just(0.1), Just(0.5)],
        1..4usize,
    )
        .prop_map(|(ads, self_wdr, battery, gate, perc, cap)| {
            let ue_id = NodeId(0);
            let ue = UeView {
                id: ue_id,
                pos: Position::new(0.0, 0.0),
                battery,
            };
            let params = DaisParams {
                perc_data_rate: perc,
                battery_option_enabled: gate,
                d_serving_cap: cap,
                ..DaisParams::default()
            };
            let mut beliefs = Beliefs::new(ue_id, Wdr::Finite(RATES[self_wdr]));
            let mut rates = BTreeMap::new();
            for (i, ((x, y, m, w, served, b), up, down)) in ads.into_iter().enumerate() {
                let id = NodeId(i as u32 + 1);
                let pos = Position::new(COORDS[x], [0.0, 0.0, 60.0][y]);
                if pos != ue.pos {
                    rates.insert((ue_id, id), RATES[up]);
                    rates.insert((id, ue_id), RATES[down]);
                }
                beliefs.upsert(NeighborAdvert {
                    id,
                    pos,
                    mode: m,
                    wdr: Wdr::Finite(RATES[w]),
                    served_count: served,
                    battery: b,
                });
            }
            Instance {
                ue,
                beliefs,
                params,
                rates,
            }
        })
}

/// Predicate table applied literally: filter every neighbour, then take
/// the best by score, nearer, smaller id.
pub fn oracle(branch: Branch, inst: &Instance) -> Option<NodeId> {
    let p = &inst.params;
    let s = inst.beliefs.self_wdr.value();
    let gate = |b: f64| !p.battery_option_enabled || b >= p.battery_threshold;
    let (fc, fq, fm) = (
        p.max_distance_form_cluster,
        p.max_query_d2dr_distance,
        p.max_distance_multihop,
    );
    let up = |id| inst.rates.get(&(inst.ue.id, id)).copied();
    let down = |id| inst.rates.get(&(id, inst.ue.id)).copied();
    let mut feasible: Vec<(f64, f64, NodeId)> = Vec::new();
    for a in inst.beliefs.neighbors() {
        let d = distance(inst.ue.pos, a.pos);
        let w = a.wdr.value();
        let joins = |ok: bool| -> Option<f64> {
            let via = w.min(up(a.id)?);
            (ok && via >= (1.0 + p.perc_data_rate) * s).then_some(via)
        };
        use TransmissionMode::*;
        let score = match branch {
            Branch::ConnectAsClient => {
                joins(a.mode == D2dRelay && d <= fc && a.served_count < p.d_serving_cap)
            }
            Branch::PromoteMhrToRelayAndJoin => {
                joins(a.mode == D2dMultiHopRelay && d <= fc && a.served_count == 0)
            }
            Branch::DemoteRelayToMhrAndJoinAsRelay => joins(
                a.mode == D2dRelay && fc <= d && d <= fq && a.served_count == 0 && gate(a.battery),
            ),
            Branch::BecomeMhrAndAdoptRelay => down(a.id).and_then(|l| {
                let ok = a.mode == D2dRelay
                    && fc <= d
                    && d <= fq
                    && gate(a.battery)
                    && gate(inst.ue.battery)
                    && w <= (1.0 - p.perc_data_rate) * s.min(l);
                ok.then_some(w)
            }),
            Branch::BecomeRelayUnderMhr => joins(
                a.mode == D2dMultiHopRelay
                    && fq <= d
                    && d <= fm
                    && a.served_count == 0
                    && gate(a.battery),
            ),
            Branch::DefaultMhrToBs => None,
        };
        if let Some(sc) = score {
            feasible.push((sc, d, a.id));
        }
    }
    feasible
        .into_iter()
        .max_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then(y.1.total_cmp(&x.1))
                .then(y.2.cmp(&x.2))
        })
        .map(|c| c.2)
}

pub fn check_argmax(inst: &Instance) -> std::result::Result<(), TestCaseError> {
    let links = inst.links();
    for b in Branch::PRIORITY {
        let got = find_candidate(b, &inst.ue, &inst.beliefs, &inst.params, &links).map_err(fail)?;
        prop_assert_eq!(got, oracle(b, inst), "branch {:?}", b);
    }
    Ok(())
}

pub fn check_branch_order(inst: &Instance) -> std::result::Result<(), TestCaseError> {
    let links = inst.links();
    let d =
        select_transmission_mode(&inst.ue, &inst.beliefs, &inst.params, &links).map_err(fail)?;
    let first = Branch::PRIORITY
        .into_iter()
        .find_map(|b| oracle(b, inst).map(|id| (b, id)));
    match first {
        Some((b, id)) => {
            prop_assert_eq!(d.branch, b);
            prop_assert_eq!(d.target, Some(id));
        }
        None => {
            prop_assert_eq!(d.branch, Branch::DefaultMhrToBs);
            prop_assert_eq!(d.target, None);
        }
    }
    Ok(())
}

/// Small scenario parameters: N, seed, battery option, margin.
pub fn small_scenario() -> impl Strategy<Value = Scenario> {
    (
        1..=24usize,
        any::<u64>(),
        any::<bool>(),
        prop_oneof![Just(0.2), Just(0.1), Just(0.4)],
    )
        .prop_map(|(n, seed, gate, perc)| {
            let dais = DaisParams {
                battery_option_enabled: gate,
                perc_data_rate: perc,
                ..DaisParams::default()
            };
            // A small area keeps the instances dense enough to cluster.
            generate(
                n,
                seed,
                Area { w: 300.0, h: 300.0 },
                RadioParams::default(),
                dais,
            )
            .unwrap()
        })
}

fn fail(e: D2dError) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

/// Validity and cache exactness after every decision of both agent-based
/// strategies.
pub fn check_runs_stay_valid(sc: &Scenario) -> std::result::Result<(), TestCaseError> {
    let geometry = sc.cellular_topology();
    let channel = sc.channel();
    let links = TopologyLinks::new(&geometry, &channel);
    for sum_rate in [false, true] {
        let mut observe = |t: &d2d_dais::Topology, _: &_| -> Result<()> {
            let v = validate_topology(t);
            if !v.is_empty() {
                return Err(D2dError::Invariant(format!("{v:?}")));
            }
            for id in t.ids() {
                let fresh = node_wdr(t, id, &links)?;
                if cached_wdr(t, id) != Some(fresh) {
                    return Err(D2dError::Invariant(format!("cached WDR of {id} is stale")));
                }
            }
            Ok(())
        };
        let out = if sum_rate {
            run_agents_observed(sc, sum_rate_plans, false, &mut observe)
        } else {
            run_agents_observed(sc, default_plans, false, &mut observe)
        }
        .map_err(fail)?;
        prop_assert_eq!(out.decisions.len(), sc.n_ues);
    }
    Ok(())
}

pub fn check_baselines_valid(sc: &Scenario, p_ch: f64) -> std::result::Result<(), TestCaseError> {
    prop_assert!(validate_topology(&no_d2d_assign(sc)).is_empty());
    let t = random_cluster_assign(sc, &mut stream_rng(sc.seed, 2), p_ch).map_err(fail)?;
    prop_assert!(
        validate_topology(&t).is_empty(),
        "{:?}",
        validate_topology(&t)
    );
    Ok(())
}

pub fn check_sum_rate_is_pure(
    inst: &Instance,
    sc: &Scenario,
) -> std::result::Result<(), TestCaseError> {
    // A real topology of fresh cellular nodes; the instance beliefs refer to
    // ids that may or may not be in it, exercising the stale path too.
    let t = sc.cellular_topology();
    let before = t.fingerprint();
    let links = |a: NodeId, b: NodeId| -> Result<f64> {
        Ok(inst.rates.get(&(a, b)).copied().unwrap_or(1.0))
    };
    let (d, _) =
        sum_rate_select(&inst.ue, &inst.beliefs, &t, &inst.params, &links).map_err(fail)?;
    prop_assert!(d.is_consistent());
    prop_assert_eq!(t.fingerprint(), before);
    Ok(())
}

pub fn check_deterministic(
    strategy: RunStrategy,
    n: usize,
    seed: u64,
) -> std::result::Result<(), TestCaseError> {
    let cfg = RunConfig::default();
    let a = rows_to_string(&[run_one(strategy, n, seed, &cfg).map_err(fail)?]);
    let b = rows_to_string(&[run_one(strategy, n, seed, &cfg).map_err(fail)?]);
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn run_strategy_arg() -> impl Strategy<Value = RunStrategy> {
    prop::sample::select(RunStrategy::ALL.to_vec())
}
