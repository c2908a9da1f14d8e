//! Property suite; every property runs at least 1000 cases.

mod common;

use common::*;
use d2d_dais::channel::{link_rate, link_snr, RadioParams};
use d2d_dais::dais::{apply_decision, Branch, ModeDecision, UeView};
use d2d_dais::model::{validate_topology, Area, DaisParams};
use d2d_dais::scenario::{battery_draw, sample_battery, stream_rng, Scenario};
use d2d_dais::wdr::{cached_wdr, node_wdr, path_wdr, refresh_all, Wdr};
use d2d_dais::{NodeId, Position, Result, TransmissionMode};
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn predicate_argmax_matches_brute_force(inst in instance()) {
        check_argmax(&inst)?;
    }

    #[test]
    fn first_satisfied_predicate_decides(inst in instance()) {
        check_branch_order(&inst)?;
    }

    #[test]
    fn decisions_are_internally_consistent(inst in instance()) {
        let links = inst.links();
        let d = d2d_dais::dais::select_transmission_mode(&inst.ue, &inst.beliefs, &inst.params, &links).unwrap();
        prop_assert!(d.is_consistent());
        if d.branch == Branch::DefaultMhrToBs {
            let expect = if inst.params.battery_ok(inst.ue.battery) {
                TransmissionMode::D2dMultiHopRelay
            } else {
                TransmissionMode::Cellular
            };
            prop_assert_eq!(d.self_mode, expect);
        }
    }

    #[test]
    fn runs_valid_after_every_decision(sc in small_scenario()) {
        check_runs_stay_valid(&sc)?;
    }

    #[test]
    fn baselines_always_valid(sc in small_scenario(), p_ch in 0.0..=1.0f64) {
        check_baselines_valid(&sc, p_ch)?;
    }

    #[test]
    fn sum_rate_never_touches_real_topology(inst in instance(), sc in small_scenario()) {
        check_sum_rate_is_pure(&inst, &sc)?;
    }

    #[test]
    fn identical_seeds_give_identical_csv(s in run_strategy_arg(), n in 1..=30usize, seed in any::<u64>()) {
        check_deterministic(s, n, seed)?;
    }

    #[test]
    fn incremental_wdr_equals_recomputed(
        parents in prop::collection::vec(any::<prop::sample::Index>(), 1..=12),
        to_bs in prop::collection::vec(any::<bool>(), 12),
        rates in prop::collection::vec(0.01..20.0f64, 12),
    ) {
        // Node i hangs below an earlier node or the BS, giving a forest.
        let sc = d2d_dais::scenario::generate(parents.len(), 1, Area::default(), RadioParams::default(), DaisParams::default()).unwrap();
        let mut t = sc.cellular_topology();
        for i in 1..parents.len() {
            if !to_bs[i] {
                let p = NodeId(parents[i].index(i) as u32);
                t.set_mode(p, TransmissionMode::D2dMultiHopRelay).unwrap();
                t.set_mode(NodeId(i as u32), TransmissionMode::D2dMultiHopRelay).unwrap();
                t.attach(NodeId(i as u32), p).unwrap();
            }
        }
        let links = |a: NodeId, _: NodeId| -> Result<f64> { Ok(rates[a.0 as usize]) };
        refresh_all(&mut t, &links).unwrap();
        for id in t.ids() {
            prop_assert_eq!(cached_wdr(&t, id), Some(node_wdr(&t, id, &links).unwrap()));
        }
    }

    #[test]
    fn path_wdr_is_the_minimum(rates in prop::collection::vec(0.0..100.0f64, 1..20)) {
        let w = path_wdr(&rates).unwrap();
        prop_assert!(rates.iter().all(|&r| Wdr::Finite(r) >= w));
        prop_assert!(rates.iter().any(|&r| Wdr::Finite(r) == w));
    }

    #[test]
    fn rate_monotone_in_distance(d1 in 1.0..1000.0f64, d2 in 1.0..1000.0f64) {
        let r = RadioParams::default();
        let rate = |d| link_rate(link_snr(260.0, 2.0, 40.0, d, &r, 1.0).unwrap(), 1.0);
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(rate(near) >= rate(far));
        prop_assert!(rate(far) >= 0.0);
    }

    #[test]
    fn battery_is_clipped(seed in any::<u64>(), mean in -1.0..2.0f64, var in 0.0..2.0f64) {
        let p = DaisParams { battery_mean: mean, battery_variance: var, ..DaisParams::default() };
        let mut rng = stream_rng(seed, 0);
        for _ in 0..20 {
            let b = sample_battery(&mut rng, &p);
            prop_assert!((0.0..=1.0).contains(&b));
        }
        let _ = battery_draw(&mut rng, &p);
    }

    #[test]
    fn scenario_file_round_trips(sc in small_scenario()) {
        let text = sc.to_json();
        let back = Scenario::from_json(&text).unwrap();
        prop_assert_eq!(back.fingerprint(), sc.fingerprint());
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn beliefs_hold_one_entry_per_foreign_node(inst in instance(), extra in prop::collection::vec(0..20u32, 0..40)) {
        let mut b = inst.beliefs.clone();
        let mut ids: std::collections::BTreeSet<NodeId> = b.neighbors().map(|a| a.id).collect();
        let template = d2d_dais::dais::NeighborAdvert {
            id: NodeId(1),
            pos: Position::new(1.0, 1.0),
            mode: TransmissionMode::D2dRelay,
            wdr: Wdr::Finite(1.0),
            served_count: 0,
            battery: 1.0,
        };
        for id in extra {
            b.upsert(d2d_dais::dais::NeighborAdvert { id: NodeId(id), ..template });
            if id != 0 {
                ids.insert(NodeId(id));
            }
        }
        prop_assert_eq!(b.len(), ids.len());
        prop_assert!(b.get(NodeId(0)).is_none());
    }

    #[test]
    fn failed_application_leaves_topology_untouched(sc in small_scenario(), target in 0..30u32, branch in 0..5usize) {
        let mut t = sc.cellular_topology();
        // Make node 0 not fresh so every decision for it is stale.
        if sc.n_ues > 1 {
            t.set_mode(NodeId(0), TransmissionMode::D2dRelay).unwrap();
            t.set_mode(NodeId(1), TransmissionMode::D2dClient).unwrap();
            t.attach(NodeId(1), NodeId(0)).unwrap();
        }
        let before = t.fingerprint();
        let ue = UeView { id: NodeId(0), pos: Position::new(0.0, 0.0), battery: 1.0 };
        let mut d = ModeDecision::default_for(&ue, &DaisParams::default());
        d.branch = Branch::PRIORITY[branch];
        d.target = Some(NodeId(target));
        if sc.n_ues > 1 {
            prop_assert!(apply_decision(&mut t, NodeId(0), &d).is_err());
            prop_assert_eq!(t.fingerprint(), before);
        }
        prop_assert!(validate_topology(&t).is_empty());
    }
}

#[test]
fn battery_clip_mass_matches_normal_cdf() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let p = DaisParams::default();
    let dist = Normal::new(p.battery_mean, p.battery_variance.sqrt()).unwrap();
    let mut rng = stream_rng(7, 0);
    let n = 200_000;
    let (mut lo, mut hi) = (0usize, 0usize);
    for _ in 0..n {
        let b = sample_battery(&mut rng, &p);
        lo += (b == 0.0) as usize;
        hi += (b == 1.0) as usize;
    }
    // Five binomial standard errors.
    let tol = 5.0 * (0.25 / n as f64).sqrt();
    assert!((lo as f64 / n as f64 - dist.cdf(0.0)).abs() < tol);
    assert!((hi as f64 / n as f64 - (1.0 - dist.cdf(1.0))).abs() < tol);
}
