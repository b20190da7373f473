// Batch design-space search over evolution knobs.

use lsn_core::dabnet::{DabnetState, EvolutionParams, FuId, Strategy};
use lsn_core::{
    build_constellation, schedule_failures, FailureConfig, GraphSnapshot, ShellConfig,
};
use std::collections::BTreeSet;

fn main() {
    let shell = ShellConfig {
        planes: 12,
        sats_per_plane: 49,
        altitude_km: 1200.0,
        inclination_deg: 87.9,
        phase_offset: 1,
    };
    let topo = build_constellation(&shell).unwrap();
    let d_max: u32 = std::env::var("LSN_DMAX").unwrap().parse().unwrap();

    println!("strategy seed iul_churn end_vagrants blocks fu_deg_multi fu_deg_dedup");
    for seed in 1..=5u64 {
        let fail = FailureConfig {
            failure_ratio: 0.3,
            duty_min: 0.6,
            duty_max: 1.0,
            seed: seed * 100,
            ..FailureConfig::default()
        };
        let sched = schedule_failures(&topo, &fail).unwrap();
        let params = EvolutionParams {
            seed,
            d_max,
            ..Default::default()
        };
        for strategy in [Strategy::Static, Strategy::Cqsbe, Strategy::Random, Strategy::Basic] {
            let mut state = DabnetState::new(topo.satellite_count());
            // bootstrap like the engine does
            let boot = if matches!(strategy, Strategy::Static) {
                Strategy::Cqsbe
            } else {
                strategy
            };
            if !matches!(strategy, Strategy::Basic) {
                let snap0 = GraphSnapshot::capture(&topo, &sched, 0.0);
                for _ in 0..30 {
                    state.maintain(&snap0, &params, boot);
                }
            }
            let mut churn = 0u64;
            let mut rounds = 0u64;
            let mut last_snap = GraphSnapshot::capture(&topo, &sched, 0.0);
            for step in 0..300 {
                let snap = GraphSnapshot::capture(&topo, &sched, step as f64);
                let stats = state.maintain(&snap, &params, strategy);
                churn += stats.iul_changes as u64;
                rounds += 1;
                last_snap = snap;
            }
            let snap = last_snap;
            let vagrants = state.vagrants().count();
            let blocks = state.block_count();
            let fus = blocks + vagrants;
            let multi = 2.0 * state.iul_edges().len() as f64 / fus.max(1) as f64;
            // dedup definition: distinct neighbor units
            let mut pair_set: BTreeSet<(FuId, FuId)> = BTreeSet::new();
            for &e in state.iul_edges() {
                let (a, b) = snap.endpoints(e);
                let (fa, fb) = (state.fu_of(a), state.fu_of(b));
                let key = if fa < fb { (fa, fb) } else { (fb, fa) };
                pair_set.insert(key);
            }
            let dedup = 2.0 * pair_set.len() as f64 / fus.max(1) as f64;
            println!(
                "{strategy:?} {seed} {:.2} {vagrants} {blocks} {multi:.2} {dedup:.2}",
                churn as f64 / rounds as f64
            );
        }
    }
}
