// Structure probe: compares partitions produced by the evolution strategies.

use lsn_core::dabnet::{DabnetState, EvolutionParams, Strategy};
use lsn_core::{
    build_constellation, schedule_failures, FailureConfig, GraphSnapshot, SatId, ShellConfig,
};

fn main() {
    let cfg = ShellConfig {
        planes: 12,
        sats_per_plane: 49,
        altitude_km: 1200.0,
        inclination_deg: 87.9,
        phase_offset: 1,
    };
    let topo = build_constellation(&cfg).unwrap();
    let fail = FailureConfig {
        failure_ratio: 0.3,
        duty_min: 0.6,
        duty_max: 1.0,
        seed: 1,
        ..FailureConfig::default()
    };
    let sched = schedule_failures(&topo, &fail).unwrap();
    let d_max: u32 = std::env::var("LSN_DMAX").ok().and_then(|v| v.parse().ok()).unwrap_or(3);
    let params = EvolutionParams {
        seed: 11,
        d_max,
        ..Default::default()
    };

    for strategy in [Strategy::Cqsbe, Strategy::Random] {
        let mut state = DabnetState::new(topo.satellite_count());
        let mut last_snap = GraphSnapshot::capture(&topo, &sched, 0.0);
        for step in 0..300 {
            last_snap = GraphSnapshot::capture(&topo, &sched, step as f64);
            state.maintain(&last_snap, &params, strategy);
        }
        let snap = last_snap;

        let vagrant_degrees: Vec<u32> = state.vagrants().map(|s| snap.degree(s)).collect();
        let mean_vag_deg =
            vagrant_degrees.iter().sum::<u32>() as f64 / vagrant_degrees.len().max(1) as f64;
        let mut internal = 0u32;
        let mut boundary = 0usize;
        let mut sizes = Vec::new();
        let mut divs = Vec::new();
        for block in state.blocks() {
            internal += lsn_core::dabnet::internal_edge_count(&block.members, &snap);
            boundary += lsn_core::dabnet::boundary_edges(&block.members, &snap).len();
            sizes.push(block.members.len());
            if let Ok(d) = lsn_core::dabnet::directional_connectivity(&block.members, &snap) {
                divs.push(d);
            }
        }
        let nblocks = state.block_count() as f64;
        let assigned: usize = sizes.iter().sum();
        println!(
            "{strategy:?}: blocks {} assigned {} vagrants {} (mean deg {:.2}) faults {}",
            state.block_count(),
            assigned,
            vagrant_degrees.len(),
            mean_vag_deg,
            state.faults().count(),
        );
        println!(
            "  internal/block {:.2} boundary/block {:.2} mean div {:.3} mean size {:.2} iuls {}",
            internal as f64 / nblocks,
            boundary as f64 / nblocks,
            divs.iter().sum::<f64>() / divs.len().max(1) as f64,
            assigned as f64 / nblocks,
            state.iul_edges().len(),
        );
        // degree histogram of vagrants
        let mut hist = [0u32; 5];
        for d in &vagrant_degrees {
            hist[*d as usize] += 1;
        }
        println!("  vagrant degree histogram: {hist:?}");

        // how often does the stateless top entry at each FU bounce?
        let overlay = lsn_core::dabnet::FuOverlay::build(&state, &snap);
        let dst = lsn_core::geodetic_to_eci(1.35, 103.82, 0.0, 300.0);
        let mut bounce = 0;
        let mut total = 0;
        for fu in overlay.fus() {
            let ranked = lsn_core::routing::rank_egress(
                fu,
                dst,
                &overlay,
                &snap,
                lsn_core::routing::GeoPolicy::Ctv,
                None,
                false,
            );
            let Some(top) = ranked.first() else { continue };
            total += 1;
            // does the next unit's top point straight back?
            let next = rank_egress_top(&overlay, &snap, top.link.remote_fu, dst);
            if next == Some(fu) {
                bounce += 1;
            }
        }
        println!("  bounce pairs: {bounce}/{total}");
    }
}

fn rank_egress_top(
    overlay: &lsn_core::dabnet::FuOverlay,
    snap: &GraphSnapshot,
    fu: lsn_core::dabnet::FuId,
    dst: lsn_core::geom::Vec3,
) -> Option<lsn_core::dabnet::FuId> {
    lsn_core::routing::rank_egress(
        fu,
        dst,
        overlay,
        snap,
        lsn_core::routing::GeoPolicy::Ctv,
        None,
        false,
    )
    .first()
    .map(|r| r.link.remote_fu)
}

#[allow(dead_code)]
fn unused(_: SatId) {}
