use criterion::{black_box, criterion_group, criterion_main, Criterion};
use lsn_core::baselines::{shortest_path, PathMetric};
use lsn_core::dabnet::{cqs_score, DabnetState, EvolutionParams, FuOverlay, Strategy};
use lsn_core::routing::{
    deliver_with_nbas, DeliveryContext, GeoPolicy, OpCounters, PfsCache,
};
use lsn_core::{
    build_constellation, gsl_candidates, schedule_failures, FailureConfig, GraphSnapshot,
    GroundStation, SatId, ShellConfig,
};
use std::collections::BTreeSet;

fn shell() -> ShellConfig {
    ShellConfig {
        planes: 12,
        sats_per_plane: 49,
        altitude_km: 1200.0,
        inclination_deg: 87.9,
        phase_offset: 1,
    }
}

fn failures(ratio: f64) -> FailureConfig {
    FailureConfig {
        failure_ratio: ratio,
        seed: 9,
        ..FailureConfig::default()
    }
}

fn bench_maintenance(c: &mut Criterion) {
    let topo = build_constellation(&shell()).unwrap();
    let sched = schedule_failures(&topo, &failures(0.3)).unwrap();
    let params = EvolutionParams {
        seed: 4,
        ..Default::default()
    };
    c.bench_function("maintain_round_588_30pct", |b| {
        let mut state = DabnetState::new(topo.satellite_count());
        let mut t = 0.0;
        b.iter(|| {
            let snap = GraphSnapshot::capture(&topo, &sched, t);
            t += 1.0;
            black_box(state.maintain(&snap, &params, Strategy::Cqsbe))
        })
    });
}

fn bench_cqs(c: &mut Criterion) {
    let topo = build_constellation(&shell()).unwrap();
    let sched = schedule_failures(&topo, &failures(0.0)).unwrap();
    let snap = GraphSnapshot::capture(&topo, &sched, 0.0);
    let members: BTreeSet<SatId> = [0u32, 1, 2, 49, 50, 51].map(SatId).into_iter().collect();
    c.bench_function("cqs_score_6_members", |b| {
        b.iter(|| black_box(cqs_score(&members, &snap)))
    });
}

fn bench_delivery(c: &mut Criterion) {
    let topo = build_constellation(&shell()).unwrap();
    let sched = schedule_failures(&topo, &failures(0.3)).unwrap();
    let snap = GraphSnapshot::capture(&topo, &sched, 50.0);
    let params = EvolutionParams {
        seed: 4,
        ..Default::default()
    };
    let mut state = DabnetState::new(topo.satellite_count());
    for _ in 0..30 {
        state.maintain(&snap, &params, Strategy::Cqsbe);
    }
    let overlay = FuOverlay::build(&state, &snap);

    let src_gs = GroundStation {
        id: "src".into(),
        lat_deg: 51.5,
        lon_deg: -0.13,
        alt_km: 0.0,
        min_elevation_deg: 15.0,
    };
    let dst_gs = GroundStation {
        id: "dst".into(),
        lat_deg: 1.35,
        lon_deg: 103.82,
        alt_km: 0.0,
        min_elevation_deg: 15.0,
    };
    let src_visible: BTreeSet<SatId> = gsl_candidates(&src_gs, &topo, 50.0).into_iter().collect();
    let dst_visible: BTreeSet<SatId> = gsl_candidates(&dst_gs, &topo, 50.0).into_iter().collect();
    let src_sat = *src_visible.iter().next().expect("coverage");
    let ctx = DeliveryContext {
        state: &state,
        overlay: &overlay,
        snap: &snap,
        policy: GeoPolicy::Ctv,
        mdv_literal_argmin: false,
        dst_pos: dst_gs.position_at(50.0),
        src_gs_pos: src_gs.position_at(50.0),
        dst_gs_pos: dst_gs.position_at(50.0),
        src_visible: &src_visible,
        dst_visible: &dst_visible,
        n_max: 5,
        hop_budget: 64,
        delta_s: 100.0,
    };
    c.bench_function("deliver_london_singapore_30pct", |b| {
        b.iter(|| {
            let mut cache = PfsCache::new();
            let mut counters = OpCounters::default();
            black_box(deliver_with_nbas(&ctx, src_sat, &mut cache, &mut counters).unwrap())
        })
    });
}

fn bench_shortest_path(c: &mut Criterion) {
    let topo = build_constellation(&shell()).unwrap();
    let sched = schedule_failures(&topo, &failures(0.3)).unwrap();
    let snap = GraphSnapshot::capture(&topo, &sched, 50.0);
    c.bench_function("mhp_588_30pct", |b| {
        b.iter(|| black_box(shortest_path(&snap, SatId(0), SatId(300), PathMetric::Hops)))
    });
    c.bench_function("sdp_588_30pct", |b| {
        b.iter(|| black_box(shortest_path(&snap, SatId(0), SatId(300), PathMetric::Distance)))
    });
}

criterion_group!(
    benches,
    bench_maintenance,
    bench_cqs,
    bench_delivery,
    bench_shortest_path
);
criterion_main!(benches);
