//! Time-driven scenario runner: per step it propagates positions, masks the
//! link set, maintains the block underlay, refreshes forwarding caches, makes
//! one delivery attempt per active flow, feeds the event stream into the
//! overhead models, and accumulates metrics. A run is a pure function of its
//! configuration.

pub mod config;
pub mod metrics;
pub mod output;
pub mod traffic;

pub use config::{RouterKind, ScenarioConfig};
pub use metrics::{
    compute_jitter, compute_stretch, AttemptOutcome, AttemptRecord, MetricsReport, ModeSample,
};
pub use output::write_outputs;
pub use traffic::{generate_traffic, load_cities, CityRecord, Dataflow};

use crate::baselines::{
    FlowId, OverheadAccumulator, OverheadCounts, OverheadEvent, OverheadModel,
    OverheadProtocol, PathMetric, StepRecord,
};
use crate::constellation::{
    build_constellation, gsl_candidates_from, EdgeId, GroundStation, SatId, Topology,
};
use crate::dabnet::{DabnetState, FuOverlay, Strategy};
use crate::error::Error;
use crate::failure::{schedule_failures, AvailabilitySchedule};
use crate::constellation::geodetic_to_eci;
use crate::geom::{EciPosition, SPEED_OF_LIGHT_KM_S};
use crate::naming::{GnsDirectory, Locator};
use crate::rng::derive_seed;
use crate::routing::{
    deliver_with_nbas, refresh_caches, DeliveryContext, DeliveryOutcome, DeliveryResult,
    OpCounters, PfsCache, SourceChoice, SpqState,
};
use crate::snapshot::GraphSnapshot;
use crate::Result;
use metrics::{
    AttemptTotals, FlowSummary, OpsSummary, RealizedSummary, RoundSummary, SurvivabilitySummary,
};
use std::collections::{BTreeMap, BTreeSet};

/// Everything a run produces; the report plus the raw tables behind it.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: MetricsReport,
    pub attempts: Vec<AttemptRecord>,
    pub rounds: Vec<RoundSummary>,
    pub audit: Vec<StepRecord>,
    pub mode_series: Vec<ModeSample>,
    pub partitions: Option<String>,
    pub schedule: AvailabilitySchedule,
}

struct FlowRuntime {
    flow: Dataflow,
    locator: Option<Locator>,
    arrived: bool,
    ended: bool,
    cache: PfsCache,
    spq: SpqState,
    last_src_sat: Option<SatId>,
    latencies: Vec<f64>,
    delivered: u64,
    failed: u64,
    gaps: u64,
    rediscoveries: u64,
    nacks: u64,
}

impl FlowRuntime {
    fn new(flow: Dataflow) -> Self {
        FlowRuntime {
            flow,
            locator: None,
            arrived: false,
            ended: false,
            cache: PfsCache::new(),
            spq: SpqState::new(),
            last_src_sat: None,
            latencies: Vec::new(),
            delivered: 0,
            failed: 0,
            gaps: 0,
            rediscoveries: 0,
            nacks: 0,
        }
    }
}

/// Runs one scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let topo = build_constellation(&cfg.shell)?;
    let cities = load_cities(&cfg.ground.city_file)?;
    let mut stations: BTreeMap<String, GroundStation> = BTreeMap::new();
    let mut gns = GnsDirectory::new();
    for city in &cities {
        let gs = GroundStation {
            id: city.name.clone(),
            lat_deg: city.lat_deg,
            lon_deg: city.lon_deg,
            alt_km: cfg.ground.gs_alt_km,
            min_elevation_deg: cfg.ground.min_elevation_deg,
        };
        gs.validate()?;
        if stations.insert(city.name.clone(), gs).is_some() {
            return Err(Error::InvalidConfig(format!(
                "duplicate city name {:?}",
                city.name
            )));
        }
        gns.bind(
            city.name.clone(),
            Locator {
                lat_deg: city.lat_deg,
                lon_deg: city.lon_deg,
                alt_km: cfg.ground.gs_alt_km,
            },
            0.0,
        );
    }

    let schedule = schedule_failures(&topo, &cfg.failure.to_failure_config(cfg.sim.seed))?;
    let flows = generate_traffic(
        &cities,
        cfg.traffic.flows,
        cfg.sim.duration_s,
        cfg.traffic.min_duration_s,
        cfg.traffic.max_duration_s,
        cfg.traffic.gdp_weight_share,
        derive_seed(cfg.sim.seed, "traffic", 0),
    )?;
    let params = cfg.evolution.to_params(cfg.sim.seed);
    let strategy = cfg.evolution.strategy;
    let uses_dabnet = matches!(cfg.routing.router, RouterKind::Dabr);

    let mut state = DabnetState::new(topo.satellite_count());
    if uses_dabnet && !matches!(strategy, Strategy::Basic) {
        // Initialization: evolve the underlay at t=0 before traffic starts.
        // The static strategy freezes whatever this phase produced.
        let bootstrap_strategy = if matches!(strategy, Strategy::Static) {
            Strategy::Cqsbe
        } else {
            strategy
        };
        let snap0 = GraphSnapshot::capture(&topo, &schedule, 0.0);
        for _ in 0..cfg.evolution.bootstrap_rounds {
            state.maintain(&snap0, &params, bootstrap_strategy);
        }
    }

    let mut runtimes: BTreeMap<FlowId, FlowRuntime> = flows
        .iter()
        .map(|f| (f.flow_id, FlowRuntime::new(f.clone())))
        .collect();
    let mut accumulators: Vec<OverheadAccumulator> = cfg
        .overhead
        .models
        .iter()
        .map(|&protocol| {
            OverheadAccumulator::new(OverheadModel {
                protocol,
                load_fraction: match protocol {
                    OverheadProtocol::AodvLike => cfg.overhead.aodv_load_fraction,
                    _ => 1.0,
                },
            })
        })
        .collect();

    let mut counters = OpCounters::default();
    let mut prev_counters = OpCounters::default();
    let mut prev_available: Option<Vec<bool>> = None;
    let mut attempts: Vec<AttemptRecord> = Vec::new();
    let mut rounds: Vec<RoundSummary> = Vec::new();
    let mut audit: Vec<StepRecord> = Vec::new();
    let mut mode_series: Vec<ModeSample> = Vec::new();
    let mut partitions = cfg.output.dump_partitions.then(String::new);
    let mut min_stretch: Option<f64> = None;
    let mut stretch_sum = 0.0;
    let mut stretch_below_fiber = 0u64;
    let mut stretch_count = 0u64;

    let steps = (cfg.sim.duration_s / cfg.sim.timestep_s).ceil() as u64;
    for step in 0..steps {
        let t = step as f64 * cfg.sim.timestep_s;
        let snap = GraphSnapshot::capture(&topo, &schedule, t);
        let mut events: Vec<OverheadEvent> = Vec::new();

        // availability flips vs. the previous step
        let available: Vec<bool> = (0..topo.edge_count())
            .map(|e| snap.is_available(EdgeId(e as u32)))
            .collect();
        if let Some(prev) = &prev_available {
            for (e, (now, before)) in available.iter().zip(prev).enumerate() {
                if now != before {
                    events.push(OverheadEvent::EdgeFlip {
                        edge: EdgeId(e as u32),
                        up: *now,
                    });
                }
            }
        }
        prev_available = Some(available);

        // underlay maintenance
        let overlay = if uses_dabnet {
            let stats = state.maintain(&snap, &params, strategy);
            for ev in &stats.evolutions {
                events.push(OverheadEvent::BlockEvolved {
                    members: ev.members,
                    internal_edges: ev.internal_edges,
                });
            }
            rounds.push(RoundSummary {
                t,
                iul_changes: stats.iul_changes,
                vagrants: stats.vagrant_count,
                faults: stats.fault_count,
                blocks: stats.block_count,
                max_block_size: stats.max_block_size,
                size_bound: stats.size_bound,
                size_bound_violated: stats.size_bound_violated,
                mean_fu_degree: stats.mean_fu_degree,
                promotions: stats.promotions,
                expansions: stats.expansions,
                shrinks: stats.shrinks,
                splits: stats.splits,
                releases: stats.releases,
            });
            if let Some(dump) = partitions.as_mut() {
                for block in state.blocks() {
                    dump.push_str(&format!("t={t} {}:", block.id));
                    for s in &block.members {
                        dump.push_str(&format!(" {s}"));
                    }
                    dump.push('\n');
                }
            }
            Some(FuOverlay::build(&state, &snap))
        } else {
            None
        };

        // visibility per ground station, computed once per step
        let mut visible: BTreeMap<String, BTreeSet<SatId>> = BTreeMap::new();
        let mut gs_positions: BTreeMap<String, EciPosition> = BTreeMap::new();
        let visible_of = |gs_id: &str,
                              visible: &mut BTreeMap<String, BTreeSet<SatId>>,
                              gs_positions: &mut BTreeMap<String, EciPosition>,
                              snap: &GraphSnapshot| {
            if !visible.contains_key(gs_id) {
                let gs = &stations[gs_id];
                let pos = gs.position_at(t);
                let set: BTreeSet<SatId> =
                    gsl_candidates_from(pos, gs.min_elevation_deg, snap.positions())
                        .into_iter()
                        .collect();
                visible.insert(gs_id.to_string(), set);
                gs_positions.insert(gs_id.to_string(), pos);
            }
        };

        // one delivery attempt per active flow
        let ids: Vec<FlowId> = runtimes.keys().copied().collect();
        for id in ids {
            let rt = runtimes.get_mut(&id).unwrap();
            let active = rt.flow.start_t <= t && t < rt.flow.end_t;
            if !active {
                if rt.arrived && !rt.ended && t >= rt.flow.end_t {
                    rt.ended = true;
                    events.push(OverheadEvent::FlowEnded { flow: id });
                }
                continue;
            }
            if rt.locator.is_none() {
                let (locator, _lease) =
                    gns.resolve(&rt.flow.src_identifier, &rt.flow.dst_identifier, t)?;
                rt.locator = Some(locator);
            }
            let locator = rt.locator.expect("resolved above");

            visible_of(&rt.flow.src_gs.clone(), &mut visible, &mut gs_positions, &snap);
            visible_of(&rt.flow.dst_gs.clone(), &mut visible, &mut gs_positions, &snap);
            let src_vis = &visible[&rt.flow.src_gs];
            let dst_vis = &visible[&rt.flow.dst_gs];
            let src_gs_pos = gs_positions[&rt.flow.src_gs];
            let dst_gs_pos = gs_positions[&rt.flow.dst_gs];

            if src_vis.is_empty() || dst_vis.is_empty() {
                rt.gaps += 1;
                attempts.push(AttemptRecord {
                    t,
                    flow: id,
                    outcome: AttemptOutcome::CoverageGap,
                    src_sat: None,
                    latency_s: None,
                    stretch: None,
                    nacks: 0,
                    rediscoveries: 0,
                    fu_hops: 0,
                    sat_hops: 0,
                });
                continue;
            }

            let dst_pos = geodetic_to_eci(locator.lat_deg, locator.lon_deg, locator.alt_km, t);
            let (src_sat, result) = match cfg.routing.router {
                RouterKind::Dabr => {
                    let overlay = overlay.as_ref().expect("dabr maintains the underlay");
                    refresh_caches(
                        &mut rt.cache,
                        overlay,
                        &snap,
                        dst_pos,
                        cfg.routing.policy,
                        cfg.routing.mdv_literal_argmin,
                        t,
                        cfg.routing.delta_s,
                        &mut counters,
                    );
                    let choice = if cfg.routing.os3 {
                        rt.spq.select(src_vis)?
                    } else {
                        SourceChoice::Best(nearest_visible(src_vis, src_gs_pos, &snap))
                    };
                    let src_sat = choice.sat();
                    let ctx = DeliveryContext {
                        state: &state,
                        overlay,
                        snap: &snap,
                        policy: cfg.routing.policy,
                        mdv_literal_argmin: cfg.routing.mdv_literal_argmin,
                        dst_pos,
                        src_gs_pos,
                        dst_gs_pos,
                        src_visible: src_vis,
                        dst_visible: dst_vis,
                        n_max: cfg.routing.n_max,
                        hop_budget: cfg.routing.hop_budget,
                        delta_s: cfg.routing.delta_s,
                    };
                    // a frozen (static) underlay can hold internally
                    // disconnected blocks; such deliveries fail rather than
                    // abort the run
                    let result = match deliver_with_nbas(&ctx, src_sat, &mut rt.cache, &mut counters)
                    {
                        Ok(r) => r,
                        Err(Error::IntraBlockDisconnected(..)) => DeliveryResult {
                            outcome: DeliveryOutcome::Failed,
                            fu_path: Vec::new(),
                            sat_path: Vec::new(),
                            latency_s: None,
                            rediscoveries: 0,
                            nacks: 0,
                        },
                        Err(e) => return Err(e),
                    };
                    if cfg.routing.os3 {
                        // measured round trip: twice the one-way latency
                        rt.spq.record(choice, result.latency_s.map(|l| 2.0 * l));
                    }
                    (src_sat, result)
                }
                RouterKind::Greedy => {
                    let src_sat = nearest_visible(src_vis, src_gs_pos, &snap);
                    let out = crate::baselines::greedy_geo_baseline(
                        &snap,
                        src_sat,
                        dst_pos,
                        cfg.routing.policy,
                        cfg.routing.mdv_literal_argmin,
                        cfg.routing.hop_budget,
                        dst_vis,
                    );
                    (src_sat, path_to_result(out.delivered().then(|| out.path().to_vec()), src_gs_pos, dst_gs_pos, &snap))
                }
                RouterKind::Mhp | RouterKind::Sdp => {
                    let metric = if matches!(cfg.routing.router, RouterKind::Mhp) {
                        PathMetric::Hops
                    } else {
                        PathMetric::Distance
                    };
                    let src_sat = nearest_visible(src_vis, src_gs_pos, &snap);
                    let dst_sat = nearest_visible(dst_vis, dst_gs_pos, &snap);
                    let path = crate::baselines::shortest_path(&snap, src_sat, dst_sat, metric);
                    (src_sat, path_to_result(path, src_gs_pos, dst_gs_pos, &snap))
                }
            };

            if !rt.arrived {
                rt.arrived = true;
                events.push(OverheadEvent::FlowArrived {
                    flow: id,
                    src_sat,
                    dst_sat: nearest_visible(dst_vis, dst_gs_pos, &snap),
                });
            } else if rt.last_src_sat != Some(src_sat) {
                events.push(OverheadEvent::GslHandover {
                    flow: id,
                    src_sat,
                    dst_sat: nearest_visible(dst_vis, dst_gs_pos, &snap),
                });
            }
            rt.last_src_sat = Some(src_sat);

            let (outcome, stretch) = match result.outcome {
                DeliveryOutcome::Delivered => {
                    rt.delivered += 1;
                    let latency = result.latency_s.expect("delivered");
                    rt.latencies.push(latency);
                    let src = &stations[&rt.flow.src_gs];
                    let dst = &stations[&rt.flow.dst_gs];
                    let stretch = compute_stretch(
                        &result,
                        (src.lat_deg, src.lon_deg),
                        (dst.lat_deg, dst.lon_deg),
                    )?;
                    stretch_sum += stretch;
                    stretch_count += 1;
                    if stretch < metrics::FIBER_STRETCH_THRESHOLD {
                        stretch_below_fiber += 1;
                    }
                    min_stretch = Some(min_stretch.map_or(stretch, |m: f64| m.min(stretch)));
                    (AttemptOutcome::Delivered, Some(stretch))
                }
                DeliveryOutcome::Failed => {
                    rt.failed += 1;
                    (AttemptOutcome::Failed, None)
                }
            };
            rt.rediscoveries += result.rediscoveries as u64;
            rt.nacks += result.nacks as u64;
            attempts.push(AttemptRecord {
                t,
                flow: id,
                outcome,
                src_sat: Some(src_sat),
                latency_s: result.latency_s,
                stretch,
                nacks: result.nacks,
                rediscoveries: result.rediscoveries,
                fu_hops: result.fu_path.len() as u32,
                sat_hops: result.sat_path.len().saturating_sub(1) as u32,
            });
        }

        // event stream into the overhead models and the audit log
        let record = StepRecord {
            t,
            down_edges: snap.down_edges(),
            events,
        };
        for acc in &mut accumulators {
            acc.apply_step(&record, &topo);
        }
        audit.push(record);

        mode_series.push(ModeSample {
            t,
            compute_ops: counters.compute_ops - prev_counters.compute_ops,
            lookup_ops: counters.lookup_ops - prev_counters.lookup_ops,
            wave_refreshes: counters.wave_refreshes - prev_counters.wave_refreshes,
        });
        prev_counters = counters;
    }

    let report = build_report(
        cfg,
        &topo,
        &schedule,
        &flows,
        &runtimes,
        &attempts,
        &rounds,
        &accumulators,
        counters,
        min_stretch,
        stretch_sum,
        stretch_below_fiber,
        stretch_count,
    );
    Ok(ScenarioOutput {
        report,
        attempts,
        rounds,
        audit,
        mode_series,
        partitions,
        schedule,
    })
}

/// Visible satellite with the smallest slant range (ties to the lower id).
fn nearest_visible(visible: &BTreeSet<SatId>, gs_pos: EciPosition, snap: &GraphSnapshot) -> SatId {
    *visible
        .iter()
        .min_by(|&&a, &&b| {
            let da = snap.position(a).distance(gs_pos);
            let db = snap.position(b).distance(gs_pos);
            da.partial_cmp(&db)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .expect("caller checked non-empty")
}

/// Prices a satellite-level baseline path into a delivery result.
fn path_to_result(
    path: Option<Vec<SatId>>,
    src_gs_pos: EciPosition,
    dst_gs_pos: EciPosition,
    snap: &GraphSnapshot,
) -> DeliveryResult {
    match path {
        Some(path) => {
            let mut km = src_gs_pos.distance(snap.position(path[0]));
            for pair in path.windows(2) {
                km += snap.distance(pair[0], pair[1]);
            }
            km += snap.position(*path.last().unwrap()).distance(dst_gs_pos);
            DeliveryResult {
                outcome: DeliveryOutcome::Delivered,
                fu_path: Vec::new(),
                sat_path: path,
                latency_s: Some(km / SPEED_OF_LIGHT_KM_S),
                rediscoveries: 0,
                nacks: 0,
            }
        }
        None => DeliveryResult {
            outcome: DeliveryOutcome::Failed,
            fu_path: Vec::new(),
            sat_path: Vec::new(),
            latency_s: None,
            rediscoveries: 0,
            nacks: 0,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    cfg: &ScenarioConfig,
    topo: &Topology,
    schedule: &AvailabilitySchedule,
    flows: &[Dataflow],
    runtimes: &BTreeMap<FlowId, FlowRuntime>,
    attempts: &[AttemptRecord],
    rounds: &[RoundSummary],
    accumulators: &[OverheadAccumulator],
    counters: OpCounters,
    min_stretch: Option<f64>,
    stretch_sum: f64,
    stretch_below_fiber: u64,
    stretch_count: u64,
) -> MetricsReport {
    let totals = AttemptTotals {
        total: attempts.len() as u64,
        delivered: attempts
            .iter()
            .filter(|a| a.outcome == AttemptOutcome::Delivered)
            .count() as u64,
        failed: attempts
            .iter()
            .filter(|a| a.outcome == AttemptOutcome::Failed)
            .count() as u64,
        coverage_gaps: attempts
            .iter()
            .filter(|a| a.outcome == AttemptOutcome::CoverageGap)
            .count() as u64,
    };

    let pct = |num: u64, den: u64| (den > 0).then(|| 100.0 * num as f64 / den as f64);
    let reachability_pct = pct(totals.delivered, totals.total);
    let reachability_excl_gaps_pct = pct(totals.delivered, totals.delivered + totals.failed);

    let mut per_flow = Vec::new();
    let mut jitters = Vec::new();
    let mut latency_sum = 0.0;
    let mut latency_count = 0u64;
    let mut histogram = vec![0u64; 12];
    let mut flows_attempted = 0u64;
    let mut flows_delivered = 0u64;
    let mut rediscovery_total = 0u64;
    for rt in runtimes.values() {
        let attempts_n = rt.delivered + rt.failed + rt.gaps;
        if attempts_n == 0 {
            continue;
        }
        flows_attempted += 1;
        if rt.delivered > 0 {
            flows_delivered += 1;
        }
        rediscovery_total += rt.rediscoveries;
        let bucket = (rt.rediscoveries as usize).min(11);
        histogram[bucket] += 1;
        latency_sum += rt.latencies.iter().sum::<f64>();
        latency_count += rt.latencies.len() as u64;
        let jitter = (rt.latencies.len() >= 2).then(|| compute_jitter(&rt.latencies));
        if let Some(j) = jitter {
            jitters.push(j);
        }
        per_flow.push(FlowSummary {
            flow: rt.flow.flow_id,
            src_gs: rt.flow.src_gs.clone(),
            dst_gs: rt.flow.dst_gs.clone(),
            attempts: attempts_n,
            delivered: rt.delivered,
            failed: rt.failed,
            coverage_gaps: rt.gaps,
            mean_latency_s: (!rt.latencies.is_empty())
                .then(|| rt.latencies.iter().sum::<f64>() / rt.latencies.len() as f64),
            jitter_s: jitter,
            rediscoveries: rt.rediscoveries,
            nacks: rt.nacks,
        });
    }

    let survivability = SurvivabilitySummary {
        rounds: rounds.len() as u64,
        mean_iul_changes_per_round: if rounds.is_empty() {
            0.0
        } else {
            rounds.iter().map(|r| r.iul_changes as f64).sum::<f64>() / rounds.len() as f64
        },
        end_vagrants: rounds.last().map(|r| r.vagrants).unwrap_or(0),
        end_faults: rounds.last().map(|r| r.faults).unwrap_or(0),
        end_blocks: rounds.last().map(|r| r.blocks).unwrap_or(0),
        mean_fu_degree: if rounds.is_empty() {
            0.0
        } else {
            rounds.iter().map(|r| r.mean_fu_degree).sum::<f64>() / rounds.len() as f64
        },
        max_block_size: rounds.iter().map(|r| r.max_block_size).max().unwrap_or(0),
        size_bound_violation_rounds: rounds.iter().filter(|r| r.size_bound_violated).count()
            as u64,
    };

    let overhead: BTreeMap<String, OverheadCounts> = accumulators
        .iter()
        .map(|acc| {
            let name = match acc.model().protocol {
                OverheadProtocol::OspfLike => "ospf",
                OverheadProtocol::AodvLike => "aodv",
                OverheadProtocol::Dabr => "dabr",
            };
            (name.to_string(), acc.counts())
        })
        .collect();

    MetricsReport {
        scenario: cfg.clone(),
        attempts: totals,
        reachability_pct,
        reachability_excl_gaps_pct,
        flow_reachability_pct: (flows_attempted > 0)
            .then(|| 100.0 * flows_delivered as f64 / flows_attempted as f64),
        mean_latency_s: (latency_count > 0).then(|| latency_sum / latency_count as f64),
        mean_stretch: (stretch_count > 0).then(|| stretch_sum / stretch_count as f64),
        min_stretch,
        stretch_below_fiber_pct: (stretch_count > 0)
            .then(|| 100.0 * stretch_below_fiber as f64 / stretch_count as f64),
        jitter_s: (!jitters.is_empty())
            .then(|| jitters.iter().sum::<f64>() / jitters.len() as f64),
        rediscovery_mean_per_flow: (flows_attempted > 0)
            .then(|| rediscovery_total as f64 / flows_attempted as f64),
        rediscovery_histogram: histogram,
        overhead,
        survivability,
        ops: OpsSummary {
            compute_ops: counters.compute_ops,
            lookup_ops: counters.lookup_ops,
            wave_refreshes: counters.wave_refreshes,
        },
        realized: RealizedSummary {
            satellites: topo.satellite_count() as u64,
            isls: topo.edge_count() as u64,
            affected_edges: schedule.affected_count() as u64,
            affected_fraction: if topo.edge_count() == 0 {
                0.0
            } else {
                schedule.affected_count() as f64 / topo.edge_count() as f64
            },
            flows_generated: flows.len() as u64,
        },
        per_flow,
    }
}
