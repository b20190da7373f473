//! Comparison routers and convergence-overhead accounting: min-hop and
//! shortest-distance paths, an unprotected single-satellite greedy geographic
//! router, and analytic flood/route-request cost models folded over the
//! simulation's event stream.

use crate::constellation::{EdgeId, SatId, Topology};
use crate::geom::EciPosition;
use crate::routing::{egress_score, GeoPolicy};
use crate::snapshot::GraphSnapshot;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

/// Dataflow identifier, shared between the engine and the overhead models.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct FlowId(pub u64);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Shortest paths
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMetric {
    Hops,
    Distance,
}

/// Optimal path over the availability-masked graph, or `None` when the
/// endpoints are disconnected. Hop-count ties resolve to the
/// lexicographically smallest node sequence; distance ties prefer the lower
/// next-hop id.
pub fn shortest_path(
    snap: &GraphSnapshot,
    src: SatId,
    dst: SatId,
    metric: PathMetric,
) -> Option<Vec<SatId>> {
    if src == dst {
        return Some(vec![src]);
    }
    match metric {
        PathMetric::Hops => {
            let mut dist = vec![u32::MAX; snap.satellite_count()];
            dist[dst.index()] = 0;
            let mut queue = VecDeque::from([dst]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in snap.available_neighbors(u) {
                    if dist[v.index()] == u32::MAX {
                        dist[v.index()] = dist[u.index()] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if dist[src.index()] == u32::MAX {
                return None;
            }
            // forward walk taking the smallest id one hop closer
            let mut path = vec![src];
            let mut cur = src;
            while cur != dst {
                let next = snap
                    .available_neighbors(cur)
                    .iter()
                    .map(|&(v, _)| v)
                    .find(|v| dist[v.index()] == dist[cur.index()] - 1)
                    .expect("bfs tree has a predecessor");
                path.push(next);
                cur = next;
            }
            Some(path)
        }
        PathMetric::Distance => {
            let n = snap.satellite_count();
            let mut dist = vec![f64::INFINITY; n];
            dist[dst.index()] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(std::cmp::Reverse((ordered(0.0), dst)));
            while let Some(std::cmp::Reverse((d_bits, u))) = heap.pop() {
                let d = f64::from_bits(d_bits);
                if d > dist[u.index()] {
                    continue;
                }
                for &(v, _) in snap.available_neighbors(u) {
                    let cand = d + snap.distance(u, v);
                    if cand < dist[v.index()] {
                        dist[v.index()] = cand;
                        heap.push(std::cmp::Reverse((ordered(cand), v)));
                    }
                }
            }
            if !dist[src.index()].is_finite() {
                return None;
            }
            let mut path = vec![src];
            let mut cur = src;
            while cur != dst {
                let next = snap
                    .available_neighbors(cur)
                    .iter()
                    .map(|&(v, _)| v)
                    .find(|&v| {
                        let via = dist[v.index()] + snap.distance(cur, v);
                        (via - dist[cur.index()]).abs() <= 1e-9 * dist[cur.index()].max(1.0)
                    })
                    .expect("dijkstra tree has a predecessor");
                path.push(next);
                cur = next;
            }
            Some(path)
        }
    }
}

/// Nonnegative f64 to heap-orderable bits.
fn ordered(d: f64) -> u64 {
    d.to_bits()
}

// ---------------------------------------------------------------------------
// Greedy geographic baseline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GreedyOutcome {
    Delivered(Vec<SatId>),
    DeadEnd(Vec<SatId>),
}

impl GreedyOutcome {
    pub fn delivered(&self) -> bool {
        matches!(self, GreedyOutcome::Delivered(_))
    }

    pub fn path(&self) -> &[SatId] {
        match self {
            GreedyOutcome::Delivered(p) | GreedyOutcome::DeadEnd(p) => p,
        }
    }
}

/// Satellite-level greedy walk with no protection state: at each hop the
/// policy-best available neighbor is taken only if it strictly reduces the
/// distance to the destination; otherwise the walk stops at a local minimum.
/// The walk also stops as delivered on any destination-visible satellite, and
/// the hop budget caps runaway walks.
pub fn greedy_geo_baseline(
    snap: &GraphSnapshot,
    src: SatId,
    dst_pos: EciPosition,
    policy: GeoPolicy,
    mdv_literal_argmin: bool,
    hop_budget: u32,
    dst_visible: &BTreeSet<SatId>,
) -> GreedyOutcome {
    let mut path = vec![src];
    let mut cur = src;
    for _ in 0..hop_budget {
        if dst_visible.contains(&cur) {
            return GreedyOutcome::Delivered(path);
        }
        let cur_pos = snap.position(cur);
        let mut best: Option<(f64, SatId)> = None;
        for &(v, _) in snap.available_neighbors(cur) {
            let score = egress_score(cur_pos, snap.position(v), dst_pos, policy, mdv_literal_argmin);
            let better = match best {
                None => true,
                Some((s, b)) => score > s || (score == s && v < b),
            };
            if better {
                best = Some((score, v));
            }
        }
        let Some((_, next)) = best else {
            return GreedyOutcome::DeadEnd(path);
        };
        if snap.position(next).distance(dst_pos) >= cur_pos.distance(dst_pos) {
            return GreedyOutcome::DeadEnd(path);
        }
        path.push(next);
        cur = next;
    }
    if dst_visible.contains(&cur) {
        GreedyOutcome::Delivered(path)
    } else {
        GreedyOutcome::DeadEnd(path)
    }
}

// ---------------------------------------------------------------------------
// Convergence-overhead accounting
// ---------------------------------------------------------------------------

/// Accounting rule set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverheadProtocol {
    /// Full link-state flood on every topology change.
    #[serde(rename = "ospf")]
    OspfLike,
    /// On-demand route requests on flow arrival and path break.
    #[serde(rename = "aodv")]
    AodvLike,
    /// Convergence confined to evolving blocks; inter-unit forwarding free.
    #[serde(rename = "dabr")]
    Dabr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub protocol: OverheadProtocol,
    /// Fraction of the traffic load this model carries (route-request costs
    /// scale by it).
    pub load_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OverheadCounts {
    pub fib_updates: f64,
    pub control_messages: f64,
}

/// One event visible to the accounting models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OverheadEvent {
    EdgeFlip {
        edge: EdgeId,
        up: bool,
    },
    FlowArrived {
        flow: FlowId,
        src_sat: SatId,
        dst_sat: SatId,
    },
    FlowEnded {
        flow: FlowId,
    },
    GslHandover {
        flow: FlowId,
        src_sat: SatId,
        dst_sat: SatId,
    },
    BlockEvolved {
        members: u32,
        internal_edges: u32,
    },
}

/// Everything the models need about one step, recordable to the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// Edges unavailable during this step.
    pub down_edges: Vec<EdgeId>,
    pub events: Vec<OverheadEvent>,
}

#[derive(Debug, Clone)]
struct AodvFlow {
    src: SatId,
    dst: SatId,
    /// Edge ids of the discovered route; `None` while unreachable.
    path: Option<Vec<EdgeId>>,
}

/// Stateful fold of step records into overhead counts.
#[derive(Debug, Clone)]
pub struct OverheadAccumulator {
    model: OverheadModel,
    counts: OverheadCounts,
    flows: BTreeMap<FlowId, AodvFlow>,
    prev_down: BTreeSet<EdgeId>,
}

impl OverheadAccumulator {
    pub fn new(model: OverheadModel) -> Self {
        OverheadAccumulator {
            model,
            counts: OverheadCounts::default(),
            flows: BTreeMap::new(),
            prev_down: BTreeSet::new(),
        }
    }

    pub fn model(&self) -> OverheadModel {
        self.model
    }

    pub fn counts(&self) -> OverheadCounts {
        self.counts
    }

    pub fn apply_step(&mut self, record: &StepRecord, topo: &Topology) {
        match self.model.protocol {
            OverheadProtocol::OspfLike => self.apply_ospf(record, topo),
            OverheadProtocol::AodvLike => self.apply_aodv(record, topo),
            OverheadProtocol::Dabr => self.apply_dabr(record),
        }
        self.prev_down = record.down_edges.iter().copied().collect();
    }

    fn apply_ospf(&mut self, record: &StepRecord, topo: &Topology) {
        let n = topo.satellite_count() as f64;
        let avail = (topo.edge_count() - record.down_edges.len()) as f64;
        for event in &record.events {
            match event {
                OverheadEvent::EdgeFlip { .. } | OverheadEvent::GslHandover { .. } => {
                    self.counts.fib_updates += n;
                    self.counts.control_messages += 2.0 * avail;
                }
                _ => {}
            }
        }
    }

    fn apply_dabr(&mut self, record: &StepRecord) {
        for event in &record.events {
            if let OverheadEvent::BlockEvolved {
                members,
                internal_edges,
            } = event
            {
                self.counts.fib_updates += *members as f64;
                self.counts.control_messages += 2.0 * *internal_edges as f64;
            }
        }
    }

    fn apply_aodv(&mut self, record: &StepRecord, topo: &Topology) {
        let down: BTreeSet<EdgeId> = record.down_edges.iter().copied().collect();
        let mut touched = BTreeSet::new();

        for event in &record.events {
            match *event {
                OverheadEvent::FlowArrived { flow, src_sat, dst_sat } => {
                    self.flows.insert(
                        flow,
                        AodvFlow {
                            src: src_sat,
                            dst: dst_sat,
                            path: None,
                        },
                    );
                    self.discover(flow, topo, &down);
                    touched.insert(flow);
                }
                OverheadEvent::GslHandover { flow, src_sat, dst_sat } => {
                    if let Some(f) = self.flows.get_mut(&flow) {
                        f.src = src_sat;
                        f.dst = dst_sat;
                        self.discover(flow, topo, &down);
                        touched.insert(flow);
                    }
                }
                OverheadEvent::FlowEnded { flow } => {
                    self.flows.remove(&flow);
                }
                _ => {}
            }
        }

        // breaks of active routes; unreachable flows retry when the mask
        // changed
        let ids: Vec<FlowId> = self.flows.keys().copied().collect();
        let mask_changed = down != self.prev_down;
        for flow in ids {
            if touched.contains(&flow) {
                continue;
            }
            let needs_discovery = match &self.flows[&flow].path {
                Some(path) => path.iter().any(|e| down.contains(e)),
                None => mask_changed,
            };
            if needs_discovery {
                self.discover(flow, topo, &down);
            }
        }
    }

    /// One route request: flood over the nodes reachable from the source,
    /// then install the discovered path (if any).
    fn discover(&mut self, flow: FlowId, topo: &Topology, down: &BTreeSet<EdgeId>) {
        let (src, dst) = {
            let f = &self.flows[&flow];
            (f.src, f.dst)
        };
        let load = self.model.load_fraction;
        let mut dist: Vec<Option<(u32, Option<(SatId, EdgeId)>)>> =
            vec![None; topo.satellite_count()];
        dist[src.index()] = Some((0, None));
        let mut reachable = 1u64;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].expect("visited").0;
            for &(v, e) in topo.neighbors(u) {
                if down.contains(&e) || dist[v.index()].is_some() {
                    continue;
                }
                dist[v.index()] = Some((du + 1, Some((u, e))));
                reachable += 1;
                queue.push_back(v);
            }
        }
        self.counts.control_messages += reachable as f64 * load;
        if let Some((hops, _)) = dist[dst.index()] {
            self.counts.fib_updates += hops as f64 * load;
            let mut edges = Vec::with_capacity(hops as usize);
            let mut cur = dst;
            while let Some((_, Some((parent, e)))) = dist[cur.index()] {
                edges.push(e);
                cur = parent;
            }
            self.flows.get_mut(&flow).expect("exists").path = Some(edges);
        } else {
            self.flows.get_mut(&flow).expect("exists").path = None;
        }
    }
}

/// Folds a recorded event stream into final counts; the engine's running
/// totals must match this fold over its own audit log.
pub fn convergence_overhead(
    model: OverheadModel,
    records: &[StepRecord],
    topo: &Topology,
) -> OverheadCounts {
    let mut acc = OverheadAccumulator::new(model);
    for record in records {
        acc.apply_step(record, topo);
    }
    acc.counts()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_constellation, ShellConfig};
    use crate::failure::AvailabilitySchedule;
    use crate::geom::Vec3;

    fn snap_of(n: usize, edges: &[(u32, u32)], positions: Vec<Vec3>) -> GraphSnapshot {
        let e: Vec<(SatId, SatId)> = edges.iter().map(|&(a, b)| (SatId(a), SatId(b))).collect();
        GraphSnapshot::from_parts(n, e.clone(), vec![true; e.len()], positions, 0.0)
    }

    #[test]
    fn zero_length_path() {
        let snap = snap_of(2, &[(0, 1)], vec![Vec3::ZERO; 2]);
        for metric in [PathMetric::Hops, PathMetric::Distance] {
            assert_eq!(
                shortest_path(&snap, SatId(1), SatId(1), metric),
                Some(vec![SatId(1)])
            );
        }
    }

    #[test]
    fn four_cycle_lexicographic() {
        let snap = snap_of(4, &[(0, 1), (1, 2), (2, 3), (0, 3)], vec![Vec3::ZERO; 4]);
        assert_eq!(
            shortest_path(&snap, SatId(0), SatId(2), PathMetric::Hops),
            Some(vec![SatId(0), SatId(1), SatId(2)])
        );
    }

    #[test]
    fn masked_bridge_disconnects() {
        let e: Vec<(SatId, SatId)> = vec![(SatId(0), SatId(1)), (SatId(1), SatId(2))];
        let snap =
            GraphSnapshot::from_parts(3, e, vec![true, false], vec![Vec3::ZERO; 3], 0.0);
        assert_eq!(shortest_path(&snap, SatId(0), SatId(2), PathMetric::Hops), None);
        assert_eq!(
            shortest_path(&snap, SatId(0), SatId(2), PathMetric::Distance),
            None
        );
    }

    #[test]
    fn distance_metric_takes_shorter_detour() {
        // 0 -> 2 direct link is long; path through 1 is shorter
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(5.0, 1.0, 0.0),
            Vec3::new(10.0, 0.0, 0.0),
        ];
        let snap = snap_of(3, &[(0, 2), (0, 1), (1, 2)], positions.clone());
        // direct: 10; via 1: ~5.1 + ~5.1 = 10.2 -> direct wins
        assert_eq!(
            shortest_path(&snap, SatId(0), SatId(2), PathMetric::Distance),
            Some(vec![SatId(0), SatId(2)])
        );
        // bend node 1 onto the line: via-1 now equals 10, tie -> lower id next hop wins? direct link is the tie at same cost; forward walk picks smallest id neighbor on an optimal path
        let positions2 = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(10.0, 0.0, 0.0),
        ];
        let snap2 = snap_of(3, &[(0, 2), (0, 1), (1, 2)], positions2);
        assert_eq!(
            shortest_path(&snap2, SatId(0), SatId(2), PathMetric::Distance),
            Some(vec![SatId(0), SatId(1), SatId(2)])
        );
    }

    /// Planar 5x5 lattice with a C-shaped failure wall around (2,2): the
    /// greedy walk enters the pocket and stops at the local minimum.
    #[test]
    fn concave_wall_traps_greedy() {
        let id = |x: u32, y: u32| y * 5 + x;
        let mut edges = Vec::new();
        for y in 0..5 {
            for x in 0..5 {
                if x + 1 < 5 {
                    edges.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < 5 {
                    edges.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        let positions: Vec<Vec3> = (0..25)
            .map(|i| Vec3::new((i % 5) as f64 * 10.0, (i / 5) as f64 * 10.0, 0.0))
            .collect();
        let dead: BTreeSet<u32> = [id(2, 1), id(2, 3), id(3, 1), id(3, 2), id(3, 3)]
            .into_iter()
            .collect();
        let avail: Vec<bool> = edges
            .iter()
            .map(|&(a, b)| !dead.contains(&a) && !dead.contains(&b))
            .collect();
        let e: Vec<(SatId, SatId)> = edges.iter().map(|&(a, b)| (SatId(a), SatId(b))).collect();
        let snap = GraphSnapshot::from_parts(25, e, avail, positions, 0.0);

        let dst_pos = Vec3::new(45.0, 20.0, 0.0);
        let dst_visible: BTreeSet<SatId> = [SatId(id(4, 2))].into_iter().collect();
        let out = greedy_geo_baseline(
            &snap,
            SatId(id(0, 2)),
            dst_pos,
            GeoPolicy::Ctv,
            false,
            64,
            &dst_visible,
        );
        assert!(matches!(out, GreedyOutcome::DeadEnd(_)));
        assert_eq!(*out.path().last().unwrap(), SatId(id(2, 2)));
    }

    #[test]
    fn zero_hop_budget() {
        let snap = snap_of(2, &[(0, 1)], vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]);
        let none: BTreeSet<SatId> = BTreeSet::new();
        let both: BTreeSet<SatId> = [SatId(0)].into_iter().collect();
        let out = greedy_geo_baseline(
            &snap,
            SatId(0),
            Vec3::new(2.0, 0.0, 0.0),
            GeoPolicy::Ctv,
            false,
            0,
            &none,
        );
        assert!(!out.delivered());
        let out = greedy_geo_baseline(
            &snap,
            SatId(0),
            Vec3::new(2.0, 0.0, 0.0),
            GeoPolicy::Ctv,
            false,
            0,
            &both,
        );
        assert!(out.delivered());
    }

    fn grid_topology() -> Topology {
        build_constellation(&ShellConfig {
            planes: 10,
            sats_per_plane: 10,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            phase_offset: 1,
        })
        .unwrap()
    }

    #[test]
    fn empty_stream_counts_nothing() {
        let topo = grid_topology();
        for protocol in [
            OverheadProtocol::OspfLike,
            OverheadProtocol::AodvLike,
            OverheadProtocol::Dabr,
        ] {
            let counts = convergence_overhead(
                OverheadModel {
                    protocol,
                    load_fraction: 1.0,
                },
                &[],
                &topo,
            );
            assert_eq!(counts, OverheadCounts::default());
        }
    }

    #[test]
    fn ospf_flood_rule() {
        let topo = grid_topology(); // 100 nodes, 200 edges
        let record = StepRecord {
            t: 0.0,
            down_edges: vec![],
            events: vec![OverheadEvent::EdgeFlip {
                edge: EdgeId(0),
                up: true,
            }],
        };
        let counts = convergence_overhead(
            OverheadModel {
                protocol: OverheadProtocol::OspfLike,
                load_fraction: 1.0,
            },
            &[record],
            &topo,
        );
        assert_eq!(counts.fib_updates, 100.0);
        assert_eq!(counts.control_messages, 400.0);
    }

    #[test]
    fn block_scoped_rule() {
        let topo = grid_topology();
        let record = StepRecord {
            t: 0.0,
            down_edges: vec![],
            events: vec![OverheadEvent::BlockEvolved {
                members: 6,
                internal_edges: 7,
            }],
        };
        let counts = convergence_overhead(
            OverheadModel {
                protocol: OverheadProtocol::Dabr,
                load_fraction: 1.0,
            },
            &[record],
            &topo,
        );
        assert_eq!(counts.fib_updates, 6.0);
        assert_eq!(counts.control_messages, 14.0);
    }

    #[test]
    fn aodv_arrival_floods_reachable_and_installs_path() {
        let topo = grid_topology();
        let record = StepRecord {
            t: 0.0,
            down_edges: vec![],
            events: vec![OverheadEvent::FlowArrived {
                flow: FlowId(1),
                src_sat: SatId(0),
                dst_sat: SatId(5),
            }],
        };
        let counts = convergence_overhead(
            OverheadModel {
                protocol: OverheadProtocol::AodvLike,
                load_fraction: 0.5,
            },
            &[record],
            &topo,
        );
        // everything reachable on the intact torus; min-hop 0 -> 5 is 5 hops
        assert_eq!(counts.control_messages, 0.5 * 100.0);
        assert_eq!(counts.fib_updates, 0.5 * 5.0);
    }

    #[test]
    fn aodv_rediscovers_on_break_only() {
        let topo = grid_topology();
        let arrive = StepRecord {
            t: 0.0,
            down_edges: vec![],
            events: vec![OverheadEvent::FlowArrived {
                flow: FlowId(1),
                src_sat: SatId(0),
                dst_sat: SatId(5),
            }],
        };
        let mut acc = OverheadAccumulator::new(OverheadModel {
            protocol: OverheadProtocol::AodvLike,
            load_fraction: 1.0,
        });
        acc.apply_step(&arrive, &topo);
        let after_arrival = acc.counts();

        // a quiet step with an unrelated edge down does not touch the flow
        let far_edge = topo
            .isls()
            .iter()
            .position(|&(a, b)| a.0 >= 50 && b.0 >= 50)
            .unwrap() as u32;
        let quiet = StepRecord {
            t: 1.0,
            down_edges: vec![EdgeId(far_edge)],
            events: vec![],
        };
        acc.apply_step(&quiet, &topo);
        assert_eq!(acc.counts(), after_arrival);

        // breaking an edge of the installed path triggers rediscovery
        let flow_path = acc.flows[&FlowId(1)].path.clone().unwrap();
        let broken = StepRecord {
            t: 2.0,
            down_edges: vec![flow_path[0]],
            events: vec![],
        };
        acc.apply_step(&broken, &topo);
        assert!(acc.counts().control_messages > after_arrival.control_messages);
    }

    #[test]
    fn refold_matches_incremental_totals() {
        let topo = grid_topology();
        let sched = AvailabilitySchedule::always_available(topo.edge_count());
        let _ = GraphSnapshot::capture(&topo, &sched, 0.0);
        let records = vec![
            StepRecord {
                t: 0.0,
                down_edges: vec![],
                events: vec![
                    OverheadEvent::FlowArrived {
                        flow: FlowId(1),
                        src_sat: SatId(0),
                        dst_sat: SatId(33),
                    },
                    OverheadEvent::EdgeFlip {
                        edge: EdgeId(7),
                        up: false,
                    },
                ],
            },
            StepRecord {
                t: 1.0,
                down_edges: vec![EdgeId(7)],
                events: vec![OverheadEvent::BlockEvolved {
                    members: 4,
                    internal_edges: 3,
                }],
            },
            StepRecord {
                t: 2.0,
                down_edges: vec![],
                events: vec![OverheadEvent::FlowEnded { flow: FlowId(1) }],
            },
        ];
        for protocol in [
            OverheadProtocol::OspfLike,
            OverheadProtocol::AodvLike,
            OverheadProtocol::Dabr,
        ] {
            let model = OverheadModel {
                protocol,
                load_fraction: 0.5,
            };
            let mut acc = OverheadAccumulator::new(model);
            for r in &records {
                acc.apply_step(r, &topo);
            }
            assert_eq!(acc.counts(), convergence_overhead(model, &records, &topo));
        }
    }
}
