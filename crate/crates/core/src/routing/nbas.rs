//! Protection forwarding with n-step backward acknowledgments.
//!
//! Each forwarding unit keeps, per dataflow, a protection forwarding stack
//! (PFS): all of its inter-unit links ranked by the geographic score. Normal
//! forwarding peeks the best admissible entry; when a unit dead-ends, a NACK
//! travels one unit upstream, the upstream pops the entry that led into the
//! dead end, and redirects via its next alternative. The total number of
//! backward hops per delivery is bounded; exceeding the bound fails the
//! delivery.

use crate::constellation::{EdgeId, SatId};
use crate::dabnet::{DabnetState, FuId, FuOverlay};
use crate::error::Error;
use crate::geom::{EciPosition, SPEED_OF_LIGHT_KM_S};
use crate::routing::{intra_block_route, rank_egress, GeoPolicy};
use crate::snapshot::GraphSnapshot;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// One cached egress alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PfsEntry {
    pub edge: EdgeId,
    pub local_sat: SatId,
    pub remote_sat: SatId,
}

/// Ranked egress alternatives of one (forwarding unit, flow) pair.
#[derive(Debug, Clone)]
pub struct Pfs {
    pub entries: Vec<PfsEntry>,
    pub last_refresh_t: f64,
}

/// Per-flow protection stacks, keyed by forwarding unit.
#[derive(Debug, Clone, Default)]
pub struct PfsCache {
    stacks: BTreeMap<FuId, Pfs>,
    /// Index of the last uniform refresh wave applied to this cache.
    last_wave: u64,
}

impl PfsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stack(&self, fu: FuId) -> Option<&Pfs> {
        self.stacks.get(&fu)
    }

    pub fn stack_count(&self) -> usize {
        self.stacks.len()
    }

    pub fn clear(&mut self) {
        self.stacks.clear();
    }
}

/// Lookup-mode vs compute-mode accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Geographic rankings evaluated (stack initializations and refreshes).
    pub compute_ops: u64,
    /// Forwarding decisions served from a cached stack.
    pub lookup_ops: u64,
    /// Stacks recomputed by uniform refresh waves.
    pub wave_refreshes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeliveryOutcome {
    Delivered,
    Failed,
}

/// Result of one delivery attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryResult {
    pub outcome: DeliveryOutcome,
    /// Forwarding-unit walk of the final working path.
    pub fu_path: Vec<FuId>,
    /// Satellite-level expansion of the final working path.
    pub sat_path: Vec<SatId>,
    /// One-way propagation latency including both ground links, seconds.
    pub latency_s: Option<f64>,
    /// Successful protection-forwarding activations.
    pub rediscoveries: u32,
    /// Backward acknowledgment hops consumed.
    pub nacks: u32,
}

impl DeliveryResult {
    pub fn delivered(&self) -> bool {
        matches!(self.outcome, DeliveryOutcome::Delivered)
    }

    fn failed(rediscoveries: u32, nacks: u32) -> Self {
        DeliveryResult {
            outcome: DeliveryOutcome::Failed,
            fu_path: Vec::new(),
            sat_path: Vec::new(),
            latency_s: None,
            rediscoveries,
            nacks,
        }
    }
}

/// Immutable inputs of a delivery attempt.
pub struct DeliveryContext<'a> {
    pub state: &'a DabnetState,
    pub overlay: &'a FuOverlay,
    pub snap: &'a GraphSnapshot,
    pub policy: GeoPolicy,
    pub mdv_literal_argmin: bool,
    /// Destination locator converted to ECI at this instant.
    pub dst_pos: EciPosition,
    pub src_gs_pos: EciPosition,
    pub dst_gs_pos: EciPosition,
    pub src_visible: &'a BTreeSet<SatId>,
    pub dst_visible: &'a BTreeSet<SatId>,
    pub n_max: u32,
    /// Forward-hop budget of one attempt (a time-to-live); exceeding it
    /// drops the packet.
    pub hop_budget: u32,
    pub delta_s: f64,
}

struct Frame {
    fu: FuId,
    /// Satellite where the flow entered this unit.
    entry_sat: SatId,
    /// Edge taken into this unit (none for the source frame).
    ingress_edge: Option<EdgeId>,
}

/// Recomputes the uniform refresh wave for a flow's cache. All cached stacks
/// are refreshed together every `delta_s` seconds; between waves forwarding
/// is lookup-only. A non-positive `delta_s` refreshes every step, an infinite
/// one never refreshes.
pub fn refresh_caches(
    cache: &mut PfsCache,
    overlay: &FuOverlay,
    snap: &GraphSnapshot,
    dst_pos: EciPosition,
    policy: GeoPolicy,
    mdv_literal_argmin: bool,
    t: f64,
    delta_s: f64,
    counters: &mut OpCounters,
) {
    let wave = if delta_s <= 0.0 {
        cache.last_wave + 1
    } else if delta_s.is_infinite() {
        0
    } else {
        (t / delta_s).floor() as u64
    };
    if wave <= cache.last_wave {
        return;
    }
    cache.last_wave = wave;
    // drop stacks of units that no longer exist, refresh the rest
    cache.stacks.retain(|fu, _| overlay.contains(*fu));
    let fus: Vec<FuId> = cache.stacks.keys().copied().collect();
    for fu in fus {
        let entries = compute_entries(fu, dst_pos, overlay, snap, policy, mdv_literal_argmin);
        counters.compute_ops += 1;
        counters.wave_refreshes += 1;
        cache.stacks.insert(
            fu,
            Pfs {
                entries,
                last_refresh_t: t,
            },
        );
    }
}

fn compute_entries(
    fu: FuId,
    dst_pos: EciPosition,
    overlay: &FuOverlay,
    snap: &GraphSnapshot,
    policy: GeoPolicy,
    mdv_literal_argmin: bool,
) -> Vec<PfsEntry> {
    rank_egress(fu, dst_pos, overlay, snap, policy, None, mdv_literal_argmin)
        .into_iter()
        .map(|r| PfsEntry {
            edge: r.link.edge,
            local_sat: r.link.local_sat,
            remote_sat: r.link.remote_sat,
        })
        .collect()
}

/// Delivers one datagram from `src_sat`'s forwarding unit toward the
/// destination locator, using cached protection stacks and bounded backward
/// acknowledgments. A unit is terminal when one of its members can downlink
/// to the destination ground station.
///
/// With protection active (`n_max > 0`) the walk is a depth-first search
/// over the unit overlay: forward moves take the best-ranked stack entry
/// leading to a unit not yet visited in this attempt; a unit with no such
/// entry emits a backward acknowledgment, which pops the failed alternative
/// at the upstream unit and redirects. Exceeding the backward budget fails
/// the delivery.
///
/// With `n_max == 0` forwarding is stateless: each unit takes its literal
/// top stack entry, and a walk that revisits a unit (the bounce at a local
/// minimum) is dropped as a loop.
pub fn deliver_with_nbas(
    ctx: &DeliveryContext<'_>,
    src_sat: SatId,
    cache: &mut PfsCache,
    counters: &mut OpCounters,
) -> Result<DeliveryResult> {
    if !ctx.src_visible.contains(&src_sat) {
        return Err(Error::SourceNotVisible(src_sat.0));
    }

    let src_fu = ctx.state.fu_of(src_sat);
    let mut nacks = 0u32;
    let mut rediscoveries = 0u32;
    let mut forwards = 0u32;
    let mut visited: BTreeSet<FuId> = BTreeSet::from([src_fu]);
    let mut pending_redirect = false;
    let protection = ctx.n_max > 0;
    let mut frames = vec![Frame {
        fu: src_fu,
        entry_sat: src_sat,
        ingress_edge: None,
    }];

    loop {
        let top = frames.last().expect("walk never empties");
        let fu = top.fu;

        if is_terminal(ctx, fu) {
            return finish(ctx, &frames, rediscoveries, nacks);
        }

        // current stack, initialized or refreshed on demand
        let stale = match cache.stacks.get(&fu) {
            None => true,
            Some(pfs) => ctx.snap.t() - pfs.last_refresh_t >= ctx.delta_s,
        };
        if stale {
            let entries = compute_entries(
                fu,
                ctx.dst_pos,
                ctx.overlay,
                ctx.snap,
                ctx.policy,
                ctx.mdv_literal_argmin,
            );
            counters.compute_ops += 1;
            cache.stacks.insert(
                fu,
                Pfs {
                    entries,
                    last_refresh_t: ctx.snap.t(),
                },
            );
        } else {
            counters.lookup_ops += 1;
        }

        // best admissible entry: live link leading to a unit not visited in
        // this attempt. Endpoints and the remote unit are resolved against
        // the current overlay; the cached entry may predate membership
        // changes around its edge.
        let live: BTreeMap<EdgeId, &crate::dabnet::IulLink> = ctx
            .overlay
            .links(fu)
            .iter()
            .map(|l| (l.edge, l))
            .collect();
        let pfs = cache.stacks.get_mut(&fu).expect("just ensured");
        // purge entries whose link is gone (lazy, charges no backward hop)
        pfs.entries.retain(|e| live.contains_key(&e.edge));
        let choice = if protection {
            pfs.entries
                .iter()
                .find(|e| !visited.contains(&live[&e.edge].remote_fu))
                .copied()
        } else {
            pfs.entries.first().copied()
        };

        match choice {
            Some(entry) => {
                if forwards == ctx.hop_budget {
                    // time-to-live expired mid-detour
                    return Ok(DeliveryResult::failed(rediscoveries, nacks));
                }
                forwards += 1;
                let link = live[&entry.edge];
                if !visited.insert(link.remote_fu) {
                    // stateless walk came back around: loop, packet dropped
                    return Ok(DeliveryResult::failed(rediscoveries, nacks));
                }
                if pending_redirect {
                    rediscoveries += 1;
                    pending_redirect = false;
                }
                frames.push(Frame {
                    fu: link.remote_fu,
                    entry_sat: link.remote_sat,
                    ingress_edge: Some(entry.edge),
                });
            }
            None => {
                // dead end: signal one unit upstream
                if frames.len() == 1 || nacks == ctx.n_max {
                    return Ok(DeliveryResult::failed(rediscoveries, nacks));
                }
                nacks += 1;
                pending_redirect = true;
                let failed = frames.pop().expect("len > 1");
                let upstream = frames.last().expect("len >= 1");
                let edge = failed.ingress_edge.expect("non-source frame");
                if let Some(pfs) = cache.stacks.get_mut(&upstream.fu) {
                    pfs.entries.retain(|e| e.edge != edge);
                }
            }
        }
    }
}

fn is_terminal(ctx: &DeliveryContext<'_>, fu: FuId) -> bool {
    ctx.state
        .fu_members(fu)
        .iter()
        .any(|s| ctx.dst_visible.contains(s))
}

/// Expands the surviving unit walk into a satellite path and prices it.
fn finish(
    ctx: &DeliveryContext<'_>,
    frames: &[Frame],
    rediscoveries: u32,
    nacks: u32,
) -> Result<DeliveryResult> {
    let last = frames.last().expect("nonempty");
    let exit_sat = ctx
        .state
        .fu_members(last.fu)
        .into_iter()
        .filter(|s| ctx.dst_visible.contains(s))
        .min_by(|&a, &b| {
            let da = ctx.snap.position(a).distance(ctx.dst_gs_pos);
            let db = ctx.snap.position(b).distance(ctx.dst_gs_pos);
            da.partial_cmp(&db)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .expect("terminal unit has a visible member");

    let mut sat_path: Vec<SatId> = Vec::new();
    for (i, frame) in frames.iter().enumerate() {
        let members: BTreeSet<SatId> = ctx.state.fu_members(frame.fu).into_iter().collect();
        let segment_end = if i + 1 < frames.len() {
            // endpoint of the egress link inside this unit
            let next_edge = frames[i + 1].ingress_edge.expect("non-source frame");
            let (a, b) = ctx.snap.endpoints(next_edge);
            if members.contains(&a) {
                a
            } else {
                b
            }
        } else {
            exit_sat
        };
        let segment = intra_block_route(&members, frame.entry_sat, segment_end, ctx.snap)?;
        sat_path.extend(segment);
    }

    let mut km = ctx.src_gs_pos.distance(ctx.snap.position(sat_path[0]));
    for pair in sat_path.windows(2) {
        km += ctx.snap.distance(pair[0], pair[1]);
    }
    km += ctx.snap.position(exit_sat).distance(ctx.dst_gs_pos);

    Ok(DeliveryResult {
        outcome: DeliveryOutcome::Delivered,
        fu_path: frames.iter().map(|f| f.fu).collect(),
        sat_path,
        latency_s: Some(km / SPEED_OF_LIGHT_KM_S),
        rediscoveries,
        nacks,
    })
}
