//! Survivable block-network underlay: satellites are partitioned into
//! autonomous blocks, vagrants, and faulted nodes, and the partition evolves
//! every maintenance round in response to link availability.
//!
//! Block quality is scored by the connection quality score (internal volume
//! over directional spread of the block's external links); shrink victims are
//! chosen by intra-block closeness centrality. A random-selection strategy
//! with identical control flow serves as the evolution baseline, a static
//! strategy freezes blocks after initialization, and a basic strategy keeps
//! every satellite as a singleton forwarding unit.

use crate::constellation::{EdgeId, SatId};
use crate::error::Error;
use crate::rng::derive_rng;
use crate::snapshot::GraphSnapshot;
use crate::Result;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// Denominator clamp for the connection quality score: a perfectly balanced
/// link spread has directional connectivity 0, which would make the score
/// unbounded. Spreads at or below the floor count as balanced; only
/// concentration beyond it is penalized.
pub const DIV_FLOOR: f64 = 0.25;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct BlockId(pub u64);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SatelliteStatus {
    Vagrant,
    Assigned(BlockId),
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockStatus {
    /// Member count or diameter below limit and no way to expand.
    LowSize,
    /// Induced available subgraph is disconnected.
    Disconn,
    /// Exceeds the diameter limit or can still expand.
    Ustable,
    /// Cannot expand: at maximum diameter or no vagrant neighbors.
    Stable,
}

/// Evolution strategy for a maintenance round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Quality-score guided expansion and centrality-guided shrink.
    Cqsbe,
    /// Same control flow, uniformly random candidate selection.
    Random,
    /// No promotion or evolution; only fault ejection and split/release.
    Static,
    /// No blocks at all: every satellite stays a singleton unit.
    Basic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub d_min: u32,
    pub d_max: u32,
    pub n_min: usize,
    /// Balance constant of the monitored size bound (not enforced).
    pub epsilon: f64,
    /// Per-vagrant, per-round probability of seeding a new block.
    pub center_prob: f64,
    /// Bound on expansion/shrink steps per block per round.
    pub max_evolution_iters: u32,
    pub seed: u64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            d_min: 1,
            d_max: 3,
            n_min: 2,
            epsilon: 0.3,
            center_prob: 0.1,
            max_evolution_iters: 32,
            seed: 0,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.d_min < 1 || self.d_min > self.d_max {
            bad.push("evolution.d_min (must satisfy 1 <= d_min <= d_max)");
        }
        if self.n_min < 2 {
            bad.push("evolution.n_min (must be >= 2)");
        }
        if self.epsilon < 0.0 {
            bad.push("evolution.epsilon (must be >= 0)");
        }
        if !(self.center_prob > 0.0 && self.center_prob <= 1.0) {
            bad.push("evolution.center_prob (must be in (0, 1])");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join(", ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub members: BTreeSet<SatId>,
    pub controller: SatId,
}

/// A forwarding unit: a block or a vagrant satellite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FuId {
    Block(BlockId),
    Vagrant(SatId),
}

impl fmt::Display for FuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuId::Block(b) => write!(f, "{b}"),
            FuId::Vagrant(s) => write!(f, "v{}", s.0),
        }
    }
}

/// One evolution event, for block-scoped convergence accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub block: BlockId,
    /// Member count after the step.
    pub members: u32,
    /// Available intra-block edges after the step.
    pub internal_edges: u32,
}

/// Aggregates of one maintenance round.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RoundStats {
    pub promotions: u32,
    pub expansions: u32,
    pub shrinks: u32,
    pub splits: u32,
    pub releases: u32,
    /// Symmetric difference of the inter-unit link set vs. the previous round.
    pub iul_changes: u32,
    pub vagrant_count: u32,
    pub fault_count: u32,
    pub block_count: u32,
    pub max_block_size: u32,
    /// Monitored size bound `(1 + epsilon) * mean block size`.
    pub size_bound: f64,
    pub size_bound_violated: bool,
    /// Mean inter-unit-link count per forwarding unit.
    pub mean_fu_degree: f64,
    pub evolutions: Vec<EvolutionRecord>,
}

/// Public view of an evolution step's effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveOutcome {
    Expanded,
    Shrunk,
    /// No vagrant candidate during expansion: block unchanged, now stable.
    Unchanged,
}

/// Score tolerance treated as an exact tie during candidate selection.
const SCORE_TIE_EPS: f64 = 1e-9;

/// Candidate-selection mode of one evolution step.
enum Guidance<'a> {
    /// Quality-score argmax; ties drawn from the RNG when present.
    Scored(Option<&'a mut rand_chacha::ChaCha8Rng>),
    /// Uniform selection from the same eligible sets.
    Random(&'a mut rand_chacha::ChaCha8Rng),
}

/// The partition state: block membership, vagrants, faults, and the derived
/// inter-unit link set.
#[derive(Debug, Clone)]
pub struct DabnetState {
    status: Vec<SatelliteStatus>,
    blocks: BTreeMap<BlockId, Block>,
    iul_edges: BTreeSet<EdgeId>,
    next_block: u64,
    round: u64,
}

// ---------------------------------------------------------------------------
// Partition metrics
// ---------------------------------------------------------------------------

/// Boundary edges of a member set: available edges with exactly one endpoint
/// inside. For a block these are precisely its inter-unit links.
pub fn boundary_edges(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> Vec<EdgeId> {
    let mut out = Vec::new();
    for &s in members {
        for &(n, e) in snap.available_neighbors(s) {
            if !members.contains(&n) {
                out.push(e);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Directional connectivity: magnitude of the resultant of the boundary
/// links' unit vectors, normalized by their count. Each vector points from
/// the unit's centroid toward the link's external endpoint, so the measure
/// captures how evenly the external links surround the unit: 0 means
/// perfectly dispersed, 1 fully concentrated in one direction.
pub fn directional_connectivity(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> Result<f64> {
    let mut centroid = crate::geom::Vec3::ZERO;
    for &s in members {
        centroid = centroid + snap.position(s);
    }
    centroid = centroid * (1.0 / members.len() as f64);
    let mut resultant = crate::geom::Vec3::ZERO;
    let mut count = 0usize;
    for &s in members {
        for &(n, _) in snap.available_neighbors(s) {
            if !members.contains(&n) {
                if let Some(u) = (snap.position(n) - centroid).unit() {
                    resultant = resultant + u;
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoInterUnitLinks);
    }
    Ok(resultant.norm() / count as f64)
}

/// Volume of a member set: the sum over members of their degree inside the
/// induced available subgraph (twice the internal edge count).
pub fn volume(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> u64 {
    let mut vol = 0u64;
    for &s in members {
        for &(n, _) in snap.available_neighbors(s) {
            if members.contains(&n) {
                vol += 1;
            }
        }
    }
    vol
}

/// Connection quality score: min(volume inside, volume outside) over the
/// directional connectivity (clamped at [`DIV_FLOOR`]). A unit with no
/// external links scores 0 so it can never win an expansion comparison.
///
/// The floor doubles as the balance threshold: link spreads at or below it
/// compare purely by volume, while spreads concentrated beyond it are
/// penalized proportionally.
pub fn cqs_score(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> f64 {
    let vol = volume(members, snap);
    let boundary = boundary_edges(members, snap).len() as u64;
    let vol_rest = 2 * snap.available_edge_count() as u64 - vol - 2 * boundary;
    match directional_connectivity(members, snap) {
        Ok(div) => (vol.min(vol_rest) as f64) / div.max(DIV_FLOOR),
        Err(_) => 0.0,
    }
}

/// Hop distances from `from` to every member, restricted to the induced
/// available subgraph. Unreachable members are `u32::MAX`.
fn bfs_hops(from: SatId, members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> BTreeMap<SatId, u32> {
    let mut dist: BTreeMap<SatId, u32> = members.iter().map(|&s| (s, u32::MAX)).collect();
    if !members.contains(&from) {
        return dist;
    }
    dist.insert(from, 0);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for &(v, _) in snap.available_neighbors(u) {
            if let Some(dv) = dist.get_mut(&v) {
                if *dv == u32::MAX {
                    *dv = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

/// Closeness centrality of `u` inside the block: `(N - 1) / sum of hop
/// distances`. Errors on singleton blocks and non-members.
pub fn closeness_centrality(
    u: SatId,
    members: &BTreeSet<SatId>,
    snap: &GraphSnapshot,
) -> Result<f64> {
    if !members.contains(&u) {
        return Err(Error::NotInBlock(u.0));
    }
    if members.len() < 2 {
        return Err(Error::SingletonBlock);
    }
    let dist = bfs_hops(u, members, snap);
    let mut sum = 0u64;
    for (&v, &d) in &dist {
        if v == u {
            continue;
        }
        if d == u32::MAX {
            return Err(Error::IntraBlockDisconnected(u.0, v.0));
        }
        sum += d as u64;
    }
    Ok((members.len() as f64 - 1.0) / sum as f64)
}

/// Hop diameter of the induced available subgraph, or `None` if disconnected.
pub fn block_diameter(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> Option<u32> {
    let mut diameter = 0;
    for &s in members {
        let dist = bfs_hops(s, members, snap);
        for (_, &d) in &dist {
            if d == u32::MAX {
                return None;
            }
            diameter = diameter.max(d);
        }
    }
    Some(diameter)
}

/// Connected components of the induced available subgraph, largest first
/// (ties: component containing the smallest member id first).
fn components(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> Vec<BTreeSet<SatId>> {
    let mut remaining = members.clone();
    let mut comps = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        remaining.remove(&start);
        comp.insert(start);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in snap.available_neighbors(u) {
                if remaining.remove(&v) {
                    comp.insert(v);
                    queue.push_back(v);
                }
            }
        }
        comps.push(comp);
    }
    comps.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.iter().next().cmp(&b.iter().next()))
    });
    comps
}

/// Available edges with both endpoints in the member set.
pub fn internal_edge_count(members: &BTreeSet<SatId>, snap: &GraphSnapshot) -> u32 {
    let mut count = 0;
    for &s in members {
        for &(n, _) in snap.available_neighbors(s) {
            if n > s && members.contains(&n) {
                count += 1;
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// State and maintenance
// ---------------------------------------------------------------------------

impl DabnetState {
    /// All satellites start as vagrants.
    pub fn new(satellite_count: usize) -> Self {
        DabnetState {
            status: vec![SatelliteStatus::Vagrant; satellite_count],
            blocks: BTreeMap::new(),
            iul_edges: BTreeSet::new(),
            next_block: 0,
            round: 0,
        }
    }

    pub fn satellite_count(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, sat: SatId) -> SatelliteStatus {
        self.status[sat.index()]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(&id)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn vagrants(&self) -> impl Iterator<Item = SatId> + '_ {
        self.status
            .iter()
            .enumerate()
            .filter_map(|(i, s)| matches!(s, SatelliteStatus::Vagrant).then_some(SatId(i as u32)))
    }

    pub fn faults(&self) -> impl Iterator<Item = SatId> + '_ {
        self.status
            .iter()
            .enumerate()
            .filter_map(|(i, s)| matches!(s, SatelliteStatus::Fault).then_some(SatId(i as u32)))
    }

    pub fn iul_edges(&self) -> &BTreeSet<EdgeId> {
        &self.iul_edges
    }

    /// Forwarding unit of a satellite. Faulted satellites map to their
    /// vagrant identity but carry no available links.
    pub fn fu_of(&self, sat: SatId) -> FuId {
        match self.status[sat.index()] {
            SatelliteStatus::Assigned(b) => FuId::Block(b),
            _ => FuId::Vagrant(sat),
        }
    }

    /// Member satellites of a forwarding unit.
    pub fn fu_members(&self, fu: FuId) -> Vec<SatId> {
        match fu {
            FuId::Block(b) => self
                .blocks
                .get(&b)
                .map(|blk| blk.members.iter().copied().collect())
                .unwrap_or_default(),
            FuId::Vagrant(s) => vec![s],
        }
    }

    /// Vagrant satellites adjacent to the member set over available edges.
    pub fn adjacent_vagrants(
        &self,
        members: &BTreeSet<SatId>,
        snap: &GraphSnapshot,
    ) -> BTreeSet<SatId> {
        let mut out = BTreeSet::new();
        for &s in members {
            for &(n, _) in snap.available_neighbors(s) {
                if !members.contains(&n)
                    && matches!(self.status[n.index()], SatelliteStatus::Vagrant)
                {
                    out.insert(n);
                }
            }
        }
        out
    }

    /// Adjacent vagrants whose merge keeps the block inside the diameter
    /// bound. These are the admissible expansion candidates: a block that
    /// still has one can expand regardless of its current diameter.
    pub fn expansion_candidates(
        &self,
        members: &BTreeSet<SatId>,
        snap: &GraphSnapshot,
        params: &EvolutionParams,
    ) -> Vec<SatId> {
        self.adjacent_vagrants(members, snap)
            .into_iter()
            .filter(|&v| {
                let mut merged = members.clone();
                merged.insert(v);
                matches!(block_diameter(&merged, snap), Some(d) if d <= params.d_max)
            })
            .collect()
    }

    /// Status of a block against the current snapshot. A block can expand
    /// while some adjacent vagrant fits under the diameter bound; it must
    /// shrink while the bound is exceeded.
    pub fn classify_block(
        &self,
        block: &Block,
        snap: &GraphSnapshot,
        params: &EvolutionParams,
    ) -> BlockStatus {
        let diameter = match block_diameter(&block.members, snap) {
            Some(d) => d,
            None => return BlockStatus::Disconn,
        };
        let can_expand = !self
            .expansion_candidates(&block.members, snap, params)
            .is_empty();
        let undersized = block.members.len() < params.n_min || diameter < params.d_min;
        if undersized && !can_expand {
            return BlockStatus::LowSize;
        }
        if diameter > params.d_max || can_expand {
            BlockStatus::Ustable
        } else {
            BlockStatus::Stable
        }
    }

    /// One quality-guided evolution step: expand by the quality-score argmax
    /// vagrant while below the diameter limit, otherwise shrink by removing
    /// the lowest-closeness member. Ties resolve to the lowest id.
    pub fn cqsbe_evolve(
        &mut self,
        block_id: BlockId,
        snap: &GraphSnapshot,
        params: &EvolutionParams,
    ) -> Result<EvolveOutcome> {
        self.evolve_step(block_id, snap, params, Guidance::Scored(None))
    }

    fn evolve_step(
        &mut self,
        block_id: BlockId,
        snap: &GraphSnapshot,
        params: &EvolutionParams,
        guidance: Guidance<'_>,
    ) -> Result<EvolveOutcome> {
        let block = self
            .blocks
            .get(&block_id)
            .ok_or(Error::NotInBlock(0))?
            .clone();
        let diameter = block_diameter(&block.members, snap).ok_or(
            Error::IntraBlockDisconnected(block.controller.0, block.controller.0),
        )?;

        if diameter <= params.d_max {
            // Expansion over admissible adjacent vagrants.
            let candidates = self.expansion_candidates(&block.members, snap, params);
            if candidates.is_empty() {
                return Ok(EvolveOutcome::Unchanged);
            }
            let chosen = match guidance {
                Guidance::Random(r) => *candidates.choose(r).expect("nonempty"),
                Guidance::Scored(tie_rng) => {
                    // argmax of the quality score; exact ties (ubiquitous on
                    // the symmetric grid) resolve by seeded draw when an RNG
                    // is supplied, by lowest id otherwise
                    let mut best_score = f64::NEG_INFINITY;
                    let mut best: Vec<SatId> = Vec::new();
                    for &c in &candidates {
                        let mut merged = block.members.clone();
                        merged.insert(c);
                        let score = cqs_score(&merged, snap);
                        if score > best_score + SCORE_TIE_EPS {
                            best_score = score;
                            best = vec![c];
                        } else if (score - best_score).abs() <= SCORE_TIE_EPS {
                            best.push(c);
                        }
                    }
                    match tie_rng {
                        Some(r) => *best.choose(r).expect("nonempty"),
                        None => *best.first().expect("nonempty"),
                    }
                }
            };
            self.status[chosen.index()] = SatelliteStatus::Assigned(block_id);
            self.blocks
                .get_mut(&block_id)
                .expect("block exists")
                .members
                .insert(chosen);
            Ok(EvolveOutcome::Expanded)
        } else {
            // Shrink: drop the member with the lowest closeness centrality.
            // The controller is exempt unless it is the strict sole minimizer
            // in a block of more than two members.
            let eligible: Vec<SatId> = block
                .members
                .iter()
                .copied()
                .filter(|&s| s != block.controller)
                .collect();
            if eligible.is_empty() {
                return Ok(EvolveOutcome::Unchanged);
            }
            let victim = match guidance {
                Guidance::Random(r) => *eligible.choose(r).expect("nonempty"),
                Guidance::Scored(_) => {
                    let phi = |s: SatId| closeness_centrality(s, &block.members, snap);
                    let mut best = eligible[0];
                    let mut best_phi = phi(best)?;
                    for &s in &eligible[1..] {
                        let p = phi(s)?;
                        if p < best_phi {
                            best_phi = p;
                            best = s;
                        }
                    }
                    if block.members.len() > 2 && phi(block.controller)? < best_phi {
                        block.controller
                    } else {
                        best
                    }
                }
            };
            self.remove_member(block_id, victim, SatelliteStatus::Vagrant);
            Ok(EvolveOutcome::Shrunk)
        }
    }

    fn remove_member(&mut self, block_id: BlockId, sat: SatId, to: SatelliteStatus) {
        self.status[sat.index()] = to;
        let remove_block = {
            let block = self.blocks.get_mut(&block_id).expect("block exists");
            block.members.remove(&sat);
            if block.members.is_empty() {
                true
            } else {
                if block.controller == sat {
                    block.controller = *block.members.iter().next().expect("nonempty");
                }
                false
            }
        };
        if remove_block {
            self.blocks.remove(&block_id);
        }
    }

    fn release_block(&mut self, block_id: BlockId) {
        if let Some(block) = self.blocks.remove(&block_id) {
            for s in block.members {
                self.status[s.index()] = SatelliteStatus::Vagrant;
            }
        }
    }

    /// Keeps the maximum connected component of a block and releases the
    /// rest to vagrant status. Returns false if the block vanished.
    fn split_to_max_component(
        &mut self,
        id: BlockId,
        snap: &GraphSnapshot,
        stats: &mut RoundStats,
    ) -> bool {
        let block = match self.blocks.get(&id) {
            Some(b) => b.clone(),
            None => return false,
        };
        let comps = components(&block.members, snap);
        for comp in &comps[1..] {
            for &s in comp {
                self.status[s.index()] = SatelliteStatus::Vagrant;
            }
        }
        let keep = comps[0].clone();
        let blk = self.blocks.get_mut(&id).expect("block exists");
        blk.members = keep;
        if !blk.members.contains(&blk.controller) {
            blk.controller = *blk.members.iter().next().expect("nonempty");
        }
        stats.splits += 1;
        self.push_evolution(id, snap, stats);
        true
    }

    /// One maintenance round against the snapshot:
    /// 1. fault marking (a satellite with no available link is faulted and
    ///    ejected; recovered satellites return as vagrants),
    /// 2. seeded vagrant promotion to new single-member blocks,
    /// 3. per-block evolution loop in ascending block-id order,
    /// 4. inter-unit link recomputation.
    ///
    /// `Static` performs only steps 1, 3's split/release handling, and 4;
    /// `Basic` performs only steps 1 and 4.
    pub fn maintain(
        &mut self,
        snap: &GraphSnapshot,
        params: &EvolutionParams,
        strategy: Strategy,
    ) -> RoundStats {
        let mut stats = RoundStats::default();
        let round = self.round;
        self.round += 1;
        let mut rng = derive_rng(params.seed, "maintain", round);

        // (1) fault transitions
        for i in 0..self.status.len() {
            let sat = SatId(i as u32);
            let alive = snap.degree(sat) > 0;
            match self.status[i] {
                SatelliteStatus::Fault if alive => {
                    self.status[i] = SatelliteStatus::Vagrant;
                }
                SatelliteStatus::Vagrant if !alive => {
                    self.status[i] = SatelliteStatus::Fault;
                }
                SatelliteStatus::Assigned(b) if !alive => {
                    self.remove_member(b, sat, SatelliteStatus::Fault);
                }
                _ => {}
            }
        }

        // (2) vagrant promotion
        if matches!(strategy, Strategy::Cqsbe | Strategy::Random) {
            for i in 0..self.status.len() {
                if !matches!(self.status[i], SatelliteStatus::Vagrant) {
                    continue;
                }
                if rng.gen::<f64>() < params.center_prob {
                    let sat = SatId(i as u32);
                    let id = BlockId(self.next_block);
                    self.next_block += 1;
                    self.status[i] = SatelliteStatus::Assigned(id);
                    self.blocks.insert(
                        id,
                        Block {
                            id,
                            members: BTreeSet::from([sat]),
                            controller: sat,
                        },
                    );
                    stats.promotions += 1;
                }
            }
        }

        // (3) evolution loop per block; the static strategy freezes the
        // partition laid down at initialization (fault ejection aside)
        if matches!(strategy, Strategy::Cqsbe | Strategy::Random) {
            let ids: Vec<BlockId> = self.blocks.keys().copied().collect();
            for id in ids {
                let mut evolve_steps = 0u32;
                loop {
                    let block = match self.blocks.get(&id) {
                        Some(b) => b.clone(),
                        None => break,
                    };
                    match self.classify_block(&block, snap, params) {
                        BlockStatus::Disconn => {
                            self.split_to_max_component(id, snap, &mut stats);
                        }
                        BlockStatus::LowSize => {
                            self.release_block(id);
                            stats.releases += 1;
                            break;
                        }
                        BlockStatus::Stable => break,
                        BlockStatus::Ustable => {
                            if matches!(strategy, Strategy::Static)
                                || evolve_steps >= params.max_evolution_iters
                            {
                                break;
                            }
                            evolve_steps += 1;
                            let guidance = if matches!(strategy, Strategy::Random) {
                                Guidance::Random(&mut rng)
                            } else {
                                Guidance::Scored(Some(&mut rng))
                            };
                            match self.evolve_step(id, snap, params, guidance) {
                                Ok(EvolveOutcome::Expanded) => {
                                    stats.expansions += 1;
                                    self.push_evolution(id, snap, &mut stats);
                                }
                                Ok(EvolveOutcome::Shrunk) => {
                                    stats.shrinks += 1;
                                    if self.blocks.contains_key(&id) {
                                        self.push_evolution(id, snap, &mut stats);
                                    }
                                }
                                Ok(EvolveOutcome::Unchanged) | Err(_) => break,
                            }
                        }
                    }
                }
                // A shrink at the iteration bound can leave the block
                // disconnected; resolve splits so the post-round connectivity
                // invariant always holds.
                while let Some(block) = self.blocks.get(&id) {
                    if block_diameter(&block.members, snap).is_some() {
                        break;
                    }
                    if !self.split_to_max_component(id, snap, &mut stats) {
                        break;
                    }
                }
            }
        }

        // (4) inter-unit links
        let previous = std::mem::take(&mut self.iul_edges);
        self.recompute_iuls(snap);
        stats.iul_changes = previous.symmetric_difference(&self.iul_edges).count() as u32;

        stats.vagrant_count = self.vagrants().count() as u32;
        stats.fault_count = self.faults().count() as u32;
        stats.block_count = self.blocks.len() as u32;
        stats.max_block_size = self
            .blocks
            .values()
            .map(|b| b.members.len() as u32)
            .max()
            .unwrap_or(0);
        let assigned: usize = self.blocks.values().map(|b| b.members.len()).sum();
        stats.size_bound = if self.blocks.is_empty() {
            0.0
        } else {
            (1.0 + params.epsilon) * assigned as f64 / self.blocks.len() as f64
        };
        stats.size_bound_violated =
            !self.blocks.is_empty() && (stats.max_block_size as f64) >= stats.size_bound;

        let fu_count = self.blocks.len() + self.vagrants().count();
        stats.mean_fu_degree = if fu_count == 0 {
            0.0
        } else {
            2.0 * self.iul_edges.len() as f64 / fu_count as f64
        };
        stats
    }

    fn push_evolution(&self, id: BlockId, snap: &GraphSnapshot, stats: &mut RoundStats) {
        let block = &self.blocks[&id];
        stats.evolutions.push(EvolutionRecord {
            block: id,
            members: block.members.len() as u32,
            internal_edges: internal_edge_count(&block.members, snap),
        });
    }

    /// Rebuilds the inter-unit link set: available edges whose endpoints lie
    /// in different forwarding units.
    pub fn recompute_iuls(&mut self, snap: &GraphSnapshot) {
        let mut iuls = BTreeSet::new();
        for e in 0..snap.edge_count() {
            let edge = EdgeId(e as u32);
            if !snap.is_available(edge) {
                continue;
            }
            let (a, b) = snap.endpoints(edge);
            if self.fu_of(a) != self.fu_of(b) {
                iuls.insert(edge);
            }
        }
        self.iul_edges = iuls;
    }

    /// Verifies the partition invariant: blocks, vagrants, and faults
    /// partition the satellite set exactly, controllers are members, and the
    /// membership map agrees with the per-satellite statuses.
    pub fn check_partition(&self) -> std::result::Result<(), String> {
        let mut seen = vec![false; self.status.len()];
        for block in self.blocks.values() {
            if block.members.is_empty() {
                return Err(format!("{} is empty", block.id));
            }
            if !block.members.contains(&block.controller) {
                return Err(format!("{} controller not a member", block.id));
            }
            for &s in &block.members {
                if seen[s.index()] {
                    return Err(format!("{s} in two blocks"));
                }
                seen[s.index()] = true;
                if self.status[s.index()] != SatelliteStatus::Assigned(block.id) {
                    return Err(format!("{s} status disagrees with membership"));
                }
            }
        }
        for (i, status) in self.status.iter().enumerate() {
            match status {
                SatelliteStatus::Assigned(_) if !seen[i] => {
                    return Err(format!("s{i} assigned to a missing block"));
                }
                SatelliteStatus::Vagrant | SatelliteStatus::Fault if seen[i] => {
                    return Err(format!("s{i} both in a block and not assigned"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Forwarding-unit overlay
// ---------------------------------------------------------------------------

/// One inter-unit link as seen from a particular forwarding unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IulLink {
    pub edge: EdgeId,
    /// Endpoint inside the owning unit.
    pub local_sat: SatId,
    /// Endpoint in the neighboring unit.
    pub remote_sat: SatId,
    pub remote_fu: FuId,
}

/// The overlay graph: forwarding units connected by inter-unit links.
#[derive(Debug, Clone, Default)]
pub struct FuOverlay {
    links: BTreeMap<FuId, Vec<IulLink>>,
}

impl FuOverlay {
    pub fn build(state: &DabnetState, snap: &GraphSnapshot) -> Self {
        let mut links: BTreeMap<FuId, Vec<IulLink>> = BTreeMap::new();
        // Every non-fault satellite belongs to some unit; seed the map so
        // isolated units still appear as overlay nodes.
        for i in 0..state.satellite_count() {
            let sat = SatId(i as u32);
            if !matches!(state.status(sat), SatelliteStatus::Fault) {
                links.entry(state.fu_of(sat)).or_default();
            }
        }
        for &edge in state.iul_edges() {
            let (a, b) = snap.endpoints(edge);
            let fu_a = state.fu_of(a);
            let fu_b = state.fu_of(b);
            links.entry(fu_a).or_default().push(IulLink {
                edge,
                local_sat: a,
                remote_sat: b,
                remote_fu: fu_b,
            });
            links.entry(fu_b).or_default().push(IulLink {
                edge,
                local_sat: b,
                remote_sat: a,
                remote_fu: fu_a,
            });
        }
        for list in links.values_mut() {
            list.sort_by_key(|l| l.edge);
        }
        FuOverlay { links }
    }

    pub fn links(&self, fu: FuId) -> &[IulLink] {
        self.links.get(&fu).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, fu: FuId) -> bool {
        self.links.contains_key(&fu)
    }

    pub fn fu_count(&self) -> usize {
        self.links.len()
    }

    pub fn fus(&self) -> impl Iterator<Item = FuId> + '_ {
        self.links.keys().copied()
    }
}
