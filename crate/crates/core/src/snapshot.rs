//! Immutable per-step view of the network: positions plus the
//! availability-masked graph. Everything downstream (partition maintenance,
//! routing, baselines) reads from one snapshot so a step is internally
//! consistent.

use crate::constellation::{positions_at, EdgeId, SatId, Topology};
use crate::failure::AvailabilitySchedule;
use crate::geom::EciPosition;

#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    t: f64,
    edges: Vec<(SatId, SatId)>,
    available: Vec<bool>,
    adjacency: Vec<Vec<(SatId, EdgeId)>>,
    degrees: Vec<u32>,
    total_degree: u64,
    positions: Vec<EciPosition>,
}

impl GraphSnapshot {
    /// Captures the masked graph of a topology at time `t`.
    pub fn capture(topology: &Topology, schedule: &AvailabilitySchedule, t: f64) -> Self {
        let positions = positions_at(topology, t);
        let available: Vec<bool> = (0..topology.edge_count())
            .map(|i| schedule.is_available(EdgeId(i as u32), t).unwrap_or(false))
            .collect();
        Self::from_parts(
            topology.satellite_count(),
            topology.isls().to_vec(),
            available,
            positions,
            t,
        )
    }

    /// Builds a snapshot from raw parts; used for custom graphs in tests and
    /// for synthetic overlay experiments.
    pub fn from_parts(
        n: usize,
        edges: Vec<(SatId, SatId)>,
        available: Vec<bool>,
        positions: Vec<EciPosition>,
        t: f64,
    ) -> Self {
        assert_eq!(edges.len(), available.len());
        assert_eq!(positions.len(), n);
        let mut adjacency = vec![Vec::new(); n];
        let mut degrees = vec![0u32; n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            if available[i] {
                let e = EdgeId(i as u32);
                adjacency[a.index()].push((b, e));
                adjacency[b.index()].push((a, e));
                degrees[a.index()] += 1;
                degrees[b.index()] += 1;
            }
        }
        for adj in &mut adjacency {
            adj.sort();
        }
        let total_degree = degrees.iter().map(|&d| d as u64).sum();
        GraphSnapshot {
            t,
            edges,
            available,
            adjacency,
            degrees,
            total_degree,
            positions,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn satellite_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn endpoints(&self, e: EdgeId) -> (SatId, SatId) {
        self.edges[e.index()]
    }

    pub fn is_available(&self, e: EdgeId) -> bool {
        self.available[e.index()]
    }

    pub fn available_edge_count(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    /// Edge ids currently unavailable.
    pub fn down_edges(&self) -> Vec<EdgeId> {
        self.available
            .iter()
            .enumerate()
            .filter(|(_, &a)| !a)
            .map(|(i, _)| EdgeId(i as u32))
            .collect()
    }

    /// Available neighbors of `sat`, ascending by id.
    pub fn available_neighbors(&self, sat: SatId) -> &[(SatId, EdgeId)] {
        &self.adjacency[sat.index()]
    }

    /// Degree over currently-available edges.
    pub fn degree(&self, sat: SatId) -> u32 {
        self.degrees[sat.index()]
    }

    pub fn total_degree(&self) -> u64 {
        self.total_degree
    }

    pub fn position(&self, sat: SatId) -> EciPosition {
        self.positions[sat.index()]
    }

    pub fn positions(&self) -> &[EciPosition] {
        &self.positions
    }

    pub fn distance(&self, a: SatId, b: SatId) -> f64 {
        self.position(a).distance(self.position(b))
    }

    /// Other endpoint of `e` as seen from `from`.
    pub fn other_endpoint(&self, e: EdgeId, from: SatId) -> SatId {
        let (a, b) = self.endpoints(e);
        if a == from {
            b
        } else {
            a
        }
    }
}
