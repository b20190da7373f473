//! Walker-delta shell generation, +Grid ISL wiring, circular-orbit
//! propagation in ECI coordinates, and ground-station visibility.
//!
//! Conventions: at `t = 0` the Greenwich meridian is aligned with the ECI +x
//! axis and plane 0 / slot 0 sits at its ascending node. Orbits are circular
//! over a spherical Earth; the ground rotates at the sidereal rate.

use crate::error::Error;
use crate::geom::{
    EciPosition, Vec3, EARTH_RADIUS_KM, EARTH_ROTATION_RAD_S, MU_EARTH_KM3_S2,
};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

/// Satellite index within a shell: `plane * sats_per_plane + slot`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct SatId(pub u32);

impl SatId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Index into the shell's ISL table.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Walker-delta shell parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Walker phasing factor F: adjacent-plane slot offset of F/T turns.
    #[serde(default = "default_phase_offset")]
    pub phase_offset: u32,
}

fn default_phase_offset() -> u32 {
    1
}

impl ShellConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.planes < 1 {
            bad.push("shell.planes (must be >= 1)");
        }
        if self.sats_per_plane < 1 {
            bad.push("shell.sats_per_plane (must be >= 1)");
        }
        if !(self.altitude_km > 0.0) {
            bad.push("shell.altitude_km (must be > 0)");
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            bad.push("shell.inclination_deg (must be in [0, 180])");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join(", ")))
        }
    }

    pub fn satellite_count(&self) -> u32 {
        self.planes * self.sats_per_plane
    }

    /// Orbit radius from the Earth centre, km.
    pub fn orbit_radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Circular mean motion, rad/s.
    pub fn mean_motion_rad_s(&self) -> f64 {
        (MU_EARTH_KM3_S2 / self.orbit_radius_km().powi(3)).sqrt()
    }

    pub fn orbital_period_s(&self) -> f64 {
        TAU / self.mean_motion_rad_s()
    }
}

/// Four-slot +Grid adjacency of one satellite. Slots collapse to `None` when
/// the shell is too small for a distinct neighbor in that direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridNeighbors {
    pub fore: Option<SatId>,
    pub aft: Option<SatId>,
    pub left: Option<SatId>,
    pub right: Option<SatId>,
}

/// A generated shell: satellites, undirected ISLs, and per-satellite +Grid slots.
#[derive(Debug, Clone)]
pub struct Topology {
    config: ShellConfig,
    isls: Vec<(SatId, SatId)>,
    adjacency: Vec<Vec<(SatId, EdgeId)>>,
    grid_neighbors: Vec<GridNeighbors>,
}

impl Topology {
    pub fn config(&self) -> &ShellConfig {
        &self.config
    }

    pub fn satellite_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.isls.len()
    }

    pub fn isls(&self) -> &[(SatId, SatId)] {
        &self.isls
    }

    pub fn endpoints(&self, edge: EdgeId) -> (SatId, SatId) {
        self.isls[edge.index()]
    }

    /// All incident ISLs of a satellite, regardless of availability.
    pub fn neighbors(&self, sat: SatId) -> &[(SatId, EdgeId)] {
        &self.adjacency[sat.index()]
    }

    pub fn grid_neighbors(&self, sat: SatId) -> GridNeighbors {
        self.grid_neighbors[sat.index()]
    }

    pub fn plane_slot(&self, sat: SatId) -> (u32, u32) {
        (
            sat.0 / self.config.sats_per_plane,
            sat.0 % self.config.sats_per_plane,
        )
    }

    pub fn sat_at(&self, plane: u32, slot: u32) -> SatId {
        SatId(plane * self.config.sats_per_plane + slot)
    }
}

/// Builds a Walker-delta shell with +Grid ISLs (fore/aft intra-plane,
/// left/right inter-plane, wrap-around on both indices).
pub fn build_constellation(config: &ShellConfig) -> Result<Topology> {
    config.validate()?;
    let planes = config.planes;
    let per_plane = config.sats_per_plane;
    let n = config.satellite_count() as usize;

    let wrap = |v: i64, m: u32| -> u32 { v.rem_euclid(m as i64) as u32 };
    let mut grid_neighbors = Vec::with_capacity(n);
    let mut edges: Vec<(SatId, SatId)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut push_edge = |a: SatId, b: SatId, edges: &mut Vec<(SatId, SatId)>| {
        if a == b {
            return;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if seen.insert(key) {
            edges.push(key);
        }
    };

    for p in 0..planes {
        for s in 0..per_plane {
            let id = SatId(p * per_plane + s);
            let slot = |pp: u32, ss: u32| SatId(pp * per_plane + ss);
            let fore = slot(p, wrap(s as i64 + 1, per_plane));
            let aft = slot(p, wrap(s as i64 - 1, per_plane));
            let right = slot(wrap(p as i64 + 1, planes), s);
            let left = slot(wrap(p as i64 - 1, planes), s);
            let distinct = |other: SatId| if other == id { None } else { Some(other) };
            grid_neighbors.push(GridNeighbors {
                fore: distinct(fore),
                aft: distinct(aft),
                left: distinct(left),
                right: distinct(right),
            });
            // One fore and one right link per satellite covers the grid.
            push_edge(id, fore, &mut edges);
            push_edge(id, right, &mut edges);
        }
    }

    edges.sort();
    let mut adjacency = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        let e = EdgeId(i as u32);
        adjacency[a.index()].push((b, e));
        adjacency[b.index()].push((a, e));
    }
    for adj in &mut adjacency {
        adj.sort();
    }

    Ok(Topology {
        config: config.clone(),
        isls: edges,
        adjacency,
        grid_neighbors,
    })
}

/// ECI position of one satellite at time `t` (seconds since epoch).
pub fn satellite_position(config: &ShellConfig, plane: u32, slot: u32, t: f64) -> EciPosition {
    let a = config.orbit_radius_km();
    let incl = config.inclination_deg.to_radians();
    let total = config.satellite_count() as f64;
    let raan = TAU * plane as f64 / config.planes as f64;
    let u0 = TAU * slot as f64 / config.sats_per_plane as f64
        + TAU * config.phase_offset as f64 * plane as f64 / total;
    let u = u0 + config.mean_motion_rad_s() * t;

    let (sin_u, cos_u) = u.sin_cos();
    let (sin_raan, cos_raan) = raan.sin_cos();
    let (sin_i, cos_i) = incl.sin_cos();
    // r = a (cos u * n̂ + sin u * m̂) with n̂ the ascending-node direction and
    // m̂ the in-plane normal to it.
    Vec3::new(
        a * (cos_u * cos_raan - sin_u * cos_i * sin_raan),
        a * (cos_u * sin_raan + sin_u * cos_i * cos_raan),
        a * (sin_u * sin_i),
    )
}

/// Positions of every satellite at time `t`, indexed by satellite id.
pub fn positions_at(topology: &Topology, t: f64) -> Vec<EciPosition> {
    let cfg = topology.config();
    let mut out = Vec::with_capacity(topology.satellite_count());
    for p in 0..cfg.planes {
        for s in 0..cfg.sats_per_plane {
            out.push(satellite_position(cfg, p, s, t));
        }
    }
    out
}

/// A ground station with its elevation mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_km: f64,
    pub min_elevation_deg: f64,
}

impl GroundStation {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat_deg) || !(-180.0 < self.lon_deg && self.lon_deg <= 180.0)
        {
            return Err(Error::InvalidConfig(format!(
                "ground station {:?}: lat/lon out of range",
                self.id
            )));
        }
        Ok(())
    }

    pub fn position_at(&self, t: f64) -> EciPosition {
        geodetic_to_eci(self.lat_deg, self.lon_deg, self.alt_km, t)
    }
}

/// Converts geodetic coordinates to ECI on the rotating spherical Earth.
pub fn geodetic_to_eci(lat_deg: f64, lon_deg: f64, alt_km: f64, t: f64) -> EciPosition {
    let r = EARTH_RADIUS_KM + alt_km;
    let lat = lat_deg.to_radians();
    let theta = lon_deg.to_radians() + EARTH_ROTATION_RAD_S * t;
    Vec3::new(
        r * lat.cos() * theta.cos(),
        r * lat.cos() * theta.sin(),
        r * lat.sin(),
    )
}

/// Elevation of `sat_pos` above the local horizon at `gs_pos`, degrees.
pub fn elevation_deg(gs_pos: EciPosition, sat_pos: EciPosition) -> f64 {
    let range = sat_pos - gs_pos;
    let zenith = match gs_pos.unit() {
        Some(u) => u,
        None => return -90.0,
    };
    let d = range.norm();
    if d < 1e-9 {
        return 90.0;
    }
    (range.dot(zenith) / d).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Satellites visible from `gs` at time `t` (elevation >= mask), ascending id.
pub fn gsl_candidates(gs: &GroundStation, topology: &Topology, t: f64) -> Vec<SatId> {
    let positions = positions_at(topology, t);
    gsl_candidates_from(gs.position_at(t), gs.min_elevation_deg, &positions)
}

/// Visibility over a precomputed position table.
pub fn gsl_candidates_from(
    gs_pos: EciPosition,
    min_elevation_deg: f64,
    positions: &[EciPosition],
) -> Vec<SatId> {
    positions
        .iter()
        .enumerate()
        .filter(|(_, &p)| elevation_deg(gs_pos, p) >= min_elevation_deg)
        .map(|(i, _)| SatId(i as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn starlink() -> ShellConfig {
        ShellConfig {
            planes: 72,
            sats_per_plane: 22,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            phase_offset: 1,
        }
    }

    fn oneweb_like() -> ShellConfig {
        ShellConfig {
            planes: 12,
            sats_per_plane: 49,
            altitude_km: 1200.0,
            inclination_deg: 87.9,
            phase_offset: 1,
        }
    }

    #[test]
    fn starlink_shell_size() {
        let topo = build_constellation(&starlink()).unwrap();
        assert_eq!(topo.satellite_count(), 1584);
        assert_eq!(topo.edge_count(), 2 * 1584);
    }

    #[test]
    fn oneweb_shell_size() {
        let topo = build_constellation(&oneweb_like()).unwrap();
        assert_eq!(topo.satellite_count(), 588);
    }

    #[test]
    fn grid_degree_is_four() {
        for cfg in [starlink(), oneweb_like()] {
            let topo = build_constellation(&cfg).unwrap();
            for s in 0..topo.satellite_count() {
                assert_eq!(topo.neighbors(SatId(s as u32)).len(), 4, "sat {s}");
            }
        }
    }

    #[test]
    fn rejects_degenerate_shells() {
        let mut cfg = starlink();
        cfg.planes = 0;
        assert!(build_constellation(&cfg).is_err());
        let mut cfg = starlink();
        cfg.sats_per_plane = 0;
        assert!(build_constellation(&cfg).is_err());
    }

    #[test]
    fn epoch_anchor_at_ascending_node() {
        let cfg = starlink();
        let p = satellite_position(&cfg, 0, 0, 0.0);
        assert!((p.x - cfg.orbit_radius_km()).abs() < 1e-9);
        assert!(p.y.abs() < 1e-9 && p.z.abs() < 1e-9);
    }

    #[test]
    fn positions_are_periodic() {
        let cfg = starlink();
        let topo = build_constellation(&cfg).unwrap();
        let t0 = positions_at(&topo, 137.0);
        let t1 = positions_at(&topo, 137.0 + cfg.orbital_period_s());
        for (a, b) in t0.iter().zip(&t1) {
            assert!(a.distance(*b) < 1e-6);
        }
    }

    #[test]
    fn shell_radius_matches_altitude() {
        let cfg = starlink();
        let topo = build_constellation(&cfg).unwrap();
        for p in positions_at(&topo, 777.5) {
            let r = p.norm();
            assert!((r - (EARTH_RADIUS_KM + 550.0)).abs() / r < 1e-6);
        }
    }

    #[test]
    fn geodetic_epoch_conventions() {
        let p = geodetic_to_eci(0.0, 0.0, 0.0, 0.0);
        assert!(p.distance(Vec3::new(EARTH_RADIUS_KM, 0.0, 0.0)) < 1e-9);
        let p = geodetic_to_eci(90.0, 123.0, 0.0, 5678.0);
        assert!(p.distance(Vec3::new(0.0, 0.0, EARTH_RADIUS_KM)) < 1e-6);
        let p = geodetic_to_eci(0.0, 90.0, 0.0, 0.0);
        assert!(p.distance(Vec3::new(0.0, EARTH_RADIUS_KM, 0.0)) < 1e-9);
    }

    #[test]
    fn zenith_only_visibility_is_rare() {
        let topo = build_constellation(&starlink()).unwrap();
        let gs = GroundStation {
            id: "test".into(),
            lat_deg: 47.0,
            lon_deg: 8.0,
            alt_km: 0.0,
            min_elevation_deg: 90.0,
        };
        assert!(gsl_candidates(&gs, &topo, 0.0).len() <= 1);
    }

    #[test]
    fn open_horizon_sees_satellites() {
        let topo = build_constellation(&starlink()).unwrap();
        let gs = GroundStation {
            id: "test".into(),
            lat_deg: 47.0,
            lon_deg: 8.0,
            alt_km: 0.0,
            min_elevation_deg: 0.0,
        };
        for t in [0.0, 100.0, 1000.0] {
            assert!(!gsl_candidates(&gs, &topo, t).is_empty());
        }
    }

    #[test]
    fn visibility_matches_bruteforce_oracle() {
        // Small shell so the oracle loop stays readable.
        let cfg = ShellConfig {
            planes: 8,
            sats_per_plane: 10,
            altitude_km: 800.0,
            inclination_deg: 60.0,
            phase_offset: 1,
        };
        let topo = build_constellation(&cfg).unwrap();
        let gs = GroundStation {
            id: "oracle".into(),
            lat_deg: 30.0,
            lon_deg: -45.0,
            alt_km: 0.0,
            min_elevation_deg: 20.0,
        };
        for t in [0.0, 33.0, 512.0] {
            let got = gsl_candidates(&gs, &topo, t);
            let positions = positions_at(&topo, t);
            let gs_pos = gs.position_at(t);
            let mut expect = Vec::new();
            for (i, &sat) in positions.iter().enumerate() {
                // angle between local zenith and range vector, from scratch
                let range = sat - gs_pos;
                let cos_zenith_angle = range.dot(gs_pos) / (range.norm() * gs_pos.norm());
                let elev = 90.0 - cos_zenith_angle.clamp(-1.0, 1.0).acos().to_degrees();
                if elev >= gs.min_elevation_deg {
                    expect.push(SatId(i as u32));
                }
            }
            assert_eq!(got, expect, "t={t}");
        }
    }

    #[test]
    fn deterministic_replay() {
        let topo = build_constellation(&oneweb_like()).unwrap();
        let gs = GroundStation {
            id: "x".into(),
            lat_deg: 1.3,
            lon_deg: 103.8,
            alt_km: 0.0,
            min_elevation_deg: 25.0,
        };
        assert_eq!(
            gsl_candidates(&gs, &topo, 42.0),
            gsl_candidates(&gs, &topo, 42.0)
        );
        let a = positions_at(&topo, 99.0);
        let b = positions_at(&topo, 99.0);
        assert_eq!(a, b);
    }
}
