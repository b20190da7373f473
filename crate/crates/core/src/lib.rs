//! Time-driven simulator and routing library for LEO satellite networks.
//!
//! The crate models a Walker-delta constellation with +Grid inter-satellite
//! links, masks the link set with intermittent square-wave failures, and
//! maintains a survivable underlay that partitions satellites into autonomous
//! blocks. On top of that underlay it runs a hierarchical router (geographic
//! forwarding between units, link-state style min-hop routing inside blocks,
//! bounded backward-acknowledgment protection and RTT-driven source-satellite
//! selection), alongside shortest-path and greedy-geographic baselines and an
//! analytic routing-overhead accounting pipeline.
//!
//! The [`engine`] module ties everything together: it loads a scenario
//! configuration, generates city-to-city traffic, steps the simulation, and
//! emits a metrics report plus plot-ready tables.

pub mod baselines;
pub mod constellation;
pub mod dabnet;
pub mod engine;
pub mod error;
pub mod failure;
pub mod geom;
pub mod naming;
pub mod rng;
pub mod routing;
pub mod snapshot;

pub use constellation::{
    build_constellation, geodetic_to_eci, gsl_candidates, positions_at, EdgeId, GroundStation,
    SatId, ShellConfig, Topology,
};
pub use dabnet::{
    closeness_centrality, cqs_score, directional_connectivity, Block, BlockId, BlockStatus,
    DabnetState, EvolutionParams, FuId, FuOverlay, SatelliteStatus, Strategy,
};
pub use error::Error;
pub use failure::{schedule_failures, AvailabilitySchedule, FailureConfig};
pub use geom::{EciPosition, Vec3, EARTH_RADIUS_KM, SPEED_OF_LIGHT_KM_S};
pub use snapshot::GraphSnapshot;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
