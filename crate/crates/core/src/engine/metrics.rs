//! Per-attempt records, per-flow summaries, and the scenario metrics report.

use crate::baselines::{FlowId, OverheadCounts};
use crate::constellation::SatId;
use crate::error::Error;
use crate::geom::{great_circle_km, SPEED_OF_LIGHT_KM_S};
use crate::routing::DeliveryResult;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Threshold below which a delivered path beats terrestrial direct fiber
/// (light in fiber travels at roughly two thirds of c).
pub const FIBER_STRETCH_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Delivered,
    Failed,
    /// No visible satellite at one of the endpoints.
    CoverageGap,
}

/// One per-step delivery attempt of one flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub t: f64,
    pub flow: FlowId,
    pub outcome: AttemptOutcome,
    pub src_sat: Option<SatId>,
    pub latency_s: Option<f64>,
    pub stretch: Option<f64>,
    pub nacks: u32,
    pub rediscoveries: u32,
    pub fu_hops: u32,
    pub sat_hops: u32,
}

/// Path stretch of a delivered attempt: traversed distance (ground links
/// included) over the endpoints' great-circle distance.
pub fn compute_stretch(
    delivery: &DeliveryResult,
    src: (f64, f64),
    dst: (f64, f64),
) -> Result<f64> {
    let latency = delivery
        .latency_s
        .ok_or_else(|| Error::InvalidConfig("stretch of an undelivered attempt".into()))?;
    let arc = great_circle_km(src.0, src.1, dst.0, dst.1);
    if arc < 1e-9 {
        return Err(Error::ZeroDistance);
    }
    Ok(latency * SPEED_OF_LIGHT_KM_S / arc)
}

/// Population standard deviation of a latency series.
pub fn compute_jitter(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub flow: FlowId,
    pub src_gs: String,
    pub dst_gs: String,
    pub attempts: u64,
    pub delivered: u64,
    pub failed: u64,
    pub coverage_gaps: u64,
    pub mean_latency_s: Option<f64>,
    /// Population std of this flow's delivered latencies (needs >= 2).
    pub jitter_s: Option<f64>,
    pub rediscoveries: u64,
    pub nacks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttemptTotals {
    pub total: u64,
    pub delivered: u64,
    pub failed: u64,
    pub coverage_gaps: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurvivabilitySummary {
    pub rounds: u64,
    pub mean_iul_changes_per_round: f64,
    pub end_vagrants: u32,
    pub end_faults: u32,
    pub end_blocks: u32,
    pub mean_fu_degree: f64,
    pub max_block_size: u32,
    pub size_bound_violation_rounds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpsSummary {
    pub compute_ops: u64,
    pub lookup_ops: u64,
    pub wave_refreshes: u64,
}

/// Lookup/compute decision counts of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSample {
    pub t: f64,
    pub compute_ops: u64,
    pub lookup_ops: u64,
    pub wave_refreshes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizedSummary {
    pub satellites: u64,
    pub isls: u64,
    pub affected_edges: u64,
    pub affected_fraction: f64,
    pub flows_generated: u64,
}

/// One maintenance round in the survivability time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub t: f64,
    pub iul_changes: u32,
    pub vagrants: u32,
    pub faults: u32,
    pub blocks: u32,
    pub max_block_size: u32,
    pub size_bound: f64,
    pub size_bound_violated: bool,
    pub mean_fu_degree: f64,
    pub promotions: u32,
    pub expansions: u32,
    pub shrinks: u32,
    pub splits: u32,
    pub releases: u32,
}

/// The scenario report with stable field names. Serialized as JSON; the
/// delimited tables are derived from the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: super::config::ScenarioConfig,
    pub attempts: AttemptTotals,
    /// Delivered step-attempts over all step-attempts (gaps included);
    /// absent when no attempts were made.
    pub reachability_pct: Option<f64>,
    /// Delivered over (delivered + failed), coverage gaps excluded.
    pub reachability_excl_gaps_pct: Option<f64>,
    /// Share of flows with at least one delivered attempt.
    pub flow_reachability_pct: Option<f64>,
    pub mean_latency_s: Option<f64>,
    pub mean_stretch: Option<f64>,
    pub min_stretch: Option<f64>,
    /// Share of delivered attempts with stretch below the fiber-equivalence
    /// threshold of 1.5.
    pub stretch_below_fiber_pct: Option<f64>,
    /// Mean over flows of the per-flow latency standard deviation.
    pub jitter_s: Option<f64>,
    pub rediscovery_mean_per_flow: Option<f64>,
    /// Buckets 0,1,..,10 and 11+ of per-flow rediscovery totals.
    pub rediscovery_histogram: Vec<u64>,
    pub overhead: BTreeMap<String, OverheadCounts>,
    pub survivability: SurvivabilitySummary,
    pub ops: OpsSummary,
    pub realized: RealizedSummary,
    pub per_flow: Vec<FlowSummary>,
}
