//! Intermittent ISL failures as per-edge periodic square waves.
//!
//! A configured fraction of edges is marked *affected*; each affected edge is
//! available for a `duty_available` fraction of every period, with a random
//! phase. Node failures are represented implicitly as the unavailability of
//! all incident edges.

use crate::constellation::{EdgeId, Topology};
use crate::error::Error;
use crate::rng::derive_rng;
use crate::Result;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Failure-model knobs. `failure_ratio` is the exact fraction of edges made
/// intermittent; the unavailable-duration fraction per affected edge is drawn
/// uniformly from `[duty_min, duty_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureConfig {
    pub failure_ratio: f64,
    pub period_s: f64,
    pub duty_min: f64,
    pub duty_max: f64,
    pub seed: u64,
}

impl Default for FailureConfig {
    fn default() -> Self {
        FailureConfig {
            failure_ratio: 0.0,
            period_s: 200.0,
            duty_min: 0.3,
            duty_max: 0.7,
            seed: 0,
        }
    }
}

impl FailureConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(0.0..=1.0).contains(&self.failure_ratio) {
            bad.push("failure.ratio (must be in [0, 1])");
        }
        if !(self.period_s > 0.0) {
            bad.push("failure.period_s (must be > 0)");
        }
        if !(0.0..=1.0).contains(&self.duty_min)
            || !(0.0..=1.0).contains(&self.duty_max)
            || self.duty_min > self.duty_max
        {
            bad.push("failure.duty_min/duty_max (must satisfy 0 <= min <= max <= 1)");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join(", ")))
        }
    }
}

/// Square-wave parameters of one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSchedule {
    pub affected: bool,
    /// Fraction of each period the edge is up (1.0 for unaffected edges).
    pub duty_available: f64,
    pub phase_s: f64,
}

/// Availability schedule over a topology's edge table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvailabilitySchedule {
    period_s: f64,
    edges: Vec<EdgeSchedule>,
}

impl AvailabilitySchedule {
    /// Always-available schedule (no failures).
    pub fn always_available(edge_count: usize) -> Self {
        AvailabilitySchedule {
            period_s: 1.0,
            edges: vec![
                EdgeSchedule {
                    affected: false,
                    duty_available: 1.0,
                    phase_s: 0.0,
                };
                edge_count
            ],
        }
    }

    pub fn period_s(&self) -> f64 {
        self.period_s
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: EdgeId) -> Result<&EdgeSchedule> {
        self.edges.get(e.index()).ok_or(Error::UnknownEdge(e.0))
    }

    pub fn affected_count(&self) -> usize {
        self.edges.iter().filter(|e| e.affected).count()
    }

    /// Square-wave availability of edge `e` at time `t`.
    pub fn is_available(&self, e: EdgeId, t: f64) -> Result<bool> {
        let s = self.edge(e)?;
        if !s.affected {
            return Ok(true);
        }
        let frac = (t - s.phase_s).rem_euclid(self.period_s) / self.period_s;
        Ok(frac < s.duty_available)
    }

    pub fn schedules(&self) -> &[EdgeSchedule] {
        &self.edges
    }
}

/// Draws the availability schedule for a topology. An exact count
/// `round(failure_ratio * |E|)` of edges is selected by seeded shuffle.
pub fn schedule_failures(topology: &Topology, cfg: &FailureConfig) -> Result<AvailabilitySchedule> {
    cfg.validate()?;
    let m = topology.edge_count();
    let affected_count = (cfg.failure_ratio * m as f64).round() as usize;

    let mut rng = derive_rng(cfg.seed, "failure-schedule", 0);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let mut edges = vec![
        EdgeSchedule {
            affected: false,
            duty_available: 1.0,
            phase_s: 0.0,
        };
        m
    ];
    for &idx in order.iter().take(affected_count) {
        let down = if cfg.duty_min == cfg.duty_max {
            cfg.duty_min
        } else {
            rng.gen_range(cfg.duty_min..=cfg.duty_max)
        };
        edges[idx] = EdgeSchedule {
            affected: true,
            duty_available: 1.0 - down,
            phase_s: rng.gen_range(0.0..cfg.period_s),
        };
    }

    Ok(AvailabilitySchedule {
        period_s: cfg.period_s,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_constellation, ShellConfig};

    fn small_topology() -> Topology {
        build_constellation(&ShellConfig {
            planes: 5,
            sats_per_plane: 5,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            phase_offset: 1,
        })
        .unwrap()
    }

    #[test]
    fn zero_ratio_always_available() {
        let topo = small_topology();
        let sched = schedule_failures(&topo, &FailureConfig::default()).unwrap();
        assert_eq!(sched.affected_count(), 0);
        for e in 0..topo.edge_count() {
            assert!(sched.is_available(EdgeId(e as u32), 123.4).unwrap());
        }
    }

    #[test]
    fn saturated_failure_never_available() {
        let topo = small_topology();
        let cfg = FailureConfig {
            failure_ratio: 1.0,
            duty_min: 1.0,
            duty_max: 1.0,
            ..FailureConfig::default()
        };
        let sched = schedule_failures(&topo, &cfg).unwrap();
        assert_eq!(sched.affected_count(), topo.edge_count());
        for e in 0..topo.edge_count() {
            for t in [0.0, 17.3, 199.9, 1234.5] {
                assert!(!sched.is_available(EdgeId(e as u32), t).unwrap());
            }
        }
    }

    #[test]
    fn seeded_schedules_replay() {
        let topo = small_topology();
        let cfg = FailureConfig {
            failure_ratio: 0.3,
            seed: 9,
            ..FailureConfig::default()
        };
        let a = schedule_failures(&topo, &cfg).unwrap();
        let b = schedule_failures(&topo, &cfg).unwrap();
        assert_eq!(a.schedules(), b.schedules());
    }

    #[test]
    fn affected_count_is_exact_rounding() {
        let topo = small_topology(); // 50 edges
        for (ratio, expect) in [(0.0, 0), (0.1, 5), (0.25, 13), (0.3, 15), (1.0, 50)] {
            let cfg = FailureConfig {
                failure_ratio: ratio,
                seed: 3,
                ..FailureConfig::default()
            };
            let sched = schedule_failures(&topo, &cfg).unwrap();
            assert_eq!(sched.affected_count(), expect, "ratio {ratio}");
        }
    }

    #[test]
    fn square_wave_definition() {
        let sched = AvailabilitySchedule {
            period_s: 100.0,
            edges: vec![EdgeSchedule {
                affected: true,
                duty_available: 0.5,
                phase_s: 0.0,
            }],
        };
        assert!(sched.is_available(EdgeId(0), 25.0).unwrap());
        assert!(!sched.is_available(EdgeId(0), 75.0).unwrap());
        // phase wraps negative times too
        assert!(sched.is_available(EdgeId(0), -90.0).unwrap());
    }

    #[test]
    fn unknown_edge_is_an_error() {
        let sched = AvailabilitySchedule::always_available(3);
        assert!(matches!(
            sched.is_available(EdgeId(3), 0.0),
            Err(Error::UnknownEdge(3))
        ));
    }

    /// On-time measure over one period, computed by independent interval
    /// arithmetic, must equal `duty_available` exactly.
    #[test]
    fn time_average_equals_duty() {
        let topo = small_topology();
        let cfg = FailureConfig {
            failure_ratio: 0.5,
            seed: 11,
            ..FailureConfig::default()
        };
        let sched = schedule_failures(&topo, &cfg).unwrap();
        let period = sched.period_s();
        for (i, e) in sched.schedules().iter().enumerate() {
            if !e.affected {
                continue;
            }
            // The on-set within [0, period) is [phase, phase + duty*period)
            // modulo period: one interval, or two when it wraps.
            let on = e.duty_available * period;
            let start = e.phase_s.rem_euclid(period);
            let measured = if start + on <= period {
                on
            } else {
                (period - start) + (start + on - period)
            };
            assert!(
                (measured / period - e.duty_available).abs() < 1e-12,
                "edge {i}"
            );
            // Cross-check with a dense sample of the indicator.
            let samples = 20_000;
            let hits = (0..samples)
                .filter(|k| {
                    let t = period * (*k as f64 + 0.5) / samples as f64;
                    sched.is_available(EdgeId(i as u32), t).unwrap()
                })
                .count();
            assert!(
                (hits as f64 / samples as f64 - e.duty_available).abs() < 1e-3,
                "edge {i} sampled"
            );
        }
    }
}
