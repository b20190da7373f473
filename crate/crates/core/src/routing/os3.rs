//! Source-satellite selection: each ground station keeps, per dataflow, a
//! priority queue of candidate source satellites ordered by their last
//! measured round-trip time. Newly visible satellites are probed once each
//! (the probe is that step's delivery); once no new candidate remains the
//! flow converges onto the minimum-RTT satellite, re-measuring it on every
//! use.

use crate::constellation::SatId;
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

/// Weight of a fresh measurement when re-measuring the current best source.
const RTT_SMOOTHING: f64 = 0.3;

/// A challenger must beat the incumbent source by this factor before the
/// flow switches; prevents ping-pong between near-equal sources while the
/// geometry drifts.
const SWITCH_MARGIN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpqEntry {
    pub sat: SatId,
    pub rtt_s: f64,
}

/// What the selector decided for this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceChoice {
    /// Measure a newly visible satellite.
    Probe(SatId),
    /// Use the current minimum-RTT satellite.
    Best(SatId),
}

impl SourceChoice {
    pub fn sat(self) -> SatId {
        match self {
            SourceChoice::Probe(s) | SourceChoice::Best(s) => s,
        }
    }
}

/// Per-flow source-satellite queue state.
#[derive(Debug, Clone, Default)]
pub struct SpqState {
    queue: Vec<SpqEntry>,
    pending: VecDeque<SatId>,
    prev_visible: BTreeSet<SatId>,
    incumbent: Option<SatId>,
}

impl SpqState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queue contents, ascending by (RTT, id).
    pub fn queue(&self) -> &[SpqEntry] {
        &self.queue
    }

    pub fn pending_probes(&self) -> usize {
        self.pending.len()
    }

    /// Picks this step's source satellite given the currently visible set.
    /// Satellites that left visibility are dropped from the queue and the
    /// probe backlog; new arrivals are enqueued for probing in ascending id
    /// order. With an empty queue and no pending probes, every visible
    /// satellite is re-enqueued so the flow can recover.
    pub fn select(&mut self, visible: &BTreeSet<SatId>) -> Result<SourceChoice> {
        if visible.is_empty() {
            return Err(Error::CoverageGap("source ground station".into()));
        }
        for s in visible.difference(&self.prev_visible) {
            self.pending.push_back(*s);
        }
        self.queue.retain(|e| visible.contains(&e.sat));
        self.pending.retain(|s| visible.contains(s));
        self.prev_visible = visible.clone();

        if let Some(s) = self.pending.pop_front() {
            return Ok(SourceChoice::Probe(s));
        }
        if let Some(best) = self.queue.first() {
            // hysteresis: stay with the incumbent while it remains within
            // the switching margin of the front-runner
            let chosen = match self
                .incumbent
                .and_then(|s| self.queue.iter().find(|e| e.sat == s))
            {
                Some(inc) if inc.rtt_s <= best.rtt_s * SWITCH_MARGIN => inc.sat,
                _ => best.sat,
            };
            self.incumbent = Some(chosen);
            return Ok(SourceChoice::Best(chosen));
        }
        // nothing measured and nothing pending: start over with what we see
        self.pending.extend(visible.iter().copied());
        let s = self.pending.pop_front().expect("visible nonempty");
        Ok(SourceChoice::Probe(s))
    }

    /// Records the outcome of the delivery made through `choice`. A probe
    /// inserts its measurement on success and is dropped on failure; the best
    /// entry is re-measured on success (smoothed, so one detoured delivery
    /// does not dethrone a good source) and evicted on failure.
    pub fn record(&mut self, choice: SourceChoice, rtt_s: Option<f64>) {
        let sat = choice.sat();
        let old = self.queue.iter().find(|e| e.sat == sat).map(|e| e.rtt_s);
        self.queue.retain(|e| e.sat != sat);
        if let Some(measured) = rtt_s {
            let rtt = match (choice, old) {
                (SourceChoice::Best(_), Some(previous)) => {
                    previous + RTT_SMOOTHING * (measured - previous)
                }
                _ => measured,
            };
            let entry = SpqEntry { sat, rtt_s: rtt };
            let at = self
                .queue
                .partition_point(|e| (e.rtt_s, e.sat) < (rtt, sat));
            self.queue.insert(at, entry);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vis(ids: &[u32]) -> BTreeSet<SatId> {
        ids.iter().map(|&i| SatId(i)).collect()
    }

    #[test]
    fn probes_new_satellites_then_converges_to_min_rtt() {
        let mut spq = SpqState::new();
        let visible = vis(&[1, 2]);
        // first two steps probe; give s1 the lower RTT
        let c1 = spq.select(&visible).unwrap();
        assert_eq!(c1, SourceChoice::Probe(SatId(1)));
        spq.record(c1, Some(0.020));
        let c2 = spq.select(&visible).unwrap();
        assert_eq!(c2, SourceChoice::Probe(SatId(2)));
        spq.record(c2, Some(0.035));
        // converged: min-RTT satellite selected from now on
        for _ in 0..3 {
            let c = spq.select(&visible).unwrap();
            assert_eq!(c, SourceChoice::Best(SatId(1)));
            spq.record(c, Some(0.020));
        }
    }

    #[test]
    fn departed_satellites_are_removed() {
        let mut spq = SpqState::new();
        let visible = vis(&[1, 2]);
        let c = spq.select(&visible).unwrap();
        spq.record(c, Some(0.020)); // s1
        let c = spq.select(&visible).unwrap();
        spq.record(c, Some(0.035)); // s2
        // s1 sets below the horizon
        let visible = vis(&[2]);
        let c = spq.select(&visible).unwrap();
        assert_eq!(c, SourceChoice::Best(SatId(2)));
        assert_eq!(spq.queue().len(), 1);
    }

    #[test]
    fn failed_probe_is_not_inserted() {
        let mut spq = SpqState::new();
        let visible = vis(&[3, 4]);
        let c = spq.select(&visible).unwrap();
        assert_eq!(c, SourceChoice::Probe(SatId(3)));
        spq.record(c, None); // delivery failed
        let c = spq.select(&visible).unwrap();
        assert_eq!(c, SourceChoice::Probe(SatId(4)));
        spq.record(c, Some(0.050));
        assert_eq!(spq.queue().len(), 1);
        assert_eq!(spq.queue()[0].sat, SatId(4));
    }

    #[test]
    fn empty_visible_set_is_a_coverage_gap() {
        let mut spq = SpqState::new();
        assert!(spq.select(&BTreeSet::new()).is_err());
    }

    #[test]
    fn recovers_by_reprobing_when_queue_empties() {
        let mut spq = SpqState::new();
        let visible = vis(&[7]);
        let c = spq.select(&visible).unwrap();
        spq.record(c, None); // probe failed; queue stays empty
        let c = spq.select(&visible).unwrap();
        assert_eq!(c, SourceChoice::Probe(SatId(7)));
    }

    #[test]
    fn best_failure_evicts_and_falls_back() {
        let mut spq = SpqState::new();
        let visible = vis(&[1, 2]);
        let c = spq.select(&visible).unwrap();
        spq.record(c, Some(0.010));
        let c = spq.select(&visible).unwrap();
        spq.record(c, Some(0.030));
        let c = spq.select(&visible).unwrap();
        assert_eq!(c, SourceChoice::Best(SatId(1)));
        spq.record(c, None); // path through s1 broke
        let c = spq.select(&visible).unwrap();
        assert_eq!(c, SourceChoice::Best(SatId(2)));
    }
}
