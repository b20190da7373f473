//! Run artifacts: the JSON report, delimited tables for plotting, the event
//! audit log, and optional partition dumps. Files are removed again if any
//! write fails, and the report is written last so its presence marks a
//! complete run.

use crate::engine::{AttemptOutcome, ScenarioOutput};
use crate::error::Error;
use crate::Result;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Tracks created files for rollback on failure.
struct Artifacts {
    created: Vec<PathBuf>,
}

impl Artifacts {
    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        let mut file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        self.created.push(path.to_path_buf());
        file.write_all(contents.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    fn rollback(&self) {
        for path in &self.created {
            let _ = std::fs::remove_file(path);
        }
    }
}

/// Writes all artifacts of a run into `out_dir` (created if missing).
/// Returns the path of the report file.
pub fn write_outputs(output: &ScenarioOutput, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut artifacts = Artifacts {
        created: Vec::new(),
    };
    match write_all(output, out_dir, &mut artifacts) {
        Ok(report_path) => Ok(report_path),
        Err(e) => {
            artifacts.rollback();
            Err(e)
        }
    }
}

fn write_all(
    output: &ScenarioOutput,
    out_dir: &Path,
    artifacts: &mut Artifacts,
) -> Result<PathBuf> {
    let audit_enabled = output.report.scenario.output.audit;

    // per-attempt trace
    let mut flows_csv =
        String::from("t,flow,outcome,src_sat,latency_s,stretch,nacks,rediscoveries,fu_hops,sat_hops\n");
    for a in &output.attempts {
        let outcome = match a.outcome {
            AttemptOutcome::Delivered => "delivered",
            AttemptOutcome::Failed => "failed",
            AttemptOutcome::CoverageGap => "coverage_gap",
        };
        flows_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            a.t,
            a.flow.0,
            outcome,
            a.src_sat.map(|s| s.0.to_string()).unwrap_or_default(),
            a.latency_s.map(|v| v.to_string()).unwrap_or_default(),
            a.stretch.map(|v| v.to_string()).unwrap_or_default(),
            a.nacks,
            a.rediscoveries,
            a.fu_hops,
            a.sat_hops,
        ));
    }
    artifacts.write(&out_dir.join("flows.csv"), &flows_csv)?;

    // per-flow summaries (jitter distribution table)
    let mut per_flow_csv = String::from(
        "flow,src_gs,dst_gs,attempts,delivered,failed,coverage_gaps,mean_latency_s,jitter_s,rediscoveries,nacks\n",
    );
    for f in &output.report.per_flow {
        per_flow_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            f.flow.0,
            f.src_gs,
            f.dst_gs,
            f.attempts,
            f.delivered,
            f.failed,
            f.coverage_gaps,
            f.mean_latency_s.map(|v| v.to_string()).unwrap_or_default(),
            f.jitter_s.map(|v| v.to_string()).unwrap_or_default(),
            f.rediscoveries,
            f.nacks,
        ));
    }
    artifacts.write(&out_dir.join("per_flow.csv"), &per_flow_csv)?;

    // survivability time series
    let mut rounds_csv = String::from(
        "t,iul_changes,vagrants,faults,blocks,max_block_size,size_bound,size_bound_violated,mean_fu_degree,promotions,expansions,shrinks,splits,releases\n",
    );
    for r in &output.rounds {
        rounds_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.iul_changes,
            r.vagrants,
            r.faults,
            r.blocks,
            r.max_block_size,
            r.size_bound,
            r.size_bound_violated,
            r.mean_fu_degree,
            r.promotions,
            r.expansions,
            r.shrinks,
            r.splits,
            r.releases,
        ));
    }
    artifacts.write(&out_dir.join("rounds.csv"), &rounds_csv)?;

    // overhead per model
    let mut overhead_csv = String::from("model,fib_updates,control_messages\n");
    for (model, counts) in &output.report.overhead {
        overhead_csv.push_str(&format!(
            "{},{},{}\n",
            model, counts.fib_updates, counts.control_messages
        ));
    }
    artifacts.write(&out_dir.join("overhead.csv"), &overhead_csv)?;

    // lookup/compute mode series
    let mut mode_csv = String::from("t,compute_ops,lookup_ops,wave_refreshes\n");
    for m in &output.mode_series {
        mode_csv.push_str(&format!(
            "{},{},{},{}\n",
            m.t, m.compute_ops, m.lookup_ops, m.wave_refreshes
        ));
    }
    artifacts.write(&out_dir.join("mode_series.csv"), &mode_csv)?;

    if audit_enabled {
        let mut audit = String::new();
        for record in &output.audit {
            audit.push_str(&serde_json::to_string(record).expect("step records serialize"));
            audit.push('\n');
        }
        artifacts.write(&out_dir.join("audit.jsonl"), &audit)?;
        let schedule = serde_json::to_string_pretty(&output.schedule)
            .expect("schedules serialize");
        artifacts.write(&out_dir.join("failure_schedule.json"), &schedule)?;
    }

    if let Some(partitions) = &output.partitions {
        artifacts.write(&out_dir.join("partitions.txt"), partitions)?;
    }

    // the report marks a complete run; written last
    let report_path = out_dir.join("report.json");
    let report =
        serde_json::to_string_pretty(&output.report).expect("reports serialize") + "\n";
    artifacts.write(&report_path, &report)?;
    Ok(report_path)
}
