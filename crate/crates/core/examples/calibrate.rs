// Scratch calibration runner used during development.

use lsn_core::engine::{run_scenario, ScenarioConfig};
use std::path::Path;

fn base(seed: u64, overrides: &[(&str, &str)]) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/oneweb.toml");
    let mut ov: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ov.push(("sim.seed".into(), seed.to_string()));
    ScenarioConfig::load(&path, &ov).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("c1");
    match which {
        "c1" => {
            for policy in ["ctv", "mdv", "mta"] {
                for seed in 1..=5u64 {
                    let cfg = base(seed, &[("routing.policy", &format!("\"{policy}\""))]);
                    let t0 = std::time::Instant::now();
                    let out = run_scenario(&cfg).unwrap();
                    println!(
                        "c1 {policy} seed {seed}: reach {:?} excl {:?} gaps {} failed {} [{:?}]",
                        out.report.reachability_pct,
                        out.report.reachability_excl_gaps_pct,
                        out.report.attempts.coverage_gaps,
                        out.report.attempts.failed,
                        t0.elapsed()
                    );
                }
            }
        }
        "c2" => {
            for seed in 1..=5u64 {
                let full = base(seed, &[("failure.ratio", "0.3")]);
                let f = run_scenario(&full).unwrap();
                let greedy = base(
                    seed,
                    &[("failure.ratio", "0.3"), ("routing.router", "\"greedy\"")],
                );
                let g = run_scenario(&greedy).unwrap();
                println!(
                    "c2 seed {seed}: full {:.2?} greedy {:.2?} ratio {:.2}",
                    f.report.reachability_pct,
                    g.report.reachability_pct,
                    f.report.reachability_pct.unwrap() / g.report.reachability_pct.unwrap()
                );
            }
        }
        "c3" => {
            for ratio in ["0.2", "0.3"] {
                for seed in 1..=5u64 {
                    let nbas = base(seed, &[("failure.ratio", ratio)]);
                    let cq = base(seed, &[("failure.ratio", ratio), ("routing.n_max", "0")]);
                    let rd = base(
                        seed,
                        &[
                            ("failure.ratio", ratio),
                            ("routing.n_max", "0"),
                            ("evolution.strategy", "\"random\""),
                        ],
                    );
                    let gr = base(
                        seed,
                        &[("failure.ratio", ratio), ("routing.router", "\"greedy\"")],
                    );
                    let r = |cfg: &ScenarioConfig| {
                        run_scenario(cfg).unwrap().report.reachability_pct.unwrap()
                    };
                    println!(
                        "c3 ratio {ratio} seed {seed}: nbas {:.2} cqsbe {:.2} random {:.2} greedy {:.2}",
                        r(&nbas),
                        r(&cq),
                        r(&rd),
                        r(&gr)
                    );
                }
            }
        }
        "c4" => {
            for seed in 1..=3u64 {
                let cfg = base(seed, &[("failure.ratio", "0.3")]);
                let out = run_scenario(&cfg).unwrap();
                let o = &out.report.overhead;
                println!(
                    "c4 seed {seed}: ospf ({:.0},{:.0}) aodv ({:.0},{:.0}) dabr ({:.0},{:.0}) | dabr/ospf fib {:.4}% msg {:.4}%",
                    o["ospf"].fib_updates,
                    o["ospf"].control_messages,
                    o["aodv"].fib_updates,
                    o["aodv"].control_messages,
                    o["dabr"].fib_updates,
                    o["dabr"].control_messages,
                    100.0 * o["dabr"].fib_updates / o["ospf"].fib_updates,
                    100.0 * o["dabr"].control_messages / o["ospf"].control_messages,
                );
            }
        }
        "c5" => {
            for seed in 1..=5u64 {
                for strat in ["static", "cqsbe", "random", "basic"] {
                    let cfg = base(
                        seed,
                        &[
                            ("failure.ratio", "0.3"),
                            ("evolution.strategy", &format!("\"{strat}\"")),
                            ("traffic.flows", "0"),
                        ],
                    );
                    let out = run_scenario(&cfg).unwrap();
                    let s = &out.report.survivability;
                    println!(
                        "c5 seed {seed} {strat:>7}: iul/round {:8.2} vagrants {:4} fu_degree {:6.2}",
                        s.mean_iul_changes_per_round, s.end_vagrants, s.mean_fu_degree
                    );
                }
                println!();
            }
        }
        "c6" => {
            for seed in 1..=5u64 {
                let mut line = format!("c6 seed {seed}:");
                for (name, ov) in [
                    ("full", vec![("failure.ratio", "0.3")]),
                    (
                        "greedy",
                        vec![("failure.ratio", "0.3"), ("routing.router", "\"greedy\"")],
                    ),
                    (
                        "mhp",
                        vec![("failure.ratio", "0.3"), ("routing.router", "\"mhp\"")],
                    ),
                    (
                        "sdp",
                        vec![("failure.ratio", "0.3"), ("routing.router", "\"sdp\"")],
                    ),
                ] {
                    let cfg = base(seed, &ov);
                    let out = run_scenario(&cfg).unwrap();
                    line += &format!(" {name} {:.4?}ms", out.report.jitter_s.map(|j| j * 1000.0));
                }
                println!("{line}");
            }
        }
        other => eprintln!("unknown calibration {other}"),
    }
}
