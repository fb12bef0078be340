//! Command dispatch: validates the configuration, calls into the library and
//! assembles the report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use gossip_aoi::exec::{derive_seed, StreamFactory};
use gossip_aoi::fpp::estimate_subsets;
use gossip_aoi::lattice::{build_box, mc_boundary_passage, time_constant_estimate, LatticeError};
use gossip_aoi::moments::{solve_all, solve_moments};
use gossip_aoi::sim::{
    default_burn_in, estimate_moments_replication, estimate_moments_timeavg_with, run_until_with, EventClock,
    SimState,
};
use gossip_aoi::{Execution, GossipNetwork, NodeSubset, SOURCE};

use crate::config::{Command, RunConfig, SimMode};
use crate::report::{
    reals, CompareReport, EstimateRow, FppResult, LatticeResult, MomentRow, Real, Report, ReportBody,
    SimulateResult, SolveResult, SubsetMap,
};

/// Stream tag separating simulator randomness from the FPP sampler.
const SIM_SEED_TAG: u64 = 1;

/// Time-average horizon, as a multiple of the burn-in, when none is given.
const TIME_AVERAGE_SPAN: f64 = 1000.0;

/// Outcome of a run: the report plus whether every check passed (only
/// `compare` can fail).
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    let exec = Execution::with_workers(config.workers);
    if config.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let (body, passed) = match config.command {
        Command::Solve => (ReportBody::Solve(solve(config, exec)?), true),
        Command::Fpp => (ReportBody::Fpp(fpp(config, exec)?), true),
        Command::Simulate => (ReportBody::Simulate(simulate(config, exec)?), true),
        Command::Lattice => (ReportBody::Lattice(lattice(config, exec)?), true),
        Command::Compare => {
            let report = compare(config, exec)?;
            let pass = report.all_pass;
            (ReportBody::Compare(report), pass)
        }
    };
    let mut report = Report::new(config, body);
    if config.timing {
        report.runtime_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(Outcome { report, passed })
}

fn load_network(config: &RunConfig) -> Result<GossipNetwork> {
    let path = config.network.as_deref().context("--network is required for this command")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GossipNetwork::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn parse_subset(config: &RunConfig, net: &GossipNetwork) -> Result<Option<NodeSubset>> {
    if config.subset.is_empty() {
        return Ok(None);
    }
    for &u in &config.subset {
        if u == SOURCE {
            bail!("--subset may not contain the source node 0");
        }
        if u > net.node_count() {
            bail!("--subset node {u} is outside the network (nodes 1..={})", net.node_count());
        }
    }
    Ok(Some(config.subset.iter().copied().collect()))
}

fn require_subset(config: &RunConfig, net: &GossipNetwork) -> Result<NodeSubset> {
    parse_subset(config, net)?.context("--subset is required for this command")
}

fn members(s: NodeSubset) -> Vec<usize> {
    s.iter().collect()
}

fn solve(config: &RunConfig, exec: Execution) -> Result<SolveResult> {
    let net = load_network(config)?;
    match parse_subset(config, &net)? {
        Some(s) => {
            let sol = solve_moments(&net, s, config.k)?;
            Ok(SolveResult::Subset {
                subset: members(s),
                moments: (1..=config.k).map(|k| MomentRow { k, value: Real(sol.moments[k]) }).collect(),
                zero_denominator_supersets: sol.zero_denominator.into_iter().map(members).collect(),
            })
        }
        None => {
            let table = solve_all(&net, config.k, exec)?;
            let mut rows: Vec<(NodeSubset, Vec<Real>)> =
                table.iter().map(|(s, m)| (s, reals(&m[1..]))).collect();
            rows.sort_by_key(|(s, _)| (s.len(), members(*s)));
            Ok(SolveResult::Table {
                table: SubsetMap(rows.into_iter().map(|(s, m)| (s.to_string(), m)).collect()),
                zero_denominator_supersets: table.zero_denominator_supersets().iter().map(|&s| members(s)).collect(),
            })
        }
    }
}

fn fpp(config: &RunConfig, exec: Execution) -> Result<FppResult> {
    let net = load_network(config)?;
    let s = require_subset(config, &net)?;
    let est = estimate_subsets(&net, &[s], config.k, config.samples, config.seed, exec)?.remove(0);
    Ok(FppResult { subset: members(s), estimates: est.iter().map(EstimateRow::from).collect() })
}

fn sim_seed(config: &RunConfig) -> u64 {
    derive_seed(config.seed, SIM_SEED_TAG)
}

fn resolve_burn_in(config: &RunConfig, net: &GossipNetwork, s: NodeSubset, exec: Execution) -> Result<f64> {
    match config.burn_in {
        Some(b) => Ok(b),
        None => Ok(default_burn_in(net, s, sim_seed(config), exec)?),
    }
}

fn resolve_horizon(config: &RunConfig, net: &GossipNetwork, s: NodeSubset, exec: Execution) -> Result<f64> {
    match config.horizon {
        Some(h) => Ok(h),
        None => resolve_burn_in(config, net, s, exec),
    }
}

struct TraceWriter {
    out: csv::Writer<BufWriter<File>>,
}

impl TraceWriter {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = csv::Writer::from_writer(BufWriter::new(file));
        out.write_record(["time", "from", "to", "new_timestamp"])?;
        Ok(TraceWriter { out })
    }

    fn record(&mut self, time: f64, from: usize, to: usize, new_timestamp: f64) -> csv::Result<()> {
        self.out.write_record([time.to_string(), from.to_string(), to.to_string(), new_timestamp.to_string()])
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

fn simulate(config: &RunConfig, exec: Execution) -> Result<SimulateResult> {
    let net = load_network(config)?;
    let s = require_subset(config, &net)?;
    let seed = sim_seed(config);
    match config.mode {
        SimMode::Replication => {
            let horizon = resolve_horizon(config, &net, s, exec)?;
            let r = estimate_moments_replication(&net, s, config.k, config.replicas, horizon, seed, exec)?;
            if let Some(path) = &config.trace {
                // Replays replica 0 of the estimate above.
                let mut trace = TraceWriter::create(path)?;
                let clock = EventClock::new(&net)?;
                let mut state = SimState::new(&net);
                let mut rng = StreamFactory::new(seed).stream(0);
                let mut failed = None;
                run_until_with(&mut state, &clock, horizon, &mut rng, |e| {
                    if let Err(err) = trace.record(e.time, e.from, e.to, e.new_timestamp) {
                        failed.get_or_insert(err);
                    }
                })?;
                if let Some(err) = failed {
                    return Err(err.into());
                }
                trace.finish()?;
            }
            Ok(SimulateResult::Replication {
                subset: members(s),
                horizon: Real(horizon),
                replicas: r.replicas,
                pending: r.pending,
                estimates: r.estimates.iter().map(EstimateRow::from).collect(),
            })
        }
        SimMode::TimeAverage => {
            let burn_in = resolve_burn_in(config, &net, s, exec)?;
            let horizon = config.horizon.unwrap_or(TIME_AVERAGE_SPAN * burn_in.max(1.0));
            let mut trace = config.trace.as_deref().map(TraceWriter::create).transpose()?;
            let mut failed = None;
            let t = estimate_moments_timeavg_with(&net, s, config.k, horizon, burn_in, seed, |e| {
                if let Some(w) = trace.as_mut() {
                    if let Err(err) = w.record(e.time, e.from, e.to, e.new_timestamp) {
                        failed.get_or_insert(err);
                    }
                }
            })?;
            if let Some(err) = failed {
                return Err(err.into());
            }
            if let Some(w) = trace {
                w.finish()?;
            }
            if t.burn_in_before_t0 {
                eprintln!("warning: averaging window opened before t0; estimates include the transient");
            }
            Ok(SimulateResult::TimeAverage {
                subset: members(s),
                horizon: Real(horizon),
                burn_in: Real(burn_in),
                t0: t.t0.map(Real),
                burn_in_before_t0: t.burn_in_before_t0,
                events: t.events,
                estimates: t.estimates.iter().map(EstimateRow::from).collect(),
            })
        }
    }
}

fn lattice(config: &RunConfig, exec: Execution) -> Result<LatticeResult> {
    build_box(config.d, config.ell)?;
    let exact = match time_constant_estimate(config.d, config.ell) {
        Ok(tc) => Some(tc),
        Err(LatticeError::RecursionCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mc = mc_boundary_passage(config.d, config.ell, config.samples, config.seed, exec)?;
    Ok(LatticeResult {
        d: config.d,
        ell: config.ell,
        raw: exact.map(|tc| Real(tc.raw)),
        normalized: exact.map(|tc| Real(tc.normalized)),
        mc_mean: Real(mc.mean),
        mc_se: Real(mc.std_error),
        samples: mc.sample_count,
    })
}

fn compare(config: &RunConfig, exec: Execution) -> Result<CompareReport> {
    let net = load_network(config)?;
    let s = require_subset(config, &net)?;
    let exact = solve_moments(&net, s, config.k)?.moments;
    if !exact[1].is_finite() {
        bail!("subset {s} never hears from the source; its moments are infinite");
    }
    let fpp = estimate_subsets(&net, &[s], config.k, config.samples, config.seed, exec)?.remove(0);
    let horizon = resolve_horizon(config, &net, s, exec)?;
    let sim = estimate_moments_replication(&net, s, config.k, config.replicas, horizon, sim_seed(config), exec)?;
    let rows = CompareReport::rows(&exact, &fpp, &sim.estimates, config.se_threshold);
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(CompareReport {
        subset: members(s),
        se_threshold: Real(config.se_threshold),
        samples: config.samples,
        replicas: config.replicas,
        horizon: Real(horizon),
        pending: sim.pending,
        rows,
        all_pass,
    })
}

/// Writes the report to `--out` or stdout.
pub fn write_report(config: &RunConfig, report: &Report) -> Result<()> {
    match &config.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            crate::report::emit_report(report, config.format, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            crate::report::emit_report(report, config.format, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}
