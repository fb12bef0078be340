//! Report documents and their JSON / CSV encodings.

use std::fmt;
use std::io::Write;

use gossip_aoi::MomentEstimate;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::config::{Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Extended real that serializes `+∞` as `"inf"` in every format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        if x.is_nan() {
            f.write_str("nan")
        } else if x == f64::INFINITY {
            f.write_str("inf")
        } else if x == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{x}")
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.collect_str(self)
        }
    }
}

pub fn reals(xs: &[f64]) -> Vec<Real> {
    xs.iter().copied().map(Real).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateRow {
    pub k: usize,
    pub mean: Real,
    pub std_error: Real,
    pub samples: u64,
}

impl From<&MomentEstimate> for EstimateRow {
    fn from(e: &MomentEstimate) -> Self {
        EstimateRow { k: e.k, mean: Real(e.mean), std_error: Real(e.std_error), samples: e.sample_count }
    }
}

/// Subset-keyed moment table, serialized as a JSON object in subset order.
#[derive(Clone, Debug, Default)]
pub struct SubsetMap(pub Vec<(String, Vec<Real>)>);

impl Serialize for SubsetMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (key, values) in &self.0 {
            map.serialize_entry(key, values)?;
        }
        map.end()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub value: Real,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum SolveResult {
    Subset {
        subset: Vec<usize>,
        moments: Vec<MomentRow>,
        zero_denominator_supersets: Vec<Vec<usize>>,
    },
    Table {
        table: SubsetMap,
        zero_denominator_supersets: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct FppResult {
    pub subset: Vec<usize>,
    pub estimates: Vec<EstimateRow>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SimulateResult {
    Replication {
        subset: Vec<usize>,
        horizon: Real,
        replicas: u64,
        pending: u64,
        estimates: Vec<EstimateRow>,
    },
    TimeAverage {
        subset: Vec<usize>,
        horizon: Real,
        burn_in: Real,
        t0: Option<Real>,
        burn_in_before_t0: bool,
        events: u64,
        estimates: Vec<EstimateRow>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeResult {
    pub d: usize,
    pub ell: usize,
    /// `None` when the interior exceeds the exact recursion cap.
    pub raw: Option<Real>,
    pub normalized: Option<Real>,
    pub mc_mean: Real,
    pub mc_se: Real,
    pub samples: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub k: usize,
    pub solver: Real,
    pub fpp_mean: Real,
    pub fpp_se: Real,
    pub fpp_z: Real,
    pub sim_mean: Real,
    pub sim_se: Real,
    pub sim_z: Real,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub subset: Vec<usize>,
    pub se_threshold: Real,
    pub samples: u64,
    pub replicas: u64,
    pub horizon: Real,
    pub pending: u64,
    pub rows: Vec<CompareRow>,
    pub all_pass: bool,
}

impl CompareReport {
    /// Builds rows from exact moments `(v^0, …, v^K)` and the two oracles'
    /// estimates for `k = 1..=K`. A row passes iff both `|z| ≤ threshold`.
    pub fn rows(exact: &[f64], fpp: &[MomentEstimate], sim: &[MomentEstimate], threshold: f64) -> Vec<CompareRow> {
        fpp.iter()
            .zip(sim)
            .map(|(f, s)| {
                let solver = exact[f.k];
                let (fz, sz) = (f.z_score(solver), s.z_score(solver));
                CompareRow {
                    k: f.k,
                    solver: Real(solver),
                    fpp_mean: Real(f.mean),
                    fpp_se: Real(f.std_error),
                    fpp_z: Real(fz),
                    sim_mean: Real(s.mean),
                    sim_se: Real(s.std_error),
                    sim_z: Real(sz),
                    pass: fz.abs() <= threshold && sz.abs() <= threshold,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ReportBody {
    Solve(SolveResult),
    Fpp(FppResult),
    Simulate(SimulateResult),
    Lattice(LatticeResult),
    Compare(CompareReport),
}

/// Full report document. Field order is the serialization order.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    pub result: ReportBody,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl Report {
    pub fn new(config: &RunConfig, result: ReportBody) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            tool: "gossip-aoi",
            version: env!("CARGO_PKG_VERSION"),
            command: config.command.name(),
            seed: config.seed,
            config: config.clone(),
            result,
            runtime_s: None,
        }
    }
}

fn subset_label(nodes: &[usize]) -> String {
    nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes the report. CSV output starts with `#` comment lines carrying the
/// metadata, then a fixed header and one row per record.
pub fn emit_report(report: &Report, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(
                out,
                "# schema={} tool={} version={} command={} seed={}",
                report.schema, report.tool, report.version, report.command, report.seed
            )?;
            writeln!(out, "# config={}", serde_json::to_string(&report.config)?)?;
            if let Some(t) = report.runtime_s {
                writeln!(out, "# runtime_s={t}")?;
            }
            let mut w = csv::Writer::from_writer(&mut *out);
            write_csv_body(&report.result, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_estimates<W: Write>(rows: &[EstimateRow], w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(["k", "mean", "std_error", "samples"])?;
    for r in rows {
        w.write_record([r.k.to_string(), r.mean.to_string(), r.std_error.to_string(), r.samples.to_string()])?;
    }
    Ok(())
}

fn write_csv_body<W: Write>(body: &ReportBody, w: &mut csv::Writer<W>) -> csv::Result<()> {
    match body {
        ReportBody::Solve(SolveResult::Subset { subset, moments, .. }) => {
            let mut header = vec!["subset".to_string()];
            header.extend(moments.iter().map(|m| format!("v{}", m.k)));
            w.write_record(&header)?;
            let mut row = vec![subset_label(subset)];
            row.extend(moments.iter().map(|m| m.value.to_string()));
            w.write_record(&row)?;
        }
        ReportBody::Solve(SolveResult::Table { table, .. }) => {
            let order = table.0.first().map_or(0, |(_, v)| v.len());
            let mut header = vec!["subset".to_string()];
            header.extend((1..=order).map(|k| format!("v{k}")));
            w.write_record(&header)?;
            for (key, values) in &table.0 {
                let mut row = vec![key.clone()];
                row.extend(values.iter().map(Real::to_string));
                w.write_record(&row)?;
            }
        }
        ReportBody::Fpp(r) => write_estimates(&r.estimates, w)?,
        ReportBody::Simulate(SimulateResult::Replication { estimates, .. })
        | ReportBody::Simulate(SimulateResult::TimeAverage { estimates, .. }) => write_estimates(estimates, w)?,
        ReportBody::Lattice(r) => {
            w.write_record(["d", "ell", "raw", "normalized", "mc_mean", "mc_se", "samples"])?;
            let opt = |x: Option<Real>| x.map_or(String::new(), |r| r.to_string());
            w.write_record([
                r.d.to_string(),
                r.ell.to_string(),
                opt(r.raw),
                opt(r.normalized),
                r.mc_mean.to_string(),
                r.mc_se.to_string(),
                r.samples.to_string(),
            ])?;
        }
        ReportBody::Compare(r) => {
            w.write_record([
                "k", "solver", "fpp_mean", "fpp_se", "fpp_z", "sim_mean", "sim_se", "sim_z", "pass",
            ])?;
            for row in &r.rows {
                w.write_record([
                    row.k.to_string(),
                    row.solver.to_string(),
                    row.fpp_mean.to_string(),
                    row.fpp_se.to_string(),
                    row.fpp_z.to_string(),
                    row.sim_mean.to_string(),
                    row.sim_se.to_string(),
                    row.sim_z.to_string(),
                    row.pass.to_string(),
                ])?;
            }
        }
    }
    Ok(())
}
