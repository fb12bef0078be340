//! Command-line harness for the `gossip-aoi` library: exact moments, first
//! passage percolation and simulation estimates, lattice time constants, and
//! a side-by-side comparison, emitted as versioned JSON or CSV reports.

pub mod config;
pub mod report;
pub mod run;

pub use config::{Command, Format, RunConfig, SimMode};
pub use report::{emit_report, CompareReport, Real, Report};
pub use run::{run, write_report, Outcome};
