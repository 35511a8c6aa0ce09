//! Run manifests, timing and the trajectory CSV.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use iqcc::{CasWindow, IqccConfig, IqccRun};
use serde::Serialize;

use crate::settings::Settings;
use crate::Input;

/// Everything needed to replay a run. Holds no timestamps, so two runs of
/// the same manifest serialize identically.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: InputRecord<'a>,
    pub config_file: Option<&'a Path>,
    /// Merged file and flag values as given.
    pub settings: &'a Settings,
    /// The resolved configuration actually used.
    pub config: &'a IqccConfig,
    pub window: Option<&'a CasWindow>,
    pub n_qubits: usize,
    pub determinism: &'static str,
}

#[derive(Debug, Serialize)]
pub struct InputRecord<'a> {
    pub path: &'a PathBuf,
    pub sha256: &'a str,
    pub format: &'static str,
}

impl<'a> Manifest<'a> {
    pub fn new(
        command: &'static str,
        inp: &'a Input,
        config_file: Option<&'a Path>,
        settings: &'a Settings,
        config: &'a IqccConfig,
    ) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            input: InputRecord {
                path: &inp.path,
                sha256: &inp.sha256,
                format: inp.format,
            },
            config_file,
            settings,
            config,
            window: inp.window.as_ref(),
            n_qubits: inp.hamiltonian.n_qubits(),
            determinism: "no random numbers; reductions are sequential, so output does not depend on IQCC_THREADS",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub started_unix_seconds: f64,
    pub wall_seconds: f64,
    pub iteration_seconds: Vec<f64>,
}

pub struct Timer {
    wall: SystemTime,
    clock: Instant,
}

impl Timer {
    pub fn start() -> Self {
        Timer {
            wall: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn finish(self, iterations: impl Iterator<Item = Duration>) -> Timing {
        Timing {
            started_unix_seconds: self.wall.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            wall_seconds: self.clock.elapsed().as_secs_f64(),
            iteration_seconds: iterations.map(|d| d.as_secs_f64()).collect(),
        }
    }
}

/// One row per iteration, plus row 0 for the reference energy.
pub fn trajectory_csv(run: &IqccRun, initial_terms: usize) -> String {
    let mut out = String::from("iteration,energy,energy_with_pt,term_count,dropped_weight\n");
    let _ = writeln!(out, "0,{},{},{initial_terms},0", run.initial_energy, run.initial_energy);
    for r in &run.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.index, r.energy, r.energy_with_pt, r.term_count, r.dropped_weight
        );
    }
    out
}
