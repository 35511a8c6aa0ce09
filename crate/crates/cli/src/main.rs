//! `iqcc` command-line frontend.
//!
//! Exit codes: 0 success, 1 domain error (bad input data, capacity or
//! numerical failure), 2 usage error. The thread count is taken from
//! `IQCC_THREADS`; results do not depend on it.

mod report;
mod settings;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iqcc::oracle::{self, Sector};
use iqcc::{
    jordan_wigner, parse_fcidump, reference_state_with_spin, resource_estimate, select_cas,
    spin_operators, Ansatz, CasWindow, MolecularIntegrals, PauliSum,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use report::{trajectory_csv, Manifest, Timer};
use settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] iqcc::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "iqcc", version, about = "Iterative qubit coupled cluster")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// FCIDUMP → qubit Hamiltonian (Jordan–Wigner) as JSON
    Transform {
        input: PathBuf,
        #[arg(long)]
        active_occ: Option<usize>,
        #[arg(long)]
        active_virt: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run iQCC on an FCIDUMP or Pauli-JSON Hamiltonian
    Run {
        input: PathBuf,
        /// TOML file with the same keys as the flags
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
        /// Report JSON (stdout if omitted)
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Per-iteration CSV
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Singlet–triplet gap with spin-penalized runs (μ defaults to 0.25)
    Gap {
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exact lowest eigenvalue by dense or Lanczos diagonalization
    Oracle {
        input: PathBuf,
        #[arg(long)]
        active_occ: Option<usize>,
        #[arg(long)]
        active_virt: Option<usize>,
        /// Restrict to this electron count (FCIDUMP input defaults to the molecule's)
        #[arg(long)]
        electrons: Option<u32>,
        /// Restrict to this 2·S_z
        #[arg(long, allow_negative_numbers = true)]
        two_sz: Option<i32>,
        /// Lowest level with ⟨S²⟩ = s(s+1) at the given 2·S_z (default 0)
        #[arg(long)]
        spin: Option<f64>,
        /// Search the whole register, ignoring molecule defaults
        #[arg(long)]
        unrestricted: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Gate counts for the generators recorded in a run report
    Estimate {
        report: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report is serializable")
}

/// A Hamiltonian ready for iQCC plus where it came from.
pub struct Input {
    pub path: PathBuf,
    pub sha256: String,
    pub format: &'static str,
    pub hamiltonian: PauliSum,
    pub integrals: Option<MolecularIntegrals>,
    pub window: Option<CasWindow>,
    pub n_electrons: Option<usize>,
    pub ms2: i32,
}

fn load_input(path: &Path, active_occ: Option<usize>, active_virt: Option<usize>) -> Result<Input, CliError> {
    let text = read_text(path)?;
    let sha256 = format!("{:x}", Sha256::digest(text.as_bytes()));
    if text.trim_start().starts_with('{') {
        if active_occ.is_some() || active_virt.is_some() {
            return Err(CliError::Usage("active-space flags need FCIDUMP input".into()));
        }
        let hamiltonian = PauliSum::from_json(&text)?;
        let meta: Value = serde_json::from_str(&text).map_err(|e| iqcc::Error::Json(e.to_string()))?;
        return Ok(Input {
            path: path.to_owned(),
            sha256,
            format: "pauli-json",
            hamiltonian,
            integrals: None,
            window: None,
            n_electrons: meta["metadata"]["n_electrons"].as_u64().map(|n| n as usize),
            ms2: meta["metadata"]["ms2"].as_i64().unwrap_or(0) as i32,
        });
    }
    let mi = parse_fcidump(&text)?;
    let window = match (active_occ, active_virt) {
        (None, None) => CasWindow::full(&mi)?,
        (occ, virt) => {
            let full = CasWindow::full(&mi)?;
            CasWindow::around_fermi_level(
                &mi,
                occ.unwrap_or(full.n_occ_active),
                virt.unwrap_or(full.n_virt_active),
            )?
        }
    };
    let cas = select_cas(&mi, &window)?;
    let hamiltonian = jordan_wigner(&cas)?;
    Ok(Input {
        path: path.to_owned(),
        sha256,
        format: "fcidump",
        hamiltonian,
        n_electrons: Some(cas.n_electrons),
        ms2: cas.ms2,
        integrals: Some(cas),
        window: Some(window),
    })
}

fn merged_settings(flags: Settings, config: Option<&Path>) -> Result<Settings, CliError> {
    Ok(match config {
        Some(p) => flags.over(Settings::load(p)?),
        None => flags,
    })
}

fn cmd_transform(
    input: &Path,
    active_occ: Option<usize>,
    active_virt: Option<usize>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let inp = load_input(input, active_occ, active_virt)?;
    let Some(mi) = &inp.integrals else {
        return Err(CliError::Usage("transform expects an FCIDUMP file".into()));
    };
    let mut v = serde_json::to_value(&inp.hamiltonian).expect("serializable");
    v["metadata"] = json!({
        "source": { "path": inp.path, "sha256": inp.sha256 },
        "n_electrons": mi.n_electrons,
        "ms2": mi.ms2,
        "n_spatial": mi.n_spatial,
        "core_energy": mi.core_energy,
        "window": inp.window,
        "term_count": inp.hamiltonian.len(),
    });
    write_out(output, &to_json(&v))
}

fn reference_for(inp: &Input, settings: &Settings) -> Result<iqcc::ReferenceState, CliError> {
    let n_e = settings.electrons.or(inp.n_electrons).ok_or_else(|| {
        CliError::Usage("electron count unknown: pass --electrons for Pauli-JSON input".into())
    })?;
    let ms2 = settings.ms2.unwrap_or(inp.ms2);
    Ok(reference_state_with_spin(n_e, ms2, inp.hamiltonian.n_qubits())?)
}

fn cmd_run(
    input: &Path,
    config: Option<&Path>,
    flags: Settings,
    output: Option<&Path>,
    trajectory: Option<&Path>,
) -> Result<(), CliError> {
    let timer = Timer::start();
    let settings = merged_settings(flags, config)?;
    let cfg = settings.to_config(0.0)?;
    let inp = load_input(input, settings.active_occ, settings.active_virt)?;
    let reference = reference_for(&inp, &settings)?;
    let run = iqcc::run_iqcc(&inp.hamiltonian, &reference, &cfg)?;
    let manifest = Manifest::new("run", &inp, config, &settings, &cfg);
    let report = json!({
        "manifest": manifest,
        "reference": reference.to_bitstring(),
        "initial_term_count": inp.hamiltonian.len(),
        "result": run,
        "resources": resource_estimate(&run.ansatz_history),
        "timing": timer.finish(run.records.iter().map(|r| r.wall_time)),
    });
    write_out(output, &to_json(&report))?;
    if let Some(path) = trajectory {
        write_out(Some(path), &trajectory_csv(&run, inp.hamiltonian.len()))?;
    }
    match &run.termination {
        iqcc::Termination::Aborted(reason) => Err(CliError::Failed(format!("run aborted: {reason}"))),
        _ => Ok(()),
    }
}

fn cmd_gap(input: &Path, config: Option<&Path>, flags: Settings, output: Option<&Path>) -> Result<(), CliError> {
    let timer = Timer::start();
    let settings = merged_settings(flags, config)?;
    if settings.spin.is_some() || settings.ms2.is_some() {
        return Err(CliError::Usage("gap fixes the spin of each state; drop --spin/--ms2".into()));
    }
    let cfg = settings.to_config(0.25)?;
    let inp = load_input(input, settings.active_occ, settings.active_virt)?;
    let n = inp.hamiltonian.n_qubits();
    let n_e = settings
        .electrons
        .or(inp.n_electrons)
        .ok_or_else(|| CliError::Usage("electron count unknown: pass --electrons".into()))?;
    let singlet = reference_state_with_spin(n_e, 0, n)?;
    let triplet = reference_state_with_spin(n_e, 2, n)?;
    let gap = iqcc::gap_from_hamiltonians(&inp.hamiltonian, &singlet, &inp.hamiltonian, &triplet, &cfg)?;
    let walls = gap
        .singlet
        .run
        .records
        .iter()
        .chain(&gap.triplet.run.records)
        .map(|r| r.wall_time);
    let report = json!({
        "manifest": Manifest::new("gap", &inp, config, &settings, &cfg),
        "result": gap,
        "timing": timer.finish(walls),
    });
    write_out(output, &to_json(&report))?;
    for state in [&gap.singlet, &gap.triplet] {
        if let iqcc::Termination::Aborted(reason) = &state.run.termination {
            return Err(CliError::Failed(format!("{} run aborted: {reason}", state.label)));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    input: &Path,
    active_occ: Option<usize>,
    active_virt: Option<usize>,
    electrons: Option<u32>,
    two_sz: Option<i32>,
    spin: Option<f64>,
    unrestricted: bool,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let inp = load_input(input, active_occ, active_virt)?;
    let h = &inp.hamiltonian;
    let (electrons, two_sz) = if unrestricted {
        (electrons, two_sz)
    } else {
        (
            electrons.or(inp.n_electrons.map(|n| n as u32)),
            two_sz.or(inp.integrals.as_ref().map(|mi| mi.ms2)),
        )
    };
    let (energy, residual) = match spin {
        Some(s) => {
            let (s2, sz) = spin_operators(h.n_qubits())?;
            let m_s = f64::from(two_sz.unwrap_or(0)) / 2.0;
            (oracle::spin_resolved_spectrum(h, &s2, &sz, s, m_s, electrons)?, None)
        }
        None if electrons.is_some() || two_sz.is_some() => {
            let gs = oracle::ground_state_in_sector(
                h,
                Sector {
                    n_electrons: electrons,
                    two_sz,
                },
            )?;
            (gs.energy, Some(gs.residual))
        }
        None => {
            let gs = oracle::ground_state(h)?;
            (gs.energy, Some(gs.residual))
        }
    };
    let report = json!({
        "input": { "path": inp.path, "sha256": inp.sha256, "format": inp.format },
        "n_qubits": h.n_qubits(),
        "sector": { "n_electrons": electrons, "two_sz": two_sz, "spin": spin },
        "energy": energy,
        "residual": residual,
    });
    write_out(output, &to_json(&report))
}

fn cmd_estimate(path: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let text = read_text(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| iqcc::Error::Json(e.to_string()))?;
    let history = v
        .pointer("/result/ansatz_history")
        .or_else(|| v.get("ansatz_history"))
        .ok_or_else(|| CliError::Failed(format!("{}: no ansatz_history found", path.display())))?;
    let history: Vec<Ansatz> =
        serde_json::from_value(history.clone()).map_err(|e| iqcc::Error::Json(e.to_string()))?;
    write_out(output, &to_json(&resource_estimate(&history)))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("IQCC_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .map_err(|_| CliError::Usage(format!("IQCC_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Transform {
            input,
            active_occ,
            active_virt,
            output,
        } => cmd_transform(&input, active_occ, active_virt, output.as_deref()),
        Command::Run {
            input,
            config,
            settings,
            output,
            trajectory,
        } => cmd_run(&input, config.as_deref(), settings, output.as_deref(), trajectory.as_deref()),
        Command::Gap {
            input,
            config,
            settings,
            output,
        } => cmd_gap(&input, config.as_deref(), settings, output.as_deref()),
        Command::Oracle {
            input,
            active_occ,
            active_virt,
            electrons,
            two_sz,
            spin,
            unrestricted,
            output,
        } => cmd_oracle(&input, active_occ, active_virt, electrons, two_sz, spin, unrestricted, output.as_deref()),
        Command::Estimate { report, output } => cmd_estimate(&report, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iqcc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
