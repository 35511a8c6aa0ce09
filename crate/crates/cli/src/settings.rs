//! iQCC settings shared by the config file and the command line. Keys in the
//! TOML file are the long flag names; a flag given on the command line wins.

use std::path::Path;

use clap::Args;
use iqcc::{ImportanceMeasure, IqccConfig, OptimizationConfig, SpinPenalty};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Generators per iteration (1..=16) [default: 8]
    #[arg(long, short = 'L')]
    pub generators: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Stop once successive energies differ by at most this (Hartree) [default: 1e-5]
    #[arg(long)]
    pub energy_convergence: Option<f64>,
    /// Drop dressed terms with |c| below this [default: 1e-10]
    #[arg(long)]
    pub prune_threshold: Option<f64>,
    /// Spin-penalty strength μ
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Target total spin s for the penalty [default: 0]
    #[arg(long)]
    pub spin: Option<f64>,
    /// Add the perturbative estimate from unselected generators [default: true]
    #[arg(long, value_name = "BOOL")]
    pub enable_pt: Option<bool>,
    /// Abort once the dressed Hamiltonian exceeds this many terms
    #[arg(long)]
    pub term_budget: Option<usize>,
    /// Generator ranking: amplitude or gradient [default: amplitude]
    #[arg(long, value_parser = parse_importance)]
    pub importance: Option<ImportanceMeasure>,
    /// Rank against the penalized operator rather than the bare Hamiltonian [default: true]
    #[arg(long, value_name = "BOOL")]
    pub rank_penalized: Option<bool>,
    /// [default: 1e-8]
    #[arg(long)]
    pub gradient_tolerance: Option<f64>,
    /// Energy evaluations per amplitude optimization [default: 200]
    #[arg(long)]
    pub max_evaluations: Option<usize>,
    /// Active occupied orbitals below the Fermi level (FCIDUMP input)
    #[arg(long)]
    pub active_occ: Option<usize>,
    /// Active virtual orbitals above the Fermi level (FCIDUMP input)
    #[arg(long)]
    pub active_virt: Option<usize>,
    /// Electron count, needed for Pauli-JSON input without metadata
    #[arg(long)]
    pub electrons: Option<usize>,
    /// 2·M_S of the reference determinant
    #[arg(long, allow_negative_numbers = true)]
    pub ms2: Option<i32>,
}

fn parse_importance(s: &str) -> Result<ImportanceMeasure, String> {
    match s {
        "amplitude" => Ok(ImportanceMeasure::Amplitude),
        "gradient" => Ok(ImportanceMeasure::Gradient),
        _ => Err(format!("expected `amplitude` or `gradient`, got `{s}`")),
    }
}

macro_rules! overlay {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Settings { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Settings {
    /// `self` (flags) on top of `file`.
    pub fn over(self, file: Settings) -> Settings {
        overlay!(self, file; generators, max_iterations, energy_convergence, prune_threshold, mu,
            spin, enable_pt, term_budget, importance, rank_penalized, gradient_tolerance,
            max_evaluations, active_occ, active_virt, electrons, ms2)
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = crate::read_text(path)?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fully resolved iQCC configuration; invalid values are usage errors.
    pub fn to_config(&self, default_mu: f64) -> Result<IqccConfig, CliError> {
        let d = IqccConfig::default();
        let o = OptimizationConfig::default();
        let cfg = IqccConfig {
            generators_per_iteration: self.generators.unwrap_or(d.generators_per_iteration),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            energy_convergence: self.energy_convergence.unwrap_or(d.energy_convergence),
            prune_threshold: self.prune_threshold.unwrap_or(d.prune_threshold),
            penalty: SpinPenalty {
                mu: self.mu.unwrap_or(default_mu),
                s: self.spin.unwrap_or(0.0),
            },
            enable_pt: self.enable_pt.unwrap_or(d.enable_pt),
            term_budget: self.term_budget.unwrap_or(d.term_budget),
            importance: self.importance.unwrap_or(d.importance),
            rank_penalized: self.rank_penalized.unwrap_or(d.rank_penalized),
            optimizer: OptimizationConfig {
                gradient_tolerance: self.gradient_tolerance.unwrap_or(o.gradient_tolerance),
                max_evaluations: self.max_evaluations.unwrap_or(o.max_evaluations),
                memory_depth: o.memory_depth,
            },
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}
