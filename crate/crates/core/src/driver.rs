//! The outer iQCC loop and the singlet/triplet gap workflow.
//!
//! One iteration: Ising-decompose the current Hamiltonian, rank canonical
//! generators, warm-start their amplitudes from the single-generator
//! optimum, minimize the QCC energy, dress the Hamiltonian with the optimal
//! Ansatz, prune, and (optionally) add the perturbative estimate from the
//! generators that were not selected. The reference state never changes.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{
    jordan_wigner, penalize, reference_state_with_spin, select_cas, CasWindow, MolecularIntegrals,
    SpinPenalty,
};
use crate::hamiltonian::{dress_sequence, prune, PauliSum, ReferenceState};
use crate::optimize::{minimize, OptimizationConfig, OptimizationResult};
use crate::qcc::{
    estimate_amplitude, qcc_energy_and_gradient, rank_generators_by, Ansatz,
    ImportanceMeasure, RankedGenerator, MAX_ANSATZ_LEN,
};

/// CODATA 2018 Hartree energy in eV.
pub const HARTREE_TO_EV: f64 = 27.211386245988;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IqccConfig {
    pub generators_per_iteration: usize,
    pub max_iterations: usize,
    /// Stop once `|E_i − E_{i−1}|` (without PT) is at most this, in Hartree.
    pub energy_convergence: f64,
    /// Terms with `|c|` below this are dropped after every dressing.
    pub prune_threshold: f64,
    pub penalty: SpinPenalty,
    pub enable_pt: bool,
    /// Abort once the dressed Hamiltonian holds more terms than this.
    pub term_budget: usize,
    pub importance: ImportanceMeasure,
    /// Rank generators against the penalized operator being minimized
    /// (`true`) or against the bare Hamiltonian dressed alongside it.
    pub rank_penalized: bool,
    pub optimizer: OptimizationConfig,
}

impl Default for IqccConfig {
    fn default() -> Self {
        IqccConfig {
            generators_per_iteration: 8,
            max_iterations: 100,
            energy_convergence: 1e-5,
            prune_threshold: 1e-10,
            penalty: SpinPenalty { mu: 0.0, s: 0.0 },
            enable_pt: true,
            term_budget: 50_000_000,
            importance: ImportanceMeasure::Amplitude,
            rank_penalized: true,
            optimizer: OptimizationConfig::default(),
        }
    }
}

impl IqccConfig {
    pub fn validate(&self) -> Result<()> {
        let l = self.generators_per_iteration;
        if l == 0 || l > MAX_ANSATZ_LEN {
            return Err(Error::AnsatzTooLong(l, MAX_ANSATZ_LEN));
        }
        if !(self.energy_convergence > 0.0) {
            return Err(Error::InvalidArgument("energy_convergence must be positive".into()));
        }
        if !(self.prune_threshold >= 0.0) {
            return Err(Error::InvalidArgument("prune_threshold must be non-negative".into()));
        }
        if self.term_budget == 0 {
            return Err(Error::InvalidArgument("term_budget must be positive".into()));
        }
        SpinPenalty::new(self.penalty.mu, self.penalty.s)?;
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub energy: f64,
    pub energy_with_pt: f64,
    pub pt_correction: f64,
    pub generators: Vec<String>,
    pub amplitudes: Vec<f64>,
    /// Selected generators with the estimates they were ranked by.
    pub ranking: Vec<RankedGenerator>,
    pub evaluations: usize,
    pub optimizer_converged: bool,
    /// Terms in the dressed and pruned Hamiltonian carried forward.
    pub term_count: usize,
    /// Terms right after dressing, before pruning.
    pub term_count_unpruned: usize,
    pub dropped_weight: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// The Hamiltonian offers no generator with a nonzero energy gradient.
    NoGenerators,
    MaxIterations,
    Aborted(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct IqccRun {
    pub reference: ReferenceState,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_energy_with_pt: f64,
    pub termination: Termination,
    pub records: Vec<IterationRecord>,
    pub ansatz_history: Vec<Ansatz>,
    #[serde(skip)]
    pub final_hamiltonian: PauliSum,
    #[serde(skip)]
    pub abort_error: Option<Error>,
}

impl IqccRun {
    pub fn is_aborted(&self) -> bool {
        matches!(self.termination, Termination::Aborted(_))
    }

    /// Every `(generator, amplitude)` applied so far, in Ansatz order.
    pub fn all_generators(&self) -> Vec<(crate::pauli::PauliWord, f64)> {
        self.ansatz_history.iter().flat_map(|a| a.terms.iter().copied()).collect()
    }
}

/// Runs iQCC on `h0` from a fixed reference. A positive penalty strength in
/// `cfg` adds `μ (S² − s(s+1) S_z)` before the first iteration.
///
/// Optimizer failures and budget overruns end the run early with
/// [`Termination::Aborted`] and the trajectory collected so far.
pub fn run_iqcc(h0: &PauliSum, reference: &ReferenceState, cfg: &IqccConfig) -> Result<IqccRun> {
    cfg.validate()?;
    h0.check_hermitian()?;
    if reference.n_qubits != h0.n_qubits() {
        return Err(Error::DimensionMismatch(h0.n_qubits(), reference.n_qubits));
    }
    let mut h = if cfg.penalty.mu > 0.0 {
        penalize(h0, &cfg.penalty)?
    } else {
        h0.clone()
    };
    let separate_ranking = cfg.penalty.mu > 0.0 && !cfg.rank_penalized;
    let mut bare = h0.clone();

    let initial_energy = h.reference_energy(reference);
    let mut run = IqccRun {
        reference: *reference,
        initial_energy,
        final_energy: initial_energy,
        final_energy_with_pt: initial_energy,
        termination: Termination::MaxIterations,
        records: Vec::new(),
        ansatz_history: Vec::new(),
        final_hamiltonian: PauliSum::zero(h0.n_qubits()),
        abort_error: None,
    };
    let mut e_last = initial_energy;

    for index in 1..=cfg.max_iterations {
        let started = Instant::now();
        let target = if separate_ranking { &bare } else { &h };
        let (selected, mut remainder) =
            rank_generators_by(target, reference, cfg.generators_per_iteration, cfg.importance)?;
        let (selected, idle): (Vec<_>, Vec<_>) = selected.into_iter().partition(|g| g.importance > 0.0);
        remainder.extend(idle);
        if selected.is_empty() {
            run.termination = Termination::NoGenerators;
            break;
        }

        let ansatz = Ansatz::new(selected.iter().map(|g| (g.generator, g.t_estimate)).collect())?;
        let result = match optimize_ansatz(&h, &ansatz, reference, &cfg.optimizer) {
            Ok(r) => r,
            Err(e) => {
                run.termination = Termination::Aborted(e.to_string());
                run.abort_error = Some(e);
                break;
            }
        };
        let optimal = ansatz.with_amplitudes(&result.t_opt);

        let dressed = dress_sequence(&h, &optimal.terms)?;
        let term_count_unpruned = dressed.len();
        let (next, dropped) = prune(&dressed, cfg.prune_threshold);
        drop(dressed);
        if next.len() > cfg.term_budget {
            let e = Error::CapacityExceeded {
                count: next.len(),
                budget: cfg.term_budget,
            };
            run.termination = Termination::Aborted(e.to_string());
            run.abort_error = Some(e);
            break;
        }
        if separate_ranking {
            bare = prune(&dress_sequence(&bare, &optimal.terms)?, cfg.prune_threshold).0;
        }
        h = next;

        let pt = if cfg.enable_pt {
            pt_correction(if separate_ranking { &bare } else { &h }, reference, &remainder)?
        } else {
            0.0
        };
        let energy = result.energy;
        run.records.push(IterationRecord {
            index,
            energy,
            energy_with_pt: energy + pt,
            pt_correction: pt,
            generators: optimal.generators().map(|g| g.to_string()).collect(),
            amplitudes: result.t_opt.clone(),
            ranking: selected,
            evaluations: result.evaluations,
            optimizer_converged: result.converged,
            term_count: h.len(),
            term_count_unpruned,
            dropped_weight: dropped,
            wall_time: started.elapsed(),
        });
        run.ansatz_history.push(optimal);
        run.final_energy = energy;
        run.final_energy_with_pt = energy + pt;

        if (energy - e_last).abs() <= cfg.energy_convergence {
            run.termination = Termination::Converged;
            break;
        }
        e_last = energy;
    }
    run.final_hamiltonian = h;
    Ok(run)
}

/// Minimizes the QCC energy from the warm start stored in `ansatz`, falling
/// back to zero amplitudes if the warm start ends above `⟨0|H|0⟩`.
fn optimize_ansatz(
    h: &PauliSum,
    ansatz: &Ansatz,
    reference: &ReferenceState,
    cfg: &OptimizationConfig,
) -> Result<OptimizationResult> {
    let objective = |t: &[f64]| qcc_energy_and_gradient(h, &ansatz.with_amplitudes(t), reference);
    let warm = minimize(objective, &ansatz.amplitudes(), cfg)?;
    let e0 = h.reference_energy(reference);
    if warm.energy <= e0 {
        return Ok(warm);
    }
    let cold = minimize(objective, &vec![0.0; ansatz.len()], cfg)?;
    Ok(OptimizationResult {
        evaluations: warm.evaluations + cold.evaluations,
        ..cold
    })
}

/// Sum of exact single-generator lowerings `D/2 − √((D/2)² + ω²)` with `ω`
/// and `D` re-evaluated against `h`.
pub fn pt_correction(
    h: &PauliSum,
    reference: &ReferenceState,
    remainder: &[RankedGenerator],
) -> Result<f64> {
    if remainder.is_empty() {
        return Ok(0.0);
    }
    let n = h.n_qubits();
    let mut by_x: HashMap<u64, Vec<(crate::pauli::PauliWord, f64)>> = HashMap::new();
    for &(w, c) in h.iter().filter(|t| !t.0.is_diagonal()) {
        by_x.entry(w.x_mask()).or_default().push((w, c));
    }
    let diag = h.diagonal_part();
    let mut total = 0.0;
    for g in remainder {
        let gen = g.generator;
        if gen.n_qubits() != n {
            return Err(Error::DimensionMismatch(n, gen.n_qubits()));
        }
        let Some(block) = by_x.get(&gen.x_mask()) else { continue };
        let (mid, ph_t) = gen.apply(reference.occupation);
        let ws: f64 = block
            .iter()
            .map(|(w, c)| c * (w.apply(mid).1 * ph_t).to_complex().im)
            .sum();
        if ws == 0.0 {
            continue;
        }
        let d = crate::qcc::compute_d(&diag, &gen, reference)?;
        total += estimate_amplitude(ws, d).1;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub entanglers: usize,
    pub cnot_count: usize,
    pub rz_count: usize,
}

/// CNOT-ladder cost of `exp(−i t P / 2)`: `2(w − 1)` CNOTs and one RZ for a
/// weight-`w` word, summed over every generator in the history.
pub fn resource_estimate(history: &[Ansatz]) -> ResourceEstimate {
    history
        .iter()
        .flat_map(|a| a.generators())
        .fold(ResourceEstimate::default(), |mut acc, g| {
            let w = g.weight() as usize;
            acc.entanglers += 1;
            acc.cnot_count += 2 * w.saturating_sub(1);
            acc.rz_count += usize::from(w > 0);
            acc
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct StateRun {
    pub label: String,
    pub s: f64,
    pub ms2: i32,
    pub energy: f64,
    pub energy_with_pt: f64,
    pub run: IqccRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapResult {
    pub singlet: StateRun,
    pub triplet: StateRun,
    pub gap_hartree: f64,
    pub gap_hartree_with_pt: f64,
    pub gap_ev: f64,
    pub gap_ev_with_pt: f64,
    pub hartree_to_ev: f64,
}

impl GapResult {
    fn from_states(singlet: StateRun, triplet: StateRun) -> Self {
        let gap = triplet.energy - singlet.energy;
        let gap_pt = triplet.energy_with_pt - singlet.energy_with_pt;
        GapResult {
            singlet,
            triplet,
            gap_hartree: gap,
            gap_hartree_with_pt: gap_pt,
            gap_ev: gap * HARTREE_TO_EV,
            gap_ev_with_pt: gap_pt * HARTREE_TO_EV,
            hartree_to_ev: HARTREE_TO_EV,
        }
    }
}

fn state_run(label: &str, s: f64, ms2: i32, run: IqccRun) -> StateRun {
    StateRun {
        label: label.into(),
        s,
        ms2,
        energy: run.final_energy,
        energy_with_pt: run.final_energy_with_pt,
        run,
    }
}

/// Runs the singlet (`s = 0`, closed-shell reference) and triplet (`s = 1`,
/// high-spin `M_S = 1` reference) calculations concurrently with the same
/// penalty strength `cfg.penalty.mu`.
pub fn singlet_triplet_gap(
    mi: &MolecularIntegrals,
    window: &CasWindow,
    cfg: &IqccConfig,
) -> Result<GapResult> {
    let cas = select_cas(mi, window)?;
    let h = jordan_wigner(&cas)?;
    let n = h.n_qubits();
    let singlet_ref = reference_state_with_spin(cas.n_electrons, 0, n)?;
    let triplet_ref = reference_state_with_spin(cas.n_electrons, 2, n)?;
    gap_from_hamiltonians(&h, &singlet_ref, &h, &triplet_ref, cfg)
}

/// Gap workflow on prepared Hamiltonians; the penalty in `cfg` is applied
/// with `s = 0` to the first and `s = 1` to the second.
pub fn gap_from_hamiltonians(
    h_singlet: &PauliSum,
    singlet_ref: &ReferenceState,
    h_triplet: &PauliSum,
    triplet_ref: &ReferenceState,
    cfg: &IqccConfig,
) -> Result<GapResult> {
    let mu = cfg.penalty.mu;
    let singlet_cfg = IqccConfig {
        penalty: SpinPenalty::new(mu, 0.0)?,
        ..cfg.clone()
    };
    let triplet_cfg = IqccConfig {
        penalty: SpinPenalty::new(mu, 1.0)?,
        ..cfg.clone()
    };
    let (s, t) = rayon::join(
        || run_iqcc(h_singlet, singlet_ref, &singlet_cfg),
        || run_iqcc(h_triplet, triplet_ref, &triplet_cfg),
    );
    let ms2 = |r: &ReferenceState| {
        const ALPHA: u64 = 0x5555_5555_5555_5555;
        (r.occupation & ALPHA).count_ones() as i32 - (r.occupation & !ALPHA).count_ones() as i32
    };
    Ok(GapResult::from_states(
        state_run("singlet", 0.0, ms2(singlet_ref), s?),
        state_run("triplet", 1.0, ms2(triplet_ref), t?),
    ))
}
