//! Generator ranking and the QCC energy functional.
//!
//! The Ansatz is `U(t) = Π_{j=1..L} exp(−i t_j T_j / 2)` with `j = 1` the
//! leftmost factor, and the energy is `E(t) = ⟨0|U† H U|0⟩`. Conjugation
//! therefore dresses `H` by `T_1` first, then `T_2`, and so on, which is the
//! order [`dress_sequence`](crate::hamiltonian::dress_sequence) uses.
//!
//! For a single generator the energy is exactly sinusoidal,
//! `E(t) = E_0 + ω_s sin t + D (1 − cos t)/2`, with
//! `ω_s = Im⟨0|H T|0⟩ = dE/dt(0)` and `D = ⟨0|T H T − H|0⟩`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    dress_unchecked, ising_decompose, spawn_sign, IsingDecomposition, PauliSum, ReferenceState,
};
use crate::pauli::PauliWord;

/// Upper bound on generators per Ansatz.
pub const MAX_ANSATZ_LEN: usize = 16;

/// Replaces the lowest-index x of an X-string with y.
pub fn derive_canonical_generator(x_string: &PauliWord) -> Result<PauliWord> {
    if !x_string.is_x_string() {
        return Err(Error::NotXString(x_string.to_string()));
    }
    let low = x_string.x_mask() & x_string.x_mask().wrapping_neg();
    PauliWord::from_masks(x_string.n_qubits(), x_string.x_mask(), low)
}

/// `(ω, ω_s)` for block `k`: `ω_s = Im⟨0|H T_k|0⟩` for the canonical
/// generator of that block, `ω = |ω_s| = |⟨0|I_k|0⟩|`.
pub fn compute_omega(
    decomp: &IsingDecomposition,
    block_index: usize,
    reference: &ReferenceState,
) -> Result<(f64, f64)> {
    let block = decomp.blocks.get(block_index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "block {block_index} out of range ({} blocks)",
            decomp.blocks.len()
        ))
    })?;
    let gen = derive_canonical_generator(&block.x_string)?;
    let s = omega_signed_for_block(&block.iz_factor, &block.x_string, &gen, reference);
    Ok((s.abs(), s))
}

/// `Im⟨0|I_k X_k T|0⟩` for a generator `T` sharing the x-mask of `X_k`.
fn omega_signed_for_block(
    iz: &PauliSum,
    x_string: &PauliWord,
    gen: &PauliWord,
    reference: &ReferenceState,
) -> f64 {
    debug_assert_eq!(x_string.x_mask(), gen.x_mask());
    // X_k T = i^k Z' with Z' diagonal
    let (zw, ph) = x_string.mul_word(gen);
    let im = ph.to_complex().im;
    im * zw.diagonal_sign(reference.occupation) * iz.reference_energy(reference)
}

/// `Im⟨0|H T|0⟩` for an arbitrary generator.
pub fn omega_signed(h: &PauliSum, gen: &PauliWord, reference: &ReferenceState) -> f64 {
    let occ = reference.occupation;
    let (mid, ph_t) = gen.apply(occ);
    h.iter()
        .filter(|(w, _)| w.x_mask() == gen.x_mask())
        .map(|(w, c)| {
            let (back, ph) = w.apply(mid);
            debug_assert_eq!(back, occ);
            c * (ph * ph_t).to_complex().im
        })
        .sum()
}

fn check_generator(n_qubits: usize, gen: &PauliWord) -> Result<()> {
    if gen.n_qubits() != n_qubits {
        return Err(Error::DimensionMismatch(n_qubits, gen.n_qubits()));
    }
    if gen.is_real() {
        return Err(Error::InvalidGenerator(gen.to_string()));
    }
    Ok(())
}

/// `D = ⟨0|T H T − H|0⟩ = −2 Σ c_P ⟨0|P|0⟩` over diagonal `P` that
/// anticommute with `T`.
pub fn compute_d(h: &PauliSum, gen: &PauliWord, reference: &ReferenceState) -> Result<f64> {
    check_generator(h.n_qubits(), gen)?;
    Ok(d_unchecked(h.iter().filter(|t| t.0.is_diagonal()), gen, reference))
}

fn d_unchecked<'a>(
    diag: impl Iterator<Item = &'a (PauliWord, f64)>,
    gen: &PauliWord,
    reference: &ReferenceState,
) -> f64 {
    let x = gen.x_mask();
    -2.0 * diag
        .filter(|(w, _)| (w.z_mask() & x).count_ones() % 2 == 1)
        .map(|(w, c)| c * w.diagonal_sign(reference.occupation))
        .sum::<f64>()
}

/// Global minimizer of `E(t) − E_0 = ω_s sin t + D (1 − cos t)/2`.
///
/// Returns `(t*, ΔE)` with `ΔE = D/2 − √((D/2)² + ω_s²) ≤ 0`. For `D > 0`
/// this is `|t*| = arcsin(2ω/√(D² + 4ω²))`. A vanishing `ω_s` returns
/// `(0, 0)`: the reference is stationary and the generator is not used.
pub fn estimate_amplitude(omega_signed: f64, d: f64) -> (f64, f64) {
    if omega_signed == 0.0 {
        return (0.0, 0.0);
    }
    let half = 0.5 * d;
    let r = half.hypot(omega_signed);
    let t = (-omega_signed).atan2(half);
    let delta = if half > 0.0 {
        -omega_signed * omega_signed / (half + r)
    } else {
        half - r
    };
    (t, delta)
}

/// How generators are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMeasure {
    /// `|t*|`, the optimal single-generator amplitude.
    #[default]
    Amplitude,
    /// `|dE/dt(0)| = ω`.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGenerator {
    #[serde(with = "word_text")]
    pub generator: PauliWord,
    #[serde(with = "word_text")]
    pub source_x_string: PauliWord,
    pub omega: f64,
    pub omega_signed: f64,
    pub d_value: f64,
    pub t_estimate: f64,
    pub delta_e: f64,
    pub importance: f64,
}

pub(crate) mod word_text {
    use super::PauliWord;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &PauliWord, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&w.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PauliWord, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn rank_order(a: &RankedGenerator, b: &RankedGenerator) -> Ordering {
    b.importance
        .total_cmp(&a.importance)
        .then_with(|| a.generator.cmp(&b.generator))
}

/// One canonical generator per Ising block, ranked by importance
/// (descending; ties by word order). The first `top_l` are selected.
pub fn rank_generators(
    h: &PauliSum,
    reference: &ReferenceState,
    top_l: usize,
) -> Result<(Vec<RankedGenerator>, Vec<RankedGenerator>)> {
    rank_generators_by(h, reference, top_l, ImportanceMeasure::Amplitude)
}

pub fn rank_generators_by(
    h: &PauliSum,
    reference: &ReferenceState,
    top_l: usize,
    measure: ImportanceMeasure,
) -> Result<(Vec<RankedGenerator>, Vec<RankedGenerator>)> {
    if top_l == 0 || top_l > MAX_ANSATZ_LEN {
        return Err(Error::AnsatzTooLong(top_l, MAX_ANSATZ_LEN));
    }
    let mut all = evaluate_blocks(h, reference, measure)?;
    all.sort_by(rank_order);
    let remainder = all.split_off(top_l.min(all.len()));
    Ok((all, remainder))
}

fn evaluate_blocks(
    h: &PauliSum,
    reference: &ReferenceState,
    measure: ImportanceMeasure,
) -> Result<Vec<RankedGenerator>> {
    let decomp = ising_decompose(h)?;
    let diag = decomp.i0.terms();
    let out = decomp
        .blocks
        .par_iter()
        .map(|block| {
            let gen = derive_canonical_generator(&block.x_string).expect("block keys are X-strings");
            let ws = omega_signed_for_block(&block.iz_factor, &block.x_string, &gen, reference);
            let d = d_unchecked(diag.iter(), &gen, reference);
            let (t, delta_e) = estimate_amplitude(ws, d);
            let importance = match measure {
                ImportanceMeasure::Amplitude => t.abs(),
                ImportanceMeasure::Gradient => ws.abs(),
            };
            RankedGenerator {
                generator: gen,
                source_x_string: block.x_string,
                omega: ws.abs(),
                omega_signed: ws,
                d_value: d,
                t_estimate: t,
                delta_e,
                importance,
            }
        })
        .collect();
    Ok(out)
}

/// Ordered list of `(generator, amplitude)` pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ansatz {
    #[serde(with = "pairs_text")]
    pub terms: Vec<(PauliWord, f64)>,
}

mod pairs_text {
    use super::PauliWord;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        generator: String,
        amplitude: f64,
    }

    pub fn serialize<S: Serializer>(v: &[(PauliWord, f64)], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|(w, t)| Entry {
                generator: w.to_string(),
                amplitude: *t,
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(PauliWord, f64)>, D::Error> {
        Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| {
                e.generator
                    .parse()
                    .map(|w| (w, e.amplitude))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

impl Ansatz {
    pub fn new(terms: Vec<(PauliWord, f64)>) -> Result<Self> {
        if terms.len() > MAX_ANSATZ_LEN {
            return Err(Error::AnsatzTooLong(terms.len(), MAX_ANSATZ_LEN));
        }
        Ok(Ansatz { terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn generators(&self) -> impl Iterator<Item = &PauliWord> {
        self.terms.iter().map(|t| &t.0)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.1).collect()
    }

    pub fn with_amplitudes(&self, t: &[f64]) -> Ansatz {
        Ansatz {
            terms: self.terms.iter().zip(t).map(|(g, &a)| (g.0, a)).collect(),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.terms.len() > MAX_ANSATZ_LEN {
            return Err(Error::AnsatzTooLong(self.terms.len(), MAX_ANSATZ_LEN));
        }
        self.terms
            .iter()
            .try_for_each(|(g, t)| {
                if !t.is_finite() {
                    return Err(Error::NonFinite(self.amplitudes()));
                }
                check_generator(n_qubits, g)
            })
    }
}

/// Row-reduced GF(2) basis used to test whether an x-mask can still be
/// cancelled by the generators that remain to be applied.
#[derive(Debug, Clone, Default)]
struct XSpan {
    rows: Vec<u64>,
}

impl XSpan {
    fn reduce(&self, mut v: u64) -> u64 {
        for &r in &self.rows {
            let pivot = 63 - r.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= r;
            }
        }
        v
    }

    fn insert(&mut self, v: u64) {
        let v = self.reduce(v);
        if v != 0 {
            self.rows.push(v);
            self.rows.sort_by_key(|r| r.leading_zeros());
        }
    }

    fn contains(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }
}

/// `spans[j]` = span of the x-masks of generators `j..L`.
fn suffix_spans(gens: &[(PauliWord, f64)]) -> Vec<XSpan> {
    let mut spans = vec![XSpan::default(); gens.len() + 1];
    for j in (0..gens.len()).rev() {
        let mut s = spans[j + 1].clone();
        s.insert(gens[j].0.x_mask());
        spans[j] = s;
    }
    spans
}

/// Terms whose x-mask lies outside the span of the remaining generators can
/// never become diagonal, so they never reach `⟨0|·|0⟩`.
fn filter_span(h: &PauliSum, span: &XSpan) -> PauliSum {
    let kept = h.iter().filter(|(w, _)| span.contains(w.x_mask())).copied();
    PauliSum::compact(h.n_qubits(), kept.collect())
}

/// `−i·P·T` summed over terms anticommuting with `T`: equals `(i/2)[T, H]`.
fn half_i_commutator(h: &PauliSum, gen: &PauliWord) -> PauliSum {
    let terms = h
        .iter()
        .filter(|(w, _)| !w.commutes_with(gen))
        .map(|(w, c)| {
            let (q, ph) = w.mul_word(gen);
            (q, c * spawn_sign(ph))
        })
        .collect();
    PauliSum::compact(h.n_qubits(), terms)
}

/// `⟨0|U† H U|0⟩` by exact symbolic conjugation.
pub fn qcc_energy(h: &PauliSum, ansatz: &Ansatz, reference: &ReferenceState) -> Result<f64> {
    ansatz.validate(h.n_qubits())?;
    let gens = &ansatz.terms;
    let spans = suffix_spans(gens);
    let mut cur = filter_span(h, &spans[0]);
    for (j, (g, t)) in gens.iter().enumerate() {
        cur = filter_span(&dress_unchecked(&cur, g, *t), &spans[j + 1]);
    }
    Ok(cur.reference_energy(reference))
}

/// Energy and `∂E/∂t_j`, the latter from
/// `⟨0| U_{>j}† (i/2)[T_j, H_j] U_{>j} |0⟩` with `H_j` dressed through `T_j`.
pub fn qcc_energy_and_gradient(
    h: &PauliSum,
    ansatz: &Ansatz,
    reference: &ReferenceState,
) -> Result<(f64, Vec<f64>)> {
    ansatz.validate(h.n_qubits())?;
    let gens = &ansatz.terms;
    let spans = suffix_spans(gens);
    let mut grad = vec![0.0; gens.len()];
    let mut cur = filter_span(h, &spans[0]);
    for (j, (g, t)) in gens.iter().enumerate() {
        cur = dress_unchecked(&cur, g, *t);
        let mut comm = filter_span(&half_i_commutator(&cur, g), &spans[j + 1]);
        for (gk, tk) in &gens[j + 1..] {
            comm = dress_unchecked(&comm, gk, *tk);
        }
        grad[j] = comm.reference_energy(reference);
        cur = filter_span(&cur, &spans[j + 1]);
    }
    Ok((cur.reference_energy(reference), grad))
}

pub fn qcc_gradient(h: &PauliSum, ansatz: &Ansatz, reference: &ReferenceState) -> Result<Vec<f64>> {
    qcc_energy_and_gradient(h, ansatz, reference).map(|r| r.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::dress_sequence;

    fn w(n: usize, s: &str) -> PauliWord {
        PauliWord::parse(n, s).unwrap()
    }

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::from_terms(n, terms.iter().map(|&(s, c)| (w(n, s), c))).unwrap()
    }

    #[test]
    fn canonical_generators() {
        assert_eq!(derive_canonical_generator(&w(1, "X0")).unwrap(), w(1, "Y0"));
        assert_eq!(
            derive_canonical_generator(&w(8, "X2 X5 X7")).unwrap(),
            w(8, "Y2 X5 X7")
        );
        assert_eq!(derive_canonical_generator(&w(4, "X3")).unwrap(), w(4, "Y3"));
        assert!(derive_canonical_generator(&w(2, "X0 Z1")).is_err());
        assert_eq!(derive_canonical_generator(&w(3, "X1 X2")).unwrap().y_count(), 1);
    }

    #[test]
    fn omega_trivial_blocks() {
        let r = ReferenceState::new(1, 1).unwrap();
        let d = ising_decompose(&sum(1, &[("X0", -0.4)])).unwrap();
        let (om, s) = compute_omega(&d, 0, &r).unwrap();
        assert_eq!(om, 0.4);
        assert_eq!(s.abs(), 0.4);
        // sign agrees with the generic matrix-element route
        assert_eq!(s, omega_signed(&sum(1, &[("X0", -0.4)]), &w(1, "Y0"), &r));
        assert!(compute_omega(&d, 1, &r).is_err());
    }

    #[test]
    fn d_examples() {
        let r = ReferenceState::new(2, 0b01).unwrap();
        assert_eq!(compute_d(&sum(2, &[("Z1", 0.3)]), &w(2, "Y0"), &r).unwrap(), 0.0);
        let c = 0.7;
        let d = compute_d(&sum(2, &[("Z0", c)]), &w(2, "Y0"), &r).unwrap();
        assert_eq!(d, 2.0 * c);
        assert!(compute_d(&sum(2, &[("Z0", c)]), &w(2, "X0"), &r).is_err());
    }

    #[test]
    fn amplitude_edge_cases() {
        assert_eq!(estimate_amplitude(0.0, 3.0), (0.0, 0.0));
        assert_eq!(estimate_amplitude(0.0, -3.0), (0.0, 0.0));
        let (t, de) = estimate_amplitude(0.2, 0.0);
        assert!((t.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((de + 0.2).abs() < 1e-15);
        // D > 0 reduces to the arcsin form
        let (om, d) = (0.05, 1.3);
        let (t, _) = estimate_amplitude(om, d);
        assert!((t.abs() - (2.0 * om / (d * d + 4.0 * om * om).sqrt()).asin()).abs() < 1e-15);
    }

    #[test]
    fn ranking_edge_cases() {
        let r = ReferenceState::new(2, 0b01).unwrap();
        let (s, rest) = rank_generators(&sum(2, &[("Z0", 1.0), ("Z0 Z1", 0.2)]), &r, 4).unwrap();
        assert!(s.is_empty() && rest.is_empty());
        let (s, rest) = rank_generators(&sum(2, &[("Z0", 1.0), ("X0 X1", 0.2)]), &r, 4).unwrap();
        assert_eq!(s.len(), 1);
        assert!(rest.is_empty());
        assert_eq!(s[0].generator, w(2, "Y0 X1"));
        assert!(rank_generators(&sum(2, &[("Z0", 1.0)]), &r, 17).is_err());
        assert!(rank_generators(&sum(2, &[("Z0", 1.0)]), &r, 0).is_err());
    }

    #[test]
    fn energy_trivial_and_closed_form() {
        let h = sum(2, &[("Z0", 0.5), ("Z1", -0.3), ("X0 X1", 0.2), ("Y0 Y1", 0.1), ("Z0 Z1", 0.05)]);
        let r = ReferenceState::new(2, 0b01).unwrap();
        let g = w(2, "Y0 X1");
        let zero = Ansatz::new(vec![(g, 0.0)]).unwrap();
        assert_eq!(qcc_energy(&h, &zero, &r).unwrap(), h.reference_energy(&r));

        let ws = omega_signed(&h, &g, &r);
        let d = compute_d(&h, &g, &r).unwrap();
        for t in [-2.0, -0.3, 0.4, 1.7] {
            let e = qcc_energy(&h, &Ansatz::new(vec![(g, t)]).unwrap(), &r).unwrap();
            let closed = h.reference_energy(&r) + ws * t.sin() + d * (1.0 - t.cos()) / 2.0;
            assert!((e - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_equals_dressed_reference_energy() {
        let h = sum(3, &[("Z0", 0.5), ("X0 X1 Z2", 0.2), ("Y0 Y2", -0.15), ("X1 X2", 0.07)]);
        let r = ReferenceState::new(3, 0b011).unwrap();
        let gens = vec![(w(3, "Y0 X1"), 0.3), (w(3, "X1 Y2"), -0.8), (w(3, "Y0 X2"), 1.1)];
        let e = qcc_energy(&h, &Ansatz::new(gens.clone()).unwrap(), &r).unwrap();
        let full = dress_sequence(&h, &gens).unwrap().reference_energy(&r);
        assert!((e - full).abs() < 1e-13);
    }

    #[test]
    fn commuting_generator_has_zero_gradient() {
        let h = sum(2, &[("Z0", 0.5), ("X0 X1", 0.2)]);
        let r = ReferenceState::new(2, 0b01).unwrap();
        let g = w(2, "Z0 Y1");
        assert!(h.iter().all(|(p, _)| p.commutes_with(&g)));
        for t in [0.0, 0.5, 2.0] {
            let grad = qcc_gradient(&h, &Ansatz::new(vec![(g, t)]).unwrap(), &r).unwrap();
            assert_eq!(grad[0], 0.0);
        }
    }

    #[test]
    fn long_ansatz_rejected() {
        let g = w(1, "Y0");
        assert!(Ansatz::new(vec![(g, 0.1); 17]).is_err());
        let bad = Ansatz { terms: vec![(g, 0.1); 17] };
        assert!(matches!(
            qcc_energy(&PauliSum::constant(1, 1.0), &bad, &ReferenceState::new(1, 0).unwrap()),
            Err(Error::AnsatzTooLong(17, 16))
        ));
    }
}
