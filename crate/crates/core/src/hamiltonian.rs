//! Real-coefficient Pauli sums and the operations the iQCC loop performs on
//! them: Ising decomposition, reference-state expectation values, unitary
//! dressing by a single Pauli generator, and pruning of negligible terms.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::de::Deserializer;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliWord, Phase, MAX_QUBITS};

/// Terms below this count are dressed sequentially.
const PAR_THRESHOLD: usize = 4096;

/// Linear combination of canonical Pauli words with real coefficients.
///
/// Terms are kept sorted by [`WordOrder`](crate::pauli::WordOrder), unique,
/// and with no exactly-zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(PauliWord, f64)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn constant(n_qubits: usize, value: f64) -> Self {
        Self::from_sorted_unchecked(n_qubits, vec![(PauliWord::identity(n_qubits), value)])
    }

    /// Collects terms, summing coefficients of repeated words.
    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliWord, f64)>,
    {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(n_qubits, MAX_QUBITS));
        }
        let terms: Vec<_> = terms.into_iter().collect();
        for (w, _) in &terms {
            if w.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch(n_qubits, w.n_qubits()));
            }
        }
        Ok(Self::compact(n_qubits, terms))
    }

    /// Stable-sorts contributions and sums duplicates in their input order.
    pub(crate) fn compact(n_qubits: usize, mut terms: Vec<(PauliWord, f64)>) -> Self {
        if terms.len() > PAR_THRESHOLD {
            terms.par_sort_by(|a, b| a.0.cmp(&b.0));
        } else {
            terms.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let mut out: Vec<(PauliWord, f64)> = Vec::with_capacity(terms.len());
        for (w, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == w => last.1 += c,
                _ => out.push((w, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        PauliSum { n_qubits, terms: out }
    }

    fn from_sorted_unchecked(n_qubits: usize, mut terms: Vec<(PauliWord, f64)>) -> Self {
        terms.retain(|t| t.1 != 0.0);
        debug_assert!(terms.windows(2).all(|p| p[0].0 < p[1].0));
        PauliSum { n_qubits, terms }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(PauliWord, f64)] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = &(PauliWord, f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &PauliWord) -> f64 {
        self.terms
            .binary_search_by(|t| t.0.cmp(word))
            .map_or(0.0, |i| self.terms[i].1)
    }

    /// Sum of absolute coefficients; bounds the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs()).sum()
    }

    /// Every word has an even number of y factors.
    pub fn is_real_hermitian(&self) -> bool {
        self.terms.iter().all(|(w, _)| w.is_real())
    }

    pub fn check_hermitian(&self) -> Result<()> {
        match self.terms.iter().find(|(w, _)| !w.is_real()) {
            Some((w, _)) => Err(Error::NotHermitian(w.to_string())),
            None => Ok(()),
        }
    }

    fn check_same(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            Err(Error::DimensionMismatch(self.n_qubits, other.n_qubits))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.terms.iter().peekable(), other.terms.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                    Ordering::Less => out.push(*a.next().unwrap()),
                    Ordering::Greater => out.push(*b.next().unwrap()),
                    Ordering::Equal => {
                        out.push((x.0, x.1 + y.1));
                        a.next();
                        b.next();
                    }
                },
                (Some(_), None) => out.push(*a.next().unwrap()),
                (None, Some(_)) => out.push(*b.next().unwrap()),
                (None, None) => break,
            }
        }
        Ok(Self::from_sorted_unchecked(self.n_qubits, out))
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> PauliSum {
        let terms = self.terms.iter().map(|&(w, v)| (w, v * c)).collect();
        Self::from_sorted_unchecked(self.n_qubits, terms)
    }

    /// `⟨0|H|0⟩`: off-diagonal words contribute nothing.
    pub fn reference_energy(&self, reference: &ReferenceState) -> f64 {
        self.terms
            .iter()
            .filter(|(w, _)| w.is_diagonal())
            .map(|(w, c)| c * w.diagonal_sign(reference.occupation))
            .sum()
    }

    /// Splits off the z-only words.
    pub fn diagonal_part(&self) -> PauliSum {
        let terms = self.terms.iter().filter(|t| t.0.is_diagonal()).copied().collect();
        Self::from_sorted_unchecked(self.n_qubits, terms)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c:.6}·[{w}]")?;
        }
        Ok(())
    }
}

pub fn sum_add(a: &PauliSum, b: &PauliSum) -> Result<PauliSum> {
    a.add(b)
}

pub fn sum_scale(a: &PauliSum, c: f64) -> PauliSum {
    a.scale(c)
}

/// Fixed qubit product state; bit `j` set means qubit `j` is spin-down
/// (an occupied spin-orbital).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReferenceState {
    pub occupation: u64,
    pub n_qubits: usize,
}

impl ReferenceState {
    pub fn new(n_qubits: usize, occupation: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(n_qubits, MAX_QUBITS));
        }
        if n_qubits < 64 && occupation >> n_qubits != 0 {
            return Err(Error::QubitOutOfRange {
                index: 63 - occupation.leading_zeros() as usize,
                n_qubits,
            });
        }
        Ok(ReferenceState {
            occupation,
            n_qubits,
        })
    }

    pub fn n_electrons(&self) -> u32 {
        self.occupation.count_ones()
    }

    pub fn is_occupied(&self, qubit: usize) -> bool {
        self.occupation >> qubit & 1 == 1
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.n_qubits)
            .map(|q| if self.is_occupied(q) { '1' } else { '0' })
            .collect()
    }
}

/// Σ_m c_m · Π_j (−1)^{occ_j} over z-only words.
pub fn diagonal_expectation(iz: &PauliSum, reference: &ReferenceState) -> Result<f64> {
    if let Some((w, _)) = iz.terms.iter().find(|(w, _)| !w.is_diagonal()) {
        return Err(Error::NotDiagonal(w.to_string()));
    }
    Ok(iz.reference_energy(reference))
}

/// One X-string and its z-only prefactor, `I_k(z) · X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingBlock {
    pub x_string: PauliWord,
    pub iz_factor: PauliSum,
}

/// `H = I_0(z) + Σ_k I_k(z) · X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingDecomposition {
    pub i0: PauliSum,
    pub blocks: Vec<IsingBlock>,
}

impl IsingDecomposition {
    pub fn recompose(&self) -> PauliSum {
        let n = self.i0.n_qubits();
        let mut terms: Vec<(PauliWord, f64)> = self.i0.terms().to_vec();
        for block in &self.blocks {
            for (zw, c) in block.iz_factor.iter() {
                let (w, ph) = zw.mul_word(&block.x_string);
                let sign = ph.real_sign().expect("real recomposition");
                terms.push((w, c * sign));
            }
        }
        PauliSum::compact(n, terms)
    }
}

pub fn ising_decompose(h: &PauliSum) -> Result<IsingDecomposition> {
    h.check_hermitian()?;
    let n = h.n_qubits();
    let mut by_x: Vec<(u64, PauliWord, f64)> = h
        .terms
        .iter()
        .map(|&(w, c)| {
            // i^y X^x Z^z = (-i)^y Z^z X^x; y is even here.
            let sign = if (w.y_count() / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let zw = PauliWord::from_masks(n, 0, w.z_mask()).expect("same register");
            (w.x_mask(), zw, c * sign)
        })
        .collect();
    let x_key = |x: u64| PauliWord::from_masks(n, x, 0).expect("same register");
    by_x.sort_by(|a, b| x_key(a.0).cmp(&x_key(b.0)));

    let mut i0 = PauliSum::zero(n);
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < by_x.len() {
        let x = by_x[start].0;
        let end = start + by_x[start..].iter().take_while(|t| t.0 == x).count();
        let iz = PauliSum::compact(n, by_x[start..end].iter().map(|t| (t.1, t.2)).collect());
        if x == 0 {
            i0 = iz;
        } else if !iz.is_empty() {
            blocks.push(IsingBlock {
                x_string: x_key(x),
                iz_factor: iz,
            });
        }
        start = end;
    }
    Ok(IsingDecomposition { i0, blocks })
}

fn check_generator(h: &PauliSum, gen: &PauliWord) -> Result<()> {
    if gen.n_qubits() != h.n_qubits() {
        return Err(Error::DimensionMismatch(h.n_qubits(), gen.n_qubits()));
    }
    if gen.is_real() {
        return Err(Error::InvalidGenerator(gen.to_string()));
    }
    Ok(())
}

/// Real coefficient of `-i·P·T` for anticommuting `P`, `T` with even/odd y.
#[inline]
pub(crate) fn spawn_sign(ph: Phase) -> f64 {
    // P·T = i^k Q with k odd; -i · i^k = i^{k+3}
    (ph * Phase::MINUS_I).real_sign().expect("anticommuting product is imaginary")
}

/// Conjugation `e^{itT/2} H e^{-itT/2}` by one imaginary Pauli generator.
///
/// Words commuting with `T` are untouched. An anticommuting word `P` becomes
/// `cos t · P − i sin t · P T`, and `−i P T` is a real multiple of a
/// canonical word.
pub fn dress(h: &PauliSum, gen: &PauliWord, t: f64) -> Result<PauliSum> {
    check_generator(h, gen)?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("amplitude {t}")));
    }
    Ok(dress_unchecked(h, gen, t))
}

pub(crate) fn dress_unchecked(h: &PauliSum, gen: &PauliWord, t: f64) -> PauliSum {
    if t == 0.0 {
        return h.clone();
    }
    let (s, c) = t.sin_cos();
    let step = |&(w, v): &(PauliWord, f64)| -> ((PauliWord, f64), Option<(PauliWord, f64)>) {
        if w.commutes_with(gen) {
            ((w, v), None)
        } else {
            let (q, ph) = w.mul_word(gen);
            ((w, v * c), Some((q, v * s * spawn_sign(ph))))
        }
    };
    let (kept, spawned): (Vec<_>, Vec<_>) = if h.len() > PAR_THRESHOLD {
        h.terms.par_iter().map(step).unzip()
    } else {
        h.terms.iter().map(step).unzip()
    };
    let spawned = PauliSum::compact(h.n_qubits, spawned.into_iter().flatten().collect());
    let mut out = Vec::with_capacity(kept.len() + spawned.len());
    let (mut a, mut b) = (kept.into_iter().peekable(), spawned.terms.into_iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                Ordering::Less => out.push(a.next().unwrap()),
                Ordering::Greater => out.push(b.next().unwrap()),
                Ordering::Equal => {
                    out.push((x.0, x.1 + y.1));
                    a.next();
                    b.next();
                }
            },
            (Some(_), None) => out.push(a.next().unwrap()),
            (None, Some(_)) => out.push(b.next().unwrap()),
            (None, None) => break,
        }
    }
    PauliSum::from_sorted_unchecked(h.n_qubits, out)
}

/// Applies [`dress`] for each pair in order; `U = Π_j e^{-i t_j T_j / 2}`
/// with `j = 1` leftmost, so `U† H U` conjugates by `T_1` first.
pub fn dress_sequence(h: &PauliSum, gens: &[(PauliWord, f64)]) -> Result<PauliSum> {
    for (g, t) in gens {
        check_generator(h, g)?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("amplitude {t}")));
        }
    }
    let mut cur = h.clone();
    for (g, t) in gens {
        cur = dress_unchecked(&cur, g, *t);
    }
    Ok(cur)
}

/// Drops every term with `|c| < threshold`; returns the summed `|c|` dropped.
pub fn prune(h: &PauliSum, threshold: f64) -> (PauliSum, f64) {
    if threshold <= 0.0 {
        return (h.clone(), 0.0);
    }
    let mut dropped = 0.0;
    let mut kept = Vec::with_capacity(h.len());
    for &(w, c) in &h.terms {
        if c.abs() < threshold {
            dropped += c.abs();
        } else {
            kept.push((w, c));
        }
    }
    (PauliSum::from_sorted_unchecked(h.n_qubits, kept), dropped)
}

/// Coefficient written with 17 significant digits.
struct Coeff(f64);

impl Serialize for Coeff {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = serde_json::value::RawValue::from_string(format!("{:.16e}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct TermOut {
    word: String,
    coeff: Coeff,
}

#[derive(Deserialize)]
struct TermIn {
    word: String,
    coeff: f64,
}

#[derive(Deserialize)]
struct SumIn {
    n_qubits: usize,
    terms: Vec<TermIn>,
}

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermOut> = self
            .terms
            .iter()
            .map(|(w, c)| TermOut {
                word: w.to_string(),
                coeff: Coeff(*c),
            })
            .collect();
        let mut st = s.serialize_struct("PauliSum", 2)?;
        st.serialize_field("n_qubits", &self.n_qubits)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SumIn::deserialize(d)?;
        let mut terms = Vec::with_capacity(raw.terms.len());
        for t in raw.terms {
            let w = PauliWord::parse(raw.n_qubits, &t.word).map_err(serde::de::Error::custom)?;
            terms.push((w, t.coeff));
        }
        PauliSum::from_terms(raw.n_qubits, terms).map_err(serde::de::Error::custom)
    }
}

impl PauliSum {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(n: usize, s: &str) -> PauliWord {
        PauliWord::parse(n, s).unwrap()
    }

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::from_terms(n, terms.iter().map(|&(s, c)| (w(n, s), c))).unwrap()
    }

    #[test]
    fn add_and_cancel() {
        let a = sum(2, &[("Z0", 1.0), ("X0 X1", 0.25)]);
        assert!(a.add(&a.scale(-1.0)).unwrap().is_empty());
        let b = sum(2, &[("Z0", 0.5)]);
        let s = sum(2, &[("Z0", 1.0)]).add(&b).unwrap();
        assert_eq!(s, sum(2, &[("Z0", 1.5)]));
        assert!(a.add(&PauliSum::zero(3)).is_err());
    }

    #[test]
    fn from_terms_merges_duplicates() {
        let s = sum(1, &[("Z0", 1.0), ("Z0", -1.0), ("X0", 2.0)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s.coeff(&w(1, "X0")), 2.0);
    }

    #[test]
    fn ising_simple_cases() {
        let d = ising_decompose(&sum(2, &[("Z0 Z1", 0.3)])).unwrap();
        assert_eq!(d.i0, sum(2, &[("Z0 Z1", 0.3)]));
        assert!(d.blocks.is_empty());

        let d = ising_decompose(&sum(1, &[("X0", 0.7)])).unwrap();
        assert!(d.i0.is_empty());
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].x_string, w(1, "X0"));
        assert_eq!(d.blocks[0].iz_factor, PauliSum::constant(1, 0.7));
    }

    #[test]
    fn ising_tracks_y_signs() {
        // Y0 Y1 = (-i)^2 Z0 Z1 X0 X1 = -Z0Z1·X0X1
        let h = sum(2, &[("Y0 Y1", 0.5), ("X0 X1", 0.25)]);
        let d = ising_decompose(&h).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].iz_factor.coeff(&w(2, "Z0 Z1")), -0.5);
        assert_eq!(d.recompose(), h);
    }

    #[test]
    fn ising_rejects_odd_y() {
        let e = ising_decompose(&sum(2, &[("Y0 X1", 1.0)])).unwrap_err();
        assert!(matches!(e, Error::NotHermitian(_)));
    }

    #[test]
    fn diagonal_expectation_signs() {
        let r = ReferenceState::new(2, 0b01).unwrap();
        assert_eq!(diagonal_expectation(&sum(2, &[("Z0", 1.0)]), &r).unwrap(), -1.0);
        assert_eq!(diagonal_expectation(&PauliSum::constant(2, 3.5), &r).unwrap(), 3.5);
        assert!(diagonal_expectation(&sum(2, &[("X0", 1.0)]), &r).is_err());
        assert_eq!(sum(2, &[("X0 X1", 1.0)]).reference_energy(&r), 0.0);
    }

    #[test]
    fn dress_trivial_cases() {
        let h = sum(2, &[("Z0", 0.3), ("X0 X1", -0.2)]);
        let far = w(2, "Y1");
        let h_diag = sum(2, &[("Z0", 0.3)]);
        assert_eq!(dress(&h_diag, &far, 0.7).unwrap(), h_diag);
        assert_eq!(dress(&h, &w(2, "Y0 X1"), 0.0).unwrap(), h);
        assert!(matches!(
            dress(&h, &w(2, "X0"), 0.1),
            Err(Error::InvalidGenerator(_))
        ));
        assert!(dress(&h, &far, f64::NAN).is_err());
    }

    #[test]
    fn dress_single_qubit_rotation() {
        // e^{itY/2} Z e^{-itY/2} = cos t Z + sin t X for Y = i·X·Z
        let t = 0.4;
        let h = sum(1, &[("Z0", 1.0)]);
        let d = dress(&h, &w(1, "Y0"), t).unwrap();
        assert!((d.coeff(&w(1, "Z0")) - t.cos()).abs() < 1e-15);
        assert!((d.coeff(&w(1, "X0")).abs() - t.sin()).abs() < 1e-15);
        assert!(d.len() <= 2 * h.len());
    }

    #[test]
    fn prune_reports_dropped_weight() {
        let h = sum(2, &[("Z0", 1.0), ("Z1", -1e-12), ("X0 X1", 3e-11)]);
        let (p, dropped) = prune(&h, 0.0);
        assert_eq!((p, dropped), (h.clone(), 0.0));
        let (p, dropped) = prune(&h, 1e-10);
        assert_eq!(p, sum(2, &[("Z0", 1.0)]));
        assert!((dropped - 3.1e-11).abs() < 1e-24);
        let (p, dropped) = prune(&h, 1e-13);
        assert_eq!((p, dropped), (h, 0.0));
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let h = sum(
            4,
            &[("I", -0.1), ("X0 Z3", -0.0123), ("Y0 Y1", std::f64::consts::PI / 7.0)],
        );
        let text = h.to_json();
        assert!(text.contains("\"word\": \"X0 Z3\""));
        assert!(text.contains("-1.2300000000000000e-2"));
        assert_eq!(PauliSum::from_json(&text).unwrap(), h);
        assert!(PauliSum::from_json("{\"n_qubits\": 1, \"terms\": [{\"word\": \"X3\", \"coeff\": 1}]}").is_err());
    }
}
