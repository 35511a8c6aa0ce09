//! From molecular integrals to qubit operators.
//!
//! Spin-orbitals are interleaved: spatial orbital `p` maps to qubit `2p`
//! (α) and qubit `2p + 1` (β). Occupied means spin-down, z-eigenvalue −1,
//! so the annihilator is `a_p = Z_0 ⋯ Z_{p−1} (X_p + iY_p)/2` and the number
//! operator is `(1 − Z_p)/2`. Every sign below follows from that choice.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{PauliSum, ReferenceState};
use crate::pauli::PauliWord;

/// Largest active space the 64-bit word masks can hold.
pub const MAX_SPATIAL_ORBITALS: usize = 32;

/// One- and two-electron integrals over spatial orbitals, chemists' order
/// `g[p,q,r,s] = (pq|rs)`, fully expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    pub core_energy: f64,
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    h1: Vec<f64>,
    g2: Vec<f64>,
}

impl MolecularIntegrals {
    pub fn zeros(n_spatial: usize, n_electrons: usize, ms2: i32) -> Self {
        MolecularIntegrals {
            core_energy: 0.0,
            n_spatial,
            n_electrons,
            ms2,
            h1: vec![0.0; n_spatial * n_spatial],
            g2: vec![0.0; n_spatial.pow(4)],
        }
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    #[inline]
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.g2[((p * n + q) * n + r) * n + s]
    }

    pub fn set_h(&mut self, p: usize, q: usize, v: f64) {
        let n = self.n_spatial;
        self.h1[p * n + q] = v;
        self.h1[q * n + p] = v;
    }

    /// Stores `(pq|rs)` and its seven permutational partners.
    pub fn set_g(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let n = self.n_spatial;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.g2[((a * n + b) * n + c) * n + d] = v;
        }
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n_spatial;
        (0..n).all(|p| (0..n).all(|q| (self.h(p, q) - self.h(q, p)).abs() <= tol))
    }
}

/// Parses the FCIDUMP text format: a `&FCI NORB=.., NELEC=.., MS2=..`
/// namelist terminated by `&END` or `/`, then `value i j k l` records
/// (1-based, chemists' order; zero indices mark one-electron and core
/// records).
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut started = false;
    let mut header_end = 0;
    for (no, line) in lines.by_ref() {
        let trimmed = line.trim();
        if !started {
            if trimmed.is_empty() {
                continue;
            }
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: "expected &FCI namelist header".into(),
                });
            }
            started = true;
            header.push_str(&trimmed[4..]);
        } else {
            header.push(' ');
            header.push_str(trimmed);
        }
        let upper = header.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END").or_else(|| upper.rfind('/')) {
            header.truncate(pos);
            header_end = no + 1;
            break;
        }
    }
    if header_end == 0 {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: "unterminated or missing &FCI header".into(),
        });
    }
    let fields = parse_namelist(&header);
    let field = |key: &str| -> Result<i64> {
        let v = fields.get(key).and_then(|v| v.first()).ok_or_else(|| Error::Parse {
            line: header_end,
            msg: format!("header is missing {key}"),
        })?;
        v.parse::<i64>().map_err(|_| Error::Parse {
            line: header_end,
            msg: format!("{key} = {v:?} is not an integer"),
        })
    };
    let norb = field("NORB")?;
    let nelec = field("NELEC")?;
    let ms2 = if fields.contains_key("MS2") { field("MS2")? } else { 0 };
    if norb < 0 || nelec < 0 || nelec > 2 * norb {
        return Err(Error::Parse {
            line: header_end,
            msg: format!("inconsistent NORB={norb}, NELEC={nelec}"),
        });
    }
    let n = norb as usize;
    let mut mi = MolecularIntegrals::zeros(n, nelec as usize, ms2 as i32);
    let mut seen: HashMap<[usize; 4], (f64, usize)> = HashMap::new();

    for (no, line) in lines {
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(err(format!("expected `value i j k l`, got {trimmed:?}")));
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| err(format!("bad value {:?}", toks[0])))?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            let v: i64 = tok.parse().map_err(|_| err(format!("bad index {tok:?}")))?;
            if v < 0 || v > norb {
                return Err(err(format!("index {v} out of range 0..={norb}")));
            }
            *slot = v as usize;
        }
        let [i, j, k, l] = idx;
        let key = match (i, j, k, l) {
            (0, 0, 0, 0) => [0; 4],
            (_, 0, 0, 0) => continue, // orbital energy
            (a, b, 0, 0) if a > 0 && b > 0 => [a.max(b), a.min(b), 0, 0],
            (a, b, c, d) if a > 0 && b > 0 && c > 0 && d > 0 => {
                let ab = (a.max(b), a.min(b));
                let cd = (c.max(d), c.min(d));
                let (x, y) = if ab >= cd { (ab, cd) } else { (cd, ab) };
                [x.0, x.1, y.0, y.1]
            }
            _ => return Err(err(format!("unrecognized index pattern {i} {j} {k} {l}"))),
        };
        if let Some(&(prev, prev_line)) = seen.get(&key) {
            if (prev - value).abs() > 1e-12 * prev.abs().max(1.0) {
                return Err(err(format!(
                    "conflicting duplicate of line {prev_line} ({prev} vs {value})"
                )));
            }
            continue;
        }
        seen.insert(key, (value, line_no));
        match key {
            [0, 0, 0, 0] => mi.core_energy = value,
            [a, b, 0, 0] => mi.set_h(a - 1, b - 1, value),
            [a, b, c, d] => mi.set_g(a - 1, b - 1, c - 1, d - 1, value),
        }
    }
    Ok(mi)
}

fn parse_namelist(body: &str) -> HashMap<String, Vec<String>> {
    let spaced = body.replace('=', " = ").replace(',', " ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let mut out: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    let mut i = 0;
    while i < toks.len() {
        if i + 1 < toks.len() && toks[i + 1] == "=" {
            let key = toks[i].to_ascii_uppercase();
            out.entry(key.clone()).or_default();
            current = Some(key);
            i += 2;
            continue;
        }
        if let Some(k) = &current {
            out.get_mut(k).expect("inserted").push(toks[i].to_string());
        }
        i += 1;
    }
    out
}

/// Partition of spatial orbitals into frozen (doubly occupied, folded into
/// the core), active, and discarded virtual orbitals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CasWindow {
    pub n_occ_active: usize,
    pub n_virt_active: usize,
    pub frozen_occupied: Vec<usize>,
    pub active: Vec<usize>,
    pub discarded_virtual: Vec<usize>,
}

impl CasWindow {
    /// Keeps the top `n_occ_active` occupied and lowest `n_virt_active`
    /// virtual orbitals around the Fermi level of `mi`.
    pub fn around_fermi_level(
        mi: &MolecularIntegrals,
        n_occ_active: usize,
        n_virt_active: usize,
    ) -> Result<Self> {
        let (n_docc, n_occ) = occupied_counts(mi.n_electrons, mi.ms2)?;
        if n_occ > mi.n_spatial {
            return Err(Error::InvalidWindow("more occupied orbitals than orbitals".into()));
        }
        if n_occ_active > n_occ {
            return Err(Error::InvalidWindow(format!(
                "{n_occ_active} active occupied orbitals requested, only {n_occ} occupied"
            )));
        }
        let n_virt = mi.n_spatial - n_occ;
        if n_virt_active > n_virt {
            return Err(Error::InvalidWindow(format!(
                "{n_virt_active} active virtual orbitals requested, only {n_virt} virtual"
            )));
        }
        let n_frozen = n_occ - n_occ_active;
        if n_frozen > n_docc {
            return Err(Error::InvalidWindow(
                "window would freeze a singly occupied orbital".into(),
            ));
        }
        Ok(CasWindow {
            n_occ_active,
            n_virt_active,
            frozen_occupied: (0..n_frozen).collect(),
            active: (n_frozen..n_occ + n_virt_active).collect(),
            discarded_virtual: (n_occ + n_virt_active..mi.n_spatial).collect(),
        })
    }

    /// The window that keeps every orbital active.
    pub fn full(mi: &MolecularIntegrals) -> Result<Self> {
        let (_, n_occ) = occupied_counts(mi.n_electrons, mi.ms2)?;
        Self::around_fermi_level(mi, n_occ.min(mi.n_spatial), mi.n_spatial.saturating_sub(n_occ))
    }

    fn validate(&self, n_spatial: usize) -> Result<()> {
        let mut seen = vec![false; n_spatial];
        for &p in self
            .frozen_occupied
            .iter()
            .chain(&self.active)
            .chain(&self.discarded_virtual)
        {
            if p >= n_spatial {
                return Err(Error::InvalidWindow(format!("orbital {p} out of range")));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidWindow(format!("orbital {p} listed twice")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidWindow("window does not cover every orbital".into()));
        }
        if self.active.len() != self.n_occ_active + self.n_virt_active {
            return Err(Error::InvalidWindow("active count disagrees with window sizes".into()));
        }
        Ok(())
    }
}

/// `(doubly occupied, occupied)` spatial-orbital counts for a high-spin
/// determinant.
fn occupied_counts(n_electrons: usize, ms2: i32) -> Result<(usize, usize)> {
    let ms2 = ms2.unsigned_abs() as usize;
    if ms2 > n_electrons || (n_electrons - ms2) % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "MS2 = {ms2} incompatible with {n_electrons} electrons"
        )));
    }
    let n_docc = (n_electrons - ms2) / 2;
    Ok((n_docc, n_docc + ms2))
}

/// Restricts integrals to the active orbitals, folding the frozen core into
/// the constant and one-electron terms:
///
/// ```text
/// E_core' = E_core + Σ_i 2 h_ii + Σ_ij (2 (ii|jj) − (ij|ji))
/// h'_pq   = h_pq   + Σ_i (2 (pq|ii) − (pi|iq))
/// ```
///
/// Freezing every occupied orbital with no active virtuals yields a
/// zero-orbital result whose `core_energy` is the closed-shell mean-field
/// energy.
pub fn select_cas(mi: &MolecularIntegrals, window: &CasWindow) -> Result<MolecularIntegrals> {
    window.validate(mi.n_spatial)?;
    let frozen = &window.frozen_occupied;
    let active = &window.active;
    if 2 * frozen.len() > mi.n_electrons {
        return Err(Error::InvalidWindow("more frozen orbitals than electron pairs".into()));
    }
    let n_act_e = mi.n_electrons - 2 * frozen.len();
    if n_act_e > 2 * active.len() {
        return Err(Error::InvalidWindow("active space cannot hold the active electrons".into()));
    }

    let mut core = mi.core_energy;
    for &i in frozen {
        core += 2.0 * mi.h(i, i);
        for &j in frozen {
            core += 2.0 * mi.g(i, i, j, j) - mi.g(i, j, j, i);
        }
    }
    let na = active.len();
    let mut out = MolecularIntegrals::zeros(na, n_act_e, mi.ms2);
    out.core_energy = core;
    for (a, &p) in active.iter().enumerate() {
        for (b, &q) in active.iter().enumerate() {
            let mut v = mi.h(p, q);
            for &i in frozen {
                v += 2.0 * mi.g(p, q, i, i) - mi.g(p, i, i, q);
            }
            out.h1[a * na + b] = v;
            for (c, &r) in active.iter().enumerate() {
                for (d, &s) in active.iter().enumerate() {
                    out.g2[((a * na + b) * na + c) * na + d] = mi.g(p, q, r, s);
                }
            }
        }
    }
    Ok(out)
}

/// Pauli sum with complex coefficients; only used while assembling operators
/// from ladder-operator products.
#[derive(Debug, Clone, Default)]
pub(crate) struct ComplexSum {
    terms: Vec<(PauliWord, Complex64)>,
}

impl ComplexSum {
    fn mul(&self, rhs: &ComplexSum) -> ComplexSum {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let (w, ph) = a.mul_word(b);
                terms.push((w, ph.to_complex() * ca * cb));
            }
        }
        ComplexSum { terms }
    }

    fn scale(mut self, c: Complex64) -> ComplexSum {
        self.terms.iter_mut().for_each(|t| t.1 *= c);
        self
    }

    fn extend(&mut self, other: ComplexSum) {
        self.terms.extend(other.terms);
    }

    /// Sums duplicates and drops the imaginary parts, which must cancel.
    fn into_real(mut self, n_qubits: usize) -> PauliSum {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(PauliWord, Complex64)> = Vec::with_capacity(self.terms.len());
        for (w, c) in self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == w => last.1 += c,
                _ => merged.push((w, c)),
            }
        }
        let scale = merged.iter().map(|t| t.1.norm()).fold(1.0, f64::max);
        let real = merged.into_iter().map(|(w, c)| {
            debug_assert!(c.im.abs() <= 1e-12 * scale, "imaginary residue {c} on {w}");
            let re = if c.re.abs() <= 1e-14 * scale { 0.0 } else { c.re };
            (w, re)
        });
        PauliSum::from_terms(n_qubits, real).expect("register checked by caller")
    }
}

/// `a_p` (`dagger = false`) or `a_p†` on spin-orbital (qubit) `p`.
pub(crate) fn ladder(n_qubits: usize, p: usize, dagger: bool) -> ComplexSum {
    let below = (1u64 << p) - 1;
    let bit = 1u64 << p;
    let xw = PauliWord::from_masks(n_qubits, bit, below).expect("p < n");
    let yw = PauliWord::from_masks(n_qubits, bit, below | bit).expect("p < n");
    let iy = if dagger { -0.5 } else { 0.5 };
    ComplexSum {
        terms: vec![(xw, Complex64::new(0.5, 0.0)), (yw, Complex64::new(0.0, iy))],
    }
}

fn spin_orbital(p: usize, beta: bool) -> usize {
    2 * p + beta as usize
}

/// Qubit form of
/// `H = E_core + Σ h_pq a†_p a_q + ½ Σ (pq|rs) a†_p a†_r a_s a_q`
/// summed over spin-orbitals with spin conserved at each vertex.
pub fn jordan_wigner(mi: &MolecularIntegrals) -> Result<PauliSum> {
    let n = mi.n_spatial;
    if n > MAX_SPATIAL_ORBITALS {
        return Err(Error::TooManyQubits(2 * n, 2 * MAX_SPATIAL_ORBITALS));
    }
    let nq = 2 * n;
    let so: Vec<(usize, bool)> = (0..n).flat_map(|p| [(p, false), (p, true)]).collect();
    let create: Vec<ComplexSum> = (0..nq).map(|q| ladder(nq, q, true)).collect();
    let annihilate: Vec<ComplexSum> = (0..nq).map(|q| ladder(nq, q, false)).collect();

    let per_p: Vec<ComplexSum> = (0..nq)
        .into_par_iter()
        .map(|ip| {
            let (p, sp) = so[ip];
            let mut acc = ComplexSum::default();
            for (iq, &(q, sq)) in so.iter().enumerate() {
                if sp == sq && mi.h(p, q) != 0.0 {
                    let term = create[ip].mul(&annihilate[iq]);
                    acc.extend(term.scale(Complex64::new(mi.h(p, q), 0.0)));
                }
                if sp != sq {
                    continue;
                }
                for (ir, &(r, sr)) in so.iter().enumerate() {
                    if ir == ip {
                        continue;
                    }
                    let left = create[ip].mul(&create[ir]);
                    for (is, &(s, ss)) in so.iter().enumerate() {
                        if ss != sr || is == iq {
                            continue;
                        }
                        let v = mi.g(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        let right = annihilate[is].mul(&annihilate[iq]);
                        acc.extend(left.mul(&right).scale(Complex64::new(0.5 * v, 0.0)));
                    }
                }
            }
            acc
        })
        .collect();

    let mut all = ComplexSum {
        terms: vec![(PauliWord::identity(nq), Complex64::new(mi.core_energy, 0.0))],
    };
    for part in per_p {
        all.extend(part);
    }
    Ok(all.into_real(nq))
}

/// First `n_e` qubits occupied.
pub fn reference_state(n_electrons: usize, n_qubits: usize) -> Result<ReferenceState> {
    if n_electrons > n_qubits {
        return Err(Error::InvalidArgument(format!(
            "{n_electrons} electrons do not fit in {n_qubits} qubits"
        )));
    }
    let occ = if n_electrons == 64 { u64::MAX } else { (1u64 << n_electrons) - 1 };
    ReferenceState::new(n_qubits, occ)
}

/// High-spin determinant: `(n_e − ms2)/2` doubly occupied orbitals followed by
/// `ms2` singly occupied α orbitals. `ms2 = 0` equals [`reference_state`].
pub fn reference_state_with_spin(
    n_electrons: usize,
    ms2: i32,
    n_qubits: usize,
) -> Result<ReferenceState> {
    if ms2 < 0 {
        return Err(Error::InvalidArgument("reference must have MS2 >= 0".into()));
    }
    let (n_docc, n_occ) = occupied_counts(n_electrons, ms2)?;
    if 2 * n_occ > n_qubits {
        return Err(Error::InvalidArgument(format!(
            "{n_electrons} electrons with MS2={ms2} do not fit in {n_qubits} qubits"
        )));
    }
    let mut occ = if n_docc == 32 { u64::MAX } else { (1u64 << (2 * n_docc)) - 1 };
    for p in n_docc..n_occ {
        occ |= 1u64 << spin_orbital(p, false);
    }
    ReferenceState::new(n_qubits, occ)
}

/// `(S², S_z)` over interleaved α/β qubit pairs, assembled from ladder
/// operators: `S² = S_z² + S_z + S₋S₊`.
pub fn spin_operators(n_qubits: usize) -> Result<(PauliSum, PauliSum)> {
    if n_qubits % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "spin operators need an even qubit count, got {n_qubits}"
        )));
    }
    let n = n_qubits / 2;
    let number = |q: usize| ladder(n_qubits, q, true).mul(&ladder(n_qubits, q, false));
    let mut sz = ComplexSum::default();
    let mut s_plus = ComplexSum::default();
    let mut s_minus = ComplexSum::default();
    for p in 0..n {
        let (a, b) = (spin_orbital(p, false), spin_orbital(p, true));
        sz.extend(number(a).scale(Complex64::new(0.5, 0.0)));
        sz.extend(number(b).scale(Complex64::new(-0.5, 0.0)));
        s_plus.extend(ladder(n_qubits, a, true).mul(&ladder(n_qubits, b, false)));
        s_minus.extend(ladder(n_qubits, b, true).mul(&ladder(n_qubits, a, false)));
    }
    let sz_real = sz.clone().into_real(n_qubits);
    let sz_c = ComplexSum {
        terms: sz_real.iter().map(|&(w, c)| (w, Complex64::new(c, 0.0))).collect(),
    };
    let mut s2 = sz_c.mul(&sz_c);
    s2.extend(sz_c.clone());
    s2.extend(s_minus.mul(&s_plus));
    Ok((s2.into_real(n_qubits), sz_real))
}

/// Spin penalty `μ (S² − s(s+1) S_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinPenalty {
    pub mu: f64,
    pub s: f64,
}

impl SpinPenalty {
    pub fn new(mu: f64, s: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("penalty strength mu = {mu} must be >= 0")));
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("spin s = {s} must be >= 0")));
        }
        Ok(SpinPenalty { mu, s })
    }
}

pub fn penalize(h: &PauliSum, penalty: &SpinPenalty) -> Result<PauliSum> {
    if penalty.mu == 0.0 {
        return Ok(h.clone());
    }
    let (s2, sz) = spin_operators(h.n_qubits())?;
    let w = s2.sub(&sz.scale(penalty.s * (penalty.s + 1.0)))?;
    h.add(&w.scale(penalty.mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, Sector};

    const H2: &str = include_str!("../tests/fixtures/h2.fcidump");
    const LIH: &str = include_str!("../tests/fixtures/lih.fcidump");

    #[test]
    fn minimal_header_only_core() {
        let mi = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.75 0 0 0 0\n").unwrap();
        assert_eq!(mi.core_energy, 0.75);
        assert_eq!(mi.n_spatial, 2);
        assert!((0..2).all(|p| (0..2).all(|q| mi.h(p, q) == 0.0)));
    }

    #[test]
    fn header_variants() {
        let mi = parse_fcidump(" &FCI NORB= 1, NELEC=1,\n ORBSYM=1,\n ISYM=1\n /\n -0.5D0 1 1 0 0\n").unwrap();
        assert_eq!(mi.ms2, 0);
        assert_eq!(mi.h(0, 0), -0.5);
        assert!(parse_fcidump("NORB=1\n").is_err());
        assert!(parse_fcidump("&FCI NORB=1,NELEC=1\n").is_err());
        assert!(parse_fcidump("&FCI NELEC=1 &END\n").is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.1 1 1 0 0\n 0.2 3 1 0 0\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 4, msg: "index 3 out of range 0..=2".into() });
        let e = parse_fcidump("&FCI NORB=2,NELEC=2,\n&END\n 0.1 1 2 0 0\n 0.3 2 1 0 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
        let e = parse_fcidump("&FCI NORB=2,NELEC=2,\n&END\n 0.1 1 2 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        // consistent duplicates are fine
        parse_fcidump("&FCI NORB=2,NELEC=2,\n&END\n 0.1 1 2 1 1\n 0.1 1 1 2 1\n").unwrap();
    }

    #[test]
    fn h2_fixture() {
        let mi = parse_fcidump(H2).unwrap();
        assert_eq!((mi.n_spatial, mi.n_electrons, mi.ms2), (2, 2, 0));
        assert!(mi.is_symmetric(1e-12));
        assert_eq!(mi.g(0, 1, 0, 1), mi.g(1, 0, 1, 0));
    }

    #[test]
    fn zero_integrals_give_constant() {
        let mut mi = MolecularIntegrals::zeros(3, 2, 0);
        mi.core_energy = -1.25;
        assert_eq!(jordan_wigner(&mi).unwrap(), PauliSum::constant(6, -1.25));
    }

    #[test]
    fn single_orbital_number_operator() {
        let mut mi = MolecularIntegrals::zeros(1, 2, 0);
        mi.set_h(0, 0, -0.8);
        let h = jordan_wigner(&mi).unwrap();
        let r = reference_state(2, 2).unwrap();
        assert!((h.reference_energy(&r) - 2.0 * -0.8).abs() < 1e-15);
        let one = reference_state(1, 2).unwrap();
        assert!((h.reference_energy(&one) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn references() {
        assert_eq!(reference_state(0, 4).unwrap().occupation, 0);
        assert_eq!(reference_state(4, 4).unwrap().occupation, 0b1111);
        assert!(reference_state(5, 4).is_err());
        let t = reference_state_with_spin(2, 2, 4).unwrap();
        assert_eq!(t.occupation, 0b0101);
        assert_eq!(reference_state_with_spin(4, 0, 8).unwrap(), reference_state(4, 8).unwrap());
        assert_eq!(reference_state_with_spin(4, 2, 8).unwrap().occupation, 0b010111);
        assert!(reference_state_with_spin(3, 0, 8).is_err());
    }

    #[test]
    fn spin_expectations_on_references() {
        let (s2, sz) = spin_operators(6).unwrap();
        let closed = reference_state(4, 6).unwrap();
        assert!(s2.reference_energy(&closed).abs() < 1e-15);
        assert!(sz.reference_energy(&closed).abs() < 1e-15);
        let one_alpha = ReferenceState::new(6, 0b000001).unwrap();
        assert!((sz.reference_energy(&one_alpha) - 0.5).abs() < 1e-15);
        assert!((s2.reference_energy(&one_alpha) - 0.75).abs() < 1e-15);
        assert!(spin_operators(5).is_err());
    }

    #[test]
    fn penalty_edge_cases() {
        let h = jordan_wigner(&parse_fcidump(H2).unwrap()).unwrap();
        assert_eq!(penalize(&h, &SpinPenalty::new(0.0, 1.0).unwrap()).unwrap(), h);
        let (s2, _) = spin_operators(4).unwrap();
        let p = penalize(&h, &SpinPenalty::new(0.3, 0.0).unwrap()).unwrap();
        assert_eq!(p, h.add(&s2.scale(0.3)).unwrap());
        assert!(SpinPenalty::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn cas_identity_window() {
        let mi = parse_fcidump(LIH).unwrap();
        let w = CasWindow::full(&mi).unwrap();
        assert!(w.frozen_occupied.is_empty() && w.discarded_virtual.is_empty());
        assert_eq!(select_cas(&mi, &w).unwrap(), mi);
    }

    #[test]
    fn cas_empty_active_space_is_mean_field() {
        let mi = parse_fcidump(H2).unwrap();
        let w = CasWindow::around_fermi_level(&mi, 0, 0).unwrap();
        let cas = select_cas(&mi, &w).unwrap();
        assert_eq!(cas.n_spatial, 0);
        let e_rhf = jordan_wigner(&mi).unwrap().reference_energy(&reference_state(2, 4).unwrap());
        assert!((cas.core_energy - e_rhf).abs() < 1e-12);
    }

    #[test]
    fn cas_window_validation() {
        let mi = parse_fcidump(LIH).unwrap();
        assert!(CasWindow::around_fermi_level(&mi, 3, 0).is_err());
        assert!(CasWindow::around_fermi_level(&mi, 1, 5).is_err());
        let mut w = CasWindow::around_fermi_level(&mi, 1, 1).unwrap();
        assert_eq!(w.frozen_occupied, vec![0]);
        assert_eq!(w.active, vec![1, 2]);
        w.active.push(0);
        assert!(select_cas(&mi, &w).is_err());
    }

    #[test]
    fn lih_frozen_core_matches_projected_full_space() {
        let mi = parse_fcidump(LIH).unwrap();
        let w = CasWindow::around_fermi_level(&mi, 1, 4).unwrap();
        let cas = select_cas(&mi, &w).unwrap();
        assert_eq!(cas.n_electrons, 2);
        let e_cas = oracle::ground_state_in_sector(
            &jordan_wigner(&cas).unwrap(),
            Sector { n_electrons: Some(2), two_sz: Some(0) },
        )
        .unwrap()
        .energy;

        // Full-space Hamiltonian restricted to states with orbital 0 doubly occupied.
        let full = jordan_wigner(&mi).unwrap();
        let states: Vec<u64> = (0..1u64 << 12)
            .filter(|b| b & 0b11 == 0b11 && b.count_ones() == 4)
            .filter(|&b| Sector { n_electrons: None, two_sz: Some(0) }.contains(b))
            .collect();
        let idx: HashMap<u64, usize> = states.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut m = nalgebra::DMatrix::<f64>::zeros(states.len(), states.len());
        for (col, &b) in states.iter().enumerate() {
            for (word, c) in full.iter() {
                let (o, ph) = word.apply(b);
                if let Some(&row) = idx.get(&o) {
                    m[(row, col)] += c * ph.real_sign().unwrap();
                }
            }
        }
        let e_proj = nalgebra::SymmetricEigen::new(m).eigenvalues.min();
        assert!((e_cas - e_proj).abs() < 1e-10, "{e_cas} vs {e_proj}");
    }
}
