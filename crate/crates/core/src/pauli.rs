//! Pauli words in symplectic (two-bitmask) form.
//!
//! A word over `n` qubits is stored as an x-mask and a z-mask. Qubit `j`
//! carries
//!
//! | x bit | z bit | factor |
//! |-------|-------|--------|
//! | 0     | 0     | 1      |
//! | 1     | 0     | x      |
//! | 0     | 1     | z      |
//! | 1     | 1     | y      |
//!
//! with the fixed convention `y = i·x·z`. A canonical word therefore equals
//! `i^{y_count} · X^{x_mask} · Z^{z_mask}` where all x factors are written to
//! the left of all z factors. Products pick up a phase `i^k` which is tracked
//! exactly as an integer modulo 4.
//!
//! Basis convention shared with the rest of the crate: qubit `j` is bit `j`
//! of a basis-state index, a set bit is an occupied spin-orbital (spin-down,
//! z-eigenvalue −1).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported register.
pub const MAX_QUBITS: usize = 64;

/// Power of the imaginary unit, `i^k` with `k` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn new(exp: u32) -> Self {
        Phase((exp & 3) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 & 1 == 0
    }

    /// `+1` or `-1` for real phases.
    pub fn real_sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) & 3)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) & 3)
    }
}

/// A canonical Pauli word: no phase, `y = i·x·z` per qubit.
///
/// Ordering is [`WordOrder`]: weight first, then x-mask, then z-mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliWord {
    x: u64,
    z: u64,
    n: u8,
}

impl PauliWord {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliWord {
            x: 0,
            z: 0,
            n: n_qubits as u8,
        }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(n_qubits, MAX_QUBITS));
        }
        let valid = mask_for(n_qubits);
        if (x | z) & !valid != 0 {
            let index = 63 - ((x | z) & !valid).leading_zeros() as usize;
            return Err(Error::QubitOutOfRange { index, n_qubits });
        }
        Ok(PauliWord {
            x,
            z,
            n: n_qubits as u8,
        })
    }

    /// Builds a word from `(qubit, 'X' | 'Y' | 'Z')` factors.
    pub fn from_factors(n_qubits: usize, factors: &[(usize, char)]) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &(q, c) in factors {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            let bit = 1u64 << q;
            if (x | z) & bit != 0 {
                return Err(Error::WordSyntax(format!("qubit {q} repeated")));
            }
            match c.to_ascii_uppercase() {
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                'I' => {}
                _ => return Err(Error::WordSyntax(format!("{c}{q}"))),
            }
        }
        Self::from_masks(n_qubits, x, z)
    }

    /// Parses `"X0 Z3 Y7"` (or `"I"`/empty for the identity).
    pub fn parse(n_qubits: usize, text: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for tok in text.split_whitespace() {
            if tok.eq_ignore_ascii_case("I") {
                continue;
            }
            let mut chars = tok.chars();
            let c = chars.next().ok_or_else(|| Error::WordSyntax(text.into()))?;
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::WordSyntax(text.into()))?;
            factors.push((q, c));
        }
        Self::from_factors(n_qubits, &factors)
    }

    #[inline]
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    #[inline]
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Only z factors (or the identity).
    #[inline]
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn is_x_string(&self) -> bool {
        self.z == 0 && self.x != 0
    }

    pub fn is_real(&self) -> bool {
        self.y_count() % 2 == 0
    }

    /// Factor acting on `qubit`: one of `'I' 'X' 'Y' 'Z'`.
    pub fn factor(&self, qubit: usize) -> char {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }

    /// Product `self · rhs = i^k · word`, without the qubit-count check.
    #[inline]
    pub fn mul_word(&self, rhs: &PauliWord) -> (PauliWord, Phase) {
        let x = self.x ^ rhs.x;
        let z = self.z ^ rhs.z;
        // i^{y_a} X^{x_a} Z^{z_a} · i^{y_b} X^{x_b} Z^{z_b}
        //   = i^{y_a + y_b} (-1)^{|z_a & x_b|} X^{x} Z^{z}
        //   = i^{y_a + y_b + 2|z_a & x_b| - y_c} · canonical(x, z)
        let k = (self.x & self.z).count_ones()
            + (rhs.x & rhs.z).count_ones()
            + 2 * (self.z & rhs.x).count_ones()
            + 3 * (x & z).count_ones();
        (PauliWord { x, z, n: self.n }, Phase::new(k))
    }

    #[inline]
    pub fn commutes_with(&self, rhs: &PauliWord) -> bool {
        ((self.x & rhs.z) ^ (self.z & rhs.x)).count_ones() % 2 == 0
    }

    /// Action on a computational basis state: `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn apply(&self, basis: u64) -> (u64, Phase) {
        let k = (self.x & self.z).count_ones() + 2 * (self.z & basis).count_ones();
        (basis ^ self.x, Phase::new(k))
    }

    /// `⟨b|P|b⟩` for a diagonal word: `±1`; zero for words with x factors.
    #[inline]
    pub fn diagonal_sign(&self, basis: u64) -> f64 {
        debug_assert!(self.is_diagonal());
        if (self.z & basis).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn check_same(&self, rhs: &PauliWord) -> Result<()> {
        if self.n != rhs.n {
            Err(Error::DimensionMismatch(self.n_qubits(), rhs.n_qubits()))
        } else {
            Ok(())
        }
    }
}

/// `a · b = i^k · c`.
pub fn multiply(a: &PauliWord, b: &PauliWord) -> Result<(PauliWord, Phase)> {
    a.check_same(b)?;
    Ok(a.mul_word(b))
}

/// `ab == ba`.
pub fn commutes(a: &PauliWord, b: &PauliWord) -> Result<bool> {
    a.check_same(b)?;
    Ok(a.commutes_with(b))
}

pub fn y_count(w: &PauliWord) -> u32 {
    w.y_count()
}

pub fn is_x_string(w: &PauliWord) -> bool {
    w.is_x_string()
}

fn mask_for(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A word carrying an explicit phase, `i^phase · word`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhasedWord {
    pub word: PauliWord,
    pub phase: Phase,
}

impl PhasedWord {
    pub fn mul(&self, rhs: &PhasedWord) -> PhasedWord {
        let (word, p) = self.word.mul_word(&rhs.word);
        PhasedWord {
            word,
            phase: self.phase * rhs.phase * p,
        }
    }

    /// Splits into the phase-free key and the phase absorbed by a coefficient.
    pub fn canonicalize(self) -> (PhasedWord, Phase) {
        (PhasedWord::from(self.word), self.phase)
    }
}

impl From<PauliWord> for PhasedWord {
    fn from(word: PauliWord) -> Self {
        PhasedWord {
            word,
            phase: Phase::ONE,
        }
    }
}

/// Total order used for deterministic sorting: weight, x-mask, z-mask.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordOrder;

impl WordOrder {
    #[inline]
    pub fn cmp(a: &PauliWord, b: &PauliWord) -> Ordering {
        a.weight()
            .cmp(&b.weight())
            .then(a.x.cmp(&b.x))
            .then(a.z.cmp(&b.z))
            .then(a.n.cmp(&b.n))
    }
}

impl Ord for PauliWord {
    fn cmp(&self, other: &Self) -> Ordering {
        WordOrder::cmp(self, other)
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        let mut support = self.x | self.z;
        let mut first = true;
        while support != 0 {
            let q = support.trailing_zeros() as usize;
            support &= support - 1;
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}{}", self.factor(q), q)?;
        }
        Ok(())
    }
}

/// Parses a word whose register is just large enough for its highest index.
/// Use [`PauliWord::parse`] when the qubit count is known.
impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let top = s
            .split_whitespace()
            .filter(|t| !t.eq_ignore_ascii_case("I"))
            .filter_map(|t| t.get(1..).and_then(|q| q.parse::<usize>().ok()))
            .max()
            .map_or(0, |q| q + 1);
        PauliWord::parse(top, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    type CMat = DMatrix<Complex64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(ch: char) -> CMat {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        match ch {
            'I' => CMat::from_row_slice(2, 2, &[o, z, z, o]),
            'X' => CMat::from_row_slice(2, 2, &[z, o, o, z]),
            'Y' => CMat::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            'Z' => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
            _ => unreachable!(),
        }
    }

    // Kronecker product with qubit 0 as the least significant index bit.
    fn dense(w: &PauliWord) -> CMat {
        let mut m = CMat::from_element(1, 1, c(1.0, 0.0));
        for q in 0..w.n_qubits() {
            m = single(w.factor(q)).kronecker(&m);
        }
        m
    }

    fn all_words(n: usize) -> Vec<PauliWord> {
        let mut out = Vec::new();
        for x in 0..(1u64 << n) {
            for z in 0..(1u64 << n) {
                out.push(PauliWord::from_masks(n, x, z).unwrap());
            }
        }
        out
    }

    fn w(n: usize, s: &str) -> PauliWord {
        PauliWord::parse(n, s).unwrap()
    }

    #[test]
    fn x_times_y_is_iz() {
        let (p, ph) = multiply(&w(1, "X0"), &w(1, "Y0")).unwrap();
        assert_eq!(p, w(1, "Z0"));
        assert_eq!(ph, Phase::I);
    }

    #[test]
    fn square_is_identity() {
        for a in all_words(3) {
            let (p, ph) = a.mul_word(&a);
            assert!(p.is_identity());
            assert_eq!(ph, Phase::ONE);
        }
    }

    #[test]
    fn two_qubit_product_against_dense() {
        let a = w(2, "X0 Z1");
        let b = w(2, "Z0 Z1");
        let (p, ph) = multiply(&a, &b).unwrap();
        // x·z = -i·y on qubit 0, z·z = 1 on qubit 1
        assert_eq!(p, w(2, "Y0"));
        assert_eq!(ph, Phase::MINUS_I);
        let lhs = dense(&a) * dense(&b);
        let rhs = dense(&p) * ph.to_complex();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn products_match_kronecker_exhaustively() {
        for n in 1..=3 {
            let words = all_words(n);
            let mats: Vec<CMat> = words.iter().map(dense).collect();
            for (a, ma) in words.iter().zip(&mats) {
                for (b, mb) in words.iter().zip(&mats) {
                    let (p, ph) = a.mul_word(b);
                    let want = ma * mb;
                    let got = dense(&p) * ph.to_complex();
                    assert!((want - got).norm() < 1e-12, "{a} * {b}");
                    let commute_phase = a.mul_word(b).1 == b.mul_word(a).1;
                    assert_eq!(a.commutes_with(b), commute_phase);
                }
            }
        }
    }

    #[test]
    fn apply_matches_kronecker() {
        for a in all_words(3) {
            let m = dense(&a);
            for b in 0..8u64 {
                let (out, ph) = a.apply(b);
                assert_eq!(m[(out as usize, b as usize)], ph.to_complex());
            }
        }
    }

    #[test]
    fn commutation_examples() {
        assert!(!commutes(&w(1, "X0"), &w(1, "Z0")).unwrap());
        assert!(commutes(&w(2, "X0"), &w(2, "Z1")).unwrap());
        let (a, b) = (w(2, "X0 Y1"), w(2, "Z0 X1"));
        assert!(commutes(&a, &b).unwrap());
        let (ma, mb) = (dense(&a), dense(&b));
        assert!((&ma * &mb - &mb * &ma).norm() < 1e-14);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let e = multiply(&w(2, "X0"), &w(3, "X0")).unwrap_err();
        assert_eq!(e, Error::DimensionMismatch(2, 3));
        assert!(commutes(&w(2, "X0"), &w(3, "X0")).is_err());
    }

    #[test]
    fn y_counts_and_x_strings() {
        assert_eq!(y_count(&PauliWord::identity(4)), 0);
        assert_eq!(y_count(&w(2, "Y0 Y1")), 2);
        assert_eq!(y_count(&w(3, "Y0 X1 Z2")), 1);
        assert!(is_x_string(&w(4, "X0 X3")));
        assert!(!is_x_string(&w(4, "X0 Y3")));
        assert!(!is_x_string(&PauliWord::identity(4)));
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let a = w(8, "Y7 X0 Z3");
        assert_eq!(a.to_string(), "X0 Z3 Y7");
        assert_eq!(PauliWord::parse(8, &a.to_string()).unwrap(), a);
        assert_eq!(PauliWord::identity(3).to_string(), "I");
        assert_eq!(PauliWord::parse(3, "I").unwrap(), PauliWord::identity(3));
        assert!(PauliWord::parse(2, "X2").is_err());
        assert!(PauliWord::parse(2, "Q0").is_err());
        assert!(PauliWord::parse(2, "X0 Z0").is_err());
        assert_eq!("Z3".parse::<PauliWord>().unwrap().n_qubits(), 4);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let p = PhasedWord {
            word: w(3, "Y0 Z2"),
            phase: Phase::MINUS_I,
        };
        let (once, ph) = p.canonicalize();
        assert_eq!(ph, Phase::MINUS_I);
        let (twice, ph2) = once.canonicalize();
        assert_eq!(once, twice);
        assert_eq!(ph2, Phase::ONE);
    }

    fn arb_word(n: usize) -> impl Strategy<Value = PauliWord> {
        let m = mask_for(n);
        (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliWord::from_masks(n, x & m, z & m).unwrap())
    }

    proptest! {
        #[test]
        fn word_order_is_total(a in arb_word(10), b in arb_word(10), c in arb_word(10)) {
            let ab = a.cmp(&b);
            prop_assert_eq!(ab, b.cmp(&a).reverse());
            prop_assert_eq!(ab == Ordering::Equal, a == b);
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
        }

        #[test]
        fn multiplication_is_associative(a in arb_word(12), b in arb_word(12), c in arb_word(12)) {
            let (ab, p1) = a.mul_word(&b);
            let (ab_c, p2) = ab.mul_word(&c);
            let (bc, q1) = b.mul_word(&c);
            let (a_bc, q2) = a.mul_word(&bc);
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(p1 * p2, q1 * q2);
        }
    }
}
