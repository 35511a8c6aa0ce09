//! Brute-force verification backend.
//!
//! Basis index convention: qubit `j` is bit `j` of the index (qubit 0 least
//! significant) and a set bit is an occupied, spin-down qubit with
//! z-eigenvalue −1. This is the same convention [`ReferenceState`] uses, so
//! the reference vector is the basis state `occupation`.
//!
//! Registers up to [`MAX_DENSE_QUBITS`] are realized as dense matrices; up to
//! [`MAX_ORACLE_QUBITS`] the ground state is found by Lanczos iteration on a
//! sparse matrix-vector product.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{PauliSum, ReferenceState};
use crate::pauli::PauliWord;

pub const MAX_DENSE_QUBITS: usize = 12;
pub const MAX_ORACLE_QUBITS: usize = 16;
/// Full dense diagonalization is used up to this register size.
const DENSE_SOLVE_QUBITS: usize = 10;

const RESIDUAL_TOL: f64 = 1e-10;

/// A `2^N × 2^N` matrix realization of a Pauli sum.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub n_qubits: usize,
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest `|A − A†|` element.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..=i {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|c| c.im == 0.0)
    }

    /// All eigenvalues, ascending. The operator must be hermitian.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = if self.is_real() {
            self.matrix.map(|c| c.re).symmetric_eigenvalues().iter().copied().collect()
        } else {
            self.matrix.symmetric_eigenvalues().iter().copied().collect()
        };
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Matrix of a single word built from Kronecker products of 2×2 factors.
///
/// Slow (`O(4^N)`) and kept deliberately separate from the bit-level action
/// used by [`to_matrix`], so the two can check each other.
pub fn word_matrix_kron(w: &PauliWord) -> DMatrix<Complex64> {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut m = DMatrix::from_element(1, 1, o);
    for q in 0..w.n_qubits() {
        let f = match w.factor(q) {
            'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            _ => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        };
        m = f.kronecker(&m);
    }
    m
}

fn check_capacity(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::TooManyQubits(n, cap))
    } else {
        Ok(())
    }
}

pub fn to_matrix(h: &PauliSum) -> Result<DenseOperator> {
    let n = h.n_qubits();
    check_capacity(n, MAX_DENSE_QUBITS)?;
    let dim = 1usize << n;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (w, c) in h.iter() {
        for b in 0..dim as u64 {
            let (out, ph) = w.apply(b);
            m[(out as usize, b as usize)] += ph.to_complex() * *c;
        }
    }
    Ok(DenseOperator { n_qubits: n, matrix: m })
}

/// All eigenvalues of a Pauli sum, ascending.
pub fn spectrum(h: &PauliSum) -> Result<Vec<f64>> {
    check_capacity(h.n_qubits(), DENSE_SOLVE_QUBITS)?;
    Ok(to_matrix(h)?.eigenvalues())
}

/// `H|ψ⟩` through the bit-level action of each word.
pub fn apply_sum(h: &PauliSum, psi: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::from_element(psi.len(), Complex64::new(0.0, 0.0));
    for (w, c) in h.iter() {
        for (b, amp) in psi.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let (o, ph) = w.apply(b as u64);
            out[o as usize] += ph.to_complex() * *amp * *c;
        }
    }
    out
}

pub fn expectation(h: &PauliSum, psi: &DVector<Complex64>) -> f64 {
    psi.dotc(&apply_sum(h, psi)).re / psi.norm_squared()
}

pub fn basis_vector(reference: &ReferenceState) -> DVector<Complex64> {
    let mut v = DVector::from_element(1usize << reference.n_qubits, Complex64::new(0.0, 0.0));
    v[reference.occupation as usize] = Complex64::new(1.0, 0.0);
    v
}

/// `Π_j e^{-i t_j T_j / 2} |0⟩` with `j = 1` leftmost (applied last).
pub fn ansatz_state(reference: &ReferenceState, gens: &[(PauliWord, f64)]) -> DVector<Complex64> {
    let mut psi = basis_vector(reference);
    for (g, t) in gens.iter().rev() {
        let (s, c) = (t / 2.0).sin_cos();
        let mut next = psi.scale(c);
        let mi = Complex64::new(0.0, -s);
        for (b, amp) in psi.iter().enumerate() {
            let (o, ph) = g.apply(b as u64);
            next[o as usize] += mi * ph.to_complex() * *amp;
        }
        psi = next;
    }
    psi
}

/// `e^{-itT/2}` as a dense matrix.
pub fn exp_generator_matrix(g: &PauliWord, t: f64) -> DMatrix<Complex64> {
    let dim = 1usize << g.n_qubits();
    let (s, c) = (t / 2.0).sin_cos();
    let p = word_matrix_kron(g);
    DMatrix::<Complex64>::identity(dim, dim).scale(c) - p * Complex64::new(0.0, s)
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub vector: DVector<Complex64>,
    pub residual: f64,
}

/// Lowest eigenpair over the whole register.
pub fn ground_state(h: &PauliSum) -> Result<GroundState> {
    let n = h.n_qubits();
    check_capacity(n, MAX_ORACLE_QUBITS)?;
    if n <= DENSE_SOLVE_QUBITS {
        let op = to_matrix(h)?;
        let (e, v) = lowest_dense(&op.matrix);
        let residual = (apply_sum(h, &v) - v.scale(e)).norm();
        return Ok(GroundState {
            energy: e,
            vector: v,
            residual,
        });
    }
    h.check_hermitian()?;
    let dim = 1usize << n;
    let matvec = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (w, c) in h.iter() {
            for (b, &xb) in x.iter().enumerate() {
                let (o, ph) = w.apply(b as u64);
                y[o as usize] += c * ph.real_sign().unwrap() * xb;
            }
        }
    };
    let (e, v, residual) = lanczos_lowest(dim, matvec)?;
    Ok(GroundState {
        energy: e,
        vector: DVector::from_iterator(dim, v.into_iter().map(|x| Complex64::new(x, 0.0))),
        residual,
    })
}

fn lowest_dense(m: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    if m.iter().all(|c| c.im == 0.0) {
        let eig = SymmetricEigen::new(m.map(|c| c.re));
        let k = argmin(eig.eigenvalues.as_slice());
        let v = eig.eigenvectors.column(k).map(|x| Complex64::new(x, 0.0));
        (eig.eigenvalues[k], v)
    } else {
        let eig = SymmetricEigen::new(m.clone());
        let k = argmin(eig.eigenvalues.as_slice());
        (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
    }
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|p| p.0)
        .expect("non-empty")
}

/// Restarted Lanczos with full reorthogonalization for the lowest eigenpair
/// of a real symmetric operator.
fn lanczos_lowest<F>(dim: usize, matvec: F) -> Result<(f64, Vec<f64>, f64)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let krylov = dim.min(120);
    let mut start: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 101) as f64 * 1e-3).collect();
    let mut best = (f64::INFINITY, vec![0.0; dim], f64::INFINITY);
    for _restart in 0..50 {
        normalize(&mut start);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        for j in 0..krylov {
            matvec(&basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            for q in &basis {
                let proj = dot(&w, q);
                axpy(-proj, q, &mut w);
            }
            for q in &basis {
                let proj = dot(&w, q);
                axpy(-proj, q, &mut w);
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == krylov || b < 1e-13 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let k = argmin(eig.eigenvalues.as_slice());
        let mut v = vec![0.0; dim];
        for (i, q) in basis.iter().take(m).enumerate() {
            axpy(eig.eigenvectors[(i, k)], q, &mut v);
        }
        normalize(&mut v);
        matvec(&v, &mut w);
        let energy = dot(&v, &w);
        axpy(-energy, &v, &mut w);
        let residual = dot(&w, &w).sqrt();
        if residual < best.2 {
            best = (energy, v.clone(), residual);
        }
        if residual <= RESIDUAL_TOL {
            return Ok(best);
        }
        start = v;
    }
    Err(Error::NoConvergence(best.2))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Subspace of basis states selected by particle number and/or `2·S_z`
/// (interleaved α/β qubits: even qubits are α).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sector {
    pub n_electrons: Option<u32>,
    pub two_sz: Option<i32>,
}

impl Sector {
    pub fn contains(&self, basis: u64) -> bool {
        const ALPHA: u64 = 0x5555_5555_5555_5555;
        let n_alpha = (basis & ALPHA).count_ones() as i32;
        let n_beta = (basis & !ALPHA).count_ones() as i32;
        self.n_electrons.map_or(true, |n| n as i32 == n_alpha + n_beta)
            && self.two_sz.map_or(true, |s| s == n_alpha - n_beta)
    }
}

/// Restricts `h` to the basis states listed in `states`; fails if `h` couples
/// them to anything outside.
fn restrict(h: &PauliSum, states: &[u64]) -> Result<DMatrix<Complex64>> {
    let dim = 1usize << h.n_qubits();
    let mut index = vec![usize::MAX; dim];
    for (i, &b) in states.iter().enumerate() {
        index[b as usize] = i;
    }
    let mut m = DMatrix::from_element(states.len(), states.len(), Complex64::new(0.0, 0.0));
    let mut leak = vec![Complex64::new(0.0, 0.0); dim];
    for (col, &b) in states.iter().enumerate() {
        for (w, c) in h.iter() {
            let (o, ph) = w.apply(b);
            let amp = ph.to_complex() * *c;
            match index[o as usize] {
                usize::MAX => leak[o as usize] += amp,
                row => m[(row, col)] += amp,
            }
        }
        let worst = leak.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if worst > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "operator does not conserve the sector (leak {worst:e})"
            )));
        }
        leak.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    }
    Ok(m)
}

fn sector_states(n: usize, sector: &Sector) -> Vec<u64> {
    (0..1u64 << n).filter(|&b| sector.contains(b)).collect()
}

/// Lowest eigenvalue of `h` within a particle-number / `S_z` sector. The
/// returned vector lives in the full register.
pub fn ground_state_in_sector(h: &PauliSum, sector: Sector) -> Result<GroundState> {
    let n = h.n_qubits();
    check_capacity(n, MAX_ORACLE_QUBITS)?;
    let states = sector_states(n, &sector);
    if states.is_empty() {
        return Err(Error::EmptySector(format!("{sector:?}")));
    }
    let m = restrict(h, &states)?;
    let (e, sub) = lowest_dense(&m);
    let mut v = DVector::from_element(1usize << n, Complex64::new(0.0, 0.0));
    for (i, &b) in states.iter().enumerate() {
        v[b as usize] = sub[i];
    }
    let residual = (apply_sum(h, &v) - v.scale(e)).norm();
    Ok(GroundState {
        energy: e,
        vector: v,
        residual,
    })
}

/// Lowest eigenvalue of `h` among states with `⟨S²⟩ = s(s+1)` and
/// `⟨S_z⟩ = m_s` (both within 1e-6), optionally at fixed electron count.
///
/// `s_z` must be diagonal. Degenerate levels of `h` are resolved by
/// diagonalizing `S²` inside each degenerate block.
pub fn spin_resolved_spectrum(
    h: &PauliSum,
    s_squared: &PauliSum,
    s_z: &PauliSum,
    s: f64,
    m_s: f64,
    n_electrons: Option<u32>,
) -> Result<f64> {
    let n = h.n_qubits();
    check_capacity(n, MAX_ORACLE_QUBITS)?;
    let label = || format!("s={s}, m_s={m_s}");
    if s_z.iter().any(|(w, _)| !w.is_diagonal()) {
        return Err(Error::NotDiagonal("s_z".into()));
    }
    let states: Vec<u64> = (0..1u64 << n)
        .filter(|&b| n_electrons.map_or(true, |k| b.count_ones() == k))
        .filter(|&b| {
            let r = ReferenceState { occupation: b, n_qubits: n };
            (s_z.reference_energy(&r) - m_s).abs() < 1e-6
        })
        .collect();
    if states.is_empty() {
        return Err(Error::EmptySector(label()));
    }
    let hm = restrict(h, &states)?;
    let s2m = restrict(s_squared, &states)?;
    let target = s * (s + 1.0);

    let eig = SymmetricEigen::new(hm);
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut i = 0;
    while i < order.len() {
        let e = eig.eigenvalues[order[i]];
        let mut j = i + 1;
        while j < order.len() && (eig.eigenvalues[order[j]] - e).abs() < 1e-8 {
            j += 1;
        }
        let block = DMatrix::from_fn(states.len(), j - i, |r, c| eig.eigenvectors[(r, order[i + c])]);
        let projected = block.adjoint() * &s2m * &block;
        let s2_values = SymmetricEigen::new(projected).eigenvalues;
        if s2_values.iter().any(|v| (v - target).abs() < 1e-6) {
            return Ok(e);
        }
        i = j;
    }
    Err(Error::EmptySector(label()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliWord;

    fn w(n: usize, s: &str) -> PauliWord {
        PauliWord::parse(n, s).unwrap()
    }

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::from_terms(n, terms.iter().map(|&(s, c)| (w(n, s), c))).unwrap()
    }

    #[test]
    fn identity_and_z() {
        let m = to_matrix(&PauliSum::constant(2, 1.0)).unwrap();
        assert_eq!(m.matrix, DMatrix::identity(4, 4));
        let z = to_matrix(&sum(1, &[("Z0", 1.0)])).unwrap().matrix;
        assert_eq!(z[(0, 0)].re, 1.0);
        assert_eq!(z[(1, 1)].re, -1.0);
    }

    #[test]
    fn bit_action_matches_kronecker() {
        for n in 1..=3usize {
            for x in 0..1u64 << n {
                for z in 0..1u64 << n {
                    let word = PauliWord::from_masks(n, x, z).unwrap();
                    let a = to_matrix(&PauliSum::from_terms(n, [(word, 1.0)]).unwrap()).unwrap();
                    assert!((a.matrix - word_matrix_kron(&word)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn constant_ground_state() {
        let g = ground_state(&PauliSum::constant(3, -2.5)).unwrap();
        assert!((g.energy + 2.5).abs() < 1e-14);
        let too_big = PauliSum::constant(20, 1.0);
        assert!(matches!(ground_state(&too_big), Err(Error::TooManyQubits(20, 16))));
        assert!(to_matrix(&PauliSum::constant(13, 1.0)).is_err());
    }

    #[test]
    fn lanczos_matches_dense_on_transverse_ising() {
        let n = 11;
        let mut terms = Vec::new();
        for q in 0..n {
            terms.push((PauliWord::from_factors(n, &[(q, 'X')]).unwrap(), 0.7));
            if q + 1 < n {
                terms.push((PauliWord::from_factors(n, &[(q, 'Z'), (q + 1, 'Z')]).unwrap(), -1.0));
            }
        }
        let h = PauliSum::from_terms(n, terms).unwrap();
        let g = ground_state(&h).unwrap();
        assert!(g.residual <= 1e-10);
        // Compare with the sector-restricted dense route (whole space).
        let d = ground_state_in_sector(&h, Sector::default()).unwrap();
        assert!((g.energy - d.energy).abs() < 1e-9);
    }

    #[test]
    fn sector_leak_detected() {
        let h = sum(2, &[("X0", 1.0)]);
        let s = Sector {
            n_electrons: Some(1),
            two_sz: None,
        };
        assert!(ground_state_in_sector(&h, s).is_err());
    }

    #[test]
    fn ansatz_state_matches_dense_exponentials() {
        let r = ReferenceState::new(3, 0b011).unwrap();
        let gens = [(w(3, "Y0 X2"), 0.3), (w(3, "X0 Y1 Z2"), -1.1)];
        let psi = ansatz_state(&r, &gens);
        let u = exp_generator_matrix(&gens[0].0, gens[0].1) * exp_generator_matrix(&gens[1].0, gens[1].1);
        let want = u * basis_vector(&r);
        assert!((psi - want).norm() < 1e-14);
    }
}
