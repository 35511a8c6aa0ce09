#![allow(dead_code)]

use iqcc::{jordan_wigner, parse_fcidump, MolecularIntegrals, PauliSum};
use serde_json::Value;

pub fn fixture(name: &str) -> MolecularIntegrals {
    let path = format!("{}/tests/fixtures/{name}.fcidump", env!("CARGO_MANIFEST_DIR"));
    parse_fcidump(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn qubit_hamiltonian(name: &str) -> PauliSum {
    jordan_wigner(&fixture(name)).unwrap()
}

/// Energies recorded when the fixtures were generated.
pub fn reference_energy(name: &str, key: &str) -> f64 {
    let path = format!("{}/tests/fixtures/reference_energies.json", env!("CARGO_MANIFEST_DIR"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v[name][key].as_f64().unwrap()
}

use iqcc::{PauliWord, ReferenceState};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn random_word(rng: &mut ChaCha8Rng, n: usize, odd_y: bool) -> PauliWord {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    loop {
        let x = rng.gen::<u64>() & mask;
        let z = rng.gen::<u64>() & mask;
        let w = PauliWord::from_masks(n, x, z).unwrap();
        if (w.y_count() % 2 == 1) == odd_y {
            return w;
        }
    }
}

/// Real Hermitian sum of `terms` random even-Y words with coefficients in `[-1, 1]`.
pub fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> PauliSum {
    let t: Vec<_> = (0..terms)
        .map(|_| (random_word(rng, n, false), rng.gen_range(-1.0..1.0)))
        .collect();
    PauliSum::from_terms(n, t).unwrap()
}

/// Random word with an odd number of Y factors, i.e. a valid generator.
pub fn random_generator(rng: &mut ChaCha8Rng, n: usize) -> PauliWord {
    random_word(rng, n, true)
}

pub fn random_reference(rng: &mut ChaCha8Rng, n: usize) -> ReferenceState {
    ReferenceState::new(n, rng.gen::<u64>() & ((1u64 << n) - 1)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
