#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinbus::{parse_chain_spec, ChainSpec, ProtocolState};

pub type CMatrix = DMatrix<Complex64>;

pub const FIXTURE_CONFIG: &str = include_str!("../../fixtures/paper4.json");

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn fixture_spec() -> ChainSpec {
    parse_chain_spec(FIXTURE_CONFIG).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All pairs coupled, couplings uniform in [-2000, 2000] Hz, tau uniform in [0.1, 5] ms.
pub fn random_spec<R: Rng>(rng: &mut R, n_spins: usize) -> ChainSpec {
    let mut couplings = Vec::new();
    for j in 1..=n_spins {
        for k in (j + 1)..=n_spins {
            couplings.push(((j, k), rng.random_range(-2000.0..2000.0)));
        }
    }
    let tau = rng.random_range(0.1e-3..5e-3);
    ChainSpec::new(n_spins, couplings, tau).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, n_spins: usize) -> ProtocolState {
    let raw: Vec<Complex64> = (0..=n_spins)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ProtocolState::new(n_spins, raw.into_iter().map(|z| z / norm).collect()).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
    });
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn pauli(which: char) -> CMatrix {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let entries = match which {
        'I' => [o, z, z, o],
        'X' => [z, o, o, z],
        'Y' => [z, -i, i, z],
        'Z' => [o, z, z, -o],
        _ => unreachable!(),
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

/// `sigma^{which}` acting on position `pos` (0-based, most significant first) of `n` qubits.
pub fn pauli_on(which: char, pos: usize, n: usize) -> CMatrix {
    (0..n).fold(CMatrix::identity(1, 1), |acc, q| {
        acc.kronecker(&pauli(if q == pos { which } else { 'I' }))
    })
}

/// Literal `(pi/2) sum D_jk (2 ZZ - XX - YY) - pi sum nu_i Z_i` over `spins`.
pub fn kron_hamiltonian(spec: &ChainSpec, spins: &[usize], shifts: bool) -> CMatrix {
    let n = spins.len();
    let dim = 1 << n;
    let mut h = CMatrix::zeros(dim, dim);
    let half_pi = c(std::f64::consts::FRAC_PI_2, 0.0);
    for a in 0..n {
        for b in (a + 1)..n {
            let d = c(spec.coupling(spins[a], spins[b]).unwrap(), 0.0);
            let zz = pauli_on('Z', a, n) * pauli_on('Z', b, n);
            let xx = pauli_on('X', a, n) * pauli_on('X', b, n);
            let yy = pauli_on('Y', a, n) * pauli_on('Y', b, n);
            h += (zz * c(2.0, 0.0) - xx - yy) * (half_pi * d);
        }
    }
    if shifts {
        let nu = spec.shifts().unwrap();
        for (a, &s) in spins.iter().enumerate() {
            h -= pauli_on('Z', a, n) * c(std::f64::consts::PI * nu[s - 1], 0.0);
        }
    }
    h
}

/// `exp(a)` by scaling and squaring with a plain Taylor series.
pub fn expm_taylor(a: &CMatrix) -> CMatrix {
    let norm = a.norm();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a * c(0.5f64.powi(squarings as i32), 0.0);
    let dim = a.nrows();
    let mut term = CMatrix::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
