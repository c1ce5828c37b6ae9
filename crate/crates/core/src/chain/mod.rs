//! Spin-chain description and the dipolar Hamiltonians built from it.
//!
//! Conventions used everywhere in the crate:
//!
//! * `|0>` is spin up, the `+1` eigenstate of `sigma_z`; an "excitation" is a
//!   spin pointing down (bit value 1).
//! * Full-space basis states are indexed with the lowest-numbered spin of the
//!   spin set as the most significant bit, so for four spins `|1000>` (spin 1
//!   flipped) has index 8.
//! * Couplings and shifts are in Hz, times in seconds and Hamiltonians in
//!   rad/s. The `pi` prefactors are part of the matrix, so a propagator is
//!   always `exp(-i tau H)`.

mod config;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use config::parse_chain_spec;

pub type CMatrix = DMatrix<Complex64>;

/// Largest spin set the dense full-space builders accept unless configured otherwise.
pub const DEFAULT_FULL_SPACE_CAP: usize = 14;

/// Elementwise tolerance for `H == H^dagger`, relative to the largest entry when that exceeds 1.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A dipolar-coupled chain of `n_spins` spin-1/2 nuclei.
///
/// Couplings among spins `1..N-1` drive the protocol and must all be present.
/// Couplings that involve spin `N` are optional; they are kept for the
/// full-space builders but the protocol propagator never sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    n_spins: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    shifts: Option<Vec<f64>>,
    tau: f64,
    tau_ms: f64,
    full_space_cap: usize,
}

impl ChainSpec {
    /// Builds a validated spec. Pair keys may be given in either order.
    pub fn new<I>(n_spins: usize, couplings: I, tau: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        Self::build(n_spins, couplings, tau, tau * 1e3)
    }

    pub(crate) fn build<I>(n_spins: usize, couplings: I, tau: f64, tau_ms: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        if n_spins < 2 {
            return Err(Error::Config(format!("a chain needs at least 2 spins, got {n_spins}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Config(format!("evolution time must be positive, got {tau}")));
        }
        let mut table = BTreeMap::new();
        for ((a, b), value) in couplings {
            let (j, k) = (a.min(b), a.max(b));
            if j == k || j == 0 || k > n_spins {
                return Err(Error::Config(format!(
                    "coupling ({a},{b}) is not a pair of distinct spins in 1..={n_spins}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Config(format!("coupling ({j},{k}) is not finite")));
            }
            if table.insert((j, k), value).is_some() {
                return Err(Error::Config(format!("coupling ({j},{k}) given twice")));
            }
        }
        for j in 1..n_spins {
            for k in (j + 1)..n_spins {
                if !table.contains_key(&(j, k)) {
                    return Err(Error::Config(format!(
                        "missing coupling ({j},{k}) inside the transfer subchain"
                    )));
                }
            }
        }
        Ok(Self {
            n_spins,
            couplings: table,
            shifts: None,
            tau,
            tau_ms,
            full_space_cap: DEFAULT_FULL_SPACE_CAP,
        })
    }

    /// Attaches per-spin chemical shifts (Hz), one per spin.
    pub fn with_shifts(mut self, shifts: Vec<f64>) -> Result<Self> {
        if shifts.len() != self.n_spins {
            return Err(Error::Config(format!(
                "expected {} chemical shifts, got {}",
                self.n_spins,
                shifts.len()
            )));
        }
        if shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("chemical shifts must be finite".into()));
        }
        self.shifts = Some(shifts);
        Ok(self)
    }

    pub fn with_full_space_cap(mut self, cap: usize) -> Self {
        self.full_space_cap = cap;
        self
    }

    /// Same chain with a different evolution time (seconds).
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Config(format!("evolution time must be positive, got {tau}")));
        }
        Ok(Self {
            tau,
            tau_ms: tau * 1e3,
            ..self.clone()
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Symmetric lookup: `coupling(k, j) == coupling(j, k)`.
    pub fn coupling(&self, j: usize, k: usize) -> Option<f64> {
        self.couplings.get(&(j.min(k), j.max(k))).copied()
    }

    /// Stored couplings as `((j, k), D_jk)` with `j < k`, in ascending order.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&pair, &d)| (pair, d))
    }

    pub fn shifts(&self) -> Option<&[f64]> {
        self.shifts.as_deref()
    }

    /// Evolution time per iteration in seconds.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_ms(&self) -> f64 {
        self.tau_ms
    }

    pub fn full_space_cap(&self) -> usize {
        self.full_space_cap
    }

    /// Energy of the all-up state of spins `1..N-1`: `pi * sum D_jk` over the subchain.
    pub fn vacuum_energy(&self) -> f64 {
        let m = self.n_spins - 1;
        PI * self
            .couplings()
            .filter(|&((_, k), _)| k <= m)
            .map(|(_, d)| d)
            .sum::<f64>()
    }
}

/// Dense Hermitian matrix in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let n = matrix.nrows();
        for i in 0..n {
            for j in i..n {
                let gap = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if gap > HERMITIAN_TOL * scale {
                    return Err(Error::Contract(format!(
                        "matrix is not Hermitian at ({i},{j}): |h_ij - conj(h_ji)| = {gap:e}"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// A level of the (vacuum + single excitation) representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Vacuum,
    /// Spin `j` (1-based) flipped, every other spin up.
    Site(usize),
}

/// Index map between [`Level`]s and vector slots: slot 0 is the vacuum,
/// slot `j` is site `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExcitationBasis {
    site_count: usize,
}

impl ExcitationBasis {
    pub fn new(site_count: usize) -> Self {
        Self { site_count }
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn len(&self) -> usize {
        self.site_count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, level: Level) -> Option<usize> {
        match level {
            Level::Vacuum => Some(0),
            Level::Site(j) if (1..=self.site_count).contains(&j) => Some(j),
            Level::Site(_) => None,
        }
    }

    pub fn level(&self, index: usize) -> Option<Level> {
        match index {
            0 => Some(Level::Vacuum),
            j if j <= self.site_count => Some(Level::Site(j)),
            _ => None,
        }
    }
}

/// Full `2^n` Hamiltonian of the dipolar interaction among `spins`.
///
/// `spins` may be in any order; the basis always puts the lowest-numbered
/// spin in the most significant bit. With `include_shifts` the Zeeman term
/// `-pi sum nu_i sigma_z^i` is added, which requires shifts on the spec.
pub fn build_full_hamiltonian(
    spec: &ChainSpec,
    spins: &[usize],
    include_shifts: bool,
) -> Result<HermitianOperator> {
    let spins = normalize_spin_set(spec, spins)?;
    let n = spins.len();
    if n > spec.full_space_cap() {
        return Err(Error::Size {
            what: "full-space Hamiltonian",
            size: n,
            cap: spec.full_space_cap(),
        });
    }

    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let d = spec.coupling(spins[a], spins[b]).ok_or_else(|| {
                Error::Config(format!("missing coupling ({},{})", spins[a], spins[b]))
            })?;
            pairs.push((n - 1 - a, n - 1 - b, d));
        }
    }
    let zeeman: Vec<(usize, f64)> = if include_shifts {
        let shifts = spec
            .shifts()
            .ok_or_else(|| Error::Config("chemical shifts requested but none configured".into()))?;
        spins
            .iter()
            .enumerate()
            .map(|(pos, &s)| (n - 1 - pos, shifts[s - 1]))
            .collect()
    } else {
        Vec::new()
    };

    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    let z = |state: usize, bit: usize| if state >> bit & 1 == 0 { 1.0 } else { -1.0 };
    for state in 0..dim {
        let mut diag = 0.0;
        for &(ba, bb, d) in &pairs {
            diag += PI * d * z(state, ba) * z(state, bb);
            // (XX + YY)/2 swaps antiparallel pairs with unit amplitude.
            if (state >> ba & 1) != (state >> bb & 1) {
                let flipped = state ^ (1 << ba) ^ (1 << bb);
                h[(flipped, state)] += Complex64::new(-PI * d, 0.0);
            }
        }
        for &(bit, nu) in &zeeman {
            diag -= PI * nu * z(state, bit);
        }
        h[(state, state)] += Complex64::new(diag, 0.0);
    }
    HermitianOperator::new(h)
}

/// The subchain Hamiltonian restricted to one excitation on spins `1..N-1`,
/// together with the vacuum energy `pi * sum_{j<k<=N-1} D_jk`.
///
/// Row/column `i` of the matrix is site `i + 1`.
pub fn build_subspace_hamiltonian(spec: &ChainSpec) -> Result<(HermitianOperator, f64)> {
    let m = spec.n_spins() - 1;
    let vacuum = spec.vacuum_energy();
    let mut h = CMatrix::zeros(m, m);
    for j in 1..=m {
        let mut diag = vacuum;
        for k in 1..=m {
            if k == j {
                continue;
            }
            let d = spec
                .coupling(j, k)
                .ok_or_else(|| Error::Config(format!("missing coupling ({j},{k})")))?;
            // Flipping spin j reverses the sign of every zz bond it touches.
            diag -= 2.0 * PI * d;
            h[(j - 1, k - 1)] = Complex64::new(-PI * d, 0.0);
        }
        h[(j - 1, j - 1)] = Complex64::new(diag, 0.0);
    }
    Ok((HermitianOperator::new(h)?, vacuum))
}

fn normalize_spin_set(spec: &ChainSpec, spins: &[usize]) -> Result<Vec<usize>> {
    if spins.is_empty() {
        return Err(Error::Config("spin set is empty".into()));
    }
    let mut sorted = spins.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != spins.len() {
        return Err(Error::Config(format!("spin set {spins:?} repeats a spin")));
    }
    if let Some(&bad) = sorted.iter().find(|&&s| s == 0 || s > spec.n_spins()) {
        return Err(Error::InvalidSite(format!(
            "spin {bad} outside 1..={}",
            spec.n_spins()
        )));
    }
    Ok(sorted)
}
