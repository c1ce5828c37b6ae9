//! Exact propagators and state evolution in the vacuum + single-excitation
//! representation.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::chain::{build_subspace_hamiltonian, CMatrix, ChainSpec, HermitianOperator, Level};
use crate::error::{Error, Result};

/// Tolerance on `||U^dagger U - I||`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on the norm of a protocol state.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let residual = unitarity_residual(&matrix);
        if residual > UNITARY_TOL {
            return Err(Error::invariant(
                "unitarity",
                format!("||U^dagger U - I|| = {residual:e}"),
            ));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v
    }
}

/// Largest of the Frobenius norms of `U^dagger U - I` and `U U^dagger - I`.
/// The Frobenius norm bounds the operator norm from above.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let id = CMatrix::identity(u.nrows(), u.ncols());
    let left = (u.adjoint() * u - &id).norm();
    let right = (u * u.adjoint() - &id).norm();
    left.max(right)
}

/// `exp(-i tau H)` through the eigendecomposition `H = V diag(lambda) V^dagger`.
pub fn propagator(h: &HermitianOperator, tau: f64) -> Result<UnitaryOperator> {
    let eig = h
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let v = eig.eigenvectors;
    let mut scaled = v.clone();
    for (mut col, &lambda) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= Complex64::from_polar(1.0, -tau * lambda);
    }
    let u = scaled * v.adjoint();
    let residual = unitarity_residual(&u);
    if residual > UNITARY_TOL {
        return Err(Error::Numerical(format!(
            "propagator lost unitarity: residual {residual:e}"
        )));
    }
    Ok(UnitaryOperator::from_trusted(u))
}

/// Phase `theta` with `U_tau |vacuum> = e^{i theta} |vacuum>`, kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumPhase {
    theta: f64,
}

impl VacuumPhase {
    pub fn new(theta: f64) -> Self {
        Self {
            theta: wrap_phase(theta),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `e^{i theta}`.
    pub fn factor(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    /// `e^{i n theta}`, the vacuum phase after `n` iterations.
    pub fn accumulated(&self, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.theta * n as f64)
    }
}

/// Maps an angle to `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// `theta = -tau * pi * sum_{j<k<=N-1} D_jk`.
pub fn vacuum_phase(spec: &ChainSpec) -> VacuumPhase {
    VacuumPhase::new(-spec.tau() * spec.vacuum_energy())
}

/// Amplitudes over `{vacuum, |1>, ..., |N>}` for an `N`-spin chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    amplitudes: DVector<Complex64>,
}

impl ProtocolState {
    /// Validates length `N + 1` and unit norm.
    pub fn new(n_spins: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != n_spins + 1 {
            return Err(Error::Shape {
                expected: n_spins + 1,
                found: amplitudes.len(),
            });
        }
        let state = Self {
            amplitudes: DVector::from_vec(amplitudes),
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!("state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    pub(crate) fn from_vector(amplitudes: DVector<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn vacuum(n_spins: usize) -> Self {
        Self::basis(n_spins, 0)
    }

    /// `|j>`: spin `j` flipped.
    pub fn site(n_spins: usize, j: usize) -> Result<Self> {
        check_site(n_spins, j)?;
        Ok(Self::basis(n_spins, j))
    }

    /// `(|j> + |k>) / sqrt(2)`.
    pub fn pair(n_spins: usize, j: usize, k: usize) -> Result<Self> {
        check_site(n_spins, j)?;
        check_site(n_spins, k)?;
        if j == k {
            return Err(Error::InvalidSite(format!("pair needs two distinct sites, got {j},{k}")));
        }
        let mut amps = DVector::zeros(n_spins + 1);
        amps[j] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[k] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Ok(Self { amplitudes: amps })
    }

    /// `alpha |vacuum> + beta |j>`, normalized.
    pub fn qubit_on_site(n_spins: usize, j: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        check_site(n_spins, j)?;
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::Contract("alpha and beta are both zero".into()));
        }
        let mut amps = DVector::zeros(n_spins + 1);
        amps[0] = alpha / norm;
        amps[j] = beta / norm;
        Ok(Self { amplitudes: amps })
    }

    fn basis(n_spins: usize, index: usize) -> Self {
        let mut amps = DVector::zeros(n_spins + 1);
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes: amps }
    }

    pub fn n_spins(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitude(&self, level: Level) -> Complex64 {
        match level {
            Level::Vacuum => self.amplitudes[0],
            Level::Site(j) => self.amplitudes[j],
        }
    }

    pub fn vacuum_amplitude(&self) -> Complex64 {
        self.amplitudes[0]
    }

    /// `A_j`, the amplitude of `|j>` (1-based).
    pub fn site_amplitude(&self, j: usize) -> Complex64 {
        self.amplitudes[j]
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<Complex64> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &ProtocolState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

fn check_site(n_spins: usize, j: usize) -> Result<()> {
    if j == 0 || j > n_spins {
        return Err(Error::InvalidSite(format!("site {j} outside 1..={n_spins}")));
    }
    Ok(())
}

/// `U_tau (x) I_N` restricted to the vacuum and single-excitation sector.
///
/// Spin `N` is idle, so `|N>` sees the subchain vacuum and picks up
/// `e^{i theta}` just like the vacuum does.
#[derive(Debug, Clone)]
pub struct ChainPropagator {
    n_spins: usize,
    theta: VacuumPhase,
    subchain: UnitaryOperator,
}

impl ChainPropagator {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        Self::for_time(spec, spec.tau())
    }

    /// Propagator for an arbitrary evolution time (seconds); negative times run backward.
    pub fn for_time(spec: &ChainSpec, time: f64) -> Result<Self> {
        let (h, vacuum_energy) = build_subspace_hamiltonian(spec)?;
        Ok(Self {
            n_spins: spec.n_spins(),
            theta: VacuumPhase::new(-time * vacuum_energy),
            subchain: propagator(&h, time)?,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn theta(&self) -> VacuumPhase {
        self.theta
    }

    /// Single-excitation block over sites `1..N-1`.
    pub fn subchain(&self) -> &UnitaryOperator {
        &self.subchain
    }

    /// The inverse evolution `U_tau^dagger (x) I_N`.
    pub fn inverse(&self) -> Self {
        Self {
            n_spins: self.n_spins,
            theta: VacuumPhase::new(-self.theta.theta()),
            subchain: self.subchain.adjoint(),
        }
    }

    pub fn evolve(&self, state: &ProtocolState) -> Result<ProtocolState> {
        if state.n_spins() != self.n_spins {
            return Err(Error::Shape {
                expected: self.n_spins + 1,
                found: state.amplitudes.len(),
            });
        }
        let n = self.n_spins;
        let phase = self.theta.factor();
        let inner = state.amplitudes.rows(1, n - 1).into_owned();
        let moved = self.subchain.apply(&inner);
        let mut out = DVector::zeros(n + 1);
        out[0] = phase * state.amplitudes[0];
        out.rows_mut(1, n - 1).copy_from(&moved);
        out[n] = phase * state.amplitudes[n];
        Ok(ProtocolState::from_vector(out))
    }
}

/// One application of `U_tau (x) I_N` to `state`.
pub fn evolve_chain(state: &ProtocolState, spec: &ChainSpec) -> Result<ProtocolState> {
    ChainPropagator::new(spec)?.evolve(state)
}
