//! Brute-force `2^N` engine.
//!
//! Used to validate the subspace engine and to evaluate quantities that leave
//! the single-excitation sector (readout pulses, the coherence observable).
//! Bit ordering follows [`crate::chain`]: spin 1 is the most significant bit,
//! spin `N` the least significant, so `|j>` sits at index `1 << (N - j)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::chain::{build_full_hamiltonian, CMatrix, ChainSpec};
use crate::error::{Error, Result};
use crate::evolution::{propagator, ProtocolState, UnitaryOperator, NORM_TOL};
use crate::protocol::{end_gate_matrix, gate_params, GateParams, Source, TransferRecord};

/// Environment variable that overrides the full-space spin cap.
pub const ORACLE_CAP_ENV: &str = "SPINBUS_ORACLE_CAP";

/// Cap from [`ORACLE_CAP_ENV`] if set and valid, otherwise the spec's cap.
pub fn effective_cap(spec: &ChainSpec) -> usize {
    std::env::var(ORACLE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| spec.full_space_cap())
}

/// Index of `|j>` (spin `j` flipped) in an `n_spins` register.
pub fn site_index(n_spins: usize, j: usize) -> usize {
    1 << (n_spins - j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    n_spins: usize,
    amplitudes: DVector<Complex64>,
}

impl FullState {
    pub fn new(n_spins: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_spins {
            return Err(Error::Shape {
                expected: 1 << n_spins,
                found: amplitudes.len(),
            });
        }
        let state = Self {
            n_spins,
            amplitudes: DVector::from_vec(amplitudes),
        };
        let norm = state.amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!("full state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn basis(n_spins: usize, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(1 << n_spins);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { n_spins, amplitudes }
    }

    /// All spins up.
    pub fn vacuum(n_spins: usize) -> Self {
        Self::basis(n_spins, 0)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Norm of the part outside the vacuum and single-excitation sectors.
    pub fn leakage(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i.count_ones() > 1)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn apply_matrix(&self, m: &CMatrix) -> Result<Self> {
        if m.ncols() != self.amplitudes.len() || m.nrows() != self.amplitudes.len() {
            return Err(Error::Shape {
                expected: self.amplitudes.len(),
                found: m.ncols(),
            });
        }
        Ok(Self {
            n_spins: self.n_spins,
            amplitudes: m * &self.amplitudes,
        })
    }
}

/// Places a protocol state in the full register.
pub fn embed(state: &ProtocolState, cap: usize) -> Result<FullState> {
    let n = state.n_spins();
    if n > cap {
        return Err(Error::Size {
            what: "full-space state",
            size: n,
            cap,
        });
    }
    let mut amplitudes = DVector::zeros(1 << n);
    amplitudes[0] = state.vacuum_amplitude();
    for j in 1..=n {
        amplitudes[site_index(n, j)] = state.site_amplitude(j);
    }
    Ok(FullState { n_spins: n, amplitudes })
}

/// Reads the vacuum and single-excitation amplitudes back out. Whatever sits
/// in other sectors is dropped; check [`FullState::leakage`] when it matters.
pub fn project(state: &FullState) -> ProtocolState {
    let n = state.n_spins;
    let mut amps = DVector::zeros(n + 1);
    amps[0] = state.amplitudes[0];
    for j in 1..=n {
        amps[j] = state.amplitudes[site_index(n, j)];
    }
    ProtocolState::from_vector(amps)
}

/// `<a|b>`.
pub fn overlap(a: &FullState, b: &FullState) -> Result<Complex64> {
    if a.amplitudes.len() != b.amplitudes.len() {
        return Err(Error::Shape {
            expected: a.amplitudes.len(),
            found: b.amplitudes.len(),
        });
    }
    Ok(a.amplitudes.dotc(&b.amplitudes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Applies `exp(i angle sigma_axis)` to `spin` (1-based).
///
/// The exponent carries no factor 1/2, so `angle = pi/2` about `x` maps
/// `|0>` to `i|1>` and `angle = pi/4` about `y` is a quarter turn of the Bloch vector.
pub fn apply_single_spin_rotation(
    state: &FullState,
    spin: usize,
    axis: Axis,
    angle: f64,
) -> Result<FullState> {
    let n = state.n_spins;
    if spin == 0 || spin > n {
        return Err(Error::InvalidSite(format!("spin {spin} outside 1..={n}")));
    }
    let (cos, sin) = (angle.cos(), angle.sin());
    let i_sin = Complex64::new(0.0, sin);
    let cos = Complex64::new(cos, 0.0);
    // Rows/columns: (bit 0 = up, bit 1 = down).
    let m = match axis {
        Axis::X => [[cos, i_sin], [i_sin, cos]],
        Axis::Y => [[cos, Complex64::new(sin, 0.0)], [Complex64::new(-sin, 0.0), cos]],
        Axis::Z => [[cos + i_sin, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), cos - i_sin]],
    };
    let bit = 1usize << (n - spin);
    let mut out = state.amplitudes.clone();
    for i in 0..out.len() {
        if i & bit == 0 {
            let (up, down) = (state.amplitudes[i], state.amplitudes[i | bit]);
            out[i] = m[0][0] * up + m[0][1] * down;
            out[i | bit] = m[1][0] * up + m[1][1] * down;
        }
    }
    Ok(FullState {
        n_spins: n,
        amplitudes: out,
    })
}

/// Dense engine holding `exp(-i tau H_{1..N-1})` for one chain.
#[derive(Debug, Clone)]
pub struct FullSpaceEngine {
    n_spins: usize,
    subchain: UnitaryOperator,
}

impl FullSpaceEngine {
    /// Builds the engine, refusing chains larger than the effective cap.
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        Self::with_cap(spec, effective_cap(spec))
    }

    pub fn with_cap(spec: &ChainSpec, cap: usize) -> Result<Self> {
        let n = spec.n_spins();
        if n > cap {
            return Err(Error::Size {
                what: "full-space engine",
                size: n,
                cap,
            });
        }
        let spins: Vec<usize> = (1..n).collect();
        let h = build_full_hamiltonian(&spec.clone().with_full_space_cap(cap), &spins, false)?;
        Ok(Self {
            n_spins: n,
            subchain: propagator(&h, spec.tau())?,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// `exp(-i tau H)` on spins `1..N-1`, dimension `2^(N-1)`.
    pub fn subchain_propagator(&self) -> &UnitaryOperator {
        &self.subchain
    }

    fn check(&self, state: &FullState) -> Result<()> {
        if state.n_spins != self.n_spins {
            return Err(Error::Shape {
                expected: 1 << self.n_spins,
                found: state.amplitudes.len(),
            });
        }
        Ok(())
    }

    fn evolve_with(&self, state: &FullState, u: &CMatrix) -> Result<FullState> {
        self.check(state)?;
        let half = 1usize << (self.n_spins - 1);
        let mut out = DVector::zeros(state.amplitudes.len());
        for last in 0..2 {
            let slice = DVector::from_iterator(half, (0..half).map(|s| state.amplitudes[(s << 1) | last]));
            let moved = u * slice;
            for (s, z) in moved.iter().enumerate() {
                out[(s << 1) | last] = *z;
            }
        }
        Ok(FullState {
            n_spins: self.n_spins,
            amplitudes: out,
        })
    }

    /// `U_tau (x) I_2`.
    pub fn evolve(&self, state: &FullState) -> Result<FullState> {
        self.evolve_with(state, self.subchain.matrix())
    }

    /// `U_tau^dagger (x) I_2`.
    pub fn evolve_back(&self, state: &FullState) -> Result<FullState> {
        self.evolve_with(state, &self.subchain.matrix().adjoint())
    }

    fn gate_with(&self, state: &FullState, w: &CMatrix) -> Result<FullState> {
        self.check(state)?;
        let mut out = state.amplitudes.clone();
        for base in (0..out.len()).step_by(4) {
            let block = DVector::from_iterator(4, (0..4).map(|i| state.amplitudes[base + i]));
            let moved = w * block;
            for i in 0..4 {
                out[base + i] = moved[i];
            }
        }
        Ok(FullState {
            n_spins: self.n_spins,
            amplitudes: out,
        })
    }

    /// `I_{2^(N-2)} (x) W(c, d)`.
    pub fn apply_end_gate(&self, state: &FullState, gate: &GateParams) -> Result<FullState> {
        if self.n_spins < 2 {
            return Err(Error::Unsupported("end gate needs two spins".into()));
        }
        self.gate_with(state, end_gate_matrix(gate).matrix())
    }

    pub fn apply_end_gate_adjoint(&self, state: &FullState, gate: &GateParams) -> Result<FullState> {
        self.gate_with(state, &end_gate_matrix(gate).matrix().adjoint())
    }

    /// One protocol iteration `[I (x) W][U_tau (x) I_N]`.
    pub fn iterate(&self, state: &FullState, gate: &GateParams) -> Result<FullState> {
        self.apply_end_gate(&self.evolve(state)?, gate)
    }

    /// The inverse iteration `[U_tau^dagger (x) I_N][I (x) W^dagger]`.
    pub fn iterate_back(&self, state: &FullState, gate: &GateParams) -> Result<FullState> {
        self.evolve_back(&self.apply_end_gate_adjoint(state, gate)?)
    }

    /// The literal `2^N x 2^N` matrix of one iteration, assembled with
    /// Kronecker products. Only sensible for small chains.
    pub fn iteration_matrix(&self, gate: &GateParams) -> CMatrix {
        let n = self.n_spins;
        let id2 = CMatrix::identity(2, 2);
        let evolution = self.subchain.matrix().kronecker(&id2);
        let rest = 1usize << (n - 2);
        let gate = CMatrix::identity(rest, rest).kronecker(end_gate_matrix(gate).matrix());
        gate * evolution
    }

    /// Applies the recorded `T_m^{-1}` for the first `m` gates of `gates`.
    pub fn apply_inverse(&self, state: &FullState, gates: &[GateParams]) -> Result<FullState> {
        gates
            .iter()
            .rev()
            .try_fold(state.clone(), |s, g| self.iterate_back(&s, g))
    }

    /// Runs the protocol entirely in the full space, deriving every gate from
    /// full-space amplitudes. Returns the gates and the state after each iteration.
    pub fn run_protocol(&self, initial: &FullState, n_iter: usize, theta: crate::evolution::VacuumPhase) -> Result<FullRun> {
        self.check(initial)?;
        let n = self.n_spins;
        let target = site_index(n, n);
        let feeder = site_index(n, n - 1);
        let mut p = initial.amplitude(target).norm_sqr();
        let mut state = initial.clone();
        let mut run = FullRun {
            gates: Vec::with_capacity(n_iter),
            states: Vec::with_capacity(n_iter),
            probabilities: Vec::with_capacity(n_iter),
        };
        for _ in 0..n_iter {
            let evolved = self.evolve(&state)?;
            let (gate, p_next) = gate_params(p, evolved.amplitude(feeder), theta)?;
            state = self.apply_end_gate(&evolved, &gate)?;
            p = p_next;
            run.gates.push(gate);
            run.states.push(state.clone());
            run.probabilities.push(p);
        }
        Ok(run)
    }

    /// Vacuum phase read off the propagator's all-up diagonal element.
    pub fn vacuum_phase(&self) -> f64 {
        self.subchain.matrix()[(0, 0)].arg()
    }
}

#[derive(Debug, Clone)]
pub struct FullRun {
    pub gates: Vec<GateParams>,
    pub states: Vec<FullState>,
    pub probabilities: Vec<f64>,
}

/// One full-space iteration from scratch: builds the propagator for `spec`
/// and applies `[I (x) W(gate)][U_tau (x) I_N]`.
pub fn full_iterate(state: &FullState, spec: &ChainSpec, gate: &GateParams) -> Result<FullState> {
    FullSpaceEngine::new(spec)?.iterate(state, gate)
}

/// A unitary `P` with `P |0...0> = target`: a Householder reflection onto the
/// target column, times the target's phase at index 0.
pub fn preparation_unitary(target: &FullState) -> UnitaryOperator {
    let dim = target.amplitudes.len();
    let v0 = target.amplitudes[0];
    let phase = if v0.norm() > 0.0 { v0 / v0.norm() } else { Complex64::new(1.0, 0.0) };
    let rotated = target.amplitudes.map(|z| z * phase.conj());
    let mut u = rotated.clone();
    u[0] -= Complex64::new(1.0, 0.0);
    let norm = u.norm();
    let mut p = CMatrix::identity(dim, dim);
    if norm > 1e-15 {
        u /= Complex64::new(norm, 0.0);
        p -= (&u * u.adjoint()) * Complex64::new(2.0, 0.0);
    }
    UnitaryOperator::from_trusted(p * phase)
}

/// Largest per-amplitude gap between the engines over a run, plus leakage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineComparison {
    pub iterations: usize,
    pub max_amplitude_deviation: f64,
    pub max_gate_deviation: f64,
    pub max_leakage: f64,
}

impl EngineComparison {
    pub fn max_deviation(&self) -> f64 {
        self.max_amplitude_deviation
            .max(self.max_gate_deviation)
            .max(self.max_leakage)
    }
}

/// Runs the subspace record's source through [`FullSpaceEngine::run_protocol`]
/// and compares amplitudes and gates iteration by iteration.
pub fn compare_with_record(engine: &FullSpaceEngine, record: &TransferRecord) -> Result<EngineComparison> {
    let initial = embed(&record.initial_state()?, engine.n_spins())?;
    let run = engine.run_protocol(&initial, record.iterations(), record.vacuum_phase())?;
    let mut cmp = EngineComparison {
        iterations: record.iterations(),
        max_amplitude_deviation: 0.0,
        max_gate_deviation: 0.0,
        max_leakage: 0.0,
    };
    for ((point, full), (g_sub, g_full)) in record
        .trace
        .iter()
        .zip(&run.states)
        .zip(record.gates.iter().zip(&run.gates))
    {
        let projected = project(full);
        for (x, y) in projected.amplitudes().iter().zip(&point.amplitudes) {
            cmp.max_amplitude_deviation = cmp.max_amplitude_deviation.max((x - y).norm());
        }
        let dg = (g_sub.c() - g_full.c()).norm().max((g_sub.d() - g_full.d()).norm());
        cmp.max_gate_deviation = cmp.max_gate_deviation.max(dg);
        cmp.max_leakage = cmp.max_leakage.max(full.leakage());
    }
    Ok(cmp)
}

/// Convenience: full-space record of a source for the given spec.
pub fn full_initial_state(spec: &ChainSpec, source: Source) -> Result<FullState> {
    embed(&source.initial_state(spec.n_spins())?, spec.n_spins())
}
