//! The iterative end-gate protocol.
//!
//! Each iteration evolves the chain with `U_tau (x) I_N` and then applies a
//! two-spin gate `W(c, d)` on spins `N-1` and `N` that folds the amplitude
//! just delivered to `N-1` onto `N`. After `n` iterations the amplitude on
//! `|N>` is `sqrt(p_n)` with `p_n` nondecreasing; inverting the recorded
//! sequence turns the chain into a data bus from spin `N` back to the source.

mod analysis;
mod inverse;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{CMatrix, ChainSpec};
use crate::error::{Error, Result};
use crate::evolution::{ChainPropagator, ProtocolState, UnitaryOperator, VacuumPhase};

pub use analysis::{coherence_cn, fit_scale, scan_tau, with_coherence, TauScan};
pub use inverse::{invert_record, ForwardProtocol, InverseProtocol};

/// Below this `p_n` the gate formulas would divide by ~0; the identity gate is used instead.
pub const GATE_EPSILON: f64 = 1e-20;
/// `|c|^2 + |d|^2 = 1` tolerance.
pub const GATE_NORM_TOL: f64 = 1e-10;
/// Allowed overshoot of `p_n` above 1 before a run is declared broken.
pub const PROBABILITY_SLACK: f64 = 1e-9;
/// Bound on `|A_{N-1,n}|` after the end gate.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Tolerance on `|A_{N,n}|^2 = p_n`.
pub const TARGET_TOL: f64 = 1e-9;

/// Parameters of one end gate `W(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    c: Complex64,
    d: Complex64,
}

impl GateParams {
    pub fn new(c: Complex64, d: Complex64) -> Result<Self> {
        let norm = c.norm_sqr() + d.norm_sqr();
        if (norm - 1.0).abs() > GATE_NORM_TOL {
            return Err(Error::Contract(format!(
                "gate parameters not normalized: |c|^2 + |d|^2 = {norm}"
            )));
        }
        Ok(Self { c, d })
    }

    pub fn identity() -> Self {
        Self {
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn d(&self) -> Complex64 {
        self.d
    }

    /// Applies `W` to the `(|N-1>, |N>)` slots of a vacuum + single-excitation vector.
    ///
    /// In the two-spin basis `|N-1>` is `|10>` and `|N>` is `|01>`.
    pub(crate) fn apply(&self, amps: &mut DVector<Complex64>) {
        let n = amps.len() - 1;
        let (x10, x01) = (amps[n - 1], amps[n]);
        amps[n] = self.d.conj() * x01 + self.c.conj() * x10;
        amps[n - 1] = -self.c * x01 + self.d * x10;
    }

    /// Applies `W^dagger` to the same slots.
    pub(crate) fn apply_adjoint(&self, amps: &mut DVector<Complex64>) {
        let n = amps.len() - 1;
        let (x10, x01) = (amps[n - 1], amps[n]);
        amps[n] = self.d * x01 - self.c.conj() * x10;
        amps[n - 1] = self.c * x01 + self.d.conj() * x10;
    }
}

/// The 4x4 matrix of `W(c, d)` in the basis `|00>, |01>, |10>, |11>` of spins `(N-1, N)`.
pub fn end_gate_matrix(g: &GateParams) -> UnitaryOperator {
    let one = Complex64::new(1.0, 0.0);
    let mut w = CMatrix::zeros(4, 4);
    w[(0, 0)] = one;
    w[(1, 1)] = g.d.conj();
    w[(1, 2)] = g.c.conj();
    w[(2, 1)] = -g.c;
    w[(2, 2)] = g.d;
    w[(3, 3)] = one;
    UnitaryOperator::from_trusted(w)
}

/// Gate for the next iteration from the previous probability `p_prev`, the
/// amplitude `a = <N-1| U_tau (x) I |psi_{n-1}>` and the vacuum phase.
///
/// Returns `(W(c_n, d_n), p_n)` with `p_n = p_prev + |a|^2`,
/// `d_n = e^{i theta} sqrt(p_prev / p_n)` and `c_n = a / sqrt(p_n)`.
pub fn gate_params(p_prev: f64, a: Complex64, theta: VacuumPhase) -> Result<(GateParams, f64)> {
    gate_params_with_epsilon(p_prev, a, theta, GATE_EPSILON)
}

pub fn gate_params_with_epsilon(
    p_prev: f64,
    a: Complex64,
    theta: VacuumPhase,
    epsilon: f64,
) -> Result<(GateParams, f64)> {
    if !(0.0..=1.0 + PROBABILITY_SLACK).contains(&p_prev) {
        return Err(Error::Contract(format!("previous probability {p_prev} outside [0, 1]")));
    }
    let p = p_prev + a.norm_sqr();
    if p > 1.0 + PROBABILITY_SLACK {
        return Err(Error::invariant(
            "probability bound",
            format!("p_n = {p} exceeds 1"),
        ));
    }
    if p < epsilon {
        return Ok((GateParams::identity(), p_prev));
    }
    let root = p.sqrt();
    let d = theta.factor() * (p_prev.sqrt() / root);
    let c = a / root;
    Ok((GateParams::new(c, d)?, p))
}

/// Where the protocol input lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Transfer from (or, inverted, delivery to) site `j`.
    Site(usize),
    /// Entangling target `(|j> + |k>) / sqrt(2)`.
    Pair(usize, usize),
}

impl Source {
    pub fn initial_state(&self, n_spins: usize) -> Result<ProtocolState> {
        match *self {
            Source::Site(j) => ProtocolState::site(n_spins, j),
            Source::Pair(j, k) => ProtocolState::pair(n_spins, j, k),
        }
    }
}

/// State of the protocol after iteration `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationPoint {
    pub n: usize,
    pub p: f64,
    /// `[vacuum, A_1, ..., A_N]`.
    pub amplitudes: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<f64>,
}

impl IterationPoint {
    /// `A_{k,n}` for site `k` (1-based).
    pub fn site_amplitude(&self, k: usize) -> Complex64 {
        self.amplitudes[k]
    }
}

/// A completed (or in-progress) run: the gate history that defines `T_n`
/// plus the per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub spec: ChainSpec,
    pub source: Source,
    pub theta: f64,
    /// `p_0`, the initial weight already on `|N>`.
    pub p0: f64,
    pub gates: Vec<GateParams>,
    pub trace: Vec<IterationPoint>,
}

impl TransferRecord {
    pub fn iterations(&self) -> usize {
        self.gates.len()
    }

    pub fn vacuum_phase(&self) -> VacuumPhase {
        VacuumPhase::new(self.theta)
    }

    /// `p_n` after the last iteration, or `p_0` for an empty record.
    pub fn final_p(&self) -> f64 {
        self.trace.last().map_or(self.p0, |pt| pt.p)
    }

    pub fn p_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|pt| pt.p).collect()
    }

    pub fn initial_state(&self) -> Result<ProtocolState> {
        self.source.initial_state(self.spec.n_spins())
    }

    /// Spin `N`'s qubit `(vacuum, |N>)` amplitudes after running the recorded
    /// `T_n` on `alpha |0> + beta |j>`. With `phase_corrected` the known
    /// `e^{i n theta}` is removed from the vacuum amplitude.
    pub fn output_qubit(
        &self,
        alpha: Complex64,
        beta: Complex64,
        phase_corrected: bool,
    ) -> Result<(Complex64, Complex64)> {
        let Source::Site(j) = self.source else {
            return Err(Error::Unsupported("output qubit needs a single-site source".into()));
        };
        let n_spins = self.spec.n_spins();
        let input = ProtocolState::qubit_on_site(n_spins, j, alpha, beta)?;
        let out = ForwardProtocol::from_record(self)?.apply(&input)?;
        let mut vacuum = out.vacuum_amplitude();
        if phase_corrected {
            vacuum *= self.vacuum_phase().accumulated(self.iterations()).conj();
        }
        Ok((vacuum, out.site_amplitude(n_spins)))
    }
}

/// Runs iterations on the subspace engine.
#[derive(Debug, Clone)]
pub struct TransferProtocol {
    propagator: ChainPropagator,
    epsilon: f64,
}

impl TransferProtocol {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        Ok(Self {
            propagator: ChainPropagator::new(spec)?,
            epsilon: GATE_EPSILON,
        })
    }

    /// Threshold on `p_n` below which the identity gate is emitted.
    pub fn with_gate_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn propagator(&self) -> &ChainPropagator {
        &self.propagator
    }

    /// Initial state and empty record for `source`.
    pub fn start(&self, spec: &ChainSpec, source: Source) -> Result<(ProtocolState, TransferRecord)> {
        let n = spec.n_spins();
        if n != self.propagator.n_spins() {
            return Err(Error::Shape {
                expected: self.propagator.n_spins(),
                found: n,
            });
        }
        let state = match source {
            Source::Site(j) if j == n => {
                return Err(Error::InvalidSite(format!(
                    "source {j} is already the target spin"
                )))
            }
            other => other.initial_state(n)?,
        };
        let record = TransferRecord {
            spec: spec.clone(),
            source,
            theta: self.propagator.theta().theta(),
            p0: state.site_amplitude(n).norm_sqr(),
            gates: Vec::new(),
            trace: Vec::new(),
        };
        Ok((state, record))
    }

    /// One `Q_n = [I (x) W(c_n, d_n)] [U_tau (x) I_N]`, appending to `record`.
    pub fn iterate(
        &self,
        state: &ProtocolState,
        record: &mut TransferRecord,
    ) -> Result<(ProtocolState, IterationPoint)> {
        let n_spins = self.propagator.n_spins();
        if record.spec.n_spins() != n_spins {
            return Err(Error::Shape {
                expected: n_spins,
                found: record.spec.n_spins(),
            });
        }
        let mut next = self.propagator.evolve(state)?;
        let a = next.site_amplitude(n_spins - 1);
        let (gate, p) = gate_params_with_epsilon(
            record.final_p(),
            a,
            self.propagator.theta(),
            self.epsilon,
        )?;
        gate.apply(next.amplitudes_mut());

        let residual = next.site_amplitude(n_spins - 1).norm();
        if residual > RESIDUAL_TOL {
            return Err(Error::invariant(
                "end-site residual",
                format!("|A_(N-1)| = {residual:e} after iteration {}", record.iterations() + 1),
            ));
        }
        let target = next.site_amplitude(n_spins).norm_sqr();
        if (target - p).abs() > TARGET_TOL {
            return Err(Error::invariant(
                "target amplitude",
                format!("|A_N|^2 = {target} but p_n = {p}"),
            ));
        }
        let norm = next.norm();
        if (norm - 1.0).abs() > crate::evolution::NORM_TOL {
            return Err(Error::invariant("norm", format!("state norm drifted to {norm}")));
        }

        let point = IterationPoint {
            n: record.iterations() + 1,
            p,
            amplitudes: next.amplitudes().iter().copied().collect(),
            coherence: None,
        };
        record.gates.push(gate);
        record.trace.push(point.clone());
        Ok((next, point))
    }

    pub fn run(&self, spec: &ChainSpec, source: Source, n_iter: usize) -> Result<TransferRecord> {
        if n_iter == 0 {
            return Err(Error::Contract("at least one iteration is required".into()));
        }
        let (mut state, mut record) = self.start(spec, source)?;
        for _ in 0..n_iter {
            state = self.iterate(&state, &mut record)?.0;
        }
        Ok(record)
    }
}

/// Transfers `|j>` towards `|N>` for `n_iter` iterations.
pub fn run_transfer(spec: &ChainSpec, source: usize, n_iter: usize) -> Result<TransferRecord> {
    TransferProtocol::new(spec)?.run(spec, Source::Site(source), n_iter)
}

/// Runs the protocol on `(|j> + |k>) / sqrt(2)`; the inverted record then
/// generates that entangled state from `|N>`.
pub fn run_entangle(spec: &ChainSpec, j: usize, k: usize, n_iter: usize) -> Result<TransferRecord> {
    let n = spec.n_spins();
    for site in [j, k] {
        if site == 0 || site > n {
            return Err(Error::InvalidSite(format!("site {site} outside 1..={n}")));
        }
    }
    if j == k {
        return Err(Error::InvalidSite(format!("pair needs distinct sites, got {j},{k}")));
    }
    TransferProtocol::new(spec)?.run(spec, Source::Pair(j, k), n_iter)
}
