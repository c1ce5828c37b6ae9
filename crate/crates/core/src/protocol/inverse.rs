//! Replaying a recorded gate sequence forward (`T_n`) or backward (`T_n^{-1}`).

use crate::error::{Error, Result};
use crate::evolution::{ChainPropagator, ProtocolState, VacuumPhase};

use super::{GateParams, TransferRecord};

/// `T_n = Q_n ... Q_1` rebuilt from a record's gates.
#[derive(Debug, Clone)]
pub struct ForwardProtocol {
    propagator: ChainPropagator,
    gates: Vec<GateParams>,
}

impl ForwardProtocol {
    pub fn from_record(record: &TransferRecord) -> Result<Self> {
        Ok(Self {
            propagator: ChainPropagator::new(&record.spec)?,
            gates: record.gates.clone(),
        })
    }

    pub fn iterations(&self) -> usize {
        self.gates.len()
    }

    /// `T_m` for the first `m` recorded iterations.
    pub fn truncated(&self, m: usize) -> Self {
        Self {
            propagator: self.propagator.clone(),
            gates: self.gates[..m.min(self.gates.len())].to_vec(),
        }
    }

    pub fn apply(&self, state: &ProtocolState) -> Result<ProtocolState> {
        let mut out = state.clone();
        for gate in &self.gates {
            out = self.propagator.evolve(&out)?;
            gate.apply(out.amplitudes_mut());
        }
        Ok(out)
    }

    pub fn inverse(&self) -> InverseProtocol {
        InverseProtocol {
            backward: self.propagator.inverse(),
            theta: self.propagator.theta(),
            gates: self.gates.clone(),
        }
    }
}

/// `T_n^{-1} = Q_1^{-1} ... Q_n^{-1}`, each `Q^{-1}` being `W^dagger`
/// followed by evolution for `-tau`.
#[derive(Debug, Clone)]
pub struct InverseProtocol {
    backward: ChainPropagator,
    theta: VacuumPhase,
    /// Forward order; applied last-to-first.
    gates: Vec<GateParams>,
}

impl InverseProtocol {
    pub fn iterations(&self) -> usize {
        self.gates.len()
    }

    /// Forward vacuum phase; the inverse removes `e^{i theta}` per iteration.
    pub fn theta(&self) -> VacuumPhase {
        self.theta
    }

    /// Gates in application order, each to be applied as `W^dagger`.
    pub fn steps(&self) -> impl Iterator<Item = &GateParams> + '_ {
        self.gates.iter().rev()
    }

    /// Inverse of `T_m` for the first `m` forward iterations.
    pub fn truncated(&self, m: usize) -> Self {
        Self {
            backward: self.backward.clone(),
            theta: self.theta,
            gates: self.gates[..m.min(self.gates.len())].to_vec(),
        }
    }

    pub fn apply(&self, state: &ProtocolState) -> Result<ProtocolState> {
        if state.n_spins() != self.backward.n_spins() {
            return Err(Error::Shape {
                expected: self.backward.n_spins() + 1,
                found: state.n_spins() + 1,
            });
        }
        let mut out = state.clone();
        for gate in self.steps() {
            gate.apply_adjoint(out.amplitudes_mut());
            out = self.backward.evolve(&out)?;
        }
        Ok(out)
    }

    /// `|<target| T^{-1} |N>|^2` for the record's initial state as target.
    pub fn delivery_fidelity(&self, target: &ProtocolState) -> Result<f64> {
        let n = self.backward.n_spins();
        let delivered = self.apply(&ProtocolState::site(n, n)?)?;
        Ok(target.overlap(&delivered).norm_sqr())
    }
}

/// The operator sequence that undoes `record`: applied to `|N>` it reproduces
/// the record's input with fidelity `p_n`.
pub fn invert_record(record: &TransferRecord) -> Result<InverseProtocol> {
    Ok(ForwardProtocol::from_record(record)?.inverse())
}
