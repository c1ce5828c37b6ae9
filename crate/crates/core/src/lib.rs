//! Exact simulation of iterative quantum state transfer on dipolar-coupled
//! spin chains: transfer to the chain end, the inverted protocol as a data
//! bus, and remote entanglement generation, with a brute-force full-space
//! engine for verification.

pub mod chain;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod oracle;
pub mod protocol;
pub mod trace;

pub use chain::{
    build_full_hamiltonian, build_subspace_hamiltonian, parse_chain_spec, ChainSpec,
    ExcitationBasis, HermitianOperator, Level,
};
pub use error::{Error, Result};
pub use evolution::{
    evolve_chain, propagator, vacuum_phase, ChainPropagator, ProtocolState, UnitaryOperator,
    VacuumPhase,
};
pub use protocol::{
    coherence_cn, end_gate_matrix, fit_scale, gate_params, invert_record, run_entangle,
    run_transfer, scan_tau, GateParams, IterationPoint, Source, TransferProtocol, TransferRecord,
};
