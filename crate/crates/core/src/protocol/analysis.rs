//! Quantities derived from runs: the coherence observable, scale fits and
//! evolution-time scans.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::oracle::{
    apply_single_spin_rotation, embed, preparation_unitary, site_index, Axis, FullSpaceEngine,
    FullState,
};

use super::{run_transfer, Source, TransferRecord};

/// Coherence `C_n = |Tr(2 |0000><1000| rho_n)|` for the four-spin entangling
/// scenario with target `(|1> + |4>) / sqrt(2)`.
///
/// `rho_n` is `|0000>` pushed through
/// `U_tot = e^{i pi sigma_y^1 / 4} P^dagger T_n^{-1} e^{i pi sigma_x^4 / 2}`,
/// evaluated in the full space. The `-|1111><1111|` part of the initial
/// deviation matrix is left out.
pub fn coherence_cn(record: &TransferRecord, n: usize) -> Result<f64> {
    let engine = coherence_engine(record)?;
    coherence_with(&engine, record, n)
}

/// Copy of `record` with `C_n` filled in for every iteration.
pub fn with_coherence(record: &TransferRecord) -> Result<TransferRecord> {
    let engine = coherence_engine(record)?;
    let mut out = record.clone();
    for point in &mut out.trace {
        point.coherence = Some(coherence_with(&engine, record, point.n)?);
    }
    Ok(out)
}

fn coherence_engine(record: &TransferRecord) -> Result<FullSpaceEngine> {
    let n_spins = record.spec.n_spins();
    let is_pair_14 = matches!(record.source, Source::Pair(1, 4) | Source::Pair(4, 1));
    if n_spins != 4 || !is_pair_14 {
        return Err(Error::Unsupported(format!(
            "coherence is defined for the 4-spin (1,4) entangling run, got {} spins with source {:?}",
            n_spins, record.source
        )));
    }
    FullSpaceEngine::new(&record.spec).map_err(|e| match e {
        Error::Size { .. } => Error::Unsupported(format!("full-space oracle unavailable: {e}")),
        other => other,
    })
}

fn coherence_with(engine: &FullSpaceEngine, record: &TransferRecord, n: usize) -> Result<f64> {
    if n == 0 || n > record.iterations() {
        return Err(Error::Contract(format!(
            "iteration {n} outside 1..={}",
            record.iterations()
        )));
    }
    let n_spins = record.spec.n_spins();
    let target = embed(&record.initial_state()?, n_spins)?;
    let prep_adjoint = preparation_unitary(&target).adjoint();

    let excited = apply_single_spin_rotation(&FullState::vacuum(n_spins), n_spins, Axis::X, PI / 2.0)?;
    let delivered = engine.apply_inverse(&excited, &record.gates[..n])?;
    let unprepared = delivered.apply_matrix(prep_adjoint.matrix())?;
    let read = apply_single_spin_rotation(&unprepared, 1, Axis::Y, PI / 4.0)?;

    let flipped = read.amplitude(site_index(n_spins, 1));
    let vacuum = read.amplitude(0);
    Ok(2.0 * (flipped * vacuum.conj()).norm())
}

/// Least-squares scale through the origin: `sum(model * data) / sum(model^2)`.
pub fn fit_scale(model: &[f64], data: &[f64]) -> Result<f64> {
    if model.len() != data.len() {
        return Err(Error::Shape {
            expected: model.len(),
            found: data.len(),
        });
    }
    let denom: f64 = model.iter().map(|m| m * m).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateFit("model is identically zero".into()));
    }
    let num: f64 = model.iter().zip(data).map(|(m, d)| m * d).sum();
    Ok(num / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauScan {
    /// `(tau in seconds, p_{n_iter})` in grid order.
    pub rows: Vec<(f64, f64)>,
    pub best_tau: f64,
    pub best_p: f64,
}

/// Runs the transfer for each `tau` in `grid` and reports the final
/// probabilities. Ties for the best value go to the smaller `tau`.
pub fn scan_tau(spec: &ChainSpec, source: usize, n_iter: usize, grid: &[f64]) -> Result<TauScan> {
    if grid.is_empty() {
        return Err(Error::Contract("tau grid is empty".into()));
    }
    let rows = grid
        .par_iter()
        .map(|&tau| {
            let p = run_transfer(&spec.with_tau(tau)?, source, n_iter)?.final_p();
            Ok((tau, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best_tau, best_p) = rows
        .iter()
        .copied()
        .reduce(|best, row| {
            if row.1 > best.1 || (row.1 == best.1 && row.0 < best.0) {
                row
            } else {
                best
            }
        })
        .expect("grid is nonempty");
    Ok(TauScan {
        rows,
        best_tau,
        best_p,
    })
}
