mod common;

use common::*;
use proptest::prelude::*;
use spinbus::{build_full_hamiltonian, build_subspace_hamiltonian, ChainSpec};
use std::f64::consts::PI;

fn single_excitation_block(full: &CMatrix, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |a, b| full[(1 << (n - 1 - a), 1 << (n - 1 - b))])
}

#[test]
fn fixture_subchain_matches_pauli_expansion() {
    let spec = fixture_spec();
    let built = build_full_hamiltonian(&spec, &[1, 2, 3], false).unwrap();
    let literal = kron_hamiltonian(&spec, &[1, 2, 3], false);
    assert!(max_abs_diff(built.matrix(), &literal) <= 1e-9);
    // Relative to entries of size ~5e3 rad/s this is ~1e-13.
    let scale = literal.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(max_abs_diff(built.matrix(), &literal) / scale <= 1e-15);
}

#[test]
fn full_chain_with_shifts_matches_pauli_expansion() {
    let spec = fixture_spec();
    let built = build_full_hamiltonian(&spec, &[1, 2, 3, 4], true).unwrap();
    let literal = kron_hamiltonian(&spec, &[1, 2, 3, 4], true);
    assert!(max_abs_diff(built.matrix(), &literal) <= 1e-9);
}

#[test]
fn non_contiguous_spin_set() {
    let spec = fixture_spec();
    let built = build_full_hamiltonian(&spec, &[4, 2], false).unwrap();
    let literal = kron_hamiltonian(&spec, &[2, 4], false);
    assert!(max_abs_diff(built.matrix(), &literal) <= 1e-9);
}

#[test]
fn fixture_subspace_is_projection() {
    let spec = fixture_spec();
    let full = build_full_hamiltonian(&spec, &[1, 2, 3], false).unwrap();
    let (sub, e0) = build_subspace_hamiltonian(&spec).unwrap();
    let block = single_excitation_block(full.matrix(), 3);
    assert!(max_abs_diff(sub.matrix(), &block) <= 1e-12);
    assert!((e0 - full.matrix()[(0, 0)].re).abs() <= 1e-12);
    assert!((e0 - PI * (-1233.7 - 149.4 - 716.0)).abs() <= 1e-9);
}

fn spec_strategy(max_spins: usize) -> impl Strategy<Value = ChainSpec> {
    (2..=max_spins).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(-2000.0..2000.0f64, pairs),
            0.1e-3..5e-3f64,
        )
            .prop_map(|(n, values, tau)| {
                let mut it = values.into_iter();
                let mut couplings = Vec::new();
                for j in 1..=n {
                    for k in (j + 1)..=n {
                        couplings.push(((j, k), it.next().unwrap()));
                    }
                }
                ChainSpec::new(n, couplings, tau).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hermitian_and_vacuum_eigenstate(spec in spec_strategy(6)) {
        let spins: Vec<usize> = (1..=spec.n_spins()).collect();
        let h = build_full_hamiltonian(&spec, &spins, false).unwrap();
        let m = h.matrix();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                prop_assert!((m[(i, j)] - m[(j, i)].conj()).norm() <= 1e-12);
            }
        }
        let total: f64 = spec.couplings().map(|(_, d)| d).sum();
        let tol = 1e-12 * m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!((m[(0, 0)].re - PI * total).abs() <= tol);
        prop_assert!(m.column(0).iter().skip(1).all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn excitation_number_is_conserved(spec in spec_strategy(6)) {
        let spins: Vec<usize> = (1..=spec.n_spins()).collect();
        let h = build_full_hamiltonian(&spec, &spins, false).unwrap();
        let m = h.matrix();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                if (i as u32).count_ones() != (j as u32).count_ones() {
                    prop_assert!(m[(i, j)].norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn subspace_equals_sector_projection(spec in spec_strategy(8)) {
        let m = spec.n_spins() - 1;
        let spins: Vec<usize> = (1..=m).collect();
        let full = build_full_hamiltonian(&spec, &spins, false).unwrap();
        let (sub, e0) = build_subspace_hamiltonian(&spec).unwrap();
        // 1e-12 relative to the largest entry; sums of ~1e4 rad/s terms differ by an ulp.
        let tol = 1e-12 * full.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(max_abs_diff(sub.matrix(), &single_excitation_block(full.matrix(), m)) <= tol);
        prop_assert!((e0 - full.matrix()[(0, 0)].re).abs() <= tol);
    }
}
