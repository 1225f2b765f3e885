//! Cross-module checks: spectra feed entanglement, SDRG and qubism consistently.

use std::f64::consts::LN_2;

use rainbow_core::continuum::slater_overlap;
use rainbow_core::entanglement::{brute_force_block_entropy, correlation_matrix, renyi_entropies};
use rainbow_core::lattice::build_rainbow_profile;
use rainbow_core::qubism::{schmidt_rank, slater_amplitudes};
use rainbow_core::sdrg::{bond_state_orbitals, sdrg_entropy, sdrg_run_profile};
use rainbow_core::spectra::{diagonalize, occupied_orbitals};

fn ground(half_len: usize, alpha: f64) -> nalgebra::DMatrix<f64> {
    let p = build_rainbow_profile(half_len, alpha).unwrap();
    occupied_orbitals(&diagonalize(&p.hopping_matrix()).unwrap()).unwrap()
}

#[test]
fn sdrg_state_approximates_strong_rainbow() {
    let p = build_rainbow_profile(10, 0.01).unwrap();
    let bonds = sdrg_run_profile(&p).unwrap();
    let approx = bond_state_orbitals(&bonds, 20).unwrap();
    let exact = ground(10, 0.01);
    assert!(slater_overlap(&approx, &exact).unwrap().value > 0.99);
    let weak = bond_state_orbitals(&sdrg_run_profile(&build_rainbow_profile(10, 0.5).unwrap()).unwrap(), 20).unwrap();
    assert!(slater_overlap(&weak, &ground(10, 0.5)).unwrap().value < 0.9);
}

#[test]
fn sdrg_entropy_matches_bond_state_correlations() {
    let bonds = sdrg_run_profile(&build_rainbow_profile(6, 0.1).unwrap()).unwrap();
    let occ = bond_state_orbitals(&bonds, 12).unwrap();
    for l in 1..12 {
        let block: Vec<usize> = (0..l).collect();
        let s = renyi_entropies(&correlation_matrix(&occ, &block).unwrap(), &[1.0]).unwrap()[0];
        assert!((s - sdrg_entropy(&bonds, &block)).abs() < 1e-10, "l={l}");
    }
    assert!((sdrg_entropy(&bonds, &(0..6).collect::<Vec<_>>()) - 6.0 * LN_2).abs() < 1e-12);
}

#[test]
fn amplitudes_and_correlations_agree() {
    let occ = ground(5, 0.3);
    let amps = slater_amplitudes(&occ, 10).unwrap();
    for l in 1..10 {
        let block: Vec<usize> = (0..l).collect();
        let from_c = renyi_entropies(&correlation_matrix(&occ, &block).unwrap(), &[1.0, 2.0]).unwrap();
        let from_amps = brute_force_block_entropy(&amps, &block, &[1.0, 2.0]).unwrap();
        for (a, b) in from_c.iter().zip(&from_amps) {
            assert!((a - b).abs() < 1e-10, "l={l}: {a} vs {b}");
        }
    }
    assert_eq!(schmidt_rank(&amps, 2).unwrap(), 4);
}
