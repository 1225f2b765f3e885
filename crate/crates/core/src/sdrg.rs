//! Strong-disorder renormalization of signed hopping chains.
//!
//! The strongest link is frozen into a two-site orbital and its neighbours are joined by
//! the second-order coupling `J̃ = −J_L J_R / J_max`. Magnitudes are carried as logarithms,
//! so chains whose couplings underflow `f64` still decimate correctly.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{site_label, CouplingProfile};

/// Relative tie tolerance on `ln |J|` when picking the strongest link.
pub const TIE_TOL: f64 = 1e-12;

/// A two-site orbital `(e_left + sign·e_right)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bond {
    pub left: usize,
    pub right: usize,
    /// `+1` for a positive frozen coupling, `−1` for a negative one.
    pub sign: i8,
}

/// A signed coupling stored as `sign · exp(ln_magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    pub ln_magnitude: f64,
    pub sign: i8,
    /// Direct `f64` value; `0.0` once it underflows.
    pub value: f64,
}

impl Coupling {
    pub fn from_value(value: f64) -> Result<Self> {
        if !value.is_finite() || value == 0.0 {
            return Err(Error::domain(format!("couplings must be finite and nonzero, got {value}")));
        }
        Ok(Self {
            ln_magnitude: value.abs().ln(),
            sign: if value > 0.0 { 1 } else { -1 },
            value,
        })
    }

    pub fn from_log(ln_magnitude: f64, sign: i8) -> Self {
        Self {
            ln_magnitude,
            sign: sign.signum(),
            value: sign.signum() as f64 * ln_magnitude.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveCoupling {
    pub left: usize,
    pub right: usize,
    pub coupling: Coupling,
}

/// One decimation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecimationStep {
    pub step: usize,
    /// The frozen link as `(left site, right site)`.
    pub link: (usize, usize),
    pub coupling: Coupling,
    /// `None` when the frozen link touched an end of the remaining chain.
    pub created: Option<EffectiveCoupling>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondList {
    pub sites: usize,
    pub bonds: Vec<Bond>,
    pub trace: Vec<DecimationStep>,
}

#[derive(Serialize)]
struct BondJson<'a> {
    #[serde(flatten)]
    bond: &'a Bond,
    left_label: f64,
    right_label: f64,
}

#[derive(Serialize)]
struct BondListJson<'a> {
    sites: usize,
    bonds: Vec<BondJson<'a>>,
    trace: &'a [DecimationStep],
}

impl BondList {
    /// Checks that every site belongs to exactly one bond.
    pub fn is_perfect_matching(&self) -> bool {
        let mut seen = vec![false; self.sites];
        for b in &self.bonds {
            if b.left >= b.right || b.right >= self.sites || seen[b.left] || seen[b.right] {
                return false;
            }
            seen[b.left] = true;
            seen[b.right] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// Bonds sorted by their left site, ignoring the order in which they were formed.
    pub fn canonical(&self) -> Vec<Bond> {
        let mut b = self.bonds.clone();
        b.sort_by_key(|b| b.left);
        b
    }

    /// JSON with half-odd site labels for even chains.
    pub fn to_json(&self) -> String {
        let half = self.sites / 2;
        let bonds = self
            .bonds
            .iter()
            .map(|bond| BondJson {
                bond,
                left_label: site_label(bond.left, half),
                right_label: site_label(bond.right, half),
            })
            .collect();
        serde_json::to_string_pretty(&BondListJson {
            sites: self.sites,
            bonds,
            trace: &self.trace,
        })
        .expect("bond lists serialize")
    }

    /// ASCII arcs, outermost bond on top.
    pub fn arc_diagram(&self) -> String {
        let mut bonds = self.bonds.clone();
        bonds.sort_by_key(|b| (std::cmp::Reverse(b.right - b.left), b.left));
        let mut out = String::new();
        for b in &bonds {
            let mut line = String::with_capacity(2 * self.sites + 2);
            line.push(if b.sign > 0 { '+' } else { '-' });
            line.push(' ');
            for c in 0..self.sites {
                let ch = if c == b.left || c == b.right {
                    '|'
                } else if c > b.left && c < b.right {
                    '_'
                } else {
                    ' '
                };
                line.push(ch);
                line.push(if c >= b.left && c < b.right { '_' } else { ' ' });
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push_str("  ");
        out.push_str(&"o ".repeat(self.sites));
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Link {
    left: usize,
    right: usize,
    coupling: Coupling,
}

/// Decimates a chain given by its nearest-neighbour couplings.
pub fn sdrg_run(couplings: &[f64]) -> Result<BondList> {
    let c = couplings.iter().map(|&j| Coupling::from_value(j)).collect::<Result<Vec<_>>>()?;
    sdrg_run_couplings(&c)
}

/// Decimates a rainbow profile with couplings taken in log form, so no link underflows.
pub fn sdrg_run_profile(profile: &CouplingProfile) -> Result<BondList> {
    let center = profile.half_len - 1;
    let c: Vec<Coupling> = (0..profile.sites() - 1)
        .map(|i| {
            let k = i.abs_diff(center);
            let ln = if k == 0 { 0.0 } else { -profile.h * (2 * k - 1) as f64 / 2.0 };
            Coupling::from_log(ln, 1)
        })
        .collect();
    sdrg_run_couplings(&c)
}

pub fn sdrg_run_couplings(couplings: &[Coupling]) -> Result<BondList> {
    if couplings.is_empty() {
        return Err(Error::domain("need at least one link"));
    }
    let sites = couplings.len() + 1;
    if sites % 2 == 1 {
        return Err(Error::domain(format!("{sites} sites cannot be fully paired")));
    }
    if let Some(bad) = couplings.iter().find(|c| !c.ln_magnitude.is_finite()) {
        return Err(Error::domain(format!("coupling magnitude must be finite and nonzero, got ln|J| = {}", bad.ln_magnitude)));
    }
    let mut chain: Vec<Link> = couplings
        .iter()
        .enumerate()
        .map(|(i, &coupling)| Link { left: i, right: i + 1, coupling })
        .collect();
    let mut bonds = Vec::with_capacity(sites / 2);
    let mut trace = Vec::with_capacity(sites / 2);
    while !chain.is_empty() {
        let best = chain
            .iter()
            .map(|l| l.coupling.ln_magnitude)
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = TIE_TOL * best.abs().max(1.0);
        let top: Vec<usize> = (0..chain.len())
            .filter(|&i| chain[i].coupling.ln_magnitude >= best - tol)
            .collect();
        if top.len() > 1 {
            return Err(Error::DegenerateCoupling {
                links: top.iter().map(|&i| (chain[i].left, chain[i].right)).collect(),
                magnitude: best.exp(),
            });
        }
        let k = top[0];
        let max = chain[k];
        bonds.push(Bond {
            left: max.left,
            right: max.right,
            sign: max.coupling.sign,
        });
        let created = if k > 0 && k + 1 < chain.len() {
            let (l, r) = (chain[k - 1].coupling, chain[k + 1].coupling);
            let coupling = Coupling {
                ln_magnitude: l.ln_magnitude + r.ln_magnitude - max.coupling.ln_magnitude,
                sign: -l.sign * r.sign * max.coupling.sign,
                value: -l.value * r.value / max.coupling.value,
            };
            Some(EffectiveCoupling {
                left: chain[k - 1].left,
                right: chain[k + 1].right,
                coupling,
            })
        } else {
            None
        };
        let lo = k.saturating_sub(1);
        let hi = (k + 2).min(chain.len());
        let replacement: Vec<Link> = created
            .iter()
            .map(|e| Link {
                left: e.left,
                right: e.right,
                coupling: e.coupling,
            })
            .collect();
        chain.splice(lo..hi, replacement);
        trace.push(DecimationStep {
            step: trace.len(),
            link: (max.left, max.right),
            coupling: max.coupling,
            created,
        });
    }
    Ok(BondList { sites, bonds, trace })
}

/// Bond `k = 1 … L` joins `∓(k − 1/2)` with sign `(−1)^{k+1}`.
pub fn rainbow_bonds(half_len: usize) -> BondList {
    let bonds = (1..=half_len)
        .map(|k| Bond {
            left: half_len - k,
            right: half_len + k - 1,
            sign: if k % 2 == 1 { 1 } else { -1 },
        })
        .collect();
    BondList {
        sites: 2 * half_len,
        bonds,
        trace: Vec::new(),
    }
}

/// One orbital `(e_i ± e_j)/√2` per bond, in bond order.
pub fn bond_state_orbitals(bonds: &BondList, dim: usize) -> Result<DMatrix<f64>> {
    if bonds.sites != dim || !bonds.is_perfect_matching() {
        return Err(Error::contract("bond list is not a perfect matching of the requested sites"));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(dim, bonds.bonds.len());
    for (c, b) in bonds.bonds.iter().enumerate() {
        m[(b.left, c)] = r;
        m[(b.right, c)] = r * b.sign as f64;
    }
    Ok(m)
}

/// `ln 2` per bond cut by the block boundary.
pub fn sdrg_entropy(bonds: &BondList, block: &[usize]) -> f64 {
    let mut inside = vec![false; bonds.sites];
    for &i in block {
        if i < bonds.sites {
            inside[i] = true;
        }
    }
    let cut = bonds.bonds.iter().filter(|b| inside[b.left] != inside[b.right]).count();
    cut as f64 * LN_2
}

/// A first-order rainbow orbital and how far it is from an eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeOrbital {
    pub k: usize,
    pub vector: DVector<f64>,
    /// Energy of the frozen bond, `−α^{2(k−1)}/2`.
    pub energy: f64,
    /// `‖Hψ − Eψ‖`.
    pub residual: f64,
}

/// The bond orbitals of the rainbow with `α`-weighted tails on the neighbouring sites.
pub fn perturbative_orbitals(half_len: usize, alpha: f64) -> Result<Vec<PerturbativeOrbital>> {
    if half_len == 0 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("need L ≥ 1 and α in [0, 1], got L={half_len}, α={alpha}")));
    }
    // built directly so that α = 0 gives the decoupled chain
    let couplings: Vec<f64> = (0..2 * half_len - 1)
        .map(|i| match i.abs_diff(half_len - 1) {
            0 => 1.0,
            k => alpha.powi(2 * k as i32 - 1),
        })
        .collect();
    let h = crate::lattice::HoppingMatrix::chain(&couplings);
    let dim = 2 * half_len;
    let bonds = rainbow_bonds(half_len);
    Ok(bonds
        .bonds
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let k = i + 1;
            let s = b.sign as f64;
            let mut v = DVector::zeros(dim);
            v[b.left] = 1.0;
            v[b.right] = s;
            if b.left > 0 {
                v[b.left - 1] = alpha;
            }
            if b.right + 1 < dim {
                v[b.right + 1] = s * alpha;
            }
            if k > 1 {
                v[b.left + 1] = alpha;
                v[b.right - 1] = s * alpha;
            }
            v /= v.norm();
            let energy = -0.5 * alpha.powi(2 * (k as i32 - 1));
            let hv = DVector::from_vec(h.apply(v.as_slice()));
            let residual = (hv - energy * &v).norm();
            PerturbativeOrbital { k, vector: v, energy, residual }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::slater_overlap;
    use crate::entanglement::{correlation_matrix, renyi_entropies};
    use crate::lattice::build_rainbow_profile;
    use crate::spectra::{diagonalize, occupied_orbitals};
    use proptest::prelude::*;

    #[test]
    fn single_link() {
        let b = sdrg_run(&[1.0]).unwrap();
        assert_eq!(b.bonds, vec![Bond { left: 0, right: 1, sign: 1 }]);
        assert_eq!(b.trace.len(), 1);
        assert!(b.trace[0].created.is_none());
        let orb = bond_state_orbitals(&b, 2).unwrap();
        assert!((orb[(0, 0)] - orb[(1, 0)]).abs() < 1e-16);
        assert_eq!(sdrg_run(&[-2.0]).unwrap().bonds[0].sign, -1);
    }

    #[test]
    fn rainbow_three() {
        let alpha: f64 = 0.1;
        let b = sdrg_run(&build_rainbow_profile(3, alpha).unwrap().couplings).unwrap();
        assert_eq!(
            b.bonds,
            vec![
                Bond { left: 2, right: 3, sign: 1 },
                Bond { left: 1, right: 4, sign: -1 },
                Bond { left: 0, right: 5, sign: 1 },
            ]
        );
        let e0 = b.trace[0].created.unwrap();
        assert_eq!((e0.left, e0.right), (1, 4));
        assert!((e0.coupling.value + alpha.powi(2)).abs() < 1e-15);
        // the second renormalization flips the sign back: −α³·α³/(−α²) = +α⁴
        let e1 = b.trace[1].created.unwrap();
        assert_eq!((e1.left, e1.right), (0, 5));
        assert!((e1.coupling.value - alpha.powi(4)).abs() < 1e-17);
        assert!(b.trace[2].created.is_none());
        assert!(b.is_perfect_matching());
        let json: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        assert_eq!(json["bonds"][0]["left_label"], -0.5);
        assert_eq!(json["bonds"][2]["right_label"], 2.5);
        assert_eq!(json["trace"][1]["created"]["coupling"]["sign"], 1);
    }

    #[test]
    fn errors() {
        match sdrg_run(&[1.0, 1.0, 1.0]) {
            Err(Error::DegenerateCoupling { links, .. }) => assert_eq!(links, vec![(0, 1), (1, 2), (2, 3)]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(sdrg_run(&[1.0, 0.5]), Err(Error::Domain(_))));
        assert!(matches!(sdrg_run(&[]), Err(Error::Domain(_))));
        assert!(matches!(sdrg_run(&[1.0, 0.0, 1.0]), Err(Error::Domain(_))));
        assert!(bond_state_orbitals(&rainbow_bonds(2), 6).is_err());
    }

    #[test]
    fn analytic_rainbow() {
        let b = rainbow_bonds(1);
        assert_eq!(b.bonds, vec![Bond { left: 0, right: 1, sign: 1 }]);
        let signs: Vec<i8> = rainbow_bonds(3).bonds.iter().map(|b| b.sign).collect();
        assert_eq!(signs, vec![1, -1, 1]);
        let run = sdrg_run(&build_rainbow_profile(5, 0.05).unwrap().couplings).unwrap();
        assert_eq!(run.bonds, rainbow_bonds(5).bonds);
    }

    #[test]
    fn large_chain_in_log_form() {
        let profile = build_rainbow_profile(400, 0.2).unwrap();
        assert_eq!(sdrg_run_profile(&profile).unwrap().bonds, rainbow_bonds(400).bonds);
        // the direct path hits zero couplings
        assert!(profile.couplings.iter().any(|&j| j == 0.0));
        assert!(sdrg_run(&profile.couplings).is_err());
    }

    #[test]
    fn bond_state_matches_ground_state() {
        let bonds = rainbow_bonds(10);
        let orb = bond_state_orbitals(&bonds, 20).unwrap();
        let overlap = |alpha: f64| {
            let occ = occupied_orbitals(&diagonalize(&build_rainbow_profile(10, alpha).unwrap().hopping_matrix()).unwrap()).unwrap();
            slater_overlap(&orb, &occ).unwrap().value
        };
        assert!(overlap(0.01) > 0.99);
        assert!(overlap(0.5) < 0.5);
        // flipping every sign gives an orthogonal state, which fixes the flavor convention
        let mut flipped = bonds.clone();
        for b in &mut flipped.bonds {
            b.sign = -b.sign;
        }
        let occ = occupied_orbitals(&diagonalize(&build_rainbow_profile(10, 0.01).unwrap().hopping_matrix()).unwrap()).unwrap();
        assert!(slater_overlap(&bond_state_orbitals(&flipped, 20).unwrap(), &occ).unwrap().value < 0.1);
    }

    #[test]
    fn entropy_counts_cut_bonds() {
        let b = rainbow_bonds(6);
        let half: Vec<usize> = (0..6).collect();
        assert!((sdrg_entropy(&b, &half) - 6.0 * LN_2).abs() < 1e-15);
        assert_eq!(sdrg_entropy(&b, &[5, 6]), 0.0);
    }

    #[test]
    fn perturbative_structure() {
        let orbs = perturbative_orbitals(3, 0.01).unwrap();
        assert!(orbs[0].residual <= 1e-4);
        let zero = perturbative_orbitals(3, 0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in zero[0].vector.iter().zip([0.0, 0.0, r, r, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(zero[0].residual, 0.0);
        // sign pattern of the second orbital: α, 1, α, −α, −1, −α
        let v = &perturbative_orbitals(3, 0.1).unwrap()[1].vector;
        let n = v[1];
        let expected = [0.1, 1.0, 0.1, -0.1, -1.0, -0.1];
        for (a, b) in v.iter().zip(expected) {
            assert!((a / n - b).abs() < 1e-14);
        }
        // second order in α, except ψ² whose inner tails cancel against the central bond
        for (k, order) in [(0, 4.0), (1, 8.0), (2, 4.0)] {
            let ratio = perturbative_orbitals(3, 0.1).unwrap()[k].residual / perturbative_orbitals(3, 0.05).unwrap()[k].residual;
            assert!((ratio - order).abs() < 0.1 * order, "k={k}: {ratio}");
        }
    }

    #[test]
    fn arc_diagram_shape() {
        let art = rainbow_bonds(2).arc_diagram();
        assert_eq!(art, "- |_____|\n+   |_|\n  o o o o\n");
    }

    proptest! {
        #[test]
        fn random_chains_decimate_to_matchings(logs in prop::collection::vec((-20.0f64..0.0, any::<bool>()), 1..40)) {
            let mut logs = logs;
            if logs.len() % 2 == 0 {
                logs.pop();
            }
            prop_assume!(!logs.is_empty());
            let couplings: Vec<f64> = logs.iter().map(|(l, s)| if *s { l.exp() } else { -l.exp() }).collect();
            match sdrg_run(&couplings) {
                Ok(b) => {
                    prop_assert!(b.is_perfect_matching());
                    prop_assert_eq!(b.trace.len(), b.bonds.len());
                    // every created coupling reproduces −J_L J_R / J_max of the couplings then present
                    let mut live: std::collections::HashMap<(usize, usize), f64> =
                        couplings.iter().enumerate().map(|(i, &j)| ((i, i + 1), j)).collect();
                    for step in &b.trace {
                        let jmax = live[&step.link];
                        prop_assert_eq!(jmax.to_bits(), step.coupling.value.to_bits());
                        if let Some(e) = step.created {
                            let jl = live.iter().find(|(k, _)| k.0 == e.left).map(|(_, v)| *v).unwrap();
                            let jr = live.iter().find(|(k, _)| k.1 == e.right).map(|(_, v)| *v).unwrap();
                            prop_assert_eq!((-jl * jr / jmax).to_bits(), e.coupling.value.to_bits());
                            live.retain(|k, _| k.0 != e.left && k.1 != e.right && *k != step.link);
                            live.insert((e.left, e.right), e.coupling.value);
                        } else {
                            live.retain(|k, _| k.0 != step.link.1 && k.1 != step.link.0 && *k != step.link);
                        }
                    }
                    let block: Vec<usize> = (0..b.sites).filter(|i| i % 3 == 0).collect();
                    let rest: Vec<usize> = (0..b.sites).filter(|i| i % 3 != 0).collect();
                    prop_assert_eq!(sdrg_entropy(&b, &block), sdrg_entropy(&b, &rest));
                    let orb = bond_state_orbitals(&b, b.sites).unwrap();
                    let s = renyi_entropies(&correlation_matrix(&orb, &block).unwrap(), &[1.0]).unwrap()[0];
                    prop_assert!((s - sdrg_entropy(&b, &block)).abs() < 1e-10);
                }
                Err(e) => {
                    let degenerate = matches!(e, Error::DegenerateCoupling { .. });
                    prop_assert!(degenerate);
                }
            }
        }

        #[test]
        fn rainbow_sdrg_matches_analytic(half_len in 1usize..30, alpha in 0.001f64..=0.2) {
            let run = sdrg_run_profile(&build_rainbow_profile(half_len, alpha).unwrap()).unwrap();
            prop_assert_eq!(run.bonds, rainbow_bonds(half_len).bonds);
        }
    }
}
