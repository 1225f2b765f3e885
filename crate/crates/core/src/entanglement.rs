//! Block entanglement of Slater states from the two-point correlation matrix.
//!
//! All entropies are in nats.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::continuum::ln_effective_length;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table};
use crate::lattice::{profile_from_z, CouplingProfile, Lattice2D};
use crate::linalg::symmetric_eigenvalues;
use crate::qubism::{AmplitudeTable, MAX_SITES};
use crate::spectra::{diagonalize, occupied_orbitals, sector_decomposition_2d, ZeroModePolicy};

/// Correlation eigenvalues are clipped to `[NU_CLIP, 1 − NU_CLIP]`.
pub const NU_CLIP: f64 = 1e-14;

/// `C_ij = ⟨c†_i c_j⟩` restricted to a block.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub block: Vec<usize>,
    pub entries: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Eigenvalues `ν_p`, descending, unclipped.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut nu = symmetric_eigenvalues(&self.entries);
        nu.reverse();
        nu
    }
}

pub fn correlation_matrix(occ: &DMatrix<f64>, block: &[usize]) -> Result<CorrelationMatrix> {
    if block.is_empty() {
        return Err(Error::domain("block must not be empty"));
    }
    let mut seen = vec![false; occ.nrows()];
    for &i in block {
        if i >= occ.nrows() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::contract(format!("block site {i} is out of range or repeated")));
        }
    }
    let rows = occ.select_rows(block.iter());
    Ok(CorrelationMatrix {
        block: block.to_vec(),
        entries: &rows * rows.transpose(),
    })
}

fn check_order(n: f64) -> Result<()> {
    if n.is_finite() && n >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("Rényi order must be ≥ 1, got {n}")))
    }
}

/// Rényi entropy of a fermionic mode set with occupations `ν`.
pub fn renyi_from_occupations(nu: &[f64], n: f64) -> Result<f64> {
    check_order(n)?;
    let clipped = nu.iter().map(|x| x.clamp(NU_CLIP, 1.0 - NU_CLIP));
    let s = if n == 1.0 {
        clipped.map(|x| -(x * x.ln() + (1.0 - x) * (-x).ln_1p())).sum::<f64>()
    } else {
        clipped.map(|x| (x.powf(n) + (1.0 - x).powf(n)).ln()).sum::<f64>() / (1.0 - n)
    };
    Ok(s.max(0.0))
}

/// Rényi entropy of a probability distribution (e.g. squared Schmidt coefficients).
pub fn renyi_from_probabilities(p: &[f64], n: f64) -> Result<f64> {
    check_order(n)?;
    let total: f64 = p.iter().sum();
    let probs = p.iter().map(|x| x / total).filter(|x| *x > 0.0);
    let s = if n == 1.0 {
        -probs.map(|x| x * x.ln()).sum::<f64>()
    } else {
        probs.map(|x| x.powf(n)).sum::<f64>().ln() / (1.0 - n)
    };
    Ok(s.max(0.0))
}

/// `S^{(n)}` for each requested order.
pub fn renyi_entropies(c: &CorrelationMatrix, orders: &[f64]) -> Result<Vec<f64>> {
    let nu = c.eigenvalues();
    orders.iter().map(|&n| renyi_from_occupations(&nu, n)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSpectrum {
    /// Descending.
    pub nu: Vec<f64>,
    /// `ln((1 − ν)/ν)`, ascending; saturated levels are `±∞`.
    pub eps: Vec<f64>,
    /// Mean spacing of the levels nearest `ε = 0`; `None` when fewer than two finite levels exist.
    pub delta_l: Option<f64>,
    /// `Σ ln(1 + e^{−ε})` over finite levels.
    pub f0: f64,
}

pub fn entanglement_spectrum(c: &CorrelationMatrix) -> EntanglementSpectrum {
    let nu = c.eigenvalues();
    let mut eps: Vec<f64> = nu
        .iter()
        .map(|&x| {
            if x <= NU_CLIP {
                f64::INFINITY
            } else if x >= 1.0 - NU_CLIP {
                f64::NEG_INFINITY
            } else {
                ((1.0 - x) / x).ln()
            }
        })
        .collect();
    eps.sort_by(f64::total_cmp);
    let finite: Vec<f64> = eps.iter().copied().filter(|e| e.is_finite()).collect();
    let f0 = finite.iter().map(|e| (-e).exp().ln_1p()).sum();
    let window = 2 * c.block.len().div_ceil(10);
    EntanglementSpectrum {
        delta_l: level_spacing(&finite, window),
        nu,
        eps,
        f0,
    }
}

/// Mean nearest-neighbour spacing among the `window` finite levels with smallest `|ε|`.
pub fn level_spacing(eps: &[f64], window: usize) -> Option<f64> {
    let mut near: Vec<f64> = eps.iter().copied().filter(|e| e.is_finite()).collect();
    near.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    near.truncate(window);
    if near.len() < 2 {
        return None;
    }
    near.sort_by(f64::total_cmp);
    Some((near[near.len() - 1] - near[0]) / (near.len() - 1) as f64)
}

/// Half-odd labels `p = ±1/2, ±3/2, …` ranked outward from zero on each side.
pub fn collapse_labels(eps: &[f64]) -> Vec<f64> {
    let mut pos = 0.0;
    let mut labels = vec![0.0; eps.len()];
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].abs().total_cmp(&eps[b].abs()));
    let mut neg = 0.0;
    for i in order {
        if eps[i] >= 0.0 {
            labels[i] = pos + 0.5;
            pos += 1.0;
        } else {
            labels[i] = -(neg + 0.5);
            neg += 1.0;
        }
    }
    labels
}

impl EntanglementSpectrum {
    /// The `count` finite levels closest to zero as `(p, ε_p)`, ordered by `|ε|`.
    pub fn central_levels(&self, count: usize) -> Vec<(f64, f64)> {
        let finite: Vec<f64> = self.eps.iter().copied().filter(|e| e.is_finite()).collect();
        let labels = collapse_labels(&finite);
        let mut pairs: Vec<(f64, f64)> = labels.into_iter().zip(finite).collect();
        pairs.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        pairs.truncate(count);
        pairs
    }

    /// `Σ [ln(1 + e^{−ε}) + ε ν]`, the von Neumann entropy rebuilt from the entanglement energies.
    pub fn entropy_from_levels(&self) -> f64 {
        self.eps
            .iter()
            .filter(|e| e.is_finite())
            .map(|&e| {
                let nu = 1.0 / (1.0 + e.exp());
                (-e).exp().ln_1p() + e * nu
            })
            .sum()
    }

    pub fn table(&self) -> Table {
        let mut nu_sorted = self.nu.clone();
        nu_sorted.sort_by(|a, b| b.total_cmp(a));
        let mut t = Table::new(&["p", "nu", "eps"]);
        for (p, (nu, eps)) in nu_sorted.iter().zip(&self.eps).enumerate() {
            t.push(vec![p.to_string(), fmt_f64(*nu), fmt_f64(*eps)]);
        }
        t
    }
}

/// `(c/6) ln L̃ + c′`, reducing to `(c/6) ln L + c′` at `h = 0`.
pub fn halfchain_entropy_prediction(h: f64, half_len: f64, c: f64, cprime: f64) -> f64 {
    c / 6.0 * ln_effective_length(h, half_len) + cprime
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// `(c/3) ln[(β/π) sinh(πL/β)]`.
pub fn thermal_cft_entropy(beta: f64, length: f64, c: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    if beta.is_infinite() {
        return Ok(c / 3.0 * length.ln());
    }
    let pi = std::f64::consts::PI;
    Ok(c / 3.0 * ((beta / pi).ln() + ln_sinh(pi * length / beta)))
}

/// One entropy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPoint {
    #[serde(rename = "L")]
    pub half_len: usize,
    pub z: f64,
    /// Block length (sites for 1D, columns for the 2D left half).
    pub ell: usize,
    pub n: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropyCurve {
    pub points: Vec<EntropyPoint>,
}

impl EntropyCurve {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["L", "z", "ell", "n", "S"]);
        for p in &self.points {
            t.push(vec![
                p.half_len.to_string(),
                fmt_f64(p.z),
                p.ell.to_string(),
                fmt_f64(p.n),
                fmt_f64(p.s),
            ]);
        }
        t
    }

    /// `(L, S)` pairs of a given order.
    pub fn series(&self, n: f64) -> Vec<(usize, f64)> {
        self.points.iter().filter(|p| p.n == n).map(|p| (p.half_len, p.s)).collect()
    }
}

/// Which blocks an entropy scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockFamily {
    /// Left `L` sites of a `2L` chain.
    HalfChain,
    /// Left `ℓ` sites for `ℓ = 1 … 2L − 1`.
    BoundaryScan,
}

/// Entropies of a 1D profile for every block of the family and every order.
pub fn entropy_scan(profile: &CouplingProfile, family: BlockFamily, orders: &[f64]) -> Result<EntropyCurve> {
    for &n in orders {
        check_order(n)?;
    }
    let occ = occupied_orbitals(&diagonalize(&profile.hopping_matrix())?)?;
    let dim = profile.sites();
    let ells: Vec<usize> = match family {
        BlockFamily::HalfChain => vec![profile.half_len],
        BlockFamily::BoundaryScan => (1..dim).collect(),
    };
    let rows: Vec<Vec<f64>> = ells
        .par_iter()
        .map(|&ell| {
            let block: Vec<usize> = (0..ell).collect();
            renyi_entropies(&correlation_matrix(&occ, &block)?, orders)
        })
        .collect::<Result<_>>()?;
    let points = ells
        .iter()
        .zip(rows)
        .flat_map(|(&ell, s)| {
            orders.iter().zip(s).map(move |(&n, s)| EntropyPoint {
                half_len: profile.half_len,
                z: profile.z,
                ell,
                n,
                s,
            })
        })
        .collect();
    Ok(EntropyCurve { points })
}

/// Half-chain entropies over an `(L, z)` grid; points are ordered by `L`, then `z`, then `n`.
pub fn halfchain_grid(half_lens: &[usize], zs: &[f64], orders: &[f64]) -> Result<EntropyCurve> {
    let grid: Vec<(usize, f64)> = half_lens.iter().flat_map(|&l| zs.iter().map(move |&z| (l, z))).collect();
    let curves = grid
        .par_iter()
        .map(|&(l, z)| entropy_scan(&profile_from_z(l, z)?, BlockFamily::HalfChain, orders))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyCurve {
        points: curves.into_iter().flat_map(|c| c.points).collect(),
    })
}

/// Entanglement spectrum of the left half of a 1D profile.
pub fn halfchain_spectrum(profile: &CouplingProfile) -> Result<(EntanglementSpectrum, f64)> {
    let occ = occupied_orbitals(&diagonalize(&profile.hopping_matrix())?)?;
    let block: Vec<usize> = (0..profile.half_len).collect();
    let c = correlation_matrix(&occ, &block)?;
    let s = renyi_entropies(&c, &[1.0])?[0];
    Ok((entanglement_spectrum(&c), s))
}

/// Rényi entropies of the `x < 0` half of the 2D lattice, summed over transverse sectors.
pub fn left_half_entropy_2d(lat: &Lattice2D, orders: &[f64], policy: ZeroModePolicy) -> Result<Vec<f64>> {
    for &n in orders {
        check_order(n)?;
    }
    let sectors = sector_decomposition_2d(lat, policy)?;
    let block: Vec<usize> = (0..lat.half_len).collect();
    let per_sector = sectors
        .par_iter()
        .map(|s| {
            if s.occupied.ncols() == 0 {
                return Ok(vec![0.0; orders.len()]);
            }
            renyi_entropies(&correlation_matrix(&s.occupied, &block)?, orders)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..orders.len()).map(|i| per_sector.iter().map(|s| s[i]).sum()).collect())
}

/// Reference path: the same left-half entropies from the dense `(2L)² × (2L)²` problem.
pub fn left_half_entropy_2d_dense(lat: &Lattice2D, orders: &[f64]) -> Result<Vec<f64>> {
    let occ = occupied_orbitals(&diagonalize(&lat.hopping_matrix())?)?;
    renyi_entropies(&correlation_matrix(&occ, &lat.left_half())?, orders)
}

/// Rényi entropies of a contiguous boundary block straight from the many-body amplitudes.
///
/// Only prefix or suffix blocks are accepted; other blocks would need a Jordan-Wigner
/// reordering that changes amplitude signs.
pub fn brute_force_block_entropy(amps: &AmplitudeTable, block: &[usize], orders: &[f64]) -> Result<Vec<f64>> {
    let n = amps.n_sites;
    if n > MAX_SITES {
        return Err(Error::Resource(format!("{n} sites exceeds the cap of {MAX_SITES}")));
    }
    let l = block.len();
    if l == 0 || l > n {
        return Err(Error::domain("block must be non-empty and within the system"));
    }
    let prefix = block.iter().enumerate().all(|(k, &i)| i == k);
    let suffix = block.iter().enumerate().all(|(k, &i)| i == n - l + k);
    let cut = match (prefix, suffix) {
        (true, _) => l,
        (false, true) => n - l,
        _ => return Err(Error::domain("brute-force entropies need a contiguous block touching a boundary")),
    };
    if cut == 0 || cut == n {
        return Ok(vec![0.0; orders.len()]);
    }
    let sv = amps.bipartition_matrix(cut).singular_values();
    let p: Vec<f64> = sv.iter().map(|s| s * s).collect();
    orders.iter().map(|&q| renyi_from_probabilities(&p, q)).collect()
}
