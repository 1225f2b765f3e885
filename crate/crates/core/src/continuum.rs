//! Closed-form continuum solution of the rainbow chain and its validity against exact spectra.
//!
//! Levels are indexed by `m` relative to the Fermi point: `m = 0` is the first level above
//! zero energy, `m = −1` the first below.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table};
use crate::lattice::{profile_from_z, site_label};
use crate::spectra::{diagonalize, occupied_orbitals, SpectrumResult};

pub use crate::spectra::velocity_factor;

const SMALL_H: f64 = 1e-8;

/// `ln L̃` with `L̃ = (e^{hL} − 1)/h`, stable for large `hL` and exact in the `h → 0` limit.
pub fn ln_effective_length(h: f64, half_len: f64) -> f64 {
    let z = h * half_len;
    if h < SMALL_H {
        half_len.ln() + z / 2.0
    } else if z > 1.0 {
        z + (-(-z).exp_m1()).ln() - h.ln()
    } else {
        (z.exp_m1() / h).ln()
    }
}

/// Effective length and temperature of a rainbow chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuumParams {
    pub h: f64,
    #[serde(rename = "L")]
    pub half_len: usize,
    pub tilde_l: f64,
    /// `2π/h`; infinite for the uniform chain.
    pub beta: f64,
    pub temperature: f64,
}

impl ContinuumParams {
    pub fn new(h: f64, half_len: usize) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) || half_len == 0 {
            return Err(Error::domain(format!("need h ≥ 0 and L ≥ 1, got h={h}, L={half_len}")));
        }
        let tau = 2.0 * std::f64::consts::PI;
        Ok(Self {
            h,
            half_len,
            tilde_l: coordinate_map(half_len as f64, h),
            beta: if h == 0.0 { f64::INFINITY } else { tau / h },
            temperature: h / tau,
        })
    }
}

/// `E_m = hπ(m + 1/2) / (2(e^{hL} − 1))`.
pub fn analytic_energy(m: i64, h: f64, half_len: usize) -> f64 {
    let l = half_len as f64;
    let q = std::f64::consts::PI * (m as f64 + 0.5) / 2.0;
    if h < SMALL_H {
        q / l * (1.0 - h * l / 2.0)
    } else {
        q * h / (h * l).exp_m1()
    }
}

/// `x̃ = sign(x) (e^{h|x|} − 1)/h`.
pub fn coordinate_map(x: f64, h: f64) -> f64 {
    if h < SMALL_H {
        x * (1.0 + h * x.abs() / 2.0)
    } else {
        x.signum() * (h * x.abs()).exp_m1() / h
    }
}

/// `(e^{h|n|} − 1)/(e^{hL} − 1)` without overflow.
fn stretch_ratio(n_abs: f64, h: f64, l: f64) -> f64 {
    if h < SMALL_H {
        n_abs / l * (1.0 + h * (n_abs - l) / 2.0)
    } else {
        (h * (n_abs - l)).exp() * (-(-h * n_abs).exp_m1()) / (-(-h * l).exp_m1())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticWavefunction {
    pub m: i64,
    /// Unit-norm components on sites `n = −(L − 1/2), …, L − 1/2`.
    pub components: DVector<f64>,
    /// `|m + 1/2| / L`; the closed form is reliable only when this is small.
    pub relative_index: f64,
}

pub fn analytic_wavefunction(m: i64, h: f64, half_len: usize) -> AnalyticWavefunction {
    let l = half_len as f64;
    let q = std::f64::consts::PI * (m as f64 + 0.5) / 2.0;
    let mut v = DVector::from_fn(2 * half_len, |i, _| {
        let n = site_label(i, half_len);
        // envelope e^{h|n|/2}, rescaled by e^{−hL/2} to stay finite
        let envelope = (h * (n.abs() - l) / 2.0).exp();
        // the extra −L/2 only flips the global sign for even L and fixes the carrier for odd L
        let phase = std::f64::consts::FRAC_PI_2 * (n - m as f64 - l) + n.signum() * q * stretch_ratio(n.abs(), h, l);
        envelope * phase.cos()
    });
    v /= v.norm();
    AnalyticWavefunction {
        m,
        components: v,
        relative_index: (m as f64 + 0.5).abs() / l,
    }
}

/// `|⟨a|b⟩|` after normalizing both vectors.
pub fn wavefunction_overlap(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::contract(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::domain("zero vector has no overlap"));
    }
    Ok((a.dot(b) / (na * nb)).abs().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaterOverlap {
    pub value: f64,
    /// Set when either orbital set is numerically rank deficient; `value` is then 0.
    pub rank_deficient: bool,
}

fn orthonormal_basis(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let qr = m.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    let tol = 1e-12 * scale * m.nrows().max(1) as f64;
    if scale == 0.0 || r.diagonal().iter().any(|d| d.abs() <= tol) {
        return None;
    }
    Some(qr.q())
}

/// Overlap `|⟨A|B⟩|` of the Slater determinants built from the columns of `a` and `b`.
///
/// Columns need not be orthonormal; each set is orthonormalized first, which leaves its
/// Slater state unchanged up to normalization.
pub fn slater_overlap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SlaterOverlap> {
    if a.shape() != b.shape() {
        return Err(Error::contract(format!("shape mismatch: {:?} vs {:?}", a.shape(), b.shape())));
    }
    if a.ncols() > a.nrows() {
        return Err(Error::contract("more orbitals than sites"));
    }
    if a.ncols() == 0 {
        return Ok(SlaterOverlap {
            value: 1.0,
            rank_deficient: false,
        });
    }
    match (orthonormal_basis(a), orthonormal_basis(b)) {
        (Some(qa), Some(qb)) => Ok(SlaterOverlap {
            value: crate::linalg::determinant(&(qa.transpose() * qb)).abs().min(1.0),
            rank_deficient: false,
        }),
        _ => Ok(SlaterOverlap {
            value: 0.0,
            rank_deficient: true,
        }),
    }
}

/// Occupied analytic orbitals `m = −L, …, −1` as columns.
pub fn continuum_ground_state(h: f64, half_len: usize) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (-(half_len as i64)..0)
        .map(|m| analytic_wavefunction(m, h, half_len).components)
        .collect();
    DMatrix::from_columns(&cols)
}

fn exact_spectrum(half_len: usize, z: f64) -> Result<SpectrumResult> {
    diagonalize(&profile_from_z(half_len, z)?.hopping_matrix())
}

/// Per-level overlap between analytic and exact orbitals for every `m`.
pub fn level_overlaps(half_len: usize, z: f64) -> Result<Vec<(i64, f64)>> {
    let spec = exact_spectrum(half_len, z)?;
    let h = z / half_len as f64;
    let l = half_len as i64;
    (-l..l)
        .map(|m| {
            let exact = spec.level_orbital(m).unwrap();
            Ok((m, wavefunction_overlap(&analytic_wavefunction(m, h, half_len).components, &exact)?))
        })
        .collect()
}

/// Slater overlap between the analytic and the exact half-filled ground states.
pub fn ground_state_overlap(half_len: usize, z: f64) -> Result<SlaterOverlap> {
    let exact = occupied_orbitals(&exact_spectrum(half_len, z)?)?;
    slater_overlap(&continuum_ground_state(z / half_len as f64, half_len), &exact)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityPoint {
    #[serde(rename = "L")]
    pub half_len: usize,
    pub z: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityContour {
    #[serde(rename = "L")]
    pub half_len: usize,
    pub z_at_090: Option<f64>,
    pub z_at_095: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityMap {
    /// Row-major over `(L, z)` in input order.
    pub points: Vec<ValidityPoint>,
    pub contours: Vec<ValidityContour>,
}

/// First `z` where the overlap falls below `threshold`, linearly interpolated.
fn crossing(points: &[ValidityPoint], threshold: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.overlap >= threshold && b.overlap < threshold)
            .then(|| a.z + (a.overlap - threshold) / (a.overlap - b.overlap) * (b.z - a.z))
    })
}

pub fn validity_map(half_lens: &[usize], zs: &[f64]) -> Result<ValidityMap> {
    let grid: Vec<(usize, f64)> = half_lens.iter().flat_map(|&l| zs.iter().map(move |&z| (l, z))).collect();
    let points = grid
        .par_iter()
        .map(|&(half_len, z)| {
            Ok(ValidityPoint {
                half_len,
                z,
                overlap: ground_state_overlap(half_len, z)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let contours = half_lens
        .iter()
        .enumerate()
        .map(|(i, &half_len)| {
            let mut row = points[i * zs.len()..(i + 1) * zs.len()].to_vec();
            row.sort_by(|a, b| a.z.total_cmp(&b.z));
            ValidityContour {
                half_len,
                z_at_090: crossing(&row, 0.90),
                z_at_095: crossing(&row, 0.95),
            }
        })
        .collect();
    Ok(ValidityMap { points, contours })
}

impl ValidityMap {
    pub fn grid_table(&self) -> Table {
        let mut t = Table::new(&["L", "z", "overlap"]);
        for p in &self.points {
            t.push(vec![p.half_len.to_string(), fmt_f64(p.z), fmt_f64(p.overlap)]);
        }
        t
    }

    pub fn contour_table(&self) -> Table {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "nan".into());
        let mut t = Table::new(&["L", "z_at_0.90", "z_at_0.95"]);
        for c in &self.contours {
            t.push(vec![c.half_len.to_string(), opt(c.z_at_090), opt(c.z_at_095)]);
        }
        t
    }
}
