//! Exact single-particle spectra, half-filled ground states and Fermi-velocity estimates.
//!
//! Open chains of even length with nonzero couplings are bipartite with a nonsingular
//! sublattice block, so their spectrum is `±σ` for the singular values `σ` of a bidiagonal
//! matrix. That path keeps relative accuracy on exponentially small levels, which a dense
//! eigensolver loses once the couplings span more than ~16 decades. Everything else goes
//! through a dense symmetric eigensolver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, matrix_to_le_bytes, write_bytes, Table};
use crate::lattice::{HoppingMatrix, Lattice2D};
use crate::linalg::{bidiagonal_svd, symmetric_eigen};

/// Dense-path levels closer than this to zero count as zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-12;
/// Sector levels closer than this to zero count as zero modes in the separable 2D solver.
pub const SECTOR_ZERO_MODE_TOL: f64 = 1e-10;
/// Eigenvalues closer than this (relative to the spectral radius) form a degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    /// Singular values of the sublattice block; structurally free of zero modes.
    Bipartite,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column `k` is the unit eigenvector for `energies[k]`.
    pub orbitals: DMatrix<f64>,
    /// `max_k |H ψ_k − E_k ψ_k|`.
    pub residual: f64,
    pub path: SolverPath,
}

impl SpectrumResult {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Energy of level `m` counted from the Fermi point (`m = 0` first above, `m = −1` first below).
    pub fn level(&self, m: i64) -> Option<f64> {
        let k = self.dim() as i64 / 2 + m;
        (0..self.dim() as i64).contains(&k).then(|| self.energies[k as usize])
    }

    /// Orbital of level `m` counted from the Fermi point.
    pub fn level_orbital(&self, m: i64) -> Option<DVector<f64>> {
        let k = self.dim() as i64 / 2 + m;
        (0..self.dim() as i64)
            .contains(&k)
            .then(|| self.orbitals.column(k as usize).into_owned())
    }

    /// Energies as CSV: `m,energy` with `m` relative to the Fermi point.
    pub fn energies_table(&self) -> Table {
        let half = self.dim() as i64 / 2;
        let mut t = Table::new(&["m", "energy"]);
        for (k, e) in self.energies.iter().enumerate() {
            t.push(vec![(k as i64 - half).to_string(), fmt_f64(*e)]);
        }
        t
    }

    /// Orbital matrix in the little-endian binary layout of [`crate::io::matrix_to_le_bytes`].
    pub fn write_orbitals(&self, path: &std::path::Path) -> Result<()> {
        write_bytes(path, &matrix_to_le_bytes(&self.orbitals))
    }
}

/// Flip the sign so the largest-magnitude entry is positive (ties go to the lowest index).
fn fix_sign(mut col: nalgebra::DVectorViewMut<'_, f64>) {
    let max = col.amax();
    if max == 0.0 {
        return;
    }
    let lead = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap();
    if col[lead] < 0.0 {
        col.neg_mut();
    }
}

fn largest_index(col: nalgebra::DVectorView<'_, f64>) -> usize {
    col.iamax()
}

fn residual(h: &HoppingMatrix, energies: &[f64], orbitals: &DMatrix<f64>) -> f64 {
    energies
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let psi: Vec<f64> = orbitals.column(k).iter().copied().collect();
            let hp = h.apply(&psi);
            hp.iter().zip(&psi).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

fn bipartite_blocks(h: &HoppingMatrix) -> Option<(Vec<f64>, Vec<f64>)> {
    let off = h.chain_offdiagonal()?;
    if h.dim() % 2 != 0 || off.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return None;
    }
    let half = h.dim() / 2;
    let d = (0..half).map(|a| off[2 * a]).collect();
    let e = (0..half - 1).map(|a| off[2 * a + 1]).collect();
    Some((d, e))
}

fn check_residual(res: f64, radius: f64, dim: usize) -> Result<()> {
    if res.is_finite() && res <= RESIDUAL_TOL * radius.max(f64::MIN_POSITIVE) {
        Ok(())
    } else {
        Err(Error::Numeric {
            context: "diagonalize",
            detail: format!("residual {res:e} exceeds tolerance for a {dim}x{dim} matrix (spectral radius {radius:e})"),
        })
    }
}

/// Full eigendecomposition with deterministic ordering and signs.
pub fn diagonalize(h: &HoppingMatrix) -> Result<SpectrumResult> {
    if h.dim() == 0 {
        return Err(Error::contract("empty hopping matrix"));
    }
    let spec = match bipartite_blocks(h) {
        Some((d, e)) => diagonalize_bipartite(h.dim(), &d, &e)?,
        None => diagonalize_dense_unchecked(&h.to_dense())?,
    };
    let res = residual(h, &spec.energies, &spec.orbitals);
    check_residual(res, spec.spectral_radius(), h.dim())?;
    Ok(SpectrumResult { residual: res, ..spec })
}

/// Dense path for an explicit symmetric matrix.
pub fn diagonalize_dense(mat: &DMatrix<f64>) -> Result<SpectrumResult> {
    let n = mat.nrows();
    if n == 0 || mat.ncols() != n {
        return Err(Error::contract(format!("matrix must be square and non-empty, got {}x{}", n, mat.ncols())));
    }
    let scale = mat.amax().max(f64::MIN_POSITIVE);
    if (mat - mat.transpose()).amax() > 1e-14 * scale {
        return Err(Error::contract("matrix is not symmetric"));
    }
    let spec = diagonalize_dense_unchecked(mat)?;
    let res = (0..n)
        .map(|k| (mat * spec.orbitals.column(k) - spec.orbitals.column(k) * spec.energies[k]).norm())
        .fold(0.0, f64::max);
    check_residual(res, spec.spectral_radius(), n)?;
    Ok(SpectrumResult { residual: res, ..spec })
}

fn diagonalize_dense_unchecked(mat: &DMatrix<f64>) -> Result<SpectrumResult> {
    let n = mat.nrows();
    let (energies, mut orbitals) = symmetric_eigen(mat, 64 * n)?;
    let radius = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let tol = DEGENERACY_TOL * radius.max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[start] < tol {
            end += 1;
        }
        if end - start > 1 {
            order_cluster(&mut orbitals, start, end);
        }
        start = end;
    }
    for k in 0..n {
        fix_sign(orbitals.column_mut(k));
    }
    Ok(SpectrumResult {
        energies,
        orbitals,
        residual: 0.0,
        path: SolverPath::Dense,
    })
}

/// Re-orthogonalize a degenerate block and order it by the index of each vector's largest entry.
fn order_cluster(orbitals: &mut DMatrix<f64>, start: usize, end: usize) {
    let block = orbitals.columns(start, end - start).into_owned();
    let q = block.qr().q();
    let mut cols: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    cols.sort_by_key(|c| largest_index(c.as_view()));
    for (j, c) in cols.into_iter().enumerate() {
        orbitals.set_column(start + j, &c);
    }
}

fn diagonalize_bipartite(dim: usize, d: &[f64], e: &[f64]) -> Result<SpectrumResult> {
    let half = dim / 2;
    let svd = bidiagonal_svd(d, e, true)?;
    let (u, v) = (svd.u.unwrap(), svd.v.unwrap());
    let mut energies = vec![0.0; dim];
    let mut orbitals = DMatrix::zeros(dim, dim);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (j, &s) in svd.sigma.iter().enumerate() {
        let (neg, pos) = (j, dim - 1 - j);
        energies[neg] = -s;
        energies[pos] = s;
        for a in 0..half {
            // even sites carry the right singular vectors, odd sites the left ones
            orbitals[(2 * a, pos)] = r * v[(a, j)];
            orbitals[(2 * a + 1, pos)] = r * u[(a, j)];
            orbitals[(2 * a, neg)] = r * v[(a, j)];
            orbitals[(2 * a + 1, neg)] = -r * u[(a, j)];
        }
    }
    for k in 0..dim {
        fix_sign(orbitals.column_mut(k));
    }
    Ok(SpectrumResult {
        energies,
        orbitals,
        residual: 0.0,
        path: SolverPath::Bipartite,
    })
}

/// Energies only. Uses the bipartite path when available.
pub fn energies(h: &HoppingMatrix) -> Result<Vec<f64>> {
    match bipartite_blocks(h) {
        Some((d, e)) => {
            let s = bidiagonal_svd(&d, &e, false)?.sigma;
            Ok(s.iter().map(|x| -x).chain(s.iter().rev().copied()).collect())
        }
        None => Ok(crate::linalg::symmetric_eigenvalues(&h.to_dense())),
    }
}

/// Number of levels the dense path would classify as zero modes.
pub fn zero_mode_count(spec: &SpectrumResult) -> usize {
    match spec.path {
        SolverPath::Bipartite => 0,
        SolverPath::Dense => spec.energies.iter().filter(|e| e.abs() <= ZERO_MODE_TOL).count(),
    }
}

/// The `dim/2` negative-energy orbitals of the half-filled ground state.
pub fn occupied_orbitals(spec: &SpectrumResult) -> Result<DMatrix<f64>> {
    let dim = spec.dim();
    if dim % 2 != 0 {
        return Err(Error::contract(format!("half filling needs an even dimension, got {dim}")));
    }
    let zeros = zero_mode_count(spec);
    if zeros > 0 {
        return Err(Error::ZeroModes {
            count: zeros,
            tolerance: ZERO_MODE_TOL,
        });
    }
    Ok(spec.orbitals.columns(0, dim / 2).into_owned())
}

/// `⟨n_i⟩ = Σ_k |ψ^k_i|²` over the occupied orbitals.
pub fn site_occupations(occ: &DMatrix<f64>) -> Vec<f64> {
    occ.row_iter().map(|r| r.norm_squared()).collect()
}

/// Fermi velocity factor `a(z) = z / (e^z − 1)`, with `a(0) = 1`.
pub fn velocity_factor(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z / 2.0
    } else {
        z / z.exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FermiVelocityEstimate {
    pub z: f64,
    /// Gap across the Fermi point in units of `π/(2L)`.
    pub a_numeric: f64,
    pub a_analytic: f64,
    /// Slope of a least-squares line through levels `m = −4..=4`, same units.
    pub a_multilevel: Option<f64>,
}

pub fn fermi_velocity(spec: &SpectrumResult, half_len: usize, z: f64) -> Result<FermiVelocityEstimate> {
    if spec.dim() < 4 {
        return Err(Error::domain("at least four levels are needed to estimate the Fermi velocity"));
    }
    let scale = 2.0 * half_len as f64 / std::f64::consts::PI;
    let gap = spec.level(0).unwrap() - spec.level(-1).unwrap();
    let a_multilevel = (spec.dim() >= 10).then(|| {
        let pts: Vec<(f64, f64)> = (-4..=4).map(|m| (m as f64 + 0.5, spec.level(m).unwrap())).collect();
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        sxy / sxx * scale
    });
    Ok(FermiVelocityEstimate {
        z,
        a_numeric: gap * scale,
        a_analytic: velocity_factor(z),
        a_multilevel,
    })
}

/// How zero-energy levels are filled at half filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroModePolicy {
    /// Refuse to pick a ground state.
    Reject,
    /// Resolve zero modes by first-order perturbation in `α`: a zero-subspace direction is
    /// filled when its energy turns negative as `α` decreases, i.e. the `α → 1⁻` limit.
    LimitFromBelow,
}

/// One transverse-momentum sector of the 2D rainbow lattice.
#[derive(Debug, Clone)]
pub struct Sector2D {
    /// Transverse mode index `1..=2L`.
    pub k: usize,
    /// Transverse energy `−cos(πk/(2L+1))` of the uniform `y` chain.
    pub tau: f64,
    pub spectrum: SpectrumResult,
    /// Occupied `x`-orbitals of this sector.
    pub occupied: DMatrix<f64>,
    pub zero_modes: usize,
}

/// Transverse standing wave `φ_k(iy)` of the open `y` chain.
pub fn transverse_mode(side: usize, k: usize) -> DVector<f64> {
    let n1 = (side + 1) as f64;
    let norm = (2.0 / n1).sqrt();
    DVector::from_fn(side, |iy, _| norm * (std::f64::consts::PI * (k * (iy + 1)) as f64 / n1).sin())
}

/// Separable solver: every vertical column is a uniform chain scaled by `α^{|x|}`, so
/// `H = H_x ⊗ 1 + D_x ⊗ T_y` splits into `2L` independent `2L × 2L` problems
/// `H_x + τ_k D_x`.
pub fn sector_decomposition_2d(lat: &Lattice2D, policy: ZeroModePolicy) -> Result<Vec<Sector2D>> {
    let side = lat.side();
    let ln_alpha = lat.alpha.ln();
    let col_scale: Vec<f64> = (0..side)
        .map(|ix| (crate::lattice::site_label(ix, lat.half_len).abs() * ln_alpha).exp())
        .collect();
    let mid_abs = |i: usize, j: usize| {
        0.5 * (crate::lattice::site_label(i, lat.half_len) + crate::lattice::site_label(j, lat.half_len)).abs()
    };
    let hx = DMatrix::from_fn(side, side, |i, j| {
        if i.abs_diff(j) == 1 {
            -0.5 * (mid_abs(i, j) * ln_alpha).exp()
        } else {
            0.0
        }
    });
    // dα of α^{|m|} is |m| α^{|m|−1}
    let d_pow = |m: f64| if m == 0.0 { 0.0 } else { m * ((m - 1.0) * ln_alpha).exp() };
    let dhx = DMatrix::from_fn(side, side, |i, j| {
        if i.abs_diff(j) == 1 {
            -0.5 * d_pow(mid_abs(i, j))
        } else {
            0.0
        }
    });
    (1..=side)
        .map(|k| {
            let tau = -(std::f64::consts::PI * k as f64 / (side + 1) as f64).cos();
            let mut hk = hx.clone();
            let mut dhk = dhx.clone();
            for ix in 0..side {
                hk[(ix, ix)] = tau * col_scale[ix];
                dhk[(ix, ix)] = tau * d_pow(crate::lattice::site_label(ix, lat.half_len).abs());
            }
            let spectrum = diagonalize_dense(&hk)?;
            let zero: Vec<usize> = (0..side)
                .filter(|&j| spectrum.energies[j].abs() <= SECTOR_ZERO_MODE_TOL)
                .collect();
            if !zero.is_empty() && policy == ZeroModePolicy::Reject {
                return Err(Error::ZeroModes {
                    count: zero.len(),
                    tolerance: SECTOR_ZERO_MODE_TOL,
                });
            }
            let below: Vec<usize> = (0..side).filter(|&j| spectrum.energies[j] < -SECTOR_ZERO_MODE_TOL).collect();
            let mut occupied = spectrum.orbitals.select_columns(below.iter());
            if !zero.is_empty() {
                let z = spectrum.orbitals.select_columns(zero.iter());
                let projected = z.transpose() * &dhk * &z;
                let (slopes, rot) = symmetric_eigen(&projected, 64 * zero.len().max(1))?;
                let scale = dhk.amax().max(1.0);
                if slopes.iter().any(|s| s.abs() <= 1e-10 * scale) {
                    return Err(Error::Numeric {
                        context: "sector zero modes",
                        detail: format!("sector {k}: zero mode is not split at first order in alpha"),
                    });
                }
                let fill: Vec<usize> = (0..slopes.len()).filter(|&j| slopes[j] > 0.0).collect();
                let extra = &z * rot.select_columns(fill.iter());
                let n_old = occupied.ncols();
                occupied = occupied.resize_horizontally(n_old + extra.ncols(), 0.0);
                occupied.columns_mut(n_old, extra.ncols()).copy_from(&extra);
            }
            Ok(Sector2D {
                k,
                tau,
                occupied,
                zero_modes: zero.len(),
                spectrum,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice_2d, build_rainbow_profile, profile_from_z, HoppingMatrix};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn check_invariants(h: &HoppingMatrix, spec: &SpectrumResult) {
        let n = spec.dim();
        let id = DMatrix::<f64>::identity(n, n);
        assert!((spec.orbitals.transpose() * &spec.orbitals - id).amax() < 1e-10);
        assert!(spec.residual <= 1e-10 * spec.spectral_radius());
        for k in 0..n {
            assert!((spec.energies[k] + spec.energies[n - 1 - k]).abs() < 1e-10);
        }
        assert!(spec.energies.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(h.dim(), n);
    }

    #[test]
    fn two_site_chain() {
        let h = build_rainbow_profile(1, 1.0).unwrap().hopping_matrix();
        let spec = diagonalize(&h).unwrap();
        assert_eq!(spec.path, SolverPath::Bipartite);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((spec.energies[0] + 0.5).abs() < 1e-15 && (spec.energies[1] - 0.5).abs() < 1e-15);
        assert!((spec.orbitals[(0, 0)] - r).abs() < 1e-15 && (spec.orbitals[(1, 0)] - r).abs() < 1e-15);
        assert!((spec.orbitals[(0, 1)] - r).abs() < 1e-15 && (spec.orbitals[(1, 1)] + r).abs() < 1e-15);
        let occ = occupied_orbitals(&spec).unwrap();
        assert_eq!(occ.ncols(), 1);
        assert_eq!(site_occupations(&occ).iter().map(|x| (x * 1e12).round()).collect::<Vec<_>>(), vec![5e11, 5e11]);
    }

    #[test]
    fn uniform_first_level() {
        let spec = diagonalize(&build_rainbow_profile(100, 1.0).unwrap().hopping_matrix()).unwrap();
        let e0 = spec.level(0).unwrap();
        assert!(rel(e0, std::f64::consts::PI / 400.0) < 0.02);
        // exact lattice value
        assert!(rel(e0, (std::f64::consts::PI * 100.0 / 201.0).cos()) < 1e-12);
    }

    #[test]
    fn rainbow_first_level() {
        let spec = diagonalize(&profile_from_z(100, 1.0).unwrap().hopping_matrix()).unwrap();
        assert!(rel(spec.level(0).unwrap(), 4.5706e-3) < 0.02);
    }

    #[test]
    fn bipartite_matches_dense() {
        let h = build_rainbow_profile(12, 0.8).unwrap().hopping_matrix();
        let a = diagonalize(&h).unwrap();
        let b = diagonalize_dense(&h.to_dense()).unwrap();
        assert_eq!(b.path, SolverPath::Dense);
        for (x, y) in a.energies.iter().zip(&b.energies) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!((&a.orbitals - &b.orbitals).amax() < 1e-10);
        check_invariants(&h, &a);
    }

    #[test]
    fn tiny_levels_keep_relative_accuracy() {
        // reference values from 90-digit arithmetic
        let spec = diagonalize(&build_rainbow_profile(40, 0.5).unwrap().hopping_matrix()).unwrap();
        let expected = [
            -2.6469707946605884e-23,
            -6.599248721278e-24,
            -1.3053644385187635e-24,
            1.3053644385187635e-24,
            6.599248721278e-24,
            2.6469707946605884e-23,
        ];
        for (m, e) in (-3..=2).zip(expected) {
            assert!(rel(spec.level(m).unwrap(), e) < 1e-9, "m={m}");
        }
        let spec = diagonalize(&build_rainbow_profile(24, 0.3).unwrap().hopping_matrix()).unwrap();
        assert!(rel(spec.level(0).unwrap(), 4.062809724495425e-25) < 1e-9);
        assert!(rel(spec.level(2).unwrap(), 5.470949454764798e-23) < 1e-9);
    }

    #[test]
    fn energies_only_path_agrees() {
        let h = build_rainbow_profile(15, 0.6).unwrap().hopping_matrix();
        let full = diagonalize(&h).unwrap().energies;
        assert_eq!(energies(&h).unwrap(), full);
        let odd = HoppingMatrix::chain(&[1.0, 1.0]);
        let e = energies(&odd).unwrap();
        assert!((e[1]).abs() < 1e-15 && (e[2] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn occupations_half_and_excited() {
        let spec = diagonalize(&build_rainbow_profile(50, 0.6).unwrap().hopping_matrix()).unwrap();
        let occ = occupied_orbitals(&spec).unwrap();
        assert_eq!(occ.ncols(), 50);
        assert!(site_occupations(&occ).iter().all(|x| (x - 0.5).abs() < 1e-10));
        let mut excited = occ.clone();
        // promoting into the particle-hole partner leaves |ψ|² unchanged, so skip one level
        excited.set_column(49, &spec.orbitals.column(51));
        let dev = site_occupations(&excited).iter().fold(0.0f64, |m, x| m.max((x - 0.5).abs()));
        assert!(dev > 1e-3);
    }

    #[test]
    fn zero_modes_are_rejected() {
        let spec = diagonalize(&build_lattice_2d(1, 1.0).unwrap().hopping_matrix()).unwrap();
        assert_eq!(spec.path, SolverPath::Dense);
        assert!(matches!(occupied_orbitals(&spec), Err(Error::ZeroModes { count: 2, .. })));
        // the degenerate pair is ordered by the position of its dominant entry
        let a = spec.orbitals.column(1).iamax();
        let b = spec.orbitals.column(2).iamax();
        assert!(a <= b);
    }

    #[test]
    fn dense_contract_errors() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(diagonalize_dense(&m), Err(Error::Contract(_))));
        assert!(matches!(diagonalize_dense(&DMatrix::zeros(2, 3)), Err(Error::Contract(_))));
        let spec = diagonalize(&HoppingMatrix::chain(&[1.0, 1.0])).unwrap();
        assert!(occupied_orbitals(&spec).is_err());
    }

    #[test]
    fn fermi_velocity_estimates() {
        let cases = [(0.0, 1.0, 0.01), (1.0, 0.581977, 0.01), (4.0, 0.074629, 0.02)];
        for (z, a, tol) in cases {
            let spec = diagonalize(&profile_from_z(500, z).unwrap().hopping_matrix()).unwrap();
            let est = fermi_velocity(&spec, 500, z).unwrap();
            assert!(rel(est.a_numeric, a) < tol, "z={z}: {}", est.a_numeric);
            assert!(rel(est.a_analytic, a) < 1e-5);
            assert!(rel(est.a_multilevel.unwrap(), a) < tol);
        }
        let spec = diagonalize(&build_rainbow_profile(1, 1.0).unwrap().hopping_matrix()).unwrap();
        assert!(fermi_velocity(&spec, 1, 0.0).is_err());
    }

    #[test]
    fn velocity_factor_limits() {
        assert_eq!(velocity_factor(0.0), 1.0);
        assert!(rel(velocity_factor(1.0), 0.5819767068693265) < 1e-14);
        let mut prev = velocity_factor(10.0);
        for i in (0..100).rev() {
            let a = velocity_factor(i as f64 * 0.1);
            assert!(a > prev && a <= 1.0);
            prev = a;
        }
    }

    #[test]
    fn csv_and_binary_outputs() {
        let spec = diagonalize(&build_rainbow_profile(2, 0.5).unwrap().hopping_matrix()).unwrap();
        let csv = spec.energies_table().render();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "m,energy");
        assert!(lines[1].starts_with("-2,-"));
        assert!(lines[3].starts_with("0,"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("orb.bin");
        spec.write_orbitals(&path).unwrap();
        let back = crate::io::matrix_from_le_bytes(&std::fs::read(path).unwrap()).unwrap();
        assert_eq!(back, spec.orbitals);
    }

    #[test]
    fn sectors_match_dense_lattice() {
        for (l, alpha) in [(2, 0.7), (3, 0.5), (2, 0.95)] {
            let lat = build_lattice_2d(l, alpha).unwrap();
            let dense = diagonalize(&lat.hopping_matrix()).unwrap();
            let sectors = sector_decomposition_2d(&lat, ZeroModePolicy::Reject).unwrap();
            let mut all: Vec<f64> = sectors.iter().flat_map(|s| s.spectrum.energies.clone()).collect();
            all.sort_by(f64::total_cmp);
            for (a, b) in all.iter().zip(&dense.energies) {
                assert!((a - b).abs() < 1e-12);
            }
            let filled: usize = sectors.iter().map(|s| s.occupied.ncols()).sum();
            assert_eq!(filled, 2 * l * l);
        }
    }

    #[test]
    fn uniform_lattice_zero_mode_policy() {
        let lat = build_lattice_2d(3, 1.0).unwrap();
        assert!(matches!(
            sector_decomposition_2d(&lat, ZeroModePolicy::Reject),
            Err(Error::ZeroModes { .. })
        ));
        let sectors = sector_decomposition_2d(&lat, ZeroModePolicy::LimitFromBelow).unwrap();
        assert!(sectors.iter().all(|s| s.zero_modes == 1));
        let filled: usize = sectors.iter().map(|s| s.occupied.ncols()).sum();
        assert_eq!(filled, 18);
    }

    #[test]
    fn transverse_modes_diagonalize_uniform_chain() {
        let side = 6;
        let t = HoppingMatrix::chain(&vec![1.0; side - 1]).to_dense();
        for k in 1..=side {
            let phi = transverse_mode(side, k);
            let tau = -(std::f64::consts::PI * k as f64 / 7.0).cos();
            assert!((phi.norm() - 1.0).abs() < 1e-14);
            assert!((&t * &phi - &phi * tau).amax() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn spectrum_invariants(half_len in 1usize..40, alpha in 0.05f64..=1.0) {
            let h = build_rainbow_profile(half_len, alpha).unwrap().hopping_matrix();
            let spec = diagonalize(&h).unwrap();
            check_invariants(&h, &spec);
            let occ = occupied_orbitals(&spec).unwrap();
            prop_assert!(site_occupations(&occ).iter().all(|x| (x - 0.5).abs() < 1e-10));
        }

        #[test]
        fn particle_hole_partner(half_len in 1usize..25, alpha in 0.1f64..=1.0, k in 0usize..50) {
            let h = build_rainbow_profile(half_len, alpha).unwrap().hopping_matrix();
            let spec = diagonalize(&h).unwrap();
            let k = k % spec.dim();
            let psi: Vec<f64> = spec.orbitals.column(k).iter().enumerate()
                .map(|(i, x)| if i % 2 == 1 { -x } else { *x }).collect();
            let hp = h.apply(&psi);
            let e = -spec.energies[k];
            let err = hp.iter().zip(&psi).map(|(a, b)| (a - e * b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12);
        }

        #[test]
        fn signed_chains(couplings in proptest::collection::vec(prop_oneof![-2.0f64..-0.01, 0.01f64..2.0], 1..30)) {
            let h = HoppingMatrix::chain(&couplings);
            let spec = diagonalize(&h).unwrap();
            let n = spec.dim();
            prop_assert!((spec.orbitals.transpose() * &spec.orbitals - DMatrix::<f64>::identity(n, n)).amax() < 1e-10);
            for k in 0..n {
                prop_assert!((spec.energies[k] + spec.energies[n - 1 - k]).abs() < 1e-10);
            }
        }
    }
}
