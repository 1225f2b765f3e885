//! Linear-algebra kernels that the dense library routines do not cover.
//!
//! The centrepiece is an implicit-QR SVD for real bidiagonal matrices that
//! computes every singular value to high *relative* accuracy, following the
//! Demmel–Kahan zero-shift scheme (the algorithm behind LAPACK's `dbdsqr`).
//! Rainbow chains have couplings that decay like `e^{-z}`, so the single-particle
//! levels near the Fermi point are many orders of magnitude below machine
//! epsilon times the spectral radius. A dense symmetric eigensolver only resolves
//! levels to absolute accuracy `eps * |H|` and silently mixes those orbitals;
//! the bidiagonal route keeps them distinct.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_QR_SWEEPS_PER_VALUE: usize = 6;

/// Singular value decomposition `B = U diag(sigma) V^T` of an upper bidiagonal matrix.
#[derive(Debug, Clone)]
pub struct BidiagonalSvd {
    /// Singular values in descending order, all non-negative.
    pub sigma: Vec<f64>,
    pub u: Option<DMatrix<f64>>,
    pub v: Option<DMatrix<f64>>,
}

/// Generate a plane rotation with `c*f + s*g = r` and `-s*f + c*g = 0`.
fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else if f == 0.0 {
        (0.0, g.signum(), g.abs())
    } else {
        let d = f.hypot(g);
        let r = d.copysign(f);
        (f.abs() / d, g / r, r)
    }
}

/// Singular values `(ssmin, ssmax)` of the 2x2 triangle `[[f, g], [0, h]]`.
fn svd2x2_values(f: f64, g: f64, h: f64) -> (f64, f64) {
    let fa = f.abs();
    let ga = g.abs();
    let ha = h.abs();
    let fhmn = fa.min(ha);
    let fhmx = fa.max(ha);
    if fhmn == 0.0 {
        let ssmax = if fhmx == 0.0 {
            ga
        } else {
            let (lo, hi) = (fhmx.min(ga), fhmx.max(ga));
            hi * (1.0 + (lo / hi).powi(2)).sqrt()
        };
        return (0.0, ssmax);
    }
    if ga < fhmx {
        let as_ = 1.0 + fhmn / fhmx;
        let at = (fhmx - fhmn) / fhmx;
        let au = (ga / fhmx).powi(2);
        let c = 2.0 / ((as_ * as_ + au).sqrt() + (at * at + au).sqrt());
        (fhmn * c, fhmx / c)
    } else {
        let au = fhmx / ga;
        if au == 0.0 {
            ((fhmn * fhmx) / ga, ga)
        } else {
            let as_ = 1.0 + fhmn / fhmx;
            let at = (fhmx - fhmn) / fhmx;
            let c = 1.0 / ((1.0 + (as_ * au).powi(2)).sqrt() + (1.0 + (at * au).powi(2)).sqrt());
            let ssmin = 2.0 * (fhmn * c) * au;
            (ssmin, ga / (c + c))
        }
    }
}

/// Full SVD of `[[f, g], [0, h]]`.
///
/// Returns `(ssmin, ssmax, snr, csr, snl, csl)` with
/// `[[csl, snl], [-snl, csl]] * [[f, g], [0, h]] * [[csr, -snr], [snr, csr]] = diag(ssmax, ssmin)`.
fn svd2x2(f: f64, g: f64, h: f64) -> (f64, f64, f64, f64, f64, f64) {
    let mut ft = f;
    let mut fa = ft.abs();
    let mut ht = h;
    let mut ha = h.abs();
    let mut pmax = 1;
    let swap = ha > fa;
    if swap {
        pmax = 3;
        std::mem::swap(&mut ft, &mut ht);
        std::mem::swap(&mut fa, &mut ha);
    }
    let gt = g;
    let ga = gt.abs();
    let (mut ssmin, mut ssmax);
    let (clt, crt, slt, srt);
    if ga == 0.0 {
        ssmin = ha;
        ssmax = fa;
        clt = 1.0;
        crt = 1.0;
        slt = 0.0;
        srt = 0.0;
    } else {
        let mut gasmal = true;
        let mut tmp = (0.0, 0.0, 0.0, 0.0);
        ssmin = 0.0;
        ssmax = 0.0;
        if ga > fa {
            pmax = 2;
            if fa / ga < f64::EPSILON * 0.5 {
                gasmal = false;
                ssmax = ga;
                ssmin = if ha > 1.0 { fa / (ga / ha) } else { (fa / ga) * ha };
                tmp = (1.0, ft / gt, ht / gt, 1.0);
            }
        }
        if gasmal {
            let d = fa - ha;
            let mut l = if d == fa { 1.0 } else { d / fa };
            let m = gt / ft;
            let mut t = 2.0 - l;
            let mm = m * m;
            let tt = t * t;
            let s = (tt + mm).sqrt();
            let r = if l == 0.0 { m.abs() } else { (l * l + mm).sqrt() };
            let a = 0.5 * (s + r);
            ssmin = ha / a;
            ssmax = fa * a;
            if mm == 0.0 {
                t = if l == 0.0 {
                    2.0_f64.copysign(ft) * 1.0_f64.copysign(gt)
                } else {
                    gt / d.copysign(ft) + m / t
                };
            } else {
                t = (m / (s + t) + m / (r + l)) * (1.0 + a);
            }
            l = (t * t + 4.0).sqrt();
            let crt_ = 2.0 / l;
            let srt_ = t / l;
            let clt_ = (crt_ + srt_ * m) / a;
            let slt_ = (ht / ft) * srt_ / a;
            tmp = (clt_, crt_, slt_, srt_);
        }
        clt = tmp.0;
        crt = tmp.1;
        slt = tmp.2;
        srt = tmp.3;
    }
    let (csl, snl, csr, snr) = if swap {
        (srt, crt, slt, clt)
    } else {
        (clt, slt, crt, srt)
    };
    let sgn = |x: f64| 1.0_f64.copysign(x);
    let tsign = match pmax {
        1 => sgn(csr) * sgn(csl) * sgn(f),
        2 => sgn(snr) * sgn(csl) * sgn(g),
        _ => sgn(snr) * sgn(snl) * sgn(h),
    };
    ssmax = ssmax.abs().copysign(tsign);
    ssmin = ssmin.abs().copysign(tsign * sgn(f) * sgn(h));
    (ssmin, ssmax, snr, csr, snl, csl)
}

/// Rotate columns `j` and `j + 1` of `mat` in place.
#[inline]
fn rotate_columns(mat: &mut DMatrix<f64>, j: usize, c: f64, s: f64) {
    let nrows = mat.nrows();
    let (left, right) = mat.as_mut_slice().split_at_mut((j + 1) * nrows);
    let colj = &mut left[j * nrows..];
    let colk = &mut right[..nrows];
    for (a, b) in colj.iter_mut().zip(colk.iter_mut()) {
        let temp = *b;
        *b = c * temp - s * *a;
        *a = s * temp + c * *a;
    }
}

fn apply_sequence(
    mat: &mut Option<DMatrix<f64>>,
    offset: usize,
    cs: &[f64],
    sn: &[f64],
    forward: bool,
) {
    if let Some(mat) = mat.as_mut() {
        if forward {
            for (j, (&c, &s)) in cs.iter().zip(sn).enumerate() {
                rotate_columns(mat, offset + j, c, s);
            }
        } else {
            for (j, (&c, &s)) in cs.iter().zip(sn).enumerate().rev() {
                rotate_columns(mat, offset + j, c, s);
            }
        }
    }
}

/// SVD of the upper bidiagonal matrix with diagonal `diag` and superdiagonal `superdiag`.
///
/// Singular values carry high relative accuracy regardless of grading.
pub fn bidiagonal_svd(diag: &[f64], superdiag: &[f64], vectors: bool) -> Result<BidiagonalSvd> {
    let n = diag.len();
    if n == 0 {
        return Ok(BidiagonalSvd {
            sigma: vec![],
            u: vectors.then(|| DMatrix::zeros(0, 0)),
            v: vectors.then(|| DMatrix::zeros(0, 0)),
        });
    }
    if superdiag.len() + 1 != n {
        return Err(Error::contract(format!(
            "bidiagonal matrix with {n} diagonal entries needs {} superdiagonal entries, got {}",
            n - 1,
            superdiag.len()
        )));
    }
    if diag.iter().chain(superdiag).any(|x| !x.is_finite()) {
        return Err(Error::domain("bidiagonal entries must be finite"));
    }

    let mut d = diag.to_vec();
    let mut e = superdiag.to_vec();
    let mut u = vectors.then(|| DMatrix::<f64>::identity(n, n));
    let mut v = vectors.then(|| DMatrix::<f64>::identity(n, n));

    let eps = f64::EPSILON * 0.5;
    let unfl = f64::MIN_POSITIVE;
    let tolmul = 10.0_f64.max(100.0_f64.min(eps.powf(-0.125)));
    let tol = tolmul * eps;

    if n > 1 {
        // Lower bound on the smallest singular value sets the absolute deflation floor.
        let mut sminoa = d[0].abs();
        if sminoa != 0.0 {
            let mut mu = sminoa;
            for i in 1..n {
                mu = d[i].abs() * (mu / (mu + e[i - 1].abs()));
                sminoa = sminoa.min(mu);
                if sminoa == 0.0 {
                    break;
                }
            }
        }
        sminoa /= (n as f64).sqrt();
        let maxit = MAX_QR_SWEEPS_PER_VALUE * n * n;
        let thresh = (tol * sminoa).max(maxit as f64 * unfl);

        let mut cs_r = vec![0.0; n];
        let mut sn_r = vec![0.0; n];
        let mut cs_l = vec![0.0; n];
        let mut sn_l = vec![0.0; n];

        let mut iter = 0usize;
        let mut oldll: isize = -1;
        let mut oldm: isize = -1;
        let mut idir = 0u8;
        let mut m = n - 1;

        'outer: while m > 0 {
            if iter > maxit {
                return Err(Error::Numeric {
                    context: "bidiagonal_svd",
                    detail: format!("no convergence after {iter} inner steps (n = {n})"),
                });
            }

            // Locate the bottom unreduced block d[ll..=m].
            let mut smax = d[m].abs();
            let mut split = None;
            for lll in 1..=m {
                let ll = m - lll;
                let abss = d[ll].abs();
                let abse = e[ll].abs();
                if abse <= thresh {
                    e[ll] = 0.0;
                    split = Some(ll);
                    break;
                }
                smax = smax.max(abss).max(abse);
            }
            let ll = match split {
                None => 0,
                Some(ll) if ll == m - 1 => {
                    m -= 1;
                    continue;
                }
                Some(ll) => ll + 1,
            };

            if ll == m - 1 {
                let (sigmn, sigmx, sinr, cosr, sinl, cosl) = svd2x2(d[m - 1], e[m - 1], d[m]);
                d[m - 1] = sigmx;
                e[m - 1] = 0.0;
                d[m] = sigmn;
                if let Some(v) = v.as_mut() {
                    rotate_columns(v, m - 1, cosr, sinr);
                }
                if let Some(u) = u.as_mut() {
                    rotate_columns(u, m - 1, cosl, sinl);
                }
                if m < 2 {
                    break;
                }
                m -= 2;
                continue;
            }

            // Chase the bulge from the larger end of a fresh block.
            if ll as isize > oldm || (m as isize) < oldll {
                idir = if d[ll].abs() >= d[m].abs() { 1 } else { 2 };
            }

            let sminl;
            if idir == 1 {
                if e[m - 1].abs() <= tol * d[m].abs() {
                    e[m - 1] = 0.0;
                    continue;
                }
                let mut mu = d[ll].abs();
                let mut smin_run = mu;
                for lll in ll..m {
                    if e[lll].abs() <= tol * mu {
                        e[lll] = 0.0;
                        continue 'outer;
                    }
                    mu = d[lll + 1].abs() * (mu / (mu + e[lll].abs()));
                    smin_run = smin_run.min(mu);
                }
                sminl = smin_run;
            } else {
                if e[ll].abs() <= tol * d[ll].abs() {
                    e[ll] = 0.0;
                    continue;
                }
                let mut mu = d[m].abs();
                let mut smin_run = mu;
                for lll in (ll..m).rev() {
                    if e[lll].abs() <= tol * mu {
                        e[lll] = 0.0;
                        continue 'outer;
                    }
                    mu = d[lll].abs() * (mu / (mu + e[lll].abs()));
                    smin_run = smin_run.min(mu);
                }
                sminl = smin_run;
            }
            oldll = ll as isize;
            oldm = m as isize;

            // A shift that would swamp the smallest singular value is replaced by zero.
            let mut shift = 0.0;
            if (n as f64) * tol * (sminl / smax) > eps.max(0.01 * tol) {
                let sll;
                if idir == 1 {
                    sll = d[ll].abs();
                    shift = svd2x2_values(d[m - 1], e[m - 1], d[m]).0;
                } else {
                    sll = d[m].abs();
                    shift = svd2x2_values(d[ll], e[ll], d[ll + 1]).0;
                }
                if sll > 0.0 && (shift / sll).powi(2) < eps {
                    shift = 0.0;
                }
            }

            iter += m - ll;
            let k = m - ll;

            if shift == 0.0 {
                if idir == 1 {
                    let mut cs = 1.0;
                    let mut oldcs = 1.0;
                    let mut oldsn = 0.0;
                    for i in ll..m {
                        let (c, s, r) = givens(d[i] * cs, e[i]);
                        cs = c;
                        let sn = s;
                        if i > ll {
                            e[i - 1] = oldsn * r;
                        }
                        let (oc, os, di) = givens(oldcs * r, d[i + 1] * sn);
                        oldcs = oc;
                        oldsn = os;
                        d[i] = di;
                        cs_r[i - ll] = cs;
                        sn_r[i - ll] = sn;
                        cs_l[i - ll] = oldcs;
                        sn_l[i - ll] = oldsn;
                    }
                    let h = d[m] * cs;
                    d[m] = h * oldcs;
                    e[m - 1] = h * oldsn;
                    apply_sequence(&mut v, ll, &cs_r[..k], &sn_r[..k], true);
                    apply_sequence(&mut u, ll, &cs_l[..k], &sn_l[..k], true);
                    if e[m - 1].abs() <= thresh {
                        e[m - 1] = 0.0;
                    }
                } else {
                    let mut cs = 1.0;
                    let mut oldcs = 1.0;
                    let mut oldsn = 0.0;
                    for i in (ll + 1..=m).rev() {
                        let (c, s, r) = givens(d[i] * cs, e[i - 1]);
                        cs = c;
                        let sn = s;
                        if i < m {
                            e[i] = oldsn * r;
                        }
                        let (oc, os, di) = givens(oldcs * r, d[i - 1] * sn);
                        oldcs = oc;
                        oldsn = os;
                        d[i] = di;
                        let j = i - ll - 1;
                        cs_r[j] = cs;
                        sn_r[j] = -sn;
                        cs_l[j] = oldcs;
                        sn_l[j] = -oldsn;
                    }
                    let h = d[ll] * cs;
                    d[ll] = h * oldcs;
                    e[ll] = h * oldsn;
                    apply_sequence(&mut v, ll, &cs_l[..k], &sn_l[..k], false);
                    apply_sequence(&mut u, ll, &cs_r[..k], &sn_r[..k], false);
                    if e[ll].abs() <= thresh {
                        e[ll] = 0.0;
                    }
                }
            } else if idir == 1 {
                let mut f = (d[ll].abs() - shift) * (1.0_f64.copysign(d[ll]) + shift / d[ll]);
                let mut g = e[ll];
                for i in ll..m {
                    let (cosr, sinr, r) = givens(f, g);
                    if i > ll {
                        e[i - 1] = r;
                    }
                    f = cosr * d[i] + sinr * e[i];
                    e[i] = cosr * e[i] - sinr * d[i];
                    g = sinr * d[i + 1];
                    d[i + 1] *= cosr;
                    let (cosl, sinl, r) = givens(f, g);
                    d[i] = r;
                    f = cosl * e[i] + sinl * d[i + 1];
                    d[i + 1] = cosl * d[i + 1] - sinl * e[i];
                    if i + 1 < m {
                        g = sinl * e[i + 1];
                        e[i + 1] *= cosl;
                    }
                    cs_r[i - ll] = cosr;
                    sn_r[i - ll] = sinr;
                    cs_l[i - ll] = cosl;
                    sn_l[i - ll] = sinl;
                }
                e[m - 1] = f;
                apply_sequence(&mut v, ll, &cs_r[..k], &sn_r[..k], true);
                apply_sequence(&mut u, ll, &cs_l[..k], &sn_l[..k], true);
                if e[m - 1].abs() <= thresh {
                    e[m - 1] = 0.0;
                }
            } else {
                let mut f = (d[m].abs() - shift) * (1.0_f64.copysign(d[m]) + shift / d[m]);
                let mut g = e[m - 1];
                for i in (ll + 1..=m).rev() {
                    let (cosr, sinr, r) = givens(f, g);
                    if i < m {
                        e[i] = r;
                    }
                    f = cosr * d[i] + sinr * e[i - 1];
                    e[i - 1] = cosr * e[i - 1] - sinr * d[i];
                    g = sinr * d[i - 1];
                    d[i - 1] *= cosr;
                    let (cosl, sinl, r) = givens(f, g);
                    d[i] = r;
                    f = cosl * e[i - 1] + sinl * d[i - 1];
                    d[i - 1] = cosl * d[i - 1] - sinl * e[i - 1];
                    if i > ll + 1 {
                        g = sinl * e[i - 2];
                        e[i - 2] *= cosl;
                    }
                    let j = i - ll - 1;
                    cs_r[j] = cosr;
                    sn_r[j] = -sinr;
                    cs_l[j] = cosl;
                    sn_l[j] = -sinl;
                }
                e[ll] = f;
                if e[ll].abs() <= thresh {
                    e[ll] = 0.0;
                }
                apply_sequence(&mut u, ll, &cs_r[..k], &sn_r[..k], false);
                apply_sequence(&mut v, ll, &cs_l[..k], &sn_l[..k], false);
            }
        }
    }

    for (i, di) in d.iter_mut().enumerate() {
        if *di < 0.0 {
            *di = -*di;
            if let Some(v) = v.as_mut() {
                v.column_mut(i).neg_mut();
            }
        }
    }

    // Selection sort keeps the number of column swaps at n - 1.
    for i in 0..n.saturating_sub(1) {
        let (mut isub, mut smin) = (i, d[i]);
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj > smin {
                isub = j;
                smin = dj;
            }
        }
        if isub != i {
            d.swap(i, isub);
            if let Some(u) = u.as_mut() {
                u.swap_columns(i, isub);
            }
            if let Some(v) = v.as_mut() {
                v.swap_columns(i, isub);
            }
        }
    }

    Ok(BidiagonalSvd { sigma: d, u, v })
}

/// Determinant of a small dense matrix via LU.
pub fn determinant(mat: &DMatrix<f64>) -> f64 {
    if mat.nrows() == 0 {
        return 1.0;
    }
    mat.clone().lu().determinant()
}

/// Eigenvalues and eigenvectors of a dense symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(mat: &DMatrix<f64>, max_sweeps: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = mat.nrows();
    let eig = mat
        .clone()
        .try_symmetric_eigen(f64::EPSILON, max_sweeps)
        .ok_or_else(|| Error::Numeric {
            context: "symmetric_eigen",
            detail: format!("no convergence within {max_sweeps} sweeps for a {n}x{n} matrix"),
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigenvalues of a dense symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(mat: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = mat.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(d: &[f64], e: &[f64]) -> DMatrix<f64> {
        let n = d.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if j == i + 1 {
                e[i]
            } else {
                0.0
            }
        })
    }

    fn check_decomposition(d: &[f64], e: &[f64]) -> BidiagonalSvd {
        let svd = bidiagonal_svd(d, e, true).unwrap();
        let n = d.len();
        let u = svd.u.as_ref().unwrap();
        let v = svd.v.as_ref().unwrap();
        let id = DMatrix::<f64>::identity(n, n);
        assert!((u.transpose() * u - &id).amax() < 1e-13);
        assert!((v.transpose() * v - &id).amax() < 1e-13);
        let b = dense(d, e);
        let recon = u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(svd.sigma.clone())) * v.transpose();
        assert!((recon - &b).amax() < 1e-13 * b.amax().max(1.0));
        for w in svd.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        svd
    }

    #[test]
    fn two_by_two_rotation_diagonalizes() {
        for &(f, g, h) in &[(1.0, 2.0, 3.0), (3.0, -0.5, 1e-9), (-2.0, 1e-20, 0.5), (1e-8, 1.0, 1e-8)] {
            let (ssmin, ssmax, snr, csr, snl, csl) = svd2x2(f, g, h);
            let l = DMatrix::from_row_slice(2, 2, &[csl, snl, -snl, csl]);
            let b = DMatrix::from_row_slice(2, 2, &[f, g, 0.0, h]);
            let r = DMatrix::from_row_slice(2, 2, &[csr, -snr, snr, csr]);
            let out = l * b * r;
            let scale = ssmax.abs();
            assert!((out[(0, 0)] - ssmax).abs() <= 1e-14 * scale);
            assert!((out[(1, 1)] - ssmin).abs() <= 1e-14 * scale);
            assert!(out[(0, 1)].abs() <= 1e-14 * scale && out[(1, 0)].abs() <= 1e-14 * scale);
            let (vmin, vmax) = svd2x2_values(f, g, h);
            assert!((vmin - ssmin.abs()).abs() <= 1e-14 * scale);
            assert!((vmax - ssmax.abs()).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn matches_dense_svd_on_generic_input() {
        let d = [1.3, -0.7, 2.1, 0.4, 0.9, -1.6];
        let e = [0.5, 1.1, -0.3, 0.8, 0.25];
        let svd = check_decomposition(&d, &e);
        let mut reference: Vec<f64> = dense(&d, &e).singular_values().iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in svd.sigma.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn graded_matrix_keeps_relative_accuracy() {
        // d_i = 10^{-4i}, e_i = 10^{-4i-2}: the exact singular values are within a
        // relative 1e-4 of the diagonal, far below eps * sigma_max for large i.
        let n = 12;
        let d: Vec<f64> = (0..n).map(|i| 10f64.powi(-4 * i as i32)).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 10f64.powi(-4 * i as i32 - 2)).collect();
        let svd = check_decomposition(&d, &e);
        // product of singular values equals |det B| = product of the diagonal
        let log_det: f64 = d.iter().map(|x| x.ln()).sum();
        let log_prod: f64 = svd.sigma.iter().map(|x| x.ln()).sum();
        assert!((log_det - log_prod).abs() < 1e-12 * log_det.abs());
        for (s, di) in svd.sigma.iter().zip(&d) {
            assert!((s / di - 1.0).abs() < 2e-4, "{s} vs {di}");
        }
    }

    #[test]
    fn handles_trivial_sizes() {
        let svd = bidiagonal_svd(&[-3.0], &[], true).unwrap();
        assert_eq!(svd.sigma, vec![3.0]);
        assert_eq!(svd.v.unwrap()[(0, 0)], -1.0);
        check_decomposition(&[2.0, 0.0], &[1.0]);
        check_decomposition(&[0.0, 0.0, 1.0], &[1.0, 0.0]);
    }

    #[test]
    fn values_only_agree_with_vector_run() {
        let d = [0.9, 0.4, 1.7, 0.2, 1.1];
        let e = [0.3, -0.6, 0.9, 0.05];
        let a = bidiagonal_svd(&d, &e, true).unwrap();
        let b = bidiagonal_svd(&d, &e, false).unwrap();
        assert!(b.u.is_none() && b.v.is_none());
        for (x, y) in a.sigma.iter().zip(&b.sigma) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(bidiagonal_svd(&[1.0, 2.0], &[], false), Err(Error::Contract(_))));
        assert!(matches!(bidiagonal_svd(&[f64::NAN], &[], false), Err(Error::Domain(_))));
    }
}
