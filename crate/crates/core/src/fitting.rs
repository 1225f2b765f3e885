//! Linear least squares and the scaling ansätze fitted to entropy data.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::continuum::ln_effective_length;
use crate::entanglement::{halfchain_grid, EntropyCurve};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table};

/// `|R_jj|` below this fraction of the column norm counts as a lost rank.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Unnormalized sum of squared residuals.
    pub chi2: f64,
    pub dof: usize,
    /// `σ̂² (RᵀR)⁻¹` with `σ̂² = χ²/dof` (zero when `dof = 0`).
    pub covariance: DMatrix<f64>,
    /// Ratio of extreme singular values of the design matrix.
    pub condition: f64,
}

#[derive(Serialize)]
struct FitJson<'a> {
    model: &'a str,
    coeffs: serde_json::Map<String, serde_json::Value>,
    stderr: serde_json::Map<String, serde_json::Value>,
    chi2: f64,
    dof: usize,
    condition: f64,
}

impl FitResult {
    pub fn coeff(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    pub fn to_json(&self) -> String {
        let map = |f: &dyn Fn(usize) -> f64| {
            self.names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), serde_json::json!(f(i))))
                .collect()
        };
        serde_json::to_string_pretty(&FitJson {
            model: &self.model,
            coeffs: map(&|i| self.coefficients[i]),
            stderr: map(&|i| self.covariance[(i, i)].max(0.0).sqrt()),
            chi2: self.chi2,
            dof: self.dof,
            condition: self.condition,
        })
        .expect("fit results serialize")
    }
}

/// Minimizes `‖Xβ − y‖²` through a Householder QR factorization.
pub fn linear_lsq(model: &str, names: &[&str], design: &DMatrix<f64>, y: &DVector<f64>) -> Result<FitResult> {
    let (rows, cols) = design.shape();
    if names.len() != cols || y.len() != rows {
        return Err(Error::contract(format!(
            "design is {rows}x{cols} but got {} names and {} observations",
            names.len(),
            y.len()
        )));
    }
    if cols == 0 || rows < cols {
        return Err(Error::domain(format!("need at least as many observations ({rows}) as coefficients ({cols})")));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..cols {
        let norm = design.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm {
            return Err(Error::RankDeficient {
                column: j,
                name: names[j].to_string(),
            });
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numeric {
            context: "least squares",
            detail: "triangular solve failed".into(),
        })?;
    let residual = design * &beta - y;
    let chi2 = residual.norm_squared();
    let dof = rows - cols;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or_else(|| Error::Numeric {
            context: "least squares",
            detail: "covariance inversion failed".into(),
        })?;
    let sigma2 = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
    let covariance = &r_inv * r_inv.transpose() * sigma2;
    let sv = design.clone().singular_values();
    let condition = sv.max() / sv.min();
    Ok(FitResult {
        model: model.to_string(),
        names: names.iter().map(|s| s.to_string()).collect(),
        coefficients: beta.iter().copied().collect(),
        chi2,
        dof,
        covariance,
        condition,
    })
}

fn design_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// `(1/12)(1 + 1/n)`, which is `1/6` for the von Neumann entropy.
pub fn log_prefactor(n: f64) -> f64 {
    (1.0 + 1.0 / n) / 12.0
}

/// Abscissa used by the central-charge fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthScale {
    /// `ln L`.
    Plain,
    /// `ln L̃` with each point's own `h = z/L`.
    Deformed,
}

/// Fits `S = c·(1/12)(1 + 1/n)·ln ℓ + c′` over the points of order `n`.
pub fn fit_central_charge(curve: &EntropyCurve, n: f64, scale: LengthScale) -> Result<FitResult> {
    let pts: Vec<_> = curve.points.iter().filter(|p| p.n == n).collect();
    let mut sizes: Vec<usize> = pts.iter().map(|p| p.half_len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::domain(format!("central-charge fit needs at least 3 sizes, got {}", sizes.len())));
    }
    let k = log_prefactor(n);
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let l = p.half_len as f64;
            let x = match scale {
                LengthScale::Plain => l.ln(),
                LengthScale::Deformed => ln_effective_length(p.z / l, l),
            };
            vec![k * x, 1.0]
        })
        .collect();
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.s));
    linear_lsq("central_charge", &["c", "c_prime"], &design_from_rows(&rows), &y)
}

/// Basis `{(1/12)(1+1/n) ln(4L/π), 1, (−1)^L (8L/π)^{−1/n}}` at one size.
pub fn renyi_basis(half_len: usize, n: f64) -> [f64; 3] {
    let l = half_len as f64;
    let parity = if half_len % 2 == 0 { 1.0 } else { -1.0 };
    [log_prefactor(n) * (4.0 * l / PI).ln(), 1.0, parity * (8.0 * l / PI).powf(-1.0 / n)]
}

/// Fits `c_n(z)`, `d_n(z)`, `f_n(z)` with `K = 1` to half-chain data of order `n` at one `z`.
pub fn fit_renyi_halfchain(curve: &EntropyCurve, n: f64, z: f64) -> Result<FitResult> {
    let pts: Vec<_> = curve.points.iter().filter(|p| p.n == n && p.z == z).collect();
    let mut sizes: Vec<usize> = pts.iter().map(|p| p.half_len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 6 {
        return Err(Error::domain(format!("Rényi fit needs at least 6 sizes, got {}", sizes.len())));
    }
    if sizes.iter().all(|l| l % 2 == 0) || sizes.iter().all(|l| l % 2 == 1) {
        // the oscillation column is then indistinguishable from a smooth correction
        return Err(Error::RankDeficient {
            column: 2,
            name: "f".into(),
        });
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| renyi_basis(p.half_len, n).to_vec()).collect();
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.s));
    linear_lsq("renyi_halfchain", &["c", "d", "f"], &design_from_rows(&rows), &y)
}

/// Known oscillation amplitudes: `f_1 = −1`; higher orders are fit-determined.
pub fn fn_constants(n: u32) -> Option<f64> {
    (n == 1).then_some(-1.0)
}

/// `ln((e^z − 1)/z)`, zero at `z = 0`.
pub fn ln_stretch(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        z / 2.0
    } else if z > 30.0 {
        z + (-(-z).exp()).ln_1p() - z.ln()
    } else {
        (z.exp_m1() / z).ln()
    }
}

/// `d_n(z) = d_n(0) + (1/12)(1 + 1/n) ln((e^z − 1)/z)`.
pub fn d_prediction(d0: f64, n: f64, z: f64) -> f64 {
    d0 + log_prefactor(n) * ln_stretch(z)
}

/// `f_n(z) = f_n(0) ((e^z − 1)/z)^{−1/n}`.
pub fn f_prediction(f0: f64, n: f64, z: f64) -> f64 {
    f0 * (-ln_stretch(z) / n).exp()
}

/// Fitted and predicted Rényi coefficients at one `(n, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenyiCoefficients {
    pub n: f64,
    pub z: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    pub d_predicted: f64,
    pub f_predicted: f64,
    pub chi2: f64,
}

/// Fits every `(n, z)` and overlays the predictions anchored at the `z = 0` fit.
pub fn renyi_coefficient_curves(half_lens: &[usize], zs: &[f64], orders: &[f64]) -> Result<Vec<RenyiCoefficients>> {
    let mut all_z = vec![0.0];
    all_z.extend(zs.iter().copied().filter(|z| *z != 0.0));
    let curve = halfchain_grid(half_lens, &all_z, orders)?;
    let fits: Vec<(f64, f64, FitResult)> = orders
        .iter()
        .flat_map(|&n| all_z.iter().map(move |&z| (n, z)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(n, z)| fit_renyi_halfchain(&curve, n, z).map(|f| (n, z, f)))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &n in orders {
        let base = &fits.iter().find(|(m, z, _)| *m == n && *z == 0.0).expect("z = 0 is always fitted").2;
        let (d0, f0) = (base.coefficients[1], base.coefficients[2]);
        for z in zs {
            let fit = &fits.iter().find(|(m, w, _)| *m == n && w == z).expect("every z is fitted").2;
            out.push(RenyiCoefficients {
                n,
                z: *z,
                c: fit.coefficients[0],
                d: fit.coefficients[1],
                f: fit.coefficients[2],
                d_predicted: d_prediction(d0, n, *z),
                f_predicted: f_prediction(f0, n, *z),
                chi2: fit.chi2,
            });
        }
    }
    Ok(out)
}

pub fn coefficients_table(rows: &[RenyiCoefficients]) -> Table {
    let mut t = Table::new(&["n", "z", "c", "d", "f", "d_pred", "f_pred", "chi2"]);
    for r in rows {
        t.push(
            [r.n, r.z, r.c, r.d, r.f, r.d_predicted, r.f_predicted, r.chi2]
                .iter()
                .map(|x| fmt_f64(*x))
                .collect(),
        );
    }
    t
}

/// How left-half entropies of the 2D lattice are normalized before fitting `s = A·x + B·ln x + C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization2D {
    /// `x = L`, `s = S/L` in nats.
    HalfSideNats,
    /// `x = 2L` (the lattice side), `s = S/(2L)` in bits.
    SideBits,
}

impl Normalization2D {
    pub fn apply(self, half_len: usize, s: f64) -> (f64, f64) {
        match self {
            Self::HalfSideNats => (half_len as f64, s / half_len as f64),
            Self::SideBits => {
                let side = 2.0 * half_len as f64;
                (side, s / side / LN_2)
            }
        }
    }
}

/// Fits `s = A·x + B·ln x + C` to `(L, S)` pairs.
pub fn fit_2d(data: &[(usize, f64)], norm: Normalization2D) -> Result<FitResult> {
    let mut sizes: Vec<usize> = data.iter().map(|d| d.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 5 {
        return Err(Error::domain(format!("2D fit needs at least 5 sizes, got {}", sizes.len())));
    }
    let (rows, ys): (Vec<Vec<f64>>, Vec<f64>) = data
        .iter()
        .map(|&(l, s)| {
            let (x, y) = norm.apply(l, s);
            (vec![x, x.ln(), 1.0], y)
        })
        .unzip();
    linear_lsq("entropy_2d", &["A", "B", "C"], &design_from_rows(&rows), &DVector::from_vec(ys))
}
