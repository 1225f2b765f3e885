//! Geometry builders: rainbow chains, arbitrary signed chains and the 2D rainbow lattice.
//!
//! Sites of a chain with `2L` sites carry half-odd labels `n = ±1/2, …, ±(L − 1/2)`;
//! internally they are stored at index `i = n + L − 1/2`. Hopping matrices use the
//! convention `H_ij = −J_ij / 2` on every declared link.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Couplings smaller than this are flagged as close to the subnormal range.
pub const UNDERFLOW_WARNING: f64 = 1e-280;

/// Half-odd label of chain index `i` for a chain with `2 * half_len` sites.
pub fn site_label(i: usize, half_len: usize) -> f64 {
    i as f64 - half_len as f64 + 0.5
}

/// Chain index of the half-odd label `n`.
pub fn site_index(label: f64, half_len: usize) -> Option<usize> {
    let i = label + half_len as f64 - 0.5;
    (i >= 0.0 && i.fract() == 0.0 && (i as usize) < 2 * half_len).then_some(i as usize)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

/// Geometry of a mirror-symmetric 1D chain with `2L` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    #[serde(rename = "L")]
    pub half_len: usize,
    pub alpha: f64,
    pub h: f64,
    pub z: f64,
    /// Hopping on each link from the leftmost to the rightmost; the central link is at `L − 1`.
    pub couplings: Vec<f64>,
}

impl CouplingProfile {
    /// Rainbow profile `J_0 = 1`, `J` at distance `k ≥ 1` from the centre equal to `α^{2k−1}`.
    pub fn rainbow(half_len: usize, alpha: f64) -> Result<Self> {
        if half_len == 0 {
            return Err(Error::domain("L must be at least 1"));
        }
        check_alpha(alpha)?;
        let h = -2.0 * alpha.ln();
        Ok(Self::from_h_unchecked(half_len, alpha, h))
    }

    /// Rainbow profile parameterized by `z = hL`.
    pub fn from_z(half_len: usize, z: f64) -> Result<Self> {
        if half_len == 0 {
            return Err(Error::domain("L must be at least 1"));
        }
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::domain(format!("z must be finite and non-negative, got {z}")));
        }
        let h = z / half_len as f64;
        Ok(Self::from_h_unchecked(half_len, (-h / 2.0).exp(), h))
    }

    /// Rainbow profile parameterized by the decay rate `h = −2 ln α`.
    pub fn from_h(half_len: usize, h: f64) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::domain(format!("h must be finite and non-negative, got {h}")));
        }
        Self::from_z(half_len, h * half_len as f64)
    }

    fn from_h_unchecked(half_len: usize, alpha: f64, h: f64) -> Self {
        let center = half_len - 1;
        // log-space keeps very large z from producing spurious zeros
        let couplings = (0..2 * half_len - 1)
            .map(|i| {
                let k = i.abs_diff(center);
                if k == 0 {
                    1.0
                } else {
                    (-h * (2 * k - 1) as f64 / 2.0).exp()
                }
            })
            .collect();
        Self {
            half_len,
            alpha,
            h,
            z: h * half_len as f64,
            couplings,
        }
    }

    pub fn sites(&self) -> usize {
        2 * self.half_len
    }

    pub fn min_coupling(&self) -> f64 {
        self.couplings.iter().fold(f64::INFINITY, |m, c| m.min(c.abs()))
    }

    /// Soft flag: the outermost coupling is close to the subnormal range.
    pub fn underflow_warning(&self) -> bool {
        self.min_coupling() < UNDERFLOW_WARNING
    }

    pub fn hopping_matrix(&self) -> HoppingMatrix {
        HoppingMatrix::chain(&self.couplings)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile serializes")
    }
}

/// Real symmetric single-particle hopping matrix stored as a link list.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingMatrix {
    dim: usize,
    /// `(i, j, H_ij)` with `i < j`; each entry stands for both `(i, j)` and `(j, i)`.
    links: Vec<(usize, usize, f64)>,
}

impl HoppingMatrix {
    /// Open chain with the given link couplings; `H_{i,i+1} = −J_i / 2`.
    pub fn chain(couplings: &[f64]) -> Self {
        let links = couplings
            .iter()
            .enumerate()
            .map(|(i, &j)| (i, i + 1, -0.5 * j))
            .collect();
        Self {
            dim: couplings.len() + 1,
            links,
        }
    }

    /// General hopping matrix from `(i, j, J)` links, again with `H_ij = −J / 2`.
    pub fn from_links(dim: usize, links: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j, amp) in links {
            if i == j || i >= dim || j >= dim {
                return Err(Error::contract(format!("invalid link ({i}, {j}) for dimension {dim}")));
            }
            out.push((i.min(j), i.max(j), -0.5 * amp));
        }
        Ok(Self { dim, links: out })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn links(&self) -> &[(usize, usize, f64)] {
        &self.links
    }

    /// Off-diagonal entries `H_{i,i+1}` when the matrix is a nearest-neighbour open chain.
    pub fn chain_offdiagonal(&self) -> Option<Vec<f64>> {
        if self.dim == 0 || self.links.len() != self.dim - 1 {
            return None;
        }
        let mut off = vec![0.0; self.dim - 1];
        let mut seen = vec![false; self.dim - 1];
        for &(i, j, v) in &self.links {
            if j != i + 1 || seen[i] {
                return None;
            }
            seen[i] = true;
            off[i] = v;
        }
        Some(off)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.links {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        m
    }

    /// Upper bound on the spectral radius (maximum absolute row sum).
    pub fn row_sum_bound(&self) -> f64 {
        let mut rows = vec![0.0; self.dim];
        for &(i, j, v) in &self.links {
            rows[i] += v.abs();
            rows[j] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `H x` without forming the dense matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(i, j, v) in &self.links {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
        y
    }
}

/// A link of the 2D lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link2D {
    pub a: usize,
    pub b: usize,
    pub amplitude: f64,
}

/// The `2L × 2L` rainbow square lattice with hopping `α^{|x_mid|}`.
///
/// Site `(ix, iy)` with `ix, iy ∈ 0..2L` has coordinates `(ix − L + 1/2, iy − L + 1/2)`
/// and index `ix · 2L + iy`. Links are listed vertical first (ordered by `ix`, then `iy`),
/// then horizontal (ordered by `ix`, then `iy`).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice2D {
    pub half_len: usize,
    pub alpha: f64,
    pub sites: Vec<(f64, f64)>,
    pub links: Vec<Link2D>,
}

impl Lattice2D {
    pub fn new(half_len: usize, alpha: f64) -> Result<Self> {
        if half_len == 0 {
            return Err(Error::domain("L must be at least 1"));
        }
        check_alpha(alpha)?;
        let side = 2 * half_len;
        let coord = |i: usize| site_label(i, half_len);
        let sites = (0..side)
            .flat_map(|ix| (0..side).map(move |iy| (coord(ix), coord(iy))))
            .collect();
        let ln_alpha = alpha.ln();
        let amp = |x_mid: f64| (x_mid.abs() * ln_alpha).exp();
        let idx = |ix: usize, iy: usize| ix * side + iy;
        let mut links = Vec::with_capacity(2 * side * (side - 1));
        for ix in 0..side {
            for iy in 0..side - 1 {
                links.push(Link2D {
                    a: idx(ix, iy),
                    b: idx(ix, iy + 1),
                    amplitude: amp(coord(ix)),
                });
            }
        }
        for ix in 0..side - 1 {
            for iy in 0..side {
                links.push(Link2D {
                    a: idx(ix, iy),
                    b: idx(ix + 1, iy),
                    amplitude: amp(0.5 * (coord(ix) + coord(ix + 1))),
                });
            }
        }
        Ok(Self {
            half_len,
            alpha,
            sites,
            links,
        })
    }

    pub fn side(&self) -> usize {
        2 * self.half_len
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.side() + iy
    }

    pub fn hopping_matrix(&self) -> HoppingMatrix {
        HoppingMatrix::from_links(self.sites.len(), self.links.iter().map(|l| (l.a, l.b, l.amplitude)))
            .expect("lattice links are valid by construction")
    }

    /// Sites with `x < 0`, in index order.
    pub fn left_half(&self) -> Vec<usize> {
        (0..self.sites.len()).filter(|&s| self.sites[s].0 < 0.0).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "L": self.half_len,
            "alpha": self.alpha,
            "links": self.links.iter().map(|l| serde_json::json!([l.a, l.b, l.amplitude])).collect::<Vec<_>>(),
        })
        .to_string()
    }
}

pub fn build_rainbow_profile(half_len: usize, alpha: f64) -> Result<CouplingProfile> {
    CouplingProfile::rainbow(half_len, alpha)
}

pub fn profile_from_z(half_len: usize, z: f64) -> Result<CouplingProfile> {
    CouplingProfile::from_z(half_len, z)
}

pub fn hopping_matrix_1d(profile: &CouplingProfile) -> HoppingMatrix {
    profile.hopping_matrix()
}

pub fn build_lattice_2d(half_len: usize, alpha: f64) -> Result<Lattice2D> {
    Lattice2D::new(half_len, alpha)
}

pub fn hopping_matrix_2d(lattice: &Lattice2D) -> HoppingMatrix {
    lattice.hopping_matrix()
}
