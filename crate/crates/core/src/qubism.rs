//! Full many-body amplitudes of small Slater states, qubism images and Schmidt ranks.
//!
//! Configurations are `N`-bit integers with site 0 (leftmost) in the most significant bit.
//! A configuration's amplitude is the determinant of the occupied-orbital rows at its
//! occupied sites taken in increasing order, which fixes the Jordan-Wigner signs.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_bytes, Table};
use crate::linalg::determinant;

pub const MAX_SITES: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    pub n_sites: usize,
    pub filling: usize,
    /// Indexed by configuration; length `2^N`.
    pub amplitudes: Vec<f64>,
}

impl AmplitudeTable {
    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<f64>) -> Result<Self> {
        if n_sites > MAX_SITES {
            return Err(Error::Resource(format!("{n_sites} sites exceeds the cap of {MAX_SITES}")));
        }
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::contract(format!("expected {} amplitudes, got {}", 1usize << n_sites, amplitudes.len())));
        }
        let filling = amplitudes
            .iter()
            .enumerate()
            .find(|(_, a)| **a != 0.0)
            .map(|(c, _)| c.count_ones() as usize)
            .unwrap_or(0);
        Ok(Self {
            n_sites,
            filling,
            amplitudes,
        })
    }

    pub fn amplitude(&self, config: usize) -> f64 {
        self.amplitudes[config]
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// Occupation bitstring of a configuration, site 0 first.
    pub fn bitstring(&self, config: usize) -> String {
        (0..self.n_sites)
            .map(|i| if config >> (self.n_sites - 1 - i) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// `2^l × 2^{N−l}` matrix with the first `l` sites as the row index.
    pub fn bipartition_matrix(&self, l: usize) -> DMatrix<f64> {
        let cols = 1usize << (self.n_sites - l);
        DMatrix::from_fn(1 << l, cols, |r, c| self.amplitudes[r * cols + c])
    }

    /// CSV of the nonzero amplitudes: `bitstring,amplitude`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["bitstring", "amplitude"]);
        for (c, a) in self.amplitudes.iter().enumerate().filter(|(_, a)| **a != 0.0) {
            t.push(vec![self.bitstring(c), fmt_f64(*a)]);
        }
        t
    }
}

/// Expand the Slater determinant of the columns of `occ` over all configurations.
pub fn slater_amplitudes(occ: &DMatrix<f64>, n_sites: usize) -> Result<AmplitudeTable> {
    if n_sites > MAX_SITES {
        return Err(Error::Resource(format!("{n_sites} sites exceeds the cap of {MAX_SITES}")));
    }
    if occ.nrows() != n_sites {
        return Err(Error::contract(format!("orbital matrix has {} rows for {n_sites} sites", occ.nrows())));
    }
    let filling = occ.ncols();
    let amplitudes = (0..1usize << n_sites)
        .into_par_iter()
        .map(|config| {
            if config.count_ones() as usize != filling {
                return 0.0;
            }
            let rows: Vec<usize> = (0..n_sites).filter(|i| config >> (n_sites - 1 - i) & 1 == 1).collect();
            determinant(&occ.select_rows(rows.iter()))
        })
        .collect();
    Ok(AmplitudeTable {
        n_sites,
        filling,
        amplitudes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubismImage {
    pub side: usize,
    /// Row-major, `side × side`.
    pub pixels: Vec<f64>,
}

/// Cell of a configuration: the bit pair of sites `(2i, 2i+1)` picks the quadrant at depth `i`,
/// first bit the row half and second bit the column half (00 top-left, 01 top-right,
/// 10 bottom-left, 11 bottom-right).
pub fn cell_of(config: usize, n_sites: usize) -> (usize, usize) {
    let bit = |site: usize| config >> (n_sites - 1 - site) & 1;
    (0..n_sites / 2).fold((0, 0), |(r, c), i| ((r << 1) | bit(2 * i), (c << 1) | bit(2 * i + 1)))
}

pub fn render(amps: &AmplitudeTable) -> Result<QubismImage> {
    if amps.n_sites % 2 != 0 {
        return Err(Error::domain(format!("qubism needs an even number of sites, got {}", amps.n_sites)));
    }
    let side = 1usize << (amps.n_sites / 2);
    let mut pixels = vec![0.0; side * side];
    for (config, &a) in amps.amplitudes.iter().enumerate() {
        let (r, c) = cell_of(config, amps.n_sites);
        pixels[r * side + c] = a;
    }
    Ok(QubismImage { side, pixels })
}

impl QubismImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }

    pub fn nonzero_cells(&self) -> usize {
        self.pixels.iter().filter(|p| **p != 0.0).count()
    }

    fn rgb(&self) -> Vec<[u8; 3]> {
        let max = self.pixels.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        self.pixels
            .iter()
            .map(|&a| {
                let level = if max > 0.0 { (255.0 * a.abs() / max).round() as u8 } else { 0 };
                if a > 0.0 {
                    [level, 0, 0]
                } else if a < 0.0 {
                    [0, level, 0]
                } else {
                    [0, 0, 0]
                }
            })
            .collect()
    }

    /// Binary P6 encoding: red for positive, green for negative amplitudes, scaled to the largest `|a|`.
    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        self.to_ppm_bytes_with_comments(&[])
    }

    /// Same as [`Self::to_ppm_bytes`] with `#` comment lines after the magic number.
    pub fn to_ppm_bytes_with_comments(&self, comments: &[String]) -> Vec<u8> {
        let mut out = b"P6\n".to_vec();
        for c in comments {
            out.extend_from_slice(format!("# {}\n", c.replace('\n', " ")).as_bytes());
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.side, self.side).as_bytes());
        for px in self.rgb() {
            out.extend_from_slice(&px);
        }
        out
    }

    /// Pixels that are not black after 8-bit quantization.
    pub fn lit_pixels(&self) -> usize {
        self.rgb().iter().filter(|p| p.iter().any(|&c| c > 0)).count()
    }
}

pub fn write_ppm(img: &QubismImage, path: &std::path::Path) -> Result<()> {
    write_bytes(path, &img.to_ppm_bytes())
}

/// Count of PPM pixels whose color is not black.
pub fn count_lit_ppm_pixels(bytes: &[u8]) -> Result<usize> {
    let bad = || Error::contract("not a 255-level P6 image");
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if bytes.get(pos) != Some(&b'#') {
                break;
            }
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_string());
    }
    let w: usize = fields[1].parse().map_err(|_| bad())?;
    let h: usize = fields[2].parse().map_err(|_| bad())?;
    if fields[0] != "P6" || fields[3] != "255" {
        return Err(bad());
    }
    let data = bytes.get(pos + 1..).ok_or_else(bad)?;
    if data.len() != 3 * w * h {
        return Err(bad());
    }
    Ok(data.chunks(3).filter(|p| p.iter().any(|&c| c > 0)).count())
}

/// Rank of the first-`l`-sites bipartition, singular values cut at `1e-10 σ_max`.
pub fn schmidt_rank(amps: &AmplitudeTable, l: usize) -> Result<usize> {
    if l == 0 || l >= amps.n_sites {
        return Err(Error::domain(format!("block size must lie in 1..{}, got {l}", amps.n_sites)));
    }
    let sv = amps.bipartition_matrix(l).singular_values();
    let max = sv.max();
    Ok(sv.iter().filter(|s| **s > 1e-10 * max).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_rainbow_profile;
    use crate::spectra::{diagonalize, occupied_orbitals};
    use proptest::prelude::*;

    fn ground_state(half_len: usize, alpha: f64) -> AmplitudeTable {
        let spec = diagonalize(&build_rainbow_profile(half_len, alpha).unwrap().hopping_matrix()).unwrap();
        slater_amplitudes(&occupied_orbitals(&spec).unwrap(), 2 * half_len).unwrap()
    }

    fn bond_orbital(n: usize, pairs: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_fn(n, pairs.len(), |i, k| {
            let (a, b, s) = pairs[k];
            if i == a {
                r
            } else if i == b {
                s * r
            } else {
                0.0
            }
        })
    }

    #[test]
    fn single_bond() {
        let t = slater_amplitudes(&bond_orbital(2, &[(0, 1, 1.0)]), 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(t.filling, 1);
        assert!((t.amplitude(0b10) - r).abs() < 1e-15 && (t.amplitude(0b01) - r).abs() < 1e-15);
        assert_eq!((t.amplitude(0), t.amplitude(3)), (0.0, 0.0));
        assert_eq!(schmidt_rank(&t, 1).unwrap(), 2);
        let img = render(&t).unwrap();
        assert_eq!(img.side, 2);
        assert!((img.get(0, 1) - r).abs() < 1e-15 && (img.get(1, 0) - r).abs() < 1e-15);
    }

    #[test]
    fn four_site_rainbow_pattern() {
        // inner + bond on (1,2), outer − bond on (0,3)
        let t = slater_amplitudes(&bond_orbital(4, &[(1, 2, 1.0), (0, 3, -1.0)]), 4).unwrap();
        let nonzero: Vec<(String, f64)> = (0..16)
            .filter(|&c| t.amplitude(c).abs() > 1e-14)
            .map(|c| (t.bitstring(c), t.amplitude(c)))
            .collect();
        assert_eq!(nonzero.len(), 4);
        assert!(nonzero.iter().all(|(_, a)| (a.abs() - 0.5).abs() < 1e-14));
        // by hand: a(i<j) = φ1_i φ2_j − φ2_i φ1_j, which is −1/2 on all four pairings
        for (b, a) in &nonzero {
            assert!(["1100", "1010", "0101", "0011"].contains(&b.as_str()));
            assert!((a + 0.5).abs() < 1e-14);
        }
        let exact = ground_state(2, 1e-4);
        let overlap: f64 = exact.amplitudes.iter().zip(&t.amplitudes).map(|(a, b)| a * b).sum();
        assert!(overlap.abs() > 0.999);
    }

    #[test]
    fn normalization_and_caps() {
        let t = ground_state(4, 0.5);
        assert!((t.norm_squared() - 1.0).abs() < 1e-10);
        assert!(t.amplitudes.iter().enumerate().all(|(c, a)| *a == 0.0 || c.count_ones() == 4));
        assert!(matches!(slater_amplitudes(&DMatrix::zeros(15, 7), 15), Err(Error::Resource(_))));
        assert!(render(&AmplitudeTable::from_amplitudes(3, vec![0.0; 8]).unwrap()).is_err());
        assert!(schmidt_rank(&t, 0).is_err());
    }

    #[test]
    fn rainbow_schmidt_ranks() {
        let t = ground_state(5, 0.01);
        assert_eq!(schmidt_rank(&t, 2).unwrap(), 4);
        assert_eq!(schmidt_rank(&t, 4).unwrap(), 16);
        assert_eq!(schmidt_rank(&t, 5).unwrap(), 32);
    }

    #[test]
    fn product_state_rank_one() {
        let mut amps = vec![0.0; 1 << 6];
        amps[0b010101] = 1.0;
        let t = AmplitudeTable::from_amplitudes(6, amps).unwrap();
        assert_eq!(t.filling, 3);
        for l in 1..6 {
            assert_eq!(schmidt_rank(&t, l).unwrap(), 1);
        }
    }

    #[test]
    fn ppm_encoding() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let img = QubismImage {
            side: 2,
            pixels: vec![r, r, 0.0, 0.0],
        };
        let bytes = img.to_ppm_bytes();
        assert_eq!(&bytes[..11], b"P6\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[255, 0, 0, 255, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(count_lit_ppm_pixels(&bytes).unwrap(), 2);
        let flipped = QubismImage {
            side: 2,
            pixels: img.pixels.iter().map(|p| -p).collect(),
        };
        let fb = flipped.to_ppm_bytes();
        for (a, b) in bytes[11..].chunks(3).zip(fb[11..].chunks(3)) {
            assert_eq!((a[0], a[1], a[2]), (b[1], b[0], b[2]));
        }
        assert!(count_lit_ppm_pixels(b"P5\n1 1\n255\n\0").is_err());
        let commented = img.to_ppm_bytes_with_comments(&["tool x".into(), "two\nlines".into()]);
        assert!(commented.starts_with(b"P6\n# tool x\n# two lines\n2 2\n"));
        assert_eq!(count_lit_ppm_pixels(&commented).unwrap(), 2);
    }

    #[test]
    fn uniform_has_more_support_than_rainbow() {
        let rainbow = render(&ground_state(5, 0.01)).unwrap();
        let uniform = render(&ground_state(5, 1.0)).unwrap();
        // every half-filled determinant is nonzero in floating point, so compare visible support
        assert_eq!(uniform.nonzero_cells(), rainbow.nonzero_cells());
        assert!(uniform.lit_pixels() > rainbow.lit_pixels());
        assert_eq!(rainbow.side, 32);
    }

    #[test]
    fn amplitude_csv() {
        let t = slater_amplitudes(&bond_orbital(2, &[(0, 1, -1.0)]), 2).unwrap();
        let csv = t.table().render();
        assert!(csv.starts_with("bitstring,amplitude\n01,-0.7071"));
        assert!(csv.contains("\n10,0.7071"));
    }

    proptest! {
        #[test]
        fn render_is_a_bijection(n_half in 1usize..6) {
            let n = 2 * n_half;
            let mut seen = vec![false; 1 << n];
            let side = 1usize << n_half;
            for c in 0..1usize << n {
                let (r, col) = cell_of(c, n);
                prop_assert!(r < side && col < side);
                prop_assert!(!seen[r * side + col]);
                seen[r * side + col] = true;
            }
        }

        #[test]
        fn schmidt_rank_bounds(half_len in 1usize..5, alpha in 0.05f64..=1.0, l in 1usize..8) {
            let t = ground_state(half_len, alpha);
            let n = 2 * half_len;
            let l = 1 + l % (n - 1).max(1);
            prop_assume!(l < n);
            let r = schmidt_rank(&t, l).unwrap();
            prop_assert!(r <= 1usize << l.min(n - l));
            prop_assert!((t.norm_squared() - 1.0).abs() < 1e-10);
        }
    }
}
