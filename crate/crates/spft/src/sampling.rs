//! Deterministic spectral-entry selection.
//!
//! The entry set is the frozen half of an adapter: it is regenerated from
//! `(seed, d1, d2, n, bias)` instead of being stored, so both samplers must
//! be bit-reproducible. Uniform selection takes the first `n` elements of a
//! seeded Fisher-Yates permutation; biased selection weights cells with a
//! Gaussian band-pass profile and draws without replacement using
//! exponential keys (Efraimidis-Spirakis).

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

/// The `n` selected 2D spectral coordinates, shared across layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryMatrix {
    rows: Vec<u32>,
    cols: Vec<u32>,
    seed: u64,
    d1: usize,
    d2: usize,
}

impl EntryMatrix {
    pub fn from_parts(
        rows: Vec<u32>,
        cols: Vec<u32>,
        seed: u64,
        d1: usize,
        d2: usize,
    ) -> Result<EntryMatrix> {
        if rows.len() != cols.len() {
            return Err(Error::InvalidArgument(format!(
                "row/col index lists differ in length: {} vs {}",
                rows.len(),
                cols.len()
            )));
        }
        Ok(EntryMatrix {
            rows,
            cols,
            seed,
            d1,
            d2,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    /// Iterate over `(j, k)` coordinate pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .map(|(&j, &k)| (j as usize, k as usize))
    }

    /// Scatter a coefficient vector into the dense spectral matrix
    /// (zeros everywhere except the selected entries).
    pub fn to_dense(&self, coeffs: &[f64]) -> Result<Matrix> {
        if coeffs.len() != self.n() {
            return Err(Error::CoefficientCountMismatch {
                coeffs: coeffs.len(),
                entries: self.n(),
            });
        }
        let mut f = Matrix::zeros(self.d1, self.d2);
        for (l, (j, k)) in self.iter().enumerate() {
            f.set(j, k, coeffs[l]);
        }
        Ok(f)
    }
}

/// Entry-sampling frequency bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasSpec {
    pub mode: BiasMode,
    /// Favored central frequency, in cells from the matrix center.
    pub f_c: f64,
    /// Bandwidth of the Gaussian band-pass profile.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    None,
    Bandpass,
}

impl BiasSpec {
    pub fn none() -> BiasSpec {
        BiasSpec {
            mode: BiasMode::None,
            f_c: 0.0,
            bandwidth: 1.0,
        }
    }

    pub fn bandpass(f_c: f64, bandwidth: f64) -> BiasSpec {
        BiasSpec {
            mode: BiasMode::Bandpass,
            f_c,
            bandwidth,
        }
    }
}

/// Uniform selection: first `n` cells of a seeded Fisher-Yates permutation
/// of the flat index range, decoded as `(idx / d2, idx % d2)`.
pub fn sample_uniform(seed: u64, d1: usize, d2: usize, n: usize) -> Result<EntryMatrix> {
    let cells = d1 * d2;
    if n > cells {
        return Err(Error::TooManyEntries { n, cells });
    }
    let mut idx: Vec<u32> = (0..cells as u32).collect();
    let mut rng = Rng::new(seed);
    for i in 0..n {
        let j = i + rng.next_below((cells - i) as u64) as usize;
        idx.swap(i, j);
    }
    let rows = idx[..n].iter().map(|&v| v / d2 as u32).collect();
    let cols = idx[..n].iter().map(|&v| v % d2 as u32).collect();
    EntryMatrix::from_parts(rows, cols, seed, d1, d2)
}

/// Pointwise Gaussian band-pass weight at distance `dist` from the center:
/// `exp(-((dist^2 - f_c^2) / (dist * w))^2)`.
///
/// The removable singularity at `dist = 0` takes its limit value: 1 when
/// `f_c = 0` (the profile degenerates to a low-pass Gaussian) and 0
/// otherwise.
pub fn bandpass_weight(dist: f64, f_c: f64, w: f64) -> f64 {
    if dist == 0.0 {
        return if f_c == 0.0 { 1.0 } else { 0.0 };
    }
    let z = (dist * dist - f_c * f_c) / (dist * w);
    (-(z * z)).exp()
}

/// Unnormalized band-pass probability map over the grid. Distances are
/// measured from the continuous matrix center `((d1-1)/2, (d2-1)/2)`.
pub fn bandpass_probability(d1: usize, d2: usize, bias: &BiasSpec) -> Result<Matrix> {
    assert_eq!(
        bias.mode,
        BiasMode::Bandpass,
        "probability map requires a band-pass bias"
    );
    if bias.bandwidth <= 0.0 {
        return Err(Error::NonPositiveBandwidth(bias.bandwidth));
    }
    let cu = (d1 as f64 - 1.0) / 2.0;
    let cv = (d2 as f64 - 1.0) / 2.0;
    let mut p = Matrix::zeros(d1, d2);
    for u in 0..d1 {
        for v in 0..d2 {
            let du = u as f64 - cu;
            let dv = v as f64 - cv;
            let dist = (du * du + dv * dv).sqrt();
            p.set(u, v, bandpass_weight(dist, bias.f_c, bias.bandwidth));
        }
    }
    Ok(p)
}

/// Biased selection without replacement, probability proportional to the
/// band-pass map. Exponential keys: cell `i` with weight `w_i` gets key
/// `ln(u_i) / w_i` and the `n` largest keys win. Zero-weight cells sort
/// last and are only taken once every positive-weight cell is exhausted.
pub fn sample_biased(
    seed: u64,
    d1: usize,
    d2: usize,
    n: usize,
    bias: &BiasSpec,
) -> Result<EntryMatrix> {
    if bias.mode == BiasMode::None {
        return sample_uniform(seed, d1, d2, n);
    }
    let cells = d1 * d2;
    if n > cells {
        return Err(Error::TooManyEntries { n, cells });
    }
    let p = bandpass_probability(d1, d2, bias)?;
    if p.data().iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateBias);
    }
    let mut rng = Rng::new(seed);
    let mut keyed: Vec<(f64, u32)> = p
        .data()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u = rng.next_f64_open();
            let key = if w > 0.0 {
                u.ln() / w
            } else {
                f64::NEG_INFINITY
            };
            (key, i as u32)
        })
        .collect();
    keyed.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let rows = keyed[..n].iter().map(|&(_, i)| i / d2 as u32).collect();
    let cols = keyed[..n].iter().map(|&(_, i)| i % d2 as u32).collect();
    EntryMatrix::from_parts(rows, cols, seed, d1, d2)
}
