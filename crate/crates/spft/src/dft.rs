//! 2D discrete Fourier transforms.
//!
//! Two equivalent routes produce the weight-change precursor:
//!
//! * the dense route scatters coefficients into a full spectral matrix and
//!   runs a normalized inverse FFT ([`ifft2_real`]);
//! * the sparse route evaluates the cosine sum directly at the selected
//!   entries ([`sparse_idft_real`]), which is exactly the real part of the
//!   complex sum because the spectral matrix is real.
//!
//! The transform is the NORMALIZED inverse (a global `1/(d1*d2)` factor,
//! positive exponent sign). [`brute_force_idft2`] is a literal double-sum
//! oracle kept for tests, and [`sparse_idft_adjoint`] is the exact adjoint
//! of the sparse route used for analytic gradients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::EntryMatrix;

/// Split complex storage for transform intermediates.
#[derive(Debug, Clone)]
pub struct ComplexBuffer {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexBuffer {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

/// Lengths whose prime factors all fit under this bound go through the
/// mixed-radix path; anything else uses the Bluestein chirp-z transform.
pub const MIXED_RADIX_MAX_FACTOR: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    MixedRadix,
    Bluestein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// One-dimensional FFT plan for an arbitrary length.
///
/// Plans are immutable after construction and safe to share. The transform
/// is unnormalized in both directions; 2D wrappers apply the `1/(d1*d2)`
/// factor once.
#[derive(Debug, Clone)]
pub struct Plan1D {
    len: usize,
    direction: Direction,
    strategy: Strategy,
    factors: Vec<usize>,
    /// roots[t] = exp(sign * 2*pi*i * t / len)
    roots: Vec<Complex64>,
    bluestein: Option<Box<Bluestein>>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    /// Power-of-two convolution length, >= 2*len - 1.
    m: usize,
    inner_fwd: Plan1D,
    inner_inv: Plan1D,
    /// chirp[k] = exp(sign * i * pi * k^2 / len)
    chirp: Vec<Complex64>,
    /// Forward FFT of the wrapped conjugate-chirp kernel.
    kernel_fft: Vec<Complex64>,
}

fn small_factors(mut n: usize) -> (Vec<usize>, usize) {
    let mut factors = Vec::new();
    let mut p = 2;
    while p <= MIXED_RADIX_MAX_FACTOR && n > 1 {
        while n % p == 0 {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    (factors, n)
}

fn root_table(len: usize, sign: f64) -> Vec<Complex64> {
    (0..len)
        .map(|t| {
            let theta = sign * 2.0 * std::f64::consts::PI * t as f64 / len as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

impl Plan1D {
    pub fn forward(len: usize) -> Plan1D {
        Plan1D::new(len, Direction::Forward)
    }

    pub fn inverse(len: usize) -> Plan1D {
        Plan1D::new(len, Direction::Inverse)
    }

    fn new(len: usize, direction: Direction) -> Plan1D {
        assert!(len >= 1, "transform length must be >= 1");
        let (factors, rest) = small_factors(len);
        if rest == 1 {
            return Plan1D {
                len,
                direction,
                strategy: Strategy::MixedRadix,
                factors,
                roots: root_table(len, direction.sign()),
                bluestein: None,
            };
        }
        // Remaining factor has a prime above the mixed-radix bound.
        let m = (2 * len - 1).next_power_of_two();
        let sign = direction.sign();
        // Quadratic phase with the exponent reduced mod 2*len so large k^2
        // never reaches the trig routines.
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                let e = (k * k) % (2 * len);
                let theta = sign * std::f64::consts::PI * e as f64 / len as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        let inner_fwd = Plan1D::forward(m);
        let inner_inv = Plan1D::inverse(m);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..len {
            let v = chirp[k].conj();
            kernel[k] = v;
            if k > 0 {
                kernel[m - k] = v;
            }
        }
        let kernel_fft = inner_fwd.transform(&kernel);
        Plan1D {
            len,
            direction,
            strategy: Strategy::Bluestein,
            factors: Vec::new(),
            roots: Vec::new(),
            bluestein: Some(Box::new(Bluestein {
                m,
                inner_fwd,
                inner_inv,
                chirp,
                kernel_fft,
            })),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn is_inverse(&self) -> bool {
        self.direction == Direction::Inverse
    }

    /// Unnormalized transform of `input` (length must equal the plan length).
    pub fn transform(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length must match plan");
        match self.strategy {
            Strategy::MixedRadix => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.len];
                let mut scratch = vec![Complex64::new(0.0, 0.0); self.len];
                self.mixed_radix(input, 1, &mut out, self.len, &self.factors, 1, &mut scratch);
                out
            }
            Strategy::Bluestein => self.bluestein_transform(input),
        }
    }

    /// Recursive decimation-in-time step. `x` is strided input, `out` is the
    /// contiguous n-point result, `tw` converts sub-transform exponents into
    /// root-table indices.
    #[allow(clippy::too_many_arguments)]
    fn mixed_radix(
        &self,
        x: &[Complex64],
        x_stride: usize,
        out: &mut [Complex64],
        n: usize,
        factors: &[usize],
        tw: usize,
        scratch: &mut [Complex64],
    ) {
        if n == 1 {
            out[0] = x[0];
            return;
        }
        let r = factors[0];
        let m = n / r;
        for j in 0..r {
            self.mixed_radix(
                &x[j * x_stride..],
                x_stride * r,
                &mut out[j * m..(j + 1) * m],
                m,
                &factors[1..],
                tw * r,
                scratch,
            );
        }
        let total = self.len;
        for k in 0..m {
            for q in 0..r {
                let idx = q * m + k;
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..r {
                    let e = ((j * idx) % n) * tw % total;
                    acc += out[j * m + k] * self.roots[e];
                }
                scratch[idx] = acc;
            }
        }
        out[..n].copy_from_slice(&scratch[..n]);
    }

    fn bluestein_transform(&self, input: &[Complex64]) -> Vec<Complex64> {
        let bs = self.bluestein.as_deref().expect("bluestein data");
        let n = self.len;
        let mut a = vec![Complex64::new(0.0, 0.0); bs.m];
        for k in 0..n {
            a[k] = input[k] * bs.chirp[k];
        }
        let mut fa = bs.inner_fwd.transform(&a);
        for (v, kv) in fa.iter_mut().zip(&bs.kernel_fft) {
            *v *= kv;
        }
        let conv = bs.inner_inv.transform(&fa);
        let scale = 1.0 / bs.m as f64;
        (0..n).map(|k| conv[k] * bs.chirp[k] * scale).collect()
    }
}

/// Normalized complex 2D inverse transform of a real spectral matrix,
/// realized as a row pass then a column pass of 1D plans.
pub fn ifft2_complex(f: &Matrix) -> ComplexBuffer {
    let (d1, d2) = f.shape();
    let mut buf: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let row_plan = Plan1D::inverse(d2);
    for r in 0..d1 {
        let row = row_plan.transform(&buf[r * d2..(r + 1) * d2]);
        buf[r * d2..(r + 1) * d2].copy_from_slice(&row);
    }
    let col_plan = Plan1D::inverse(d1);
    let mut col = vec![Complex64::new(0.0, 0.0); d1];
    for c in 0..d2 {
        for r in 0..d1 {
            col[r] = buf[r * d2 + c];
        }
        let t = col_plan.transform(&col);
        for r in 0..d1 {
            buf[r * d2 + c] = t[r];
        }
    }
    let scale = 1.0 / (d1 * d2) as f64;
    ComplexBuffer {
        re: buf.iter().map(|z| z.re * scale).collect(),
        im: buf.iter().map(|z| z.im * scale).collect(),
    }
}

/// Real part of the normalized 2D inverse DFT of a real spectral matrix.
pub fn ifft2_real(f: &Matrix) -> Matrix {
    let (d1, d2) = f.shape();
    Matrix::from_vec(d1, d2, ifft2_complex(f).re)
}

/// Guard for the O((d1*d2)^2) oracle below.
pub const BRUTE_FORCE_CELL_LIMIT: usize = 1_000_000;

/// Literal evaluation of the normalized inverse double sum. Test oracle only.
pub fn brute_force_idft2(f: &Matrix) -> Result<Matrix> {
    let (d1, d2) = f.shape();
    if d1 * d2 > BRUTE_FORCE_CELL_LIMIT {
        return Err(Error::BruteForceGuard {
            cells: d1 * d2,
            limit: BRUTE_FORCE_CELL_LIMIT,
        });
    }
    let scale = 1.0 / (d1 * d2) as f64;
    let mut out = Matrix::zeros(d1, d2);
    for p in 0..d1 {
        for q in 0..d2 {
            let mut acc = 0.0;
            for j in 0..d1 {
                for k in 0..d2 {
                    let theta = 2.0
                        * std::f64::consts::PI
                        * (p as f64 * j as f64 / d1 as f64 + q as f64 * k as f64 / d2 as f64);
                    acc += f.get(j, k) * theta.cos();
                }
            }
            out.set(p, q, acc * scale);
        }
    }
    Ok(out)
}

/// Per-entry phase tables: cos/sin of `2*pi*(p*j mod d)/d`. The integer
/// reduction keeps trig arguments in [0, 2*pi) so the sparse path agrees
/// with the FFT path to full precision at large shapes.
struct PhaseTables {
    cos_row: Vec<f64>,
    sin_row: Vec<f64>,
    cos_col: Vec<f64>,
    sin_col: Vec<f64>,
}

fn phase_tables(d1: usize, d2: usize) -> PhaseTables {
    let build = |d: usize| -> (Vec<f64>, Vec<f64>) {
        (0..d)
            .map(|t| {
                let theta = 2.0 * std::f64::consts::PI * t as f64 / d as f64;
                (theta.cos(), theta.sin())
            })
            .unzip()
    };
    let (cos_row, sin_row) = build(d1);
    let (cos_col, sin_col) = build(d2);
    PhaseTables {
        cos_row,
        sin_row,
        cos_col,
        sin_col,
    }
}

fn check_entries(entries: &EntryMatrix, d1: usize, d2: usize) -> Result<()> {
    for (l, (j, k)) in entries.iter().enumerate() {
        if j >= d1 || k >= d2 {
            return Err(Error::EntryOutOfRange {
                index: l,
                row: j,
                col: k,
                d1,
                d2,
            });
        }
    }
    Ok(())
}

/// Sparse cosine evaluation of the normalized inverse transform:
/// `out[p][q] = (1/(d1*d2)) * sum_l c_l * cos(2*pi*(p*j_l/d1 + q*k_l/d2))`.
pub fn sparse_idft_real(
    entries: &EntryMatrix,
    coeffs: &[f64],
    d1: usize,
    d2: usize,
) -> Result<Matrix> {
    check_entries(entries, d1, d2)?;
    if coeffs.len() != entries.n() {
        return Err(Error::CoefficientCountMismatch {
            coeffs: coeffs.len(),
            entries: entries.n(),
        });
    }
    let t = phase_tables(d1, d2);
    let mut out = Matrix::zeros(d1, d2);
    let mut row_cos = vec![0.0; d1];
    let mut row_sin = vec![0.0; d1];
    let mut col_cos = vec![0.0; d2];
    let mut col_sin = vec![0.0; d2];
    for (l, (j, k)) in entries.iter().enumerate() {
        let c = coeffs[l];
        for p in 0..d1 {
            let e = (p * j) % d1;
            row_cos[p] = t.cos_row[e];
            row_sin[p] = t.sin_row[e];
        }
        for q in 0..d2 {
            let e = (q * k) % d2;
            col_cos[q] = t.cos_col[e];
            col_sin[q] = t.sin_col[e];
        }
        for p in 0..d1 {
            let (ca, sa) = (row_cos[p], row_sin[p]);
            let orow = &mut out.data_mut()[p * d2..(p + 1) * d2];
            for q in 0..d2 {
                // cos(a + b) = cos a cos b - sin a sin b
                orow[q] += c * (ca * col_cos[q] - sa * col_sin[q]);
            }
        }
    }
    let scale = 1.0 / (d1 * d2) as f64;
    for v in out.data_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// Exact adjoint of [`sparse_idft_real`] as a linear map in the coefficients:
/// `g_l = (1/(d1*d2)) * sum_{p,q} upstream[p][q] * cos(2*pi*(p*j_l/d1 + q*k_l/d2))`.
pub fn sparse_idft_adjoint(entries: &EntryMatrix, upstream: &Matrix) -> Result<Vec<f64>> {
    let (d1, d2) = upstream.shape();
    check_entries(entries, d1, d2)?;
    let t = phase_tables(d1, d2);
    let scale = 1.0 / (d1 * d2) as f64;
    let mut grads = Vec::with_capacity(entries.n());
    let mut col_cos = vec![0.0; d2];
    let mut col_sin = vec![0.0; d2];
    for (j, k) in entries.iter() {
        for q in 0..d2 {
            let e = (q * k) % d2;
            col_cos[q] = t.cos_col[e];
            col_sin[q] = t.sin_col[e];
        }
        let mut acc = 0.0;
        for p in 0..d1 {
            let e = (p * j) % d1;
            let (ca, sa) = (t.cos_row[e], t.sin_row[e]);
            let urow = upstream.row(p);
            let mut dot_c = 0.0;
            let mut dot_s = 0.0;
            for q in 0..d2 {
                dot_c += urow[q] * col_cos[q];
                dot_s += urow[q] * col_sin[q];
            }
            acc += ca * dot_c - sa * dot_s;
        }
        grads.push(acc * scale);
    }
    Ok(grads)
}

/// Documented crossover heuristic: the sparse path wins when the entry count
/// is small relative to the FFT cost. Both routes are always available and
/// numerically equivalent; this only picks a default.
pub fn prefer_sparse(n: usize, d1: usize, d2: usize) -> bool {
    let logs = (d1 as f64).log2() + (d2 as f64).log2();
    let ratio = d1.max(d2) as f64 / d1.min(d2) as f64;
    (n as f64) < 4.0 * logs * ratio
}
