//! Random matrix/vector models and the rank-one shift construction.
//!
//! All sampling is deterministic in an [`RngSeed`]: entries are drawn in
//! row-major order from the lane's ChaCha8 stream. The sign model is the
//! exact image of the Bernoulli(1/2) model under `b ↦ 2b−1`, sharing the
//! per-entry draws, so the two coincide coordinatewise under a shared seed.

use num::rational::Ratio;
use thiserror::Error;

use crate::rng::{bernoulli, RngSeed};

pub use crate::rng::RngSeed as Seed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("dimension must be positive")]
    EmptyDimension,
    #[error("p = {0} outside [0, 1]")]
    InvalidP(Ratio<i64>),
    #[error("shift s = {0} outside [-1, 0]")]
    InvalidShift(Ratio<i64>),
    #[error("matrix must keep at least one row")]
    TooFewRows,
}

/// Dimension / Bernoulli parameter / shift bundle.
///
/// `p` admits the degenerate endpoints 0 and 1 (used by deterministic
/// tests); the shift `s` stays in `[-1, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelParams {
    pub n: usize,
    pub p: Ratio<i64>,
    pub s: Ratio<i64>,
}

impl ModelParams {
    pub fn new(n: usize, p: Ratio<i64>, s: Ratio<i64>) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyDimension);
        }
        if p < Ratio::new(0, 1) || p > Ratio::new(1, 1) {
            return Err(ModelError::InvalidP(p));
        }
        if s < Ratio::new(-1, 1) || s > Ratio::new(0, 1) {
            return Err(ModelError::InvalidShift(s));
        }
        Ok(Self { n, p, s })
    }
}

/// Entry distribution for singularity enumeration and Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryModel {
    Bernoulli(Ratio<i64>),
    Sign,
}

/// Dense row-major matrix with exact `i64` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, entries: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// Entrywise affine map `a·m + b` (exact).
    pub fn affine(&self, a: i64, b: i64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&e| a * e + b).collect(),
        }
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&e| e as f64).collect(),
        }
    }
}

/// Dense row-major matrix with `f64` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// n×n matrix of independent Bernoulli(p) entries, drawn row-major.
pub fn sample_bernoulli_matrix(params: &ModelParams, seed: RngSeed) -> IntMatrix {
    let mut rng = seed.rng();
    let n = params.n;
    let mut m = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if bernoulli(&mut rng, params.p) {
                m.set(i, j, 1);
            }
        }
    }
    m
}

/// n×n matrix of independent uniform ±1 entries: the `2b−1` image of the
/// Bernoulli(1/2) sample with the same seed.
pub fn sample_sign_matrix(n: usize, seed: RngSeed) -> IntMatrix {
    let params = ModelParams::new(n, Ratio::new(1, 2), Ratio::new(0, 1)).expect("valid");
    sample_bernoulli_matrix(&params, seed).affine(2, -1)
}

/// `B + s·1ₙ1ₙᵀ` in floating point.
pub fn shifted_matrix(b: &IntMatrix, s: Ratio<i64>) -> RealMatrix {
    let sf = ratio_to_f64(s);
    let mut m = RealMatrix::zeros(b.rows(), b.cols());
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            m.set(i, j, b.get(i, j) as f64 + sf);
        }
    }
    m
}

/// Integer matrix `q·B + r·1ₙ1ₙᵀ` for `s = r/q` in lowest terms: a nonzero
/// scalar multiple of `B + s·11ᵀ`, so exactly the same singularity.
pub fn shifted_matrix_int(b: &IntMatrix, s: Ratio<i64>) -> IntMatrix {
    let (r, q) = (*s.numer(), *s.denom());
    let mut m = IntMatrix::zeros(b.rows(), b.cols());
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            m.set(i, j, q * b.get(i, j) + r);
        }
    }
    m
}

/// Drop the last row (the `(n−1)×n` truncation used for normal vectors).
pub fn drop_last_row(b: &IntMatrix) -> Result<IntMatrix, ModelError> {
    if b.rows() < 2 {
        return Err(ModelError::TooFewRows);
    }
    let rows: Vec<Vec<i64>> = (0..b.rows() - 1).map(|i| b.row(i).to_vec()).collect();
    Ok(IntMatrix::from_rows(&rows))
}

/// Length-n vector of independent Bernoulli(p) entries.
pub fn sample_bernoulli_vector(n: usize, p: Ratio<i64>, seed: RngSeed) -> Vec<i64> {
    let mut rng = seed.rng();
    (0..n).map(|_| bernoulli(&mut rng, p) as i64).collect()
}

pub fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parse "3/4", "-1/2", "2", or a decimal like "0.25" into an exact
/// rational (decimals go through the shortest continued-fraction
/// approximation within f64 precision, so "0.1" is exactly 1/10).
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
        let d: i64 = den.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
        if d == 0 {
            return Err("zero denominator".into());
        }
        Ok(Ratio::new(n, d))
    } else if let Ok(i) = s.parse::<i64>() {
        Ok(Ratio::from_integer(i))
    } else {
        let f: f64 = s.parse().map_err(|e| format!("not a number: {e}"))?;
        Ratio::approximate_float(f).ok_or_else(|| format!("cannot express {s} as a rational"))
    }
}
