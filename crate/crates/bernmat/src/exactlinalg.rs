//! Exact integer linear algebra and floating spectral quantities.
//!
//! Determinants and ranks use fraction-free (Bareiss) elimination: every
//! intermediate entry is a minor of the original matrix, and each update
//! divides exactly by the previous pivot. A Hadamard bound routes small
//! instances through `i128`; everything else falls back to `BigInt`.
//! Unit normals come from an exact rational nullspace, normalized in
//! floating point only at the very end. `s_min` and the spectral norm use
//! an SVD.

use nalgebra::DMatrix;
use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

use crate::model::{IntMatrix, RealMatrix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    /// The spanned space has codimension > 1: the normal direction is not
    /// unique, and the caller decides how to treat the draw.
    #[error("nullspace has dimension {dim}, expected 1")]
    DegenerateNullspace { dim: usize },
    #[error("need an (n-1)-column system in dimension n ≥ 2, got {cols} columns of length {n}")]
    BadSystemShape { n: usize, cols: usize },
}

/// Unit normal to a spanning set of integer columns, plus the measured
/// orthogonality residual `max |⟨Y, colᵢ⟩|`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalVector {
    pub coords: Vec<f64>,
    pub residual: f64,
}

/// Exact determinant; zero iff the matrix is singular. Empty input gives 1.
pub fn det_exact(m: &IntMatrix) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "determinant needs a square matrix");
    let n = m.rows();
    if n == 0 {
        return BigInt::one();
    }
    // Hadamard: |any minor| ≤ ∏ row norms = 2^S. A Bareiss update forms a
    // product of two minors plus another such product before an exact
    // division, so it needs 2S+2 bits (incl. sign); route through i128 when
    // that fits.
    let log2_hadamard: f64 = (0..n)
        .map(|i| {
            let norm_sq: f64 = m.row(i).iter().map(|&e| (e as f64) * (e as f64)).sum();
            if norm_sq == 0.0 { 0.0 } else { 0.5 * norm_sq.log2() }
        })
        .sum();
    if 2.0 * log2_hadamard + 2.0 < 126.0 {
        det_bareiss_i128(m)
    } else {
        det_bareiss_big(m)
    }
}

fn det_bareiss_i128(m: &IntMatrix) -> BigInt {
    let n = m.rows();
    let mut a: Vec<i128> = m.entries().iter().map(|&e| e as i128).collect();
    let at = |a: &[i128], i: usize, j: usize| a[i * n + j];
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if at(&a, k, k) == 0 {
            match (k + 1..n).find(|&i| at(&a, i, k) != 0) {
                Some(swap) => {
                    for j in 0..n {
                        a.swap(k * n + j, swap * n + j);
                    }
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (at(&a, i, j) * at(&a, k, k) - at(&a, i, k) * at(&a, k, j)) / prev;
            }
            a[i * n + k] = 0;
        }
        prev = at(&a, k, k);
    }
    BigInt::from(sign * at(&a, n - 1, n - 1))
}

fn det_bareiss_big(m: &IntMatrix) -> BigInt {
    let n = m.rows();
    let mut a: Vec<Vec<BigInt>> =
        (0..n).map(|i| m.row(i).iter().map(|&e| BigInt::from(e)).collect()).collect();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(swap) => {
                    a.swap(k, swap);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                debug_assert!((&num % &prev).is_zero(), "Bareiss division must be exact");
                a[i][j] = num / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = std::mem::take(&mut a[n - 1][n - 1]);
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Rank over the rationals via fraction-free echelon with column pivoting.
pub fn rank_exact(m: &IntMatrix) -> usize {
    echelon(m).0
}

/// Fraction-free echelon form. Returns (rank, pivot columns, rows).
/// Zero columns are skipped; updates still divide exactly by the previous
/// pivot because every entry stays a minor over the chosen pivot columns
/// (guarded by a debug divisibility check and the rational-oracle tests).
fn echelon(m: &IntMatrix) -> (usize, Vec<usize>, Vec<Vec<BigInt>>) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<BigInt>> =
        (0..rows).map(|i| m.row(i).iter().map(|&e| BigInt::from(e)).collect()).collect();
    let mut rank = 0usize;
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot_row) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot_row);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                let num = &a[i][j] * &a[rank][col] - &a[i][col] * &a[rank][j];
                debug_assert!((&num % &prev).is_zero(), "fraction-free division must be exact");
                a[i][j] = num / &prev;
            }
            a[i][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        pivots.push(col);
        rank += 1;
    }
    (rank, pivots, a)
}

/// Unit normal to `n−1` integer columns in Zⁿ: exact rational nullspace of
/// the row system, scaled to a primitive integer vector, then normalized in
/// floating point. The sign makes the first nonzero coordinate positive.
pub fn unit_normal(cols: &[Vec<i64>]) -> Result<NormalVector, LinalgError> {
    let n = cols.first().map_or(0, Vec::len);
    if n < 2 || cols.len() != n - 1 || cols.iter().any(|c| c.len() != n) {
        return Err(LinalgError::BadSystemShape { n, cols: cols.len() });
    }
    let system = IntMatrix::from_rows(cols); // row i = colᵢᵀ; solve A z = 0
    let (rank, pivots, rows) = echelon(&system);
    if rank < n - 1 {
        return Err(LinalgError::DegenerateNullspace { dim: n - rank });
    }
    let free_col = (0..n).find(|c| !pivots.contains(c)).expect("one free column");
    // Back-substitute with the free variable set to 1.
    let mut z = vec![BigRational::zero(); n];
    z[free_col] = BigRational::one();
    for r in (0..rank).rev() {
        let pc = pivots[r];
        let mut acc = BigRational::zero();
        for j in pc + 1..n {
            if !rows[r][j].is_zero() {
                acc += BigRational::from_integer(rows[r][j].clone()) * &z[j];
            }
        }
        z[pc] = -acc / BigRational::from_integer(rows[r][pc].clone());
    }
    // Clear denominators to a primitive integer direction.
    let lcm_den = z
        .iter()
        .map(|v| v.denom().clone())
        .fold(BigInt::one(), |acc, d| num::integer::lcm(acc, d));
    let ints: Vec<BigInt> = z.iter().map(|v| v.numer() * (&lcm_den / v.denom())).collect();
    let gcd = ints
        .iter()
        .fold(BigInt::zero(), |acc, v| num::integer::gcd(acc, v.abs()));
    let ints: Vec<BigInt> = ints.iter().map(|v| v / &gcd).collect();

    let mut coords: Vec<f64> = ints.iter().map(bigint_to_f64).collect();
    if let Some(first) = coords.iter().find(|&&c| c != 0.0) {
        if *first < 0.0 {
            coords.iter_mut().for_each(|c| *c = -*c);
        }
    }
    let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
    coords.iter_mut().for_each(|c| *c /= norm);
    let residual = cols
        .iter()
        .map(|c| c.iter().zip(&coords).map(|(&a, &y)| a as f64 * y).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok(NormalVector { coords, residual })
}

fn bigint_to_f64(v: &BigInt) -> f64 {
    use num::ToPrimitive;
    v.to_f64().expect("BigInt to f64")
}

fn to_dmatrix(m: &RealMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.entries())
}

/// Smallest singular value (SVD; relative accuracy ~1e−8·‖M‖).
pub fn smin(m: &RealMatrix) -> f64 {
    assert_eq!(m.rows(), m.cols(), "smin defined for square matrices here");
    let svd = to_dmatrix(m).svd(false, false);
    svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Operator (spectral) norm.
pub fn spectral_norm(m: &RealMatrix) -> f64 {
    let svd = to_dmatrix(m).svd(false, false);
    svd.singular_values.iter().copied().fold(0.0, f64::max)
}
