//! Independent brute-force reference implementations.
//!
//! Everything here favors obviousness over speed and deliberately shares no
//! algorithmic code with the fast paths it validates: determinants expand
//! cofactors recursively, ranks come from rational Gauss-Jordan, Lévy
//! quantities from full 2ⁿ enumeration with exact rational weights, the
//! averaging recursion from the direct 2^ℓ sum, and the anticoncentration
//! threshold from an exhaustive piecewise sweep. Test expectations are
//! frozen against these.

use std::collections::BTreeMap;

use num::rational::Ratio;
use num::{BigInt, BigRational, One, Signed, Zero};

use crate::model::{EntryModel, IntMatrix};

/// Determinant by recursive cofactor expansion along the first row.
/// Exponential; intended for n ≤ 8 with moderate entries.
pub fn det_cofactor(m: &IntMatrix) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "determinant needs a square matrix");
    let rows: Vec<Vec<i128>> = (0..m.rows())
        .map(|i| m.row(i).iter().map(|&e| e as i128).collect())
        .collect();
    BigInt::from(det_cofactor_rec(&rows))
}

fn det_cofactor_rec(rows: &[Vec<i128>]) -> i128 {
    let n = rows.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return rows[0][0];
    }
    let mut acc = 0i128;
    for (j, &top) in rows[0].iter().enumerate() {
        if top == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = rows[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let term = top * det_cofactor_rec(&minor);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Rank over the rationals by textbook Gauss-Jordan elimination.
pub fn rank_row_reduce(m: &IntMatrix) -> usize {
    let mut a: Vec<Vec<BigRational>> = (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|&e| BigRational::from_integer(BigInt::from(e)))
                .collect()
        })
        .collect();
    let (rows, cols) = (m.rows(), m.cols());
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        let inv = a[rank][col].clone();
        for v in a[rank].iter_mut() {
            *v /= &inv;
        }
        for i in 0..rows {
            if i != rank && !a[i][col].is_zero() {
                let factor = a[i][col].clone();
                for j in 0..cols {
                    let sub = &factor * &a[rank][j];
                    a[i][j] -= sub;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Exact law of `∑ bᵢxᵢ` by full 2ⁿ enumeration (rational weights).
pub fn walk_law_brute(x: &[i64], p: Ratio<i64>) -> BTreeMap<i64, BigRational> {
    let n = x.len();
    assert!(n <= 25, "2^n enumeration capped at n = 25");
    let pr = big_ratio(p);
    let qr = BigRational::one() - &pr;
    let mut pow_p = vec![BigRational::one(); n + 1];
    let mut pow_q = vec![BigRational::one(); n + 1];
    for k in 1..=n {
        pow_p[k] = &pow_p[k - 1] * &pr;
        pow_q[k] = &pow_q[k - 1] * &qr;
    }
    let mut atoms: BTreeMap<i64, BigRational> = BTreeMap::new();
    for mask in 0u64..(1u64 << n) {
        let mut s = 0i64;
        for (i, &xi) in x.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += xi;
            }
        }
        let ones = mask.count_ones() as usize;
        let w = &pow_p[ones] * &pow_q[n - ones];
        *atoms.entry(s).or_insert_with(BigRational::zero) += w;
    }
    atoms
}

/// Exact Lévy concentration of `∑ bᵢxᵢ` at rational width `t`:
/// with `lambda` fixed, `P{|∑ bᵢxᵢ − λ| ≤ t}`; otherwise the sup over λ.
pub fn levy_exact(
    x: &[i64],
    p: Ratio<i64>,
    t: Ratio<i64>,
    lambda: Option<Ratio<i64>>,
) -> BigRational {
    assert!(t >= Ratio::zero(), "width must be nonnegative");
    let atoms = walk_law_brute(x, p);
    match lambda {
        Some(l) => {
            let mut total = BigRational::zero();
            for (&s, w) in &atoms {
                if (Ratio::from_integer(s) - l).abs() <= t {
                    total += w;
                }
            }
            total
        }
        None => {
            let pts: Vec<(i64, BigRational)> = atoms.into_iter().collect();
            let two_t = t * Ratio::new(2, 1);
            let mut best = BigRational::zero();
            let mut lo = 0;
            let mut window = BigRational::zero();
            for hi in 0..pts.len() {
                window += &pts[hi].1;
                while Ratio::from_integer(pts[hi].0 - pts[lo].0) > two_t {
                    window -= &pts[lo].1;
                    lo += 1;
                }
                if window > best {
                    best = window.clone();
                }
            }
            best
        }
    }
}

/// Exact singularity probability by enumerating all 2^(n²) matrices with a
/// cofactor determinant.
pub fn enumerate_singularity_naive(n: usize, model: EntryModel) -> BigRational {
    assert!(n * n <= 32, "enumeration budget is 2^(n²) ≤ 2³²");
    let cells = n * n;
    let matrix_from_mask = |mask: u64, lo: i64, hi: i64| {
        let mut m = IntMatrix::zeros(n, n);
        for cell in 0..cells {
            m.set(cell / n, cell % n, if mask >> cell & 1 == 1 { hi } else { lo });
        }
        m
    };
    let mut prob = BigRational::zero();
    match model {
        EntryModel::Sign => {
            let w = BigRational::new(BigInt::one(), BigInt::one() << cells);
            for mask in 0u64..(1u64 << cells) {
                if det_cofactor(&matrix_from_mask(mask, -1, 1)).is_zero() {
                    prob += &w;
                }
            }
        }
        EntryModel::Bernoulli(p) => {
            let pr = big_ratio(p);
            let qr = BigRational::one() - &pr;
            let mut pow_p = vec![BigRational::one(); cells + 1];
            let mut pow_q = vec![BigRational::one(); cells + 1];
            for k in 1..=cells {
                pow_p[k] = &pow_p[k - 1] * &pr;
                pow_q[k] = &pow_q[k - 1] * &qr;
            }
            for mask in 0u64..(1u64 << cells) {
                if det_cofactor(&matrix_from_mask(mask, 0, 1)).is_zero() {
                    let ones = mask.count_ones() as usize;
                    prob += &pow_p[ones] * &pow_q[cells - ones];
                }
            }
        }
    }
    prob
}

/// Direct 2^ℓ evaluation of the averaging recursion: the weighted sum of
/// `f₀(· + ∑ vⱼxⱼ)` over all v ∈ {0,1}^ℓ.
pub fn averaging_direct(f0: &BTreeMap<i64, f64>, xs: &[i64], p: f64) -> BTreeMap<i64, f64> {
    let ell = xs.len();
    assert!(ell <= 20, "2^ℓ direct summation capped at ℓ = 20");
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    for mask in 0u64..(1u64 << ell) {
        let mut shift = 0i64;
        let mut w = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if mask >> j & 1 == 1 {
                shift += xj;
                w *= p;
            } else {
                w *= 1.0 - p;
            }
        }
        for (&t0, &v) in f0 {
            *out.entry(t0 - shift).or_insert(0.0) += w * v;
        }
    }
    out
}

/// All subset sums of `y` with their Bernoulli(p) weights, sorted by sum and
/// merged on exact float equality.
pub fn subset_sums(y: &[f64], p: f64) -> Vec<(f64, f64)> {
    let n = y.len();
    assert!(n <= 25, "2^n enumeration capped at n = 25");
    let mut table = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let mut s = 0.0;
        let mut w = 1.0;
        for (i, &yi) in y.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += yi;
                w *= p;
            } else {
                w *= 1.0 - p;
            }
        }
        table.push((s, w));
    }
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(table.len());
    for (s, w) in table {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += w,
            _ => merged.push((s, w)),
        }
    }
    merged
}

/// `P{|∑ bᵢyᵢ − λ| ≤ t}` by direct mask enumeration.
pub fn small_ball_brute(y: &[f64], lambda: f64, p: f64, t: f64) -> f64 {
    let n = y.len();
    assert!(n <= 25, "2^n enumeration capped at n = 25");
    let mut total = 0.0;
    for mask in 0u64..(1u64 << n) {
        let mut s = 0.0;
        let mut w = 1.0;
        for (i, &yi) in y.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += yi;
                w *= p;
            } else {
                w *= 1.0 - p;
            }
        }
        if (s - lambda).abs() <= t {
            total += w;
        }
    }
    total
}

/// Lévy concentration sup over λ from the sorted subset-sum table.
pub fn levy_sup_brute(y: &[f64], p: f64, t: f64) -> f64 {
    let pts = subset_sums(y, p);
    let two_t = 2.0 * t;
    let mut best = 0.0f64;
    let mut lo = 0;
    let mut window = 0.0;
    for hi in 0..pts.len() {
        window += pts[hi].1;
        while pts[hi].0 - pts[lo].0 > two_t {
            window -= pts[lo].1;
            lo += 1;
        }
        best = best.max(window);
    }
    best
}

/// Anticoncentration threshold `sup{t ∈ (0,1] : L(∑bᵢyᵢ, t) > L·t}` by
/// exhaustive piecewise evaluation: the Lévy function of `t` is a step
/// function with breakpoints at half-gaps of subset sums; each constant
/// piece `[t₁,t₂)` of value `v` is feasible below `v/L`, contributing
/// `min(t₂, v/L, 1)` whenever `v/L > t₁`. Quadratic in the table size.
pub fn threshold_sweep(y: &[f64], p: f64, l_slope: f64) -> f64 {
    assert!(l_slope > 0.0);
    let pts = subset_sums(y, p);
    let mut boundaries = vec![0.0f64];
    for i in 0..pts.len() {
        for j in i..pts.len() {
            let half_gap = (pts[j].0 - pts[i].0) / 2.0;
            if half_gap <= 1.0 {
                boundaries.push(half_gap);
            }
        }
    }
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();
    let mut best = 0.0f64;
    for (k, &t1) in boundaries.iter().enumerate() {
        let t2 = boundaries.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let v = levy_at(&pts, t1);
        if v / l_slope > t1 {
            best = best.max(t2.min(v / l_slope).min(1.0));
        }
    }
    best
}

fn levy_at(pts: &[(f64, f64)], t: f64) -> f64 {
    let two_t = 2.0 * t;
    let mut best = 0.0f64;
    let mut lo = 0;
    let mut window = 0.0;
    for hi in 0..pts.len() {
        window += pts[hi].1;
        while pts[hi].0 - pts[lo].0 > two_t {
            window -= pts[lo].1;
            lo += 1;
        }
        best = best.max(window);
    }
    best
}

pub fn big_ratio(p: Ratio<i64>) -> BigRational {
    BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cofactor_det_basics() {
        assert_eq!(det_cofactor(&IntMatrix::identity(4)), BigInt::one());
        let all_ones = IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]);
        assert!(det_cofactor(&all_ones).is_zero());
        let m = IntMatrix::from_rows(&[vec![2, 3], vec![1, 4]]);
        assert_eq!(det_cofactor(&m), BigInt::from(5));
        let m3 = IntMatrix::from_rows(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]);
        assert_eq!(det_cofactor(&m3), BigInt::from(-3));
    }

    #[test]
    fn rank_basics() {
        assert_eq!(rank_row_reduce(&IntMatrix::zeros(3, 3)), 0);
        assert_eq!(rank_row_reduce(&IntMatrix::identity(5)), 5);
        let dup = IntMatrix::from_rows(&[vec![1, 2, 1], vec![0, 1, 0], vec![1, 3, 1]]);
        assert_eq!(rank_row_reduce(&dup), 2);
    }

    #[test]
    fn walk_law_two_coins() {
        let atoms = walk_law_brute(&[1, 1], Ratio::new(1, 2));
        assert_eq!(atoms[&0], rat(1, 4));
        assert_eq!(atoms[&1], rat(1, 2));
        assert_eq!(atoms[&2], rat(1, 4));
    }

    #[test]
    fn levy_uniform_on_eight_points() {
        // x = (1,2,4), p = 1/2 → uniform on {0..7}; window of width 2 holds 3 atoms.
        let v = levy_exact(&[1, 2, 4], Ratio::new(1, 2), Ratio::new(1, 1), None);
        assert_eq!(v, rat(3, 8));
    }

    #[test]
    fn levy_fixed_center() {
        let v = levy_exact(&[1, 1], Ratio::new(1, 2), Ratio::new(0, 1), Some(Ratio::new(1, 1)));
        assert_eq!(v, rat(1, 2));
    }

    #[test]
    fn enumeration_frozen_values() {
        let b2 = enumerate_singularity_naive(2, EntryModel::Bernoulli(Ratio::new(1, 2)));
        assert_eq!(b2, rat(5, 8));
        let s2 = enumerate_singularity_naive(2, EntryModel::Sign);
        assert_eq!(s2, rat(1, 2));
        let b1 = enumerate_singularity_naive(1, EntryModel::Bernoulli(Ratio::new(1, 3)));
        assert_eq!(b1, rat(2, 3));
    }

    #[test]
    fn averaging_direct_point_mass() {
        let f0 = BTreeMap::from([(0i64, 1.0)]);
        let out = averaging_direct(&f0, &[5], 0.5);
        assert_eq!(out.len(), 2);
        assert!((out[&0] - 0.5).abs() < 1e-15);
        assert!((out[&-5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_sweep_single_atom_vector() {
        let t1 = threshold_sweep(&[1.0], 0.5, 1.0);
        assert_eq!(t1, 1.0);
        let t4 = threshold_sweep(&[1.0], 0.5, 4.0);
        assert_eq!(t4, 0.125);
    }

    #[test]
    fn small_ball_consistency() {
        let y = [1.0, 2.0, 4.0];
        let direct = small_ball_brute(&y, 3.5, 0.5, 0.6);
        // atoms 3 and 4 of the uniform law on {0..7}
        assert!((direct - 0.25).abs() < 1e-15);
        assert!(BigRational::from_f64(direct).is_some());
    }
}
