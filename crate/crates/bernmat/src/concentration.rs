//! Lévy concentration machinery for Bernoulli-weighted sums.
//!
//! The exact law of `∑ bᵢxᵢ` for integer `x` is built by sequential
//! two-point convolution over a dense window ([`walk_pmf`]); real vectors go
//! through 2ⁿ subset-sum tables. The Lévy concentration function of an
//! integer law is computed exactly: a closed window of real width `2t`
//! captures integer atoms spanning at most `⌊2t⌋`, so all comparisons are
//! integer-vs-integer.
//!
//! The anticoncentration threshold `sup{t ∈ (0,1] : L(∑bᵢxᵢ, t) > L·t}` is
//! computed exactly from the observation that the Lévy function of `t` is a
//! step function with breakpoints at half-gaps of subset sums. Writing
//! `uᵢ = P_{i−1} − (L/2)sᵢ` and `zⱼ = Pⱼ − (L/2)sⱼ` for prefix masses `P`
//! over sorted sums `s`, a window `{i..j}` beats the line iff `uᵢ < zⱼ`,
//! which a leftmost-below segment-tree query resolves in `O(m log m)` total.

use num::rational::Ratio;
use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::rng::{bernoulli, RngSeed};

/// Dense integer laws get refused above this many support points.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 24;

/// 2ⁿ subset-sum enumeration is capped here.
pub const MAX_ENUM_N: usize = 25;

#[derive(Debug, Error, PartialEq)]
pub enum ConcError {
    #[error("projected support {needed} exceeds cap {cap}")]
    BudgetExceeded { needed: usize, cap: usize },
    #[error("vector length {n} exceeds the 2^n enumeration cap {max}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vector norm {norm} is not 1 within 1e-10")]
    NonUnitVector { norm: f64 },
}

/// Arithmetic abstraction letting the PMF engine run exactly (rationals)
/// for oracles/tests and fast (f64) for experiments.
pub trait Weight: Clone + PartialOrd + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    /// Running prefix sums of `values` with a leading 0. The f64
    /// implementation compensates (Kahan), keeping every prefix within a
    /// few ulp of the exact value so window masses are stable under
    /// subtraction.
    fn prefix_sums(values: &[Self]) -> Vec<Self> {
        let mut out = Vec::with_capacity(values.len() + 1);
        let mut acc = Self::zero();
        out.push(acc.clone());
        for v in values {
            acc = acc.add(v);
            out.push(acc.clone());
        }
        out
    }
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn prefix_sums(values: &[Self]) -> Vec<Self> {
        let mut out = Vec::with_capacity(values.len() + 1);
        let (mut acc, mut carry) = (0.0f64, 0.0f64);
        out.push(0.0);
        for &v in values {
            let y = v - carry;
            let t = acc + y;
            carry = (t - acc) - y;
            acc = t;
            out.push(acc);
        }
        out
    }
}

impl Weight for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        num::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Law of an integer-valued random variable: a dense window of
/// probabilities starting at `offset` (equivalent to a sorted atom map;
/// dense storage because convolution touches every cell anyway).
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<W: Weight> {
    offset: i64,
    probs: Vec<W>,
}

impl<W: Weight> Pmf<W> {
    pub fn point_mass(at: i64) -> Self {
        Self { offset: at, probs: vec![W::one()] }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn prob_at(&self, t: i64) -> W {
        let idx = t - self.offset;
        if idx < 0 || idx as usize >= self.probs.len() {
            W::zero()
        } else {
            self.probs[idx as usize].clone()
        }
    }

    /// Nonzero atoms in increasing support order.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, &W)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(k, w)| (self.offset + k as i64, w))
    }

    pub fn total(&self) -> W {
        self.probs.iter().fold(W::zero(), |acc, w| acc.add(w))
    }
}

/// Exact law of `∑ bᵢxᵢ`, `bᵢ` i.i.d. Bernoulli(p), by sequential two-point
/// convolution. Support is `[∑ min(xᵢ,0), ∑ max(xᵢ,0)]`.
pub fn walk_pmf<W: Weight>(x: &[i64], p: Ratio<i64>) -> Result<Pmf<W>, ConcError> {
    walk_pmf_capped(x, p, DEFAULT_SUPPORT_CAP)
}

pub fn walk_pmf_capped<W: Weight>(
    x: &[i64],
    p: Ratio<i64>,
    cap: usize,
) -> Result<Pmf<W>, ConcError> {
    let projected: usize =
        1 + x.iter().map(|&v| v.unsigned_abs() as usize).sum::<usize>();
    if projected > cap {
        return Err(ConcError::BudgetExceeded { needed: projected, cap });
    }
    let (num, den) = (*p.numer(), *p.denom());
    if den <= 0 || num < 0 || num > den {
        return Err(ConcError::InvalidParameter(format!("p = {num}/{den} outside [0,1]")));
    }
    let w_hit = W::from_ratio(num, den);
    let w_miss = W::from_ratio(den - num, den);
    let mut pmf = Pmf::<W>::point_mass(0);
    for &xi in x {
        if xi == 0 {
            continue; // adding 0·b leaves the law unchanged
        }
        let old_len = pmf.probs.len();
        let new_offset = pmf.offset + xi.min(0);
        let new_len = old_len + xi.unsigned_abs() as usize;
        let stay = (pmf.offset - new_offset) as usize;
        let shift = (pmf.offset + xi - new_offset) as usize;
        let mut probs = vec![W::zero(); new_len];
        for (k, w) in pmf.probs.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            probs[k + stay] = probs[k + stay].add(&w.mul(&w_miss));
            probs[k + shift] = probs[k + shift].add(&w.mul(&w_hit));
        }
        pmf = Pmf { offset: new_offset, probs };
    }
    Ok(pmf)
}

/// Lévy concentration `sup_λ P{|Z−λ| ≤ t}` of an integer law, exactly: the
/// optimal closed window of real width `2t` captures a run of atoms
/// spanning at most `⌊2t⌋`, so a sliding integer window suffices.
pub fn levy<W: Weight>(z: &Pmf<W>, t: f64) -> W {
    assert!(t >= 0.0, "window width must be nonnegative");
    let span = (2.0 * t).floor().min(4e18) as i64;
    let pts: Vec<(i64, &W)> = z.atoms().collect();
    let masses: Vec<W> = pts.iter().map(|(_, w)| (*w).clone()).collect();
    let prefix = W::prefix_sums(&masses);
    let mut best = W::zero();
    let mut lo = 0usize;
    for hi in 0..pts.len() {
        while pts[hi].0 - pts[lo].0 > span {
            lo += 1;
        }
        let window = prefix[hi + 1].sub(&prefix[lo]);
        if window > best {
            best = window;
        }
    }
    best
}

/// All subset sums of `y` with Bernoulli(p) weights, sorted and merged on
/// exact equality. 2ⁿ work/memory; n ≤ 25.
pub fn subset_sum_table(y: &[f64], p: f64) -> Result<Vec<(f64, f64)>, ConcError> {
    let n = y.len();
    if n > MAX_ENUM_N {
        return Err(ConcError::TooLarge { n, max: MAX_ENUM_N });
    }
    let mut table: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    table.reserve(1 << n);
    for &yi in y {
        let len = table.len();
        for k in 0..len {
            let (s, w) = table[k];
            table.push((s + yi, w * p));
            table[k].1 = w * (1.0 - p);
        }
    }
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(table.len());
    for (s, w) in table {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += w,
            _ => merged.push((s, w)),
        }
    }
    Ok(merged)
}

/// Brute-force Lévy concentration for real coefficient vectors: with
/// `lambda` fixed, `P{|∑bᵢyᵢ − λ| ≤ t}` by streaming over all 2ⁿ masks;
/// otherwise the sup over λ from the sorted subset-sum table.
pub fn levy_brute(
    y: &[f64],
    p: Ratio<i64>,
    t: f64,
    lambda: Option<f64>,
) -> Result<f64, ConcError> {
    let n = y.len();
    if n > MAX_ENUM_N {
        return Err(ConcError::TooLarge { n, max: MAX_ENUM_N });
    }
    let pf = *p.numer() as f64 / *p.denom() as f64;
    match lambda {
        Some(l) => {
            let mut total = 0.0;
            for mask in 0u64..(1u64 << n) {
                let mut s = 0.0;
                let mut w = 1.0;
                for (i, &yi) in y.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        s += yi;
                        w *= pf;
                    } else {
                        w *= 1.0 - pf;
                    }
                }
                if (s - l).abs() <= t {
                    total += w;
                }
            }
            Ok(total)
        }
        None => {
            let pts = subset_sum_table(y, pf)?;
            Ok(levy_sup_from_table(&pts, t))
        }
    }
}

fn levy_sup_from_table(pts: &[(f64, f64)], t: f64) -> f64 {
    let two_t = 2.0 * t;
    let mut best = 0.0f64;
    let mut window = 0.0;
    let mut lo = 0;
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

/// Small-ball probability `P{|∑bᵢyᵢ − λ| ≤ t}`: exact for n ≤ 25, Monte
/// Carlo with a Wilson 95% interval above.
#[derive(Clone, Debug, PartialEq)]
pub enum SmallBall {
    Exact(f64),
    Estimate { value: f64, ci_low: f64, ci_high: f64, trials: u64 },
}

impl SmallBall {
    pub fn value(&self) -> f64 {
        match self {
            SmallBall::Exact(v) => *v,
            SmallBall::Estimate { value, .. } => *value,
        }
    }
}

pub fn shifted_small_ball(
    y: &[f64],
    lambda: f64,
    p: Ratio<i64>,
    t: f64,
    mc_trials: u64,
    seed: RngSeed,
) -> SmallBall {
    if y.len() <= MAX_ENUM_N {
        return SmallBall::Exact(levy_brute(y, p, t, Some(lambda)).expect("within cap"));
    }
    let mut rng = seed.rng();
    let mut hits = 0u64;
    for _ in 0..mc_trials {
        let s: f64 =
            y.iter().map(|&yi| if bernoulli(&mut rng, p) { yi } else { 0.0 }).sum();
        if (s - lambda).abs() <= t {
            hits += 1;
        }
    }
    let (lo, hi) = crate::experiments::wilson_interval(hits, mc_trials);
    SmallBall::Estimate { value: hits as f64 / mc_trials as f64, ci_low: lo, ci_high: hi, trials: mc_trials }
}

/// Query for the anticoncentration threshold
/// `T = sup{t ∈ (0,1] : L(∑bᵢxᵢ, t) > L·t}`.
///
/// With `lambda` set, the sup over centers is replaced by the fixed center
/// (a diagnostic variant; the classical definition leaves it `None`).
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdQuery {
    pub l_slope: f64,
    pub p: Ratio<i64>,
    pub lambda: Option<f64>,
}

impl ThresholdQuery {
    pub fn new(l_slope: f64, p: Ratio<i64>) -> Result<Self, ConcError> {
        if !(l_slope > 0.0) {
            return Err(ConcError::InvalidParameter(format!("L = {l_slope} must be > 0")));
        }
        Ok(Self { l_slope, p, lambda: None })
    }
}

/// Threshold for an integer coefficient vector (exact law via [`walk_pmf`]).
pub fn threshold_int(x: &[i64], q: &ThresholdQuery) -> Result<f64, ConcError> {
    let pmf = walk_pmf::<f64>(x, q.p)?;
    let (sums, weights): (Vec<f64>, Vec<f64>) =
        pmf.atoms().map(|(s, w)| (s as f64, *w)).unzip();
    Ok(threshold_from_atoms(&sums, &weights, q))
}

/// Threshold for a real coefficient vector (2ⁿ subset-sum table, n ≤ 25).
pub fn threshold_real(x: &[f64], q: &ThresholdQuery) -> Result<f64, ConcError> {
    let pf = *q.p.numer() as f64 / *q.p.denom() as f64;
    let pts = subset_sum_table(x, pf)?;
    let (sums, weights): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(threshold_from_atoms(&sums, &weights, q))
}

fn threshold_from_atoms(sums: &[f64], weights: &[f64], q: &ThresholdQuery) -> f64 {
    let l = q.l_slope;
    if let Some(lambda) = q.lambda {
        return threshold_fixed_center(sums, weights, l, lambda);
    }
    let m = sums.len();
    let prefix = <f64 as Weight>::prefix_sums(weights);

    // A window wider than 2 needs t > 1; only pairs with gap ≤ 2 matter.
    // First, does any of them clear the line at t = 1?
    let mut lo = 0usize;
    for j in 0..m {
        while sums[j] - sums[lo] > 2.0 {
            lo += 1;
        }
        if prefix[j + 1] - prefix[lo] > l {
            return 1.0;
        }
    }
    // Otherwise every admissible window has mass ≤ L and contributes
    // W_{ij}/L, feasible iff W_{ij} > L·(s_j−s_i)/2 ⟺ u_i < z_j.
    let u: Vec<f64> = (0..m).map(|i| prefix[i] - 0.5 * l * sums[i]).collect();
    let tree = MinTree::new(&u);
    let mut best = 0.0f64;
    let mut lo = 0usize;
    for j in 0..m {
        while sums[j] - sums[lo] > 2.0 {
            lo += 1;
        }
        let z = prefix[j + 1] - 0.5 * l * sums[j];
        if let Some(i) = tree.leftmost_below(lo, j, z) {
            best = best.max((prefix[j + 1] - prefix[i]) / l);
        }
    }
    best
}

fn threshold_fixed_center(sums: &[f64], weights: &[f64], l: f64, lambda: f64) -> f64 {
    // P{|S−λ| ≤ t} is a step function of t with jumps at the distances
    // |s_k − λ|; sweep its constant pieces.
    let mut dist: Vec<(f64, f64)> = sums
        .iter()
        .zip(weights)
        .map(|(&s, &w)| ((s - lambda).abs(), w))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = 0.0f64;
    let mut mass = 0.0f64;
    let mut k = 0;
    while k < dist.len() {
        let d = dist[k].0;
        while k < dist.len() && dist[k].0 == d {
            mass += dist[k].1;
            k += 1;
        }
        let next = dist.get(k).map_or(f64::INFINITY, |&(d2, _)| d2);
        if d <= 1.0 && mass / l > d {
            best = best.max((mass / l).min(next).min(1.0));
        }
    }
    best
}

/// Segment tree answering "leftmost index in [l, r] with value < z".
struct MinTree {
    size: usize,
    vals: Vec<f64>,
}

impl MinTree {
    fn new(xs: &[f64]) -> Self {
        let size = xs.len().next_power_of_two().max(1);
        let mut vals = vec![f64::INFINITY; 2 * size];
        vals[size..size + xs.len()].copy_from_slice(xs);
        for i in (1..size).rev() {
            vals[i] = vals[2 * i].min(vals[2 * i + 1]);
        }
        Self { size, vals }
    }

    fn leftmost_below(&self, l: usize, r: usize, z: f64) -> Option<usize> {
        self.rec(1, 0, self.size - 1, l, r, z)
    }

    fn rec(&self, node: usize, nl: usize, nr: usize, l: usize, r: usize, z: f64) -> Option<usize> {
        if nr < l || nl > r || self.vals[node] >= z {
            return None;
        }
        if nl == nr {
            return Some(nl);
        }
        let mid = (nl + nr) / 2;
        self.rec(2 * node, nl, mid, l, r, z)
            .or_else(|| self.rec(2 * node + 1, mid + 1, nr, l, r, z))
    }
}

/// Parameters of the essential least common denominator: the smallest
/// `λ ∈ (0, lambda_max]` with `dist(λx, Zⁿ) ≤ min(c'·λ‖x‖₂, c·√n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LcdParams {
    pub c_prime: f64,
    pub c: f64,
    pub lambda_max: f64,
    pub grid: f64,
}

impl Default for LcdParams {
    fn default() -> Self {
        Self { c_prime: 0.5, c: 0.3, lambda_max: 100.0, grid: 1e-4 }
    }
}

/// Grid scan at resolution `grid` followed by bisection to 1e−9 inside the
/// first bracketing cell; resolution-limited by construction (a satisfying
/// dip narrower than one grid cell can be missed). Returns +∞ when no
/// dilation up to `lambda_max` qualifies.
pub fn lcd(x: &[f64], params: &LcdParams) -> Result<f64, ConcError> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(ConcError::NonUnitVector { norm });
    }
    if !(params.c_prime > 0.0 && params.c_prime < 1.0 && params.c > 0.0) {
        return Err(ConcError::InvalidParameter("LCD constants out of range".into()));
    }
    let cap = params.c * (x.len() as f64).sqrt();
    let dist = |lambda: f64| -> f64 {
        x.iter()
            .map(|&xi| {
                let v = lambda * xi;
                let d = v - v.round();
                d * d
            })
            .sum::<f64>()
            .sqrt()
    };
    let ok = |lambda: f64| dist(lambda) <= (params.c_prime * lambda).min(cap);
    let mut k = 1u64;
    let mut prev = 0.0f64;
    loop {
        let lambda = k as f64 * params.grid;
        if lambda > params.lambda_max {
            return Ok(f64::INFINITY);
        }
        if ok(lambda) {
            let (mut lo, mut hi) = (prev, lambda);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = lambda;
        k += 1;
    }
}

/// `C·r / √(∑ (1−Lᵢ)·rᵢ²)` — the classical bound on the concentration of a
/// sum of independent variables from per-summand Lévy levels. `terms` holds
/// `(1 − L(ξᵢ, rᵢ), rᵢ)`; requires `r ≥ max rᵢ`; +∞ on a vacuous (zero)
/// denominator.
pub fn rogozin_bound(terms: &[(f64, f64)], r: f64, c: f64) -> Result<f64, ConcError> {
    if !(c > 0.0) {
        return Err(ConcError::InvalidParameter("C must be positive".into()));
    }
    if terms.iter().any(|&(_, ri)| ri > r || ri <= 0.0) {
        return Err(ConcError::InvalidParameter("need 0 < rᵢ ≤ r".into()));
    }
    let denom_sq: f64 = terms.iter().map(|&(one_minus_l, ri)| one_minus_l * ri * ri).sum();
    if denom_sq <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(c * r / denom_sq.sqrt())
}

/// `(C·K·ε)^m`: small-ball tensorization from a per-coordinate linear bound
/// `P{|ξ| ≤ ε} ≤ K·ε`.
pub fn tensorization_bound_v1(c: f64, k: f64, eps: f64, m: usize) -> Result<f64, ConcError> {
    if !(c > 0.0 && k >= 0.0 && eps > 0.0) {
        return Err(ConcError::InvalidParameter("need C > 0, K ≥ 0, ε > 0".into()));
    }
    Ok((c * k * eps).powi(m as i32))
}

/// `(e/ε)^{εm}·τ^{m−εm}`: tensorization from a per-coordinate atom bound
/// `P{|ξ| ≤ η} ≤ τ`. `η` is part of the hypothesis, not the formula; it is
/// validated and otherwise unused.
pub fn tensorization_bound_v2(eta: f64, tau: f64, eps: f64, m: usize) -> Result<f64, ConcError> {
    if !(eta > 0.0) {
        return Err(ConcError::InvalidParameter("η must be positive".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ConcError::InvalidParameter("ε must lie in (0,1]".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(ConcError::InvalidParameter("τ must lie in [0,1]".into()));
    }
    let em = eps * m as f64;
    Ok((std::f64::consts::E / eps).powf(em) * tau.powf(m as f64 - em))
}
