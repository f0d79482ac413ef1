//! Compressible/incompressible geometry on the unit sphere, magnitude-
//! sorting permutations, and the origin-symmetric product domains used to
//! discretize normal vectors.
//!
//! Coordinate sets are never materialized: every per-coordinate set here
//! has the form `{t ∈ Z : inner ≤ |t| ≤ outer}` (a symmetric interval when
//! `inner = 0`, a two-interval set with a gap otherwise), so cardinality,
//! membership, and uniform sampling are all O(1).

use num::BigUint;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rng::uniform_below;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("vector norm {norm} is not 1 within 1e-10")]
    NonUnitVector { norm: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Compressibility parameters: a unit vector is compressible when it lies
/// within `ν` of the `⌊δn⌋`-sparse vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncompParams {
    pub delta: f64,
    pub nu: f64,
}

impl IncompParams {
    pub fn new(delta: f64, nu: f64) -> Result<Self, GeomError> {
        if !(delta > 0.0 && delta <= 1.0 && nu > 0.0 && nu <= 1.0) {
            return Err(GeomError::InvalidParameter(format!(
                "need δ, ν ∈ (0,1], got δ={delta}, ν={nu}"
            )));
        }
        Ok(Self { delta, nu })
    }
}

/// Indices of the k largest-magnitude coordinates (ties broken by lower
/// index, result ascending) and the ℓ₂ norm of the remainder — the exact
/// distance from `x` to the set of k-sparse vectors.
pub fn sparse_tail(x: &[f64], k: usize) -> (Vec<usize>, f64) {
    assert!(k <= x.len(), "k = {k} exceeds dimension {}", x.len());
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut head: Vec<usize> = order[..k].to_vec();
    head.sort_unstable();
    let tail_sq: f64 = order[k..].iter().map(|&i| x[i] * x[i]).sum();
    (head, tail_sq.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compressibility {
    Comp,
    Incomp,
}

/// Comp iff the distance to `⌊δn⌋`-sparse vectors is ≤ ν (boundary counts
/// as Comp — the defining inequality is non-strict).
pub fn classify_compressible(
    x: &[f64],
    params: &IncompParams,
) -> Result<Compressibility, GeomError> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(GeomError::NonUnitVector { norm });
    }
    let k = (params.delta * x.len() as f64).floor() as usize;
    let (_, tail) = sparse_tail(x, k.min(x.len()));
    Ok(if tail <= params.nu { Compressibility::Comp } else { Compressibility::Incomp })
}

/// Number of coordinates with `|xᵢ| ≥ ν/√n`. For every incompressible
/// vector this is at least `⌊δn⌋`.
pub fn incomp_coordinate_count(x: &[f64], params: &IncompParams) -> usize {
    let cut = params.nu / (x.len() as f64).sqrt();
    x.iter().filter(|v| v.abs() >= cut).count()
}

/// Permutation sorting coordinates by decreasing magnitude, ties by
/// ascending index: `out[k]` is the index of the (k+1)-th largest `|xᵢ|`.
pub fn special_permutation(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    order
}

/// Number of nested index chains `{1..n} ⊇ I₀ ⊋ I₁ ⊋ …` with
/// `|I_j| = ⌊2^{−j}δn⌋` down to size 1 — the exact cardinality of the
/// sorting-permutation family that replaces enumerating all n! orders
/// (the family itself is exponential and never materialized).
pub fn nested_chain_count(n: usize, delta: f64) -> BigUint {
    assert!(delta > 0.0 && delta <= 1.0, "δ must lie in (0,1]");
    let mut sizes = Vec::new();
    let mut j = 0u32;
    loop {
        let m = (delta * n as f64 / f64::from(1u32 << j.min(60))).floor() as usize;
        if m == 0 {
            break;
        }
        sizes.push(m);
        j += 1;
    }
    let mut count = BigUint::from(1u32);
    let mut prev = n;
    for &m in &sizes {
        count *= binomial(prev, m);
        prev = m;
    }
    count
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut num = BigUint::from(1u32);
    for i in 0..k {
        num = num * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    num
}

/// One per-coordinate set `{t ∈ Z : inner ≤ |t| ≤ outer}`. `inner = 0`
/// gives a symmetric interval; `inner ≥ 1` a union of two intervals with
/// the gap `[−(inner−1), inner−1]` removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoordSet {
    inner: i64,
    outer: i64,
}

impl CoordSet {
    pub fn new(inner: i64, outer: i64) -> Result<Self, GeomError> {
        if inner < 0 || outer < inner {
            return Err(GeomError::InvalidParameter(format!(
                "need 0 ≤ inner ≤ outer, got [{inner}, {outer}]"
            )));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> i64 {
        self.inner
    }

    pub fn outer(&self) -> i64 {
        self.outer
    }

    pub fn is_interval(&self) -> bool {
        self.inner == 0
    }

    pub fn cardinality(&self) -> u64 {
        if self.inner == 0 {
            (2 * self.outer + 1) as u64
        } else {
            2 * (self.outer - self.inner + 1) as u64
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        let a = t.abs();
        a >= self.inner && a <= self.outer
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        let idx = uniform_below(rng, self.cardinality()) as i64;
        if self.inner == 0 {
            idx - self.outer
        } else {
            let half = self.outer - self.inner + 1;
            if idx < half {
                -self.outer + idx
            } else {
                self.inner + (idx - half)
            }
        }
    }
}

/// Origin-symmetric product domain `A = A₁ × … × A_n ⊂ Zⁿ` with its scale
/// `N`, heavy-coordinate fraction `δ`, and the measured volume parameter
/// `K` (smallest K with `∏|Aᵢ| ≤ (KN)ⁿ`, computed in log-space).
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleSet {
    coord_sets: Vec<CoordSet>,
    big_n: i64,
    delta: f64,
    k_volume: f64,
}

impl AdmissibleSet {
    pub fn n(&self) -> usize {
        self.coord_sets.len()
    }

    pub fn big_n(&self) -> i64 {
        self.big_n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_volume(&self) -> f64 {
        self.k_volume
    }

    pub fn coord(&self, i: usize) -> &CoordSet {
        &self.coord_sets[i]
    }

    pub fn coords(&self) -> &[CoordSet] {
        &self.coord_sets
    }

    pub fn max_abs_element(&self) -> i64 {
        self.coord_sets.iter().map(|c| c.outer).max().unwrap_or(0)
    }

    pub fn log2_volume(&self) -> f64 {
        self.coord_sets.iter().map(|c| (c.cardinality() as f64).log2()).sum()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<i64> {
        self.coord_sets.iter().map(|c| c.sample(rng)).collect()
    }

    fn from_sets(coord_sets: Vec<CoordSet>, big_n: i64, delta: f64) -> Self {
        let n = coord_sets.len().max(1) as f64;
        let mean_log: f64 =
            coord_sets.iter().map(|c| (c.cardinality() as f64).ln()).sum::<f64>() / n;
        let k_volume = mean_log.exp() / big_n as f64;
        Self { coord_sets, big_n, delta, k_volume }
    }
}

/// Which product domain to build.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainSpec {
    /// `{−2N..−N−1 ∪ N+1..2N}^⌊δn⌋ × {−N..N}^{n−⌊δn⌋}`.
    TheoremB { n: usize, delta: f64, big_n: i64 },
    /// The dyadic-block domain `A(n,δ,ν,T)` with scale `N = ⌊ν/T⌋ − 1`:
    /// heavy coordinates keep `⌊ν/T⌋ ≤ |t| ≤ M_j` with the outer radius
    /// `M_j = ⌈2^{(j+3)/2}/(√δ·T)⌉ + 1` on the dyadic block
    /// `2^{−j}δn < i ≤ 2^{−j+1}δn` (the first coordinate widened to
    /// `⌈2√n/T⌉ + 1`), and coordinates beyond `δn` keep the full interval
    /// `|t| ≤ ⌈√8/(√δ·T)⌉ + 1`.
    Section5 { n: usize, delta: f64, nu: f64, t: f64 },
}

pub fn build_discretization_domain(spec: &DomainSpec) -> Result<AdmissibleSet, GeomError> {
    match *spec {
        DomainSpec::TheoremB { n, delta, big_n } => {
            if n == 0 || !(delta > 0.0 && delta <= 1.0) || big_n < 1 {
                return Err(GeomError::InvalidParameter(format!(
                    "need n ≥ 1, δ ∈ (0,1], N ≥ 1; got n={n}, δ={delta}, N={big_n}"
                )));
            }
            let heavy = (delta * n as f64).floor() as usize;
            let sets = (0..n)
                .map(|i| {
                    if i < heavy {
                        CoordSet { inner: big_n + 1, outer: 2 * big_n }
                    } else {
                        CoordSet { inner: 0, outer: big_n }
                    }
                })
                .collect();
            Ok(AdmissibleSet::from_sets(sets, big_n, delta))
        }
        DomainSpec::Section5 { n, delta, nu, t } => {
            if n == 0 || !(delta > 0.0 && delta <= 1.0) || !(nu > 0.0 && nu <= 1.0) || !(t > 0.0)
            {
                return Err(GeomError::InvalidParameter(format!(
                    "need n ≥ 1, δ, ν ∈ (0,1], T > 0; got n={n}, δ={delta}, ν={nu}, T={t}"
                )));
            }
            if nu / t < 2.0 {
                return Err(GeomError::InvalidParameter(format!(
                    "need ν/T ≥ 2, got {}",
                    nu / t
                )));
            }
            let gap = (nu / t).floor() as i64; // = N + 1
            let big_n = gap - 1;
            let dn = delta * n as f64;
            let heavy = dn.floor() as usize;
            let outer_for = |j: u32| -> i64 {
                (2f64.powf((j as f64 + 3.0) / 2.0) / (delta.sqrt() * t)).ceil() as i64 + 1
            };
            let sets = (1..=n)
                .map(|i| {
                    if i == 1 && heavy >= 1 {
                        CoordSet {
                            inner: gap,
                            outer: (2.0 * (n as f64).sqrt() / t).ceil() as i64 + 1,
                        }
                    } else if i <= heavy {
                        // dyadic block index: smallest j ≥ 1 with i·2ʲ > δn
                        let mut j = 1u32;
                        while (i as f64) * f64::from(1u32 << j.min(60)) <= dn {
                            j += 1;
                        }
                        CoordSet { inner: gap, outer: outer_for(j) }
                    } else {
                        CoordSet { inner: 0, outer: outer_for(0) }
                    }
                })
                .collect();
            Ok(AdmissibleSet::from_sets(sets, big_n, delta))
        }
    }
}

/// The five admissibility clauses, in the order they are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmissibilityClause {
    ProductStructure,
    LightInterval,
    HeavyTwoInterval,
    VolumeBound,
    MaxElement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClauseViolation {
    pub clause: AdmissibilityClause,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub violations: Vec<ClauseViolation>,
}

/// Check the five defining clauses of an (N, n, K, δ)-admissible set:
/// origin-symmetric product structure; each light coordinate (i > δn) an
/// interval of at least 2N+1 points; each heavy coordinate (i ≤ δn) two
/// intervals totalling ≥ 2N points with gap covering [−N, N]; total volume
/// ≤ (KN)ⁿ in log-space; every element < nN in magnitude. Failures are
/// results, not errors.
pub fn check_admissible(
    set: &AdmissibleSet,
    big_n: i64,
    n: usize,
    k: f64,
    delta: f64,
) -> AdmissibilityReport {
    let mut violations = Vec::new();
    if set.n() != n {
        violations.push(ClauseViolation {
            clause: AdmissibilityClause::ProductStructure,
            detail: format!("has {} coordinates, expected {n}", set.n()),
        });
    }
    let heavy = (delta * n as f64).floor() as usize;
    for (idx, c) in set.coords().iter().enumerate() {
        let i = idx + 1;
        if c.cardinality() == 0 {
            violations.push(ClauseViolation {
                clause: AdmissibilityClause::ProductStructure,
                detail: format!("A_{i} is empty"),
            });
            continue;
        }
        if i > heavy {
            if !c.is_interval() || c.cardinality() < (2 * big_n + 1) as u64 {
                violations.push(ClauseViolation {
                    clause: AdmissibilityClause::LightInterval,
                    detail: format!(
                        "A_{i}: interval={}, |A_i|={} < 2N+1={}",
                        c.is_interval(),
                        c.cardinality(),
                        2 * big_n + 1
                    ),
                });
            }
        } else {
            let gap_ok = c.inner() >= big_n + 1;
            let size_ok = c.cardinality() >= (2 * big_n) as u64;
            if c.is_interval() || !gap_ok || !size_ok {
                violations.push(ClauseViolation {
                    clause: AdmissibilityClause::HeavyTwoInterval,
                    detail: format!(
                        "A_{i}: two-interval={}, gap from {} (need > {big_n}), |A_i|={} (need ≥ {})",
                        !c.is_interval(),
                        c.inner(),
                        c.cardinality(),
                        2 * big_n
                    ),
                });
            }
        }
        if c.outer() >= n as i64 * big_n {
            violations.push(ClauseViolation {
                clause: AdmissibilityClause::MaxElement,
                detail: format!("A_{i}: max element {} ≥ nN = {}", c.outer(), n as i64 * big_n),
            });
        }
    }
    let log_volume = set.log2_volume();
    let log_cap = n as f64 * (k * big_n as f64).log2();
    if log_volume > log_cap + 1e-9 {
        violations.push(ClauseViolation {
            clause: AdmissibilityClause::VolumeBound,
            detail: format!("log₂∏|A_i| = {log_volume:.3} > n·log₂(KN) = {log_cap:.3}"),
        });
    }
    AdmissibilityReport { pass: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{uniform_unit, RngSeed};

    fn unit_e1(n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        x
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        // Box–Muller pairs give a rotation-invariant direction.
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                let u = uniform_unit(rng).max(1e-12);
                let v = uniform_unit(rng);
                (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        x
    }

    #[test]
    fn sparse_tail_examples() {
        let (idx, tail) = sparse_tail(&unit_e1(5), 1);
        assert_eq!(idx, vec![0]);
        assert_eq!(tail, 0.0);

        let n = 100;
        let x = vec![1.0 / (n as f64).sqrt(); n];
        let (idx, tail) = sparse_tail(&x, 10);
        assert_eq!(idx, (0..10).collect::<Vec<_>>(), "ties broken by lower index");
        assert!((tail - (90.0f64 / 100.0).sqrt()).abs() < 1e-12);

        let (_, full) = sparse_tail(&x, n);
        assert_eq!(full, 0.0);
        let (_, none) = sparse_tail(&x, 0);
        assert!((none - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let p = IncompParams::new(0.2, 0.5).unwrap();
        assert_eq!(classify_compressible(&unit_e1(5), &p).unwrap(), Compressibility::Comp);

        let n = 100;
        let x = vec![0.1; n];
        let p2 = IncompParams::new(0.1, 0.5).unwrap();
        assert_eq!(classify_compressible(&x, &p2).unwrap(), Compressibility::Incomp);

        // boundary: tail exactly ν counts as Comp
        let nu = 0.5;
        let y = [(1.0f64 - nu * nu).sqrt(), nu];
        let p3 = IncompParams::new(0.5, nu).unwrap();
        assert_eq!(classify_compressible(&y, &p3).unwrap(), Compressibility::Comp);

        assert!(classify_compressible(&[2.0, 0.0], &p).is_err());
    }

    #[test]
    fn incomp_count_examples() {
        let n = 100;
        let x = vec![0.1; n];
        let p = IncompParams::new(0.1, 1.0).unwrap();
        assert_eq!(incomp_coordinate_count(&x, &p), n);
        // e₁ is Comp for these params, so no claim is made about its count
        let p2 = IncompParams::new(0.5, 0.3).unwrap();
        assert_eq!(incomp_coordinate_count(&unit_e1(4), &p2), 1);
    }

    #[test]
    fn incompressible_vectors_have_many_heavy_coordinates() {
        let n = 64;
        let params = IncompParams::new(0.1, 0.3).unwrap();
        let floor = (params.delta * n as f64).floor() as usize;
        let mut rng = RngSeed::new(200, 0).rng();
        let mut incomp_seen = 0;
        for _ in 0..1000 {
            let x = random_unit(&mut rng, n);
            if classify_compressible(&x, &params).unwrap() == Compressibility::Incomp {
                incomp_seen += 1;
                assert!(incomp_coordinate_count(&x, &params) >= floor);
            }
        }
        assert!(incomp_seen > 900, "random directions should be incompressible");
    }

    #[test]
    fn special_permutation_examples() {
        assert_eq!(special_permutation(&[0.1, -0.9, 0.4]), vec![1, 2, 0]);
        assert_eq!(special_permutation(&[0.5, -0.5, 0.5]), vec![0, 1, 2]);

        let mut rng = RngSeed::new(201, 0).rng();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..12).map(|_| uniform_unit(&mut rng) - 0.5).collect();
            let sigma = special_permutation(&x);
            let mags: Vec<f64> = sigma.iter().map(|&i| x[i].abs()).collect();
            assert!(mags.windows(2).all(|w| w[0] >= w[1]), "not sorted: {mags:?}");

            // argsort invariance: a reversed input yields the same magnitudes
            let rev: Vec<f64> = x.iter().rev().copied().collect();
            let mags_rev: Vec<f64> =
                special_permutation(&rev).iter().map(|&i| rev[i].abs()).collect();
            assert_eq!(mags, mags_rev);
        }
    }

    #[test]
    fn nested_chain_count_small_cases() {
        // n=4, δ=1/2: sizes 2, 1 → C(4,2)·C(2,1) = 12
        assert_eq!(nested_chain_count(4, 0.5), BigUint::from(12u32));
        // n=8, δ=1/2: sizes 4, 2, 1 → C(8,4)·C(4,2)·C(2,1) = 70·6·2 = 840
        assert_eq!(nested_chain_count(8, 0.5), BigUint::from(840u32));
        // δn < 1 → empty chain, exactly one (trivial) choice
        assert_eq!(nested_chain_count(3, 0.2), BigUint::from(1u32));
    }

    #[test]
    fn theorem_b_domain_example() {
        let set = build_discretization_domain(&DomainSpec::TheoremB {
            n: 4,
            delta: 0.5,
            big_n: 5,
        })
        .unwrap();
        for i in 0..2 {
            assert_eq!((set.coord(i).inner(), set.coord(i).outer()), (6, 10));
            assert_eq!(set.coord(i).cardinality(), 10);
        }
        for i in 2..4 {
            assert_eq!((set.coord(i).inner(), set.coord(i).outer()), (0, 5));
            assert_eq!(set.coord(i).cardinality(), 11);
        }
        // origin symmetry
        for c in set.coords() {
            for t in -12..=12 {
                assert_eq!(c.contains(t), c.contains(-t));
            }
        }
    }

    #[test]
    fn section5_domain_example() {
        let set = build_discretization_domain(&DomainSpec::Section5 {
            n: 8,
            delta: 0.5,
            nu: 0.5,
            t: 0.125,
        })
        .unwrap();
        assert_eq!(set.big_n(), 3);
        // A₁ = [−47,47] ∩ Z minus [−3,3]
        assert_eq!((set.coord(0).inner(), set.coord(0).outer()), (4, 47));
        // all heavy coordinates share the gap, light ones are intervals
        for i in 1..4 {
            assert_eq!(set.coord(i).inner(), 4, "A_{}", i + 1);
        }
        for i in 4..8 {
            assert!(set.coord(i).is_interval());
        }
        // dyadic blocks widen as i decreases: block j=1 covers i ∈ {3,4},
        // j=2 covers i=2
        assert_eq!(set.coord(2).outer(), set.coord(3).outer());
        assert!(set.coord(1).outer() > set.coord(2).outer());
        assert!(set.coord(0).outer() < i64::MAX);

        assert!(build_discretization_domain(&DomainSpec::Section5 {
            n: 8,
            delta: 0.5,
            nu: 0.2,
            t: 0.125,
        })
        .is_err(), "ν/T < 2 must be rejected");
    }

    #[test]
    fn coord_set_sampling_uniform() {
        let c = CoordSet::new(3, 5).unwrap(); // {±3, ±4, ±5}
        let mut rng = RngSeed::new(202, 0).rng();
        let mut counts = std::collections::HashMap::new();
        let trials = 60_000;
        for _ in 0..trials {
            let v = c.sample(&mut rng);
            assert!(c.contains(v));
            *counts.entry(v).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expect = trials as f64 / 6.0;
        for (&v, &cnt) in &counts {
            let dev = (cnt as f64 - expect).abs() / (expect * (1.0 - 1.0 / 6.0)).sqrt();
            assert!(dev < 4.0, "value {v} count {cnt} deviates {dev}σ");
        }
    }

    #[test]
    fn admissibility_theorem_b_examples() {
        for n in [3usize, 4, 9] {
            for big_n in [1i64, 5, 20] {
                let set = build_discretization_domain(&DomainSpec::TheoremB {
                    n,
                    delta: 0.5,
                    big_n,
                })
                .unwrap();
                let report = check_admissible(&set, big_n, n, 4.0, 0.5);
                assert!(report.pass, "n={n} N={big_n}: {:?}", report.violations);
            }
        }
        // n = 2: max element 2N is not < nN = 2N
        let set =
            build_discretization_domain(&DomainSpec::TheoremB { n: 2, delta: 0.5, big_n: 5 })
                .unwrap();
        let report = check_admissible(&set, 5, 2, 4.0, 0.5);
        assert!(!report.pass);
        assert!(report
            .violations
            .iter()
            .all(|v| v.clause == AdmissibilityClause::MaxElement));
    }

    #[test]
    fn admissibility_section5_with_computed_k() {
        // large-n dyadic domain passes with its own measured K
        let (n, delta, nu, t) = (128usize, 0.25, 0.5, 0.01);
        let set = build_discretization_domain(&DomainSpec::Section5 { n, delta, nu, t })
            .unwrap();
        let k = set.k_volume();
        let report = check_admissible(&set, set.big_n(), n, k * (1.0 + 1e-12), delta);
        assert!(report.pass, "{:?}", report.violations);
        // shrinking K below the measured value must trip the volume clause
        let tight = check_admissible(&set, set.big_n(), n, k * 0.9, delta);
        assert!(tight
            .violations
            .iter()
            .any(|v| v.clause == AdmissibilityClause::VolumeBound));
    }
}
