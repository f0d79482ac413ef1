//! Python bindings: a `Matrix` class over the exact integer kernel plus
//! functional wrappers for the sampling, anticoncentration, threshold,
//! rounding, and experiment drivers. Rational parameters cross the
//! boundary as strings ("1/2", "-0.25") so exactness survives the trip.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::ToPrimitive;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bernmat::concentration::{levy, levy_brute, threshold_real, walk_pmf, ThresholdQuery};
use bernmat::exactlinalg;
use bernmat::experiments as exp;
use bernmat::geometry::{classify_compressible, Compressibility, IncompParams};
use bernmat::model::{
    parse_ratio, sample_bernoulli_matrix, shifted_matrix, shifted_matrix_int, EntryModel,
    IntMatrix, ModelParams,
};
use bernmat::rng::RngSeed;
use bernmat::rounding::{randomized_round, verify_rounding, RoundingConstants};

fn val_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ratio(s: &str) -> PyResult<Ratio<i64>> {
    parse_ratio(s).map_err(val_err)
}

/// Square integer matrix with exact determinant/rank and the shifted-model
/// spectral helpers.
#[pyclass(frozen)]
struct Matrix {
    inner: IntMatrix,
}

#[pymethods]
impl Matrix {
    #[new]
    fn new(rows: Vec<Vec<i64>>) -> PyResult<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("rows must form a nonempty square matrix"));
        }
        Ok(Matrix { inner: IntMatrix::from_rows(&rows) })
    }

    /// Draw an n×n Bernoulli(p) zero–one matrix from (seed, stream).
    #[staticmethod]
    #[pyo3(signature = (n, p="1/2", seed=0, stream=0))]
    fn sample(n: usize, p: &str, seed: u64, stream: u64) -> PyResult<Self> {
        let params = ModelParams::new(n, ratio(p)?, Ratio::new(0, 1)).map_err(val_err)?;
        Ok(Matrix { inner: sample_bernoulli_matrix(&params, RngSeed::new(seed, stream)) })
    }

    fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.inner.rows()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    /// Exact determinant (arbitrary precision).
    fn det(&self) -> BigInt {
        exactlinalg::det_exact(&self.inner)
    }

    fn rank(&self) -> usize {
        exactlinalg::rank_exact(&self.inner)
    }

    /// Exact determinant of q·(B + s·11ᵀ) for s = r/q in lowest terms;
    /// zero iff the shifted matrix is singular.
    fn shifted_det(&self, s: &str) -> PyResult<BigInt> {
        let m = shifted_matrix_int(&self.inner, ratio(s)?);
        Ok(exactlinalg::det_exact(&m))
    }

    /// Smallest singular value of B + s·11ᵀ.
    fn smin(&self, s: &str) -> PyResult<f64> {
        Ok(exactlinalg::smin(&shifted_matrix(&self.inner, ratio(s)?)))
    }

    /// Unit normal to the span of the first n−1 columns of B + s·11ᵀ
    /// (computed on the integer matrix, so exact up to normalization).
    fn unit_normal(&self, s: &str) -> PyResult<Vec<f64>> {
        let m = shifted_matrix_int(&self.inner, ratio(s)?);
        let cols: Vec<Vec<i64>> = (0..m.cols() - 1).map(|j| m.col(j)).collect();
        Ok(exactlinalg::unit_normal(&cols).map_err(val_err)?.coords)
    }

    fn __repr__(&self) -> String {
        format!("Matrix(n={})", self.inner.rows())
    }
}

/// Exact singularity probability over all 2^(n²) matrices, as a
/// (numerator, denominator) pair of Python ints.
#[pyfunction]
#[pyo3(signature = (n, p="1/2", sign=false))]
fn enum_singularity(n: usize, p: &str, sign: bool) -> PyResult<(BigInt, BigInt)> {
    let model = if sign { EntryModel::Sign } else { EntryModel::Bernoulli(ratio(p)?) };
    let exact = exp::enum_singularity(n, &model).map_err(val_err)?;
    Ok((exact.numer().clone(), exact.denom().clone()))
}

/// Monte Carlo singularity estimate with a Wilson 95% CI.
#[pyfunction]
#[pyo3(signature = (n, p="1/2", s=None, trials=10_000, seed=0))]
fn mc_singularity<'py>(
    py: Python<'py>,
    n: usize,
    p: &str,
    s: Option<&str>,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let shift = s.map(ratio).transpose()?;
    let out = exp::mc_singularity(n, ratio(p)?, shift, trials, seed).map_err(val_err)?;
    let d = PyDict::new(py);
    d.set_item("estimate", out.estimate)?;
    d.set_item("ci_low", out.ci.0)?;
    d.set_item("ci_high", out.ci.1)?;
    d.set_item("hits", out.hits)?;
    d.set_item("trials", out.trials)?;
    Ok(d)
}

/// Sup-Lévy concentration `sup_λ P{|∑bᵢxᵢ − λ| ≤ t}` of the integer walk
/// (exact law, float accumulation).
#[pyfunction]
#[pyo3(signature = (x, t, p="1/2"))]
fn walk_levy(x: Vec<i64>, t: f64, p: &str) -> PyResult<f64> {
    let pmf = walk_pmf::<f64>(&x, ratio(p)?).map_err(val_err)?;
    Ok(levy(&pmf, t))
}

/// Same functional through the 2ⁿ brute-force path (n ≤ 25): a built-in
/// cross-check for the pmf route.
#[pyfunction]
#[pyo3(signature = (y, t, p="1/2", center=None))]
fn levy_brute_force(y: Vec<f64>, t: f64, p: &str, center: Option<f64>) -> PyResult<f64> {
    levy_brute(&y, ratio(p)?, t, center).map_err(val_err)
}

/// Anticoncentration threshold sup{t ∈ (0,1] : L(∑bᵢxᵢ, t) > Lt}.
#[pyfunction]
#[pyo3(signature = (x, l=1.0, p="1/2"))]
fn threshold(x: Vec<f64>, l: f64, p: &str) -> PyResult<f64> {
    let q = ThresholdQuery::new(l, ratio(p)?).map_err(val_err)?;
    threshold_real(&x, &q).map_err(val_err)
}

/// "comp" or "incomp" under the (δ, ν) sparse-approximation test.
#[pyfunction]
#[pyo3(signature = (x, delta=0.25, nu=0.25))]
fn compressibility(x: Vec<f64>, delta: f64, nu: f64) -> PyResult<&'static str> {
    let params = IncompParams::new(delta, nu).map_err(val_err)?;
    Ok(match classify_compressible(&x, &params).map_err(val_err)? {
        Compressibility::Comp => "comp",
        Compressibility::Incomp => "incomp",
    })
}

/// Randomized rounding of y to an adjacent integer vector preserving the
/// anticoncentration profile; returns the verified certificate summary.
#[pyfunction]
#[pyo3(signature = (y, lam, l, p="1/2", budget=10_000, seed=0))]
fn round_certified<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    lam: f64,
    l: f64,
    p: &str,
    budget: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let pr = ratio(p)?;
    let cert = randomized_round(
        &y,
        lam,
        pr,
        l,
        &RoundingConstants::default(),
        budget,
        RngSeed::new(seed, 0),
    )
    .map_err(val_err)?;
    verify_rounding(&cert, pr).map_err(val_err)?;
    let d = PyDict::new(py);
    d.set_item("y_prime", cert.y_prime.clone())?;
    d.set_item("attempts", cert.attempts)?;
    d.set_item("sup_distance", cert.checks.sup_distance)?;
    d.set_item("slope_ratio", cert.checks.slope_ratio)?;
    d.set_item("levy_before", cert.checks.levy_before)?;
    d.set_item("levy_after", cert.checks.levy_after)?;
    d.set_item("sum_gap", cert.checks.sum_gap)?;
    Ok(d)
}

/// Empirical tail P{s_min(B + s·11ᵀ) ≤ t/√n} over a t grid.
#[pyfunction]
#[pyo3(signature = (n, t_grid, p="1/2", s="-1/2", trials=200, seed=0))]
fn smin_tail<'py>(
    py: Python<'py>,
    n: usize,
    t_grid: Vec<f64>,
    p: &str,
    s: &str,
    trials: u64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let out = exp::smin_tail(n, ratio(p)?, ratio(s)?, &t_grid, trials, seed).map_err(val_err)?;
    point_dicts(py, &out.points)
}

/// Lévy exceedance curve P{L(∑bᵢξᵢ, √n) > L_B/N} for ξ uniform on the
/// two-band lattice box with N = ⌊(1−p+ε)^(−n)⌋.
#[pyfunction]
#[pyo3(signature = (n, l_b_grid, delta=0.25, p="1/2", eps=0.1, trials=200, seed=0))]
#[allow(clippy::too_many_arguments)]
fn lattice_exceedance<'py>(
    py: Python<'py>,
    n: usize,
    l_b_grid: Vec<f64>,
    delta: f64,
    p: &str,
    eps: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let sweep = exp::theorem_b_sweep(&[n], delta, ratio(p)?, eps, &l_b_grid, trials, seed)
        .map_err(val_err)?;
    point_dicts(py, &sweep.points)
}

fn point_dicts<'py>(
    py: Python<'py>,
    points: &[exp::Point],
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    points
        .iter()
        .map(|pt| {
            let d = PyDict::new(py);
            let x = PyDict::new(py);
            if let Some(obj) = pt.x.as_object() {
                for (k, v) in obj {
                    match v {
                        serde_json::Value::Number(num) => {
                            if let Some(i) = num.as_i64() {
                                x.set_item(k, i)?;
                            } else {
                                x.set_item(k, num.as_f64())?;
                            }
                        }
                        serde_json::Value::String(s) => x.set_item(k, s)?,
                        other => x.set_item(k, other.to_string())?,
                    }
                }
            }
            d.set_item("x", x)?;
            d.set_item("estimate", pt.estimate)?;
            d.set_item("ci_low", pt.ci_low)?;
            d.set_item("ci_high", pt.ci_high)?;
            d.set_item("count", pt.count)?;
            Ok(d)
        })
        .collect()
}

/// Convenience: exact probability as a float (for quick notebook use).
#[pyfunction]
#[pyo3(signature = (n, p="1/2", sign=false))]
fn enum_singularity_float(n: usize, p: &str, sign: bool) -> PyResult<f64> {
    let model = if sign { EntryModel::Sign } else { EntryModel::Bernoulli(ratio(p)?) };
    let exact = exp::enum_singularity(n, &model).map_err(val_err)?;
    exact
        .to_f64()
        .ok_or_else(|| PyValueError::new_err("probability does not fit an f64"))
}

#[pymodule]
fn bernmat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Matrix>()?;
    m.add_function(wrap_pyfunction!(enum_singularity, m)?)?;
    m.add_function(wrap_pyfunction!(enum_singularity_float, m)?)?;
    m.add_function(wrap_pyfunction!(mc_singularity, m)?)?;
    m.add_function(wrap_pyfunction!(walk_levy, m)?)?;
    m.add_function(wrap_pyfunction!(levy_brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(compressibility, m)?)?;
    m.add_function(wrap_pyfunction!(round_certified, m)?)?;
    m.add_function(wrap_pyfunction!(smin_tail, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_exceedance, m)?)?;
    Ok(())
}
