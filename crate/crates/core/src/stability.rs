//! Linear stability of the all-`w = 1` state.
//!
//! A small density `ρ(k)` of agents using some `w < 1` evolves, to first
//! order, as `ρ̇ = M ρ` with
//!
//! ```text
//! M[k][k'] = a · P0(k) · 1{k > 0} · 1{k' > 0}
//!          + (1 - a) · ( (k+1)/K · 1{k' = k+1}  -  k/K · 1{k' = k} )
//! ```
//!
//! where `P0` is the Poisson(K) in-degree law of the resident population.
//! The first part is imitation of the invading strategy by residents, the
//! second is the invaders losing donators one at a time.
//!
//! Column `k' = 0` of `M` is identically zero, so `e_0` is always an
//! eigenvector with eigenvalue 0: invaders without donators neither spread nor
//! vanish under the linearization. Ordering states as `(0 | 1..=k_max)` makes
//! `M` block upper triangular, so the remaining spectrum is exactly that of
//! the `k >= 1` block. The stability indicator used to locate `a_c` is the
//! leading eigenvalue of that block, i.e. the leading eigenvalue over modes
//! with support on `k > 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Poisson(mean) probabilities for `k = 0..=k_max`, computed in log space.
pub fn poisson_pmf(mean: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    if mean == 0.0 {
        out.push(1.0);
        out.resize(k_max + 1, 0.0);
        return out;
    }
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    for k in 0..=k_max {
        if k > 0 {
            ln_p += ln_mean - (k as f64).ln();
        }
        out.push(ln_p.exp());
    }
    out
}

/// Smallest admissible truncation for a given `K`.
pub fn min_k_max(k: u32) -> usize {
    let k = k as f64;
    (k + 10.0 * k.sqrt()).ceil() as usize
}

/// Default truncation `K + 12√K + 20`.
pub fn default_k_max(k: u32) -> usize {
    let k = k as f64;
    (k + 12.0 * k.sqrt() + 20.0).ceil() as usize
}

/// Linearized evolution operator around the all-`w = 1` state.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub k: u32,
    pub a: f64,
    pub k_max: usize,
    /// Dense `(k_max + 1) × (k_max + 1)` matrix indexed by in-degree.
    pub m: DMatrix<f64>,
}

/// Builds the linearized operator for mean degree `k` and update rate `a`.
pub fn build_linearized_matrix(k: u32, a: f64, k_max: usize) -> Result<LinearOperator> {
    if k < 1 {
        return Err(Error::param("K", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::param("a", format!("must lie in [0, 1], got {a}")));
    }
    if k_max < min_k_max(k) {
        return Err(Error::param(
            "k-max",
            format!(
                "{k_max} is below K + 10·sqrt(K) = {}; the Poisson tail is not negligible",
                min_k_max(k)
            ),
        ));
    }
    let kf = k as f64;
    let p0 = poisson_pmf(kf, k_max);
    let dim = k_max + 1;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for row in 1..dim {
        for col in 1..dim {
            m[(row, col)] = a * p0[row];
        }
    }
    for row in 0..dim {
        m[(row, row)] -= (1.0 - a) * row as f64 / kf;
        if row + 1 < dim {
            m[(row, row + 1)] += (1.0 - a) * (row + 1) as f64 / kf;
        }
    }
    Ok(LinearOperator { k, a, k_max, m })
}

impl LinearOperator {
    /// The block acting on `k = 1..=k_max`.
    pub fn positive_degree_block(&self) -> DMatrix<f64> {
        let dim = self.k_max;
        self.m.view((1, 1), (dim, dim)).into_owned()
    }

    /// `y = M x`, exploiting the rank-one plus bidiagonal structure.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dim = self.k_max + 1;
        assert!(x.len() == dim && y.len() == dim);
        let kf = self.k as f64;
        let a = self.a;
        let mass: f64 = x[1..].iter().sum();
        let p0 = poisson_pmf(kf, self.k_max);
        for k in 0..dim {
            let gain = if k > 0 { a * p0[k] * mass } else { 0.0 };
            let down = if k + 1 < dim { (k + 1) as f64 / kf * x[k + 1] } else { 0.0 };
            y[k] = gain + (1.0 - a) * (down - k as f64 / kf * x[k]);
        }
    }
}

/// Iteration cap for the dense Schur decomposition; the QR sweep can stall on
/// these strongly non-normal matrices.
const SCHUR_MAX_ITER: usize = 20_000;
const POWER_MAX_ITER: usize = 5_000_000;

/// Largest real part over the spectrum of `m`, from a dense real Schur
/// decomposition. Falls back to shifted power iteration (valid for Metzler
/// matrices) when the Schur sweep does not converge.
pub fn dense_leading_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    match nalgebra::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
        Some(schur) => Ok(schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)),
        None => power_leading_eigenvalue(m, POWER_MAX_ITER),
    }
}

/// Largest real part over the full spectrum of `M`, including the `k = 0`
/// null mode.
pub fn leading_eigenvalue(op: &LinearOperator) -> Result<f64> {
    dense_leading_eigenvalue(&op.m)
}

/// Leading eigenvalue restricted to modes supported on `k > 0`.
pub fn stability_indicator(op: &LinearOperator) -> Result<f64> {
    dense_leading_eigenvalue(&op.positive_degree_block())
}

/// Shift applied before power iteration: `s = max_k(-M[k][k]) + 1`.
///
/// `M` is Metzler (nonnegative off the diagonal), so `M + sI` is a
/// nonnegative matrix with a strictly positive diagonal and its dominant
/// eigenvalue is `s` plus the rightmost eigenvalue of `M`.
pub fn power_shift(m: &DMatrix<f64>) -> f64 {
    let worst = (0..m.nrows()).map(|i| -m[(i, i)]).fold(0.0, f64::max);
    worst + 1.0
}

/// Rightmost eigenvalue of a Metzler matrix by power iteration on the
/// shifted matrix `M + sI` (see [`power_shift`]).
///
/// Iterates until successive estimates agree to `1e-15` (relative to the
/// shifted eigenvalue) over 50 consecutive steps.
pub fn power_leading_eigenvalue(m: &DMatrix<f64>, max_iter: usize) -> Result<f64> {
    let n = m.nrows();
    let shift = power_shift(m);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    let mut x = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = f64::NAN;
    let mut stable = 0;
    for _ in 0..max_iter {
        let y = &shifted * &x;
        let norm_x: f64 = x.iter().sum();
        let norm_y: f64 = y.iter().sum();
        let next = norm_y / norm_x;
        x = y / norm_y;
        if (next - estimate).abs() <= 1e-15 * next.abs().max(1.0) {
            stable += 1;
            if stable >= 50 {
                return Ok(next - shift);
            }
        } else {
            stable = 0;
        }
        estimate = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// Result of a critical-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub k: u32,
    pub a_c: f64,
    /// Truncation actually used (after the doubling check).
    pub k_max: usize,
    pub tol: f64,
}

/// Bisection for the root of the stability indicator at fixed truncation.
pub fn bisect_critical_a(k: u32, k_max: usize, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let indicator = |a: f64| -> Result<f64> {
        stability_indicator(&build_linearized_matrix(k, a, k_max)?)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut f_lo, mut f_hi) = (indicator(lo)?, indicator(hi)?);
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoSignChange { k });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = indicator(mid)?;
        if f_mid < f_lo || f_mid > f_hi {
            return Err(Error::NonMonotone { a: mid });
        }
        if f_mid > 0.0 {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical update rate `a_c(K)`, within `tol`.
///
/// Starts from [`default_k_max`] and doubles the truncation until the
/// estimate moves by less than `tol`.
pub fn find_critical_a(k: u32, tol: f64) -> Result<CriticalPoint> {
    let mut k_max = default_k_max(k);
    let mut a_c = bisect_critical_a(k, k_max, tol)?;
    for _ in 0..6 {
        let refined = bisect_critical_a(k, 2 * k_max, tol)?;
        let moved = (refined - a_c).abs();
        k_max *= 2;
        a_c = refined;
        if moved < tol {
            break;
        }
    }
    Ok(CriticalPoint { k, a_c, k_max, tol })
}

pub fn write_critical_csv<W: std::io::Write>(rows: &[CriticalPoint], mut out: W) -> std::io::Result<()> {
    use crate::io::fmt_f64;
    writeln!(out, "K,a_c,k_max,tol")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.k, fmt_f64(r.a_c), r.k_max, fmt_f64(r.tol))?;
    }
    Ok(())
}
