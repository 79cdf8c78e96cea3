//! Statistics of simulation output: temporal variance of `⟨w⟩`, Welch power
//! spectra with log-log slope fits, discrete power-law tails of the in-degree
//! distribution, and peak counting for master-equation trajectories.

use std::io::Write;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::engine::{DegreeHistogram, TimeSeries};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::stability::poisson_pmf;

/// Population variance by Welford's single-pass update.
pub fn variance_of_series(ts: &TimeSeries) -> Result<f64> {
    variance(&ts.values)
}

pub fn variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "variance needs at least 2 samples, got {}",
            values.len()
        )));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    Ok(m2 / values.len() as f64)
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Cycles per sweep, starting at zero.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub segment_length: usize,
    pub n_segments: usize,
}

impl Spectrum {
    pub fn df(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// `Σ power · Δf`; approximately the variance of the input.
    pub fn integrated_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.df()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "f,power")?;
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            writeln!(out, "{},{}", fmt_f64(*f), fmt_f64(*p))?;
        }
        Ok(())
    }
}

/// Welch estimate: Hann-windowed, mean-removed segments with 50% overlap,
/// averaged periodograms, density scaling.
pub fn psd(ts: &TimeSeries, segment_length: usize) -> Result<Spectrum> {
    psd_values(&ts.values, ts.sample_period_sweeps as f64, segment_length)
}

/// [`psd`] on raw samples taken every `period` sweeps.
pub fn psd_values(values: &[f64], period: f64, segment_length: usize) -> Result<Spectrum> {
    let l = segment_length;
    if l < 4 || !l.is_power_of_two() {
        return Err(Error::param(
            "segment-length",
            format!("must be a power of two >= 4, got {l}"),
        ));
    }
    if values.len() < 2 * l {
        return Err(Error::InsufficientData(format!(
            "series of length {} is shorter than twice the segment length {l}",
            values.len()
        )));
    }
    if !(period > 0.0) {
        return Err(Error::param("period", "sample period must be positive"));
    }
    let fs = 1.0 / period;
    let window: Vec<f64> = (0..l)
        .map(|n| {
            let s = (std::f64::consts::PI * n as f64 / l as f64).sin();
            s * s
        })
        .collect();
    let s2: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(l);
    let hop = l / 2;
    let n_segments = (values.len() - l) / hop + 1;
    let half = l / 2;
    let mut acc = vec![0.0; half + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for s in 0..n_segments {
        let seg = &values[s * hop..s * hop + l];
        let mean = seg.iter().sum::<f64>() / l as f64;
        for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
    }
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
            one_sided * a / (n_segments as f64 * fs * s2)
        })
        .collect();
    let frequencies = (0..=half).map(|k| k as f64 * fs / l as f64).collect();
    Ok(Spectrum {
        frequencies,
        power,
        segment_length: l,
        n_segments,
    })
}

/// Exponent `α` of `power ∝ f^-α`, by least squares on log-log axes over
/// bins with `f_min <= f <= f_max`.
pub fn loglog_slope(spec: &Spectrum, f_min: f64, f_max: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = spec
        .frequencies
        .iter()
        .zip(&spec.power)
        .filter(|(f, p)| **f > 0.0 && **f >= f_min && **f <= f_max && **p > 0.0)
        .map(|(f, p)| (f.ln(), p.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no spectral bins in [{f_min}, {f_max}]"
        )));
    }
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} spectral bins in [{f_min}, {f_max}], need 10",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

/// Frequency bands used for the spectral exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBands {
    pub low: (f64, f64),
    pub high: (f64, f64),
}

impl FitBands {
    /// Low band `[4/T, 0.01]`, high band `[0.05, 0.5]`, with `T` the series
    /// duration in sweeps.
    pub fn for_duration(duration_sweeps: f64) -> Self {
        FitBands {
            low: (4.0 / duration_sweeps, 0.01),
            high: (0.05, 0.5),
        }
    }
}

/// How a tail exponent was estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMethod {
    /// Exact discrete maximum likelihood, normalized by the Hurwitz zeta function.
    DiscreteMle,
    /// `1 + n / Σ ln(k / (k_min - 1/2))`.
    ContinuousApprox,
}

impl std::fmt::Display for TailMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TailMethod::DiscreteMle => "discrete_mle",
            TailMethod::ContinuousApprox => "continuous_approx",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub k_min: usize,
    /// Observations with `k >= k_min`.
    pub n_tail: u64,
    /// Largest observed degree.
    pub k_max: usize,
    pub method: TailMethod,
}

impl TailFit {
    /// Decades spanned by the fitted tail, `log10(k_max / k_min)`.
    pub fn decades(&self) -> f64 {
        (self.k_max as f64 / self.k_min as f64).log10()
    }
}

/// Hurwitz zeta `ζ(s, q) = Σ_{k >= q} k^-s` and its derivative in `s`, by
/// direct summation to `q + 64` plus an Euler–Maclaurin tail.
pub fn hurwitz_zeta_with_derivative(s: f64, q: usize) -> (f64, f64) {
    assert!(s > 1.0 && q >= 1);
    let m = (q + 64) as f64;
    let mut z = 0.0;
    let mut dz = 0.0;
    for k in q..q + 64 {
        let kf = k as f64;
        let t = kf.powf(-s);
        z += t;
        dz -= kf.ln() * t;
    }
    let lm = m.ln();
    let m_s = m.powf(-s);
    let m_1s = m * m_s;
    z += m_1s / (s - 1.0) + 0.5 * m_s + s / 12.0 * m_s / m
        - s * (s + 1.0) * (s + 2.0) / 720.0 * m_s / (m * m * m);
    dz += -lm * m_1s / (s - 1.0) - m_1s / ((s - 1.0) * (s - 1.0)) - 0.5 * lm * m_s
        + m_s / m / 12.0
        - s / 12.0 * lm * m_s / m;
    (z, dz)
}

/// Power-law exponent of the tail `k >= k_min` of an in-degree histogram.
pub fn powerlaw_tail_exponent(hist: &DegreeHistogram, k_min: usize) -> Result<TailFit> {
    powerlaw_tail_exponent_with(hist, k_min, TailMethod::DiscreteMle)
}

pub fn powerlaw_tail_exponent_with(hist: &DegreeHistogram, k_min: usize, method: TailMethod) -> Result<TailFit> {
    if k_min < 1 {
        return Err(Error::param("k-min", "must be at least 1"));
    }
    let tail: Vec<(usize, u64)> = hist
        .counts
        .iter()
        .enumerate()
        .skip(k_min)
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k, c))
        .collect();
    if tail.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} distinct degrees >= {k_min}, need 10",
            tail.len()
        )));
    }
    let n: u64 = tail.iter().map(|t| t.1).sum();
    let nf = n as f64;
    let k_max = tail.last().map(|t| t.0).unwrap_or(k_min);
    let exponent = match method {
        TailMethod::ContinuousApprox => {
            let shift = k_min as f64 - 0.5;
            let s: f64 = tail.iter().map(|&(k, c)| c as f64 * (k as f64 / shift).ln()).sum();
            1.0 + nf / s
        }
        TailMethod::DiscreteMle => {
            let mean_ln: f64 = tail.iter().map(|&(k, c)| c as f64 * (k as f64).ln()).sum::<f64>() / nf;
            // d/ds of the per-sample log-likelihood; decreasing in s.
            let score = |s: f64| {
                let (z, dz) = hurwitz_zeta_with_derivative(s, k_min);
                -mean_ln - dz / z
            };
            let (mut lo, mut hi) = (1.0 + 1e-9, 2.0);
            while score(hi) > 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > 1e3 {
                    return Err(Error::InsufficientData("tail exponent diverges".into()));
                }
            }
            if score(lo) < 0.0 {
                return Err(Error::InsufficientData("tail too heavy to normalize".into()));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if score(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    };
    Ok(TailFit {
        exponent,
        k_min,
        n_tail: n,
        k_max,
        method,
    })
}

/// Smallest `k >= 1` at which the empirical CCDF exceeds ten times the
/// Poisson(`mean_degree`) CCDF, i.e. where the tail stops being Poissonian.
pub fn select_k_min(hist: &DegreeHistogram, mean_degree: f64) -> Option<usize> {
    let emp = hist.ccdf();
    let kmax = emp.len().saturating_sub(1);
    let pmf = poisson_pmf(mean_degree, kmax + 200);
    let mut poisson_ccdf = vec![0.0; pmf.len() + 1];
    for k in (0..pmf.len()).rev() {
        poisson_ccdf[k] = poisson_ccdf[k + 1] + pmf[k];
    }
    (1..=kmax).find(|&k| emp[k] > 0.0 && emp[k] > 10.0 * poisson_ccdf[k])
}

/// Number of local maxima whose topographic prominence exceeds `min_prominence`.
///
/// Prominence is the height of a peak above the higher of the two minima that
/// separate it from the nearest higher samples on each side (or from the
/// series boundary).
pub fn count_prominent_peaks(values: &[f64], min_prominence: f64) -> usize {
    prominent_peaks(values, min_prominence).len()
}

/// Indices of local maxima with prominence above `min_prominence`.
pub fn prominent_peaks(values: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            // plateau handling: find the end of a run of equal values
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                let peak = values[i];
                let mut left_min = peak;
                let mut l = i;
                while l > 0 {
                    l -= 1;
                    if values[l] > peak {
                        break;
                    }
                    left_min = left_min.min(values[l]);
                }
                let mut right_min = peak;
                let mut r = j;
                while r + 1 < n {
                    r += 1;
                    if values[r] > peak {
                        break;
                    }
                    right_min = right_min.min(values[r]);
                }
                if peak - left_min.max(right_min) > min_prominence {
                    out.push(i);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Writes `quantity,value` rows.
pub fn write_fit_csv<W: Write>(rows: &[(&str, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "quantity,value")?;
    for (q, v) in rows {
        writeln!(out, "{q},{}", fmt_f64(*v))?;
    }
    Ok(())
}
