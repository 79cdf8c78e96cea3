use cartel::analysis::{self, loglog_slope, psd_values, TailMethod};
use cartel::engine::seeded_rng;
use cartel::DegreeHistogram;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Real series of length `n` whose spectrum is `amp(f)²`, built from random
/// phases and an inverse FFT.
fn spectral_synthesis(n: usize, seed: u64, amp: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let mut spec = vec![Complex::new(0.0, 0.0); n];
    for m in 1..n / 2 {
        let f = m as f64 / n as f64;
        let phase = rng.gen::<f64>() * std::f64::consts::TAU;
        let z = Complex::from_polar(amp(f), phase);
        spec[m] = z;
        spec[n - m] = z.conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|z| z.re / n as f64).collect()
}

fn white(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn white_noise_is_flat() {
    let x = white(1 << 16, 1);
    let s = psd_values(&x, 1.0, 4096).unwrap();
    let alpha = loglog_slope(&s, 0.001, 0.5).unwrap();
    assert!(alpha.abs() < 0.1, "{alpha}");
}

#[test]
fn welch_integrates_to_variance() {
    for seed in [2, 3, 4] {
        let x = white(1 << 14, seed);
        let var = analysis::variance(&x).unwrap();
        let s = psd_values(&x, 1.0, 1024).unwrap();
        let ratio = s.integrated_power() / var;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }
}

#[test]
fn sample_period_rescales_frequency() {
    let x = white(1 << 12, 5);
    let a = psd_values(&x, 1.0, 512).unwrap();
    let b = psd_values(&x, 10.0, 512).unwrap();
    assert!((b.frequencies[3] * 10.0 - a.frequencies[3]).abs() < 1e-15);
    assert!((b.integrated_power() - a.integrated_power()).abs() < 1e-9 * a.integrated_power());
}

#[test]
fn recovers_synthetic_power_law() {
    let x = spectral_synthesis(1 << 16, 6, |f| f.powf(-0.75));
    let s = psd_values(&x, 1.0, 4096).unwrap();
    let alpha = loglog_slope(&s, 0.002, 0.2).unwrap();
    assert!((alpha - 1.5).abs() < 0.15, "{alpha}");
}

#[test]
fn low_band_recovers_low_regime() {
    // α = 3/2 below f0 and α = 1/2 above, continuous at f0.
    let f0: f64 = 0.03;
    let x = spectral_synthesis(1 << 16, 7, |f| {
        if f < f0 {
            f.powf(-0.75)
        } else {
            f0.powf(-0.5) * f.powf(-0.25)
        }
    });
    let s = psd_values(&x, 1.0, 4096).unwrap();
    let bands = analysis::FitBands::for_duration((1 << 16) as f64);
    let low = loglog_slope(&s, bands.low.0, bands.low.1).unwrap();
    let high = loglog_slope(&s, bands.high.0, bands.high.1).unwrap();
    assert!((low - 1.5).abs() < 0.2, "low {low}");
    assert!((high - 0.5).abs() < 0.15, "high {high}");
}

/// Exact inverse-CDF sampler for `P(k) ∝ k^-s`, `k >= k_min`, truncated
/// where the remaining mass is below 1e-9.
fn discrete_power_law(n: usize, s: f64, k_min: usize, seed: u64) -> DegreeHistogram {
    let k_top = k_min * 100_000;
    let weights: Vec<f64> = (k_min..k_top).map(|k| (k as f64).powf(-s)).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    let mut rng = seeded_rng(seed);
    let mut hist = DegreeHistogram {
        counts: vec![0; k_top],
        n_snapshots: 1,
    };
    for _ in 0..n {
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        hist.counts[k_min + idx] += 1;
    }
    hist
}

#[test]
fn discrete_mle_recovers_exponent_three() {
    let hist = discrete_power_law(1_000_000, 3.0, 10, 8);
    let fit = analysis::powerlaw_tail_exponent(&hist, 10).unwrap();
    assert!((fit.exponent - 3.0).abs() < 0.05, "{}", fit.exponent);
    assert_eq!(fit.method, TailMethod::DiscreteMle);
    assert_eq!(fit.n_tail, 1_000_000);
    let approx = analysis::powerlaw_tail_exponent_with(&hist, 10, TailMethod::ContinuousApprox).unwrap();
    assert!((approx.exponent - 3.0).abs() < 0.1, "{}", approx.exponent);
}

#[test]
fn geometric_tail_drifts_upward() {
    let mut rng = seeded_rng(9);
    let g = Geometric::new(0.1).unwrap();
    let mut hist = DegreeHistogram {
        counts: vec![0; 400],
        n_snapshots: 1,
    };
    for _ in 0..500_000 {
        let k = g.sample(&mut rng) as usize + 1;
        if k < 400 {
            hist.counts[k] += 1;
        }
    }
    let est: Vec<f64> = [5usize, 15, 30, 50]
        .iter()
        .map(|&km| analysis::powerlaw_tail_exponent(&hist, km).unwrap().exponent)
        .collect();
    assert!(est.windows(2).all(|w| w[1] > w[0]), "{est:?}");
}

#[test]
fn poisson_tail_is_too_thin() {
    let mut rng = seeded_rng(10);
    let p = Poisson::new(3.0).unwrap();
    let degrees: Vec<u32> = (0..100_000).map(|_| p.sample(&mut rng) as u32).collect();
    let hist = DegreeHistogram::from_degrees(&degrees);
    assert!(analysis::powerlaw_tail_exponent(&hist, 10).is_err());
    // Nothing stands out against the matching Poisson reference.
    assert_eq!(analysis::select_k_min(&hist, 3.0), None);
}

#[test]
fn k_min_marks_a_heavy_tail() {
    let mut hist = discrete_power_law(20_000, 2.5, 1, 11);
    hist.counts[0] = 30_000;
    let k_min = analysis::select_k_min(&hist, 1.0).unwrap();
    assert!((2..=8).contains(&k_min), "{k_min}");
}
