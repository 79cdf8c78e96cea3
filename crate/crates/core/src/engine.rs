//! Time stepping, observable recording and parameter sweeps.
//!
//! One sweep is `N` elementary updates; every time reported by this module is
//! measured in sweeps.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::model::{Population, SimParams};

/// Generator used for every run. Seeded from a single `u64`.
pub type SimRng = Pcg64Mcg;

/// The running sum of `w` is recomputed from scratch this often.
pub const W_SUM_REFRESH_SWEEPS: u64 = 1_000_000;

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// What happened during one elementary update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub noise: bool,
    pub rewarder: bool,
    pub changed: bool,
}

/// Uniformly sampled `⟨w⟩` values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_period_sweeps: u64,
    /// Sweep index of the first sample.
    pub start_sweep: u64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn sweep_of(&self, idx: usize) -> u64 {
        self.start_sweep + idx as u64 * self.sample_period_sweeps
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sweep,mean_w")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.sweep_of(i), fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// In-degree counts accumulated over snapshots.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DegreeHistogram {
    /// `counts[k]` is the number of (agent, snapshot) pairs with in-degree `k`.
    pub counts: Vec<u64>,
    pub n_snapshots: u64,
}

impl DegreeHistogram {
    pub fn add_snapshot(&mut self, in_degree: &[u32]) {
        for &d in in_degree {
            let d = d as usize;
            if d >= self.counts.len() {
                self.counts.resize(d + 1, 0);
            }
            self.counts[d] += 1;
        }
        self.n_snapshots += 1;
    }

    pub fn from_degrees(in_degree: &[u32]) -> Self {
        let mut h = DegreeHistogram::default();
        h.add_snapshot(in_degree);
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }

    /// Complementary CDF, `ccdf[k] = P(degree >= k)`.
    pub fn ccdf(&self) -> Vec<f64> {
        let total = self.total() as f64;
        let mut acc = 0u64;
        let mut out = vec![0.0; self.counts.len()];
        for k in (0..self.counts.len()).rev() {
            acc += self.counts[k];
            out[k] = acc as f64 / total;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,count,n_snapshots")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(out, "{k},{c},{}", self.n_snapshots)?;
        }
        Ok(())
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub params: SimParams,
    pub series: TimeSeries,
    pub degrees: DegreeHistogram,
    /// Time average of the recorded `⟨w⟩` samples.
    pub mean_w: f64,
    /// Population variance of the recorded `⟨w⟩` samples over time.
    pub var_w: f64,
}

impl RunResult {
    pub fn seed(&self) -> u64 {
        self.params.seed
    }
}

/// One elementary update: noise with probability `r`, then a rewarder update
/// (probability `a`) or a donator update on a uniformly chosen agent.
#[inline]
pub fn step<R: Rng + ?Sized>(pop: &mut Population, a: f64, r: f64, rng: &mut R) -> StepOutcome {
    let noise = r > 0.0 && rng.gen::<f64>() < r;
    if noise {
        pop.apply_noise(rng);
    }
    let i = rng.gen_range(0..pop.len());
    let rewarder = rng.gen::<f64>() < a;
    let changed = if rewarder {
        pop.rewarder_update(rng, i)
    } else {
        pop.donator_update(rng, i)
    };
    StepOutcome {
        noise,
        rewarder,
        changed,
    }
}

/// A running simulation: population, parameters and generator state.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: SimParams,
    pop: Population,
    rng: SimRng,
    sweeps_done: u64,
}

impl Simulation {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let mut rng = seeded_rng(params.seed);
        let pop = Population::random(params.n, params.k, params.init, &mut rng)?;
        Ok(Simulation {
            params,
            pop,
            rng,
            sweeps_done: 0,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    pub fn step(&mut self) -> StepOutcome {
        step(&mut self.pop, self.params.a, self.params.r, &mut self.rng)
    }

    pub fn run_sweeps(&mut self, sweeps: u64) {
        let n = self.pop.len();
        let (a, r) = (self.params.a, self.params.r);
        for _ in 0..sweeps {
            for _ in 0..n {
                step(&mut self.pop, a, r, &mut self.rng);
            }
            self.sweeps_done += 1;
            if self.sweeps_done % W_SUM_REFRESH_SWEEPS == 0 {
                self.pop.refresh_w_sum();
            }
        }
    }

    /// Runs the measurement window, sampling `⟨w⟩` and the in-degree
    /// histogram every `record_every_sweeps`.
    pub fn measure(&mut self, measure_sweeps: u64) -> (TimeSeries, DegreeHistogram) {
        let every = self.params.record_every_sweeps;
        let samples = measure_sweeps / every;
        let mut series = TimeSeries {
            sample_period_sweeps: every,
            start_sweep: self.sweeps_done + every,
            values: Vec::with_capacity(samples as usize),
        };
        let mut hist = DegreeHistogram::default();
        for _ in 0..samples {
            self.run_sweeps(every);
            series.values.push(self.pop.mean_w().clamp(0.0, 1.0));
            hist.add_snapshot(self.pop.in_degree());
        }
        (series, hist)
    }
}

/// Mean and population variance.
pub(crate) fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Burn-in followed by a measurement window. Deterministic in `params`.
pub fn run(params: &SimParams) -> Result<RunResult> {
    let mut sim = Simulation::new(params.clone())?;
    sim.run_sweeps(params.burn_in_sweeps);
    let (series, degrees) = sim.measure(params.measure_sweeps);
    let (mean_w, var_w) = mean_var(&series.values);
    Ok(RunResult {
        params: params.clone(),
        series,
        degrees,
        mean_w,
        var_w,
    })
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep cell `(k_idx, a_idx, replicate)` derived from `base`.
///
/// Each index is folded in with a SplitMix64 round, so neighbouring cells
/// receive unrelated generator streams.
pub fn cell_seed(base: u64, k_idx: usize, a_idx: usize, replicate: usize) -> u64 {
    let mut h = mix64(base);
    h = mix64(h ^ k_idx as u64);
    h = mix64(h ^ ((a_idx as u64) << 20));
    mix64(h ^ ((replicate as u64) << 40))
}

/// Grid definition for [`sweep`].
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub k_values: Vec<usize>,
    pub a_values: Vec<f64>,
    pub replicates: usize,
}

/// One cell of a sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub k: usize,
    pub a: f64,
    pub seed: u64,
    pub outcome: Result<(f64, f64)>,
}

/// Runs every `(K, a, replicate)` cell as an independent simulation.
///
/// `workers` caps the parallelism (`None` uses all hardware threads). Rows are
/// returned sorted by `(K, a, seed)` regardless of execution order; a failing
/// cell yields an `Err` row without aborting the others.
pub fn sweep(base: &SimParams, grid: &SweepGrid, workers: Option<usize>) -> Result<Vec<SweepRow>> {
    if grid.k_values.is_empty() || grid.a_values.is_empty() || grid.replicates == 0 {
        return Err(Error::param("grid", "K list, a list and replicates must be nonempty"));
    }
    let mut cells = Vec::new();
    for (ki, &k) in grid.k_values.iter().enumerate() {
        for (ai, &a) in grid.a_values.iter().enumerate() {
            for rep in 0..grid.replicates {
                let seed = cell_seed(base.seed, ki, ai, rep);
                cells.push(SimParams {
                    k,
                    a,
                    seed,
                    ..base.clone()
                });
            }
        }
    }
    let work = || -> Vec<SweepRow> {
        cells
            .par_iter()
            .map(|p| SweepRow {
                k: p.k,
                a: p.a,
                seed: p.seed,
                outcome: run(p).map(|r| (r.mean_w, r.var_w)),
            })
            .collect()
    };
    let mut rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?
            .install(work),
        None => work(),
    };
    rows.sort_by(|x, y| {
        x.k.cmp(&y.k)
            .then(x.a.total_cmp(&y.a))
            .then(x.seed.cmp(&y.seed))
    });
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "K,a,seed,mean_w,var_w")?;
    for row in rows {
        let (m, v) = match &row.outcome {
            Ok((m, v)) => (fmt_f64(*m), fmt_f64(*v)),
            Err(_) => ("nan".to_string(), "nan".to_string()),
        };
        writeln!(out, "{},{},{},{m},{v}", row.k, fmt_f64(row.a), row.seed)?;
    }
    Ok(())
}
