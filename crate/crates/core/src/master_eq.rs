//! Master equation for the joint density `P(k, w)` of in-degree and value
//! for money in the infinite-population limit, with `w` restricted to `N_w`
//! equally spaced values `j / (N_w - 1)`.
//!
//! `∂P/∂t = a·γ + (1 - a)·ξ`, time measured in sweeps.
//!
//! * `γ` is imitation. An agent at `(k, w')` samples an agent at `(k'', w)`
//!   and adopts `w` when `k''(1 - w) >= k(1 - w')`. The agent keeps its `k`.
//! * `ξ` is rewiring. A donator leaves a rewarder with value `w` for a random
//!   candidate with value `>= w`; the candidate is chosen uniformly, the
//!   abandoned rewarder proportionally to its in-degree.
//!
//! The in-degree axis is truncated at `k_max`: moves that would push a
//! rewarder above `k_max` are suppressed, and agents sitting at `k_max` are
//! not counted as candidates. With that convention mass, the in-degree sum and
//! every single-column truncated Poisson state are preserved exactly.

use std::io::Write;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::stability::poisson_pmf;

/// Discretized `P(k, w)`, row-major in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionGrid {
    k_max: usize,
    n_w: usize,
    p: Vec<f64>,
}

impl DistributionGrid {
    pub fn zeros(k_max: usize, n_w: usize) -> Result<Self> {
        if n_w < 2 {
            return Err(Error::param("n-w", "need at least two w values"));
        }
        if k_max < 1 {
            return Err(Error::param("k-max", "must be at least 1"));
        }
        Ok(DistributionGrid {
            k_max,
            n_w,
            p: vec![0.0; (k_max + 1) * n_w],
        })
    }

    /// Builds a grid from row-major values; entries must be finite and nonnegative.
    pub fn from_values(k_max: usize, n_w: usize, p: Vec<f64>) -> Result<Self> {
        let mut g = Self::zeros(k_max, n_w)?;
        if p.len() != g.p.len() {
            return Err(Error::param("grid", format!("expected {} values", g.p.len())));
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::param("grid", "entries must be finite and nonnegative"));
        }
        g.p = p;
        Ok(g)
    }

    /// Truncated Poisson(K) in-degree profile spread over the given
    /// `(column, weight)` pairs. Weights are normalized to one.
    pub fn poisson_columns(k: u32, k_max: usize, n_w: usize, columns: &[(usize, f64)]) -> Result<Self> {
        let mut g = Self::zeros(k_max, n_w)?;
        let mut pk = poisson_pmf(k as f64, k_max);
        let z: f64 = pk.iter().sum();
        pk.iter_mut().for_each(|x| *x /= z);
        let total: f64 = columns.iter().map(|c| c.1).sum();
        if columns.is_empty() || !(total > 0.0) {
            return Err(Error::param("grid", "need at least one column with positive weight"));
        }
        for &(col, weight) in columns {
            if col >= n_w || weight < 0.0 {
                return Err(Error::param("grid", format!("bad column {col} / weight {weight}")));
            }
            for (kk, &x) in pk.iter().enumerate() {
                *g.at_mut(kk, col) += x * weight / total;
            }
        }
        Ok(g)
    }

    /// Every `w` equally likely, Poisson(K) in-degree in each column.
    pub fn uniform_poisson(k: u32, k_max: usize, n_w: usize) -> Result<Self> {
        let cols: Vec<(usize, f64)> = (0..n_w).map(|j| (j, 1.0)).collect();
        Self::poisson_columns(k, k_max, n_w, &cols)
    }

    /// All mass at `w = 1` except `eps` in column `col`, both Poisson in `k`.
    pub fn perturbed_top(k: u32, k_max: usize, n_w: usize, col: usize, eps: f64) -> Result<Self> {
        Self::poisson_columns(k, k_max, n_w, &[(n_w - 1, 1.0 - eps), (col, eps)])
    }

    #[inline]
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    #[inline]
    pub fn n_w(&self) -> usize {
        self.n_w
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn w_value(&self, j: usize) -> f64 {
        j as f64 / (self.n_w - 1) as f64
    }

    pub fn w_values(&self) -> Vec<f64> {
        (0..self.n_w).map(|j| self.w_value(j)).collect()
    }

    #[inline]
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.p[k * self.n_w + j]
    }

    #[inline]
    pub fn at_mut(&mut self, k: usize, j: usize) -> &mut f64 {
        &mut self.p[k * self.n_w + j]
    }

    pub fn total_mass(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `Σ k · P(k, w)`.
    pub fn mean_degree(&self) -> f64 {
        self.p
            .chunks(self.n_w)
            .enumerate()
            .map(|(k, row)| k as f64 * row.iter().sum::<f64>())
            .sum()
    }

    /// Mass of column `j`.
    pub fn column_mass(&self, j: usize) -> f64 {
        (0..=self.k_max).map(|k| self.at(k, j)).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,w,P")?;
        for k in 0..=self.k_max {
            for j in 0..self.n_w {
                writeln!(out, "{k},{},{}", fmt_f64(self.w_value(j)), fmt_f64(self.at(k, j)))?;
            }
        }
        Ok(())
    }
}

/// `Σ_{k,w} w · P(k, w)`.
pub fn mean_w(grid: &DistributionGrid) -> f64 {
    let w = grid.w_values();
    grid.p
        .chunks(grid.n_w)
        .map(|row| row.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>())
        .sum()
}

/// Right-hand side of the master equation for fixed `K`, `k_max` and `N_w`.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    k: u32,
    k_max: usize,
    n_w: usize,
    /// Imitation threshold: an agent at `(k, j_from)` adopts column `j_to`
    /// from partners with in-degree at least `threshold[(k*n_w + j_from)*n_w + j_to]`.
    /// `u32::MAX` marks an impossible move.
    threshold: Vec<u32>,
}

impl MasterEquation {
    pub fn new(k: u32, k_max: usize, n_w: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if n_w < 2 {
            return Err(Error::param("n-w", "need at least two w values"));
        }
        if k_max < k as usize {
            return Err(Error::param("k-max", "must be at least K"));
        }
        // With w = j/n, the payoff condition k''(1 - w_to) >= k(1 - w_from) is
        // k''(n - j_to) >= k(n - j_from) in integers.
        let n = (n_w - 1) as u64;
        let mut threshold = vec![u32::MAX; (k_max + 1) * n_w * n_w];
        for kk in 0..=k_max as u64 {
            for from in 0..n_w as u64 {
                let need = kk * (n - from);
                for to in 0..n_w as u64 {
                    let idx = ((kk as usize * n_w) + from as usize) * n_w + to as usize;
                    let room = n - to;
                    let m = if room == 0 {
                        if need == 0 {
                            Some(0)
                        } else {
                            None
                        }
                    } else {
                        Some(need.div_ceil(room))
                    };
                    if let Some(m) = m {
                        if m <= k_max as u64 {
                            threshold[idx] = m as u32;
                        }
                    }
                }
            }
        }
        Ok(MasterEquation {
            k,
            k_max,
            n_w,
            threshold,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    fn check(&self, grid: &DistributionGrid) {
        assert!(
            grid.k_max == self.k_max && grid.n_w == self.n_w,
            "grid shape does not match the equation"
        );
    }

    /// Imitation term `γ(k, w)`.
    pub fn gamma(&self, grid: &DistributionGrid) -> Vec<f64> {
        self.check(grid);
        let mut out = vec![0.0; grid.p.len()];
        self.gamma_into(&grid.p, &mut out, 1.0);
        out
    }

    /// Rewiring term `ξ(k, w)`.
    pub fn xi(&self, grid: &DistributionGrid) -> Vec<f64> {
        self.check(grid);
        let mut out = vec![0.0; grid.p.len()];
        self.xi_into(&grid.p, &mut out, 1.0);
        out
    }

    /// `out += scale · γ(p)`.
    fn gamma_into(&self, p: &[f64], out: &mut [f64], scale: f64) {
        let n_w = self.n_w;
        let rows = self.k_max + 1;
        // tail[m * n_w + j] = Σ_{k'' >= m} P(k'', j), with an all-zero row m = rows.
        let mut tail = vec![0.0; (rows + 1) * n_w];
        for m in (0..rows).rev() {
            for j in 0..n_w {
                tail[m * n_w + j] = tail[(m + 1) * n_w + j] + p[m * n_w + j];
            }
        }
        let t = |m: u32, j: usize| -> f64 {
            if m == u32::MAX {
                0.0
            } else {
                tail[m as usize * n_w + j]
            }
        };
        for k in 0..rows {
            let row = &p[k * n_w..(k + 1) * n_w];
            for from in 0..n_w {
                let mass = row[from];
                if mass == 0.0 {
                    continue;
                }
                let th = &self.threshold[(k * n_w + from) * n_w..(k * n_w + from + 1) * n_w];
                for to in 0..n_w {
                    if to == from {
                        continue;
                    }
                    let flux = mass * t(th[to], to);
                    if flux != 0.0 {
                        out[k * n_w + to] += scale * flux;
                        out[k * n_w + from] -= scale * flux;
                    }
                }
            }
        }
    }

    /// `out += scale · ξ(p)`, the four rewiring terms written out in full.
    fn xi_into(&self, p: &[f64], out: &mut [f64], scale: f64) {
        let n_w = self.n_w;
        let km = self.k_max;
        let kf = self.k as f64;
        // Candidates: mass with value >= w, excluding the saturated row k_max.
        let mut cand = vec![0.0; n_w];
        let mut acc = 0.0;
        for j in (0..n_w).rev() {
            let col: f64 = (0..km).map(|k| p[k * n_w + j]).sum();
            acc += col;
            cand[j] = acc;
        }
        // Abandoned edges: degree-weighted mass with value <= w.
        let mut edges = vec![0.0; n_w];
        let mut acc = 0.0;
        for j in 0..n_w {
            let col: f64 = (1..=km).map(|k| k as f64 * p[k * n_w + j]).sum();
            acc += col / kf;
            edges[j] = acc;
        }
        for j in 0..n_w {
            let (pt, ps) = (cand[j], edges[j]);
            for k in 0..=km {
                let here = p[k * n_w + j];
                let up = if k < km { p[(k + 1) * n_w + j] } else { 0.0 };
                let down = if k > 0 { p[(k - 1) * n_w + j] } else { 0.0 };
                let kk = k as f64;
                let t1 = (kk + 1.0) / kf * up * (pt - here);
                let t2 = -kk / kf * here * (pt - down);
                let t3 = down * (ps - kk / kf * here);
                let t4 = if k < km {
                    -here * (ps - (kk + 1.0) / kf * up)
                } else {
                    0.0
                };
                out[k * n_w + j] += scale * (t1 + t2 + t3 + t4);
            }
        }
    }

    /// Uniform redistribution over `w` at fixed `k` with rate `r`.
    fn mutation_into(&self, p: &[f64], out: &mut [f64], rate: f64) {
        let n_w = self.n_w;
        for (row_in, row_out) in p.chunks(n_w).zip(out.chunks_mut(n_w)) {
            let mean = row_in.iter().sum::<f64>() / n_w as f64;
            for (o, x) in row_out.iter_mut().zip(row_in) {
                *o += rate * (mean - x);
            }
        }
    }

    /// `∂P/∂t` written into `out`.
    pub fn rhs_into(&self, p: &[f64], a: f64, mutation: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        if a > 0.0 {
            self.gamma_into(p, out, a);
        }
        if a < 1.0 {
            self.xi_into(p, out, 1.0 - a);
        }
        if mutation > 0.0 {
            self.mutation_into(p, out, mutation);
        }
    }

    pub fn rhs(&self, grid: &DistributionGrid, a: f64) -> Vec<f64> {
        self.check(grid);
        let mut out = vec![0.0; grid.p.len()];
        self.rhs_into(&grid.p, a, 0.0, &mut out);
        out
    }
}

/// Integration controls.
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub a: f64,
    pub dt: f64,
    /// Horizon in sweeps.
    pub t_end: f64,
    pub sample_every: f64,
    /// Times at which full grid snapshots are kept.
    pub snapshot_times: Vec<f64>,
    /// Optional mutation rate; zero for the plain equation.
    pub mutation: f64,
    /// Clip negative entries and renormalize to unit mass after each step.
    pub renormalize: bool,
    /// Largest clipped mass tolerated in one step before `dt` is halved.
    pub clip_limit: f64,
    /// Number of times `dt` may be halved before giving up.
    pub max_halvings: u32,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            a: 0.5,
            dt: 0.1,
            t_end: 100.0,
            sample_every: 1.0,
            snapshot_times: Vec::new(),
            mutation: 0.0,
            renormalize: true,
            clip_limit: 1e-6,
            max_halvings: 8,
        }
    }
}

/// Sampled output of an integration.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub mean_w: Vec<f64>,
    pub snapshots: Vec<(f64, DistributionGrid)>,
    pub steps: u64,
    /// Total mass removed by clipping negative entries.
    pub clipped_total: f64,
    /// Largest mass clipped in a single step.
    pub clipped_max: f64,
    /// Largest `|Σ P - 1|` seen after a step, before any correction.
    pub max_mass_defect: f64,
    /// Largest `|Σ k P - K|` seen after a step, before any correction.
    pub max_degree_defect: f64,
    /// Number of times the step size was halved.
    pub halvings: u32,
    pub final_dt: f64,
}

fn rk4_step(eq: &MasterEquation, p: &[f64], a: f64, mutation: f64, dt: f64, bufs: &mut [Vec<f64>; 5]) -> Vec<f64> {
    let [k1, k2, k3, k4, tmp] = bufs;
    eq.rhs_into(p, a, mutation, k1);
    for i in 0..p.len() {
        tmp[i] = p[i] + 0.5 * dt * k1[i];
    }
    eq.rhs_into(tmp, a, mutation, k2);
    for i in 0..p.len() {
        tmp[i] = p[i] + 0.5 * dt * k2[i];
    }
    eq.rhs_into(tmp, a, mutation, k3);
    for i in 0..p.len() {
        tmp[i] = p[i] + dt * k3[i];
    }
    eq.rhs_into(tmp, a, mutation, k4);
    (0..p.len())
        .map(|i| p[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates with classical fourth-order Runge–Kutta.
///
/// After each step negative entries are clipped to zero and the field is
/// rescaled to unit mass (unless disabled). When a step clips more than
/// `clip_limit`, it is retried with half the step size; after `max_halvings`
/// the integration aborts.
pub fn integrate(eq: &MasterEquation, grid0: &DistributionGrid, opts: &IntegrateOptions) -> Result<(DistributionGrid, Trajectory)> {
    eq.check(grid0);
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(opts.t_end >= 0.0) {
        return Err(Error::param("T", "must be nonnegative"));
    }
    if !(opts.sample_every > 0.0) {
        return Err(Error::param("sample-every", "must be positive"));
    }
    if !(0.0..=1.0).contains(&opts.a) {
        return Err(Error::param("a", format!("must lie in [0, 1], got {}", opts.a)));
    }
    let len = grid0.p.len();
    let mut bufs: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; len]);
    let mut grid = grid0.clone();
    let mut traj = Trajectory {
        final_dt: opts.dt,
        ..Default::default()
    };
    let mut snaps: Vec<f64> = opts.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let eps = 1e-9;

    // Time is anchor + n·dt rather than a running sum, so grid times stay exact.
    let mut t = 0.0f64;
    let mut anchor = 0.0f64;
    let mut n_since = 0u64;
    let mut n_samples = 0u64;
    let mut next_sample = 0.0f64;
    let mut dt = opts.dt;
    loop {
        if t >= next_sample - eps * opts.sample_every {
            traj.times.push(t);
            traj.mean_w.push(mean_w(&grid));
            n_samples += 1;
            next_sample = n_samples as f64 * opts.sample_every;
        }
        while next_snap < snaps.len() && t >= snaps[next_snap] - eps {
            traj.snapshots.push((t, grid.clone()));
            next_snap += 1;
        }
        if t >= opts.t_end - eps * dt {
            break;
        }
        let h = dt.min(opts.t_end - t);
        let mut next = rk4_step(eq, &grid.p, opts.a, opts.mutation, h, &mut bufs);
        let clipped = next.iter().filter(|x| **x < 0.0).fold(0.0, |acc, x| acc - x);
        if clipped > opts.clip_limit {
            if traj.halvings >= opts.max_halvings {
                return Err(Error::StepTooLarge {
                    clipped,
                    limit: opts.clip_limit,
                    t,
                });
            }
            dt *= 0.5;
            anchor = t;
            n_since = 0;
            traj.halvings += 1;
            continue;
        }
        let mass: f64 = next.iter().sum();
        traj.max_mass_defect = traj.max_mass_defect.max((mass - 1.0).abs());
        let degree: f64 = next
            .chunks(grid.n_w)
            .enumerate()
            .map(|(k, row)| k as f64 * row.iter().sum::<f64>())
            .sum();
        traj.max_degree_defect = traj.max_degree_defect.max((degree - eq.k as f64).abs());
        if opts.renormalize {
            next.iter_mut().for_each(|x| *x = x.max(0.0));
            let mass: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= mass);
        }
        traj.clipped_total += clipped;
        traj.clipped_max = traj.clipped_max.max(clipped);
        grid.p = next;
        n_since += 1;
        t = if h < dt { opts.t_end } else { anchor + n_since as f64 * dt };
        traj.steps += 1;
    }
    traj.final_dt = dt;
    Ok((grid, traj))
}

/// Writes `t,mean_w`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,mean_w")?;
    for (t, m) in traj.times.iter().zip(&traj.mean_w) {
        writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*m))?;
    }
    Ok(())
}

/// Default `k_max = K + 12√K + 40`.
pub fn default_k_max(k: u32) -> usize {
    let k = k as f64;
    (k + 12.0 * k.sqrt() + 40.0).ceil() as usize
}

pub const DEFAULT_N_W: usize = 64;
pub const DEFAULT_DT: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64Mcg;

    fn random_grid(rng: &mut Pcg64Mcg, k_max: usize, n_w: usize) -> DistributionGrid {
        let mut v: Vec<f64> = (0..(k_max + 1) * n_w).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        DistributionGrid::from_values(k_max, n_w, v).unwrap()
    }

    #[test]
    fn gamma_zero_for_single_column() {
        let eq = MasterEquation::new(2, 30, 8).unwrap();
        let g = DistributionGrid::poisson_columns(2, 30, 8, &[(3, 1.0)]).unwrap();
        assert!(eq.gamma(&g).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gamma_two_column_hand_computation() {
        // w in {0, 1}, all mass at k = 1, half in each column.
        // Agent (1, w=1) has payoff 0 and adopts w=0 from partners with
        // k''·1 >= 1, i.e. k'' >= 1: rate P(1,0) = 1/2, flux 1/2·1/2 = 1/4.
        // Agent (1, w=0) has payoff 1 and adopts w=1 only if k''·0 >= 1: never.
        let eq = MasterEquation::new(1, 2, 2).unwrap();
        let g = DistributionGrid::from_values(2, 2, vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0]).unwrap();
        let gamma = eq.gamma(&g);
        assert_eq!(gamma, vec![0.0, 0.0, 0.25, -0.25, 0.0, 0.0]);
    }

    #[test]
    fn gamma_conserves_mass_per_degree() {
        let mut rng = Pcg64Mcg::seed_from_u64(5);
        let eq = MasterEquation::new(3, 25, 9).unwrap();
        for _ in 0..100 {
            let g = random_grid(&mut rng, 25, 9);
            let gamma = eq.gamma(&g);
            for row in gamma.chunks(9) {
                assert!(row.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn xi_conservation_laws() {
        let mut rng = Pcg64Mcg::seed_from_u64(6);
        let eq = MasterEquation::new(3, 25, 9).unwrap();
        for _ in 0..100 {
            let g = random_grid(&mut rng, 25, 9);
            let xi = eq.xi(&g);
            for j in 0..9 {
                let s: f64 = (0..=25).map(|k| xi[k * 9 + j]).sum();
                assert!(s.abs() < 1e-12, "column {j}: {s}");
            }
            let edges: f64 = (0..=25).map(|k| k as f64 * xi[k * 9..(k + 1) * 9].iter().sum::<f64>()).sum();
            assert!(edges.abs() < 1e-10, "{edges}");
        }
    }

    #[test]
    fn xi_zero_for_single_column_poisson() {
        for k in [1u32, 3, 10] {
            let km = default_k_max(k);
            let eq = MasterEquation::new(k, km, 16).unwrap();
            for col in [0, 7, 15] {
                let g = DistributionGrid::poisson_columns(k, km, 16, &[(col, 1.0)]).unwrap();
                let rhs = eq.rhs(&g, 0.37);
                let sup = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(sup < 1e-12, "K={k} col={col}: {sup}");
            }
        }
    }

    #[test]
    fn mean_w_cases() {
        let g = DistributionGrid::poisson_columns(1, 12, 5, &[(4, 1.0)]).unwrap();
        assert!((mean_w(&g) - 1.0).abs() < 1e-15);
        let g = DistributionGrid::uniform_poisson(1, 12, 5).unwrap();
        assert!((mean_w(&g) - 0.5).abs() < 1e-15);
        let mut rng = Pcg64Mcg::seed_from_u64(9);
        let g = random_grid(&mut rng, 20, 7);
        let mut brute = 0.0;
        for k in 0..=20 {
            for j in 0..7 {
                brute += g.at(k, j) * j as f64 / 6.0;
            }
        }
        assert!((brute - mean_w(&g)).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_is_flat_over_many_steps() {
        let eq = MasterEquation::new(2, default_k_max(2), 8).unwrap();
        let g = DistributionGrid::poisson_columns(2, default_k_max(2), 8, &[(5, 1.0)]).unwrap();
        let m0 = mean_w(&g);
        let opts = IntegrateOptions {
            a: 0.6,
            t_end: 100.0,
            sample_every: 10.0,
            ..Default::default()
        };
        let (_, traj) = integrate(&eq, &g, &opts).unwrap();
        assert_eq!(traj.steps, 1000);
        assert!(traj.mean_w.iter().all(|m| (m - m0).abs() < 1e-10));
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn snapshots_and_csv() {
        let eq = MasterEquation::new(1, 12, 4).unwrap();
        let g = DistributionGrid::uniform_poisson(1, 12, 4).unwrap();
        let opts = IntegrateOptions {
            a: 0.5,
            t_end: 2.0,
            snapshot_times: vec![0.0, 1.0],
            ..Default::default()
        };
        let (_, traj) = integrate(&eq, &g, &opts).unwrap();
        assert_eq!(traj.snapshots.len(), 2);
        let mut buf = Vec::new();
        traj.snapshots[1].1.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("k,w,P\n"));
        assert_eq!(s.lines().count(), 1 + 13 * 4);
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,mean_w\n"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let eq = MasterEquation::new(1, 12, 4).unwrap();
        let g = DistributionGrid::uniform_poisson(1, 12, 4).unwrap();
        let opts = IntegrateOptions {
            dt: 0.0,
            ..Default::default()
        };
        assert!(integrate(&eq, &g, &opts).is_err());
        assert!(DistributionGrid::from_values(2, 2, vec![-1.0; 6]).is_err());
        assert!(MasterEquation::new(0, 12, 4).is_err());
    }
}
