//! Agent population and the microscopic rules of the game.
//!
//! Every agent plays two roles at once. As a *donator* it holds exactly `K`
//! outgoing links to distinct rewarders and collects `Σ w_target` from them.
//! As a *rewarder* it sets its value for money `w ∈ [0, 1]` and earns
//! `(1 - w) · k`, where `k` is its in-degree.
//!
//! Donators rewire by direct comparison of `w`; rewarders imitate the `w` of
//! any agent whose rewarder payoff is at least as large as their own. Ties
//! always resolve in favour of the change.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};

/// How the value-for-money vector is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialW {
    /// Independent uniform draws on `[0, 1)`.
    #[default]
    Uniform,
    /// Every agent starts at `w = 1`.
    AllOnes,
}

impl std::str::FromStr for InitialW {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitialW::Uniform),
            "all-ones" | "ones" => Ok(InitialW::AllOnes),
            other => Err(Error::param("init", format!("unknown initial condition '{other}'"))),
        }
    }
}

impl std::fmt::Display for InitialW {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitialW::Uniform => "uniform",
            InitialW::AllOnes => "all-ones",
        })
    }
}

/// Parameters of a single simulation run. Times are in sweeps of `n`
/// elementary updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n: usize,
    pub k: usize,
    /// Probability that an elementary update is a rewarder update.
    pub a: f64,
    /// Probability per elementary update of a random mutation of `w`.
    pub r: f64,
    pub seed: u64,
    pub burn_in_sweeps: u64,
    pub measure_sweeps: u64,
    pub record_every_sweeps: u64,
    pub init: InitialW,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n: 100_000,
            k: 1,
            a: 0.1,
            r: 1e-6,
            seed: 1,
            burn_in_sweeps: 1_000,
            measure_sweeps: 10_000,
            record_every_sweeps: 1,
            init: InitialW::Uniform,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("N", format!("must be at least 2, got {}", self.n)));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::param("N", "exceeds the 32-bit agent index range"));
        }
        if self.k < 1 {
            return Err(Error::param("K", format!("must be at least 1, got {}", self.k)));
        }
        if self.k + 2 > self.n {
            return Err(Error::param(
                "K",
                format!("must satisfy K <= N - 2, got K = {} with N = {}", self.k, self.n),
            ));
        }
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::param("a", format!("must lie in [0, 1], got {}", self.a)));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::param("r", format!("must lie in [0, 1], got {}", self.r)));
        }
        if self.record_every_sweeps < 1 {
            return Err(Error::param("record-every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Full state of the agent population.
///
/// Out-links are stored flat: agent `i` owns `out_edges[i*K .. (i+1)*K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    k: usize,
    w: Vec<f64>,
    out_edges: Vec<u32>,
    in_degree: Vec<u32>,
    w_sum: f64,
}

impl Population {
    /// Random population: `w` drawn according to `init`, each agent's `K`
    /// targets drawn uniformly without replacement from the other `N - 1`.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, init: InitialW, rng: &mut R) -> Result<Self> {
        if n < 2 || n > u32::MAX as usize {
            return Err(Error::param("N", format!("must lie in [2, 2^32), got {n}")));
        }
        if k < 1 || k + 2 > n {
            return Err(Error::param(
                "K",
                format!("must satisfy 1 <= K <= N - 2, got K = {k} with N = {n}"),
            ));
        }
        let w: Vec<f64> = match init {
            InitialW::Uniform => (0..n).map(|_| rng.gen::<f64>()).collect(),
            InitialW::AllOnes => vec![1.0; n],
        };
        let mut out_edges = Vec::with_capacity(n * k);
        let mut in_degree = vec![0u32; n];
        for i in 0..n {
            let start = out_edges.len();
            while out_edges.len() < start + k {
                let l = rng.gen_range(0..n);
                if l == i || out_edges[start..].contains(&(l as u32)) {
                    continue;
                }
                out_edges.push(l as u32);
                in_degree[l] += 1;
            }
        }
        let w_sum = w.iter().sum();
        Ok(Population {
            k,
            w,
            out_edges,
            in_degree,
            w_sum,
        })
    }

    /// Builds a population from explicit values and flat out-link lists.
    pub fn from_parts(k: usize, w: Vec<f64>, out_edges: Vec<u32>) -> Result<Self> {
        let n = w.len();
        if n < 2 {
            return Err(Error::param("N", "population needs at least two agents"));
        }
        if k < 1 || k + 2 > n {
            return Err(Error::param("K", format!("must satisfy 1 <= K <= N - 2, got {k}")));
        }
        if out_edges.len() != n * k {
            return Err(Error::param("out_edges", format!("expected {} entries", n * k)));
        }
        if let Some(bad) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::param("w", format!("value {bad} outside [0, 1]")));
        }
        let mut in_degree = vec![0u32; n];
        for (i, targets) in out_edges.chunks(k).enumerate() {
            for (s, &t) in targets.iter().enumerate() {
                let t = t as usize;
                if t >= n || t == i || targets[..s].contains(&(t as u32)) {
                    return Err(Error::param(
                        "out_edges",
                        format!("agent {i} has an invalid or repeated target {t}"),
                    ));
                }
                in_degree[t] += 1;
            }
        }
        let w_sum = w.iter().sum();
        Ok(Population {
            k,
            w,
            out_edges,
            in_degree,
            w_sum,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.w.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Number of rewarders each donator must hold.
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn in_degree(&self) -> &[u32] {
        &self.in_degree
    }

    #[inline]
    pub fn targets(&self, i: usize) -> &[u32] {
        &self.out_edges[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn w_sum(&self) -> f64 {
        self.w_sum
    }

    /// Population average of `w`, from the running sum.
    #[inline]
    pub fn mean_w(&self) -> f64 {
        self.w_sum / self.w.len() as f64
    }

    /// Recomputes the running sum from scratch to discard accumulated rounding.
    pub fn refresh_w_sum(&mut self) {
        self.w_sum = self.w.iter().sum();
    }

    /// Donator payoff: total value for money received from the chosen rewarders.
    pub fn donator_payoff(&self, i: usize) -> f64 {
        self.targets(i).iter().map(|&j| self.w[j as usize]).sum()
    }

    /// Rewarder payoff `(1 - w_i) · k_i`.
    #[inline]
    pub fn rewarder_payoff(&self, i: usize) -> f64 {
        (1.0 - self.w[i]) * self.in_degree[i] as f64
    }

    /// Donator update for agent `i`: compare a random current rewarder `j`
    /// with a random non-linked agent `l` and switch to `l` if `w_l >= w_j`.
    pub fn donator_update<R: Rng + ?Sized>(&mut self, rng: &mut R, i: usize) -> bool {
        let n = self.w.len();
        let base = i * self.k;
        let slot = base + rng.gen_range(0..self.k);
        let j = self.out_edges[slot] as usize;
        // Rejection sampling over the whole population; terminates since K <= N - 2.
        let l = loop {
            let l = rng.gen_range(0..n);
            if l != i && !self.out_edges[base..base + self.k].contains(&(l as u32)) {
                break l;
            }
        };
        if self.w[l] >= self.w[j] {
            self.out_edges[slot] = l as u32;
            self.in_degree[j] -= 1;
            self.in_degree[l] += 1;
            true
        } else {
            false
        }
    }

    /// Rewarder update for agent `i`: copy the `w` of a random other agent
    /// whose rewarder payoff is at least as large.
    pub fn rewarder_update<R: Rng + ?Sized>(&mut self, rng: &mut R, i: usize) -> bool {
        let n = self.w.len();
        // Uniform over the N - 1 agents other than i.
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        if self.rewarder_payoff(j) >= self.rewarder_payoff(i) {
            let new = self.w[j];
            self.w_sum += new - self.w[i];
            self.w[i] = new;
            true
        } else {
            false
        }
    }

    /// Assigns a fresh uniform `w` to a uniformly chosen agent. Returns the agent.
    pub fn apply_noise<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.w.len());
        let new: f64 = rng.gen();
        self.w_sum += new - self.w[i];
        self.w[i] = new;
        i
    }

    /// Checks every structural invariant. Intended for tests and debugging.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.w.len();
        if self.out_edges.len() != n * self.k {
            return Err("out-edge storage has wrong length".into());
        }
        let mut counted = vec![0u32; n];
        for i in 0..n {
            let t = self.targets(i);
            for (s, &x) in t.iter().enumerate() {
                if x as usize == i {
                    return Err(format!("agent {i} targets itself"));
                }
                if t[..s].contains(&x) {
                    return Err(format!("agent {i} has duplicate target {x}"));
                }
                counted[x as usize] += 1;
            }
        }
        if counted != self.in_degree {
            return Err("in-degree counters disagree with out-edges".into());
        }
        let total: u64 = self.in_degree.iter().map(|&d| d as u64).sum();
        if total != (n * self.k) as u64 {
            return Err(format!("total in-degree {total} != N*K"));
        }
        if let Some(x) = self.w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(format!("w value {x} outside [0, 1]"));
        }
        let exact: f64 = self.w.iter().sum();
        if (exact - self.w_sum).abs() > 1e-9 * n as f64 {
            return Err(format!("running w sum {} drifted from {}", self.w_sum, exact));
        }
        Ok(())
    }

    /// Debug snapshot: `agent_id,w,in_degree`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "agent_id,w,in_degree")?;
        for (i, (w, d)) in self.w.iter().zip(&self.in_degree).enumerate() {
            writeln!(out, "{i},{w:.16e},{d}")?;
        }
        Ok(())
    }
}
