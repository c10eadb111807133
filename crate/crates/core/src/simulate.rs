//! Discrete-event simulation of an AoI SHS with exact integration of the
//! sawtooth between events.
//!
//! Each replication draws from its own ChaCha8 stream seeded with
//! [`replication_seed`], so results do not depend on how replications are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{ModelError, ShsModel};

/// Environment variable capping the number of replication threads.
pub const THREADS_ENV: &str = "AOI_SHS_THREADS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// SplitMix64 finalizer applied to `base ^ (index + 1) * 0x9E3779B97F4A7C15`.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn replication_rng(base: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replication_seed(base, index as u64))
}

/// Exponential variate by inverse CDF.
pub(crate) fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub t_end: f64,
    /// Discarded prefix; `None` means 1% of `t_end`.
    pub warmup: Option<f64>,
    pub orders: Vec<u32>,
    pub s_values: Vec<f64>,
    pub replications: usize,
    /// Thread cap; `None` defers to `AOI_SHS_THREADS`, then the machine.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(seed: u64, t_end: f64) -> Self {
        Self {
            seed,
            t_end,
            warmup: None,
            orders: vec![1, 2],
            s_values: Vec::new(),
            replications: 16,
            threads: None,
        }
    }

    pub fn warmup(&self) -> f64 {
        self.warmup.unwrap_or(0.01 * self.t_end)
    }

    pub(crate) fn check(&self) -> Result<(), SimError> {
        let w = self.warmup();
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(SimError::Config("t_end must be positive".into()));
        }
        if !(w >= 0.0 && w < self.t_end) {
            return Err(SimError::Config(format!(
                "warmup {w} must lie in [0, t_end = {})",
                self.t_end
            )));
        }
        if self.replications == 0 {
            return Err(SimError::Config("need at least one replication".into()));
        }
        if self.s_values.iter().any(|s| !s.is_finite()) {
            return Err(SimError::Config("MGF arguments must be finite".into()));
        }
        Ok(())
    }
}

/// Mean of per-replication values with its between-replication standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, stderr }
    }

    /// `|mean - value| <= k * stderr`.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimates {
    pub replications: usize,
    /// Fraction of time in each state.
    pub occupancy: Vec<Estimate>,
    pub orders: Vec<u32>,
    /// `moments[i][j]`: time average of `x_j^orders[i]`.
    pub moments: Vec<Vec<Estimate>>,
    pub s_values: Vec<f64>,
    /// `mgf[i][j]`: time average of `exp(s_values[i] x_j)`.
    pub mgf: Vec<Vec<Estimate>>,
    /// Occupancy fractions of each replication.
    pub replication_occupancy: Vec<Vec<f64>>,
}

/// `int_0^tau (a + u)^m du`, summed term by term so no cancellation occurs
/// for non-negative `a`.
pub fn power_segment_integral(a: f64, tau: f64, m: u32) -> f64 {
    if m == 0 {
        return tau;
    }
    // sum_i C(m, i) a^(m-i) tau^(i+1) / (i+1)
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut tau_pow = tau;
    for i in 0..=m {
        total += binom * a.powi((m - i) as i32) * tau_pow / (i + 1) as f64;
        binom = binom * (m - i) as f64 / (i + 1) as f64;
        tau_pow *= tau;
    }
    total
}

/// `int_0^tau exp(s (a + u)) du`, continuous through `s = 0`.
pub fn exp_segment_integral(a: f64, tau: f64, s: f64) -> f64 {
    if s == 0.0 {
        tau
    } else {
        (s * a).exp() * (s * tau).exp_m1() / s
    }
}

/// Time a unit-slope ramp spends in each bin. The ramp starts at `a` and
/// lasts `tau`; mass below the first edge or above the last is tracked apart.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

impl TimeHistogram {
    pub fn new(edges: Vec<f64>) -> Result<Self, SimError> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::Config(
                "histogram edges must be strictly increasing with at least two entries".into(),
            ));
        }
        let bins = edges.len() - 1;
        Ok(Self {
            edges,
            mass: vec![0.0; bins],
            underflow: 0.0,
            overflow: 0.0,
        })
    }

    /// `bins` equal-width bins on `[0, extent]`.
    pub fn uniform(extent: f64, bins: usize) -> Result<Self, SimError> {
        let edges = (0..=bins)
            .map(|i| extent * i as f64 / bins as f64)
            .collect();
        Self::new(edges)
    }

    pub fn add_ramp(&mut self, a: f64, tau: f64) {
        let lo = a;
        let hi = a + tau;
        let first = self.edges[0];
        let last = *self.edges.last().unwrap();
        if lo < first {
            self.underflow += hi.min(first) - lo;
        }
        if hi > last {
            self.overflow += hi - lo.max(last);
        }
        let lo = lo.max(first);
        let hi = hi.min(last);
        if hi <= lo {
            return;
        }
        let mut k = self.edges.partition_point(|&e| e <= lo).saturating_sub(1);
        while k < self.mass.len() && self.edges[k] < hi {
            let overlap = hi.min(self.edges[k + 1]) - lo.max(self.edges[k]);
            if overlap > 0.0 {
                self.mass[k] += overlap;
            }
            k += 1;
        }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.underflow + self.overflow
    }

    /// Divides every mass by `by`.
    pub fn scale(&mut self, by: f64) {
        for m in &mut self.mass {
            *m /= by;
        }
        self.underflow /= by;
        self.overflow /= by;
    }
}

/// Histogram averaged over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub edges: Vec<f64>,
    /// Time fraction per bin.
    pub mass: Vec<f64>,
    pub mass_stderr: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

impl EmpiricalDistribution {
    pub(crate) fn from_replications(hists: &[TimeHistogram]) -> Self {
        let edges = hists[0].edges.clone();
        let bins = edges.len() - 1;
        let mut mass = Vec::with_capacity(bins);
        let mut mass_stderr = Vec::with_capacity(bins);
        for k in 0..bins {
            let samples: Vec<f64> = hists.iter().map(|h| h.mass[k]).collect();
            let e = Estimate::from_samples(&samples);
            mass.push(e.mean);
            mass_stderr.push(e.stderr);
        }
        let n = hists.len() as f64;
        Self {
            edges,
            mass,
            mass_stderr,
            underflow: hists.iter().map(|h| h.underflow).sum::<f64>() / n,
            overflow: hists.iter().map(|h| h.overflow).sum::<f64>() / n,
        }
    }

    /// Mass divided by bin width.
    pub fn density(&self) -> Vec<f64> {
        self.mass
            .iter()
            .zip(self.edges.windows(2))
            .map(|(m, w)| m / (w[1] - w[0]))
            .collect()
    }

    /// L1 distance to a distribution given by its bin probabilities and the
    /// probability it places outside the edges.
    pub fn l1_distance(&self, bin_probs: &[f64], outside: f64) -> f64 {
        assert_eq!(bin_probs.len(), self.mass.len());
        self.mass
            .iter()
            .zip(bin_probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            + (self.underflow + self.overflow - outside).abs()
    }
}

/// Runs `f(0..n)` on up to `threads` workers, returning results in index order.
pub(crate) fn run_replications<T, F>(n: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let cap = threads.or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
        });
        if cap != Some(1) && n > 1 {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(c) = cap {
                builder = builder.num_threads(c.max(1));
            }
            if let Ok(pool) = builder.build() {
                return pool.install(|| (0..n).into_par_iter().map(&f).collect());
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    (0..n).map(f).collect()
}

struct Dispatch {
    departure: Vec<f64>,
    /// Outgoing transition indices and cumulative rates per state.
    outgoing: Vec<Vec<(f64, usize)>>,
}

impl Dispatch {
    fn new(model: &ShsModel) -> Self {
        let departure = model.departure_rates();
        let mut outgoing = vec![Vec::new(); model.num_states];
        let mut cum = vec![0.0; model.num_states];
        for (l, t) in model.transitions.iter().enumerate() {
            cum[t.from] += t.rate;
            outgoing[t.from].push((cum[t.from], l));
        }
        Self {
            departure,
            outgoing,
        }
    }

    fn pick<R: Rng>(&self, rng: &mut R, state: usize) -> usize {
        let u: f64 = rng.random();
        let target = u * self.departure[state];
        let out = &self.outgoing[state];
        out.iter()
            .find(|(c, _)| target < *c)
            .unwrap_or(out.last().expect("state has an exit"))
            .1
    }
}

/// Walks one sample path from `q = 0, x = 0`, calling `visit(state, ages,
/// length)` for every constant-state segment clipped to `[warmup, t_end]`.
/// `ages` are the values at the start of the clipped segment.
fn walk_path<R: Rng>(
    model: &ShsModel,
    dispatch: &Dispatch,
    t_end: f64,
    warmup: f64,
    rng: &mut R,
    mut visit: impl FnMut(usize, &[f64], f64),
) {
    let n = model.age_dim;
    let mut ages = vec![0.0; n];
    let mut shifted = vec![0.0; n];
    let mut reset = vec![0.0; n];
    let mut state = 0usize;
    let mut t = 0.0;
    loop {
        let hold = exponential(rng, dispatch.departure[state]);
        let next = t + hold;
        let seg_end = next.min(t_end);
        if seg_end > warmup {
            let start = t.max(warmup);
            let offset = start - t;
            for (s, a) in shifted.iter_mut().zip(&ages) {
                *s = a + offset;
            }
            visit(state, &shifted, seg_end - start);
        }
        if next >= t_end {
            break;
        }
        for a in &mut ages {
            *a += hold;
        }
        let l = dispatch.pick(rng, state);
        let tr = &model.transitions[l];
        tr.reset.apply(&ages, &mut reset);
        std::mem::swap(&mut ages, &mut reset);
        state = tr.to;
        t = next;
    }
}

fn checked(model: &ShsModel, config: &SimConfig) -> Result<(), SimError> {
    config.check()?;
    let violations = model.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(violations).into())
    }
}

struct Replication {
    occupancy: Vec<f64>,
    moments: Vec<Vec<f64>>,
    mgf: Vec<Vec<f64>>,
}

/// Time averages of state occupancy, age powers and age exponentials.
pub fn simulate(model: &ShsModel, config: &SimConfig) -> Result<SimEstimates, SimError> {
    checked(model, config)?;
    let dispatch = Dispatch::new(model);
    let warmup = config.warmup();
    let span = config.t_end - warmup;
    let n = model.age_dim;

    let reps = run_replications(config.replications, config.threads, |r| {
        let mut rng = replication_rng(config.seed, r);
        let mut occupancy = vec![0.0; model.num_states];
        let mut moments = vec![vec![0.0; n]; config.orders.len()];
        let mut mgf = vec![vec![0.0; n]; config.s_values.len()];
        walk_path(model, &dispatch, config.t_end, warmup, &mut rng, |q, ages, len| {
            occupancy[q] += len;
            for (acc, &m) in moments.iter_mut().zip(&config.orders) {
                for (a, &x) in acc.iter_mut().zip(ages) {
                    *a += power_segment_integral(x, len, m);
                }
            }
            for (acc, &s) in mgf.iter_mut().zip(&config.s_values) {
                for (a, &x) in acc.iter_mut().zip(ages) {
                    *a += exp_segment_integral(x, len, s);
                }
            }
        });
        let norm = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= span);
        norm(&mut occupancy);
        moments.iter_mut().for_each(norm);
        mgf.iter_mut().for_each(norm);
        Replication {
            occupancy,
            moments,
            mgf,
        }
    });

    let collect = |get: &dyn Fn(&Replication) -> f64| {
        Estimate::from_samples(&reps.iter().map(get).collect::<Vec<_>>())
    };
    let occupancy = (0..model.num_states)
        .map(|q| collect(&|r| r.occupancy[q]))
        .collect();
    let moments = (0..config.orders.len())
        .map(|i| (0..n).map(|j| collect(&|r| r.moments[i][j])).collect())
        .collect();
    let mgf = (0..config.s_values.len())
        .map(|i| (0..n).map(|j| collect(&|r| r.mgf[i][j])).collect())
        .collect();
    Ok(SimEstimates {
        replications: config.replications,
        occupancy,
        orders: config.orders.clone(),
        moments,
        s_values: config.s_values.clone(),
        mgf,
        replication_occupancy: reps.into_iter().map(|r| r.occupancy).collect(),
    })
}

/// Time-weighted histogram of age component `component` (zero-based).
pub fn empirical_distribution(
    model: &ShsModel,
    component: usize,
    config: &SimConfig,
    edges: &[f64],
) -> Result<EmpiricalDistribution, SimError> {
    checked(model, config)?;
    if component >= model.age_dim {
        return Err(SimError::Config(format!(
            "component {component} out of range for age dimension {}",
            model.age_dim
        )));
    }
    let template = TimeHistogram::new(edges.to_vec())?;
    let dispatch = Dispatch::new(model);
    let warmup = config.warmup();
    let span = config.t_end - warmup;
    let hists = run_replications(config.replications, config.threads, |r| {
        let mut rng = replication_rng(config.seed, r);
        let mut hist = template.clone();
        walk_path(model, &dispatch, config.t_end, warmup, &mut rng, |_, ages, len| {
            hist.add_ramp(ages[component], len);
        });
        hist.scale(span);
        hist
    });
    Ok(EmpiricalDistribution::from_replications(&hists))
}
