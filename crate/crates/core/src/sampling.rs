//! Status sampling along a line of renewal links.
//!
//! Hop `i` delivers the current age of node `i` to node `i + 1` at the
//! points of a renewal process with inter-update time `Y_i`. Node 0 is the
//! source and always has age 0. In equilibrium the age at node `k` is the
//! independent sum `Z_0 + ... + Z_{k-1}` of the equilibrium renewal ages.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;
use thiserror::Error;

use crate::simulate::{
    exponential, power_segment_integral, replication_rng, run_replications,
    EmpiricalDistribution, Estimate, TimeHistogram,
};

/// Equilibrium-age tail mass left outside a node's default grid.
pub const TAIL_MASS: f64 = 1e-6;
pub const DEFAULT_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("cannot parse sampling network: {0}")]
    Parse(String),
    #[error(
        "family `{0}` is not allowed: inter-update times must be iid continuous random variables"
    )]
    NotContinuous(String),
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("a sampling network needs at least one hop")]
    EmptyNetwork,
    #[error("node {k} out of range 1..={hops}")]
    NodeOutOfRange { k: usize, hops: usize },
    #[error("grid extent {grid_extent} truncates the density; use an extent of at least {required_extent}")]
    Truncated {
        grid_extent: f64,
        required_extent: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Law of the inter-update time `Y` of one hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum RenewalSpec {
    Exponential { rate: f64 },
    Uniform { b: f64 },
    Gamma { shape: f64, scale: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<(), SamplingError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SamplingError::Parameter { name, value })
    }
}

impl RenewalSpec {
    pub fn validate(&self) -> Result<(), SamplingError> {
        match *self {
            Self::Exponential { rate } => positive("rate", rate),
            Self::Uniform { b } => positive("b", b),
            Self::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
        }
    }

    /// `E[Y^k]`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        match *self {
            Self::Exponential { rate } => (1..=k).map(f64::from).product::<f64>() / rate.powi(k as i32),
            Self::Uniform { b } => b.powi(k as i32) / (k + 1) as f64,
            Self::Gamma { shape, scale } => {
                (0..k).map(|i| shape + i as f64).product::<f64>() * scale.powi(k as i32)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    /// `P(Y > y)`.
    pub fn survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => (-rate * y).exp(),
            Self::Uniform { b } => (1.0 - y / b).max(0.0),
            Self::Gamma { shape, scale } => gamma_ur(shape, y / scale),
        }
    }

    /// Density of the equilibrium age `Z`: `P(Y > z) / E[Y]`.
    pub fn equilibrium_pdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            0.0
        } else {
            self.survival(z) / self.mean()
        }
    }

    /// `P(Z > z)`.
    pub fn equilibrium_tail(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => (-rate * z).exp(),
            Self::Uniform { b } => (1.0 - z / b).max(0.0).powi(2),
            Self::Gamma { shape, scale } => {
                // E[(Y - z)^+] / E[Y]
                let x = z / scale;
                (gamma_ur(shape + 1.0, x) - x / shape * gamma_ur(shape, x)).max(0.0)
            }
        }
    }

    /// Smallest `z` with `P(Z > z) <= tail` (the support end for uniform).
    pub fn equilibrium_quantile(&self, tail: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => -tail.ln() / rate,
            Self::Uniform { b } => b,
            Self::Gamma { .. } => {
                let mut hi = self.mean().max(f64::MIN_POSITIVE);
                while self.equilibrium_tail(hi) > tail {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.equilibrium_tail(mid) > tail {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 * hi {
                        break;
                    }
                }
                hi
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => exponential(rng, rate),
            Self::Uniform { b } => b * rng.random::<f64>(),
            Self::Gamma { shape, scale } => Gamma::new(shape, scale)
                .expect("validated gamma parameters")
                .sample(rng),
        }
    }
}

/// `(E[Z], E[Z^2])` from the moments of `Y`.
pub fn renewal_age_moments(spec: &RenewalSpec) -> (f64, f64) {
    let m1 = spec.mean();
    (spec.raw_moment(2) / (2.0 * m1), spec.raw_moment(3) / (3.0 * m1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingNetwork {
    pub hops: Vec<RenewalSpec>,
}

impl SamplingNetwork {
    pub fn new(hops: Vec<RenewalSpec>) -> Result<Self, SamplingError> {
        let net = Self { hops };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.hops.is_empty() {
            return Err(SamplingError::EmptyNetwork);
        }
        self.hops.iter().try_for_each(RenewalSpec::validate)
    }

    /// Parses `{"hops": [{"family": "uniform", "b": 6}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self, SamplingError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SamplingError::Parse(e.to_string()))?;
        if let Some(hops) = value.get("hops").and_then(|h| h.as_array()) {
            for hop in hops {
                if let Some(family) = hop.get("family").and_then(|f| f.as_str()) {
                    if matches!(family, "deterministic" | "constant" | "periodic") {
                        return Err(SamplingError::NotContinuous(family.to_string()));
                    }
                }
            }
        }
        let net: Self =
            serde_json::from_str(text).map_err(|e| SamplingError::Parse(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    fn check_node(&self, k: usize) -> Result<(), SamplingError> {
        if k == 0 || k > self.hops.len() {
            Err(SamplingError::NodeOutOfRange {
                k,
                hops: self.hops.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Grid extent holding `1 - TAIL_MASS` of the age at node `k`: the sum of
    /// per-hop quantiles at tail `TAIL_MASS / k`.
    pub fn node_extent(&self, k: usize) -> Result<f64, SamplingError> {
        self.validate()?;
        self.check_node(k)?;
        let tail = TAIL_MASS / k as f64;
        Ok(self.hops[..k]
            .iter()
            .map(|h| h.equilibrium_quantile(tail))
            .sum())
    }

    /// Default grid for node `k`.
    pub fn node_grid(&self, k: usize) -> Result<UniformGrid, SamplingError> {
        Ok(UniformGrid::spanning(
            self.node_extent(k)?,
            DEFAULT_GRID_POINTS,
        ))
    }
}

/// Abscissae `0, step, ..., (points - 1) * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub step: f64,
    pub points: usize,
}

impl UniformGrid {
    pub fn spanning(extent: f64, points: usize) -> Self {
        assert!(points >= 2 && extent > 0.0, "grid needs two points and a positive extent");
        Self {
            step: extent / (points - 1) as f64,
            points,
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.step * i as f64
    }

    pub fn extent(&self) -> f64 {
        self.at(self.points - 1)
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.at(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

impl GridDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.step)
    }

    fn weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        let v: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, p)| p * f(self.grid.at(i)))
            .collect();
        trapezoid(&v, self.grid.step)
    }

    pub fn mean(&self) -> f64 {
        self.weighted(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weighted(|x| (x - m).powi(2))
    }

    /// Integral of the piecewise-linear interpolant over `[0, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.grid.step;
        if x <= 0.0 {
            return 0.0;
        }
        let last = self.grid.points - 1;
        let cell = ((x / h).floor() as usize).min(last);
        let mut total = 0.0;
        for i in 0..cell {
            total += 0.5 * h * (self.values[i] + self.values[i + 1]);
        }
        if cell < last {
            let u = x - self.grid.at(cell);
            let (f0, f1) = (self.values[cell], self.values[cell + 1]);
            total += f0 * u + (f1 - f0) * u * u / (2.0 * h);
        }
        total
    }

    /// Probability of each bin `[edges[i], edges[i+1])` under the interpolant.
    pub fn bin_probabilities(&self, edges: &[f64]) -> Vec<f64> {
        let cdf: Vec<f64> = edges.iter().map(|&e| self.cdf(e)).collect();
        cdf.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `int |f - g|` by the trapezoid rule for a density on the same grid.
    pub fn l1_distance(&self, other: &GridDensity) -> f64 {
        assert_eq!(self.grid, other.grid);
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        trapezoid(&diff, self.grid.step)
    }
}

/// `f_Z` sampled on `grid`.
pub fn equilibrium_age_pdf(
    spec: &RenewalSpec,
    grid: &UniformGrid,
) -> Result<GridDensity, SamplingError> {
    spec.validate()?;
    Ok(GridDensity {
        grid: *grid,
        values: (0..grid.points)
            .map(|i| spec.equilibrium_pdf(grid.at(i)))
            .collect(),
    })
}

/// Trapezoid-rule convolution of two densities sampled on the same grid.
fn convolve(g: &[f64], f: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let mut acc = 0.5 * (g[0] * f[i] + g[i] * f[0]);
        for j in 1..i {
            acc += g[j] * f[i - j];
        }
        out[i] = h * acc;
    }
    out
}

/// Density of the age at node `k` (1-based) as the convolution of the first
/// `k` equilibrium-age densities.
pub fn node_age_pdf(
    network: &SamplingNetwork,
    k: usize,
    grid: &UniformGrid,
) -> Result<GridDensity, SamplingError> {
    let required = network.node_extent(k)?;
    if grid.extent() < required * (1.0 - 1e-12) {
        return Err(SamplingError::Truncated {
            grid_extent: grid.extent(),
            required_extent: required,
        });
    }
    let mut values = equilibrium_age_pdf(&network.hops[0], grid)?.values;
    for hop in &network.hops[1..k] {
        let f = equilibrium_age_pdf(hop, grid)?.values;
        values = convolve(&values, &f, grid.step);
    }
    Ok(GridDensity {
        grid: *grid,
        values,
    })
}

/// Mean and variance of the age at node `k` from the closed-form moments.
pub fn node_age_stats(network: &SamplingNetwork, k: usize) -> Result<(f64, f64), SamplingError> {
    network.validate()?;
    network.check_node(k)?;
    Ok(network.hops[..k].iter().fold((0.0, 0.0), |(m, v), hop| {
        let (z1, z2) = renewal_age_moments(hop);
        (m + z1, v + z2 - z1 * z1)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComparison {
    pub convolution: GridDensity,
    pub gaussian: GridDensity,
    pub mean: f64,
    pub variance: f64,
    /// Grid L1 distance plus the Gaussian mass outside the grid.
    pub l1: f64,
}

pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

pub fn normal_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (2.0 * variance).sqrt())
}

/// Node-`k` density next to the Gaussian with the same mean and variance.
pub fn gaussian_comparison(
    network: &SamplingNetwork,
    k: usize,
    grid: &UniformGrid,
) -> Result<GaussianComparison, SamplingError> {
    let convolution = node_age_pdf(network, k, grid)?;
    let (mean, variance) = node_age_stats(network, k)?;
    let gaussian = GridDensity {
        grid: *grid,
        values: grid
            .abscissae()
            .into_iter()
            .map(|x| normal_pdf(x, mean, variance))
            .collect(),
    };
    let outside = normal_cdf(0.0, mean, variance) + 1.0 - normal_cdf(grid.extent(), mean, variance);
    let l1 = convolution.l1_distance(&gaussian) + outside;
    Ok(GaussianComparison {
        convolution,
        gaussian,
        mean,
        variance,
        l1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSimConfig {
    pub seed: u64,
    pub t_end: f64,
    /// `None` means 1% of `t_end`.
    pub warmup: Option<f64>,
    pub replications: usize,
    /// Histogram bins per node on `[0, node_extent(k)]`.
    pub bins: usize,
    pub threads: Option<usize>,
}

impl SamplingSimConfig {
    pub fn new(seed: u64, t_end: f64) -> Self {
        Self {
            seed,
            t_end,
            warmup: None,
            replications: 16,
            bins: 60,
            threads: None,
        }
    }

    pub fn warmup(&self) -> f64 {
        self.warmup.unwrap_or(0.01 * self.t_end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimates {
    pub mean: Estimate,
    pub variance: Estimate,
    pub histogram: EmpiricalDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSimResult {
    pub replications: usize,
    /// Index `i` holds node `i + 1`.
    pub nodes: Vec<NodeEstimates>,
}

/// Reset times and post-reset ages of one node's sawtooth.
struct Path {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Path {
    /// Left limit of the age at `t`.
    fn before(&self, t: f64, cursor: &mut usize) -> f64 {
        while *cursor + 1 < self.times.len() && self.times[*cursor + 1] < t {
            *cursor += 1;
        }
        self.values[*cursor] + (t - self.times[*cursor])
    }
}

fn next_path<R: Rng>(upstream: Option<&Path>, hop: &RenewalSpec, t_end: f64, rng: &mut R) -> Path {
    let mut times = vec![0.0];
    let mut values = vec![0.0];
    let mut cursor = 0;
    let mut t = 0.0;
    loop {
        t += hop.sample(rng);
        if t >= t_end {
            break;
        }
        times.push(t);
        values.push(upstream.map_or(0.0, |p| p.before(t, &mut cursor)));
    }
    Path { times, values }
}

struct NodeReplication {
    m1: f64,
    m2: f64,
    hist: TimeHistogram,
}

fn accumulate(path: &Path, t_end: f64, warmup: f64, mut hist: TimeHistogram) -> NodeReplication {
    let span = t_end - warmup;
    let (mut s1, mut s2) = (0.0, 0.0);
    for r in 0..path.times.len() {
        let start = path.times[r];
        let end = path.times.get(r + 1).copied().unwrap_or(t_end);
        if end <= warmup {
            continue;
        }
        let from = start.max(warmup);
        let a = path.values[r] + (from - start);
        let len = end - from;
        s1 += power_segment_integral(a, len, 1);
        s2 += power_segment_integral(a, len, 2);
        hist.add_ramp(a, len);
    }
    hist.scale(span);
    let m1 = s1 / span;
    NodeReplication {
        m1,
        m2: s2 / span,
        hist,
    }
}

/// Builds each node's sawtooth from its upstream neighbour and reports
/// time-average means, variances and histograms per node.
pub fn simulate_sampling_line(
    network: &SamplingNetwork,
    config: &SamplingSimConfig,
) -> Result<SamplingSimResult, SamplingError> {
    network.validate()?;
    let warmup = config.warmup();
    if !(config.t_end.is_finite() && config.t_end > 0.0) {
        return Err(SamplingError::Config("t_end must be positive".into()));
    }
    if !(warmup >= 0.0 && warmup < config.t_end) {
        return Err(SamplingError::Config(format!(
            "warmup {warmup} must lie in [0, t_end = {})",
            config.t_end
        )));
    }
    if config.replications == 0 || config.bins == 0 {
        return Err(SamplingError::Config(
            "replications and bins must be positive".into(),
        ));
    }
    let n = network.hops.len();
    let templates = (1..=n)
        .map(|k| {
            TimeHistogram::uniform(network.node_extent(k)?, config.bins)
                .map_err(|e| SamplingError::Config(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let reps = run_replications(config.replications, config.threads, |r| {
        let mut rng = replication_rng(config.seed, r);
        let mut upstream: Option<Path> = None;
        let mut out = Vec::with_capacity(n);
        for (hop, template) in network.hops.iter().zip(&templates) {
            let path = next_path(upstream.as_ref(), hop, config.t_end, &mut rng);
            out.push(accumulate(&path, config.t_end, warmup, template.clone()));
            upstream = Some(path);
        }
        out
    });

    let nodes = (0..n)
        .map(|i| {
            let means: Vec<f64> = reps.iter().map(|r| r[i].m1).collect();
            let vars: Vec<f64> = reps.iter().map(|r| r[i].m2 - r[i].m1 * r[i].m1).collect();
            let hists: Vec<TimeHistogram> = reps.iter().map(|r| r[i].hist.clone()).collect();
            NodeEstimates {
                mean: Estimate::from_samples(&means),
                variance: Estimate::from_samples(&vars),
                histogram: EmpiricalDistribution::from_replications(&hists),
            }
        })
        .collect();
    Ok(SamplingSimResult {
        replications: config.replications,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_line(b: f64, n: usize) -> SamplingNetwork {
        SamplingNetwork::new(vec![RenewalSpec::Uniform { b }; n]).unwrap()
    }

    #[test]
    fn uniform_age_moments() {
        let (m1, m2) = renewal_age_moments(&RenewalSpec::Uniform { b: 6.0 });
        assert!((m1 - 2.0).abs() < 1e-15 && (m2 - 6.0).abs() < 1e-14);
        let (m1, m2) = renewal_age_moments(&RenewalSpec::Exponential { rate: 2.0 });
        assert!((m1 - 0.5).abs() < 1e-15 && (m2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_stats() {
        let net = uniform_line(6.0, 5);
        for k in 1..=5 {
            let (m, v) = node_age_stats(&net, k).unwrap();
            assert!((m - 2.0 * k as f64).abs() < 1e-12);
            assert!((v - 2.0 * k as f64).abs() < 1e-12);
        }
        assert!(node_age_stats(&net, 0).is_err());
        assert!(node_age_stats(&net, 6).is_err());
    }

    #[test]
    fn gamma_two_equilibrium_density() {
        let theta = 1.5;
        let spec = RenewalSpec::Gamma {
            shape: 2.0,
            scale: theta,
        };
        for z in [0.0, 0.3, 1.0, 4.0, 10.0] {
            let expected = (1.0 + z / theta) * (-z / theta).exp() / (2.0 * theta);
            assert!((spec.equilibrium_pdf(z) - expected).abs() < 1e-12);
        }
        let q = spec.equilibrium_quantile(1e-6);
        assert!((spec.equilibrium_tail(q) - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn exponential_equilibrium_is_memoryless() {
        let spec = RenewalSpec::Exponential { rate: 1.7 };
        for z in [0.0f64, 0.5, 3.0] {
            let f_y = 1.7 * (-1.7 * z).exp();
            assert!((spec.equilibrium_pdf(z) - f_y).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let net = SamplingNetwork::from_json(r#"{"hops":[{"family":"uniform","b":6},{"family":"gamma","shape":2,"scale":0.5}]}"#).unwrap();
        assert_eq!(net.hops[0], RenewalSpec::Uniform { b: 6.0 });
        assert_eq!(SamplingNetwork::from_json(&net.to_json()).unwrap(), net);
        let err = SamplingNetwork::from_json(r#"{"hops":[{"family":"deterministic","d":1}]}"#).unwrap_err();
        assert!(err.to_string().contains("continuous"));
        assert!(matches!(
            SamplingNetwork::from_json(r#"{"hops":[{"family":"uniform","b":6,"c":1}]}"#),
            Err(SamplingError::Parse(_))
        ));
        assert!(matches!(
            SamplingNetwork::from_json(r#"{"hops":[],"x":1}"#),
            Err(SamplingError::Parse(_))
        ));
        assert_eq!(SamplingNetwork::from_json(r#"{"hops":[]}"#), Err(SamplingError::EmptyNetwork));
        assert!(matches!(
            SamplingNetwork::from_json(r#"{"hops":[{"family":"uniform","b":-1}]}"#),
            Err(SamplingError::Parameter { .. })
        ));
    }

    #[test]
    fn truncation_is_reported() {
        let net = uniform_line(1.0, 2);
        let short = UniformGrid::spanning(1.5, 100);
        match node_age_pdf(&net, 2, &short) {
            Err(SamplingError::Truncated { required_extent, .. }) => {
                assert!((required_extent - 2.0).abs() < 1e-12)
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn cdf_of_interpolant() {
        let d = GridDensity {
            grid: UniformGrid::spanning(1.0, 3),
            values: vec![2.0, 1.0, 0.0],
        };
        assert!((d.cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((d.cdf(0.25) - (0.5 - 0.0625)).abs() < 1e-15);
        assert_eq!(d.cdf(-1.0), 0.0);
        assert!((d.bin_probabilities(&[0.0, 0.5, 2.0]).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn erlang_by_convolution() {
        let net = SamplingNetwork::new(vec![RenewalSpec::Exponential { rate: 1.0 }; 3]).unwrap();
        let grid = net.node_grid(3).unwrap();
        let d = node_age_pdf(&net, 3, &grid).unwrap();
        let sup = grid
            .abscissae()
            .iter()
            .zip(&d.values)
            .map(|(x, v): (&f64, &f64)| (v - x * x * (-x).exp() / 2.0).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-3, "sup error {sup}");
    }

    #[test]
    fn sampling_sim_is_deterministic() {
        let net = uniform_line(2.0, 2);
        let mut cfg = SamplingSimConfig::new(11, 500.0);
        cfg.replications = 3;
        let a = simulate_sampling_line(&net, &cfg).unwrap();
        cfg.threads = Some(1);
        assert_eq!(a, simulate_sampling_line(&net, &cfg).unwrap());
        cfg.t_end = -1.0;
        assert!(simulate_sampling_line(&net, &cfg).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = RenewalSpec> {
        prop_oneof![
            (0.3f64..3.0).prop_map(|rate| RenewalSpec::Exponential { rate }),
            (0.5f64..6.0).prop_map(|b| RenewalSpec::Uniform { b }),
            (0.7f64..4.0, 0.2f64..2.0).prop_map(|(shape, scale)| RenewalSpec::Gamma { shape, scale }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn densities_integrate_to_one(hops in prop::collection::vec(arb_spec(), 1..4)) {
            let net = SamplingNetwork::new(hops).unwrap();
            for k in 1..=net.hops.len() {
                let grid = net.node_grid(k).unwrap();
                let d = node_age_pdf(&net, k, &grid).unwrap();
                prop_assert!((d.integral() - 1.0).abs() <= 1e-4, "k={} integral {}", k, d.integral());
                prop_assert!(d.values.iter().all(|v| *v >= 0.0));
                let (m, v) = node_age_stats(&net, k).unwrap();
                prop_assert!((d.mean() - m).abs() <= 1e-3 * m);
                prop_assert!((d.variance() - v).abs() <= 1e-3 * v);
            }
        }

        #[test]
        fn stats_are_additive(hops in prop::collection::vec(arb_spec(), 2..6)) {
            let net = SamplingNetwork::new(hops).unwrap();
            for k in 1..net.hops.len() {
                let (a, _) = node_age_stats(&net, k).unwrap();
                let (b, _) = node_age_stats(&net, k + 1).unwrap();
                let (z, _) = renewal_age_moments(&net.hops[k]);
                prop_assert!((b - a - z).abs() <= 1e-12 * b);
            }
        }
    }
}
