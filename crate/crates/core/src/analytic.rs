//! Stationary moments, the stationary MGF vector, and transient solutions
//! of the moment/MGF differential equations.

use std::sync::OnceLock;

use thiserror::Error;

use crate::linalg::{
    self, generator, norm_inf, stationary_distribution_with, LinalgError, RowSolver,
    Tolerances,
};
use crate::model::{build_block_system, BlockSystem, ModelError, ShsModel};

/// Entries of the first moment above this negative threshold are round-off.
pub const NEGATIVE_MOMENT_TOL: f64 = 1e-9;
/// `s` closer than this (relative) to the radius is refused.
pub const RADIUS_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no non-negative first moment: {detail}; the age process is unstable")]
    Unstable { detail: String },
    #[error("s = {s} is outside the MGF region of convergence (s0 = {radius})")]
    OutOfRegion { s: f64, radius: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Stationary `m`-th moments, per state and summed.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMoments {
    pub order: u32,
    /// `E[x^m 1{q = state}]` for each state.
    pub per_state: Vec<Vec<f64>>,
    /// `E[x^m]`, one entry per age component.
    pub aggregate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgfEvaluation {
    pub s: f64,
    pub per_state: Vec<Vec<f64>>,
    /// `E[exp(s x)]` per age component.
    pub aggregate: Vec<f64>,
    pub radius: f64,
}

/// Stationary analysis of one model. Caches the stationary distribution,
/// the block system, the first moment and the MGF radius.
#[derive(Debug)]
pub struct Analysis {
    model: ShsModel,
    pi: Vec<f64>,
    blocks: BlockSystem,
    tol: Tolerances,
    first_moment: OnceLock<Result<Vec<f64>, AnalysisError>>,
    radius: OnceLock<Result<f64, AnalysisError>>,
}

impl Analysis {
    pub fn new(model: &ShsModel) -> Result<Self, AnalysisError> {
        Self::with_tolerances(model, Tolerances::default())
    }

    pub fn with_tolerances(model: &ShsModel, tol: Tolerances) -> Result<Self, AnalysisError> {
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations).into());
        }
        let pi = stationary_distribution_with(model, tol)?;
        let blocks = build_block_system(model, &pi)?;
        Ok(Self {
            model: model.clone(),
            pi,
            blocks,
            tol,
            first_moment: OnceLock::new(),
            radius: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &ShsModel {
        &self.model
    }

    pub fn stationary_probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn blocks(&self) -> &BlockSystem {
        &self.blocks
    }

    fn moment_solver(&self) -> Result<RowSolver, AnalysisError> {
        RowSolver::new(&self.blocks.d_minus_r(), self.tol).map_err(|e| match e {
            LinalgError::Singular { pivot } => AnalysisError::Unstable {
                detail: format!("D - R is singular (pivot {pivot})"),
            },
            other => other.into(),
        })
    }

    fn unstable_from_solve(e: LinalgError) -> AnalysisError {
        match e {
            LinalgError::Residual { .. } => AnalysisError::Unstable {
                detail: "D - R is too ill-conditioned to solve".into(),
            },
            other => other.into(),
        }
    }

    /// Long first-moment vector, checked for non-negativity.
    fn first_moment(&self) -> Result<Vec<f64>, AnalysisError> {
        self.first_moment
            .get_or_init(|| {
                let solver = self.moment_solver()?;
                let mut v1 = solver
                    .solve(&self.blocks.pi_rep)
                    .map_err(Self::unstable_from_solve)?;
                if let Some((i, &v)) = v1
                    .iter()
                    .enumerate()
                    .find(|(_, &v)| !(v >= -NEGATIVE_MOMENT_TOL))
                {
                    let n = self.blocks.age_dim;
                    return Err(AnalysisError::Unstable {
                        detail: format!(
                            "first moment of component {} in state {} is {v:e}",
                            i % n + 1,
                            i / n
                        ),
                    });
                }
                for v in &mut v1 {
                    *v = v.max(0.0);
                }
                Ok(v1)
            })
            .clone()
    }

    /// Moments of orders `1..=max_order` from `v^k (D - R) = k v^{k-1}`.
    pub fn moments(&self, max_order: u32) -> Result<Vec<StationaryMoments>, AnalysisError> {
        if max_order == 0 {
            return Err(AnalysisError::Config("moment order must be at least 1".into()));
        }
        let v1 = self.first_moment()?;
        let solver = self.moment_solver()?;
        let mut out = Vec::with_capacity(max_order as usize);
        let mut prev = v1;
        for k in 1..=max_order {
            if k > 1 {
                let rhs: Vec<f64> = prev.iter().map(|v| k as f64 * v).collect();
                prev = solver.solve(&rhs).map_err(Self::unstable_from_solve)?;
            }
            out.push(StationaryMoments {
                order: k,
                per_state: self.blocks.per_state(&prev),
                aggregate: self.blocks.aggregate(&prev),
            });
        }
        Ok(out)
    }

    /// `s0 = -spectral_abscissa(R - D)`; requires a non-negative first moment.
    pub fn mgf_radius(&self) -> Result<f64, AnalysisError> {
        self.radius
            .get_or_init(|| {
                self.first_moment()?;
                let abscissa = linalg::spectral_abscissa(&self.model)?;
                if abscissa < 0.0 {
                    Ok(-abscissa)
                } else {
                    Err(AnalysisError::Unstable {
                        detail: format!("spectral abscissa of R - D is {abscissa}"),
                    })
                }
            })
            .clone()
    }

    /// Solves `v^s (D - R - sI) = v^0 R̂`.
    pub fn mgf(&self, s: f64) -> Result<MgfEvaluation, AnalysisError> {
        let radius = self.mgf_radius()?;
        if !s.is_finite() || s >= radius * (1.0 - RADIUS_MARGIN) {
            return Err(AnalysisError::OutOfRegion { s, radius });
        }
        let system = self.blocks.d_minus_r().shifted(-s);
        let rhs = self.blocks.r_hat.left_mul(&self.blocks.pi_rep);
        let v = RowSolver::new(&system, self.tol)
            .and_then(|solver| solver.solve(&rhs))
            .map_err(|e| match e {
                LinalgError::Singular { .. } | LinalgError::Residual { .. } => {
                    AnalysisError::OutOfRegion { s, radius }
                }
                other => other.into(),
            })?;
        Ok(MgfEvaluation {
            s,
            per_state: self.blocks.per_state(&v),
            aggregate: self.blocks.aggregate(&v),
            radius,
        })
    }

    /// `m`-th derivative of the aggregate MGF at zero by central
    /// differences with step `1e-4 s0`. A consistency check for
    /// [`Analysis::moments`], not a replacement.
    pub fn moments_via_mgf(&self, m: u32) -> Result<Vec<f64>, AnalysisError> {
        if m == 0 {
            return Err(AnalysisError::Config("derivative order must be at least 1".into()));
        }
        let h = 1e-4 * self.mgf_radius()?;
        let n = self.blocks.age_dim;
        let mut acc = vec![0.0; n];
        // delta^m f(0) = sum_k (-1)^k C(m,k) f((m/2 - k) h)
        let mut binom = 1.0;
        for k in 0..=m {
            let s = (0.5 * m as f64 - k as f64) * h;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let f = self.mgf(s)?.aggregate;
            for (a, v) in acc.iter_mut().zip(&f) {
                *a += sign * binom * v;
            }
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        let scale = h.powi(m as i32);
        Ok(acc.into_iter().map(|v| v / scale).collect())
    }
}

pub fn stationary_moments(
    model: &ShsModel,
    max_order: u32,
) -> Result<Vec<StationaryMoments>, AnalysisError> {
    Analysis::new(model)?.moments(max_order)
}

pub fn mgf_radius(model: &ShsModel) -> Result<f64, AnalysisError> {
    Analysis::new(model)?.mgf_radius()
}

pub fn stationary_mgf(model: &ShsModel, s: f64) -> Result<MgfEvaluation, AnalysisError> {
    Analysis::new(model)?.mgf(s)
}

pub fn moments_via_mgf(model: &ShsModel, m: u32) -> Result<Vec<f64>, AnalysisError> {
    Analysis::new(model)?.moments_via_mgf(m)
}

/// Deterministic initial ages and an initial distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientInit {
    pub ages: Vec<f64>,
    pub state_probs: Vec<f64>,
}

impl TransientInit {
    /// Zero ages in state 0.
    pub fn zero(model: &ShsModel) -> Self {
        let mut state_probs = vec![0.0; model.num_states];
        state_probs[0] = 1.0;
        Self {
            ages: vec![0.0; model.age_dim],
            state_probs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientSpec {
    pub t_end: f64,
    /// Moment orders to report; all lower orders are integrated too.
    pub orders: Vec<u32>,
    pub s_values: Vec<f64>,
    /// Number of recorded times including 0 and `t_end`.
    pub output_points: usize,
}

impl TransientSpec {
    pub fn new(t_end: f64, orders: Vec<u32>, s_values: Vec<f64>) -> Self {
        Self {
            t_end,
            orders,
            s_values,
            output_points: 201,
        }
    }
}

/// Trajectories of `v^0(t)`, `v^m(t)` and `v^s(t)` on a time grid. Long
/// vectors are laid out state-major, `age_dim` entries per state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientTrajectory {
    pub num_states: usize,
    pub age_dim: usize,
    pub times: Vec<f64>,
    /// `P(q(t) = state)` per recorded time.
    pub state_probs: Vec<Vec<f64>>,
    pub orders: Vec<u32>,
    /// `moments[i][k]` is the long vector of order `orders[i]` at `times[k]`.
    pub moments: Vec<Vec<Vec<f64>>>,
    pub s_values: Vec<f64>,
    pub mgf: Vec<Vec<Vec<f64>>>,
    /// Integration step actually used.
    pub step: f64,
}

impl TransientTrajectory {
    fn sum_states(&self, long: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.age_dim];
        for chunk in long.chunks(self.age_dim) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// `E[x^m(t)]` for `orders[order_idx]` at `times[time_idx]`.
    pub fn moment_aggregate(&self, order_idx: usize, time_idx: usize) -> Vec<f64> {
        self.sum_states(&self.moments[order_idx][time_idx])
    }

    pub fn mgf_aggregate(&self, s_idx: usize, time_idx: usize) -> Vec<f64> {
        self.sum_states(&self.mgf[s_idx][time_idx])
    }
}

/// Integrates the coupled linear ODEs for state probabilities, moments and
/// MGF terms with classical fourth-order Runge-Kutta on a fixed step
/// `h <= min(0.01 / d_max, t_end / 1000)`.
pub fn transient(
    model: &ShsModel,
    init: &TransientInit,
    spec: &TransientSpec,
) -> Result<TransientTrajectory, AnalysisError> {
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations).into());
    }
    let q = model.num_states;
    let n = model.age_dim;
    if init.ages.len() != n {
        return Err(AnalysisError::Config(format!(
            "initial ages have length {}, expected {n}",
            init.ages.len()
        )));
    }
    if init.state_probs.len() != q
        || init.state_probs.iter().any(|&p| !(p >= 0.0))
        || (init.state_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(AnalysisError::Config(
            "initial state distribution must be non-negative, of length num_states, and sum to 1"
                .into(),
        ));
    }
    if !(spec.t_end > 0.0 && spec.t_end.is_finite()) {
        return Err(AnalysisError::Config("t_end must be positive".into()));
    }
    if spec.orders.contains(&0) {
        return Err(AnalysisError::Config("moment orders start at 1".into()));
    }
    if spec.output_points < 2 {
        return Err(AnalysisError::Config("need at least two output points".into()));
    }

    let blocks = build_block_system(model, &vec![1.0 / q as f64; q])?;
    let gen = generator(model);
    let r_minus_d = blocks.r.sub(&blocks.d);
    let d_max = blocks.departure.iter().copied().fold(0.0, f64::max);
    let h_max = (0.01 / d_max).min(spec.t_end / 1000.0);
    if !(h_max >= 1e-12) {
        return Err(AnalysisError::Config(format!(
            "integration step {h_max:e} underflows"
        )));
    }
    let intervals = spec.output_points - 1;
    let per_interval = ((spec.t_end / h_max) / intervals as f64).ceil().max(1.0) as usize;
    let steps = per_interval * intervals;
    let h = spec.t_end / steps as f64;

    let max_order = spec.orders.iter().copied().max().unwrap_or(0) as usize;
    let big = q * n;
    let n_s = spec.s_values.len();
    let len = q + big * (max_order + n_s);
    let moment_off = |k: usize| q + big * (k - 1);
    let mgf_off = |i: usize| q + big * (max_order + i);

    let mut y = vec![0.0; len];
    y[..q].copy_from_slice(&init.state_probs);
    for state in 0..q {
        let p = init.state_probs[state];
        for k in 1..=max_order {
            for j in 0..n {
                y[moment_off(k) + state * n + j] = init.ages[j].powi(k as i32) * p;
            }
        }
        for (i, &s) in spec.s_values.iter().enumerate() {
            for j in 0..n {
                y[mgf_off(i) + state * n + j] = (s * init.ages[j]).exp() * p;
            }
        }
    }

    let deriv = |y: &[f64], dy: &mut [f64]| {
        let pi = &y[..q];
        dy[..q].copy_from_slice(&gen.left_mul(pi));
        let pi_rep: Vec<f64> = pi
            .iter()
            .flat_map(|&p| std::iter::repeat_n(p, n))
            .collect();
        for k in 1..=max_order {
            let off = moment_off(k);
            let v = &y[off..off + big];
            let lower: &[f64] = if k == 1 {
                &pi_rep
            } else {
                &y[moment_off(k - 1)..moment_off(k - 1) + big]
            };
            let drift = r_minus_d.left_mul(v);
            for i in 0..big {
                dy[off + i] = k as f64 * lower[i] + drift[i];
            }
        }
        let fresh = blocks.r_hat.left_mul(&pi_rep);
        for (i, &s) in spec.s_values.iter().enumerate() {
            let off = mgf_off(i);
            let v = &y[off..off + big];
            let drift = r_minus_d.left_mul(v);
            for j in 0..big {
                dy[off + j] = drift[j] + s * v[j] + fresh[j];
            }
        }
    };

    let order_idx: Vec<usize> = spec.orders.iter().map(|&k| k as usize).collect();
    let mut traj = TransientTrajectory {
        num_states: q,
        age_dim: n,
        times: Vec::with_capacity(spec.output_points),
        state_probs: Vec::with_capacity(spec.output_points),
        orders: spec.orders.clone(),
        moments: vec![Vec::with_capacity(spec.output_points); spec.orders.len()],
        s_values: spec.s_values.clone(),
        mgf: vec![Vec::with_capacity(spec.output_points); n_s],
        step: h,
    };
    let record = |t: f64, y: &[f64], traj: &mut TransientTrajectory| {
        traj.times.push(t);
        traj.state_probs.push(y[..q].to_vec());
        for (slot, &k) in order_idx.iter().enumerate() {
            traj.moments[slot].push(y[moment_off(k)..moment_off(k) + big].to_vec());
        }
        for i in 0..n_s {
            traj.mgf[i].push(y[mgf_off(i)..mgf_off(i) + big].to_vec());
        }
    };

    record(0.0, &y, &mut traj);
    let mut k1 = vec![0.0; len];
    let mut k2 = vec![0.0; len];
    let mut k3 = vec![0.0; len];
    let mut k4 = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    for step in 1..=steps {
        deriv(&y, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % per_interval == 0 {
            let t = if step == steps {
                spec.t_end
            } else {
                step as f64 * h
            };
            record(t, &y, &mut traj);
        }
    }
    Ok(traj)
}

/// Residual of the fixed-point identity `v^m (D - R) - m v^{m-1}`.
pub fn fixed_point_residual(blocks: &BlockSystem, lower: &[f64], upper: &[f64], m: u32) -> f64 {
    let lhs = blocks.d_minus_r().left_mul(upper);
    let diff: Vec<f64> = lhs
        .iter()
        .zip(lower)
        .map(|(a, b)| a - m as f64 * b)
        .collect();
    norm_inf(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mm11_abandonment, preemptive_line, AgeResetMap, Transition};
    use approx::assert_relative_eq;

    fn identity_clock(rate: f64) -> ShsModel {
        ShsModel {
            num_states: 1,
            age_dim: 1,
            transitions: vec![Transition::new(0, 0, rate, AgeResetMap::identity(1))],
        }
    }

    #[test]
    fn unit_line_first_moments() {
        let m = stationary_moments(&preemptive_line(&[1.0; 3]).unwrap(), 1).unwrap();
        for (got, want) in m[0].aggregate.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-13);
        }
    }

    #[test]
    fn exponential_third_moment() {
        let m = stationary_moments(&preemptive_line(&[2.0]).unwrap(), 3).unwrap();
        assert_eq!(m.len(), 3);
        assert_relative_eq!(m[2].aggregate[0], 0.75, max_relative = 1e-13);
    }

    #[test]
    fn mm11_average_age() {
        let m = stationary_moments(&mm11_abandonment(1.0, 1.0, 0.0).unwrap(), 1).unwrap();
        assert_relative_eq!(m[0].aggregate[1], 2.5, max_relative = 1e-13);
        let sum: Vec<f64> = (0..2)
            .map(|j| m[0].per_state.iter().map(|v| v[j]).sum())
            .collect();
        assert_eq!(sum, m[0].aggregate);
    }

    #[test]
    fn identity_clock_is_unstable() {
        let err = stationary_moments(&identity_clock(1.0), 1).unwrap_err();
        assert!(matches!(err, AnalysisError::Unstable { .. }));
        assert!(err.to_string().starts_with("no non-negative first moment"));
        assert!(matches!(
            mgf_radius(&identity_clock(1.0)),
            Err(AnalysisError::Unstable { .. })
        ));
    }

    #[test]
    fn radius_examples() {
        assert_relative_eq!(
            mgf_radius(&preemptive_line(&[1.0, 2.0, 3.0]).unwrap()).unwrap(),
            1.0,
            max_relative = 1e-9
        );
        let single = ShsModel {
            num_states: 1,
            age_dim: 2,
            transitions: vec![Transition::new(0, 0, 1.7, AgeResetMap::fresh(2))],
        };
        assert_relative_eq!(mgf_radius(&single).unwrap(), 1.7, max_relative = 1e-9);
        assert_relative_eq!(
            mgf_radius(&mm11_abandonment(1.0, 1.0, 0.0).unwrap()).unwrap(),
            1.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn mgf_examples() {
        for model in [
            preemptive_line(&[1.0, 2.0]).unwrap(),
            mm11_abandonment(2.0, 3.0, 0.5).unwrap(),
        ] {
            let at_zero = stationary_mgf(&model, 0.0).unwrap();
            for v in at_zero.aggregate {
                assert_relative_eq!(v, 1.0, max_relative = 1e-13);
            }
        }
        let line = stationary_mgf(&preemptive_line(&[1.0, 2.0]).unwrap(), 0.5).unwrap();
        assert_relative_eq!(line.aggregate[0], 2.0, max_relative = 1e-13);
        assert_relative_eq!(line.aggregate[1], 8.0 / 3.0, max_relative = 1e-13);

        let mm = stationary_mgf(&mm11_abandonment(1.0, 1.0, 0.0).unwrap(), 0.5).unwrap();
        assert_relative_eq!(mm.aggregate[1], 6.0, max_relative = 1e-12);
    }

    #[test]
    fn mgf_outside_region() {
        let model = preemptive_line(&[1.0, 2.0]).unwrap();
        match stationary_mgf(&model, 999.0) {
            Err(AnalysisError::OutOfRegion { radius, .. }) => {
                assert_relative_eq!(radius, 1.0, max_relative = 1e-9)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            stationary_mgf(&model, 1.0),
            Err(AnalysisError::OutOfRegion { .. })
        ));
        // Negative arguments are always inside.
        assert!(stationary_mgf(&model, -50.0).is_ok());
    }

    #[test]
    fn derivative_oracle() {
        let d1 = moments_via_mgf(&preemptive_line(&[1.0]).unwrap(), 1).unwrap();
        assert!((d1[0] - 1.0).abs() <= 1e-6);
        let d2 = moments_via_mgf(&preemptive_line(&[1.0, 1.0]).unwrap(), 2).unwrap();
        assert!((d2[1] - 6.0).abs() <= 1e-4);
        let mm = moments_via_mgf(&mm11_abandonment(1.0, 1.0, 0.0).unwrap(), 1).unwrap();
        assert!((mm[1] - 2.5).abs() <= 1e-6);
    }

    #[test]
    fn transient_from_fixed_point_stays_put() {
        let model = mm11_abandonment(1.0, 2.0, 0.5).unwrap();
        let a = Analysis::new(&model).unwrap();
        let pi = a.stationary_probabilities().to_vec();
        // A deterministic start cannot sit at the moment fixed point, but
        // the state probabilities can.
        let init = TransientInit {
            ages: vec![0.0; 2],
            state_probs: pi.clone(),
        };
        let traj = transient(&model, &init, &TransientSpec::new(5.0, vec![], vec![])).unwrap();
        for p in &traj.state_probs {
            for (x, y) in p.iter().zip(&pi) {
                assert!((x - y).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn two_state_occupancy_closed_form() {
        let model = mm11_abandonment(1.0, 1.0, 0.0).unwrap();
        let init = TransientInit {
            ages: vec![0.0; 2],
            state_probs: vec![1.0, 0.0],
        };
        let traj = transient(&model, &init, &TransientSpec::new(6.0, vec![1], vec![])).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.state_probs) {
            let want = 0.5 + 0.5 * (-2.0 * t).exp();
            assert!((p[0] - want).abs() <= 1e-6, "t={t}: {} vs {want}", p[0]);
        }
    }

    #[test]
    fn line_transient_reaches_stationary_mean() {
        let model = preemptive_line(&[1.0, 1.0]).unwrap();
        let traj = transient(
            &model,
            &TransientInit::zero(&model),
            &TransientSpec::new(30.0, vec![1], vec![]),
        )
        .unwrap();
        let last = traj.moment_aggregate(0, traj.times.len() - 1);
        assert!((last[0] - 1.0).abs() <= 1e-6);
        assert!((last[1] - 2.0).abs() <= 1e-6);
        assert_eq!(*traj.times.last().unwrap(), 30.0);
    }

    #[test]
    fn transient_rejects_bad_input() {
        let model = preemptive_line(&[1.0]).unwrap();
        let bad = TransientInit {
            ages: vec![0.0],
            state_probs: vec![0.5],
        };
        assert!(matches!(
            transient(&model, &bad, &TransientSpec::new(1.0, vec![1], vec![])),
            Err(AnalysisError::Config(_))
        ));
        assert!(matches!(
            transient(
                &model,
                &TransientInit::zero(&model),
                &TransientSpec::new(1e-12, vec![1], vec![])
            ),
            Err(AnalysisError::Config(_))
        ));
    }

    #[test]
    fn identity_clock_transient_grows() {
        let model = identity_clock(1.0);
        let traj = transient(
            &model,
            &TransientInit::zero(&model),
            &TransientSpec::new(1500.0, vec![1], vec![]),
        )
        .unwrap();
        let last = traj.moment_aggregate(0, traj.times.len() - 1)[0];
        assert!((last - 1500.0).abs() < 1e-6);
    }
}
