//! Age-of-information SHS models: a finite CTMC whose transitions reset
//! a vector of ages through binary assignment maps.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseMatrix;

/// What a single age component becomes when a transition fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentRepr", into = "AssignmentRepr")]
pub enum Assignment {
    /// `x'_j = x_j`
    Identity,
    /// `x'_j = 0`
    Fresh,
    /// `x'_j = x_i`, zero-based source index.
    Copy(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AssignmentRepr {
    Keyword(Keyword),
    Copy(CopyRepr),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Keyword {
    Id,
    Fresh,
}

/// On disk, copy sources are one-based.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CopyRepr {
    copy: usize,
}

impl TryFrom<AssignmentRepr> for Assignment {
    type Error = String;

    fn try_from(repr: AssignmentRepr) -> Result<Self, String> {
        match repr {
            AssignmentRepr::Keyword(Keyword::Id) => Ok(Assignment::Identity),
            AssignmentRepr::Keyword(Keyword::Fresh) => Ok(Assignment::Fresh),
            AssignmentRepr::Copy(CopyRepr { copy: 0 }) => {
                Err("copy index is 1-based; 0 is not a valid component".into())
            }
            AssignmentRepr::Copy(CopyRepr { copy }) => Ok(Assignment::Copy(copy - 1)),
        }
    }
}

impl From<Assignment> for AssignmentRepr {
    fn from(a: Assignment) -> Self {
        match a {
            Assignment::Identity => AssignmentRepr::Keyword(Keyword::Id),
            Assignment::Fresh => AssignmentRepr::Keyword(Keyword::Fresh),
            Assignment::Copy(i) => AssignmentRepr::Copy(CopyRepr { copy: i + 1 }),
        }
    }
}

/// A linear age reset `x' = x A` stored symbolically, one entry per
/// post-transition component. At most one 1 per column of `A` holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgeResetMap {
    assignments: Vec<Assignment>,
}

impl AgeResetMap {
    pub fn new(assignments: Vec<Assignment>) -> Self {
        Self { assignments }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Assignment::Identity; n])
    }

    /// Every component receives a fresh update.
    pub fn fresh(n: usize) -> Self {
        Self::new(vec![Assignment::Fresh; n])
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    /// Writes `x A` into `out`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (j, (o, a)) in out.iter_mut().zip(&self.assignments).enumerate() {
            *o = match *a {
                Assignment::Identity => x[j],
                Assignment::Fresh => 0.0,
                Assignment::Copy(i) => x[i],
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("reset map has length {found}, expected {expected}")]
    ResetLength { expected: usize, found: usize },
    #[error("rate {name} = {value} must be positive and finite")]
    Rate { name: &'static str, value: f64 },
    #[error("rate {name} = {value} must be non-negative and finite")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("line network needs at least one rate")]
    EmptyLine,
    #[error("stationary vector has length {found}, expected {expected}")]
    StationaryLength { expected: usize, found: usize },
    #[error("invalid model: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Binary assignment matrix `A` and its diagonal companion `Â`, which
/// marks the all-zero columns of `A`.
pub fn assignment_matrices(
    reset: &AgeResetMap,
    n: usize,
) -> Result<(DenseMatrix, DenseMatrix), ModelError> {
    if reset.len() != n {
        return Err(ModelError::ResetLength {
            expected: n,
            found: reset.len(),
        });
    }
    let mut a = DenseMatrix::zeros(n, n);
    let mut a_hat = DenseMatrix::zeros(n, n);
    for (j, assignment) in reset.assignments().iter().enumerate() {
        match *assignment {
            Assignment::Identity => a[(j, j)] = 1.0,
            Assignment::Fresh => a_hat[(j, j)] = 1.0,
            Assignment::Copy(i) => {
                if i >= n {
                    return Err(ModelError::ResetLength {
                        expected: n,
                        found: i + 1,
                    });
                }
                a[(i, j)] = 1.0
            }
        }
    }
    Ok((a, a_hat))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    /// Events per unit time.
    pub rate: f64,
    pub reset: AgeResetMap,
}

impl Transition {
    pub fn new(from: usize, to: usize, rate: f64, reset: AgeResetMap) -> Self {
        Self {
            from,
            to,
            rate,
            reset,
        }
    }
}

/// An AoI SHS: states `0..num_states`, ages of dimension `age_dim`, and
/// transitions indexed by their position in `transitions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShsModel {
    pub num_states: usize,
    pub age_dim: usize,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoAgeComponents,
    StateOutOfRange {
        transition: usize,
        state: usize,
    },
    NonPositiveRate {
        transition: usize,
        rate: f64,
    },
    ResetLength {
        transition: usize,
        expected: usize,
        found: usize,
    },
    CopySourceOutOfRange {
        transition: usize,
        component: usize,
        source: usize,
    },
    NoOutgoingTransition {
        state: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "model has no discrete states"),
            Violation::NoAgeComponents => write!(f, "model has no age components"),
            Violation::StateOutOfRange { transition, state } => {
                write!(f, "transition {transition} references unknown state {state}")
            }
            Violation::NonPositiveRate { transition, rate } => {
                write!(f, "non-positive rate {rate} at transition {transition}")
            }
            Violation::ResetLength {
                transition,
                expected,
                found,
            } => write!(
                f,
                "transition {transition} reset has length {found}, expected {expected}"
            ),
            Violation::CopySourceOutOfRange {
                transition,
                component,
                source,
            } => write!(
                f,
                "transition {transition} copies component {} into component {}, which does not exist",
                source + 1,
                component + 1
            ),
            Violation::NoOutgoingTransition { state } => {
                write!(f, "state {state} has no outgoing transition")
            }
        }
    }
}

impl ShsModel {
    /// Departure rate `d_q`, the total rate out of each state (self-loops included).
    pub fn departure_rates(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.num_states];
        for t in &self.transitions {
            if t.from < self.num_states {
                d[t.from] += t.rate;
            }
        }
        d
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    /// Validates and returns `self`, or every violation found.
    pub fn validated(self) -> Result<Self, ModelError> {
        let v = validate(&self);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Every violated model invariant, in a stable order. Empty means valid.
pub fn validate(model: &ShsModel) -> Vec<Violation> {
    let mut out = Vec::new();
    if model.num_states == 0 {
        out.push(Violation::NoStates);
    }
    if model.age_dim == 0 {
        out.push(Violation::NoAgeComponents);
    }
    let n = model.age_dim;
    for (l, t) in model.transitions.iter().enumerate() {
        for state in [t.from, t.to] {
            if state >= model.num_states {
                out.push(Violation::StateOutOfRange {
                    transition: l,
                    state,
                });
            }
        }
        if !(t.rate > 0.0 && t.rate.is_finite()) {
            out.push(Violation::NonPositiveRate {
                transition: l,
                rate: t.rate,
            });
        }
        if t.reset.len() != n {
            out.push(Violation::ResetLength {
                transition: l,
                expected: n,
                found: t.reset.len(),
            });
        }
        for (j, a) in t.reset.assignments().iter().enumerate() {
            if let Assignment::Copy(i) = *a {
                if i >= n {
                    out.push(Violation::CopySourceOutOfRange {
                        transition: l,
                        component: j,
                        source: i,
                    });
                }
            }
        }
    }
    let mut has_exit = vec![false; model.num_states];
    for t in &model.transitions {
        if t.from < model.num_states && t.rate > 0.0 {
            has_exit[t.from] = true;
        }
    }
    for (state, ok) in has_exit.into_iter().enumerate() {
        if !ok {
            out.push(Violation::NoOutgoingTransition { state });
        }
    }
    out
}

/// Assembled matrices of the moment and MGF equations.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub num_states: usize,
    pub age_dim: usize,
    /// `d_q` per state.
    pub departure: Vec<f64>,
    pub d: DenseMatrix,
    pub r: DenseMatrix,
    pub r_hat: DenseMatrix,
    /// Each stationary probability repeated `age_dim` times.
    pub pi_rep: Vec<f64>,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.num_states * self.age_dim
    }

    /// `D - R`.
    pub fn d_minus_r(&self) -> DenseMatrix {
        self.d.sub(&self.r)
    }

    /// Sums a long row vector over states, giving one value per age component.
    pub fn aggregate(&self, long: &[f64]) -> Vec<f64> {
        let n = self.age_dim;
        let mut out = vec![0.0; n];
        for chunk in long.chunks(n) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// Splits a long row vector into per-state blocks.
    pub fn per_state(&self, long: &[f64]) -> Vec<Vec<f64>> {
        long.chunks(self.age_dim).map(<[f64]>::to_vec).collect()
    }
}

/// `(d, D, R, R̂)` for a structurally valid model.
pub(crate) fn block_matrices(
    model: &ShsModel,
) -> (Vec<f64>, DenseMatrix, DenseMatrix, DenseMatrix) {
    let n = model.age_dim;
    let size = n * model.num_states;
    let departure = model.departure_rates();
    let mut d = DenseMatrix::zeros(size, size);
    for (q, &dq) in departure.iter().enumerate() {
        for j in 0..n {
            d[(q * n + j, q * n + j)] = dq;
        }
    }
    let mut r = DenseMatrix::zeros(size, size);
    let mut r_hat = DenseMatrix::zeros(size, size);
    for t in &model.transitions {
        let (row0, col0) = (t.from * n, t.to * n);
        for (j, a) in t.reset.assignments().iter().enumerate() {
            match *a {
                Assignment::Identity => r[(row0 + j, col0 + j)] += t.rate,
                Assignment::Copy(i) => r[(row0 + i, col0 + j)] += t.rate,
                Assignment::Fresh => r_hat[(row0 + j, col0 + j)] += t.rate,
            }
        }
    }
    (departure, d, r, r_hat)
}

pub fn build_block_system(model: &ShsModel, pi: &[f64]) -> Result<BlockSystem, ModelError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    if pi.len() != model.num_states {
        return Err(ModelError::StationaryLength {
            expected: model.num_states,
            found: pi.len(),
        });
    }
    let (departure, d, r, r_hat) = block_matrices(model);
    let pi_rep = pi
        .iter()
        .flat_map(|&p| std::iter::repeat_n(p, model.age_dim))
        .collect();
    Ok(BlockSystem {
        num_states: model.num_states,
        age_dim: model.age_dim,
        departure,
        d,
        r,
        r_hat,
        pi_rep,
    })
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::Rate { name, value })
    }
}

/// M/M/1/1 queue with abandonment. State is queue occupancy; `x_1` is the
/// age of updates entering service and `x_2` the age at the destination.
///
/// Transitions, in order: arrival `0 -> 1` at rate `lambda` resetting
/// `(0, x_2)`; delivery `1 -> 0` at rate `mu` resetting `(x_1, x_1)`;
/// abandonment `1 -> 0` at rate `alpha` leaving ages unchanged. The
/// abandonment edge is omitted when `alpha == 0`.
pub fn mm11_abandonment(lambda: f64, mu: f64, alpha: f64) -> Result<ShsModel, ModelError> {
    let lambda = positive("lambda", lambda)?;
    let mu = positive("mu", mu)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(ModelError::NegativeRate {
            name: "alpha",
            value: alpha,
        });
    }
    use Assignment::*;
    let mut transitions = vec![
        Transition::new(0, 1, lambda, AgeResetMap::new(vec![Fresh, Identity])),
        Transition::new(1, 0, mu, AgeResetMap::new(vec![Identity, Copy(0)])),
    ];
    if alpha > 0.0 {
        transitions.push(Transition::new(1, 0, alpha, AgeResetMap::identity(2)));
    }
    Ok(ShsModel {
        num_states: 2,
        age_dim: 2,
        transitions,
    })
}

/// Line network of preemptive memoryless servers with fake updates: one
/// discrete state and one self-transition per hop. Hop 0 delivers a fresh
/// update to node 1; hop `l >= 1` copies `x_l` into `x_{l+1}`.
pub fn preemptive_line(rates: &[f64]) -> Result<ShsModel, ModelError> {
    if rates.is_empty() {
        return Err(ModelError::EmptyLine);
    }
    let n = rates.len();
    let transitions = rates
        .iter()
        .enumerate()
        .map(|(l, &mu)| {
            let mu = positive("mu", mu)?;
            let mut reset = vec![Assignment::Identity; n];
            reset[l] = if l == 0 {
                Assignment::Fresh
            } else {
                Assignment::Copy(l - 1)
            };
            Ok(Transition::new(0, 0, mu, AgeResetMap::new(reset)))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(ShsModel {
        num_states: 1,
        age_dim: n,
        transitions,
    })
}
