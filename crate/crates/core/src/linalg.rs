//! Dense linear algebra sized for block systems of a few hundred rows.
//!
//! Row-vector conventions follow the age equations: most solves are of the
//! form `x A = b` with `x` and `b` row vectors.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::model::{block_matrices, ShsModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("Markov chain is not ergodic: state {state} has no stationary mass")]
    NonErgodic { state: usize },
    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("power iteration did not converge after {iterations} iterations (last root estimate {last_root})")]
    ConvergenceFailure {
        iterations: usize,
        last_root: f64,
        last_vector: Vec<f64>,
    },
}

/// Numerical thresholds used across the crate. The defaults are the
/// documented contract; callers may override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative residual accepted from a linear solve, `|xA - b| <= tol (1 + |b|)`.
    pub solve_residual: f64,
    /// Pivots smaller than `pivot * |A|_inf` are treated as singular.
    pub pivot: f64,
    /// Stationary probabilities at or below this are reported as non-ergodic.
    pub min_probability: f64,
    /// Relative change in the power-iteration quotient treated as converged.
    pub power_change: f64,
    /// Number of consecutive small changes required.
    pub power_window: usize,
    pub power_max_iter: usize,
    /// Relative eigen-residual `|Mu - ru| / (|M| |u|)` accepted from power iteration.
    pub eigen_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solve_residual: 1e-10,
            pivot: 1e-13,
            min_probability: 1e-12,
            power_change: 1e-12,
            power_window: 10,
            power_max_iter: 100_000,
            eigen_residual: 1e-10,
        }
    }
}

/// Row-major dense matrix of finite reals.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Row vector times matrix, `x M`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    /// Matrix times column vector, `M u`.
    pub fn right_mul(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        self.add(&other.scaled(-1.0))
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> DenseMatrix {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] += shift;
        }
        m
    }

    fn check_nonnegative(&self) -> Result<(), LinalgError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)] < 0.0 {
                    return Err(LinalgError::NegativeEntry { row: i, col: j });
                }
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors `a`, failing when a pivot falls below `pivot_tol * |a|_inf`.
    pub fn factor(a: &DenseMatrix, pivot_tol: f64) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let threshold = pivot_tol * a.norm_inf();
        Self::factor_with_threshold(a, threshold)
    }

    /// Factors with an absolute pivot threshold; zero accepts any nonzero pivot.
    fn factor_with_threshold(a: &DenseMatrix, threshold: f64) -> Result<Self, LinalgError> {
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold || pmax == 0.0 || !pmax.is_finite() {
                return Err(LinalgError::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A y = b` for a column vector `y`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc / self.lu[(i, i)];
        }
        y
    }
}

/// Factorization of `A` for repeated row-vector solves `x A = b`.
#[derive(Debug, Clone)]
pub struct RowSolver {
    a: DenseMatrix,
    lu_t: Lu,
    tol: Tolerances,
}

impl RowSolver {
    pub fn new(a: &DenseMatrix, tol: Tolerances) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let lu_t = Lu::factor(&a.transpose(), tol.pivot)?;
        Ok(Self {
            a: a.clone(),
            lu_t,
            tol,
        })
    }

    /// Solves `x A = b`, with one step of iterative refinement when the
    /// first residual misses the tolerance.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.a.rows() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.a.rows(),
                found: b.len(),
            });
        }
        let tolerance = self.tol.solve_residual * (1.0 + norm_inf(b));
        let mut x = self.lu_t.solve(b);
        let mut residual = self.residual(&x, b);
        for _ in 0..2 {
            if norm_inf(&residual) <= tolerance {
                break;
            }
            let correction = self.lu_t.solve(&residual);
            for (xi, ci) in x.iter_mut().zip(&correction) {
                *xi += ci;
            }
            residual = self.residual(&x, b);
        }
        let r = norm_inf(&residual);
        if !(r <= tolerance) {
            return Err(LinalgError::Residual {
                residual: r,
                tolerance,
            });
        }
        Ok(x)
    }

    /// `b - x A`.
    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let xa = self.a.left_mul(x);
        b.iter().zip(&xa).map(|(bi, ri)| bi - ri).collect()
    }
}

/// Solves the row-vector system `x A = b` by LU with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    solve_linear_with(a, b, Tolerances::default())
}

pub fn solve_linear_with(
    a: &DenseMatrix,
    b: &[f64],
    tol: Tolerances,
) -> Result<Vec<f64>, LinalgError> {
    RowSolver::new(a, tol)?.solve(b)
}

/// Generator matrix of the discrete-state chain. Self-transitions cancel.
pub fn generator(model: &ShsModel) -> DenseMatrix {
    let q = model.num_states;
    let mut g = DenseMatrix::zeros(q, q);
    for t in &model.transitions {
        if t.from != t.to {
            g[(t.from, t.to)] += t.rate;
            g[(t.from, t.from)] -= t.rate;
        }
    }
    g
}

/// Stationary distribution of the discrete-state chain.
pub fn stationary_distribution(model: &ShsModel) -> Result<Vec<f64>, LinalgError> {
    stationary_distribution_with(model, Tolerances::default())
}

pub fn stationary_distribution_with(
    model: &ShsModel,
    tol: Tolerances,
) -> Result<Vec<f64>, LinalgError> {
    let q = model.num_states;
    let g = generator(model);
    // Replace the last balance equation with normalization.
    let mut system = g.clone();
    for i in 0..q {
        system[(i, q - 1)] = 1.0;
    }
    let mut rhs = vec![0.0; q];
    rhs[q - 1] = 1.0;
    let pi = match solve_linear_with(&system, &rhs, tol) {
        Ok(pi) => pi,
        Err(LinalgError::Singular { pivot }) => return Err(LinalgError::NonErgodic { state: pivot }),
        Err(e) => return Err(e),
    };
    if let Some(state) = pi.iter().position(|&p| !(p > tol.min_probability)) {
        return Err(LinalgError::NonErgodic { state });
    }
    let balance = g.left_mul(&pi);
    let r = norm_inf(&balance);
    let tolerance = tol.solve_residual;
    if r > tolerance {
        return Err(LinalgError::Residual {
            residual: r,
            tolerance,
        });
    }
    Ok(pi)
}

/// Dominant eigenpair of a non-negative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub root: f64,
    /// Non-negative right eigenvector scaled to unit max-norm.
    pub vector: Vec<f64>,
}

fn normalize_max(v: &mut [f64]) -> f64 {
    let m = norm_inf(v);
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
    m
}

fn eigen_residual(m: &DenseMatrix, root: f64, u: &[f64]) -> f64 {
    let mu = m.right_mul(u);
    let r = mu.iter().zip(u).map(|(a, b)| (a - root * b).abs()).fold(0.0, f64::max);
    let scale = m.norm_inf().max(f64::MIN_POSITIVE) * norm_inf(u).max(f64::MIN_POSITIVE);
    r / scale
}

/// Perron root of a non-negative matrix by power iteration from the
/// all-ones vector.
///
/// Convergence requires the quotient `u'Mu / u'u` to change by less than
/// `power_change` (relative) over `power_window` consecutive steps and the
/// eigen-residual to fall under `eigen_residual`.
pub fn perron_root(m: &DenseMatrix) -> Result<PerronPair, LinalgError> {
    perron_root_with(m, Tolerances::default())
}

pub fn perron_root_with(m: &DenseMatrix, tol: Tolerances) -> Result<PerronPair, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.check_nonnegative()?;
    let n = m.rows();
    let mut u = vec![1.0; n];
    let mut quotient = f64::NAN;
    let mut quiet = 0usize;
    for iter in 1..=tol.power_max_iter {
        let mut w = m.right_mul(&u);
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let next: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / uu;
        if normalize_max(&mut w) == 0.0 {
            // u lies in the kernel: Mu = 0 = 0 u.
            return Ok(PerronPair {
                root: 0.0,
                vector: u,
            });
        }
        let change = (next - quotient).abs();
        if change <= tol.power_change * next.abs().max(f64::MIN_POSITIVE) {
            quiet += 1;
        } else {
            quiet = 0;
        }
        quotient = next;
        u = w;
        if quiet >= tol.power_window && iter > tol.power_window {
            let root = {
                let mu = m.right_mul(&u);
                let uu: f64 = u.iter().map(|x| x * x).sum();
                u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() / uu
            };
            if eigen_residual(m, root, &u) <= tol.eigen_residual {
                return Ok(PerronPair {
                    root: root.max(0.0),
                    vector: u,
                });
            }
        }
    }
    Err(LinalgError::ConvergenceFailure {
        iterations: tol.power_max_iter,
        last_root: quotient,
        last_vector: u,
    })
}

/// `t > r(M)` exactly when `tI - M` is invertible with `(tI - M)^{-1} 1 > 0`.
fn above_perron_root(m: &DenseMatrix, t: f64) -> Option<Vec<f64>> {
    let shifted = m.scaled(-1.0).shifted(t);
    let lu = Lu::factor_with_threshold(&shifted, 0.0).ok()?;
    let y = lu.solve(&vec![1.0; m.rows()]);
    y.iter().all(|&v| v > 0.0 && v.is_finite()).then_some(y)
}

/// Perron root by bisection on the M-matrix criterion above.
///
/// Unlike power iteration this is insensitive to Jordan blocks at the
/// dominant root, which arise for equal-rate line networks.
pub fn perron_root_bisection(m: &DenseMatrix) -> Result<PerronPair, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.check_nonnegative()?;
    let n = m.rows();
    let mut lo = 0.0_f64;
    let mut hi = m.norm_inf().max(1.0) * (1.0 + 1e-9) + 1e-300;
    let mut y_hi = above_perron_root(m, hi).unwrap_or_else(|| vec![1.0; n]);
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match above_perron_root(m, mid) {
            Some(y) => {
                hi = mid;
                y_hi = y;
            }
            None => lo = mid,
        }
    }
    normalize_max(&mut y_hi);
    Ok(PerronPair {
        root: 0.5 * (lo + hi),
        vector: y_hi,
    })
}

/// Upper bound on the real parts of the eigenvalues of `R - D`, computed
/// as `r(sigma) - sigma` with `sigma = 1 + max_q d_q` and `r(sigma)` the
/// Perron root of the non-negative matrix `sigma I + R - D`.
pub fn spectral_abscissa(model: &ShsModel) -> Result<f64, LinalgError> {
    let (departure, _d, r, _r_hat) = block_matrices(model);
    let sigma = 1.0 + departure.iter().copied().fold(0.0, f64::max);
    let mut m = r;
    let n = model.age_dim;
    for (q, &dq) in departure.iter().enumerate() {
        for j in 0..n {
            let i = q * n + j;
            m[(i, i)] += sigma - dq;
        }
    }
    let root = match perron_root(&m) {
        Ok(pair) => pair.root,
        // Defective dominant roots stall power iteration; bisect instead.
        Err(LinalgError::ConvergenceFailure { .. }) => perron_root_bisection(&m)?.root,
        Err(e) => return Err(e),
    };
    Ok(root - sigma)
}
