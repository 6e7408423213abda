//! Binary logit estimation by maximum likelihood.
//!
//! The log-odds of the outcome are linear in the regressors,
//! `ln(p / (1 - p)) = β·x`, and the coefficients are found by Newton-Raphson
//! on the Bernoulli log-likelihood. Goodness of fit is reported as the
//! adjusted rho-squared against the zero-coefficient (equal shares) model,
//! whose log-likelihood is `-N ln 2`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, Matrix};
use crate::scalar::{logistic, softplus, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogitError {
    #[error("length mismatch: beta has {beta} entries, x has {x}")]
    Length { beta: usize, x: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("outcome at row {row} is not 0 or 1")]
    Outcome { row: usize },
    #[error("design needs more observations ({n}) than parameters ({k})")]
    TooFewObservations { n: usize, k: usize },
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("feature row {row} has {found} values, expected {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("collinear design")]
    Collinear,
    #[error("quasi-separation detected: beta[{index}] = {value:.3} exceeds ±{bound}")]
    QuasiSeparation {
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("null log-likelihood must be negative")]
    ZeroNull,
    #[error("n_obs must be at least 1")]
    NoObservations,
}

/// Outcome vector plus a design matrix whose first column is the intercept.
#[derive(Debug, Clone)]
pub struct DesignData<T> {
    y: Vec<T>,
    x: Matrix<T>,
    names: Vec<String>,
}

pub const INTERCEPT_NAME: &str = "Constant";

impl<T: Scalar> DesignData<T> {
    /// Builds a design from per-observation feature rows; the intercept column
    /// is prepended and named [`INTERCEPT_NAME`].
    pub fn from_features(
        y: &[bool],
        rows: &[Vec<T>],
        feature_names: &[String],
    ) -> Result<Self, LogitError> {
        let mut seen = HashSet::new();
        for name in feature_names {
            if !seen.insert(name.as_str()) || name == INTERCEPT_NAME {
                return Err(LogitError::DuplicateFeature(name.clone()));
            }
        }
        if y.len() != rows.len() {
            return Err(LogitError::Length {
                beta: rows.len(),
                x: y.len(),
            });
        }
        let width = feature_names.len() + 1;
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(LogitError::RowWidth {
                    row: i,
                    expected: feature_names.len(),
                    found: row.len(),
                });
            }
            data.push(T::one());
            data.extend_from_slice(row);
        }
        let x = Matrix::new(rows.len(), width, data).expect("buffer sized above");
        let y = y
            .iter()
            .map(|&b| if b { T::one() } else { T::zero() })
            .collect();
        let mut names = vec![INTERCEPT_NAME.to_string()];
        names.extend(feature_names.iter().cloned());
        Self::new(y, x, names)
    }

    /// Validates a prebuilt design; column 0 must be the intercept of ones.
    pub fn new(y: Vec<T>, x: Matrix<T>, names: Vec<String>) -> Result<Self, LogitError> {
        let (n, k) = x.shape();
        if y.len() != n {
            return Err(LogitError::Length {
                beta: n,
                x: y.len(),
            });
        }
        if names.len() != k {
            return Err(LogitError::Length {
                beta: k,
                x: names.len(),
            });
        }
        if k == 0 || n == 0 {
            return Err(LogitError::TooFewObservations { n, k });
        }
        if !x.is_finite() {
            return Err(LogitError::NonFinite);
        }
        if let Some(row) = y.iter().position(|&v| v != T::zero() && v != T::one()) {
            return Err(LogitError::Outcome { row });
        }
        if (0..n).any(|i| x[(i, 0)] != T::one()) {
            return Err(LogitError::Collinear);
        }
        Ok(Self { y, x, names })
    }

    pub fn n_obs(&self) -> usize {
        self.x.rows()
    }

    pub fn n_params(&self) -> usize {
        self.x.cols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }
}

/// Estimated binary logit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit<T> {
    pub names: Vec<String>,
    pub beta: Vec<T>,
    pub std_errors: Vec<T>,
    pub t_stats: Vec<T>,
    pub ll: T,
    pub ll_null: T,
    pub adjusted_rho_sq: T,
    pub n_obs: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    /// Convergence threshold on `max |gradient|`.
    pub tol: T,
    /// Convergence threshold on the log-likelihood change of an accepted step.
    pub ll_tol: T,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Any coefficient beyond this magnitude aborts the fit.
    pub separation_bound: T,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            ll_tol: T::lit(1e-12),
            max_iter: 100,
            max_halvings: 30,
            separation_bound: T::lit(30.0),
        }
    }
}

/// `P(Y = 1 | x) = e^{β·x} / (1 + e^{β·x})`.
pub fn predict_prob<T: Scalar>(beta: &[T], x: &[T]) -> Result<T, LogitError> {
    if beta.len() != x.len() {
        return Err(LogitError::Length {
            beta: beta.len(),
            x: x.len(),
        });
    }
    let z = linear_index(beta, x);
    if !z.is_finite() {
        return Err(LogitError::NonFinite);
    }
    Ok(logistic(z))
}

fn linear_index<T: Scalar>(beta: &[T], x: &[T]) -> T {
    crate::linalg::dot(beta, x)
}

/// Bernoulli log-likelihood `Σ y ln p + (1 - y) ln(1 - p)`, evaluated as
/// `Σ y z - ln(1 + e^z)` so large linear indices stay finite.
pub fn log_likelihood<T: Scalar>(data: &DesignData<T>, beta: &[T]) -> T {
    let x = data.x();
    data.y()
        .iter()
        .enumerate()
        .map(|(i, &yi)| {
            let z = linear_index(beta, x.row(i));
            yi * z - softplus(z)
        })
        .sum()
}

/// Score vector `Xᵀ(y - p)`.
pub fn gradient<T: Scalar>(data: &DesignData<T>, beta: &[T]) -> Vec<T> {
    let x = data.x();
    let mut g = vec![T::zero(); x.cols()];
    for (i, &yi) in data.y().iter().enumerate() {
        let row = x.row(i);
        let r = yi - logistic(linear_index(beta, row));
        for (gj, &xj) in g.iter_mut().zip(row) {
            *gj = *gj + r * xj;
        }
    }
    g
}

/// Observed information `XᵀWX`, `W = diag(p(1 - p))`; the Hessian is its negation.
pub fn information<T: Scalar>(data: &DesignData<T>, beta: &[T]) -> Matrix<T> {
    let x = data.x();
    let k = x.cols();
    let mut info = Matrix::zeros(k, k);
    for i in 0..x.rows() {
        let row = x.row(i);
        let p = logistic(linear_index(beta, row));
        let w = p * (T::one() - p);
        for a in 0..k {
            let wa = w * row[a];
            for b in 0..=a {
                info[(a, b)] = info[(a, b)] + wa * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            info[(b, a)] = info[(a, b)];
        }
    }
    info
}

/// Hessian of the log-likelihood, `-XᵀWX`.
pub fn hessian<T: Scalar>(data: &DesignData<T>, beta: &[T]) -> Matrix<T> {
    information(data, beta).map(|v| -v)
}

/// Log-likelihood of the all-zero-coefficient model: `-n ln 2`.
pub fn null_log_likelihood<T: Scalar>(n_obs: usize) -> Result<T, LogitError> {
    if n_obs == 0 {
        return Err(LogitError::NoObservations);
    }
    Ok(-T::from_count(n_obs) * T::lit(std::f64::consts::LN_2))
}

/// `1 - (ll - k) / ll_null`.
pub fn adjusted_rho_squared<T: Scalar>(
    ll: T,
    k_params: usize,
    ll_null: T,
) -> Result<T, LogitError> {
    if !(ll_null < T::zero()) {
        return Err(LogitError::ZeroNull);
    }
    Ok(T::one() - (ll - T::from_count(k_params)) / ll_null)
}

fn pivot_tol<T: Scalar>() -> T {
    T::epsilon() * T::lit(1e4)
}

/// Newton-Raphson from `β = 0` with step-halving on likelihood decrease.
pub fn fit<T: Scalar>(
    data: &DesignData<T>,
    opts: &FitOptions<T>,
) -> Result<LogitFit<T>, LogitError> {
    let k = data.n_params();
    if data.n_obs() <= k {
        return Err(LogitError::TooFewObservations { n: data.n_obs(), k });
    }
    let mut beta = vec![T::zero(); k];
    let mut ll = log_likelihood(data, &beta);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let g = gradient(data, &beta);
        if max_abs(&g) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let l = cholesky(&information(data, &beta), pivot_tol()).ok_or(LogitError::Collinear)?;
        let step = cholesky_solve(&l, &g);

        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<T> = beta
                .iter()
                .zip(&step)
                .map(|(&b, &s)| b + scale * s)
                .collect();
            let ll_cand = log_likelihood(data, &cand);
            if ll_cand >= ll {
                accepted = Some((cand, ll_cand));
                break;
            }
            scale = scale * T::lit(0.5);
        }
        let Some((cand, ll_cand)) = accepted else {
            // no ascent direction left at working precision
            converged = true;
            break;
        };
        if let Some((index, &value)) = cand
            .iter()
            .enumerate()
            .find(|(_, b)| b.abs() > opts.separation_bound)
        {
            return Err(LogitError::QuasiSeparation {
                index,
                value: value.to_f64_lossy(),
                bound: opts.separation_bound.to_f64_lossy(),
            });
        }
        let delta = ll_cand - ll;
        beta = cand;
        ll = ll_cand;
        if delta.abs() < opts.ll_tol {
            converged = true;
            break;
        }
    }

    let l = cholesky(&information(data, &beta), pivot_tol()).ok_or(LogitError::Collinear)?;
    let cov = cholesky_inverse(&l);
    let std_errors: Vec<T> = (0..k).map(|j| cov[(j, j)].sqrt()).collect();
    let t_stats = beta.iter().zip(&std_errors).map(|(&b, &s)| b / s).collect();
    let ll_null = null_log_likelihood(data.n_obs())?;
    let adjusted_rho_sq = adjusted_rho_squared(ll, k, ll_null)?;

    Ok(LogitFit {
        names: data.names().to_vec(),
        beta,
        std_errors,
        t_stats,
        ll,
        ll_null,
        adjusted_rho_sq,
        n_obs: data.n_obs(),
        iterations,
        converged,
    })
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}
