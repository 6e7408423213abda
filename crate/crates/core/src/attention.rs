//! Scaled dot-product self-attention over a token sequence.
//!
//! For embeddings `Y` (n × d_model) each head projects `Q = Y W_q`,
//! `K = Y W_k`, `V = Y W_v`, weights token pairs by
//! `softmax_j(Q_i · K_j / sqrt(d_k))`, and returns the weighted sum of value
//! rows. Multiple heads are concatenated along the feature axis in head order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Matrix, ShapeError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("key dimension must be at least 1")]
    ZeroKeyDim,
    #[error("at least one head is required")]
    NoHeads,
    #[error("empty token sequence")]
    EmptySequence,
    #[error("head {head}: {what}")]
    HeadDims { head: usize, what: String },
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
}

/// Projection matrices for one head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct AttentionHead<T> {
    pub w_q: Matrix<T>,
    pub w_k: Matrix<T>,
    pub w_v: Matrix<T>,
}

impl<T: Scalar> AttentionHead<T> {
    pub fn d_model(&self) -> usize {
        self.w_q.rows()
    }

    pub fn d_k(&self) -> usize {
        self.w_q.cols()
    }

    pub fn d_v(&self) -> usize {
        self.w_v.cols()
    }
}

/// One or more heads sharing `d_model`, `d_k` and `d_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct AttentionParams<T> {
    pub heads: Vec<AttentionHead<T>>,
}

impl<T: Scalar> AttentionParams<T> {
    pub fn single(w_q: Matrix<T>, w_k: Matrix<T>, w_v: Matrix<T>) -> Self {
        Self {
            heads: vec![AttentionHead { w_q, w_k, w_v }],
        }
    }

    pub fn validate(&self) -> Result<(), AttentionError> {
        let first = self.heads.first().ok_or(AttentionError::NoHeads)?;
        let (d_model, d_k, d_v) = (first.d_model(), first.d_k(), first.d_v());
        for (h, head) in self.heads.iter().enumerate() {
            let bad = |what: String| Err(AttentionError::HeadDims { head: h, what });
            if head.w_k.shape() != (d_model, d_k) || head.w_q.shape() != (d_model, d_k) {
                return bad(format!(
                    "W_q {:?} and W_k {:?} must both be {d_model}x{d_k}",
                    head.w_q.shape(),
                    head.w_k.shape()
                ));
            }
            if head.w_v.shape() != (d_model, d_v) {
                return bad(format!(
                    "W_v {:?} must be {d_model}x{d_v}",
                    head.w_v.shape()
                ));
            }
            if !(head.w_q.is_finite() && head.w_k.is_finite() && head.w_v.is_finite()) {
                return Err(AttentionError::NonFinite("projection matrices"));
            }
        }
        if d_k == 0 {
            return Err(AttentionError::ZeroKeyDim);
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.heads.iter().map(|h| h.d_v()).sum()
    }
}

/// Query, key and value matrices for one head.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections<T> {
    pub q: Matrix<T>,
    pub k: Matrix<T>,
    pub v: Matrix<T>,
}

pub fn project_qkv<T: Scalar>(
    y: &Matrix<T>,
    head: &AttentionHead<T>,
) -> Result<Projections<T>, AttentionError> {
    Ok(Projections {
        q: y.matmul(&head.w_q)?,
        k: y.matmul(&head.w_k)?,
        v: y.matmul(&head.w_v)?,
    })
}

/// Row-stochastic `softmax_j(Q_i · K_j / sqrt(d_k))`, with per-row max subtraction.
pub fn attention_weights<T: Scalar>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    d_k: usize,
) -> Result<Matrix<T>, AttentionError> {
    if d_k == 0 {
        return Err(AttentionError::ZeroKeyDim);
    }
    if q.cols() != d_k || k.cols() != d_k {
        return Err(ShapeError::Mismatch {
            op: "attention_weights",
            left: q.shape(),
            right: k.shape(),
        }
        .into());
    }
    let scale = T::from_count(d_k).sqrt();
    let mut w = Matrix::zeros(q.rows(), k.rows());
    for i in 0..q.rows() {
        let row = w.row_mut(i);
        for (j, r) in row.iter_mut().enumerate() {
            *r = dot(q.row(i), k.row(j)) / scale;
        }
        softmax_in_place(row);
    }
    Ok(w)
}

fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let mut total = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total = total + *v;
    }
    for v in row.iter_mut() {
        *v = *v / total;
    }
}

/// `Output_i = Σ_j weights[i][j] · V_j`.
pub fn attention_output<T: Scalar>(
    weights: &Matrix<T>,
    v: &Matrix<T>,
) -> Result<Matrix<T>, AttentionError> {
    Ok(weights.matmul(v)?)
}

/// Runs every head over `y` and concatenates the outputs in head order.
pub fn multi_head<T: Scalar>(
    y: &Matrix<T>,
    params: &AttentionParams<T>,
) -> Result<Matrix<T>, AttentionError> {
    check_inputs(y, params)?;
    let blocks = params
        .heads
        .iter()
        .map(|head| single_head(y, head).map(|(_, out)| out))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::hcat(&blocks)?)
}

/// Attention weights of every head, in head order.
pub fn head_weights<T: Scalar>(
    y: &Matrix<T>,
    params: &AttentionParams<T>,
) -> Result<Vec<Matrix<T>>, AttentionError> {
    check_inputs(y, params)?;
    params
        .heads
        .iter()
        .map(|head| single_head(y, head).map(|(w, _)| w))
        .collect()
}

fn check_inputs<T: Scalar>(
    y: &Matrix<T>,
    params: &AttentionParams<T>,
) -> Result<(), AttentionError> {
    params.validate()?;
    if y.rows() == 0 {
        return Err(AttentionError::EmptySequence);
    }
    if !y.is_finite() {
        return Err(AttentionError::NonFinite("token embeddings"));
    }
    Ok(())
}

fn single_head<T: Scalar>(
    y: &Matrix<T>,
    head: &AttentionHead<T>,
) -> Result<(Matrix<T>, Matrix<T>), AttentionError> {
    let p = project_qkv(y, head)?;
    let w = attention_weights(&p.q, &p.k, head.d_k())?;
    let out = attention_output(&w, &p.v)?;
    Ok((w, out))
}

/// Analytic Jacobian of the multi-head output with respect to the embeddings.
///
/// Rows index output entries `(i, c)` flattened row-major over the
/// `n × output_dim` output; columns index inputs `(m, e)` flattened row-major
/// over the `n × d_model` embeddings.
pub fn jacobian<T: Scalar>(
    y: &Matrix<T>,
    params: &AttentionParams<T>,
) -> Result<Matrix<T>, AttentionError> {
    check_inputs(y, params)?;
    let n = y.rows();
    let d_model = y.cols();
    let out_dim = params.output_dim();
    let mut jac = Matrix::zeros(n * out_dim, n * d_model);

    let mut col_offset = 0;
    for head in &params.heads {
        let p = project_qkv(y, head)?;
        let w = attention_weights(&p.q, &p.k, head.d_k())?;
        let inv_scale = T::one() / T::from_count(head.d_k()).sqrt();
        let d_v = head.d_v();

        // dS[i][j] / dY[m][e] = (δ_im W_q[e]·K_j + δ_jm Q_i·W_k[e]) / sqrt(d_k)
        // q_wk[i][e] = Q_i · W_k[e,:], wq_k[e][j] = W_q[e,:] · K_j
        let q_wk = p.q.matmul(&head.w_k.transpose())?;
        let wq_k = head.w_q.matmul(&p.k.transpose())?;

        for m in 0..n {
            for e in 0..d_model {
                let input_col = m * d_model + e;
                for i in 0..n {
                    let ds = |j: usize| -> T {
                        let mut s = T::zero();
                        if i == m {
                            s = s + wq_k[(e, j)];
                        }
                        if j == m {
                            s = s + q_wk[(i, e)];
                        }
                        s * inv_scale
                    };
                    let ds_row: Vec<T> = (0..n).map(ds).collect();
                    let mean_ds = (0..n).fold(T::zero(), |acc, l| acc + w[(i, l)] * ds_row[l]);
                    for c in 0..d_v {
                        // softmax derivative feeding V, plus the direct V = Y W_v path
                        let mut g = w[(i, m)] * head.w_v[(e, c)];
                        for j in 0..n {
                            g = g + w[(i, j)] * (ds_row[j] - mean_ds) * p.v[(j, c)];
                        }
                        jac[(i * out_dim + col_offset + c, input_col)] = g;
                    }
                }
            }
        }
        col_offset += d_v;
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_query_projection_returns_embeddings() {
        let y = m(&[&[1.0, 2.0], &[3.0, -1.0]]);
        let head = AttentionHead {
            w_q: Matrix::identity(2),
            w_k: Matrix::identity(2),
            w_v: Matrix::identity(2),
        };
        assert_eq!(project_qkv(&y, &head).unwrap().q, y);
    }

    #[test]
    fn zero_embeddings_project_to_zero() {
        let y = Matrix::<f64>::zeros(3, 2);
        let head = AttentionHead {
            w_q: m(&[&[1.0], &[2.0]]),
            w_k: m(&[&[0.5], &[-1.0]]),
            w_v: m(&[&[3.0, 1.0], &[1.0, 1.0]]),
        };
        let p = project_qkv(&y, &head).unwrap();
        for mat in [&p.q, &p.k, &p.v] {
            assert!(mat.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hand_projection() {
        let head = AttentionHead {
            w_q: m(&[&[2.0], &[3.0]]),
            w_k: m(&[&[2.0], &[3.0]]),
            w_v: m(&[&[2.0], &[3.0]]),
        };
        let p = project_qkv(&m(&[&[1.0, 0.0]]), &head).unwrap();
        assert_eq!(p.q.to_rows(), vec![vec![2.0]]);
    }

    #[test]
    fn weights_errors() {
        let q = m(&[&[1.0]]);
        assert_eq!(
            attention_weights(&q, &q, 0),
            Err(AttentionError::ZeroKeyDim)
        );
        assert!(attention_weights(&q, &m(&[&[1.0, 2.0]]), 1).is_err());
    }

    #[test]
    fn output_shape_mismatch() {
        let w = m(&[&[0.5, 0.5]]);
        assert!(attention_output(&w, &m(&[&[1.0]])).is_err());
    }

    #[test]
    fn inconsistent_heads_rejected() {
        let a = AttentionHead {
            w_q: Matrix::<f64>::identity(2),
            w_k: Matrix::identity(2),
            w_v: Matrix::identity(2),
        };
        let mut b = a.clone();
        b.w_k = Matrix::zeros(2, 3);
        b.w_q = Matrix::zeros(2, 3);
        let params = AttentionParams { heads: vec![a, b] };
        assert!(matches!(
            multi_head(&Matrix::identity(2), &params),
            Err(AttentionError::HeadDims { head: 1, .. })
        ));
        let none: AttentionParams<f64> = AttentionParams { heads: vec![] };
        assert_eq!(none.validate(), Err(AttentionError::NoHeads));
    }

    #[test]
    fn f32_kernel_runs() {
        let y = Matrix::<f32>::from_rows(&[[0.1, 0.2], [0.3, -0.4]]).unwrap();
        let p = AttentionParams::single(
            Matrix::identity(2),
            Matrix::identity(2),
            Matrix::identity(2),
        );
        let w = head_weights(&y, &p).unwrap();
        for i in 0..2 {
            let s: f32 = w[0].row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }
}
