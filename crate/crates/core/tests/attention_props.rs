use civic_core::attention::{attention_weights, head_weights, jacobian, multi_head, project_qkv};
use civic_core::{AttentionHead, AttentionParams, Matrix};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, range: f64) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-range..range, rows * cols)
        .prop_map(move |data| Matrix::new(rows, cols, data).unwrap())
}

fn params(heads: usize, d: usize, dk: usize, dv: usize) -> impl Strategy<Value = AttentionParams> {
    proptest::collection::vec(
        (matrix(d, dk, 1.0), matrix(d, dk, 1.0), matrix(d, dv, 1.0)),
        heads,
    )
    .prop_map(|hs| AttentionParams {
        heads: hs
            .into_iter()
            .map(|(w_q, w_k, w_v)| AttentionHead { w_q, w_k, w_v })
            .collect(),
    })
}

fn softmax_rows(logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    logits
        .iter()
        .map(|row| {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn pad_zeros(m: &Matrix, extra: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..m.rows())
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.resize(m.cols() + extra, 0.0);
            r
        })
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_strictly_positive_distributions(
        (y, p) in (1usize..8).prop_flat_map(|n| (matrix(n, 4, 3.0), params(2, 4, 3, 2)))
    ) {
        for w in head_weights(&y, &p).unwrap() {
            for i in 0..w.rows() {
                let s: f64 = w.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
                prop_assert!(w.row(i).iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn permutation_equivariant(
        (y, p, perm) in (2usize..7).prop_flat_map(|n| (
            matrix(n, 3, 2.0),
            params(2, 3, 2, 2),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        ))
    ) {
        let out = multi_head(&y, &p).unwrap();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| y.row(i).to_vec()).collect();
        let out_p = multi_head(&Matrix::from_rows(&permuted).unwrap(), &p).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            for (a, b) in out_p.row(new).iter().zip(out.row(old)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_padded_keys_rescale_logits(
        (y, p) in (1usize..6).prop_flat_map(|n| (matrix(n, 3, 2.0), params(1, 3, 2, 1)))
    ) {
        let proj = project_qkv(&y, &p.heads[0]).unwrap();
        let padded = attention_weights(&pad_zeros(&proj.q, 2), &pad_zeros(&proj.k, 2), 4).unwrap();
        let n = y.rows();
        let logits: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let dot: f64 = proj.q.row(i).iter().zip(proj.k.row(j)).map(|(a, b)| a * b).sum();
                        dot / 2.0f64.sqrt() / 2.0f64.sqrt()
                    })
                    .collect()
            })
            .collect();
        let want = softmax_rows(&logits);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((padded[(i, j)] - want[i][j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(y in matrix(3, 4, 1.5), p in params(2, 4, 3, 2)) {
        let jac = jacobian(&y, &p).unwrap();
        let h = 1e-6;
        let mut worst = 0.0f64;
        let mut scale = 1.0f64;
        for col in 0..12 {
            let mut up = y.clone();
            let mut dn = y.clone();
            up[(col / 4, col % 4)] += h;
            dn[(col / 4, col % 4)] -= h;
            let ou = multi_head(&up, &p).unwrap();
            let od = multi_head(&dn, &p).unwrap();
            for (r, (a, b)) in ou.as_slice().iter().zip(od.as_slice()).enumerate() {
                let fd = (a - b) / (2.0 * h);
                scale = scale.max(fd.abs());
                worst = worst.max((jac[(r, col)] - fd).abs());
            }
        }
        prop_assert!(worst / scale <= 1e-5, "relative error {}", worst / scale);
    }

    #[test]
    fn huge_logits_stay_finite(y in matrix(4, 2, 100.0), p in params(1, 2, 2, 2)) {
        let scaled = AttentionParams {
            heads: vec![AttentionHead {
                w_q: p.heads[0].w_q.map(|v| v * 10.0),
                w_k: p.heads[0].w_k.map(|v| v * 10.0),
                w_v: p.heads[0].w_v.clone(),
            }],
        };
        let out = multi_head(&y, &scaled).unwrap();
        prop_assert!(out.is_finite());
        for w in head_weights(&y, &scaled).unwrap() {
            for i in 0..w.rows() {
                let s: f64 = w.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn single_head_params_match_multi_head() {
    let y = Matrix::from_rows(&[[1.0, 0.0], [0.5, -1.0]]).unwrap();
    let w = Matrix::from_rows(&[[0.3, 0.1], [-0.2, 0.7]]).unwrap();
    let one = AttentionParams::single(w.clone(), w.clone(), w.clone());
    let two = AttentionParams {
        heads: vec![one.heads[0].clone(), one.heads[0].clone()],
    };
    let a = multi_head(&y, &one).unwrap();
    let b = multi_head(&y, &two).unwrap();
    assert_eq!(b.cols(), 4);
    for i in 0..2 {
        assert_eq!(&b.row(i)[..2], a.row(i));
        assert_eq!(&b.row(i)[2..], a.row(i));
    }
}

#[test]
fn hand_output() {
    let w = Matrix::from_rows(&[[0.75, 0.25]]).unwrap();
    let v = Matrix::from_rows(&[[4.0], [0.0]]).unwrap();
    let out = civic_core::attention::attention_output(&w, &v).unwrap();
    assert_eq!(out.as_slice(), [3.0]);
}
