//! Acceptance criteria, one PASS/FAIL line each.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use civic_core::attention::{attention_weights, head_weights, jacobian, multi_head};
use civic_core::geo::{
    join_attributes, locate, resolve_geoid, AttributeTable, BlockGroupPolygon, Geoid, GeoidSource,
    RemoteError, RemoteGeocoder,
};
use civic_core::ingest::TokenizedDoc;
use civic_core::logit::{
    adjusted_rho_squared, fit, gradient, hessian, log_likelihood, null_log_likelihood,
};
use civic_core::names::{
    cross_validate, kfold_partition, train, Algorithm, ModelParams, NameExample, Task, TrainConfig,
};
use civic_core::pipeline::{model_files, run, RunConfig};
use civic_core::report::{fmt3, summary_from_counts, ROW_LL_FULL, ROW_LL_NULL, ROW_N_OBS, ROW_RHO};
use civic_core::topics::{
    build_corpus, fit_lda, select_k, top_words, umass_topic, CoOccurrence, Corpus, GibbsSampler,
    LdaConfig,
};
use civic_core::{AttentionHead, AttentionParams, DesignData, FitOptions, Matrix};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// 1
fn null_ll() -> Outcome {
    let ll: f64 = null_log_likelihood(36098).map_err(|e| e.to_string())?;
    ensure!(close(ll, -25021.22, 0.01), "null LL {ll}");
    Ok(format!("LL0(36098) = {ll:.4}"))
}

// 2
fn rho_reproduction() -> Outcome {
    let ll0: f64 = null_log_likelihood(36098).map_err(|e| e.to_string())?;
    let mut got = Vec::new();
    for (ll, k, want) in [
        (-4659.241, 16, 0.813),
        (-4695.159, 15, 0.812),
        (-4418.215, 11, 0.823),
    ] {
        let r = adjusted_rho_squared(ll, k, ll0).map_err(|e| e.to_string())?;
        ensure!(close(r, want, 0.0005), "k={k}: {r} vs {want}");
        got.push(format!("{r:.4}"));
    }
    Ok(got.join(", "))
}

fn fit_design(y: &[bool], rows: &[Vec<f64>], names: &[&str]) -> Result<Vec<f64>, String> {
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let data = DesignData::from_features(y, rows, &names).map_err(|e| e.to_string())?;
    let f = fit(&data, &FitOptions::default()).map_err(|e| e.to_string())?;
    ensure!(f.converged, "fit did not converge");
    Ok(f.beta)
}

fn oracle_ll(y: &[bool], x: &[f64], b0: f64, b1: f64) -> f64 {
    y.iter()
        .zip(x)
        .map(|(&yi, &xi)| {
            let z = b0 + b1 * xi;
            let log1pexp = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            if yi {
                z - log1pexp
            } else {
                -log1pexp
            }
        })
        .sum()
}

// 3
fn logit_oracles() -> Outcome {
    // intercept only
    let y: Vec<bool> = (0..40).map(|i| i % 5 == 0 || i % 7 == 0).collect();
    let ybar = y.iter().filter(|&&b| b).count() as f64 / y.len() as f64;
    let beta = fit_design(&y, &vec![vec![]; y.len()], &[])?;
    let want = (ybar / (1.0 - ybar)).ln();
    ensure!(
        close(beta[0], want, 1e-6),
        "intercept {} vs {want}",
        beta[0]
    );

    // single binary regressor: a/b successes/failures at x=1, c/d at x=0
    let (a, b, c, d) = (30usize, 12usize, 18usize, 40usize);
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (n, yi, xi) in [
        (a, true, 1.0),
        (b, false, 1.0),
        (c, true, 0.0),
        (d, false, 0.0),
    ] {
        for _ in 0..n {
            y.push(yi);
            rows.push(vec![xi]);
        }
    }
    let beta = fit_design(&y, &rows, &["x"])?;
    let log_or = ((a as f64 * d as f64) / (b as f64 * c as f64)).ln();
    let base = (c as f64 / d as f64).ln();
    ensure!(
        close(beta[1], log_or, 1e-6),
        "slope {} vs {log_or}",
        beta[1]
    );
    ensure!(
        close(beta[0], base, 1e-6),
        "intercept {} vs {base}",
        beta[0]
    );

    // Newton optimum against a 0.01 grid search of an independent likelihood
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let x: Vec<f64> = (0..500).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let y: Vec<bool> = x
        .iter()
        .map(|&xi| rng.gen::<f64>() < 1.0 / (1.0 + (-(-1.0 + 0.8 * xi)).exp()))
        .collect();
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    let beta = fit_design(&y, &rows, &["x"])?;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=300 {
        let b0 = -2.5 + 0.01 * i as f64;
        for j in 0..=300 {
            let b1 = -0.7 + 0.01 * j as f64;
            let ll = oracle_ll(&y, &x, b0, b1);
            if ll > best.0 {
                best = (ll, b0, b1);
            }
        }
    }
    ensure!(
        close(beta[0], best.1, 0.02) && close(beta[1], best.2, 0.02),
        "newton ({:.4}, {:.4}) vs grid ({:.2}, {:.2})",
        beta[0],
        beta[1],
        best.1,
        best.2
    );
    Ok(format!(
        "newton ({:.4}, {:.4}), grid ({:.2}, {:.2})",
        beta[0], beta[1], best.1, best.2
    ))
}

fn random_design(rng: &mut ChaCha8Rng) -> (DesignData, Vec<f64>) {
    let n = rng.gen_range(20..80);
    let k = rng.gen_range(1..5);
    let y: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    let data = DesignData::from_features(&y, &rows, &names).expect("valid design");
    let beta = (0..=k).map(|_| rng.gen_range(-1.5..1.5)).collect();
    (data, beta)
}

// 4
fn derivative_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    let mut worst_eig = f64::NEG_INFINITY;
    for inst in 0..20 {
        let (data, beta) = random_design(&mut rng);
        let g = gradient(&data, &beta);
        let fd: Vec<f64> = (0..beta.len())
            .map(|j| {
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[j] += h;
                dn[j] -= h;
                (log_likelihood(&data, &up) - log_likelihood(&data, &dn)) / (2.0 * h)
            })
            .collect();
        let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rel = g
            .iter()
            .zip(&fd)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        ensure!(
            rel <= 1e-6,
            "instance {inst}: gradient relative error {rel:e}"
        );
        worst_rel = worst_rel.max(rel);

        let hm = hessian(&data, &beta);
        let k = hm.rows();
        for i in 0..k {
            for j in 0..k {
                ensure!(
                    hm[(i, j)] == hm[(j, i)],
                    "instance {inst}: Hessian asymmetric"
                );
            }
        }
        let eig = DMatrix::from_row_slice(k, k, hm.as_slice()).symmetric_eigen();
        let top = eig.eigenvalues.max();
        ensure!(top <= 1e-8, "instance {inst}: eigenvalue {top:e}");
        worst_eig = worst_eig.max(top);
    }
    Ok(format!(
        "max gradient error {worst_rel:.1e}, max eigenvalue {worst_eig:.3e}"
    ))
}

// 5
fn level_percentages() -> Outcome {
    let mut got = Vec::new();
    for (level, count, want) in [
        ("Female", 13061u64, "36.182"),
        ("White", 31431, "87.071"),
        ("Asian", 2780, "7.701"),
    ] {
        let s = summary_from_counts([
            (level.to_string(), count),
            ("Other".to_string(), 36098 - count),
        ]);
        let row = s
            .rows
            .iter()
            .find(|r| r.level == level)
            .ok_or_else(|| format!("{level} missing"))?;
        let shown = fmt3(row.percentage);
        ensure!(shown == want, "{level}: {shown} vs {want}");
        got.push(shown);
    }
    Ok(got.join(", "))
}

// 6
fn name_classifiers() -> Outcome {
    let toy = [
        NameExample::new("aa", "F"),
        NameExample::new("aa", "F"),
        NameExample::new("aa", "F"),
        NameExample::new("bb", "M"),
    ];
    let nb = train(&toy, &TrainConfig::new(Task::Gender, Algorithm::NaiveBayes))
        .map_err(|e| e.to_string())?;
    let ModelParams::NaiveBayes {
        log_priors,
        letter_log_probs,
    } = &nb.params
    else {
        return Err("not a naive Bayes model".into());
    };
    ensure!(close(log_priors[0].exp(), 0.75, 1e-12), "prior(F)");
    ensure!(
        close(letter_log_probs[0][0].exp(), 7.0 / 32.0, 1e-12),
        "P(a|F)"
    );
    let pred = nb.predict("a").map_err(|e| e.to_string())?;
    let f = 0.75 * 7.0 / 32.0;
    let m = 0.25 * 1.0 / 28.0;
    let want = f / (f + m);
    ensure!(pred.label == "F", "predicted {}", pred.label);
    ensure!(
        close(pred.score, want, 1e-9),
        "posterior {} vs {want}",
        pred.score
    );

    let mut data = Vec::new();
    for _ in 0..200 {
        data.push(NameExample::new("aaaa", "F"));
        data.push(NameExample::new("bbbb", "M"));
    }
    let mut accs = Vec::new();
    for alg in [Algorithm::NaiveBayes, Algorithm::DecisionTree] {
        let mut cfg = TrainConfig::new(Task::Gender, alg);
        cfg.seed = 10;
        let rep = cross_validate(&data, 10, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            rep.total() == 400,
            "{alg}: pooled {} predictions",
            rep.total()
        );
        ensure!(rep.accuracy >= 0.95, "{alg}: accuracy {}", rep.accuracy);
        accs.push(format!("{alg} {:.3}", rep.accuracy));
    }

    let folds = kfold_partition(400, 10, 10);
    ensure!(folds.len() == 10, "{} folds", folds.len());
    let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
    ensure!(folds.iter().all(|f| f.len() == 40), "unequal folds");
    seen.sort_unstable();
    ensure!(
        seen == (0..400).collect::<Vec<_>>(),
        "folds not a disjoint cover"
    );
    Ok(format!("posterior {:.6}, {}", pred.score, accs.join(", ")))
}

fn corpus_of(docs: Vec<Vec<String>>) -> Corpus {
    let docs: Vec<TokenizedDoc> = docs
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| TokenizedDoc {
            post_id: i.to_string(),
            tokens,
        })
        .collect();
    build_corpus(&docs, 1).expect("nonempty corpus")
}

/// Two groups of ten words; every document holds each word of its group twice.
fn disjoint_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let docs = (0..100)
        .map(|d| {
            let prefix = if d % 2 == 0 { "alpha" } else { "beta" };
            let mut toks: Vec<String> = (0..20).map(|i| format!("{prefix}{}", i % 10)).collect();
            toks.shuffle(&mut rng);
            toks
        })
        .collect();
    corpus_of(docs)
}

// 7
fn lda_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let docs = (0..50)
        .map(|_| {
            let len = rng.gen_range(3..25);
            (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..40)))
                .collect()
        })
        .collect();
    let corpus = corpus_of(docs);
    let mut sampler = GibbsSampler::new(&corpus, 4, 0.5, 0.01, 3).map_err(|e| e.to_string())?;
    for s in 0..50 {
        sampler.sweep();
        ensure!(sampler.counts_consistent(), "counts drift after sweep {s}");
    }
    let model = sampler.into_model();
    let mut recount = vec![vec![0u32; corpus.vocabulary.len()]; 4];
    for (doc, z) in corpus.docs.iter().zip(&model.assignments) {
        for (&w, &t) in doc.iter().zip(z) {
            recount[t][w] += 1;
        }
    }
    ensure!(
        recount == model.topic_word,
        "final topic-word counts differ"
    );

    let single = corpus_of(vec![vec!["bus".to_string(); 4], vec!["bus".to_string(); 2]]);
    let cfg = LdaConfig {
        alpha: Some(0.1),
        beta: 0.01,
        iterations: 20,
        seed: 1,
    };
    let m = fit_lda(&single, 3, &cfg).map_err(|e| e.to_string())?;
    for t in 0..3 {
        ensure!(m.phi(t, 0) == 1.0, "phi({t}) = {}", m.phi(t, 0));
    }

    let corpus = disjoint_corpus();
    let cfg = LdaConfig {
        alpha: Some(0.1),
        beta: 0.01,
        iterations: 200,
        seed: 2023,
    };
    let m = fit_lda(&corpus, 2, &cfg).map_err(|e| e.to_string())?;
    let mut purities = Vec::new();
    for t in 0..2 {
        let words = top_words(&m, t, 10).map_err(|e| e.to_string())?;
        let alpha = words.iter().filter(|(w, _)| w.starts_with("alpha")).count();
        let purity = alpha.max(words.len() - alpha) as f64 / words.len() as f64;
        ensure!(purity >= 0.9, "topic {t} purity {purity}");
        purities.push(purity);
    }
    let sel = select_k(&corpus, 2, 5, &cfg, 10).map_err(|e| e.to_string())?;
    ensure!(
        sel.best_k == 2,
        "select_k picked {} ({:?})",
        sel.best_k,
        sel.scores
    );

    // w1 in 5 docs, w2 in 4 docs, always alongside w1; w3 in 4 docs, never with w2
    let hand = corpus_of(vec![
        vec!["w1".into(), "w2".into()],
        vec!["w1".into(), "w2".into()],
        vec!["w1".into(), "w2".into()],
        vec!["w1".into(), "w2".into()],
        vec!["w1".into(), "w3".into()],
        vec!["w3".into()],
        vec!["w3".into()],
        vec!["w3".into()],
    ]);
    let co = CoOccurrence::new(&hand);
    let id = |w: &str| hand.vocabulary.id(w).expect("in vocabulary");
    let a = umass_topic(&[id("w2"), id("w1")], &co, &hand.vocabulary).map_err(|e| e.to_string())?;
    let b = umass_topic(&[id("w2"), id("w3")], &co, &hand.vocabulary).map_err(|e| e.to_string())?;
    ensure!(
        close(a, (5.0f64 / 4.0).ln(), 1e-12) && close(a, 0.2231, 1e-4),
        "umass {a}"
    );
    ensure!(close(b, -1.3863, 1e-4), "umass {b}");
    Ok(format!(
        "purity {purities:?}, best K {}, umass {a:.4} / {b:.4}",
        sel.best_k
    ))
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    let data = (0..r * c).map(|_| rng.gen_range(-scale..scale)).collect();
    Matrix::new(r, c, data).expect("sized")
}

fn random_params(
    rng: &mut ChaCha8Rng,
    heads: usize,
    d: usize,
    dk: usize,
    dv: usize,
) -> AttentionParams {
    AttentionParams {
        heads: (0..heads)
            .map(|_| AttentionHead {
                w_q: random_matrix(rng, d, dk, 1.0),
                w_k: random_matrix(rng, d, dk, 1.0),
                w_v: random_matrix(rng, d, dv, 1.0),
            })
            .collect(),
    }
}

// 8
fn attention_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let e = |s: String| s;
    for _ in 0..20 {
        let n = rng.gen_range(1..7);
        let y = random_matrix(&mut rng, n, 4, 2.0);
        let params = random_params(&mut rng, 2, 4, 3, 2);
        for w in head_weights(&y, &params).map_err(|x| e(x.to_string()))? {
            for i in 0..n {
                let s: f64 = w.row(i).iter().sum();
                ensure!(close(s, 1.0, 1e-12), "row sum {s}");
                ensure!(w.row(i).iter().all(|&v| v > 0.0), "nonpositive weight");
            }
        }
    }

    let q = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).expect("rows");
    let w = attention_weights(&q, &q, 2).map_err(|x| x.to_string())?;
    ensure!(
        w.as_slice().iter().all(|&v| v == 1.0 / 3.0),
        "uniform case {:?}",
        w
    );
    let one = Matrix::from_rows(&[[0.3, -1.2]]).expect("rows");
    let w = attention_weights(&one, &one, 2).map_err(|x| x.to_string())?;
    ensure!(w.as_slice() == [1.0], "singleton {:?}", w);

    let q = Matrix::from_rows(&[[1.0]]).expect("rows");
    let k = Matrix::from_rows(&[[1.0], [0.0]]).expect("rows");
    let w = attention_weights(&q, &k, 1).map_err(|x| x.to_string())?;
    ensure!(
        close(w[(0, 0)], 0.7311, 1e-4) && close(w[(0, 1)], 0.2689, 1e-4),
        "hand softmax {:?}",
        w
    );

    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.gen_range(1..5);
        let d = 3;
        let y = random_matrix(&mut rng, n, d, 1.5);
        let params = random_params(&mut rng, 2, d, 2, 2);
        let jac = jacobian(&y, &params).map_err(|x| x.to_string())?;
        let mut fd = Matrix::zeros(jac.rows(), jac.cols());
        for col in 0..n * d {
            let mut up = y.clone();
            let mut dn = y.clone();
            up[(col / d, col % d)] += h;
            dn[(col / d, col % d)] -= h;
            let ou = multi_head(&up, &params).map_err(|x| x.to_string())?;
            let od = multi_head(&dn, &params).map_err(|x| x.to_string())?;
            for (r, (a, b)) in ou.as_slice().iter().zip(od.as_slice()).enumerate() {
                fd[(r, col)] = (a - b) / (2.0 * h);
            }
        }
        let scale = fd.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rel = jac.max_abs_diff(&fd).expect("same shape") / scale;
        ensure!(rel <= 1e-5, "Jacobian relative error {rel:e}");
        worst = worst.max(rel);
    }

    let y = Matrix::from_rows(&[[100.0], [-100.0], [50.0]]).expect("rows");
    let id = Matrix::from_rows(&[[1.0]]).expect("rows");
    let params = AttentionParams::single(id.clone(), id.clone(), id);
    let out = multi_head(&y, &params).map_err(|x| x.to_string())?;
    let w = &head_weights(&y, &params).map_err(|x| x.to_string())?[0];
    ensure!(out.is_finite() && w.is_finite(), "non-finite at logits 1e4");
    ensure!(close(w[(0, 0)], 1.0, 1e-12), "saturated row {:?}", w.row(0));
    Ok(format!("max Jacobian error {worst:.1e}"))
}

fn unit_square(geoid: &str, x0: f64) -> BlockGroupPolygon {
    BlockGroupPolygon::simple(
        Geoid::new(geoid).expect("12 chars"),
        vec![
            (x0, 0.0),
            (x0 + 1.0, 0.0),
            (x0 + 1.0, 1.0),
            (x0, 1.0),
            (x0, 0.0),
        ],
    )
    .expect("valid ring")
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

fn copy_fixture(to: &Path) -> std::io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(fixture_dir())? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            fs::copy(entry.path(), to.join(entry.file_name()))?;
        }
    }
    Ok(())
}

fn run_in(dir: &Path, out: &Path) -> Result<(), String> {
    let mut cfg = RunConfig::load(&dir.join("config.toml")).map_err(|e| e.to_string())?;
    cfg.output_dir = out.to_path_buf();
    run(&cfg).map(|_| ()).map_err(|e| e.to_string())
}

/// Serves one canned HTTP response per connection.
fn stub_server(responses: Vec<(u16, &'static str)>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    thread::spawn(move || {
        for (status, body) in responses {
            let Ok((mut stream, _)) = listener.accept() else {
                return;
            };
            let mut buf = Vec::new();
            let mut chunk = [0u8; 512];
            while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
                match stream.read(&mut chunk) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => buf.extend_from_slice(&chunk[..n]),
                }
            }
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    format!("http://{addr}/geocode")
}

// 9
fn geo_checks() -> Outcome {
    let first = unit_square("360610001001", 0.0);
    let second = unit_square("360610001002", 2.0);
    let polys = [first.clone()];
    ensure!(
        locate(0.5, 0.5, &polys).map(Geoid::as_str) == Some("360610001001"),
        "interior point"
    );
    ensure!(locate(2.0, 2.0, &polys).is_none(), "exterior point");
    let both = [first, second];
    ensure!(
        locate(0.5, 2.5, &both).map(Geoid::as_str) == Some("360610001002"),
        "second square"
    );

    let empty = AttributeTable::from_rows(vec![]).map_err(|e| e.to_string())?;
    let missing = Geoid::new("360610001001").expect("12 chars");
    ensure!(
        join_attributes(&missing, &empty).is_err(),
        "absent key joined"
    );

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path().join("in");
    copy_fixture(&dir).map_err(|e| e.to_string())?;
    // a block group with no attribute row, covering the fixture's off-grid posts
    let dropped = "360610999001";
    let path = dir.join("block_groups.geojson");
    let mut geo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    geo["features"]
        .as_array_mut()
        .ok_or("no features")?
        .push(serde_json::json!({
            "type": "Feature",
            "properties": {"GEOID": dropped},
            "geometry": {"type": "Polygon", "coordinates": [[
                [-74.03, 40.745], [-73.97, 40.745], [-73.97, 40.765], [-74.03, 40.765], [-74.03, 40.745]
            ]]}
        }));
    fs::write(&path, geo.to_string()).map_err(|e| e.to_string())?;
    run_in(&dir, &tmp.path().join("out"))?;
    let fusion: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/fusion.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let errors = fusion["unmatched_attributes"]
        .as_array()
        .ok_or("no unmatched list")?;
    ensure!(!errors.is_empty(), "no unmatched joins collected");
    ensure!(
        errors.iter().all(|e| {
            let msg = e["error"].as_str().unwrap_or("");
            msg.contains("unmatched block group") && msg.contains(dropped)
        }),
        "unexpected unmatched entry {:?}",
        errors.first()
    );

    let url = stub_server(vec![
        (200, r#"{"geoid":"360610001001"}"#),
        (500, r#"{"error":"boom"}"#),
        (200, r#"{"block":"x"}"#),
    ]);
    let client = RemoteGeocoder::new(url).with_timeout(Duration::from_secs(5));
    let g = client.fetch_geoid(40.7, -74.0).map_err(|e| e.to_string())?;
    ensure!(g.as_str() == "360610001001", "stub echoed {g}");
    let far = unit_square("360610009001", -75.0);
    let fallback = resolve_geoid(0.5, -74.5, &[far], Some(&client));
    ensure!(
        fallback.source == GeoidSource::Local
            && fallback.remote_error == Some(RemoteError::Status(500))
            && fallback.geoid.as_ref().map(Geoid::as_str) == Some("360610009001"),
        "fallback {fallback:?}"
    );
    ensure!(
        matches!(client.fetch_geoid(0.0, 0.0), Err(RemoteError::Malformed(_))),
        "missing geoid field accepted"
    );
    Ok(format!("{} unmatched joins collected", errors.len()))
}

// 10
fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_in(&fixture_dir(), &a)?;
    run_in(&fixture_dir(), &b)?;
    let cfg = RunConfig::load(&fixture_dir().join("config.toml")).map_err(|e| e.to_string())?;
    ensure!(!cfg.models.is_empty(), "no models configured");
    for spec in &cfg.models {
        for file in model_files(&spec.name) {
            let x = fs::read(a.join(&file)).map_err(|e| format!("{file}: {e}"))?;
            let y = fs::read(b.join(&file)).map_err(|e| format!("{file}: {e}"))?;
            ensure!(x == y, "{file} differs between runs");
        }
        let csv = fs::read_to_string(a.join(format!("model_{}.csv", spec.name)))
            .map_err(|e| e.to_string())?;
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(String::from)
            .collect();
        ensure!(
            header == ["variable", "parameter", "t-stat"],
            "header {header:?}"
        );
        let rows: Vec<csv::StringRecord> = reader
            .records()
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let labels: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
        ensure!(
            labels[..4] == [ROW_N_OBS, ROW_LL_FULL, ROW_LL_NULL, ROW_RHO],
            "summary rows {:?}",
            &labels[..4.min(labels.len())]
        );
        ensure!(
            rows[..4].iter().all(|r| r[2].is_empty()),
            "summary t-stat filled"
        );
        let recipe = spec.recipe().map_err(|e| e.to_string())?;
        let mut want = vec!["Constant".to_string()];
        want.extend(recipe.names());
        ensure!(labels[4..] == want, "coefficient rows {:?}", &labels[4..]);
        for r in &rows {
            ensure!(
                r[1].parse::<f64>().is_ok(),
                "unparsable parameter {:?}",
                &r[1]
            );
        }
    }
    Ok(format!(
        "{} model tables identical across runs",
        cfg.models.len()
    ))
}

/// Writes straight to stdout so the verdicts show without `--nocapture`.
fn line(text: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("null log-likelihood", 1, null_ll),
        ("adjusted rho-squared reproduction", 1, rho_reproduction),
        ("logit oracle equivalence", 10, logit_oracles),
        ("gradient and Hessian checks", 5, derivative_checks),
        ("categorical percentages", 1, level_percentages),
        ("name classifiers", 10, name_classifiers),
        ("LDA", 60, lda_checks),
        ("attention kernel", 5, attention_checks),
        ("geo fusion", 60, geo_checks),
        ("end-to-end pipeline", 120, end_to_end),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(detail) if secs > limit as f64 => {
                Err(format!("{detail}; took {secs:.1} s, limit {limit} s"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => line(format!("PASS {:>2} {name}: {detail} ({secs:.2} s)", i + 1)),
            Err(why) => {
                line(format!("FAIL {:>2} {name}: {why} ({secs:.2} s)", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
