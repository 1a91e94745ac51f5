//! Independent literal-formula oracles shared by the integration suites.
//! Written against plain nested vectors in `[h][w][c]` order so they share
//! no indexing code with the library.
#![allow(dead_code)]

use dynser::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Map3 = Vec<Vec<Vec<f64>>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sample `b` of an NCHW tensor as `[h][w][c]`.
pub fn to_hwc(t: &Tensor, b: usize) -> Map3 {
    let s = t.shape();
    let (c, h, w) = (s[1], s[2], s[3]);
    (0..h)
        .map(|i| (0..w).map(|j| (0..c).map(|k| t.get(&[b, k, i, j])).collect()).collect())
        .collect()
}

/// Row-major matrix as nested rows.
pub fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    let s = t.shape();
    let n: usize = s[1..].iter().product();
    t.data().chunks(n).map(|r| r.to_vec()).collect()
}

fn matvec(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `M_c = σ(W1 relu(W0 avg) + W1 relu(W0 max))`.
pub fn channel_attention(f: &Map3, w0: &[Vec<f64>], w1: &[Vec<f64>]) -> Vec<f64> {
    let (h, w, c) = (f.len(), f[0].len(), f[0][0].len());
    let mut avg = vec![0.0; c];
    let mut max = vec![f64::NEG_INFINITY; c];
    for row in f {
        for px in row {
            for k in 0..c {
                avg[k] += px[k] / (h * w) as f64;
                max[k] = max[k].max(px[k]);
            }
        }
    }
    let mlp = |v: &[f64]| {
        let hidden: Vec<f64> = matvec(w0, v).into_iter().map(|x| x.max(0.0)).collect();
        matvec(w1, &hidden)
    };
    let (a, m) = (mlp(&avg), mlp(&max));
    a.iter().zip(&m).map(|(x, y)| sig(x + y)).collect()
}

/// Zero-padded cross-correlation of `[cin][h][w]` with `[cout][cin][k][k]`.
pub fn conv_same(x: &[Vec<Vec<f64>>], kernel: &[Vec<Vec<Vec<f64>>>]) -> Vec<Vec<Vec<f64>>> {
    let (cin, h, w) = (x.len(), x[0].len(), x[0][0].len());
    let k = kernel[0][0].len();
    let p = (k as isize - 1) / 2;
    kernel
        .iter()
        .map(|kc| {
            (0..h)
                .map(|i| {
                    (0..w)
                        .map(|j| {
                            let mut acc = 0.0;
                            for ci in 0..cin {
                                for u in 0..k {
                                    for v in 0..k {
                                        let (y, z) = (i as isize + u as isize - p, j as isize + v as isize - p);
                                        if y >= 0 && z >= 0 && (y as usize) < h && (z as usize) < w {
                                            acc += kc[ci][u][v] * x[ci][y as usize][z as usize];
                                        }
                                    }
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `M_s = σ(f^{k×k}([avg_c F; max_c F]))` for a `[2][k][k]` kernel.
pub fn spatial_attention(f: &Map3, kernel: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let pooled = pooled_maps(f);
    let out = conv_same(&pooled, &[kernel.to_vec()]);
    out[0].iter().map(|r| r.iter().map(|&v| sig(v)).collect()).collect()
}

/// Channel-mean and channel-max maps as `[2][h][w]`.
pub fn pooled_maps(f: &Map3) -> Vec<Vec<Vec<f64>>> {
    let avg: Vec<Vec<f64>> = f.iter().map(|r| r.iter().map(|px| px.iter().sum::<f64>() / px.len() as f64).collect()).collect();
    let max: Vec<Vec<f64>> = f
        .iter()
        .map(|r| r.iter().map(|px| px.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect())
        .collect();
    vec![avg, max]
}

/// ODConv head: pooled → FC → relu → four FCs; sigmoid ×3, softmax.
pub struct Head {
    pub fc: (Vec<Vec<f64>>, Vec<f64>),
    pub spatial: (Vec<Vec<f64>>, Vec<f64>),
    pub input: (Vec<Vec<f64>>, Vec<f64>),
    pub output: (Vec<Vec<f64>>, Vec<f64>),
    pub kernel: (Vec<Vec<f64>>, Vec<f64>),
}

pub struct Attn {
    pub spatial: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub kernel: Vec<f64>,
}

pub fn odconv_head(x: &[Vec<Vec<f64>>], head: &Head) -> Attn {
    let pooled: Vec<f64> = x
        .iter()
        .map(|ch| ch.iter().flatten().sum::<f64>() / (ch.len() * ch[0].len()) as f64)
        .collect();
    let affine = |(w, b): &(Vec<Vec<f64>>, Vec<f64>), v: &[f64]| -> Vec<f64> {
        matvec(w, v).iter().zip(b).map(|(x, y)| x + y).collect()
    };
    let hidden: Vec<f64> = affine(&head.fc, &pooled).into_iter().map(|v| v.max(0.0)).collect();
    let logits = affine(&head.kernel, &hidden);
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - mx).exp()).collect();
    let z: f64 = e.iter().sum();
    Attn {
        spatial: affine(&head.spatial, &hidden).into_iter().map(sig).collect(),
        input: affine(&head.input, &hidden).into_iter().map(sig).collect(),
        output: affine(&head.output, &hidden).into_iter().map(sig).collect(),
        kernel: e.iter().map(|v| v / z).collect(),
    }
}

/// `W = Σ_m α_w[m] (α_s ⊙ α_c ⊙ α_f ⊙ w_m)`, then convolve.
/// `bank[m][o][i][u][v]`, `spatial` flattened `k·k`.
pub fn odconv(x: &[Vec<Vec<f64>>], bank: &[Vec<Vec<Vec<Vec<f64>>>>], a: &Attn) -> Vec<Vec<Vec<f64>>> {
    let (cout, cin, k) = (bank[0].len(), bank[0][0].len(), bank[0][0][0].len());
    let mut w = vec![vec![vec![vec![0.0; k]; k]; cin]; cout];
    for (m, wm) in bank.iter().enumerate() {
        for o in 0..cout {
            for i in 0..cin {
                for u in 0..k {
                    for v in 0..k {
                        w[o][i][u][v] += a.kernel[m] * (a.spatial[u * k + v] * a.input[i] * a.output[o] * wm[o][i][u][v]);
                    }
                }
            }
        }
    }
    conv_same(x, &w)
}

/// Nested view of a 5-D `[m, o, i, k, k]` tensor.
pub fn bank(t: &Tensor) -> Vec<Vec<Vec<Vec<Vec<f64>>>>> {
    let s = t.shape();
    (0..s[0])
        .map(|m| {
            (0..s[1])
                .map(|o| {
                    (0..s[2])
                        .map(|i| (0..s[3]).map(|u| (0..s[4]).map(|v| t.get(&[m, o, i, u, v])).collect()).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Sample `b` of an NCHW tensor as `[c][h][w]`.
pub fn to_chw(t: &Tensor, b: usize) -> Vec<Vec<Vec<f64>>> {
    let s = t.shape();
    (0..s[1])
        .map(|c| (0..s[2]).map(|i| (0..s[3]).map(|j| t.get(&[b, c, i, j])).collect()).collect())
        .collect()
}

/// One GRU step, line by line.
pub struct GruMats<'a> {
    pub w_ir: &'a [Vec<f64>],
    pub w_iz: &'a [Vec<f64>],
    pub w_in: &'a [Vec<f64>],
    pub w_hr: &'a [Vec<f64>],
    pub w_hz: &'a [Vec<f64>],
    pub w_hn: &'a [Vec<f64>],
    pub b_ir: &'a [f64],
    pub b_iz: &'a [f64],
    pub b_in: &'a [f64],
    pub b_hr: &'a [f64],
    pub b_hz: &'a [f64],
    pub b_hn: &'a [f64],
}

pub fn gru_step(x: &[f64], h: &[f64], g: &GruMats<'_>) -> Vec<f64> {
    let n_h = h.len();
    let (xr, hr) = (matvec(g.w_ir, x), matvec(g.w_hr, h));
    let (xz, hz) = (matvec(g.w_iz, x), matvec(g.w_hz, h));
    let (xn, hn) = (matvec(g.w_in, x), matvec(g.w_hn, h));
    let mut out = vec![0.0; n_h];
    for j in 0..n_h {
        let r = sig(xr[j] + g.b_ir[j] + hr[j] + g.b_hr[j]);
        let z = sig(xz[j] + g.b_iz[j] + hz[j] + g.b_hz[j]);
        let n = (xn[j] + g.b_in[j] + r * (hn[j] + g.b_hn[j])).tanh();
        out[j] = (1.0 - z) * n + z * h[j];
    }
    out
}

/// Naive softmax then `-mean log p[label]`.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &l) in logits.iter().zip(labels) {
        let e: Vec<f64> = row.iter().map(|v| v.exp()).collect();
        let z: f64 = e.iter().sum();
        total += -(e[l] / z).ln();
    }
    total / labels.len() as f64
}

pub struct OracleMetrics {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub ua: f64,
    pub wa: f64,
}

/// Straight from the definitions: TP, FP, FN per class; UA = mean recall;
/// WA = correct / total.
pub fn metrics(cm: &[Vec<u64>]) -> OracleMetrics {
    let n = cm.len();
    let mut precision = vec![0.0; n];
    let mut recall = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut correct = 0u64;
    let mut total = 0u64;
    for o in 0..n {
        let tp = cm[o][o];
        let mut fp = 0;
        let mut fn_ = 0;
        for other in 0..n {
            if other != o {
                fp += cm[other][o];
                fn_ += cm[o][other];
            }
        }
        precision[o] = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        recall[o] = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        f1[o] = if precision[o] + recall[o] == 0.0 {
            0.0
        } else {
            2.0 * precision[o] * recall[o] / (precision[o] + recall[o])
        };
        correct += tp;
        total += cm[o].iter().sum::<u64>();
    }
    OracleMetrics {
        ua: recall.iter().sum::<f64>() / n as f64,
        wa: correct as f64 / total as f64,
        precision,
        recall,
        f1,
    }
}

/// `X[k] = Σ x[n] e^{-2πikn/N}` summed directly, returned as `|X[k]|²`
/// for `k = 0..=N/2`.
pub fn direct_power(frame: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in frame.iter().enumerate() {
                let a = -std::f64::consts::TAU * (k * i) as f64 / n as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            re * re + im * im
        })
        .collect()
}
