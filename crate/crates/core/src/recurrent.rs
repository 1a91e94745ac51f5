//! GRU cell, fused GRU sequence op and (bi)directional stacks.
//!
//! Sequences are `[B, T, D]`; hidden states are `[B, H]`.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Mode, Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{init, ParamStore, Session};
use crate::tensor::Tensor;

/// The twelve GRU matrices and biases, bound onto a tape.
///
/// Input weights are `[H, D]`, recurrent weights `[H, H]`, biases `[H]`.
#[derive(Clone, Copy, Debug)]
pub struct GruWeights {
    pub w_ir: Var,
    pub w_iz: Var,
    pub w_in: Var,
    pub w_hr: Var,
    pub w_hz: Var,
    pub w_hn: Var,
    pub b_ir: Var,
    pub b_iz: Var,
    pub b_in: Var,
    pub b_hr: Var,
    pub b_hz: Var,
    pub b_hn: Var,
}

pub const GRU_PARAM_NAMES: [&str; 12] = [
    "w_ir", "w_iz", "w_in", "w_hr", "w_hz", "w_hn", "b_ir", "b_iz", "b_in", "b_hr", "b_hz", "b_hn",
];

impl GruWeights {
    fn as_array(&self) -> [Var; 12] {
        [
            self.w_ir, self.w_iz, self.w_in, self.w_hr, self.w_hz, self.w_hn, self.b_ir, self.b_iz, self.b_in,
            self.b_hr, self.b_hz, self.b_hn,
        ]
    }

    fn from_slice(v: &[Var]) -> Self {
        GruWeights {
            w_ir: v[0],
            w_iz: v[1],
            w_in: v[2],
            w_hr: v[3],
            w_hz: v[4],
            w_hn: v[5],
            b_ir: v[6],
            b_iz: v[7],
            b_in: v[8],
            b_hr: v[9],
            b_hz: v[10],
            b_hn: v[11],
        }
    }

    /// `(D, H)` after checking that every matrix agrees.
    pub fn dims(&self, tape: &Tape) -> Result<(usize, usize)> {
        let h = tape.shape(self.w_hr).first().copied().unwrap_or(0);
        let d = tape.shape(self.w_ir).get(1).copied().unwrap_or(0);
        for (name, v) in GRU_PARAM_NAMES.iter().zip(self.as_array()) {
            let want: &[usize] = match name.as_bytes()[0] {
                b'b' => &[h],
                _ if name.as_bytes()[2] == b'i' => &[h, d],
                _ => &[h, h],
            };
            if tape.shape(v) != want {
                return Err(Error::dim(format!(
                    "GRU {name} must be {want:?}, got {:?}",
                    tape.shape(v)
                )));
            }
        }
        Ok((d, h))
    }

    /// Registers GRU parameters under `prefix` with `U(-1/sqrt(H), 1/sqrt(H))`.
    pub fn init(prefix: &str, input: usize, hidden: usize, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        for name in GRU_PARAM_NAMES {
            let shape = match name.as_bytes() {
                [b'b', ..] => vec![hidden],
                [_, _, b'i', _] => vec![hidden, input],
                _ => vec![hidden, hidden],
            };
            store.insert_param(format!("{prefix}.{name}"), init::fan_in(shape, hidden, rng));
        }
    }

    pub fn bind(prefix: &str, s: &mut Session<'_>) -> Result<Self> {
        let vars = GRU_PARAM_NAMES
            .iter()
            .map(|n| s.param(&format!("{prefix}.{n}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_slice(&vars))
    }
}

fn gate(tape: &mut Tape, x: Var, h: Var, wi: Var, bi: Var, wh: Var, bh: Var) -> Result<(Var, Var)> {
    let a = tape.linear(x, wi, Some(bi))?;
    let b = tape.linear(h, wh, Some(bh))?;
    Ok((a, b))
}

/// One GRU step from primitive tape ops.
///
/// `r = σ(W_ir x + b_ir + W_hr h + b_hr)`, `z` likewise,
/// `n = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))`, `h' = (1 - z) ⊙ n + z ⊙ h`.
pub fn gru_cell(tape: &mut Tape, x: Var, h_prev: Var, w: &GruWeights) -> Result<Var> {
    let (d, h) = w.dims(tape)?;
    if tape.shape(x).last() != Some(&d) || tape.shape(h_prev).last() != Some(&h) {
        return Err(Error::dim(format!(
            "GRU cell expects x [.., {d}] and h [.., {h}], got {:?} and {:?}",
            tape.shape(x),
            tape.shape(h_prev)
        )));
    }
    let (a, b) = gate(tape, x, h_prev, w.w_ir, w.b_ir, w.w_hr, w.b_hr)?;
    let r = tape.add(a, b)?;
    let r = tape.sigmoid(r);
    let (a, b) = gate(tape, x, h_prev, w.w_iz, w.b_iz, w.w_hz, w.b_hz)?;
    let z = tape.add(a, b)?;
    let z = tape.sigmoid(z);
    let (a, b) = gate(tape, x, h_prev, w.w_in, w.b_in, w.w_hn, w.b_hn)?;
    let rb = tape.mul(r, b)?;
    let n = tape.add(a, rb)?;
    let n = tape.tanh(n);
    // (1 - z) n + z h = n + z (h - n)
    let diff = tape.sub(h_prev, n)?;
    let zd = tape.mul(z, diff)?;
    tape.add(n, zd)
}

fn matvec(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        *o = b[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += W^T g`.
fn matvec_t_acc(w: &[f64], g: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (i, gi) in g.iter().enumerate() {
        if *gi == 0.0 {
            continue;
        }
        let row = &w[i * cols..(i + 1) * cols];
        out.iter_mut().zip(row).for_each(|(o, r)| *o += gi * r);
    }
}

/// `W += g ⊗ x`.
fn outer_acc(w: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (i, gi) in g.iter().enumerate() {
        if *gi == 0.0 {
            continue;
        }
        let row = &mut w[i * cols..(i + 1) * cols];
        row.iter_mut().zip(x).for_each(|(r, xv)| *r += gi * xv);
    }
}

fn sigmoid(x: f64) -> f64 {
    crate::autodiff::sigmoid(x)
}

struct SeqCache {
    b: usize,
    t: usize,
    d: usize,
    h: usize,
    reverse: bool,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    /// `W_hn h_prev + b_hn` per step.
    hn: Vec<f64>,
}

impl SeqCache {
    /// Time index of the `k`-th processed step.
    fn step(&self, k: usize) -> usize {
        if self.reverse {
            self.t - 1 - k
        } else {
            k
        }
    }
}

/// GRU over a whole sequence as a single tape node with a hand-written
/// backpropagation-through-time rule.
///
/// With `reverse`, time runs from `T-1` down to `0` and step `t` of the
/// output holds the state after consuming `x[T-1..=t]`. `h0` defaults to
/// zeros. Output is `[B, T, H]`.
pub fn gru_sequence(tape: &mut Tape, xs: Var, h0: Option<Var>, w: &GruWeights, reverse: bool) -> Result<Var> {
    let (d, h) = w.dims(tape)?;
    let shape = tape.shape(xs).to_vec();
    let [b, t, dx] = shape[..] else {
        return Err(Error::dim(format!("GRU sequence must be [B, T, D], got {shape:?}")));
    };
    if dx != d {
        return Err(Error::dim(format!("GRU input width: weights expect {d}, sequence has {dx}")));
    }
    if t == 0 {
        return Err(Error::dim("GRU sequence needs at least one step"));
    }
    let h0 = match h0 {
        Some(v) if tape.shape(v) != [b, h] => {
            return Err(Error::dim(format!(
                "initial state must be [{b}, {h}], got {:?}",
                tape.shape(v)
            )))
        }
        Some(v) => v,
        None => tape.constant(Tensor::zeros(vec![b, h])),
    };
    let wv: Vec<&[f64]> = w.as_array().iter().map(|&v| tape.value(v).data()).collect();
    let x = tape.value(xs).data();
    let h0d = tape.value(h0).data();
    let mut cache = SeqCache {
        b,
        t,
        d,
        h,
        reverse,
        r: vec![0.0; b * t * h],
        z: vec![0.0; b * t * h],
        n: vec![0.0; b * t * h],
        hn: vec![0.0; b * t * h],
    };
    let mut out = vec![0.0; b * t * h];
    let (mut ar, mut br) = (vec![0.0; h], vec![0.0; h]);
    let (mut az, mut bz) = (vec![0.0; h], vec![0.0; h]);
    let (mut an, mut bn) = (vec![0.0; h], vec![0.0; h]);
    for bi in 0..b {
        let mut hp = h0d[bi * h..(bi + 1) * h].to_vec();
        for k in 0..t {
            let ti = cache.step(k);
            let xt = &x[(bi * t + ti) * d..][..d];
            matvec(wv[0], xt, wv[6], &mut ar);
            matvec(wv[3], &hp, wv[9], &mut br);
            matvec(wv[1], xt, wv[7], &mut az);
            matvec(wv[4], &hp, wv[10], &mut bz);
            matvec(wv[2], xt, wv[8], &mut an);
            matvec(wv[5], &hp, wv[11], &mut bn);
            let o = (bi * t + ti) * h;
            for j in 0..h {
                let r = sigmoid(ar[j] + br[j]);
                let z = sigmoid(az[j] + bz[j]);
                let n = (an[j] + r * bn[j]).tanh();
                let hv = n + z * (hp[j] - n);
                cache.r[o + j] = r;
                cache.z[o + j] = z;
                cache.n[o + j] = n;
                cache.hn[o + j] = bn[j];
                out[o + j] = hv;
                hp[j] = hv;
            }
        }
    }
    let cache = Arc::new(cache);
    let mut inputs = vec![xs, h0];
    inputs.extend(w.as_array());
    Ok(tape.custom(
        &inputs,
        Tensor::new(vec![b, t, h], out)?,
        Box::new(move |ctx| gru_sequence_backward(&cache, ctx)),
    ))
}

fn gru_sequence_backward(c: &SeqCache, ctx: &crate::autodiff::BackwardCtx<'_>) -> Vec<Option<Vec<f64>>> {
    let (b, t, d, h) = (c.b, c.t, c.d, c.h);
    let x = ctx.inputs[0].data();
    let h0 = ctx.inputs[1].data();
    let w: Vec<&[f64]> = ctx.inputs[2..].iter().map(|t| t.data()).collect();
    let out = ctx.output.data();
    let mut gx = vec![0.0; b * t * d];
    let mut gh0 = vec![0.0; b * h];
    let mut gw: Vec<Vec<f64>> = ctx.inputs[2..].iter().map(|t| vec![0.0; t.numel()]).collect();
    let (mut dar, mut daz, mut dan, mut dhn) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);
    for bi in 0..b {
        let mut dh = vec![0.0; h];
        for k in (0..t).rev() {
            let ti = c.step(k);
            let o = (bi * t + ti) * h;
            let hp: &[f64] = if k == 0 {
                &h0[bi * h..(bi + 1) * h]
            } else {
                let tp = c.step(k - 1);
                &out[(bi * t + tp) * h..][..h]
            };
            let mut dh_prev = vec![0.0; h];
            for j in 0..h {
                let g = dh[j] + ctx.grad[o + j];
                let (r, z, n, hn) = (c.r[o + j], c.z[o + j], c.n[o + j], c.hn[o + j]);
                let dn = g * (1.0 - z);
                let dz = g * (hp[j] - n);
                dh_prev[j] = g * z;
                dan[j] = dn * (1.0 - n * n);
                dhn[j] = dan[j] * r;
                dar[j] = dan[j] * hn * r * (1.0 - r);
                daz[j] = dz * z * (1.0 - z);
            }
            let xt = &x[(bi * t + ti) * d..][..d];
            outer_acc(&mut gw[0], &dar, xt);
            outer_acc(&mut gw[1], &daz, xt);
            outer_acc(&mut gw[2], &dan, xt);
            outer_acc(&mut gw[3], &dar, hp);
            outer_acc(&mut gw[4], &daz, hp);
            outer_acc(&mut gw[5], &dhn, hp);
            for j in 0..h {
                gw[6][j] += dar[j];
                gw[7][j] += daz[j];
                gw[8][j] += dan[j];
                gw[9][j] += dar[j];
                gw[10][j] += daz[j];
                gw[11][j] += dhn[j];
            }
            let gxt = &mut gx[(bi * t + ti) * d..][..d];
            matvec_t_acc(w[0], &dar, gxt);
            matvec_t_acc(w[1], &daz, gxt);
            matvec_t_acc(w[2], &dan, gxt);
            matvec_t_acc(w[3], &dar, &mut dh_prev);
            matvec_t_acc(w[4], &daz, &mut dh_prev);
            matvec_t_acc(w[5], &dhn, &mut dh_prev);
            dh = dh_prev;
        }
        gh0[bi * h..(bi + 1) * h].copy_from_slice(&dh);
    }
    let mut grads = vec![ctx.needs[0].then_some(gx), ctx.needs[1].then_some(gh0)];
    grads.extend(gw.into_iter().zip(&ctx.needs[2..]).map(|(g, &n)| n.then_some(g)));
    grads
}

/// Keep-mask with entries `1/(1-p)` (probability `1-p`) or `0`.
pub fn bernoulli_mask(shape: Vec<usize>, p: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::param(format!("dropout rate {p} must be in [0, 1)")));
    }
    let keep = 1.0 - p;
    Ok(Tensor::from_fn(shape, |_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }))
}

/// Inverted dropout; the identity in eval mode or when `p = 0`.
pub fn dropout(tape: &mut Tape, x: Var, p: f64, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Var> {
    let mask = bernoulli_mask(tape.shape(x).to_vec(), p, rng)?;
    if mode == Mode::Eval || p == 0.0 {
        return Ok(x);
    }
    let m = tape.constant(mask);
    tape.mul(x, m)
}

/// Forward and backward passes over `xs`, concatenated per step into
/// `[B, T, 2H]`.
pub fn bigru_forward(tape: &mut Tape, xs: Var, fwd: &GruWeights, bwd: &GruWeights) -> Result<Var> {
    let f = gru_sequence(tape, xs, None, fwd, false)?;
    let b = gru_sequence(tape, xs, None, bwd, true)?;
    tape.concat(&[f, b], 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruConfig {
    pub input: usize,
    pub hidden: usize,
    pub layers: usize,
    pub bidirectional: bool,
    /// Inverted-dropout rate between stacked layers.
    pub dropout: f64,
}

/// Output of a [`GruStack`].
#[derive(Clone, Copy, Debug)]
pub struct GruOutput {
    /// Top-layer states, `[B, T, H]` or `[B, T, 2H]`.
    pub sequence: Var,
    /// Utterance embedding: the last forward state, joined with the
    /// backward state after it has read the whole sequence when
    /// bidirectional.
    pub summary: Var,
}

/// Stacked (bi)directional GRU with parameters under
/// `{prefix}.l{layer}.{fwd,bwd}.{w_ir,..}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruStack {
    pub prefix: String,
    pub config: GruConfig,
}

impl GruStack {
    pub fn init(prefix: &str, config: GruConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<Self> {
        if config.hidden == 0 || config.layers == 0 || config.input == 0 {
            return Err(Error::param(format!("GRU sizes must be positive: {config:?}")));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::param(format!("dropout rate {} must be in [0, 1)", config.dropout)));
        }
        let dirs = if config.bidirectional { 2 } else { 1 };
        for l in 0..config.layers {
            let input = if l == 0 { config.input } else { dirs * config.hidden };
            GruWeights::init(&format!("{prefix}.l{l}.fwd"), input, config.hidden, store, rng);
            if config.bidirectional {
                GruWeights::init(&format!("{prefix}.l{l}.bwd"), input, config.hidden, store, rng);
            }
        }
        Ok(GruStack { prefix: prefix.to_string(), config })
    }

    pub fn output_width(&self) -> usize {
        self.config.hidden * if self.config.bidirectional { 2 } else { 1 }
    }

    pub fn forward(&self, s: &mut Session<'_>, xs: Var) -> Result<GruOutput> {
        let mut x = xs;
        let mut last = None;
        for l in 0..self.config.layers {
            if l > 0 {
                let mode = s.mode();
                let p = self.config.dropout;
                let mut rng = s.rng().clone();
                x = dropout(&mut s.tape, x, p, mode, &mut rng)?;
                *s.rng() = rng;
            }
            let fwd = GruWeights::bind(&format!("{}.l{l}.fwd", self.prefix), s)?;
            let f = gru_sequence(&mut s.tape, x, None, &fwd, false)?;
            let t = s.tape.shape(f)[1];
            let f_last = s.tape.select(f, 1, t - 1)?;
            if self.config.bidirectional {
                let bwd = GruWeights::bind(&format!("{}.l{l}.bwd", self.prefix), s)?;
                let b = gru_sequence(&mut s.tape, x, None, &bwd, true)?;
                let b_last = s.tape.select(b, 1, 0)?;
                x = s.tape.concat(&[f, b], 2)?;
                last = Some(s.tape.concat(&[f_last, b_last], 1)?);
            } else {
                x = f;
                last = Some(f_last);
            }
        }
        Ok(GruOutput {
            sequence: x,
            summary: last.expect("at least one layer"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn weights(tape: &mut Tape, d: usize, h: usize, seed: u64, track: bool) -> GruWeights {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GruWeights::init("g", d, h, &mut store, &mut rng);
        let vars: Vec<Var> = GRU_PARAM_NAMES
            .iter()
            .map(|n| tape.leaf(store.get(&format!("g.{n}")).unwrap().clone(), track))
            .collect();
        GruWeights::from_slice(&vars)
    }

    fn zero_weights(tape: &mut Tape, d: usize, h: usize) -> GruWeights {
        let mut w = weights(tape, d, h, 0, false);
        let zero = |tape: &mut Tape, v: Var| tape.constant(Tensor::zeros(tape.shape(v).to_vec()));
        let arr = w.as_array().map(|v| zero(tape, v));
        w = GruWeights::from_slice(&arr);
        w
    }

    #[test]
    fn zero_weights_halve_the_state() {
        let mut t = Tape::new();
        let w = zero_weights(&mut t, 3, 4);
        let x = t.constant(Tensor::from_fn(vec![1, 3], |i| i as f64 + 1.0));
        let h0 = t.constant(Tensor::zeros(vec![1, 4]));
        let h = gru_cell(&mut t, x, h0, &w).unwrap();
        assert!(t.value(h).data().iter().all(|&v| v == 0.0));
        let v = t.constant(Tensor::new(vec![1, 4], vec![1.0, -2.0, 0.5, 4.0]).unwrap());
        let h = gru_cell(&mut t, x, v, &w).unwrap();
        assert_eq!(t.value(h).data(), &[0.5, -1.0, 0.25, 2.0]);
    }

    #[test]
    fn fused_sequence_matches_cell_loop() {
        let mut t = Tape::new();
        let w = weights(&mut t, 3, 4, 11, true);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs = t.leaf(Tensor::from_fn(vec![2, 5, 3], |_| rng.gen_range(-1.0..1.0)), true);
        let h0 = t.leaf(Tensor::from_fn(vec![2, 4], |_| rng.gen_range(-1.0..1.0)), true);
        let seq = gru_sequence(&mut t, xs, Some(h0), &w, false).unwrap();
        let mut h = h0;
        let mut steps = Vec::new();
        for ti in 0..5 {
            let x = t.select(xs, 1, ti).unwrap();
            h = gru_cell(&mut t, x, h, &w).unwrap();
            steps.push(h);
        }
        let looped = t.stack(&steps, 1).unwrap();
        assert!(t.value(seq).max_abs_diff(t.value(looped)) < 1e-12);

        // Same readout through each path must give the same gradients.
        let readout = t.constant(Tensor::from_fn(vec![2, 5, 4], |i| (i as f64 * 0.37).sin()));
        let grads = |t: &mut Tape, out: Var| {
            let y = t.mul(out, readout).unwrap();
            let loss = t.sum(y);
            t.backward(loss).unwrap();
            let mut all: Vec<Vec<f64>> = vec![t.grad(xs).unwrap().to_vec(), t.grad(h0).unwrap().to_vec()];
            all.extend(w.as_array().iter().map(|&v| t.grad(v).unwrap().to_vec()));
            all
        };
        let a = grads(&mut t, seq);
        let b = grads(&mut t, looped);
        for (ga, gb) in a.iter().zip(&b) {
            for (x, y) in ga.iter().zip(gb) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn reverse_matches_reversed_input() {
        let mut t = Tape::new();
        let w = weights(&mut t, 2, 3, 5, false);
        let data: Vec<f64> = (0..8).map(|i| (i as f64 * 0.9).cos()).collect();
        let rev: Vec<f64> = data.chunks(2).rev().flatten().copied().collect();
        let xs = t.constant(Tensor::new(vec![1, 4, 2], data).unwrap());
        let xr = t.constant(Tensor::new(vec![1, 4, 2], rev).unwrap());
        let a = gru_sequence(&mut t, xs, None, &w, true).unwrap();
        let b = gru_sequence(&mut t, xr, None, &w, false).unwrap();
        let (a, b) = (t.value(a).data(), t.value(b).data());
        for ti in 0..4 {
            assert_eq!(&a[ti * 3..ti * 3 + 3], &b[(3 - ti) * 3..(3 - ti) * 3 + 3]);
        }
    }

    #[test]
    fn dropout_mask_is_seeded() {
        let m = |seed| bernoulli_mask(vec![128], 0.3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(m(1), m(1));
        assert_ne!(m(1), m(2));
        assert!(m(3).data().iter().all(|&v| v == 0.0 || (v - 1.0 / 0.7).abs() < 1e-15));
        assert!(bernoulli_mask(vec![1], 1.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn shape_errors() {
        let mut t = Tape::new();
        let w = weights(&mut t, 3, 4, 1, false);
        let xs = t.constant(Tensor::zeros(vec![1, 2, 5]));
        assert!(matches!(gru_sequence(&mut t, xs, None, &w, false), Err(Error::Dimension(_))));
        let x = t.constant(Tensor::zeros(vec![1, 3]));
        let h = t.constant(Tensor::zeros(vec![1, 5]));
        assert!(gru_cell(&mut t, x, h, &w).is_err());
    }
}
