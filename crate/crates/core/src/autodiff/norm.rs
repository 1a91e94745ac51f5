use super::{Mode, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchNormConfig {
    pub momentum: f64,
    pub eps: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        BatchNormConfig {
            momentum: 0.1,
            eps: 1e-5,
        }
    }
}

/// Per-channel running mean and (unbiased) variance.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    pub fn new(channels: usize) -> Self {
        RunningStats {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
        }
    }
}

impl Tape {
    /// Batch normalization over axis 1 of `[B, C, ..]`.
    ///
    /// Train mode normalizes with the biased batch variance and folds the
    /// batch statistics into `stats` with `momentum`; eval mode reads `stats`.
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        stats: &mut RunningStats,
        mode: Mode,
        cfg: BatchNormConfig,
    ) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if xs.len() < 2 {
            return Err(Error::dim(format!("batch_norm needs [B, C, ..], got {xs:?}")));
        }
        let (b, c) = (xs[0], xs[1]);
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if self.shape(v) != [c] {
                return Err(Error::dim(format!(
                    "batch_norm {name} {:?} must have {c} channels",
                    self.shape(v)
                )));
            }
        }
        if stats.mean.len() != c || stats.var.len() != c {
            return Err(Error::dim(format!("running stats do not cover {c} channels")));
        }
        if mode == Mode::Train && b < 2 {
            return Err(Error::protocol(format!(
                "batch_norm in train mode needs a batch of at least 2, got {b}"
            )));
        }
        let spatial: usize = xs[2..].iter().product();
        let count = (b * spatial) as f64;
        let xd = self.value(x).data();
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; c];
                let mut var = vec![0.0; c];
                for (i, plane) in xd.chunks(spatial).enumerate() {
                    mean[i % c] += plane.iter().sum::<f64>();
                }
                mean.iter_mut().for_each(|m| *m /= count);
                for (i, plane) in xd.chunks(spatial).enumerate() {
                    let m = mean[i % c];
                    var[i % c] += plane.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
                }
                var.iter_mut().for_each(|v| *v /= count);
                let unbias = count / (count - 1.0);
                for ch in 0..c {
                    stats.mean[ch] = (1.0 - cfg.momentum) * stats.mean[ch] + cfg.momentum * mean[ch];
                    stats.var[ch] =
                        (1.0 - cfg.momentum) * stats.var[ch] + cfg.momentum * var[ch] * unbias;
                }
                (mean, var)
            }
            Mode::Eval => (stats.mean.clone(), stats.var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + cfg.eps).sqrt()).collect();
        let (gd, bd) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; xd.len()];
        let mut out = vec![0.0; xd.len()];
        for (i, (plane, (hp, op))) in xd
            .chunks(spatial)
            .zip(xhat.chunks_mut(spatial).zip(out.chunks_mut(spatial)))
            .enumerate()
        {
            let ch = i % c;
            for ((v, h), o) in plane.iter().zip(hp.iter_mut()).zip(op.iter_mut()) {
                *h = (v - mean[ch]) * inv_std[ch];
                *o = gd[ch] * *h + bd[ch];
            }
        }
        let value = Tensor::new(xs, out)?;
        Ok(self.custom(
            &[x, gamma, beta],
            value,
            Box::new(move |ctx| {
                let g = ctx.grad;
                let gd = ctx.inputs[1].data();
                let mut sum_g = vec![0.0; c];
                let mut sum_gx = vec![0.0; c];
                for (i, (gp, hp)) in g.chunks(spatial).zip(xhat.chunks(spatial)).enumerate() {
                    sum_g[i % c] += gp.iter().sum::<f64>();
                    sum_gx[i % c] += gp.iter().zip(hp).map(|(a, b)| a * b).sum::<f64>();
                }
                let gx = ctx.needs[0].then(|| {
                    let mut gx = vec![0.0; g.len()];
                    for (i, (gxp, (gp, hp))) in gx
                        .chunks_mut(spatial)
                        .zip(g.chunks(spatial).zip(xhat.chunks(spatial)))
                        .enumerate()
                    {
                        let ch = i % c;
                        let k = gd[ch] * inv_std[ch];
                        match mode {
                            Mode::Train => {
                                for ((o, gv), h) in gxp.iter_mut().zip(gp).zip(hp) {
                                    *o = k * (gv - sum_g[ch] / count - h * sum_gx[ch] / count);
                                }
                            }
                            Mode::Eval => {
                                for (o, gv) in gxp.iter_mut().zip(gp) {
                                    *o = k * gv;
                                }
                            }
                        }
                    }
                    gx
                });
                vec![gx, Some(sum_gx), Some(sum_g)]
            }),
        ))
    }
}
