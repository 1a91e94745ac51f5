use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Stride and symmetric zero padding for [`Tape::conv`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvOptions {
    pub stride: usize,
    pub padding: usize,
}

impl ConvOptions {
    /// Stride 1 with `(k - 1) / 2` padding: preserves spatial size for odd `k`.
    pub fn same(kernel: usize) -> Self {
        ConvOptions {
            stride: 1,
            padding: (kernel - 1) / 2,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Geom {
    batch: usize,
    cin: usize,
    cout: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    ph: usize,
    pw: usize,
    oh: usize,
    ow: usize,
    per_sample: bool,
}

impl Geom {
    fn kernel_len(&self) -> usize {
        self.cout * self.cin * self.kh * self.kw
    }

    /// Output columns `[lo, hi)` whose tap `j` lands inside the input row.
    fn cols(&self, j: usize) -> (usize, usize) {
        let lo = if self.pw > j {
            (self.pw - j).div_ceil(self.sw)
        } else {
            0
        };
        if self.w + self.pw < j + 1 {
            return (0, 0);
        }
        let hi = ((self.w - 1 + self.pw - j) / self.sw + 1).min(self.ow);
        (lo.min(hi), hi)
    }

    fn row(&self, oh: usize, i: usize) -> Option<usize> {
        let ih = (oh * self.sh + i).checked_sub(self.ph)?;
        (ih < self.h).then_some(ih)
    }

    fn kernel_at(&self, b: usize) -> usize {
        if self.per_sample {
            b * self.kernel_len()
        } else {
            0
        }
    }
}

fn forward(g: &Geom, x: &[f64], k: &[f64], bias: Option<&[f64]>) -> Vec<f64> {
    let plane = g.oh * g.ow;
    let mut out = vec![0.0; g.batch * g.cout * plane];
    for b in 0..g.batch {
        let kb = &k[g.kernel_at(b)..];
        for co in 0..g.cout {
            let o = &mut out[(b * g.cout + co) * plane..][..plane];
            if let Some(bias) = bias {
                o.fill(bias[co]);
            }
            for ci in 0..g.cin {
                let xp = &x[(b * g.cin + ci) * g.h * g.w..][..g.h * g.w];
                for i in 0..g.kh {
                    for j in 0..g.kw {
                        let wv = kb[((co * g.cin + ci) * g.kh + i) * g.kw + j];
                        let (lo, hi) = g.cols(j);
                        if lo == hi {
                            continue;
                        }
                        for r in 0..g.oh {
                            let Some(ih) = g.row(r, i) else { continue };
                            let xrow = &xp[ih * g.w..][..g.w];
                            let orow = &mut o[r * g.ow..][..g.ow];
                            if g.sw == 1 {
                                let shift = j as isize - g.pw as isize;
                                let src = &xrow[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                                orow[lo..hi].iter_mut().zip(src).for_each(|(y, xv)| *y += wv * xv);
                            } else {
                                for t in lo..hi {
                                    orow[t] += wv * xrow[t * g.sw + j - g.pw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn backward_input(g: &Geom, k: &[f64], grad: &[f64]) -> Vec<f64> {
    let plane = g.oh * g.ow;
    let mut gx = vec![0.0; g.batch * g.cin * g.h * g.w];
    for b in 0..g.batch {
        let kb = &k[g.kernel_at(b)..];
        for co in 0..g.cout {
            let go = &grad[(b * g.cout + co) * plane..][..plane];
            for ci in 0..g.cin {
                let gp = &mut gx[(b * g.cin + ci) * g.h * g.w..][..g.h * g.w];
                for i in 0..g.kh {
                    for j in 0..g.kw {
                        let wv = kb[((co * g.cin + ci) * g.kh + i) * g.kw + j];
                        let (lo, hi) = g.cols(j);
                        if lo == hi {
                            continue;
                        }
                        for r in 0..g.oh {
                            let Some(ih) = g.row(r, i) else { continue };
                            let grow = &go[r * g.ow..][..g.ow];
                            let xrow = &mut gp[ih * g.w..][..g.w];
                            for t in lo..hi {
                                xrow[t * g.sw + j - g.pw] += wv * grow[t];
                            }
                        }
                    }
                }
            }
        }
    }
    gx
}

fn backward_kernel(g: &Geom, x: &[f64], grad: &[f64]) -> Vec<f64> {
    let plane = g.oh * g.ow;
    let kl = g.kernel_len();
    let mut gk = vec![0.0; if g.per_sample { g.batch * kl } else { kl }];
    for b in 0..g.batch {
        let kb = &mut gk[g.kernel_at(b)..][..kl];
        for co in 0..g.cout {
            let go = &grad[(b * g.cout + co) * plane..][..plane];
            for ci in 0..g.cin {
                let xp = &x[(b * g.cin + ci) * g.h * g.w..][..g.h * g.w];
                for i in 0..g.kh {
                    for j in 0..g.kw {
                        let (lo, hi) = g.cols(j);
                        if lo == hi {
                            continue;
                        }
                        let mut acc = 0.0;
                        for r in 0..g.oh {
                            let Some(ih) = g.row(r, i) else { continue };
                            let grow = &go[r * g.ow..][..g.ow];
                            let xrow = &xp[ih * g.w..][..g.w];
                            if g.sw == 1 {
                                let off = (lo + j) as isize - g.pw as isize;
                                let src = &xrow[off as usize..][..hi - lo];
                                acc += grow[lo..hi].iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                            } else {
                                for t in lo..hi {
                                    acc += grow[t] * xrow[t * g.sw + j - g.pw];
                                }
                            }
                        }
                        kb[((co * g.cin + ci) * g.kh + i) * g.kw + j] += acc;
                    }
                }
            }
        }
    }
    gk
}

impl Tape {
    /// Cross-correlation (no kernel flip) with zero padding.
    ///
    /// Rank is taken from `x`: `[B, C, L]` for 1-D or `[B, C, H, W]` for 2-D.
    /// The kernel is `[Co, Ci, K]` / `[Co, Ci, Kh, Kw]`, or carries an extra
    /// leading batch axis to apply a distinct kernel to every sample.
    /// `bias`, when given, is `[Co]`.
    pub fn conv(&mut self, x: Var, kernel: Var, bias: Option<Var>, opts: ConvOptions) -> Result<Var> {
        if opts.stride == 0 {
            return Err(Error::param("convolution stride must be positive"));
        }
        let xs = self.shape(x).to_vec();
        let ks = self.shape(kernel).to_vec();
        let rank = match xs.len() {
            3 => 1,
            4 => 2,
            n => return Err(Error::dim(format!("convolution input must be rank 3 or 4, got {n}"))),
        };
        let per_sample = ks.len() == xs.len() + 1;
        let core = if per_sample { &ks[1..] } else { &ks[..] };
        if core.len() != xs.len() {
            return Err(Error::dim(format!(
                "kernel {ks:?} does not match {rank}-D input {xs:?}"
            )));
        }
        if per_sample && ks[0] != xs[0] {
            return Err(Error::dim(format!(
                "per-sample kernel batch {} != input batch {}",
                ks[0], xs[0]
            )));
        }
        if core[1] != xs[1] {
            return Err(Error::dim(format!(
                "kernel expects {} input channels, input has {}",
                core[1], xs[1]
            )));
        }
        let (h, w, kh, kw, ph, sh) = if rank == 1 {
            (1, xs[2], 1, core[2], 0, 1)
        } else {
            (xs[2], xs[3], core[2], core[3], opts.padding, opts.stride)
        };
        let (pw, sw) = (opts.padding, opts.stride);
        if h + 2 * ph < kh || w + 2 * pw < kw {
            return Err(Error::dim(format!(
                "kernel {:?} larger than padded input {:?}",
                &core[2..],
                &xs[2..]
            )));
        }
        let g = Geom {
            batch: xs[0],
            cin: xs[1],
            cout: core[0],
            h,
            w,
            kh,
            kw,
            sh,
            sw,
            ph,
            pw,
            oh: (h + 2 * ph - kh) / sh + 1,
            ow: (w + 2 * pw - kw) / sw + 1,
            per_sample,
        };
        if let Some(b) = bias {
            if self.shape(b) != [g.cout] {
                return Err(Error::dim(format!(
                    "bias {:?} must be [{}]",
                    self.shape(b),
                    g.cout
                )));
            }
        }
        let data = forward(
            &g,
            self.value(x).data(),
            self.value(kernel).data(),
            bias.map(|b| self.value(b).data()),
        );
        let shape = if rank == 1 {
            vec![g.batch, g.cout, g.ow]
        } else {
            vec![g.batch, g.cout, g.oh, g.ow]
        };
        let value = Tensor::new(shape, data)?;
        let mut inputs = vec![x, kernel];
        inputs.extend(bias);
        Ok(self.custom(
            &inputs,
            value,
            Box::new(move |ctx| {
                let (xd, kd) = (ctx.inputs[0].data(), ctx.inputs[1].data());
                let mut grads = vec![
                    ctx.needs[0].then(|| backward_input(&g, kd, ctx.grad)),
                    ctx.needs[1].then(|| backward_kernel(&g, xd, ctx.grad)),
                ];
                if ctx.inputs.len() == 3 {
                    grads.push(ctx.needs[2].then(|| {
                        let plane = g.oh * g.ow;
                        let mut gb = vec![0.0; g.cout];
                        for (i, chunk) in ctx.grad.chunks(plane).enumerate() {
                            gb[i % g.cout] += chunk.iter().sum::<f64>();
                        }
                        gb
                    }));
                }
                grads
            }),
        ))
    }
}
