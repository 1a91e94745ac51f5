use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

impl Tape {
    /// `y = x Wᵀ + b` over the last axis of `x`.
    ///
    /// `x` is `[.., in]`, `weight` is `[out, in]`, `bias` is `[out]`.
    pub fn linear(&mut self, x: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(weight).to_vec();
        let Some(&in_dim) = xs.last() else {
            return Err(Error::dim("linear input must have at least one axis"));
        };
        if ws.len() != 2 || ws[1] != in_dim {
            return Err(Error::dim(format!(
                "linear: input last axis {} has {in_dim} features but weight is {ws:?} (axis 1 must match)",
                xs.len() - 1
            )));
        }
        let out_dim = ws[0];
        if let Some(b) = bias {
            let bs = self.shape(b);
            if bs != [out_dim] {
                return Err(Error::dim(format!(
                    "linear: bias {bs:?} must be [{out_dim}] to match weight axis 0"
                )));
            }
        }
        let rows = self.value(x).numel() / in_dim;
        let xd = self.value(x).data();
        let wd = self.value(weight).data();
        let mut out = Vec::with_capacity(rows * out_dim);
        for r in 0..rows {
            let xr = &xd[r * in_dim..(r + 1) * in_dim];
            for o in 0..out_dim {
                let wr = &wd[o * in_dim..(o + 1) * in_dim];
                out.push(xr.iter().zip(wr).map(|(a, b)| a * b).sum::<f64>());
            }
        }
        if let Some(b) = bias {
            let bd = self.value(b).data();
            for row in out.chunks_mut(out_dim) {
                row.iter_mut().zip(bd).for_each(|(y, b)| *y += b);
            }
        }
        let mut out_shape = xs.clone();
        *out_shape.last_mut().unwrap() = out_dim;
        let value = Tensor::new(out_shape, out)?;
        let inputs: Vec<Var> = std::iter::once(x)
            .chain(std::iter::once(weight))
            .chain(bias)
            .collect();
        Ok(self.custom(
            &inputs,
            value,
            Box::new(move |ctx| {
                let xd = ctx.inputs[0].data();
                let wd = ctx.inputs[1].data();
                let g = ctx.grad;
                let gx = ctx.needs[0].then(|| {
                    let mut gx = vec![0.0; xd.len()];
                    for r in 0..rows {
                        let gxr = &mut gx[r * in_dim..(r + 1) * in_dim];
                        for o in 0..out_dim {
                            let go = g[r * out_dim + o];
                            if go == 0.0 {
                                continue;
                            }
                            let wr = &wd[o * in_dim..(o + 1) * in_dim];
                            gxr.iter_mut().zip(wr).for_each(|(a, w)| *a += go * w);
                        }
                    }
                    gx
                });
                let gw = ctx.needs[1].then(|| {
                    let mut gw = vec![0.0; wd.len()];
                    for r in 0..rows {
                        let xr = &xd[r * in_dim..(r + 1) * in_dim];
                        for o in 0..out_dim {
                            let go = g[r * out_dim + o];
                            if go == 0.0 {
                                continue;
                            }
                            let gwr = &mut gw[o * in_dim..(o + 1) * in_dim];
                            gwr.iter_mut().zip(xr).for_each(|(a, x)| *a += go * x);
                        }
                    }
                    gw
                });
                let mut grads = vec![gx, gw];
                if ctx.inputs.len() == 3 {
                    grads.push(ctx.needs[2].then(|| {
                        let mut gb = vec![0.0; out_dim];
                        for row in g.chunks(out_dim) {
                            gb.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                        }
                        gb
                    }));
                }
                grads
            }),
        ))
    }
}
