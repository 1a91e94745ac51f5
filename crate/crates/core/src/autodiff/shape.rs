use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{strides, Tensor};

impl Tape {
    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape.to_vec())?;
        Ok(self.custom(&[x], value, Box::new(|ctx| vec![Some(ctx.grad.to_vec())])))
    }

    /// Reorders axes: output axis `i` is input axis `axes[i]`.
    pub fn permute(&mut self, x: Var, axes: &[usize]) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let mut seen = vec![false; xs.len()];
        if axes.len() != xs.len() || axes.iter().any(|&a| a >= xs.len() || std::mem::replace(&mut seen[a], true)) {
            return Err(Error::dim(format!("invalid permutation {axes:?} for {xs:?}")));
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| xs[a]).collect();
        let in_strides = strides(&xs);
        let src_strides: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
        // gather index for each output element
        let n = self.value(x).numel();
        let mut gather = Vec::with_capacity(n);
        let mut idx = vec![0usize; xs.len()];
        let mut off = 0usize;
        for _ in 0..n {
            gather.push(off);
            for d in (0..out_shape.len()).rev() {
                idx[d] += 1;
                off += src_strides[d];
                if idx[d] < out_shape[d] {
                    break;
                }
                off -= src_strides[d] * out_shape[d];
                idx[d] = 0;
            }
        }
        let xd = self.value(x).data();
        let value = Tensor::new(out_shape, gather.iter().map(|&i| xd[i]).collect())?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let mut gx = vec![0.0; ctx.grad.len()];
                for (g, &i) in ctx.grad.iter().zip(&gather) {
                    gx[i] += g;
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Joins tensors along `axis`; all other axes must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::dim("concat needs at least one input"));
        };
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return Err(Error::dim(format!("concat axis {axis} out of range for {base:?}")));
        }
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(d, (a, b))| d == axis || a == b);
            if !compatible {
                return Err(Error::dim(format!("cannot concat {s:?} with {base:?} on axis {axis}")));
            }
            widths.push(s[axis]);
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[o * w * inner..(o + 1) * w * inner]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let value = Tensor::new(shape, out)?;
        Ok(self.custom(
            parts,
            value,
            Box::new(move |ctx| {
                let mut grads: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(outer * w * inner)).collect();
                let mut at = 0;
                for _ in 0..outer {
                    for (g, &w) in grads.iter_mut().zip(&widths) {
                        g.extend_from_slice(&ctx.grad[at..at + w * inner]);
                        at += w * inner;
                    }
                }
                grads
                    .into_iter()
                    .zip(ctx.needs)
                    .map(|(g, &need)| need.then_some(g))
                    .collect()
            }),
        ))
    }

    /// Picks index `index` along `axis`, removing that axis.
    pub fn select(&mut self, x: Var, axis: usize, index: usize) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if axis >= xs.len() || index >= xs[axis] {
            return Err(Error::dim(format!("select {index} on axis {axis} out of range for {xs:?}")));
        }
        let outer: usize = xs[..axis].iter().product();
        let len = xs[axis];
        let inner: usize = xs[axis + 1..].iter().product();
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            out.extend_from_slice(&xd[(o * len + index) * inner..][..inner]);
        }
        let mut shape = xs;
        shape.remove(axis);
        let value = Tensor::new(shape, out)?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let mut gx = vec![0.0; outer * len * inner];
                for o in 0..outer {
                    gx[(o * len + index) * inner..][..inner]
                        .copy_from_slice(&ctx.grad[o * inner..][..inner]);
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Stacks equally shaped tensors along a new axis.
    pub fn stack(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::dim("stack needs at least one input"));
        };
        let mut expanded = self.shape(first).to_vec();
        if axis > expanded.len() {
            return Err(Error::dim(format!("stack axis {axis} out of range for {expanded:?}")));
        }
        expanded.insert(axis, 1);
        let reshaped = parts
            .iter()
            .map(|&p| self.reshape(p, &expanded))
            .collect::<Result<Vec<_>>>()?;
        self.concat(&reshaped, axis)
    }
}
