use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
}

impl Tape {
    /// Sum of every element, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().sum::<f64>();
        self.custom(
            &[x],
            Tensor::scalar(total),
            Box::new(|ctx| vec![Some(vec![ctx.grad[0]; ctx.inputs[0].numel()])]),
        )
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.value(x).numel() as f64;
        let s = self.sum(x);
        self.affine(s, 1.0 / n, 0.0)
    }

    /// Reduces one axis, keeping it with size 1. Max routes the gradient to
    /// the first maximal element.
    pub fn reduce(&mut self, x: Var, axis: usize, kind: ReduceKind) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if axis >= xs.len() {
            return Err(Error::dim(format!("reduce axis {axis} out of range for {xs:?}")));
        }
        let outer: usize = xs[..axis].iter().product();
        let len = xs[axis];
        let inner: usize = xs[axis + 1..].iter().product();
        let xd = self.value(x).data();
        let mut out = vec![0.0; outer * inner];
        let mut arg = vec![0usize; if kind == ReduceKind::Max { outer * inner } else { 0 }];
        for o in 0..outer {
            for i in 0..inner {
                let at = |k: usize| xd[(o * len + k) * inner + i];
                let slot = o * inner + i;
                out[slot] = match kind {
                    ReduceKind::Sum => (0..len).map(at).sum(),
                    ReduceKind::Mean => (0..len).map(at).sum::<f64>() / len as f64,
                    ReduceKind::Max => {
                        let mut best = 0;
                        for k in 1..len {
                            if at(k) > at(best) {
                                best = k;
                            }
                        }
                        arg[slot] = best;
                        at(best)
                    }
                };
            }
        }
        let mut shape = xs;
        shape[axis] = 1;
        let value = Tensor::new(shape, out)?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let mut gx = vec![0.0; ctx.inputs[0].numel()];
                for o in 0..outer {
                    for i in 0..inner {
                        let slot = o * inner + i;
                        let g = ctx.grad[slot];
                        match kind {
                            ReduceKind::Sum => (0..len).for_each(|k| gx[(o * len + k) * inner + i] += g),
                            ReduceKind::Mean => {
                                let g = g / len as f64;
                                (0..len).for_each(|k| gx[(o * len + k) * inner + i] += g)
                            }
                            ReduceKind::Max => gx[(o * len + arg[slot]) * inner + i] += g,
                        }
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }
}
