use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{strides, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BinaryOp {
    Add,
    Sub,
    Mul,
}

/// Output shape when `a` and `b` broadcast along singleton axes.
pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::dim(format!(
            "cannot broadcast {a:?} with {b:?}: ranks differ"
        )));
    }
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(axis, (&x, &y))| match (x, y) {
            _ if x == y => Ok(x),
            (1, _) => Ok(y),
            (_, 1) => Ok(x),
            _ => Err(Error::dim(format!(
                "cannot broadcast {a:?} with {b:?}: axis {axis} has {x} vs {y}"
            ))),
        })
        .collect()
}

fn broadcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let s = strides(shape);
    shape
        .iter()
        .zip(out)
        .zip(s)
        .map(|((&d, &o), st)| if d == 1 && o != 1 { 0 } else { st })
        .collect()
}

/// Calls `f(out_index, a_offset, b_offset)` for every element of `out`.
pub(crate) fn for_each_broadcast(
    out: &[usize],
    sa: &[usize],
    sb: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let n: usize = out.iter().product();
    let nd = out.len();
    let mut idx = vec![0usize; nd];
    let (mut oa, mut ob) = (0usize, 0usize);
    for i in 0..n {
        f(i, oa, ob);
        for d in (0..nd).rev() {
            idx[d] += 1;
            oa += sa[d];
            ob += sb[d];
            if idx[d] < out[d] {
                break;
            }
            oa -= sa[d] * out[d];
            ob -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

impl Tape {
    fn binary(&mut self, a: Var, b: Var, op: BinaryOp) -> Result<Var> {
        let sa_shape = self.shape(a).to_vec();
        let sb_shape = self.shape(b).to_vec();
        let out_shape = broadcast_shape(&sa_shape, &sb_shape)?;
        let apply = |x: f64, y: f64| match op {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
        };
        let same = sa_shape == sb_shape;
        let (va, vb) = (self.value(a).data(), self.value(b).data());
        let data = if same {
            va.iter().zip(vb).map(|(&x, &y)| apply(x, y)).collect()
        } else {
            let mut out = vec![0.0; out_shape.iter().product()];
            let (sa, sb) = (
                broadcast_strides(&sa_shape, &out_shape),
                broadcast_strides(&sb_shape, &out_shape),
            );
            for_each_broadcast(&out_shape, &sa, &sb, |i, ia, ib| {
                out[i] = apply(va[ia], vb[ib]);
            });
            out
        };
        let value = Tensor::new(out_shape.clone(), data)?;
        Ok(self.custom(
            &[a, b],
            value,
            Box::new(move |ctx| {
                let (xa, xb) = (ctx.inputs[0].data(), ctx.inputs[1].data());
                let g = ctx.grad;
                let mut ga = ctx.needs[0].then(|| vec![0.0; xa.len()]);
                let mut gb = ctx.needs[1].then(|| vec![0.0; xb.len()]);
                let mut visit = |i: usize, ia: usize, ib: usize| {
                    let (da, db) = match op {
                        BinaryOp::Add => (g[i], g[i]),
                        BinaryOp::Sub => (g[i], -g[i]),
                        BinaryOp::Mul => (g[i] * xb[ib], g[i] * xa[ia]),
                    };
                    if let Some(ga) = ga.as_mut() {
                        ga[ia] += da;
                    }
                    if let Some(gb) = gb.as_mut() {
                        gb[ib] += db;
                    }
                };
                if same {
                    (0..g.len()).for_each(|i| visit(i, i, i));
                } else {
                    let sa = broadcast_strides(&sa_shape, &out_shape);
                    let sb = broadcast_strides(&sb_shape, &out_shape);
                    for_each_broadcast(&out_shape, &sa, &sb, visit);
                }
                vec![ga, gb]
            }),
        ))
    }

    /// Elementwise sum; either side may broadcast along singleton axes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryOp::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryOp::Sub)
    }

    /// Elementwise (Hadamard) product with broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryOp::Mul)
    }

    /// `scale * x + shift`.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let v = self.value(x);
        let value = Tensor::new(
            v.shape().to_vec(),
            v.data().iter().map(|&t| scale * t + shift).collect(),
        )
        .expect("same shape");
        self.custom(
            &[x],
            value,
            Box::new(move |ctx| vec![Some(ctx.grad.iter().map(|g| g * scale).collect())]),
        )
    }
}
