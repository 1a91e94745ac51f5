use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Avg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolScope {
    /// Collapses each channel's spatial extent; output is `[B, C]`.
    Global,
    /// Square (2-D) or linear (1-D) window, no padding, floor output size.
    Windowed { window: usize, stride: usize },
}

impl Tape {
    /// Pooling over the spatial axes of `[B, C, L]` or `[B, C, H, W]`.
    ///
    /// Max pooling routes the gradient to the first maximal element of each
    /// window.
    pub fn pool(&mut self, x: Var, kind: PoolKind, scope: PoolScope) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        if xs.len() < 2 {
            return Err(Error::dim(format!("pooling needs [B, C, ..], got {xs:?}")));
        }
        let (b, c) = (xs[0], xs[1]);
        let spatial = &xs[2..];
        // (h, w, window_h, window_w, stride_h, stride_w)
        let (h, w, kh, kw, sh, sw) = match (scope, spatial.len()) {
            (PoolScope::Global, _) => {
                let n: usize = spatial.iter().product();
                (1, n, 1, n, 1, 1)
            }
            (PoolScope::Windowed { window, stride }, rank) => {
                if window == 0 || stride == 0 {
                    return Err(Error::param("pool window and stride must be positive"));
                }
                match rank {
                    1 => (1, spatial[0], 1, window, 1, stride),
                    2 => (spatial[0], spatial[1], window, window, stride, stride),
                    _ => return Err(Error::dim(format!("windowed pooling needs rank 3 or 4, got {xs:?}"))),
                }
            }
        };
        if kh > h || kw > w {
            return Err(Error::dim(format!(
                "pool window {kw} exceeds spatial extent {spatial:?}"
            )));
        }
        let (oh, ow) = ((h - kh) / sh + 1, (w - kw) / sw + 1);
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(b * c * oh * ow);
        let mut argmax = Vec::new();
        let norm = 1.0 / (kh * kw) as f64;
        for plane in xd.chunks(h * w) {
            for r in 0..oh {
                for q in 0..ow {
                    let (r0, q0) = (r * sh, q * sw);
                    match kind {
                        PoolKind::Max => {
                            let mut best = r0 * w + q0;
                            for i in r0..r0 + kh {
                                for j in q0..q0 + kw {
                                    if plane[i * w + j] > plane[best] {
                                        best = i * w + j;
                                    }
                                }
                            }
                            out.push(plane[best]);
                            argmax.push(best);
                        }
                        PoolKind::Avg => {
                            let mut acc = 0.0;
                            for i in r0..r0 + kh {
                                acc += plane[i * w + q0..i * w + q0 + kw].iter().sum::<f64>();
                            }
                            out.push(acc * norm);
                        }
                    }
                }
            }
        }
        let shape = match (scope, spatial.len()) {
            (PoolScope::Global, _) => vec![b, c],
            (_, 1) => vec![b, c, ow],
            _ => vec![b, c, oh, ow],
        };
        let value = Tensor::new(shape, out)?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let mut gx = vec![0.0; ctx.inputs[0].numel()];
                let per_plane = oh * ow;
                for (p, (gplane, go)) in gx
                    .chunks_mut(h * w)
                    .zip(ctx.grad.chunks(per_plane))
                    .enumerate()
                {
                    match kind {
                        PoolKind::Max => {
                            for (o, g) in go.iter().enumerate() {
                                gplane[argmax[p * per_plane + o]] += g;
                            }
                        }
                        PoolKind::Avg => {
                            for r in 0..oh {
                                for q in 0..ow {
                                    let g = go[r * ow + q] * norm;
                                    for i in r * sh..r * sh + kh {
                                        for j in q * sw..q * sw + kw {
                                            gplane[i * w + j] += g;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                vec![Some(gx)]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn global_average_of_constant() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(vec![2, 3, 4, 5], 1.75));
        let y = tape.pool(x, PoolKind::Avg, PoolScope::Global).unwrap();
        assert_eq!(tape.shape(y), &[2, 3]);
        assert!(tape.value(y).data().iter().all(|&v| (v - 1.75).abs() < 1e-15));
    }

    #[test]
    fn max_of_short_window() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![1, 1, 3], vec![1.0, 3.0, 2.0]).unwrap());
        let y = tape
            .pool(x, PoolKind::Max, PoolScope::Windowed { window: 3, stride: 1 })
            .unwrap();
        assert_eq!(tape.value(y).data(), &[3.0]);
    }

    #[test]
    fn ties_route_gradient_to_first_maximum() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![1, 1, 4], vec![2.0, 2.0, 1.0, 1.0]).unwrap(), true);
        let y = tape
            .pool(x, PoolKind::Max, PoolScope::Windowed { window: 2, stride: 2 })
            .unwrap();
        let s = tape.sum(y);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn windowed_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xv = Tensor::from_fn(vec![2, 3, 7, 9], |_| rng.gen_range(-1.0..1.0));
        for kind in [PoolKind::Max, PoolKind::Avg] {
            let mut tape = Tape::new();
            let x = tape.constant(xv.clone());
            let y = tape
                .pool(x, kind, PoolScope::Windowed { window: 2, stride: 2 })
                .unwrap();
            assert_eq!(tape.shape(y), &[2, 3, 3, 4]);
            for n in 0..2 {
                for c in 0..3 {
                    for r in 0..3 {
                        for q in 0..4 {
                            let cells = [
                                xv.get(&[n, c, 2 * r, 2 * q]),
                                xv.get(&[n, c, 2 * r, 2 * q + 1]),
                                xv.get(&[n, c, 2 * r + 1, 2 * q]),
                                xv.get(&[n, c, 2 * r + 1, 2 * q + 1]),
                            ];
                            let expect = match kind {
                                PoolKind::Max => cells.iter().cloned().fold(f64::MIN, f64::max),
                                PoolKind::Avg => cells.iter().sum::<f64>() / 4.0,
                            };
                            assert!((tape.value(y).get(&[n, c, r, q]) - expect).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_window_or_stride_is_rejected() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::ones(vec![1, 1, 4, 4]));
        for (window, stride) in [(0, 1), (2, 0)] {
            assert!(matches!(
                tape.pool(x, PoolKind::Max, PoolScope::Windowed { window, stride }),
                Err(Error::Parameter(_))
            ));
        }
    }
}
