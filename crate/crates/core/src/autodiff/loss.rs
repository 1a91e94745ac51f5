use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Tape {
    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let Some(&k) = xs.last() else {
            return Err(Error::dim("softmax needs at least one axis"));
        };
        let mut out = Vec::with_capacity(self.value(x).numel());
        for row in self.value(x).data().chunks(k) {
            let lse = log_sum_exp(row);
            out.extend(row.iter().map(|v| (v - lse).exp()));
        }
        let value = Tensor::new(xs, out)?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let mut gx = Vec::with_capacity(ctx.grad.len());
                for (g, y) in ctx.grad.chunks(k).zip(ctx.output.data().chunks(k)) {
                    let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    gx.extend(g.iter().zip(y).map(|(gi, yi)| yi * (gi - dot)));
                }
                vec![Some(gx)]
            }),
        ))
    }

    /// Mean over rows of `-log softmax(logits)[label]`, via log-sum-exp.
    ///
    /// `logits` is `[B, K]`; every label must be below `K`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let xs = self.shape(logits).to_vec();
        if xs.len() != 2 || xs[0] != labels.len() {
            return Err(Error::dim(format!(
                "cross entropy needs [B, K] logits for {} labels, got {xs:?}",
                labels.len()
            )));
        }
        let (b, k) = (xs[0], xs[1]);
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::Label(format!("label {l} at position {i} is outside 0..{k}")));
        }
        let mut probs = Vec::with_capacity(b * k);
        let mut total = 0.0;
        for (row, &label) in self.value(logits).data().chunks(k).zip(labels) {
            let lse = log_sum_exp(row);
            total += lse - row[label];
            probs.extend(row.iter().map(|v| (v - lse).exp()));
        }
        let labels = labels.to_vec();
        Ok(self.custom(
            &[logits],
            Tensor::scalar(total / b as f64),
            Box::new(move |ctx| {
                let scale = ctx.grad[0] / b as f64;
                let mut gx: Vec<f64> = probs.iter().map(|p| p * scale).collect();
                for (r, &l) in labels.iter().enumerate() {
                    gx[r * k + l] -= scale;
                }
                vec![Some(gx)]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, -100.0, 0.0, 100.0]).unwrap());
        let y = tape.softmax(x).unwrap();
        for row in tape.value(y).data().chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range_label() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(vec![2, 5]));
        assert!(matches!(tape.softmax_cross_entropy(x, &[0, 5]), Err(Error::Label(_))));
    }
}
