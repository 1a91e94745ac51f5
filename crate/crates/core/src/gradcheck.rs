//! Central finite-difference checks for tape functions.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn evaluate<F>(f: &F, inputs: &[Tensor], track: bool) -> Result<(Tape, Vec<Var>, Var)>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), track)).collect();
    let out = f(&mut tape, &vars)?;
    if !tape.value(out).is_scalar() {
        return Err(Error::protocol(format!(
            "gradient check needs a scalar output, got shape {:?}; reduce it first",
            tape.shape(out)
        )));
    }
    Ok((tape, vars, out))
}

/// Largest `|analytic - numeric| / max(1, |analytic|)` over every entry of
/// every input.
pub fn gradient_check<F>(f: F, inputs: &[Tensor], eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let probes: Vec<(usize, usize)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(i, t)| (0..t.numel()).map(move |e| (i, e)))
        .collect();
    gradient_check_probes(f, inputs, eps, &probes)
}

/// Same as [`gradient_check`] restricted to `(input, element)` probes.
pub fn gradient_check_probes<F>(
    f: F,
    inputs: &[Tensor],
    eps: f64,
    probes: &[(usize, usize)],
) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::param(format!("finite-difference step {eps} outside [1e-7, 1e-3]")));
    }
    let (mut tape, vars, out) = evaluate(&f, inputs, true)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars.iter().map(|&v| tape.grad(v).unwrap().to_vec()).collect();
    drop(tape);
    let mut worst = 0.0f64;
    let mut shifted = inputs.to_vec();
    for &(i, e) in probes {
        let orig = inputs[i].data()[e];
        shifted[i].data_mut()[e] = orig + eps;
        let (t, _, o) = evaluate(&f, &shifted, false)?;
        let plus = t.value(o).item();
        shifted[i].data_mut()[e] = orig - eps;
        let (t, _, o) = evaluate(&f, &shifted, false)?;
        let minus = t.value(o).item();
        shifted[i].data_mut()[e] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i][e];
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_step_and_non_scalar() {
        let x = vec![Tensor::ones(vec![2])];
        assert!(gradient_check(|t, v| Ok(t.sum(v[0])), &x, 1e-1).is_err());
        assert!(matches!(
            gradient_check(|_, v| Ok(v[0]), &x, 1e-5),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn linear_layer_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inputs = vec![
            Tensor::from_fn(vec![3, 4], |_| rng.gen_range(-1.0..1.0)),
            Tensor::from_fn(vec![2, 4], |_| rng.gen_range(-1.0..1.0)),
            Tensor::from_fn(vec![2], |_| rng.gen_range(-1.0..1.0)),
        ];
        let err = gradient_check(
            |t, v| {
                let y = t.linear(v[0], v[1], Some(v[2]))?;
                let y2 = t.mul(y, y)?;
                Ok(t.sum(y2))
            },
            &inputs,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn sign_flipped_backward_is_caught() {
        let inputs = vec![Tensor::from_vec(vec![0.7, -1.3, 2.0])];
        let err = gradient_check(
            |t, v| {
                let x = t.value(v[0]).clone();
                let y = Tensor::from_fn(x.shape().to_vec(), |i| x.data()[i].powi(2));
                let sq = t.custom(
                    &[v[0]],
                    y,
                    Box::new(|ctx| {
                        // wrong sign on purpose
                        vec![Some(ctx.inputs[0].data().iter().zip(ctx.grad).map(|(x, g)| -2.0 * x * g).collect())]
                    }),
                );
                Ok(t.sum(sq))
            },
            &inputs,
            1e-5,
        )
        .unwrap();
        assert!(err > 0.5, "{err}");
    }

    #[test]
    fn relu_away_from_kink() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let inputs = vec![Tensor::from_fn(vec![20], |_| {
            let v: f64 = rng.gen_range(0.1..2.0);
            if rng.gen_bool(0.5) { v } else { -v }
        })];
        let err = gradient_check(
            |t, v| {
                let r = t.relu(v[0]);
                let sq = t.mul(r, v[0])?;
                Ok(t.sum(sq))
            },
            &inputs,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
