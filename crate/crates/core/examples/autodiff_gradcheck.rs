//! Builds a small graph on the tape, runs backward, and compares the
//! gradients with central differences.

use dynser::autodiff::ConvOptions;
use dynser::gradcheck::gradient_check;
use dynser::{Result, Tape, Tensor, Var};

fn net(t: &mut Tape, v: &[Var]) -> Result<Var> {
    let y = t.conv(v[0], v[1], None, ConvOptions::same(3))?;
    let y = t.tanh(y);
    let p = t.mul(y, y)?;
    Ok(t.mean(p))
}

fn main() -> Result<()> {
    let x = Tensor::from_fn(vec![2, 1, 5, 5], |i| ((i * 37 % 11) as f64 - 5.0) / 5.0);
    let k = Tensor::from_fn(vec![3, 1, 3, 3], |i| ((i * 13 % 7) as f64 - 3.0) / 4.0);

    let mut tape = Tape::new();
    let vars = [tape.leaf(x.clone(), true), tape.leaf(k.clone(), true)];
    let loss = net(&mut tape, &vars)?;
    tape.backward(loss)?;
    println!("loss {:.6}", tape.value(loss).item());
    println!("d loss / d kernel[0] = {:?}", &tape.grad(vars[1]).unwrap()[..9]);

    let err = gradient_check(net, &[x, k], 1e-6)?;
    println!("max relative deviation from finite differences: {err:.2e}");
    Ok(())
}
