//! A two-layer bidirectional GRU over a short random sequence, trained for
//! a few Adam steps to pull its summary toward a target.

use dynser::nn::{ParamStore, Session};
use dynser::recurrent::{GruConfig, GruStack};
use dynser::train::{adam_step, AdamConfig, AdamState};
use dynser::{Mode, Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let config = GruConfig { input: 4, hidden: 6, layers: 2, bidirectional: true, dropout: 0.1 };
    let mut store = ParamStore::new();
    let gru = GruStack::init("gru", config, &mut store, &mut rng)?;
    let xs = Tensor::from_fn(vec![3, 10, 4], |_| rng.gen_range(-1.0..1.0));
    let target = Tensor::from_fn(vec![3, gru.output_width()], |i| if i % 2 == 0 { 0.5 } else { -0.5 });

    let mut state = AdamState::default();
    let adam = AdamConfig { lr: 1e-2, ..AdamConfig::default() };
    for step in 0..=40 {
        let (loss, grads) = {
            let mut s = Session::new(&store, Mode::Train, step);
            let x = s.input(xs.clone());
            let out = gru.forward(&mut s, x)?;
            let t = s.input(target.clone());
            let d = s.tape.sub(out.summary, t)?;
            let sq = s.tape.mul(d, d)?;
            let loss = s.tape.mean(sq);
            (s.tape.value(loss).item(), s.backward(loss)?)
        };
        if step % 10 == 0 {
            println!("step {step:2}: mse {loss:.5}");
        }
        adam_step(&mut store, &grads, &mut state, &adam)?;
    }
    Ok(())
}
