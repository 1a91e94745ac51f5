//! Runs CBAM and Dynamic-CBAM over a random feature map and prints the
//! attention maps they produce.

use dynser::attention::{Cbam, CbamConfig};
use dynser::nn::{ParamStore, Session};
use dynser::{Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = Tensor::from_fn(vec![2, 16, 4, 6], |_| rng.gen_range(-1.0..1.0));

    for (name, config) in [("CBAM", CbamConfig::cbam(16)), ("Dynamic-CBAM", CbamConfig::dynamic(16))] {
        let config = CbamConfig { reduction: 4, ..config };
        let mut store = ParamStore::new();
        let block = Cbam::init("blk", config, &mut store, &mut rng)?;
        let mut s = Session::inference(&store);
        let x = s.input(f.clone());
        let mc = block.channel_attention(&mut s, x)?;
        let ms = block.spatial_attention(&mut s, x, None)?;
        let y = block.forward(&mut s, x)?;
        println!("{name}: {} parameters", store.num_trainable());
        println!("  channel map sample 0: {:.3?}", &s.tape.value(mc).data()[..16]);
        println!("  spatial map sample 0 row 0: {:.3?}", &s.tape.value(ms).data()[..6]);
        println!("  output shape {:?}", s.tape.shape(y));
    }
    Ok(())
}
