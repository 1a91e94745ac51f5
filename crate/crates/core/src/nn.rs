//! Named parameter storage and the per-forward [`Session`] that binds
//! parameters onto a fresh [`Tape`].

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{BatchNormConfig, Mode, RunningStats, Tape, Var};
use crate::checkpoint::NamedTensor;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub value: Tensor,
    /// False for non-learned state such as batch-norm running statistics.
    pub trainable: bool,
}

/// Ordered map of namespaced tensors (`block.channel_mlp.w0`, ...).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    entries: IndexMap<String, Entry>,
}

/// Gradient per trainable parameter name.
pub type Gradients = IndexMap<String, Vec<f64>>;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_param(&mut self, name: impl Into<String>, value: Tensor) {
        self.entries.insert(name.into(), Entry { value, trainable: true });
    }

    pub fn insert_buffer(&mut self, name: impl Into<String>, value: Tensor) {
        self.entries.insert(name.into(), Entry { value, trainable: false });
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .map(|e| &e.value)
            .ok_or_else(|| Error::param(format!("no parameter named {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.entries
            .get_mut(name)
            .map(|e| &mut e.value)
            .ok_or_else(|| Error::param(format!("no parameter named {name}")))
    }

    /// Replaces a value, keeping its shape contract.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<()> {
        let slot = self.get_mut(name)?;
        if slot.shape() != value.shape() {
            return Err(Error::dim(format!(
                "{name}: expected shape {:?}, got {:?}",
                slot.shape(),
                value.shape()
            )));
        }
        *slot = value;
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Entry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn trainable(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.iter().filter(|(_, e)| e.trainable).map(|(k, e)| (k, &e.value))
    }

    /// Number of learnable scalars.
    pub fn num_trainable(&self) -> usize {
        self.trainable().map(|(_, t)| t.numel()).sum()
    }

    pub fn to_checkpoint(&self) -> Vec<NamedTensor> {
        self.iter()
            .map(|(name, e)| NamedTensor {
                name: name.to_string(),
                tensor: e.value.clone(),
                trainable: e.trainable,
            })
            .collect()
    }

    pub fn from_checkpoint(entries: Vec<NamedTensor>) -> Self {
        let mut store = ParamStore::new();
        for e in entries {
            store.entries.insert(e.name, Entry { value: e.tensor, trainable: e.trainable });
        }
        store
    }

    pub fn apply_updates(&mut self, updates: Vec<(String, Tensor)>) -> Result<()> {
        for (name, value) in updates {
            self.set(&name, value)?;
        }
        Ok(())
    }
}

/// Weight initializers; every draw comes from the caller's generator.
pub mod init {
    use super::*;

    pub fn uniform(shape: Vec<usize>, bound: f64, rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(shape, |_| rng.gen_range(-bound..=bound))
    }

    /// Kaiming-uniform for layers feeding a ReLU: bound `sqrt(6 / fan_in)`.
    pub fn kaiming(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
        uniform(shape, (6.0 / fan_in as f64).sqrt(), rng)
    }

    /// Fan-in scaling `1 / sqrt(fan_in)` for gates and attention heads.
    pub fn fan_in(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
        uniform(shape, 1.0 / (fan_in as f64).sqrt(), rng)
    }
}

/// One forward (and optional backward) pass over a [`ParamStore`].
///
/// Parameters are copied onto the tape lazily on first use. Batch-norm
/// running statistics computed in train mode are staged and only written
/// back by [`ParamStore::apply_updates`], so the store stays immutable while
/// a session is alive.
pub struct Session<'a> {
    pub tape: Tape,
    store: &'a ParamStore,
    bound: IndexMap<String, Var>,
    mode: Mode,
    track: bool,
    updates: Vec<(String, Tensor)>,
    rng: ChaCha8Rng,
}

impl<'a> Session<'a> {
    /// Session that records gradients for every trainable parameter.
    pub fn new(store: &'a ParamStore, mode: Mode, seed: u64) -> Self {
        Session {
            tape: Tape::new(),
            store,
            bound: IndexMap::new(),
            mode,
            track: true,
            updates: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Eval-mode session without gradient tracking.
    pub fn inference(store: &'a ParamStore) -> Self {
        let mut s = Self::new(store, Mode::Eval, 0);
        s.track = false;
        s
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn store(&self) -> &ParamStore {
        self.store
    }

    pub fn param(&mut self, name: &str) -> Result<Var> {
        if let Some(&v) = self.bound.get(name) {
            return Ok(v);
        }
        let entry = self
            .store
            .entries
            .get(name)
            .ok_or_else(|| Error::param(format!("no parameter named {name}")))?;
        let v = self.tape.leaf(entry.value.clone(), entry.trainable && self.track);
        self.bound.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn input(&mut self, value: Tensor) -> Var {
        self.tape.constant(value)
    }

    pub fn buffer(&self, name: &str) -> Result<&Tensor> {
        self.store.get(name)
    }

    pub fn stage(&mut self, name: &str, value: Tensor) {
        self.updates.push((name.to_string(), value));
    }

    /// Batch normalization whose parameters live under `prefix`.
    pub fn batch_norm(&mut self, prefix: &str, x: Var) -> Result<Var> {
        let gamma = self.param(&format!("{prefix}.gamma"))?;
        let beta = self.param(&format!("{prefix}.beta"))?;
        let mean_key = format!("{prefix}.running_mean");
        let var_key = format!("{prefix}.running_var");
        let mut stats = RunningStats {
            mean: self.buffer(&mean_key)?.data().to_vec(),
            var: self.buffer(&var_key)?.data().to_vec(),
        };
        let y = self
            .tape
            .batch_norm(x, gamma, beta, &mut stats, self.mode, BatchNormConfig::default())?;
        if self.mode == Mode::Train {
            self.stage(&mean_key, Tensor::from_vec(stats.mean));
            self.stage(&var_key, Tensor::from_vec(stats.var));
        }
        Ok(y)
    }

    /// Runs the reverse pass and collects gradients by parameter name.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        self.tape.backward(loss)?;
        Ok(self
            .bound
            .iter()
            .filter_map(|(name, &v)| self.tape.grad(v).map(|g| (name.clone(), g.to_vec())))
            .collect())
    }

    pub fn into_updates(self) -> Vec<(String, Tensor)> {
        self.updates
    }
}

/// Registers `gamma`/`beta` and running statistics for a batch-norm layer.
pub fn init_batch_norm(store: &mut ParamStore, prefix: &str, channels: usize) {
    store.insert_param(format!("{prefix}.gamma"), Tensor::ones(vec![channels]));
    store.insert_param(format!("{prefix}.beta"), Tensor::zeros(vec![channels]));
    store.insert_buffer(format!("{prefix}.running_mean"), Tensor::zeros(vec![channels]));
    store.insert_buffer(format!("{prefix}.running_var"), Tensor::ones(vec![channels]));
}

/// Finite-difference check of a session function against every (or the
/// probed) trainable entries of `store`.
///
/// Returns the largest `|analytic - numeric| / max(1, |analytic|)`.
pub fn check_store_gradients<F>(
    store: &ParamStore,
    mode: Mode,
    f: F,
    eps: f64,
    probes: Option<&[(String, usize)]>,
) -> Result<f64>
where
    F: Fn(&mut Session<'_>) -> Result<Var>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::param(format!("finite-difference step {eps} outside [1e-7, 1e-3]")));
    }
    let run = |s: &ParamStore| -> Result<f64> {
        let mut session = Session::new(s, mode, 0);
        let out = f(&mut session)?;
        if !session.tape.value(out).is_scalar() {
            return Err(Error::protocol("gradient check needs a scalar output"));
        }
        Ok(session.tape.value(out).item())
    };
    let grads = {
        let mut session = Session::new(store, mode, 0);
        let out = f(&mut session)?;
        session.backward(out)?
    };
    let all: Vec<(String, usize)>;
    let probes = match probes {
        Some(p) => p,
        None => {
            all = store
                .trainable()
                .flat_map(|(n, t)| (0..t.numel()).map(move |i| (n.to_string(), i)))
                .collect();
            &all
        }
    };
    let mut shifted = store.clone();
    let mut worst = 0.0f64;
    for (name, i) in probes {
        let orig = store.get(name)?.data()[*i];
        shifted.get_mut(name)?.data_mut()[*i] = orig + eps;
        let plus = run(&shifted)?;
        shifted.get_mut(name)?.data_mut()[*i] = orig - eps;
        let minus = run(&shifted)?;
        shifted.get_mut(name)?.data_mut()[*i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let analytic = grads.get(name).map_or(0.0, |g| g[*i]);
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(1.0));
    }
    Ok(worst)
}
