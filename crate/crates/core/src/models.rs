//! The architecture lineup: CBM stacks, waveform and MFCC streams,
//! dual-stream fusion and the Dynamic-CBAM + Bi-GRU network.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{Cbam, CbamConfig, SpatialConv};
use crate::autodiff::{ConvOptions, Mode, PoolKind, PoolScope, Var};
use crate::checkpoint;
use crate::error::{Error, Result};
use crate::nn::{init, init_batch_norm, ParamStore, Session};
use crate::recurrent::{GruConfig, GruStack};
use crate::tensor::Tensor;

pub const N_CLASSES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Anger = 0,
    Happiness = 1,
    Sadness = 2,
    Fear = 3,
    Neutral = 4,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; N_CLASSES] = [
        EmotionLabel::Anger,
        EmotionLabel::Happiness,
        EmotionLabel::Sadness,
        EmotionLabel::Fear,
        EmotionLabel::Neutral,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Result<Self> {
        Self::ALL
            .get(id)
            .copied()
            .ok_or_else(|| Error::Label(format!("label id {id} is outside 0..{N_CLASSES}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Happiness => "happiness",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Ok(id) = s.parse::<usize>() {
            return Self::from_id(id);
        }
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Label(format!("unknown emotion label {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    OneStreamWave,
    OneStreamGruWave,
    OneStreamGruMfcc,
    OneStreamBiGruWave,
    DualStreamBiGru,
    DualStreamDynCbam,
    DualStreamDynCbamBiGru,
    Proposed,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 8] = [
        ModelVariant::OneStreamWave,
        ModelVariant::OneStreamGruWave,
        ModelVariant::OneStreamGruMfcc,
        ModelVariant::OneStreamBiGruWave,
        ModelVariant::DualStreamBiGru,
        ModelVariant::DualStreamDynCbam,
        ModelVariant::DualStreamDynCbamBiGru,
        ModelVariant::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::OneStreamWave => "one-stream-wave",
            ModelVariant::OneStreamGruWave => "one-stream-gru-wave",
            ModelVariant::OneStreamGruMfcc => "one-stream-gru-mfcc",
            ModelVariant::OneStreamBiGruWave => "one-stream-bi-gru-wave",
            ModelVariant::DualStreamBiGru => "dual-stream-bi-gru",
            ModelVariant::DualStreamDynCbam => "dual-stream-dyn-cbam",
            ModelVariant::DualStreamDynCbamBiGru => "dual-stream-dyn-cbam-bi-gru",
            ModelVariant::Proposed => "proposed",
        }
    }

    /// Layer layout, echoed into reports.
    pub fn description(self) -> &'static str {
        match self {
            ModelVariant::OneStreamWave => "wave: 1D CBM stack -> global average pool -> classifier",
            ModelVariant::OneStreamGruWave => "wave: 1D CBM stack -> GRU -> classifier",
            ModelVariant::OneStreamGruMfcc => {
                "mfcc: 2D CBM stack -> per-frame flatten -> GRU -> classifier (CBM features feed the GRU)"
            }
            ModelVariant::OneStreamBiGruWave => "wave: 1D CBM stack -> Bi-GRU -> classifier",
            ModelVariant::DualStreamBiGru => {
                "wave: 1D CBM stack -> Bi-GRU; mfcc: 2D CBM stack -> per-frame flatten -> Bi-GRU; concat -> classifier"
            }
            ModelVariant::DualStreamDynCbam => {
                "wave: 1D CBM stack -> Bi-GRU; mfcc: 2D CBM stack -> Dynamic-CBAM -> global average pool; concat -> classifier"
            }
            ModelVariant::DualStreamDynCbamBiGru => {
                "wave: 1D CBM stack -> Bi-GRU; mfcc: 2D CBM stack -> Dynamic-CBAM -> per-frame flatten -> Bi-GRU; concat -> classifier"
            }
            ModelVariant::Proposed => {
                "mfcc: 2D CBM stack -> Dynamic-CBAM -> per-frame flatten -> Bi-GRU -> dense -> relu -> dense(5)"
            }
        }
    }

    pub fn uses_wave(self) -> bool {
        !matches!(self, ModelVariant::OneStreamGruMfcc | ModelVariant::Proposed)
    }

    pub fn uses_mfcc(self) -> bool {
        !matches!(
            self,
            ModelVariant::OneStreamWave | ModelVariant::OneStreamGruWave | ModelVariant::OneStreamBiGruWave
        )
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL.into_iter().find(|v| v.name() == key).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
            Error::Config(format!("unknown model variant {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Input extents the network is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDims {
    pub n_mfcc: usize,
    pub frames: usize,
    pub wave_samples: usize,
}

impl Default for InputDims {
    fn default() -> Self {
        InputDims {
            n_mfcc: 40,
            frames: 498,
            wave_samples: 80000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelHyper {
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub pool: usize,
    pub gru_hidden: usize,
    pub gru_layers: usize,
    pub cbam_reduction: usize,
    pub odconv_kernels: usize,
    pub odconv_reduction: usize,
    pub spatial_kernel: usize,
    pub dense: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub input: InputDims,
}

impl Default for ModelHyper {
    fn default() -> Self {
        ModelHyper {
            channels: vec![16, 32, 64, 128],
            kernel: 3,
            pool: 2,
            gru_hidden: 128,
            gru_layers: 1,
            cbam_reduction: 16,
            odconv_kernels: 4,
            odconv_reduction: 4,
            spatial_kernel: 7,
            dense: 128,
            n_classes: N_CLASSES,
            dropout: 0.3,
            input: InputDims::default(),
        }
    }
}

impl ModelHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::param(m));
        if self.n_classes != N_CLASSES {
            return bad(format!("n_classes must be {N_CLASSES}, got {}", self.n_classes));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return bad(format!("channel ladder must be non-empty and positive: {:?}", self.channels));
        }
        if self.kernel.is_multiple_of(2) || self.spatial_kernel.is_multiple_of(2) {
            return bad(format!(
                "kernel sizes must be odd (conv {}, spatial {})",
                self.kernel, self.spatial_kernel
            ));
        }
        if self.pool < 2 {
            return bad(format!("pool window must be at least 2, got {}", self.pool));
        }
        if [self.gru_hidden, self.gru_layers, self.dense, self.odconv_kernels, self.odconv_reduction]
            .contains(&0)
        {
            return bad("hidden widths, layer counts and ODConv sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} must be in [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// Spatial extent after the CBM stack, or a dimension error when a
    /// block would pool it away.
    fn pooled(&self, mut n: usize, what: &str) -> Result<usize> {
        for (i, _) in self.channels.iter().enumerate() {
            n /= self.pool;
            if n == 0 {
                return Err(Error::dim(format!(
                    "{what} axis collapses to 0 at CBM block {i}; use fewer blocks or longer input"
                )));
            }
        }
        Ok(n)
    }

    fn top_channels(&self) -> usize {
        *self.channels.last().expect("validated")
    }
}

/// Conv (stride 1, same padding, no bias) -> batch norm -> relu -> max pool.
///
/// Rank follows the input: `[B, C, L]` or `[B, C, H, W]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CbmBlock {
    pub prefix: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub pool: usize,
    pub rank: usize,
}

impl CbmBlock {
    pub fn init(block: CbmBlock, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Self {
        let k = block.kernel;
        let (shape, fan_in) = match block.rank {
            1 => (vec![block.out_channels, block.in_channels, k], block.in_channels * k),
            _ => (vec![block.out_channels, block.in_channels, k, k], block.in_channels * k * k),
        };
        store.insert_param(format!("{}.conv", block.prefix), init::kaiming(shape, fan_in, rng));
        init_batch_norm(store, &format!("{}.bn", block.prefix), block.out_channels);
        block
    }

    pub fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let want = self.rank + 2;
        if s.tape.shape(x).len() != want || s.tape.shape(x)[1] != self.in_channels {
            return Err(Error::dim(format!(
                "{}: expected {}-D input with {} channels, got {:?}",
                self.prefix,
                want,
                self.in_channels,
                s.tape.shape(x)
            )));
        }
        if s.tape.shape(x)[2..].iter().any(|&n| n < self.pool) {
            return Err(Error::dim(format!(
                "{}: spatial extent {:?} does not survive a pool of {}",
                self.prefix,
                &s.tape.shape(x)[2..],
                self.pool
            )));
        }
        let w = s.param(&format!("{}.conv", self.prefix))?;
        let y = s.tape.conv(x, w, None, ConvOptions::same(self.kernel))?;
        let y = s.batch_norm(&format!("{}.bn", self.prefix), y)?;
        let y = s.tape.relu(y);
        s.tape.pool(
            y,
            PoolKind::Max,
            PoolScope::Windowed {
                window: self.pool,
                stride: self.pool,
            },
        )
    }
}

fn cbm_stack(prefix: &str, hyper: &ModelHyper, rank: usize, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Vec<CbmBlock> {
    let mut cin = 1;
    hyper
        .channels
        .iter()
        .enumerate()
        .map(|(i, &cout)| {
            let block = CbmBlock {
                prefix: format!("{prefix}.cbm{i}"),
                in_channels: cin,
                out_channels: cout,
                kernel: hyper.kernel,
                pool: hyper.pool,
                rank,
            };
            cin = cout;
            CbmBlock::init(block, store, rng)
        })
        .collect()
}

/// How a stream turns its CBM features into a fixed-size embedding.
#[derive(Clone, Debug, PartialEq)]
enum Summary {
    GlobalAverage,
    Recurrent(GruStack),
}

#[derive(Clone, Debug, PartialEq)]
struct Stream {
    blocks: Vec<CbmBlock>,
    cbam: Option<Cbam>,
    summary: Summary,
    width: usize,
}

impl Stream {
    fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let mut x = x;
        for b in &self.blocks {
            x = b.forward(s, x)?;
        }
        if let Some(cbam) = &self.cbam {
            x = cbam.forward(s, x)?;
        }
        match &self.summary {
            Summary::GlobalAverage => s.tape.pool(x, PoolKind::Avg, PoolScope::Global),
            Summary::Recurrent(gru) => {
                let seq = to_sequence(s, x)?;
                Ok(gru.forward(s, seq)?.summary)
            }
        }
    }
}

/// `[B, C, L] -> [B, L, C]` and `[B, C, F, T] -> [B, T, C·F]`.
pub fn to_sequence(s: &mut Session<'_>, x: Var) -> Result<Var> {
    let shape = s.tape.shape(x).to_vec();
    match shape[..] {
        [_, _, _] => s.tape.permute(x, &[0, 2, 1]),
        [b, c, f, t] => {
            let p = s.tape.permute(x, &[0, 3, 1, 2])?;
            s.tape.reshape(p, &[b, t, c * f])
        }
        _ => Err(Error::dim(format!("cannot read {shape:?} as a sequence"))),
    }
}

/// Network structure; parameters live in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub variant: ModelVariant,
    pub hyper: ModelHyper,
    wave: Option<Stream>,
    mfcc: Option<Stream>,
}

/// Waveforms `[B, 1, L]` and/or MFCC images `[B, 1, n_mfcc, frames]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelInput {
    pub wave: Option<Tensor>,
    pub mfcc: Option<Tensor>,
}

impl ModelInput {
    pub fn batch_size(&self) -> Option<usize> {
        self.wave.as_ref().or(self.mfcc.as_ref()).map(|t| t.shape()[0])
    }
}

impl Architecture {
    pub fn forward(&self, s: &mut Session<'_>, input: &ModelInput) -> Result<Var> {
        let mut parts = Vec::new();
        let streams = [("wave", &self.wave, &input.wave), ("mfcc", &self.mfcc, &input.mfcc)];
        let mut batch = None;
        for (name, stream, data) in streams {
            let Some(stream) = stream else { continue };
            let data = data.as_ref().ok_or_else(|| {
                Error::InputContract(format!("{} needs a {name} input", self.variant))
            })?;
            let b = data.shape().first().copied().unwrap_or(0);
            if *batch.get_or_insert(b) != b {
                return Err(Error::InputContract("wave and mfcc batches differ in size".into()));
            }
            let x = s.input(data.clone());
            parts.push(stream.forward(s, x)?);
        }
        let emb = if parts.len() == 1 { parts[0] } else { s.tape.concat(&parts, 1)? };
        let w0 = s.param("head.fc0.weight")?;
        let b0 = s.param("head.fc0.bias")?;
        let w1 = s.param("head.fc1.weight")?;
        let b1 = s.param("head.fc1.bias")?;
        let h = s.tape.linear(emb, w0, Some(b0))?;
        let h = s.tape.relu(h);
        s.tape.linear(h, w1, Some(b1))
    }

    pub fn embedding_width(&self) -> usize {
        self.wave.iter().chain(&self.mfcc).map(|s| s.width).sum()
    }
}

/// An architecture with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    pub params: ParamStore,
    pub seed: u64,
}

pub fn build_model(variant: ModelVariant, hyper: &ModelHyper, seed: u64) -> Result<Model> {
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let top = hyper.top_channels();
    let gru = |prefix: &str, input: usize, bidirectional: bool, store: &mut ParamStore, rng: &mut ChaCha8Rng| {
        let config = GruConfig {
            input,
            hidden: hyper.gru_hidden,
            layers: hyper.gru_layers,
            bidirectional,
            dropout: hyper.dropout,
        };
        GruStack::init(prefix, config, store, rng)
    };

    let wave = if variant.uses_wave() {
        hyper.pooled(hyper.input.wave_samples, "waveform")?;
        let blocks = cbm_stack("wave", hyper, 1, &mut store, &mut rng);
        let summary = match variant {
            ModelVariant::OneStreamWave => Summary::GlobalAverage,
            ModelVariant::OneStreamGruWave => Summary::Recurrent(gru("wave.gru", top, false, &mut store, &mut rng)?),
            _ => Summary::Recurrent(gru("wave.gru", top, true, &mut store, &mut rng)?),
        };
        let width = match &summary {
            Summary::GlobalAverage => top,
            Summary::Recurrent(g) => g.output_width(),
        };
        Some(Stream { blocks, cbam: None, summary, width })
    } else {
        None
    };

    let mfcc = if variant.uses_mfcc() {
        let f = hyper.pooled(hyper.input.n_mfcc, "MFCC coefficient")?;
        hyper.pooled(hyper.input.frames, "MFCC frame")?;
        let blocks = cbm_stack("mfcc", hyper, 2, &mut store, &mut rng);
        let cbam = match variant {
            ModelVariant::DualStreamDynCbam | ModelVariant::DualStreamDynCbamBiGru | ModelVariant::Proposed => {
                let config = CbamConfig {
                    channels: top,
                    reduction: hyper.cbam_reduction,
                    spatial_kernel: hyper.spatial_kernel,
                    spatial: SpatialConv::Dynamic {
                        kernels: hyper.odconv_kernels,
                        reduction: hyper.odconv_reduction,
                    },
                };
                Some(Cbam::init("mfcc.dyn_cbam", config, &mut store, &mut rng)?)
            }
            _ => None,
        };
        let summary = match variant {
            ModelVariant::DualStreamDynCbam => Summary::GlobalAverage,
            ModelVariant::OneStreamGruMfcc => Summary::Recurrent(gru("mfcc.gru", top * f, false, &mut store, &mut rng)?),
            _ => Summary::Recurrent(gru("mfcc.gru", top * f, true, &mut store, &mut rng)?),
        };
        let width = match &summary {
            Summary::GlobalAverage => top,
            Summary::Recurrent(g) => g.output_width(),
        };
        Some(Stream { blocks, cbam, summary, width })
    } else {
        None
    };

    let arch = Architecture {
        variant,
        hyper: hyper.clone(),
        wave,
        mfcc,
    };
    let emb = arch.embedding_width();
    store.insert_param("head.fc0.weight", init::kaiming(vec![hyper.dense, emb], emb, &mut rng));
    store.insert_param("head.fc0.bias", Tensor::zeros(vec![hyper.dense]));
    store.insert_param("head.fc1.weight", init::fan_in(vec![N_CLASSES, hyper.dense], hyper.dense, &mut rng));
    store.insert_param("head.fc1.bias", Tensor::zeros(vec![N_CLASSES]));
    Ok(Model { arch, params: store, seed })
}

impl Model {
    /// Logits `[B, 5]` without gradient tracking.
    pub fn forward(&self, input: &ModelInput, mode: Mode) -> Result<Tensor> {
        model_forward(&self.arch, &self.params, input, mode)
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_trainable()
    }

    pub fn sidecar(&self) -> ModelSidecar {
        ModelSidecar {
            variant: self.arch.variant,
            description: self.arch.variant.description().to_string(),
            hyper: self.arch.hyper.clone(),
            seed: self.seed,
            labels: EmotionLabel::ALL.iter().map(|l| (l.id(), l.name().to_string())).collect(),
        }
    }

    /// Writes the tensors to `path` and the sidecar to `path` + `.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save(path, &self.params.to_checkpoint())?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(&side, json).map_err(|e| Error::file(&side, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::file(&side, e))?;
        let meta: ModelSidecar = serde_json::from_str(&text)?;
        let mut model = build_model(meta.variant, &meta.hyper, meta.seed)?;
        let loaded = ParamStore::from_checkpoint(checkpoint::load(path)?);
        let names: Vec<String> = model.params.iter().map(|(n, _)| n.to_string()).collect();
        if loaded.len() != names.len() {
            return Err(Error::Data(format!(
                "{}: checkpoint holds {} tensors, {} expects {}",
                path.display(),
                loaded.len(),
                meta.variant,
                names.len()
            )));
        }
        for name in names {
            model.params.set(&name, loaded.get(&name)?.clone())?;
        }
        Ok(model)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub variant: ModelVariant,
    pub description: String,
    pub hyper: ModelHyper,
    pub seed: u64,
    pub labels: Vec<(usize, String)>,
}

/// Eval- or train-mode logits without gradient tracking. Train mode uses
/// batch statistics but does not update running statistics.
pub fn model_forward(arch: &Architecture, params: &ParamStore, input: &ModelInput, mode: Mode) -> Result<Tensor> {
    let mut s = Session::inference(params);
    if mode == Mode::Train {
        s = Session::new(params, Mode::Train, 0);
    }
    let logits = arch.forward(&mut s, input)?;
    let out = s.tape.value(logits).clone();
    if !out.all_finite() {
        return Err(Error::Numeric(format!("{} produced non-finite logits", arch.variant)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_ids_are_frozen() {
        let names: Vec<&str> = EmotionLabel::ALL.iter().map(|l| l.name()).collect();
        assert_eq!(names, ["anger", "happiness", "sadness", "fear", "neutral"]);
        for (i, l) in EmotionLabel::ALL.iter().enumerate() {
            assert_eq!(l.id(), i);
            assert_eq!(EmotionLabel::from_id(i).unwrap(), *l);
            assert_eq!(l.name().parse::<EmotionLabel>().unwrap(), *l);
        }
        assert!(matches!(EmotionLabel::from_id(5), Err(Error::Label(_))));
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
        assert!("lstm".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn default_stack_halves_to_2_by_31() {
        let h = ModelHyper::default();
        assert_eq!(h.pooled(40, "f").unwrap(), 2);
        assert_eq!(h.pooled(498, "t").unwrap(), 31);
        let short = ModelHyper { input: InputDims { n_mfcc: 8, ..InputDims::default() }, ..h };
        assert!(matches!(build_model(ModelVariant::Proposed, &short, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn hyper_validation() {
        let h = ModelHyper { n_classes: 4, ..ModelHyper::default() };
        assert!(matches!(h.validate(), Err(Error::Parameter(_))));
        let h = ModelHyper { kernel: 4, ..ModelHyper::default() };
        assert!(h.validate().is_err());
    }

    #[test]
    fn sidecar_path_appends_json() {
        assert_eq!(sidecar_path(Path::new("out/model.ckpt")), PathBuf::from("out/model.ckpt.json"));
    }
}
