//! Channel and spatial attention, CBAM, omni-dimensional dynamic
//! convolution (ODConv) and Dynamic-CBAM.
//!
//! Feature maps are `[B, C, H, W]`. The tape-level functions take bound
//! [`Var`]s; [`Cbam`] and [`Odconv`] own the parameter names under a prefix
//! and run through a [`Session`].

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ConvOptions, PoolKind, PoolScope, ReduceKind, Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{init, init_batch_norm, ParamStore, Session};
use crate::tensor::Tensor;

/// Hidden width of the channel MLP: `c / r` with `r` clamped to `c`.
pub fn reduced_width(channels: usize, reduction: usize) -> Result<usize> {
    if channels == 0 || reduction == 0 {
        return Err(Error::param("channels and reduction ratio must be positive"));
    }
    let r = reduction.min(channels);
    if !channels.is_multiple_of(r) {
        return Err(Error::param(format!(
            "{channels} channels are not divisible by reduction ratio {r}"
        )));
    }
    Ok(channels / r)
}

fn channel_mlp(tape: &mut Tape, v: Var, w0: Var, w1: Var) -> Result<Var> {
    let h = tape.linear(v, w0, None)?;
    let h = tape.relu(h);
    tape.linear(h, w1, None)
}

/// Channel attention `M_c = sigmoid(MLP(avg(F)) + MLP(max(F)))`, shape `[B, C]`.
///
/// `w0` is `[C/r, C]` and `w1` is `[C, C/r]`.
pub fn channel_attention(tape: &mut Tape, f: Var, w0: Var, w1: Var) -> Result<Var> {
    let c = *tape.shape(f).get(1).ok_or_else(|| Error::dim("feature map needs a channel axis"))?;
    if tape.shape(w0).get(1) != Some(&c) {
        return Err(Error::dim(format!(
            "channel MLP expects {:?} input channels, feature map has {c}",
            tape.shape(w0).get(1)
        )));
    }
    let avg = tape.pool(f, PoolKind::Avg, PoolScope::Global)?;
    let max = tape.pool(f, PoolKind::Max, PoolScope::Global)?;
    let a = channel_mlp(tape, avg, w0, w1)?;
    let m = channel_mlp(tape, max, w0, w1)?;
    let s = tape.add(a, m)?;
    Ok(tape.sigmoid(s))
}

/// Per-pixel channel mean and channel max stacked into `[B, 2, H, W]`.
pub fn pooled_channel_maps(tape: &mut Tape, f: Var) -> Result<Var> {
    let avg = tape.reduce(f, 1, ReduceKind::Mean)?;
    let max = tape.reduce(f, 1, ReduceKind::Max)?;
    tape.concat(&[avg, max], 1)
}

/// Spatial attention `M_s = sigmoid(conv_k([avg; max]))`, shape `[B, 1, H, W]`.
///
/// `kernel` is `[1, 2, k, k]` with odd `k`.
pub fn spatial_attention(tape: &mut Tape, f: Var, kernel: Var) -> Result<Var> {
    let k = check_spatial_kernel(tape.shape(kernel))?;
    let maps = pooled_channel_maps(tape, f)?;
    let y = tape.conv(maps, kernel, None, ConvOptions::same(k))?;
    Ok(tape.sigmoid(y))
}

fn check_spatial_kernel(shape: &[usize]) -> Result<usize> {
    match shape {
        [1, 2, k, k2] if k == k2 && k % 2 == 1 => Ok(*k),
        _ => Err(Error::param(format!(
            "spatial attention kernel must be [1, 2, k, k] with odd k, got {shape:?}"
        ))),
    }
}

/// `M ⊗ F` with `M` of shape `[B, C]` broadcast over the spatial axes.
pub fn scale_channels(tape: &mut Tape, f: Var, m: Var) -> Result<Var> {
    let mut shape = tape.shape(m).to_vec();
    shape.resize(tape.shape(f).len(), 1);
    let m = tape.reshape(m, &shape)?;
    tape.mul(f, m)
}

/// Attention vectors produced by an ODConv head, one row per sample.
#[derive(Clone, Copy, Debug)]
pub struct OdconvAttention {
    /// `[B, k, k]`, sigmoid.
    pub spatial: Var,
    /// `[B, c_in]`, sigmoid.
    pub input: Var,
    /// `[B, c_out]`, sigmoid.
    pub output: Var,
    /// `[B, m]`, softmax.
    pub kernel: Var,
}

/// Fixed attention values that replace the computed ones, shared by every
/// sample in the batch.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionOverride {
    pub spatial: Tensor,
    pub input: Tensor,
    pub output: Tensor,
    pub kernel: Tensor,
}

impl AttentionOverride {
    /// Every attention entry set to `value`.
    pub fn constant(spec: &OdconvSpec, value: f64) -> Self {
        AttentionOverride {
            spatial: Tensor::full(vec![spec.kernel_size, spec.kernel_size], value),
            input: Tensor::full(vec![spec.in_channels], value),
            output: Tensor::full(vec![spec.out_channels], value),
            kernel: Tensor::full(vec![spec.kernels], value),
        }
    }

    fn check(&self, spec: &OdconvSpec) -> Result<()> {
        let k = spec.kernel_size;
        let want: [(&str, &Tensor, Vec<usize>); 4] = [
            ("spatial", &self.spatial, vec![k, k]),
            ("input", &self.input, vec![spec.in_channels]),
            ("output", &self.output, vec![spec.out_channels]),
            ("kernel", &self.kernel, vec![spec.kernels]),
        ];
        for (name, t, shape) in want {
            if t.shape() != shape.as_slice() {
                return Err(Error::param(format!(
                    "{name} attention override must be {shape:?}, got {:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }
}

/// ODConv head and kernel bank parameters, bound onto a tape.
#[derive(Clone, Copy, Debug)]
pub struct OdconvVars {
    /// `[m, c_out, c_in, k, k]`.
    pub kernels: Var,
    pub fc_w: Var,
    pub fc_b: Var,
    pub spatial_w: Var,
    pub spatial_b: Var,
    pub input_w: Var,
    pub input_b: Var,
    pub output_w: Var,
    pub output_b: Var,
    pub kernel_w: Var,
    pub kernel_b: Var,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdconvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    /// Number of candidate kernels `m`.
    pub kernels: usize,
    /// Head reduction ratio `γ`.
    pub reduction: usize,
}

impl OdconvSpec {
    pub fn hidden(&self) -> usize {
        self.in_channels.div_ceil(self.reduction).max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 || self.kernels == 0 || self.reduction == 0 {
            return Err(Error::param(format!("ODConv sizes must be positive: {self:?}")));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::param(format!("ODConv kernel size {} must be odd", self.kernel_size)));
        }
        Ok(())
    }
}

/// Squeeze `x`, project to `⌈c_in/γ⌉`, then four branch heads.
pub fn odconv_attention(tape: &mut Tape, x: Var, v: &OdconvVars) -> Result<OdconvAttention> {
    let cin = tape.shape(v.fc_w)[1];
    if tape.shape(x).get(1) != Some(&cin) {
        return Err(Error::dim(format!(
            "ODConv head expects {cin} input channels, got shape {:?}",
            tape.shape(x)
        )));
    }
    let b = tape.shape(x)[0];
    let pooled = tape.pool(x, PoolKind::Avg, PoolScope::Global)?;
    let h = tape.linear(pooled, v.fc_w, Some(v.fc_b))?;
    let h = tape.relu(h);
    let s = tape.linear(h, v.spatial_w, Some(v.spatial_b))?;
    let s = tape.sigmoid(s);
    let k = (tape.shape(s)[1] as f64).sqrt().round() as usize;
    let spatial = tape.reshape(s, &[b, k, k])?;
    let i = tape.linear(h, v.input_w, Some(v.input_b))?;
    let input = tape.sigmoid(i);
    let o = tape.linear(h, v.output_w, Some(v.output_b))?;
    let output = tape.sigmoid(o);
    let w = tape.linear(h, v.kernel_w, Some(v.kernel_b))?;
    let kernel = tape.softmax(w)?;
    Ok(OdconvAttention { spatial, input, output, kernel })
}

/// Per-sample kernel `Σ_m α_w[m] · (α_s ⊙ α_c ⊙ α_f ⊙ w_m)`, shape
/// `[B, c_out, c_in, k, k]`.
pub fn odconv_kernel(tape: &mut Tape, kernels: Var, att: &OdconvAttention) -> Result<Var> {
    let ks = tape.shape(kernels).to_vec();
    let (m, cout, cin, kh, kw) = (ks[0], ks[1], ks[2], ks[3], ks[4]);
    let b = tape.shape(att.kernel)[0];
    let bank = tape.reshape(kernels, &[1, m, cout, cin, kh, kw])?;
    let aw = tape.reshape(att.kernel, &[b, m, 1, 1, 1, 1])?;
    let mixed = tape.mul(bank, aw)?;
    let mixed = tape.reduce(mixed, 1, ReduceKind::Sum)?;
    let mixed = tape.reshape(mixed, &[b, cout, cin, kh, kw])?;
    let as_ = tape.reshape(att.spatial, &[b, 1, 1, kh, kw])?;
    let ac = tape.reshape(att.input, &[b, 1, cin, 1, 1])?;
    let af = tape.reshape(att.output, &[b, cout, 1, 1, 1])?;
    let scale = tape.mul(as_, ac)?;
    let scale = tape.mul(scale, af)?;
    tape.mul(mixed, scale)
}

/// ODConv with stride 1 and same padding. `attention_override` replaces the
/// head's output for every sample.
pub fn odconv_forward(
    tape: &mut Tape,
    x: Var,
    v: &OdconvVars,
    attention_override: Option<&AttentionOverride>,
) -> Result<Var> {
    let ks = tape.shape(v.kernels).to_vec();
    if ks.len() != 5 {
        return Err(Error::param(format!("ODConv bank must be [m, c_out, c_in, k, k], got {ks:?}")));
    }
    let spec = OdconvSpec {
        in_channels: ks[2],
        out_channels: ks[1],
        kernel_size: ks[3],
        kernels: ks[0],
        reduction: 1,
    };
    let att = match attention_override {
        None => odconv_attention(tape, x, v)?,
        Some(o) => {
            o.check(&spec)?;
            let b = tape.shape(x)[0];
            let repeat = |tape: &mut Tape, t: &Tensor| {
                let n = t.numel();
                let mut shape = vec![b];
                shape.extend_from_slice(t.shape());
                tape.constant(Tensor::from_fn(shape, |i| t.data()[i % n]))
            };
            OdconvAttention {
                spatial: repeat(tape, &o.spatial),
                input: repeat(tape, &o.input),
                output: repeat(tape, &o.output),
                kernel: repeat(tape, &o.kernel),
            }
        }
    };
    let w = odconv_kernel(tape, v.kernels, &att)?;
    tape.conv(x, w, None, ConvOptions::same(spec.kernel_size))
}

/// Named ODConv parameters under `prefix`.
#[derive(Clone, Debug, PartialEq)]
pub struct Odconv {
    pub prefix: String,
    pub spec: OdconvSpec,
}

impl Odconv {
    pub fn init(prefix: &str, spec: OdconvSpec, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let (cin, cout, k, m, hid) = (
            spec.in_channels,
            spec.out_channels,
            spec.kernel_size,
            spec.kernels,
            spec.hidden(),
        );
        let p = |s: &str| format!("{prefix}.{s}");
        store.insert_param(p("kernels"), init::kaiming(vec![m, cout, cin, k, k], cin * k * k, rng));
        store.insert_param(p("fc.weight"), init::kaiming(vec![hid, cin], cin, rng));
        store.insert_param(p("fc.bias"), Tensor::zeros(vec![hid]));
        for (name, out) in [("spatial", k * k), ("input", cin), ("output", cout), ("kernel", m)] {
            store.insert_param(p(&format!("{name}_fc.weight")), init::fan_in(vec![out, hid], hid, rng));
            store.insert_param(p(&format!("{name}_fc.bias")), Tensor::zeros(vec![out]));
        }
        Ok(Odconv { prefix: prefix.to_string(), spec })
    }

    pub fn bind(&self, s: &mut Session<'_>) -> Result<OdconvVars> {
        let p = |n: &str| format!("{}.{n}", self.prefix);
        Ok(OdconvVars {
            kernels: s.param(&p("kernels"))?,
            fc_w: s.param(&p("fc.weight"))?,
            fc_b: s.param(&p("fc.bias"))?,
            spatial_w: s.param(&p("spatial_fc.weight"))?,
            spatial_b: s.param(&p("spatial_fc.bias"))?,
            input_w: s.param(&p("input_fc.weight"))?,
            input_b: s.param(&p("input_fc.bias"))?,
            output_w: s.param(&p("output_fc.weight"))?,
            output_b: s.param(&p("output_fc.bias"))?,
            kernel_w: s.param(&p("kernel_fc.weight"))?,
            kernel_b: s.param(&p("kernel_fc.bias"))?,
        })
    }

    pub fn forward(&self, s: &mut Session<'_>, x: Var, attention_override: Option<&AttentionOverride>) -> Result<Var> {
        let v = self.bind(s)?;
        odconv_forward(&mut s.tape, x, &v, attention_override)
    }
}

/// How the spatial-attention map is convolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialConv {
    /// One static `k × k` kernel.
    Static,
    /// ODConv over the stacked avg/max maps.
    Dynamic { kernels: usize, reduction: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbamConfig {
    pub channels: usize,
    pub reduction: usize,
    pub spatial_kernel: usize,
    pub spatial: SpatialConv,
}

impl CbamConfig {
    pub fn cbam(channels: usize) -> Self {
        CbamConfig {
            channels,
            reduction: 16,
            spatial_kernel: 7,
            spatial: SpatialConv::Static,
        }
    }

    pub fn dynamic(channels: usize) -> Self {
        CbamConfig {
            spatial: SpatialConv::Dynamic { kernels: 4, reduction: 4 },
            ..Self::cbam(channels)
        }
    }

    fn odconv_spec(&self) -> Option<OdconvSpec> {
        match self.spatial {
            SpatialConv::Static => None,
            SpatialConv::Dynamic { kernels, reduction } => Some(OdconvSpec {
                in_channels: 2,
                out_channels: 1,
                kernel_size: self.spatial_kernel,
                kernels,
                reduction,
            }),
        }
    }
}

/// CBAM block with a residual CBS refinement:
/// `F' = M_c(F) ⊗ F`, `F'' = M_s(F') ⊗ F'`, `F_O = F + relu(BN(conv3x3(F'')))`.
///
/// Keys: `{prefix}.channel_mlp.w0`, `.channel_mlp.w1`, `.spatial.kernel` or
/// `.spatial.odconv.*`, `.cbs.conv`, `.cbs.bn.*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cbam {
    pub prefix: String,
    pub config: CbamConfig,
    odconv: Option<Odconv>,
}

impl Cbam {
    pub fn init(prefix: &str, config: CbamConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<Self> {
        let c = config.channels;
        let hid = reduced_width(c, config.reduction)?;
        let k = config.spatial_kernel;
        if k.is_multiple_of(2) {
            return Err(Error::param(format!("spatial kernel size {k} must be odd")));
        }
        let p = |s: &str| format!("{prefix}.{s}");
        store.insert_param(p("channel_mlp.w0"), init::kaiming(vec![hid, c], c, rng));
        store.insert_param(p("channel_mlp.w1"), init::fan_in(vec![c, hid], hid, rng));
        let odconv = match config.odconv_spec() {
            None => {
                store.insert_param(p("spatial.kernel"), init::fan_in(vec![1, 2, k, k], 2 * k * k, rng));
                None
            }
            Some(spec) => Some(Odconv::init(&p("spatial.odconv"), spec, store, rng)?),
        };
        store.insert_param(p("cbs.conv"), init::kaiming(vec![c, c, 3, 3], c * 9, rng));
        init_batch_norm(store, &p("cbs.bn"), c);
        Ok(Cbam { prefix: prefix.to_string(), config, odconv })
    }

    pub fn odconv(&self) -> Option<&Odconv> {
        self.odconv.as_ref()
    }

    fn key(&self, s: &str) -> String {
        format!("{}.{s}", self.prefix)
    }

    pub fn channel_attention(&self, s: &mut Session<'_>, f: Var) -> Result<Var> {
        let w0 = s.param(&self.key("channel_mlp.w0"))?;
        let w1 = s.param(&self.key("channel_mlp.w1"))?;
        channel_attention(&mut s.tape, f, w0, w1)
    }

    pub fn spatial_attention(
        &self,
        s: &mut Session<'_>,
        f: Var,
        attention_override: Option<&AttentionOverride>,
    ) -> Result<Var> {
        match &self.odconv {
            None => {
                let kernel = s.param(&self.key("spatial.kernel"))?;
                spatial_attention(&mut s.tape, f, kernel)
            }
            Some(od) => {
                let maps = pooled_channel_maps(&mut s.tape, f)?;
                let y = od.forward(s, maps, attention_override)?;
                Ok(s.tape.sigmoid(y))
            }
        }
    }

    pub fn forward(&self, s: &mut Session<'_>, f: Var) -> Result<Var> {
        self.forward_with(s, f, None)
    }

    /// [`Cbam::forward`] with the ODConv attention hook exposed.
    pub fn forward_with(
        &self,
        s: &mut Session<'_>,
        f: Var,
        attention_override: Option<&AttentionOverride>,
    ) -> Result<Var> {
        if s.tape.shape(f).len() != 4 || s.tape.shape(f)[1] != self.config.channels {
            return Err(Error::dim(format!(
                "{}: expected [B, {}, H, W], got {:?}",
                self.prefix,
                self.config.channels,
                s.tape.shape(f)
            )));
        }
        let mc = self.channel_attention(s, f)?;
        let f1 = scale_channels(&mut s.tape, f, mc)?;
        let ms = self.spatial_attention(s, f1, attention_override)?;
        let f2 = s.tape.mul(f1, ms)?;
        let conv = s.param(&self.key("cbs.conv"))?;
        let y = s.tape.conv(f2, conv, None, ConvOptions::same(3))?;
        let y = s.batch_norm(&self.key("cbs.bn"), y)?;
        let y = s.tape.relu(y);
        s.tape.add(f, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{sigmoid, Mode};
    use rand::{Rng, SeedableRng};

    fn rand_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn reduction_width() {
        assert_eq!(reduced_width(64, 16).unwrap(), 4);
        assert_eq!(reduced_width(8, 16).unwrap(), 1);
        assert!(reduced_width(24, 16).is_err());
    }

    #[test]
    fn zero_mlp_gives_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tape::new();
        let f = t.constant(rand_tensor(vec![2, 8, 3, 5], &mut rng));
        let w0 = t.constant(Tensor::zeros(vec![2, 8]));
        let w1 = t.constant(Tensor::zeros(vec![8, 2]));
        let mc = channel_attention(&mut t, f, w0, w1).unwrap();
        assert_eq!(t.shape(mc), &[2, 8]);
        assert!(t.value(mc).data().iter().all(|&v| v == 0.5));
        let bad = t.constant(Tensor::zeros(vec![2, 4]));
        assert!(matches!(channel_attention(&mut t, f, bad, w1), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_spatial_kernel_gives_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = Tape::new();
        let f = t.constant(rand_tensor(vec![1, 3, 4, 6], &mut rng));
        let k = t.constant(Tensor::zeros(vec![1, 2, 7, 7]));
        let ms = spatial_attention(&mut t, f, k).unwrap();
        assert_eq!(t.shape(ms), &[1, 1, 4, 6]);
        assert!(t.value(ms).data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn constant_channels_give_equal_maps() {
        let mut t = Tape::new();
        let f = t.constant(Tensor::from_fn(vec![1, 3, 2, 2], |i| (i % 4) as f64));
        let maps = pooled_channel_maps(&mut t, f).unwrap();
        let d = t.value(maps).data();
        assert_eq!(&d[..4], &d[4..]);
    }

    #[test]
    fn zero_override_head_is_uniform() {
        let spec = OdconvSpec { in_channels: 2, out_channels: 1, kernel_size: 7, kernels: 4, reduction: 4 };
        let mut store = ParamStore::new();
        let od = Odconv::init("od", spec, &mut store, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let names: Vec<String> = store.iter().map(|(n, _)| n.to_string()).collect();
        for n in names.iter().filter(|n| n.contains("fc")) {
            let shape = store.get(n).unwrap().shape().to_vec();
            store.set(n, Tensor::zeros(shape)).unwrap();
        }
        let mut s = Session::inference(&store);
        let x = s.input(rand_tensor(vec![3, 2, 5, 5], &mut ChaCha8Rng::seed_from_u64(4)));
        let v = od.bind(&mut s).unwrap();
        let att = odconv_attention(&mut s.tape, x, &v).unwrap();
        for a in [att.spatial, att.input, att.output] {
            assert!(s.tape.value(a).data().iter().all(|&v| v == 0.5));
        }
        assert!(s.tape.value(att.kernel).data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn override_shape_is_checked() {
        let spec = OdconvSpec { in_channels: 2, out_channels: 1, kernel_size: 3, kernels: 2, reduction: 1 };
        let mut store = ParamStore::new();
        let od = Odconv::init("od", spec, &mut store, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut s = Session::inference(&store);
        let x = s.input(Tensor::zeros(vec![1, 2, 4, 4]));
        let mut o = AttentionOverride::constant(&spec, 1.0);
        o.kernel = Tensor::ones(vec![3]);
        assert!(matches!(od.forward(&mut s, x, Some(&o)), Err(Error::Parameter(_))));
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let spec = OdconvSpec { in_channels: 3, out_channels: 2, kernel_size: 3, kernels: 4, reduction: 4 };
        let mut store = ParamStore::new();
        let od = Odconv::init("od", spec, &mut store, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut s = Session::inference(&store);
        let x = s.input(Tensor::zeros(vec![2, 3, 4, 4]));
        let y = od.forward(&mut s, x, None).unwrap();
        assert_eq!(s.tape.shape(y), &[2, 2, 4, 4]);
        assert!(s.tape.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cbam_zero_branch_is_identity() {
        for config in [CbamConfig::cbam(4), CbamConfig::dynamic(4)] {
            let mut store = ParamStore::new();
            let block = Cbam::init("blk", config, &mut store, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
            let names: Vec<String> = store.trainable().map(|(n, _)| n.to_string()).collect();
            for n in names.iter().filter(|n| !n.ends_with("gamma")) {
                let shape = store.get(n).unwrap().shape().to_vec();
                store.set(n, Tensor::zeros(shape)).unwrap();
            }
            let input = rand_tensor(vec![2, 4, 5, 6], &mut ChaCha8Rng::seed_from_u64(7));
            let mut s = Session::new(&store, Mode::Eval, 0);
            let f = s.input(input.clone());
            let y = block.forward(&mut s, f).unwrap();
            assert_eq!(s.tape.value(y), &input);
        }
    }

    #[test]
    fn sigmoid_maps_stay_inside_unit_interval() {
        let mut store = ParamStore::new();
        let block = Cbam::init("b", CbamConfig::dynamic(8), &mut store, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let mut s = Session::inference(&store);
        let f = s.input(rand_tensor(vec![2, 8, 6, 6], &mut ChaCha8Rng::seed_from_u64(9)));
        let mc = block.channel_attention(&mut s, f).unwrap();
        let ms = block.spatial_attention(&mut s, f, None).unwrap();
        for m in [mc, ms] {
            assert!(s.tape.value(m).data().iter().all(|&v| v > 0.0 && v < 1.0));
        }
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
