//! The learnable vector field `v(x_t, t, c; θ)`.
//!
//! Both architectures embed `t` (sinusoidal features through a two-layer MLP)
//! and `c` (a row of the condition table through a linear projection) and sum
//! them. The transformer prepends that sum as an extra token in front of the
//! per-frame tokens and reads the field off the frame positions. The MLP
//! flattens the whole sequence and adds the sum to its first hidden layer.
//!
//! The output projection starts at zero, so a fresh model is the zero field.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{Architecture, ModelConfig};
use crate::error::{Error, Result};
use crate::numerics::{DenseArray, ParamSet, Tape, Var};

const LN_EPS: f64 = 1e-5;
const MAX_TIME_PERIOD: f64 = 1000.0;

/// Which embedding row a batch item uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Label(usize),
    Null,
}

impl Condition {
    pub fn from_label(label: Option<usize>) -> Self {
        label.map_or(Condition::Null, Condition::Label)
    }

    pub fn is_null(self) -> bool {
        matches!(self, Condition::Null)
    }
}

/// A row of the condition table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEmbedding {
    condition: Condition,
    vector: Vec<f64>,
}

impl ConditionEmbedding {
    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn is_null(&self) -> bool {
        self.condition.is_null()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldModel {
    config: ModelConfig,
    params: ParamSet,
}

/// Sinusoidal features of `t` with geometrically spaced frequencies.
pub fn time_features(t: f64, n: usize) -> Vec<f64> {
    let half = n / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..half {
        let freq = MAX_TIME_PERIOD.powf(i as f64 / half as f64);
        out.push((t * freq).sin());
    }
    for i in 0..half {
        let freq = MAX_TIME_PERIOD.powf(i as f64 / half as f64);
        out.push((t * freq).cos());
    }
    out
}

fn sinusoidal_positions(frames: usize, width: usize) -> DenseArray {
    let mut data = Vec::with_capacity(frames * width);
    for p in 0..frames {
        for i in 0..width {
            let freq = 1.0 / 10_000f64.powf((2 * (i / 2)) as f64 / width as f64);
            let angle = p as f64 * freq;
            data.push(if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    DenseArray::new(vec![frames, width], data).expect("shape matches data")
}

struct Init<'a> {
    rng: &'a mut ChaCha8Rng,
    params: ParamSet,
}

impl Init<'_> {
    fn weight(&mut self, name: String, fan_in: usize, fan_out: usize) -> Result<()> {
        let scale = 1.0 / (fan_in as f64).sqrt();
        let w = DenseArray::randn(&[fan_in, fan_out], self.rng).scale(scale);
        self.params.insert(name, w)
    }

    fn linear(&mut self, prefix: &str, fan_in: usize, fan_out: usize) -> Result<()> {
        self.weight(format!("{prefix}.w"), fan_in, fan_out)?;
        self.params.insert(format!("{prefix}.b"), DenseArray::zeros(&[fan_out]))
    }

    fn zero_linear(&mut self, prefix: &str, fan_in: usize, fan_out: usize) -> Result<()> {
        self.params
            .insert(format!("{prefix}.w"), DenseArray::zeros(&[fan_in, fan_out]))?;
        self.params.insert(format!("{prefix}.b"), DenseArray::zeros(&[fan_out]))
    }

    fn layer_norm(&mut self, prefix: &str, width: usize) -> Result<()> {
        self.params.insert(format!("{prefix}.g"), DenseArray::ones(&[width]))?;
        self.params.insert(format!("{prefix}.b"), DenseArray::zeros(&[width]))
    }
}

impl VectorFieldModel {
    /// Deterministic initialization from `seed`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = Init {
            rng: &mut rng,
            params: ParamSet::new(),
        };
        let (d, w) = (config.feature_dim, config.d_model);

        init.linear("time.l1", config.time_features, w)?;
        init.linear("time.l2", w, w)?;
        let table = DenseArray::randn(&[config.classes + 1, config.cond_dim], init.rng);
        init.params.insert("cond.table", table)?;
        init.linear("cond.proj", config.cond_dim, w)?;

        match config.architecture {
            Architecture::Transformer => {
                init.linear("in", d, w)?;
                init.params
                    .insert("pos", sinusoidal_positions(config.frames, w))?;
                for l in 0..config.layers {
                    let p = format!("blk{l}");
                    init.layer_norm(&format!("{p}.ln1"), w)?;
                    for name in ["q", "k", "v", "o"] {
                        init.linear(&format!("{p}.attn.{name}"), w, w)?;
                    }
                    init.layer_norm(&format!("{p}.ln2"), w)?;
                    init.linear(&format!("{p}.ff1"), w, config.d_ff)?;
                    init.linear(&format!("{p}.ff2"), config.d_ff, w)?;
                }
                init.layer_norm("out.ln", w)?;
                init.zero_linear("out", w, d)?;
            }
            Architecture::Mlp => {
                let flat = d * config.frames;
                init.linear("in", flat, w)?;
                for l in 0..config.layers {
                    init.linear(&format!("hidden{l}"), w, w)?;
                }
                init.zero_linear("out", w, flat)?;
            }
        }
        Ok(Self {
            config,
            params: init.params,
        })
    }

    pub fn from_parts(config: ModelConfig, params: ParamSet) -> Result<Self> {
        config.validate()?;
        let reference = Self::init(config.clone(), 0)?;
        for (name, value) in reference.params.iter() {
            match params.get(name) {
                Some(p) if p.shape() == value.shape() => {}
                Some(p) => {
                    return Err(Error::InvalidConfig(format!(
                        "parameter `{name}` has shape {:?}, config implies {:?}",
                        p.shape(),
                        value.shape()
                    )))
                }
                None => return Err(Error::InvalidConfig(format!("missing parameter `{name}`"))),
            }
        }
        if params.len() != reference.params.len() {
            return Err(Error::InvalidConfig("checkpoint has unexpected parameters".into()));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    fn null_row(&self) -> usize {
        self.config.classes
    }

    fn check_condition(&self, c: Condition) -> Result<usize> {
        match c {
            Condition::Null => Ok(self.null_row()),
            Condition::Label(k) if k < self.config.classes => Ok(k),
            Condition::Label(k) => Err(Error::InvalidArgument(format!(
                "label {k} out of range for {} classes",
                self.config.classes
            ))),
        }
    }

    /// The table row for `label`, or the shared null row.
    pub fn embed_condition(&self, label: Option<usize>) -> Result<ConditionEmbedding> {
        let condition = Condition::from_label(label);
        let row = self.check_condition(condition)?;
        let table = self.params.get("cond.table").expect("condition table exists");
        Ok(ConditionEmbedding {
            condition,
            vector: table.row(row).to_vec(),
        })
    }

    /// Records the forward pass on `tape` and returns the field, shaped like `x`.
    ///
    /// `x` is `[B, T, D]`; `t` and `cond` hold one entry per batch item.
    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &HashMap<String, Var>,
        x: Var,
        t: &[f64],
        cond: &[Condition],
    ) -> Result<Var> {
        let shape = tape.shape(x).to_vec();
        let cfg = &self.config;
        if shape.len() != 3 || shape[1] != cfg.frames || shape[2] != cfg.feature_dim {
            return Err(Error::shape(
                "predict_field",
                format!(
                    "expected [B, {}, {}], got {shape:?}",
                    cfg.frames, cfg.feature_dim
                ),
            ));
        }
        let batch = shape[0];
        if t.len() != batch || cond.len() != batch {
            return Err(Error::shape(
                "predict_field",
                format!("batch {batch} with {} times and {} conditions", t.len(), cond.len()),
            ));
        }
        if let Some(bad) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("t = {bad} outside [0, 1]")));
        }
        let p = |name: &str| -> Var { vars[name] };

        // Time and condition embeddings, [B, 1, w].
        let feats: Vec<f64> = t
            .iter()
            .flat_map(|&ti| time_features(ti, cfg.time_features))
            .collect();
        let feats = tape.constant(DenseArray::new(vec![batch, 1, cfg.time_features], feats)?);
        let h = tape.affine(feats, p("time.l1.w"), p("time.l1.b"))?;
        let h = tape.gelu(h);
        let temb = tape.affine(h, p("time.l2.w"), p("time.l2.b"))?;

        let rows = cfg.classes + 1;
        let mut onehot = vec![0.0; batch * rows];
        for (i, &c) in cond.iter().enumerate() {
            onehot[i * rows + self.check_condition(c)?] = 1.0;
        }
        let onehot = tape.constant(DenseArray::new(vec![batch, 1, rows], onehot)?);
        let cvec = tape.matmul(onehot, p("cond.table"))?;
        let cemb = tape.affine(cvec, p("cond.proj.w"), p("cond.proj.b"))?;
        let context = tape.add(temb, cemb)?;

        match cfg.architecture {
            Architecture::Transformer => self.transformer(tape, &p, x, context, batch),
            Architecture::Mlp => self.mlp(tape, &p, x, context, batch),
        }
    }

    fn transformer(
        &self,
        tape: &mut Tape,
        p: &dyn Fn(&str) -> Var,
        x: Var,
        context: Var,
        batch: usize,
    ) -> Result<Var> {
        let cfg = &self.config;
        let (frames, w) = (cfg.frames, cfg.d_model);
        let tokens = tape.affine(x, p("in.w"), p("in.b"))?;
        let tokens = tape.add_broadcast(tokens, p("pos"))?;
        let mut h = tape.concat(&[context, tokens], 1)?;
        let n = frames + 1;

        for l in 0..cfg.layers {
            let name = |s: &str| format!("blk{l}.{s}");
            let hn = self.layer_norm(tape, p, h, &name("ln1"))?;
            let attn = self.attention(tape, p, hn, &name("attn"), batch, n)?;
            h = tape.add(h, attn)?;
            let hn = self.layer_norm(tape, p, h, &name("ln2"))?;
            let ff = tape.affine(hn, p(&name("ff1.w")), p(&name("ff1.b")))?;
            let ff = tape.gelu(ff);
            let ff = tape.affine(ff, p(&name("ff2.w")), p(&name("ff2.b")))?;
            h = tape.add(h, ff)?;
        }
        let h = self.layer_norm(tape, p, h, "out.ln")?;
        let frames_out = tape.slice(h, 1, 1, frames)?;
        debug_assert_eq!(tape.shape(frames_out), &[batch, frames, w]);
        tape.affine(frames_out, p("out.w"), p("out.b"))
    }

    fn layer_norm(&self, tape: &mut Tape, p: &dyn Fn(&str) -> Var, x: Var, prefix: &str) -> Result<Var> {
        let y = tape.layer_norm(x, LN_EPS)?;
        let y = tape.mul_broadcast(y, p(&format!("{prefix}.g")))?;
        tape.add_broadcast(y, p(&format!("{prefix}.b")))
    }

    fn attention(
        &self,
        tape: &mut Tape,
        p: &dyn Fn(&str) -> Var,
        x: Var,
        prefix: &str,
        batch: usize,
        n: usize,
    ) -> Result<Var> {
        let cfg = &self.config;
        let dh = cfg.head_dim();
        let proj = |tape: &mut Tape, which: &str| {
            tape.affine(x, p(&format!("{prefix}.{which}.w")), p(&format!("{prefix}.{which}.b")))
        };
        let q = proj(tape, "q")?;
        let k = proj(tape, "k")?;
        let v = proj(tape, "v")?;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut heads = Vec::with_capacity(cfg.heads);
        for hd in 0..cfg.heads {
            let qh = tape.slice(q, 2, hd * dh, dh)?;
            let kh = tape.slice(k, 2, hd * dh, dh)?;
            let vh = tape.slice(v, 2, hd * dh, dh)?;
            let scores = tape.matmul_ext(qh, kh, true)?;
            let scores = tape.scale(scores, scale)?;
            let weights = tape.softmax(scores)?;
            debug_assert_eq!(tape.shape(weights), &[batch, n, n]);
            heads.push(tape.matmul(weights, vh)?);
        }
        let merged = tape.concat(&heads, 2)?;
        tape.affine(
            merged,
            p(&format!("{prefix}.o.w")),
            p(&format!("{prefix}.o.b")),
        )
    }

    fn mlp(
        &self,
        tape: &mut Tape,
        p: &dyn Fn(&str) -> Var,
        x: Var,
        context: Var,
        batch: usize,
    ) -> Result<Var> {
        let cfg = &self.config;
        let flat = cfg.frames * cfg.feature_dim;
        let xf = tape.reshape(x, &[batch, 1, flat])?;
        let h = tape.affine(xf, p("in.w"), p("in.b"))?;
        let mut h = tape.add(h, context)?;
        for l in 0..cfg.layers {
            let a = tape.gelu(h);
            let a = tape.affine(a, p(&format!("hidden{l}.w")), p(&format!("hidden{l}.b")))?;
            h = tape.add(h, a)?;
        }
        let h = tape.gelu(h);
        let out = tape.affine(h, p("out.w"), p("out.b"))?;
        tape.reshape(out, &[batch, cfg.frames, cfg.feature_dim])
    }

    /// Evaluates the field for a batch `[B, T, D]` (or a single `[T, D]` sequence).
    pub fn predict(&self, x: &DenseArray, t: &[f64], cond: &[Condition]) -> Result<DenseArray> {
        let single = x.rank() == 2;
        let batched = if single {
            x.clone().reshape(&[1, x.shape()[0], x.shape()[1]])?
        } else {
            x.clone()
        };
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let xv = tape.input("x", batched);
        let out = self.forward(&mut tape, &vars, xv, t, cond)?;
        let value = tape.value(out).clone();
        if !value.is_finite() {
            return Err(Error::NonFinite {
                node: out.index(),
                op: "predict_field",
            });
        }
        if single {
            value.reshape(x.shape())
        } else {
            Ok(value)
        }
    }

    /// Field at a single `[T, D]` state.
    pub fn predict_field(&self, x_t: &DenseArray, t: f64, c: &ConditionEmbedding) -> Result<DenseArray> {
        if x_t.rank() != 2 {
            return Err(Error::shape(
                "predict_field",
                format!("expected [T, D], got {:?}", x_t.shape()),
            ));
        }
        self.predict(x_t, &[t], &[c.condition()])
    }

    /// Random perturbation of every parameter, for tests that need a non-trivial field.
    pub fn jitter<R: Rng>(&mut self, rng: &mut R, scale: f64) {
        for (_, value) in self.params.iter_mut() {
            for v in value.data_mut() {
                *v += scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_transformer() -> ModelConfig {
        ModelConfig {
            d_model: 16,
            heads: 2,
            d_ff: 24,
            cond_dim: 8,
            time_features: 8,
            ..ModelConfig::transformer(5, 4, 3)
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = VectorFieldModel::init(small_transformer(), 7).unwrap();
        let b = VectorFieldModel::init(small_transformer(), 7).unwrap();
        assert_eq!(a, b);
        let c = VectorFieldModel::init(small_transformer(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fresh_model_is_zero_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for cfg in [small_transformer(), ModelConfig::mlp(5, 4, 3, 16, 2)] {
            let m = VectorFieldModel::init(cfg, 3).unwrap();
            let x = DenseArray::randn(&[2, 4, 5], &mut rng);
            let v = m
                .predict(&x, &[0.2, 0.9], &[Condition::Label(1), Condition::Null])
                .unwrap();
            assert_eq!(v.shape(), x.shape());
            assert!(v.data().iter().all(|&e| e == 0.0));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = VectorFieldModel::init(small_transformer(), 3).unwrap();
        let x = DenseArray::zeros(&[4, 5]);
        let c = m.embed_condition(Some(0)).unwrap();
        assert!(m.predict_field(&x, 1.5, &c).is_err());
        assert!(m.predict_field(&x, -0.1, &c).is_err());
        assert!(m.predict_field(&DenseArray::zeros(&[3, 5]), 0.5, &c).is_err());
        assert!(m.predict_field(&x, 0.5, &c).is_ok());
    }

    #[test]
    fn embedding_rows() {
        let m = VectorFieldModel::init(small_transformer(), 3).unwrap();
        let null = m.embed_condition(None).unwrap();
        assert!(null.is_null());
        assert_eq!(null.vector(), m.params().get("cond.table").unwrap().row(3));
        assert!(!m.embed_condition(Some(2)).unwrap().is_null());
        assert!(m.embed_condition(Some(3)).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_transformer();
        cfg.heads = 3;
        assert!(VectorFieldModel::init(cfg, 0).is_err());
        let mut cfg = small_transformer();
        cfg.layers = 0;
        assert!(VectorFieldModel::init(cfg, 0).is_err());
    }

    #[test]
    fn from_parts_checks_shapes() {
        let m = VectorFieldModel::init(small_transformer(), 3).unwrap();
        assert!(VectorFieldModel::from_parts(small_transformer(), m.params().clone()).is_ok());
        let mut other = small_transformer();
        other.d_ff = 32;
        assert!(VectorFieldModel::from_parts(other, m.params().clone()).is_err());
    }
}
