//! Transformer encoder-decoder for query translation, plus the CBOW head of
//! the auxiliary task.
//!
//! The target embedding table and the output transformation (`out_proj`,
//! `out_bias`) are single parameters read by both the decoder and the CBOW
//! head, so an update made for either task is seen by the other. Sequences
//! are packed row-wise without padding and attention runs per sequence.
//! The layers use pre-normalization with a final layer norm on each stack.

pub mod attention;
pub mod checkpoint;
pub mod config;
pub mod decode;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ratnmt_autodiff::{ParamId, ParamStore, Real, Tape, Tensor, Var};

use crate::corpus::{ParallelPair, Vocabulary, BOS, EOS};
use crate::error::{Error, Result};
use crate::ratgen::ContextPivotPair;
use crate::seed::{rng_for, Stream};

pub use attention::{causal_mask, positional_encoding, scaled_dot_attention};
pub use checkpoint::Checkpoint;
pub use config::TransformerConfig;
pub use decode::{beam_search, greedy, translate, DecodeStrategy};

const LN_EPS: f64 = 1e-5;

/// Whether the CBOW head reads the translation model's target embedding
/// and output layer, or private copies of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadSharing {
    Shared,
    /// Control setting: the head starts from copies of the shared layers
    /// but never writes to the translation model.
    Separate,
}

impl HeadSharing {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadSharing::Shared => "shared",
            HeadSharing::Separate => "separate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(HeadSharing::Shared),
            "separate" => Ok(HeadSharing::Separate),
            _ => Err(Error::Config(format!("unknown head sharing {s:?}"))),
        }
    }
}

/// A sentence pair mapped to vocabulary indices, without framing tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub id: u64,
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

impl EncodedPair {
    pub fn new(pair: &ParallelPair, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Self {
        EncodedPair {
            id: pair.id,
            src: src_vocab.encode(&pair.source),
            tgt: tgt_vocab.encode(&pair.target),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Embedding,
    Xavier,
    Ones,
    Zeros,
    CopyOf(&'static str),
}

#[derive(Debug, Clone, Copy)]
struct LayerNormIds {
    gain: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct AttentionIds {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct FeedForwardIds {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct EncoderLayer {
    ln_attn: LayerNormIds,
    attn: AttentionIds,
    ln_ffn: LayerNormIds,
    ffn: FeedForwardIds,
}

#[derive(Debug, Clone, Copy)]
struct DecoderLayer {
    ln_self: LayerNormIds,
    self_attn: AttentionIds,
    ln_cross: LayerNormIds,
    cross_attn: AttentionIds,
    ln_ffn: LayerNormIds,
    ffn: FeedForwardIds,
}

/// Dropout state for one forward pass; inactive without a generator.
pub struct Dropout<'a> {
    rate: f64,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> Dropout<'a> {
    pub fn off() -> Self {
        Dropout { rate: 0.0, rng: None }
    }

    pub fn new(rate: f64, rng: &'a mut ChaCha8Rng) -> Self {
        Dropout { rate, rng: Some(rng) }
    }

    fn apply<T: Real>(&mut self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        let Some(rng) = self.rng.as_deref_mut() else {
            return Ok(x);
        };
        if self.rate <= 0.0 {
            return Ok(x);
        }
        let keep = T::from_lit(1.0 / (1.0 - self.rate));
        let shape = tape.value(x).shape().to_vec();
        let mut mask = Tensor::zeros(&shape);
        for m in mask.data_mut() {
            if rng.gen::<f64>() >= self.rate {
                *m = keep;
            }
        }
        Ok(tape.dropout(x, mask)?)
    }
}

/// Parameter layout of the model; values live in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Network {
    pub config: TransformerConfig,
    pub sharing: HeadSharing,
    src_embed: ParamId,
    tgt_embed: ParamId,
    out_proj: ParamId,
    out_bias: ParamId,
    encoder: Vec<EncoderLayer>,
    encoder_ln: LayerNormIds,
    decoder: Vec<DecoderLayer>,
    decoder_ln: LayerNormIds,
    cbow_proj_w: ParamId,
    cbow_proj_b: ParamId,
    cbow_embed: ParamId,
    cbow_out_proj: ParamId,
    cbow_out_bias: ParamId,
    positions: Vec<f64>,
}

fn param_specs(c: &TransformerConfig, sharing: HeadSharing) -> Vec<(String, Vec<usize>, Init)> {
    let d = c.d_model;
    let mut specs: Vec<(String, Vec<usize>, Init)> = vec![
        ("src_embed".into(), vec![c.src_vocab, d], Init::Embedding),
        ("tgt_embed".into(), vec![c.tgt_vocab, d], Init::Embedding),
        ("out_proj".into(), vec![d, c.tgt_vocab], Init::Xavier),
        ("out_bias".into(), vec![c.tgt_vocab], Init::Zeros),
    ];
    let ln = |s: &mut Vec<_>, p: &str| {
        s.push((format!("{p}.gain"), vec![d], Init::Ones));
        s.push((format!("{p}.bias"), vec![d], Init::Zeros));
    };
    let attn = |s: &mut Vec<_>, p: &str| {
        for w in ["wq", "wk", "wv", "wo"] {
            s.push((format!("{p}.{w}"), vec![d, d], Init::Xavier));
        }
    };
    let ffn = |s: &mut Vec<_>, p: &str| {
        s.push((format!("{p}.w1"), vec![d, c.d_ff], Init::Xavier));
        s.push((format!("{p}.b1"), vec![c.d_ff], Init::Zeros));
        s.push((format!("{p}.w2"), vec![c.d_ff, d], Init::Xavier));
        s.push((format!("{p}.b2"), vec![d], Init::Zeros));
    };
    for l in 0..c.n_layers {
        ln(&mut specs, &format!("enc.{l}.ln_attn"));
        attn(&mut specs, &format!("enc.{l}.attn"));
        ln(&mut specs, &format!("enc.{l}.ln_ffn"));
        ffn(&mut specs, &format!("enc.{l}.ffn"));
    }
    ln(&mut specs, "enc.ln");
    for l in 0..c.n_layers {
        ln(&mut specs, &format!("dec.{l}.ln_self"));
        attn(&mut specs, &format!("dec.{l}.self_attn"));
        ln(&mut specs, &format!("dec.{l}.ln_cross"));
        attn(&mut specs, &format!("dec.{l}.cross_attn"));
        ln(&mut specs, &format!("dec.{l}.ln_ffn"));
        ffn(&mut specs, &format!("dec.{l}.ffn"));
    }
    ln(&mut specs, "dec.ln");
    specs.push(("cbow.proj.w".into(), vec![d, d], Init::Xavier));
    specs.push(("cbow.proj.b".into(), vec![d], Init::Zeros));
    if sharing == HeadSharing::Separate {
        specs.push(("cbow.embed".into(), vec![c.tgt_vocab, d], Init::CopyOf("tgt_embed")));
        specs.push(("cbow.out_proj".into(), vec![d, c.tgt_vocab], Init::CopyOf("out_proj")));
        specs.push(("cbow.out_bias".into(), vec![c.tgt_vocab], Init::CopyOf("out_bias")));
    }
    specs
}

impl Network {
    /// Fresh parameters drawn from the `Init` stream of `seed`.
    pub fn init<T: Real>(config: TransformerConfig, sharing: HeadSharing, seed: u64) -> Result<(Self, ParamStore<T>)> {
        config.validate()?;
        let mut rng = rng_for(seed, Stream::Init, 0);
        let mut store = ParamStore::new();
        for (name, shape, init) in param_specs(&config, sharing) {
            match init {
                Init::Embedding => {
                    let limit = (3.0 / config.d_model as f64).sqrt();
                    store.add_uniform(name, &shape, limit, &mut rng)?;
                }
                Init::Xavier => {
                    let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                    store.add_uniform(name, &shape, limit, &mut rng)?;
                }
                Init::Ones => {
                    store.add(name, Tensor::full(&shape, T::one()))?;
                }
                Init::Zeros => {
                    store.add(name, Tensor::zeros(&shape))?;
                }
                Init::CopyOf(src) => {
                    let id = store.id(src).expect("copied parameter precedes its copy");
                    let value = store.value(id).clone();
                    store.add(name, value)?;
                }
            }
        }
        let net = Self::bind(config, sharing, &store)?;
        Ok((net, store))
    }

    /// Resolves the layout against an existing store, checking every shape.
    pub fn bind<T: Real>(config: TransformerConfig, sharing: HeadSharing, store: &ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(&config, sharing);
        if store.len() != specs.len() {
            return Err(Error::Config(format!(
                "parameter store holds {} tensors, the model needs {}",
                store.len(),
                specs.len()
            )));
        }
        for (name, shape, _) in &specs {
            let id = store
                .id(name)
                .ok_or_else(|| Error::Config(format!("missing parameter {name}")))?;
            if store.value(id).shape() != shape.as_slice() {
                return Err(Error::Config(format!(
                    "parameter {name} has shape {:?}, expected {shape:?}",
                    store.value(id).shape()
                )));
            }
        }
        let id = |n: &str| store.id(n).expect("checked above");
        let ln = |p: &str| LayerNormIds {
            gain: id(&format!("{p}.gain")),
            bias: id(&format!("{p}.bias")),
        };
        let attn = |p: &str| AttentionIds {
            wq: id(&format!("{p}.wq")),
            wk: id(&format!("{p}.wk")),
            wv: id(&format!("{p}.wv")),
            wo: id(&format!("{p}.wo")),
        };
        let ffn = |p: &str| FeedForwardIds {
            w1: id(&format!("{p}.w1")),
            b1: id(&format!("{p}.b1")),
            w2: id(&format!("{p}.w2")),
            b2: id(&format!("{p}.b2")),
        };
        let encoder = (0..config.n_layers)
            .map(|l| EncoderLayer {
                ln_attn: ln(&format!("enc.{l}.ln_attn")),
                attn: attn(&format!("enc.{l}.attn")),
                ln_ffn: ln(&format!("enc.{l}.ln_ffn")),
                ffn: ffn(&format!("enc.{l}.ffn")),
            })
            .collect();
        let decoder = (0..config.n_layers)
            .map(|l| DecoderLayer {
                ln_self: ln(&format!("dec.{l}.ln_self")),
                self_attn: attn(&format!("dec.{l}.self_attn")),
                ln_cross: ln(&format!("dec.{l}.ln_cross")),
                cross_attn: attn(&format!("dec.{l}.cross_attn")),
                ln_ffn: ln(&format!("dec.{l}.ln_ffn")),
                ffn: ffn(&format!("dec.{l}.ffn")),
            })
            .collect();
        let (cbow_embed, cbow_out_proj, cbow_out_bias) = match sharing {
            HeadSharing::Shared => (id("tgt_embed"), id("out_proj"), id("out_bias")),
            HeadSharing::Separate => (id("cbow.embed"), id("cbow.out_proj"), id("cbow.out_bias")),
        };
        let positions = positional_encoding::<f64>(config.max_len, config.d_model)?.into_data();
        Ok(Network {
            config,
            sharing,
            src_embed: id("src_embed"),
            tgt_embed: id("tgt_embed"),
            out_proj: id("out_proj"),
            out_bias: id("out_bias"),
            encoder,
            encoder_ln: ln("enc.ln"),
            decoder,
            decoder_ln: ln("dec.ln"),
            cbow_proj_w: id("cbow.proj.w"),
            cbow_proj_b: id("cbow.proj.b"),
            cbow_embed,
            cbow_out_proj,
            cbow_out_bias,
            positions,
        })
    }

    /// Parameters updated by the translation objective: everything except
    /// the CBOW head's own layers.
    pub fn nmt_group<T: Real>(&self, store: &ParamStore<T>) -> Vec<ParamId> {
        store
            .iter()
            .filter(|(_, p)| !p.name.starts_with("cbow."))
            .map(|(id, _)| id)
            .collect()
    }

    /// Parameters updated by the CBOW objective.
    pub fn we_group(&self) -> Vec<ParamId> {
        vec![
            self.cbow_embed,
            self.cbow_proj_w,
            self.cbow_proj_b,
            self.cbow_out_proj,
            self.cbow_out_bias,
        ]
    }

    /// The layers both tasks read: target embedding, `out_proj`, `out_bias`.
    pub fn shared_layers(&self) -> [ParamId; 3] {
        [self.tgt_embed, self.out_proj, self.out_bias]
    }

    fn layer_norm<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var, ids: LayerNormIds) -> Result<Var> {
        let n = tape.layer_norm(x, T::from_lit(LN_EPS))?;
        let g = tape.param(store, ids.gain);
        let b = tape.param(store, ids.bias);
        let n = tape.mul_row(n, g)?;
        Ok(tape.add_row(n, b)?)
    }

    fn feed_forward<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        x: Var,
        ids: FeedForwardIds,
    ) -> Result<Var> {
        let w1 = tape.param(store, ids.w1);
        let b1 = tape.param(store, ids.b1);
        let w2 = tape.param(store, ids.w2);
        let b2 = tape.param(store, ids.b2);
        let h = tape.matmul(x, w1)?;
        let h = tape.add_row(h, b1)?;
        let h = tape.relu(h)?;
        let h = tape.matmul(h, w2)?;
        Ok(tape.add_row(h, b2)?)
    }

    /// Multi-head attention over packed sequences: query rows of sequence
    /// `i` attend only to key rows of sequence `i`.
    #[allow(clippy::too_many_arguments)]
    fn multi_head<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        ids: AttentionIds,
        queries: Var,
        keys: Var,
        q_lens: &[usize],
        kv_lens: &[usize],
        causal: bool,
    ) -> Result<Var> {
        let wq = tape.param(store, ids.wq);
        let wk = tape.param(store, ids.wk);
        let wv = tape.param(store, ids.wv);
        let wo = tape.param(store, ids.wo);
        let q = tape.matmul(queries, wq)?;
        let k = tape.matmul(keys, wk)?;
        let v = tape.matmul(keys, wv)?;
        let heads = self.config.n_heads;
        let dh = self.config.d_model / heads;
        let (mut qs, mut ks) = (0, 0);
        let mut seqs = Vec::with_capacity(q_lens.len());
        for (&ql, &kl) in q_lens.iter().zip(kv_lens) {
            let qi = tape.slice_rows(q, qs, qs + ql)?;
            let ki = tape.slice_rows(k, ks, ks + kl)?;
            let vi = tape.slice_rows(v, ks, ks + kl)?;
            let mask = causal.then(|| causal_mask::<T>(ql));
            let mut outs = Vec::with_capacity(heads);
            for h in 0..heads {
                let (a, b) = (h * dh, (h + 1) * dh);
                let qh = if heads == 1 { qi } else { tape.slice_cols(qi, a, b)? };
                let kh = if heads == 1 { ki } else { tape.slice_cols(ki, a, b)? };
                let vh = if heads == 1 { vi } else { tape.slice_cols(vi, a, b)? };
                outs.push(scaled_dot_attention(tape, qh, kh, vh, mask.as_ref())?);
            }
            seqs.push(if heads == 1 { outs[0] } else { tape.concat_cols(&outs)? });
            qs += ql;
            ks += kl;
        }
        let joined = if seqs.len() == 1 {
            seqs[0]
        } else {
            tape.concat_rows(&seqs)?
        };
        Ok(tape.matmul(joined, wo)?)
    }

    /// Scaled embeddings plus positions for every sequence, stacked.
    fn embed<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        table: ParamId,
        seqs: &[&[usize]],
    ) -> Result<Var> {
        let d = self.config.d_model;
        let vocab = store.value(table).rows();
        let mut flat = Vec::new();
        let mut pos = Vec::new();
        for s in seqs {
            if s.len() > self.config.max_len {
                return Err(Error::data(format!(
                    "sequence of length {} exceeds max_len {}",
                    s.len(),
                    self.config.max_len
                )));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= vocab) {
                return Err(Error::data(format!("token index {bad} outside vocabulary of {vocab}")));
            }
            flat.extend_from_slice(s);
            for p in 0..s.len() {
                pos.extend(self.positions[p * d..(p + 1) * d].iter().map(|&x| T::from_lit(x)));
            }
        }
        let t = tape.param(store, table);
        let e = tape.embedding(t, &flat)?;
        let e = tape.scale(e, T::from_lit((d as f64).sqrt()))?;
        let p = tape.constant(Tensor::new(vec![flat.len(), d], pos)?);
        Ok(tape.add(e, p)?)
    }

    /// Encoder output rows for the stacked source sequences.
    pub fn encode<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        sources: &[&[usize]],
        dropout: &mut Dropout,
    ) -> Result<Var> {
        if sources.iter().any(|s| s.is_empty()) {
            return Err(Error::data("cannot encode an empty source sequence"));
        }
        let lens: Vec<usize> = sources.iter().map(|s| s.len()).collect();
        let x = self.embed(tape, store, self.src_embed, sources)?;
        let mut h = dropout.apply(tape, x)?;
        for layer in &self.encoder {
            let n = self.layer_norm(tape, store, h, layer.ln_attn)?;
            let a = self.multi_head(tape, store, layer.attn, n, n, &lens, &lens, false)?;
            let a = dropout.apply(tape, a)?;
            h = tape.add(h, a)?;
            let n = self.layer_norm(tape, store, h, layer.ln_ffn)?;
            let f = self.feed_forward(tape, store, n, layer.ffn)?;
            let f = dropout.apply(tape, f)?;
            h = tape.add(h, f)?;
        }
        self.layer_norm(tape, store, h, self.encoder_ln)
    }

    /// Next-token logits at every decoder input position.
    #[allow(clippy::too_many_arguments)]
    pub fn decode_logits<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        memory: Var,
        memory_lens: &[usize],
        inputs: &[&[usize]],
        dropout: &mut Dropout,
    ) -> Result<Var> {
        let lens: Vec<usize> = inputs.iter().map(|s| s.len()).collect();
        let y = self.embed(tape, store, self.tgt_embed, inputs)?;
        let mut h = dropout.apply(tape, y)?;
        for layer in &self.decoder {
            let n = self.layer_norm(tape, store, h, layer.ln_self)?;
            let a = self.multi_head(tape, store, layer.self_attn, n, n, &lens, &lens, true)?;
            let a = dropout.apply(tape, a)?;
            h = tape.add(h, a)?;
            let n = self.layer_norm(tape, store, h, layer.ln_cross)?;
            let c = self.multi_head(tape, store, layer.cross_attn, n, memory, &lens, memory_lens, false)?;
            let c = dropout.apply(tape, c)?;
            h = tape.add(h, c)?;
            let n = self.layer_norm(tape, store, h, layer.ln_ffn)?;
            let f = self.feed_forward(tape, store, n, layer.ffn)?;
            let f = dropout.apply(tape, f)?;
            h = tape.add(h, f)?;
        }
        let h = self.layer_norm(tape, store, h, self.decoder_ln)?;
        let w = tape.param(store, self.out_proj);
        let b = tape.param(store, self.out_bias);
        let logits = tape.matmul(h, w)?;
        Ok(tape.add_row(logits, b)?)
    }

    /// Summed token cross-entropy of the targets under teacher forcing.
    pub fn nmt_loss<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        batch: &[EncodedPair],
        dropout: &mut Dropout,
    ) -> Result<Var> {
        if batch.is_empty() {
            return Err(Error::data("translation loss of an empty batch"));
        }
        let sources: Vec<&[usize]> = batch.iter().map(|p| p.src.as_slice()).collect();
        let inputs: Vec<Vec<usize>> = batch
            .iter()
            .map(|p| std::iter::once(BOS).chain(p.tgt.iter().copied()).collect())
            .collect();
        let targets: Vec<usize> = batch
            .iter()
            .flat_map(|p| p.tgt.iter().copied().chain(std::iter::once(EOS)))
            .collect();
        let memory_lens: Vec<usize> = sources.iter().map(|s| s.len()).collect();
        let memory = self.encode(tape, store, &sources, dropout)?;
        let input_refs: Vec<&[usize]> = inputs.iter().map(Vec::as_slice).collect();
        let logits = self.decode_logits(tape, store, memory, &memory_lens, &input_refs, dropout)?;
        Ok(tape.cross_entropy(logits, &targets)?)
    }

    /// Summed pivot cross-entropy: mean context embedding, private affine
    /// projection, then the output transformation.
    pub fn cbow_loss<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        pairs: &[ContextPivotPair],
    ) -> Result<Var> {
        if pairs.is_empty() {
            return Err(Error::data("CBOW loss of an empty batch"));
        }
        let bags: Vec<Vec<usize>> = pairs.iter().map(|p| p.context.clone()).collect();
        let pivots: Vec<usize> = pairs.iter().map(|p| p.pivot).collect();
        let table = tape.param(store, self.cbow_embed);
        let ctx = tape.mean_bag(table, &bags)?;
        let w = tape.param(store, self.cbow_proj_w);
        let b = tape.param(store, self.cbow_proj_b);
        let h = tape.matmul(ctx, w)?;
        let h = tape.add_row(h, b)?;
        let ow = tape.param(store, self.cbow_out_proj);
        let ob = tape.param(store, self.cbow_out_bias);
        let logits = tape.matmul(h, ow)?;
        let logits = tape.add_row(logits, ob)?;
        Ok(tape.cross_entropy(logits, &pivots)?)
    }
}

/// A network together with its parameter values.
#[derive(Debug, Clone)]
pub struct Model<T> {
    pub net: Network,
    pub store: ParamStore<T>,
}

impl<T: Real> Model<T> {
    pub fn new(config: TransformerConfig, sharing: HeadSharing, seed: u64) -> Result<Self> {
        let (net, store) = Network::init(config, sharing, seed)?;
        Ok(Model { net, store })
    }

    pub fn config(&self) -> &TransformerConfig {
        &self.net.config
    }

    /// Translation loss value without recording gradients for later use.
    pub fn eval_nmt_loss(&self, batch: &[EncodedPair]) -> Result<T> {
        let mut tape = Tape::new();
        let l = self.net.nmt_loss(&mut tape, &self.store, batch, &mut Dropout::off())?;
        Ok(tape.value(l).item())
    }

    pub fn eval_cbow_loss(&self, pairs: &[ContextPivotPair]) -> Result<T> {
        let mut tape = Tape::new();
        let l = self.net.cbow_loss(&mut tape, &self.store, pairs)?;
        Ok(tape.value(l).item())
    }

    /// Same parameters in another precision.
    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            net: self.net.clone(),
            store: self.store.cast(),
        }
    }
}
