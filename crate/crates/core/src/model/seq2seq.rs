//! Attention encoder-decoder over spectrogram frames.
//!
//! Encoder: fixed frequency pooling and per-utterance scalar normalization,
//! then stacked (bi)directional gated recurrent layers. Decoder: gated
//! recurrent layers fed with the previous token embedding and the previous
//! attention context, content-based additive attention with optional
//! location features from a convolution over the previous alignment, and a
//! linear readout of `[state; context]`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::{TokenId, TokenSequence, Vocabulary};
use crate::autodiff::{read_checkpoint, write_checkpoint, Graph, ParamId, ParamStore, Tensor, Var};
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::rng::{hash_str, RngStream};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    /// Two-gate recurrent unit (update and reset gates).
    #[default]
    Gru,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Spectrogram bins expected at the input.
    pub input_bins: usize,
    /// Adjacent bins averaged into one encoder input feature.
    pub freq_pool: usize,
    pub encoder_layers: usize,
    pub bidirectional: bool,
    pub decoder_layers: usize,
    pub hidden_size: usize,
    pub embedding_size: usize,
    pub attention_dim: usize,
    pub location_attention: bool,
    pub location_channels: usize,
    /// Odd convolution width over the previous alignment.
    pub location_kernel: usize,
    pub cell: CellKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_bins: 401,
            freq_pool: 8,
            encoder_layers: 1,
            bidirectional: true,
            decoder_layers: 1,
            hidden_size: 32,
            embedding_size: 16,
            attention_dim: 32,
            location_attention: true,
            location_channels: 4,
            location_kernel: 11,
            cell: CellKind::Gru,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("input_bins", self.input_bins),
            ("freq_pool", self.freq_pool),
            ("encoder_layers", self.encoder_layers),
            ("decoder_layers", self.decoder_layers),
            ("hidden_size", self.hidden_size),
            ("embedding_size", self.embedding_size),
            ("attention_dim", self.attention_dim),
            ("location_channels", self.location_channels),
            ("location_kernel", self.location_kernel),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("model.{name} must be at least 1")));
        }
        if self.location_kernel.is_multiple_of(2) {
            return Err(Error::Config("model.location_kernel must be odd".into()));
        }
        Ok(())
    }

    pub fn pooled_bins(&self) -> usize {
        self.input_bins.div_ceil(self.freq_pool)
    }

    pub fn encoder_dim(&self) -> usize {
        self.hidden_size * if self.bidirectional { 2 } else { 1 }
    }

    pub fn hash(&self) -> String {
        format!(
            "{:016x}",
            hash_str(&serde_json::to_string(self).expect("config serializes"))
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct GruIds {
    pub(super) wx: ParamId,
    pub(super) ux: ParamId,
    pub(super) bx: ParamId,
    pub(super) bh: ParamId,
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct Ids {
    pub(super) enc: Vec<Vec<GruIds>>,
    pub(super) emb: ParamId,
    pub(super) dec: Vec<GruIds>,
    pub(super) att_wk: ParamId,
    pub(super) att_wq: ParamId,
    pub(super) att_b: ParamId,
    pub(super) att_v: ParamId,
    pub(super) att_kernel: Option<ParamId>,
    pub(super) att_wloc: Option<ParamId>,
    pub(super) out_w: ParamId,
    pub(super) out_b: ParamId,
}

/// Encoder output for one utterance.
#[derive(Clone, Copy, Debug)]
pub struct Encoded {
    /// `T x D` state per frame.
    pub states: Var,
    /// `T x A` attention keys.
    pub keys: Var,
    pub frames: usize,
}

#[derive(Clone, Debug)]
pub struct DecoderState {
    pub hidden: Vec<Var>,
    pub context: Var,
    pub weights: Var,
}

/// `(L+1) x |V|` log-posteriors of a teacher-forced pass.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPosteriors {
    pub steps: usize,
    pub vocab: usize,
    pub data: Vec<f64>,
}

impl StepPosteriors {
    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.vocab..(l + 1) * self.vocab]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Seq2Seq {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
    pub(super) ids: Ids,
}

#[derive(Serialize, Deserialize)]
struct CheckpointExtra {
    model: ModelConfig,
    vocab: Vocabulary,
}

fn uniform(rng: &mut RngStream, rows: usize, cols: usize, bound: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| (2.0 * rng.uniform() - 1.0) * bound).collect();
    Tensor::matrix(rows, cols, data).expect("init shape")
}

impl Seq2Seq {
    pub fn new(config: ModelConfig, vocab: Vocabulary, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = RngStream::keyed(seed, &[hash_str("model-init")]);
        let mut p = ParamStore::new();
        let h = config.hidden_size;
        let gk = 1.0 / (h as f64).sqrt();
        let gru = |p: &mut ParamStore, rng: &mut RngStream, prefix: &str, input: usize| -> Result<()> {
            p.insert(format!("{prefix}.wx"), uniform(rng, input, 3 * h, gk))?;
            p.insert(format!("{prefix}.ux"), uniform(rng, h, 3 * h, gk))?;
            p.insert(format!("{prefix}.bx"), uniform(rng, 1, 3 * h, gk))?;
            p.insert(format!("{prefix}.bh"), uniform(rng, 1, 3 * h, gk))?;
            Ok(())
        };
        let dirs = if config.bidirectional { 2 } else { 1 };
        let mut input = config.pooled_bins();
        for l in 0..config.encoder_layers {
            for d in 0..dirs {
                gru(&mut p, &mut rng, &format!("enc.{l}.{d}"), input)?;
            }
            input = config.encoder_dim();
        }
        let v = vocab.size();
        let m = config.embedding_size;
        let d = config.encoder_dim();
        let a = config.attention_dim;
        p.insert("dec.emb", uniform(&mut rng, v, m, 1.0))?;
        let mut input = m + d;
        for l in 0..config.decoder_layers {
            gru(&mut p, &mut rng, &format!("dec.{l}"), input)?;
            input = h;
        }
        p.insert("att.wk", uniform(&mut rng, d, a, 1.0 / (d as f64).sqrt()))?;
        p.insert("att.wq", uniform(&mut rng, h, a, gk))?;
        p.insert("att.b", Tensor::zeros(vec![1, a]))?;
        p.insert("att.v", uniform(&mut rng, a, 1, 1.0 / (a as f64).sqrt()))?;
        if config.location_attention {
            let c = config.location_channels;
            let k = config.location_kernel;
            p.insert("att.loc_kernel", uniform(&mut rng, c, k, 1.0 / (k as f64).sqrt()))?;
            p.insert("att.wloc", uniform(&mut rng, c, a, 1.0 / (c as f64).sqrt()))?;
        }
        p.insert("out.w", uniform(&mut rng, h + d, v, 1.0 / ((h + d) as f64).sqrt()))?;
        p.insert("out.b", Tensor::zeros(vec![1, v]))?;
        Self::from_params(config, vocab, p)
    }

    /// Wrap an existing parameter store, checking names and shapes.
    pub fn from_params(config: ModelConfig, vocab: Vocabulary, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let get = |name: &str, shape: [usize; 2]| -> Result<ParamId> {
            let id = params
                .id(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
            if params.get(id).dims2() != (shape[0], shape[1]) {
                return Err(Error::Checkpoint(format!(
                    "parameter {name} has shape {:?}, expected {shape:?}",
                    params.get(id).shape()
                )));
            }
            Ok(id)
        };
        let h = config.hidden_size;
        let gru = |prefix: &str, input: usize| -> Result<GruIds> {
            Ok(GruIds {
                wx: get(&format!("{prefix}.wx"), [input, 3 * h])?,
                ux: get(&format!("{prefix}.ux"), [h, 3 * h])?,
                bx: get(&format!("{prefix}.bx"), [1, 3 * h])?,
                bh: get(&format!("{prefix}.bh"), [1, 3 * h])?,
            })
        };
        let dirs = if config.bidirectional { 2 } else { 1 };
        let mut enc = Vec::new();
        let mut input = config.pooled_bins();
        for l in 0..config.encoder_layers {
            enc.push(
                (0..dirs)
                    .map(|d| gru(&format!("enc.{l}.{d}"), input))
                    .collect::<Result<Vec<_>>>()?,
            );
            input = config.encoder_dim();
        }
        let (v, m, d, a) = (
            vocab.size(),
            config.embedding_size,
            config.encoder_dim(),
            config.attention_dim,
        );
        let mut dec = Vec::new();
        let mut input = m + d;
        for l in 0..config.decoder_layers {
            dec.push(gru(&format!("dec.{l}"), input)?);
            input = h;
        }
        let (att_kernel, att_wloc) = if config.location_attention {
            (
                Some(get(
                    "att.loc_kernel",
                    [config.location_channels, config.location_kernel],
                )?),
                Some(get("att.wloc", [config.location_channels, a])?),
            )
        } else {
            (None, None)
        };
        let ids = Ids {
            enc,
            emb: get("dec.emb", [v, m])?,
            dec,
            att_wk: get("att.wk", [d, a])?,
            att_wq: get("att.wq", [h, a])?,
            att_b: get("att.b", [1, a])?,
            att_v: get("att.v", [a, 1])?,
            att_kernel,
            att_wloc,
            out_w: get("out.w", [h + d, v])?,
            out_b: get("out.b", [1, v])?,
        };
        Ok(Self {
            config,
            vocab,
            params,
            ids,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let extra = serde_json::to_value(CheckpointExtra {
            model: self.config.clone(),
            vocab: self.vocab.clone(),
        })?;
        let w = BufWriter::new(File::create(path)?);
        write_checkpoint(w, &self.params, &self.config.hash(), extra)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (params, meta) = read_checkpoint(BufReader::new(File::open(path)?))?;
        let extra: CheckpointExtra = serde_json::from_value(meta.extra)?;
        if extra.model.hash() != meta.config_hash {
            return Err(Error::Checkpoint("config hash does not match metadata".into()));
        }
        Self::from_params(extra.model, extra.vocab, params)
    }

    /// Pooled, normalized encoder input as a `T x F` row-major matrix.
    pub fn features(&self, x: &Spectrogram) -> Result<(Vec<f64>, usize, usize)> {
        if x.n_bins() != self.config.input_bins {
            return Err(Error::Shape(format!(
                "spectrogram has {} bins, model expects {}",
                x.n_bins(),
                self.config.input_bins
            )));
        }
        let pool = self.config.freq_pool;
        let f = self.config.pooled_bins();
        let t = x.n_frames();
        let mut out = Vec::with_capacity(t * f);
        for frame in 0..t {
            let row = x.frame(frame);
            for chunk in row.chunks(pool) {
                out.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
            }
        }
        let n = out.len() as f64;
        let mean = out.iter().sum::<f64>() / n;
        let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = 1.0 / (var.sqrt() + 1e-5);
        for v in &mut out {
            *v = (*v - mean) * scale;
        }
        Ok((out, t, f))
    }

    fn gru_step(&self, g: &mut Graph, ids: &GruIds, xproj: Var, h: Var) -> Var {
        let hs = self.config.hidden_size;
        let ux = g.param(ids.ux);
        let bh = g.param(ids.bh);
        let hp = g.matmul(h, ux);
        let hp = g.add(hp, bh);
        let x_zr = g.slice_cols(xproj, 0, 2 * hs);
        let h_zr = g.slice_cols(hp, 0, 2 * hs);
        let zr = g.add(x_zr, h_zr);
        let zr = g.sigmoid(zr);
        let z = g.slice_cols(zr, 0, hs);
        let r = g.slice_cols(zr, hs, hs);
        let x_n = g.slice_cols(xproj, 2 * hs, hs);
        let h_n = g.slice_cols(hp, 2 * hs, hs);
        let rh = g.mul(r, h_n);
        let n = g.add(x_n, rh);
        let n = g.tanh(n);
        // h' = n + z ⊙ (h − n)
        let d = g.sub(h, n);
        let zd = g.mul(z, d);
        g.add(n, zd)
    }

    fn gru_sequence(&self, g: &mut Graph, ids: &GruIds, input: Var, reverse: bool) -> Vec<Var> {
        let (t, _) = g.dims(input);
        let wx = g.param(ids.wx);
        let bx = g.param(ids.bx);
        let xp = g.matmul(input, wx);
        let xp = g.add_row(xp, bx);
        let mut h = g.constant(1, self.config.hidden_size, vec![0.0; self.config.hidden_size]);
        let mut out = vec![h; t];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..t).rev())
        } else {
            Box::new(0..t)
        };
        for step in order {
            let row = g.row(xp, step);
            h = self.gru_step(g, ids, row, h);
            out[step] = h;
        }
        out
    }

    /// Encoder states (`T x D`) and attention keys for one utterance.
    pub fn encode(&self, g: &mut Graph, x: &Spectrogram) -> Result<Encoded> {
        let (feat, t, f) = self.features(x)?;
        let mut input = g.constant(t, f, feat);
        for layer in &self.ids.enc {
            let fwd = self.gru_sequence(g, &layer[0], input, false);
            let fwd = g.concat_rows(&fwd);
            input = if layer.len() == 2 {
                let bwd = self.gru_sequence(g, &layer[1], input, true);
                let bwd = g.concat_rows(&bwd);
                g.concat_cols(&[fwd, bwd])
            } else {
                fwd
            };
        }
        let wk = g.param(self.ids.att_wk);
        let keys = g.matmul(input, wk);
        Ok(Encoded {
            states: input,
            keys,
            frames: t,
        })
    }

    /// Additive attention of `query` (`1 x H`) over the encoder states.
    /// Returns `(context 1 x D, weights 1 x T)`.
    pub fn attend(&self, g: &mut Graph, enc: &Encoded, query: Var, prev_weights: Var) -> (Var, Var) {
        let wq = g.param(self.ids.att_wq);
        let b = g.param(self.ids.att_b);
        let q = g.matmul(query, wq);
        let q = g.add(q, b);
        let mut e = g.add_row(enc.keys, q);
        if let (Some(kid), Some(wid)) = (self.ids.att_kernel, self.ids.att_wloc) {
            let kernel = g.param(kid);
            let wloc = g.param(wid);
            let conv = g.conv1d(prev_weights, kernel);
            let loc = g.matmul(conv, wloc);
            e = g.add(e, loc);
        }
        let e = g.tanh(e);
        let v = g.param(self.ids.att_v);
        let energies = g.matmul(e, v);
        let energies = g.reshape(energies, 1, enc.frames);
        let weights = g.softmax(energies);
        let context = g.matmul(weights, enc.states);
        (context, weights)
    }

    pub fn decoder_start(&self, g: &mut Graph, enc: &Encoded) -> DecoderState {
        let h = self.config.hidden_size;
        let hidden = (0..self.config.decoder_layers)
            .map(|_| g.constant(1, h, vec![0.0; h]))
            .collect();
        let context = g.constant(1, self.config.encoder_dim(), vec![0.0; self.config.encoder_dim()]);
        let mut w = vec![0.0; enc.frames];
        w[0] = 1.0;
        let weights = g.constant(1, enc.frames, w);
        DecoderState {
            hidden,
            context,
            weights,
        }
    }

    /// Consume `prev` and return the next state plus the `1 x (H+D)` readout
    /// features for this step.
    pub fn decoder_step(
        &self,
        g: &mut Graph,
        enc: &Encoded,
        state: &DecoderState,
        prev: TokenId,
    ) -> (DecoderState, Var) {
        let emb = g.param(self.ids.emb);
        let e = g.embedding(emb, &[prev]);
        let mut input = g.concat_cols(&[e, state.context]);
        let mut hidden = Vec::with_capacity(state.hidden.len());
        for (ids, &h) in self.ids.dec.iter().zip(&state.hidden) {
            let wx = g.param(ids.wx);
            let bx = g.param(ids.bx);
            let xp = g.matmul(input, wx);
            let xp = g.add(xp, bx);
            let h2 = self.gru_step(g, ids, xp, h);
            hidden.push(h2);
            input = h2;
        }
        let top = *hidden.last().expect("at least one decoder layer");
        let (context, weights) = self.attend(g, enc, top, state.weights);
        let feat = g.concat_cols(&[top, context]);
        (
            DecoderState {
                hidden,
                context,
                weights,
            },
            feat,
        )
    }

    /// Row-wise log-posteriors over the vocabulary from readout features.
    pub fn readout(&self, g: &mut Graph, feats: Var) -> Var {
        let w = g.param(self.ids.out_w);
        let b = g.param(self.ids.out_b);
        let logits = g.matmul(feats, w);
        let logits = g.add_row(logits, b);
        g.log_softmax(logits)
    }

    /// Teacher-forced pass: step `l` consumes target token `l-1` (SOS first)
    /// and the last of the `L+1` rows predicts EOS.
    pub fn forward_teacher_forced(&self, g: &mut Graph, x: &Spectrogram, target: &TokenSequence) -> Result<Var> {
        target.validate(&self.vocab)?;
        let enc = self.encode(g, x)?;
        let mut state = self.decoder_start(g, &enc);
        let mut feats = Vec::with_capacity(target.len() + 1);
        let inputs = std::iter::once(self.vocab.sos()).chain(target.0.iter().copied());
        for prev in inputs {
            let (next, f) = self.decoder_step(g, &enc, &state, prev);
            feats.push(f);
            state = next;
        }
        let feats = g.concat_rows(&feats);
        Ok(self.readout(g, feats))
    }

    /// Targets aligned with the teacher-forced rows: the content tokens then EOS.
    pub fn targets_with_eos(&self, target: &TokenSequence) -> Vec<TokenId> {
        target
            .0
            .iter()
            .copied()
            .chain(std::iter::once(self.vocab.eos()))
            .collect()
    }

    /// Summed token NLL of `target` (EOS included) as a graph scalar.
    pub fn sequence_nll(&self, g: &mut Graph, x: &Spectrogram, target: &TokenSequence) -> Result<Var> {
        let logp = self.forward_teacher_forced(g, x, target)?;
        let t = self.targets_with_eos(target);
        Ok(g.nll(logp, &t))
    }

    /// Gradient-free teacher-forced posteriors.
    pub fn posteriors(&self, x: &Spectrogram, target: &TokenSequence) -> Result<StepPosteriors> {
        let mut g = Graph::new(&self.params);
        let lp = self.forward_teacher_forced(&mut g, x, target)?;
        let (steps, vocab) = g.dims(lp);
        Ok(StepPosteriors {
            steps,
            vocab,
            data: g.value(lp).to_vec(),
        })
    }
}
