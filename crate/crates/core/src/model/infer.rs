//! Tape-free forward pass used for decoding. Mirrors the graph operations of
//! [`Seq2Seq`] step for step, without recording anything for backprop.

use super::seq2seq::{GruIds, Seq2Seq};
use super::vocab::TokenId;
use crate::autodiff::ParamId;
use crate::dsp::Spectrogram;
use crate::error::Result;

/// `y = x · W (+ b)` for a row vector `x` and row-major `W` of `x.len() x cols`.
fn row_matmul(x: &[f64], w: &[f64], cols: usize, bias: Option<&[f64]>) -> Vec<f64> {
    let mut y = match bias {
        Some(b) => b.to_vec(),
        None => vec![0.0; cols],
    };
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let wr = &w[i * cols..(i + 1) * cols];
        for (yj, wj) in y.iter_mut().zip(wr) {
            *yj += xi * wj;
        }
    }
    y
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Decoder state of one hypothesis.
#[derive(Clone, Debug)]
pub struct PlainState {
    pub hidden: Vec<Vec<f64>>,
    pub context: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Encoder output held as plain buffers, ready for step-wise decoding.
#[derive(Clone, Debug)]
pub struct PlainDecoder<'m> {
    model: &'m Seq2Seq,
    /// `T x D`
    states: Vec<f64>,
    /// `T x A`
    keys: Vec<f64>,
    frames: usize,
}

impl<'m> PlainDecoder<'m> {
    pub fn new(model: &'m Seq2Seq, x: &Spectrogram) -> Result<Self> {
        let (feat, t, f) = model.features(x)?;
        let mut input = feat;
        let mut width = f;
        for layer in &model.ids.enc {
            let fwd = gru_sequence(model, &layer[0], &input, width, false);
            let hs = model.config.hidden_size;
            input = if layer.len() == 2 {
                let bwd = gru_sequence(model, &layer[1], &input, width, true);
                let mut out = Vec::with_capacity(t * 2 * hs);
                for step in 0..t {
                    out.extend_from_slice(&fwd[step * hs..(step + 1) * hs]);
                    out.extend_from_slice(&bwd[step * hs..(step + 1) * hs]);
                }
                width = 2 * hs;
                out
            } else {
                width = hs;
                fwd
            };
        }
        let a = model.config.attention_dim;
        let wk = data(model, model.ids.att_wk);
        let keys = input
            .chunks(width)
            .flat_map(|row| row_matmul(row, wk, a, None))
            .collect();
        Ok(Self {
            model,
            states: input,
            keys,
            frames: t,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn model(&self) -> &'m Seq2Seq {
        self.model
    }

    pub fn start(&self) -> PlainState {
        let h = self.model.config.hidden_size;
        let mut weights = vec![0.0; self.frames];
        weights[0] = 1.0;
        PlainState {
            hidden: vec![vec![0.0; h]; self.model.config.decoder_layers],
            context: vec![0.0; self.model.config.encoder_dim()],
            weights,
        }
    }

    /// Consume `prev` and return the next state plus log-posteriors over the
    /// vocabulary.
    pub fn step(&self, state: &PlainState, prev: TokenId) -> (PlainState, Vec<f64>) {
        let m = self.model;
        let cfg = &m.config;
        let emb_dim = cfg.embedding_size;
        let emb = data(m, m.ids.emb);
        let mut input = Vec::with_capacity(emb_dim + state.context.len());
        input.extend_from_slice(&emb[prev * emb_dim..(prev + 1) * emb_dim]);
        input.extend_from_slice(&state.context);
        let mut hidden = Vec::with_capacity(state.hidden.len());
        for (ids, h) in m.ids.dec.iter().zip(&state.hidden) {
            let xp = row_matmul(&input, data(m, ids.wx), 3 * cfg.hidden_size, Some(data(m, ids.bx)));
            let h2 = gru_step(m, ids, &xp, h);
            input = h2.clone();
            hidden.push(h2);
        }
        let top = hidden.last().expect("at least one decoder layer");
        let (context, weights) = self.attend(top, &state.weights);
        let mut feat = top.clone();
        feat.extend_from_slice(&context);
        let v = m.vocab.size();
        let mut logits = row_matmul(&feat, data(m, m.ids.out_w), v, Some(data(m, m.ids.out_b)));
        let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + logits.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
        for x in &mut logits {
            *x -= lse;
        }
        (
            PlainState {
                hidden,
                context,
                weights,
            },
            logits,
        )
    }

    fn attend(&self, query: &[f64], prev_weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.model;
        let a = m.config.attention_dim;
        let t = self.frames;
        let q = row_matmul(query, data(m, m.ids.att_wq), a, Some(data(m, m.ids.att_b)));
        let mut e = self.keys.clone();
        for row in e.chunks_mut(a) {
            for (x, qj) in row.iter_mut().zip(&q) {
                *x += qj;
            }
        }
        if let (Some(kid), Some(wid)) = (m.ids.att_kernel, m.ids.att_wloc) {
            let kernel = data(m, kid);
            let wloc = data(m, wid);
            let (ch, k) = m.params.get(kid).dims2();
            let half = k / 2;
            let mut conv = vec![0.0; ch];
            for pos in 0..t {
                for (c, slot) in conv.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..k {
                        let src = pos as isize + j as isize - half as isize;
                        if src >= 0 && (src as usize) < t {
                            acc += kernel[c * k + j] * prev_weights[src as usize];
                        }
                    }
                    *slot = acc;
                }
                let loc = row_matmul(&conv, wloc, a, None);
                for (x, l) in e[pos * a..(pos + 1) * a].iter_mut().zip(&loc) {
                    *x += l;
                }
            }
        }
        let v = data(m, m.ids.att_v);
        let mut w: Vec<f64> = e
            .chunks(a)
            .map(|row| row.iter().zip(v).map(|(x, vj)| x.tanh() * vj).sum())
            .collect();
        let mx = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for x in &mut w {
            *x = (*x - mx).exp();
            s += *x;
        }
        for x in &mut w {
            *x /= s;
        }
        let d = m.config.encoder_dim();
        let context = row_matmul(&w, &self.states, d, None);
        (context, w)
    }
}

fn data(m: &Seq2Seq, id: ParamId) -> &[f64] {
    m.params.get(id).data()
}

fn gru_step(m: &Seq2Seq, ids: &GruIds, xp: &[f64], h: &[f64]) -> Vec<f64> {
    let hs = m.config.hidden_size;
    let hp = row_matmul(h, data(m, ids.ux), 3 * hs, Some(data(m, ids.bh)));
    (0..hs)
        .map(|j| {
            let z = sigmoid(xp[j] + hp[j]);
            let r = sigmoid(xp[hs + j] + hp[hs + j]);
            let n = (xp[2 * hs + j] + r * hp[2 * hs + j]).tanh();
            n + z * (h[j] - n)
        })
        .collect()
}

/// Runs one direction over a `T x width` input; returns `T x H` states in
/// time order.
fn gru_sequence(m: &Seq2Seq, ids: &GruIds, input: &[f64], width: usize, reverse: bool) -> Vec<f64> {
    let hs = m.config.hidden_size;
    let t = input.len() / width;
    let wx = data(m, ids.wx);
    let bx = data(m, ids.bx);
    let mut out = vec![0.0; t * hs];
    let mut h = vec![0.0; hs];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..t).rev())
    } else {
        Box::new(0..t)
    };
    for step in order {
        let xp = row_matmul(&input[step * width..(step + 1) * width], wx, 3 * hs, Some(bx));
        h = gru_step(m, ids, &xp, &h);
        out[step * hs..(step + 1) * hs].copy_from_slice(&h);
    }
    out
}
