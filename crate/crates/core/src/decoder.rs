//! Beam search with a length penalty, pseudo-label decoding and the
//! length-normalized path probability used as an uncertainty score.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::autodiff::Graph;
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::model::{DecoderState, Encoded, PlainDecoder, PlainState, Seq2Seq, TokenId, TokenSequence};

pub const LP_OFFSET: f64 = 5.0;
pub const LP_POWER: f64 = 1.2;
/// Upper bound on the default decode length.
pub const MAX_LEN_CAP: usize = 40;

/// `((offset + L) / (offset + 1))^power`.
pub fn length_penalty_with(len: usize, offset: f64, power: f64) -> f64 {
    ((offset + len as f64) / (offset + 1.0)).powf(power)
}

pub fn length_penalty(len: usize) -> f64 {
    length_penalty_with(len, LP_OFFSET, LP_POWER)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub width: usize,
    /// Content-token limit. `None` means twice the frame count, capped at
    /// [`MAX_LEN_CAP`].
    pub max_len: Option<usize>,
    pub lp_offset: f64,
    pub lp_power: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            width: 5,
            max_len: None,
            lp_offset: LP_OFFSET,
            lp_power: LP_POWER,
        }
    }
}

impl BeamConfig {
    pub fn with_width(width: usize) -> Self {
        Self {
            width,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::InvalidArgument("beam width must be at least 1".into()));
        }
        if self.max_len == Some(0) {
            return Err(Error::InvalidArgument("max_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_max_len(&self, frames: usize) -> usize {
        self.max_len.unwrap_or_else(|| (2 * frames).clamp(1, MAX_LEN_CAP))
    }

    pub fn penalty(&self, len: usize) -> f64 {
        length_penalty_with(len, self.lp_offset, self.lp_power)
    }
}

/// A finished decoding path. `tokens` holds content tokens only.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub tokens: TokenSequence,
    pub logp: f64,
    pub ended: bool,
    pub score: f64,
}

/// Autoregressive next-token distribution, abstracted so the search can run
/// over table models as well as the network.
pub trait StepModel {
    type State: Clone;

    fn vocab_size(&self) -> usize;
    fn eos(&self) -> TokenId;
    /// Tokens that may appear in a hypothesis besides EOS.
    fn emits(&self, token: TokenId) -> bool;
    /// Encoder length used for the default decode limit.
    fn frames(&self) -> usize;
    fn start(&mut self) -> (Self::State, TokenId);
    /// Consume `prev` and return the next state with log-probabilities over
    /// the whole vocabulary.
    fn step(&mut self, state: &Self::State, prev: TokenId) -> (Self::State, Vec<f64>);
}

struct Live<S> {
    tokens: Vec<TokenId>,
    logp: f64,
    state: S,
    last: TokenId,
}

struct Candidate {
    parent: usize,
    token: TokenId,
    logp: f64,
}

fn rank_candidates(cands: &mut [Candidate], live_tokens: &[&[TokenId]]) {
    cands.sort_by(|a, b| {
        b.logp
            .partial_cmp(&a.logp)
            .unwrap_or(Ordering::Equal)
            .then_with(|| live_tokens[a.parent].cmp(live_tokens[b.parent]))
            .then_with(|| a.token.cmp(&b.token))
    });
}

/// Orders by normalized score descending, then shorter, then lexicographic.
fn cmp_hypotheses(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.tokens.len().cmp(&b.tokens.len()))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Runs the search. Candidates ending in EOS leave the beam and go to the
/// finished set; live paths that reach `max_len` content tokens are closed
/// with the model's EOS probability on the following step.
pub fn search<M: StepModel>(model: &mut M, cfg: &BeamConfig) -> Result<Vec<Hypothesis>> {
    run_search(model, cfg, false)
}

/// Same top hypothesis as [`search`], but stops as soon as no live path can
/// overtake the best finished one. Only the first entry is complete.
pub fn search_best<M: StepModel>(model: &mut M, cfg: &BeamConfig) -> Result<Hypothesis> {
    let mut all = run_search(model, cfg, true)?;
    Ok(all.swap_remove(0))
}

fn run_search<M: StepModel>(model: &mut M, cfg: &BeamConfig, early_stop: bool) -> Result<Vec<Hypothesis>> {
    cfg.validate()?;
    let max_len = cfg.effective_max_len(model.frames());
    let eos = model.eos();
    let (state, sos) = model.start();
    let mut live = vec![Live {
        tokens: Vec::new(),
        logp: 0.0,
        state,
        last: sos,
    }];
    let mut finished = Vec::new();
    let finish = |finished: &mut Vec<Hypothesis>, tokens: Vec<TokenId>, logp: f64| {
        let score = logp / cfg.penalty(tokens.len());
        finished.push(Hypothesis {
            tokens: TokenSequence(tokens),
            logp,
            ended: true,
            score,
        });
    };

    for depth in 0..=max_len {
        if live.is_empty() {
            break;
        }
        let forced = depth == max_len;
        let mut cands = Vec::new();
        let mut states = Vec::with_capacity(live.len());
        for (i, h) in live.iter().enumerate() {
            let (next, row) = model.step(&h.state, h.last);
            if forced {
                cands.push(Candidate {
                    parent: i,
                    token: eos,
                    logp: h.logp + row[eos],
                });
            } else {
                for (t, &lp) in row.iter().enumerate() {
                    if (t == eos || model.emits(t)) && lp > f64::NEG_INFINITY {
                        cands.push(Candidate {
                            parent: i,
                            token: t,
                            logp: h.logp + lp,
                        });
                    }
                }
            }
            states.push(next);
        }
        let live_tokens: Vec<&[TokenId]> = live.iter().map(|h| h.tokens.as_slice()).collect();
        rank_candidates(&mut cands, &live_tokens);
        let keep = if forced {
            cands.len()
        } else {
            cfg.width.min(cands.len())
        };
        let mut next_live = Vec::with_capacity(keep);
        for c in &cands[..keep] {
            let mut tokens = live[c.parent].tokens.clone();
            if c.token == eos {
                finish(&mut finished, tokens, c.logp);
            } else {
                tokens.push(c.token);
                next_live.push(Live {
                    tokens,
                    logp: c.logp,
                    state: states[c.parent].clone(),
                    last: c.token,
                });
            }
        }
        live = next_live;
        if !early_stop {
            continue;
        }
        // Log-probabilities only fall and lp(L) only grows, so no live path
        // can finish above logp / lp(max_len).
        let best_done = finished.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        let best_live = live
            .iter()
            .map(|h| h.logp / cfg.penalty(max_len))
            .fold(f64::NEG_INFINITY, f64::max);
        if best_done > best_live {
            break;
        }
    }
    if finished.is_empty() {
        // Every continuation was impossible; report the empty path.
        finish(&mut finished, Vec::new(), f64::NEG_INFINITY);
    }
    finished.sort_by(cmp_hypotheses);
    Ok(finished)
}

/// Greedy decoding: the most probable token at each step until EOS or the
/// length limit.
pub fn greedy<M: StepModel>(model: &mut M, max_len: usize) -> (TokenSequence, f64) {
    let eos = model.eos();
    let (mut state, mut prev) = model.start();
    let mut tokens = Vec::new();
    let mut logp = 0.0;
    loop {
        let (next, row) = model.step(&state, prev);
        if tokens.len() == max_len {
            logp += row[eos];
            break;
        }
        let (best, lp) = row
            .iter()
            .enumerate()
            .filter(|&(t, _)| t == eos || model.emits(t))
            .fold(
                (eos, f64::NEG_INFINITY),
                |acc, (t, &lp)| if lp > acc.1 { (t, lp) } else { acc },
            );
        logp += lp;
        if best == eos {
            break;
        }
        tokens.push(best);
        state = next;
        prev = best;
    }
    (TokenSequence(tokens), logp)
}

/// Graph-backed adapter: encodes once, then extends one graph per step.
/// Slower than [`PlainDecoder`] but shares code with training.
pub struct NetworkStepper<'m> {
    model: &'m Seq2Seq,
    graph: Graph<'m>,
    enc: Encoded,
}

impl<'m> NetworkStepper<'m> {
    pub fn new(model: &'m Seq2Seq, x: &Spectrogram) -> Result<Self> {
        let mut graph = Graph::new(&model.params);
        let enc = model.encode(&mut graph, x)?;
        Ok(Self { model, graph, enc })
    }
}

impl StepModel for NetworkStepper<'_> {
    type State = DecoderState;

    fn vocab_size(&self) -> usize {
        self.model.vocab.size()
    }

    fn eos(&self) -> TokenId {
        self.model.vocab.eos()
    }

    fn emits(&self, token: TokenId) -> bool {
        self.model.vocab.is_content(token)
    }

    fn frames(&self) -> usize {
        self.enc.frames
    }

    fn start(&mut self) -> (DecoderState, TokenId) {
        (
            self.model.decoder_start(&mut self.graph, &self.enc),
            self.model.vocab.sos(),
        )
    }

    fn step(&mut self, state: &DecoderState, prev: TokenId) -> (DecoderState, Vec<f64>) {
        let (next, feat) = self.model.decoder_step(&mut self.graph, &self.enc, state, prev);
        let lp = self.model.readout(&mut self.graph, feat);
        (next, self.graph.value(lp).to_vec())
    }
}

impl StepModel for PlainDecoder<'_> {
    type State = PlainState;

    fn vocab_size(&self) -> usize {
        self.model().vocab.size()
    }

    fn eos(&self) -> TokenId {
        self.model().vocab.eos()
    }

    fn emits(&self, token: TokenId) -> bool {
        self.model().vocab.is_content(token)
    }

    fn frames(&self) -> usize {
        PlainDecoder::frames(self)
    }

    fn start(&mut self) -> (PlainState, TokenId) {
        (PlainDecoder::start(self), self.model().vocab.sos())
    }

    fn step(&mut self, state: &PlainState, prev: TokenId) -> (PlainState, Vec<f64>) {
        PlainDecoder::step(self, state, prev)
    }
}

pub fn beam_search(model: &Seq2Seq, x: &Spectrogram, cfg: &BeamConfig) -> Result<Vec<Hypothesis>> {
    search(&mut PlainDecoder::new(model, x)?, cfg)
}

/// Best normalized score `max logp / lp(L)`.
pub fn pprob(model: &Seq2Seq, x: &Spectrogram, cfg: &BeamConfig) -> Result<f64> {
    Ok(best(model, x, cfg)?.score)
}

/// Tokens of the best hypothesis under the normalized score.
pub fn decode_pseudo_label(model: &Seq2Seq, x: &Spectrogram, cfg: &BeamConfig) -> Result<TokenSequence> {
    Ok(best(model, x, cfg)?.tokens)
}

pub fn best(model: &Seq2Seq, x: &Spectrogram, cfg: &BeamConfig) -> Result<Hypothesis> {
    search_best(&mut PlainDecoder::new(model, x)?, cfg)
}

/// Decodes many inputs on `workers` threads. Output order follows input
/// order and does not depend on the worker count.
pub fn decode_many(
    model: &Seq2Seq,
    inputs: &[&Spectrogram],
    cfg: &BeamConfig,
    workers: usize,
) -> Result<Vec<Hypothesis>> {
    let workers = workers.clamp(1, inputs.len().max(1));
    if workers == 1 {
        return inputs.iter().map(|x| best(model, x, cfg)).collect();
    }
    let chunk = inputs.len().div_ceil(workers);
    let parts: Vec<Result<Vec<Hypothesis>>> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|x| best(model, x, cfg)).collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("decode worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(inputs.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
