//! Supervised, consistency and combined objectives.
//!
//! Both token losses are micro-averaged: summed cross-entropy over every
//! decoding step of every utterance (EOS step included) divided by the total
//! step count of the batch.

use super::seq2seq::{Seq2Seq, StepPosteriors};
use super::vocab::{TokenId, TokenSequence};
use crate::augment::{self, AugmentationPolicy};
use crate::autodiff::{Graph, Var};
use crate::dsp::{FrontendConfig, Spectrogram, Waveform};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Micro-averaged NLL of labels under precomputed posteriors.
pub fn supervised_loss(posteriors: &[StepPosteriors], labels: &[TokenSequence], eos: TokenId) -> Result<f64> {
    if posteriors.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if posteriors.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} posterior sets for {} label sequences",
            posteriors.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, y) in posteriors.iter().zip(labels) {
        if p.steps != y.len() + 1 {
            return Err(Error::Shape(format!(
                "{} posterior rows for {} tokens + EOS",
                p.steps,
                y.len()
            )));
        }
        for (l, &t) in y.0.iter().chain(std::iter::once(&eos)).enumerate() {
            total -= p.row(l)[t];
        }
        count += p.steps;
    }
    Ok(total / count as f64)
}

/// Cross-entropy between fixed pseudo-labels and the model's teacher-forced
/// predictions on augmented inputs. `rngs` holds one stream per utterance.
pub fn consistency_loss(
    model: &Seq2Seq,
    waveforms: &[&Waveform],
    pseudo: &[TokenSequence],
    policy: &AugmentationPolicy,
    frontend: &FrontendConfig,
    rngs: &mut [RngStream],
) -> Result<f64> {
    if pseudo.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if waveforms.len() != pseudo.len() || rngs.len() != pseudo.len() {
        return Err(Error::Shape("one waveform and stream per pseudo-label".into()));
    }
    let mut posts = Vec::with_capacity(pseudo.len());
    for ((w, y), rng) in waveforms.iter().zip(pseudo).zip(rngs.iter_mut()) {
        let x = augment::apply(policy, w, frontend, rng)?;
        posts.push(model.posteriors(&x, y)?);
    }
    supervised_loss(&posts, pseudo, model.vocab.eos())
}

pub fn total_loss(l_sup: f64, l_cr: f64, lambda: f64) -> f64 {
    l_sup + lambda * l_cr
}

/// Graph scalars of one minibatch objective.
#[derive(Clone, Copy, Debug)]
pub struct BatchLoss {
    pub total: Var,
    pub sup: Var,
    pub cr: Option<Var>,
}

/// Builds `L_sup + λ·L_cr` on the tape. `sup` and `cr` are `(features,
/// target)` pairs; `cr` features are expected to be already augmented.
pub fn batch_objective(
    g: &mut Graph,
    model: &Seq2Seq,
    sup: &[(&Spectrogram, &TokenSequence)],
    cr: &[(&Spectrogram, &TokenSequence)],
    lambda: f64,
) -> Result<BatchLoss> {
    let sup_loss = mean_token_nll(g, model, sup)?;
    let cr_loss = if cr.is_empty() {
        None
    } else {
        Some(mean_token_nll(g, model, cr)?)
    };
    let total = match cr_loss {
        Some(c) if lambda != 0.0 => {
            let scaled = g.affine(c, lambda, 0.0);
            g.add(sup_loss, scaled)
        }
        _ => sup_loss,
    };
    Ok(BatchLoss {
        total,
        sup: sup_loss,
        cr: cr_loss,
    })
}

/// Summed NLL over all steps of all pairs divided by the total step count.
pub fn mean_token_nll(g: &mut Graph, model: &Seq2Seq, batch: &[(&Spectrogram, &TokenSequence)]) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut terms = Vec::with_capacity(batch.len());
    let mut count = 0usize;
    for (x, y) in batch {
        terms.push(model.sequence_nll(g, x, y)?);
        count += y.len() + 1;
    }
    let stacked = g.concat_rows(&terms);
    let s = g.sum(stacked);
    Ok(g.affine(s, 1.0 / count as f64, 0.0))
}
