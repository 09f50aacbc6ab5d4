use std::borrow::Cow;

use rand::seq::SliceRandom;

use super::config::PipelineConfig;
use super::data::{Prepared, TrainItem};
use crate::augment::{self, AugmentationPolicy, SpecAugmentParams};
use crate::autodiff::{adam_step, clip_global_norm, lr_at_epoch, AdamConfig, AdamState, Graph};
use crate::decoder::{decode_many, Hypothesis};
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::metrics::{cer, EvalPair};
use crate::model::{batch_objective, Seq2Seq, TokenSequence};
use crate::rng::{hash_str, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Initial,
    Pipeline,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Initial => hash_str("initial"),
            Phase::Pipeline => hash_str("pipeline"),
        }
    }
}

/// Loss values of one minibatch, measured before its update.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStat {
    pub sup: f64,
    pub sup_tokens: usize,
    pub cr: Option<f64>,
    pub cr_tokens: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Token-weighted mean over the epoch's batches.
    pub loss_sup: f64,
    pub loss_cr: Option<f64>,
    pub batches: Vec<BatchStat>,
}

fn token_count(items: &[&TrainItem]) -> usize {
    items.iter().map(|it| it.label.len() + 1).sum()
}

/// Consistency-loss input for one pseudo-labeled utterance. SpecAugment
/// reuses the cached genuine features.
fn augmented(
    prepared: &Prepared,
    index: usize,
    policy: &AugmentationPolicy,
    rng: &mut RngStream,
) -> Result<Spectrogram> {
    match policy {
        AugmentationPolicy::SpecAugment(p) => Ok(augment::spec_augment(&prepared.features[index], p, rng)),
        _ => augment::apply(policy, &prepared.utterance(index).waveform, &prepared.frontend, rng),
    }
}

/// One shuffled pass with a single Adam update per minibatch. Every item
/// contributes to the supervised term; pseudo-labeled items also contribute
/// to the consistency term when `lambda > 0`.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    model: &mut Seq2Seq,
    adam: &mut AdamState,
    items: &[TrainItem],
    prepared: &Prepared,
    cfg: &PipelineConfig,
    phase: Phase,
    epoch: usize,
    lr: f64,
) -> Result<EpochStats> {
    if items.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (lambda, policy) = match phase {
        Phase::Pipeline => (cfg.effective_lambda(), cfg.variant.policy()),
        Phase::Initial => (0.0, None),
    };
    let sup_mask = (phase == Phase::Initial && cfg.initial_spec_augment).then(SpecAugmentParams::default);
    let mut order: Vec<&TrainItem> = items.iter().collect();
    order.shuffle(&mut RngStream::keyed(
        cfg.seed,
        &[hash_str("shuffle"), phase.tag(), epoch as u64],
    ));

    let mut batches = Vec::new();
    for chunk in order.chunks(cfg.batch_size) {
        let sup_x: Vec<Cow<Spectrogram>> = chunk
            .iter()
            .map(|it| match &sup_mask {
                Some(p) => {
                    let mut rng = RngStream::keyed(cfg.seed, &[hash_str("sup-mask"), epoch as u64, it.index as u64]);
                    Cow::Owned(augment::spec_augment(&prepared.features[it.index], p, &mut rng))
                }
                None => Cow::Borrowed(&prepared.features[it.index]),
            })
            .collect();
        let cr_items: Vec<&TrainItem> = match policy {
            Some(_) if lambda > 0.0 => chunk.iter().copied().filter(|it| it.pseudo).collect(),
            _ => Vec::new(),
        };
        let cr_x = cr_items
            .iter()
            .map(|it| {
                let mut rng = RngStream::keyed(cfg.seed, &[hash_str("consistency"), epoch as u64, it.index as u64]);
                augmented(prepared, it.index, policy.expect("policy checked above"), &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let sup_pairs: Vec<(&Spectrogram, &TokenSequence)> =
            sup_x.iter().zip(chunk).map(|(x, it)| (x.as_ref(), &it.label)).collect();
        let cr_pairs: Vec<(&Spectrogram, &TokenSequence)> =
            cr_x.iter().zip(&cr_items).map(|(x, it)| (x, &it.label)).collect();

        let (stat, grads) = {
            let mut g = Graph::new(&model.params);
            let loss = batch_objective(&mut g, model, &sup_pairs, &cr_pairs, lambda)?;
            let total = g.scalar(loss.total);
            if !total.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss {total} at epoch {epoch}, batch {}",
                    batches.len()
                )));
            }
            let stat = BatchStat {
                sup: g.scalar(loss.sup),
                sup_tokens: token_count(chunk),
                cr: loss.cr.map(|c| g.scalar(c)),
                cr_tokens: token_count(&cr_items),
            };
            (stat, g.backward(loss.total)?)
        };
        let grads = clip_global_norm(grads, cfg.clip_norm);
        adam_step(&mut model.params, &grads, adam, lr, &AdamConfig::default())?;
        batches.push(stat);
    }

    let sup_tokens: usize = batches.iter().map(|b| b.sup_tokens).sum();
    let loss_sup = batches.iter().map(|b| b.sup * b.sup_tokens as f64).sum::<f64>() / sup_tokens as f64;
    let cr_tokens: usize = batches.iter().map(|b| b.cr_tokens).sum();
    let loss_cr = (cr_tokens > 0).then(|| {
        batches
            .iter()
            .filter_map(|b| b.cr.map(|c| c * b.cr_tokens as f64))
            .sum::<f64>()
            / cr_tokens as f64
    });
    Ok(EpochStats {
        epoch,
        lr,
        loss_sup,
        loss_cr,
        batches,
    })
}

/// Test-set CER in percent together with the decoded hypotheses.
pub fn evaluate_cer(
    model: &Seq2Seq,
    prepared: &Prepared,
    indices: &[usize],
    cfg: &PipelineConfig,
) -> Result<(f64, Vec<Hypothesis>)> {
    let hyps = decode_many(model, &prepared.feature_refs(indices), &cfg.beam, cfg.workers)?;
    let pairs: Vec<_> = indices
        .iter()
        .zip(&hyps)
        .map(|(&i, h)| EvalPair::new(prepared.labels[i].0.clone(), h.tokens.0.clone()))
        .collect();
    Ok((cer(&pairs)?, hyps))
}

#[derive(Clone, Debug)]
pub struct InitialOutcome {
    pub model: Seq2Seq,
    pub epochs: Vec<EpochStats>,
    pub test_cer: f64,
}

/// Supervised training on the initial split, with SpecAugment on the
/// supervised inputs when configured.
pub fn train_initial(prepared: &Prepared, cfg: &PipelineConfig) -> Result<InitialOutcome> {
    cfg.validate()?;
    if prepared.initial.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut model = Seq2Seq::new(cfg.model.clone(), prepared.corpus.vocabulary().clone(), cfg.seed)?;
    let mut adam = AdamState::new(&model.params);
    let items: Vec<TrainItem> = prepared
        .initial
        .iter()
        .map(|&i| TrainItem {
            index: i,
            label: prepared.labels[i].clone(),
            pseudo: false,
        })
        .collect();
    let mut epochs = Vec::with_capacity(cfg.epochs_initial);
    for e in 0..cfg.epochs_initial {
        let lr = lr_at_epoch(cfg.lr_initial, e as u32, cfg.lr_decay);
        epochs.push(train_epoch(
            &mut model,
            &mut adam,
            &items,
            prepared,
            cfg,
            Phase::Initial,
            e,
            lr,
        )?);
    }
    let (test_cer, _) = evaluate_cer(&model, prepared, &prepared.test, cfg)?;
    Ok(InitialOutcome {
        model,
        epochs,
        test_cer,
    })
}
