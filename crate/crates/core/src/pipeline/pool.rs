use std::cmp::Ordering;

use super::config::UncertaintyMetric;
use super::data::Prepared;
use crate::corpus::{oracle_annotate, BudgetLedger};
use crate::decoder::{decode_many, BeamConfig, Hypothesis};
use crate::error::{Error, Result};
use crate::metrics::{cer, EvalPair};
use crate::model::{Seq2Seq, TokenId, TokenSequence};
use crate::rng::{hash_str, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    /// Not selected for annotation; a pseudo-label candidate.
    Unlabeled,
    Hls(String),
    Pls {
        pseudo: TokenSequence,
        refreshed_at: usize,
    },
    /// Removed from training by the preliminary filter.
    Filtered,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolRecord {
    pub id: String,
    /// Position in `corpus.utterances`.
    pub index: usize,
    pub samples: usize,
    pub score: f64,
    pub status: Status,
}

/// Utterance id with a token sequence.
pub type Labeled = (String, Vec<TokenId>);

#[derive(Clone, Debug, PartialEq)]
pub struct PoolState {
    pub records: Vec<PoolRecord>,
    pub ledger: BudgetLedger,
}

impl PoolState {
    pub fn hls_samples(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.status, Status::Hls(_)))
            .map(|r| r.samples)
            .sum()
    }

    pub fn count(&self, pred: impl Fn(&Status) -> bool) -> usize {
        self.records.iter().filter(|r| pred(&r.status)).count()
    }

    pub fn n_hls(&self) -> usize {
        self.count(|s| matches!(s, Status::Hls(_)))
    }

    pub fn n_pls(&self) -> usize {
        self.count(|s| matches!(s, Status::Pls { .. }))
    }

    pub fn n_filtered(&self) -> usize {
        self.count(|s| matches!(s, Status::Filtered))
    }

    /// `(id, pseudo tokens)` and `(id, true tokens)` of every PLS record.
    pub fn pseudo_and_truth(&self, prepared: &Prepared) -> (Vec<Labeled>, Vec<Labeled>) {
        self.records
            .iter()
            .filter_map(|r| match &r.status {
                Status::Pls { pseudo, .. } => Some((
                    (r.id.clone(), pseudo.0.clone()),
                    (r.id.clone(), prepared.labels[r.index].0.clone()),
                )),
                _ => None,
            })
            .unzip()
    }

    /// Drops every pseudo-label candidate.
    pub fn clear_pls(&mut self) {
        for r in &mut self.records {
            if matches!(r.status, Status::Unlabeled | Status::Pls { .. }) {
                r.status = Status::Filtered;
            }
        }
    }
}

/// Pool scores plus the beam hypotheses when the metric decoded them.
#[derive(Clone, Debug)]
pub struct Scored {
    pub scores: Vec<f64>,
    pub hypotheses: Option<Vec<Hypothesis>>,
}

/// Uncertainty per pool utterance; lower means more uncertain. Oracle
/// metrics are negated so the same ascending order applies.
pub fn score_pool_detailed(
    model: &Seq2Seq,
    prepared: &Prepared,
    metric: UncertaintyMetric,
    beam: &BeamConfig,
    workers: usize,
    seed: u64,
) -> Result<Scored> {
    let feats = prepared.feature_refs(&prepared.pool);
    Ok(match metric {
        UncertaintyMetric::Pprob => {
            let hyps = decode_many(model, &feats, beam, workers)?;
            Scored {
                scores: hyps.iter().map(|h| h.score).collect(),
                hypotheses: Some(hyps),
            }
        }
        UncertaintyMetric::OracleCer => {
            let hyps = decode_many(model, &feats, beam, workers)?;
            let scores = prepared
                .pool
                .iter()
                .zip(&hyps)
                .map(|(&i, h)| {
                    let pair = EvalPair::new(prepared.labels[i].0.clone(), h.tokens.0.clone());
                    cer(&[pair]).map(|c| -c)
                })
                .collect::<Result<Vec<_>>>()?;
            Scored {
                scores,
                hypotheses: Some(hyps),
            }
        }
        UncertaintyMetric::OracleLoss => {
            let eos = model.vocab.eos();
            let scores = prepared
                .pool
                .iter()
                .map(|&i| {
                    let y = &prepared.labels[i];
                    let post = model.posteriors(&prepared.features[i], y)?;
                    let nll: f64 =
                        y.0.iter()
                            .chain(std::iter::once(&eos))
                            .enumerate()
                            .map(|(l, &t)| -post.row(l)[t])
                            .sum();
                    Ok(-nll / (y.len() + 1) as f64)
                })
                .collect::<Result<Vec<_>>>()?;
            Scored {
                scores,
                hypotheses: None,
            }
        }
        UncertaintyMetric::Random => {
            let scores = prepared
                .pool
                .iter()
                .map(|&i| RngStream::keyed(seed, &[hash_str("random-score"), i as u64]).uniform())
                .collect();
            Scored {
                scores,
                hypotheses: None,
            }
        }
    })
}

pub fn score_pool(
    model: &Seq2Seq,
    prepared: &Prepared,
    metric: UncertaintyMetric,
    beam: &BeamConfig,
    workers: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(score_pool_detailed(model, prepared, metric, beam, workers, seed)?.scores)
}

/// Positions sorted by ascending score, ties by id.
fn ascending(scores: &[f64], ids: &[&str]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a].cmp(ids[b]))
    });
    order
}

/// Annotates the most uncertain pool utterances while the cumulative
/// duration stays within `budget_fraction` of the pool; selection stops at
/// the first utterance that no longer fits.
pub fn select_hls(prepared: &Prepared, scores: &[f64], budget_fraction: f64) -> Result<PoolState> {
    if scores.len() != prepared.pool.len() {
        return Err(Error::Shape(format!(
            "{} scores for a pool of {}",
            scores.len(),
            prepared.pool.len()
        )));
    }
    let mut records: Vec<PoolRecord> = prepared
        .pool
        .iter()
        .zip(scores)
        .map(|(&i, &score)| {
            let u = prepared.utterance(i);
            PoolRecord {
                id: u.id.clone(),
                index: i,
                samples: u.samples(),
                score,
                status: Status::Unlabeled,
            }
        })
        .collect();
    let total: usize = records.iter().map(|r| r.samples).sum();
    let mut ledger = BudgetLedger::from_fraction(budget_fraction, total)?;
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let order = ascending(scores, &ids);
    for pos in order {
        if !ledger.can_afford(records[pos].samples) {
            break;
        }
        let transcript = oracle_annotate(prepared.corpus, &records[pos].id, &mut ledger)?;
        records[pos].status = Status::Hls(transcript);
    }
    Ok(PoolState { records, ledger })
}

/// Splits positions into `k` equal subsets after sorting by ascending
/// score; the first subset is the most uncertain. Remainders go to the
/// earliest subsets.
pub fn partition_subsets(scores: &[f64], ids: &[&str], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} samples into {k} subsets",
            scores.len()
        )));
    }
    if ids.len() != scores.len() {
        return Err(Error::Shape("one id per score".into()));
    }
    let order = ascending(scores, ids);
    let base = scores.len() / k;
    let extra = scores.len() % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for s in 0..k {
        let size = base + usize::from(s < extra);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(out)
}

/// Marks pseudo-label candidates whose pprob is below `tau` as filtered and
/// returns how many were removed. `pprob` is aligned with the records.
pub fn preliminary_filter(state: &mut PoolState, pprob: &[f64], tau: f64) -> Result<usize> {
    if pprob.len() != state.records.len() {
        return Err(Error::Shape("one pprob per pool record".into()));
    }
    let mut removed = 0;
    for (r, &p) in state.records.iter_mut().zip(pprob) {
        if matches!(r.status, Status::Unlabeled | Status::Pls { .. }) && p < tau {
            r.status = Status::Filtered;
            removed += 1;
        }
    }
    Ok(removed)
}

/// Re-decodes every pseudo-label candidate with a frozen model.
pub fn refresh_pseudo_labels(
    model: &Seq2Seq,
    state: &mut PoolState,
    prepared: &Prepared,
    epoch: usize,
    beam: &BeamConfig,
    workers: usize,
) -> Result<()> {
    let targets: Vec<usize> = state
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.status, Status::Unlabeled | Status::Pls { .. }))
        .map(|(p, _)| p)
        .collect();
    let feats: Vec<_> = targets
        .iter()
        .map(|&p| &prepared.features[state.records[p].index])
        .collect();
    let hyps = decode_many(model, &feats, beam, workers)?;
    for (p, h) in targets.into_iter().zip(hyps) {
        state.records[p].status = Status::Pls {
            pseudo: h.tokens,
            refreshed_at: epoch,
        };
    }
    Ok(())
}

/// Installs hypotheses decoded by the same model snapshot, aligned with the
/// records, instead of decoding again.
pub fn assign_pseudo_labels(state: &mut PoolState, hyps: &[Hypothesis], epoch: usize) -> Result<()> {
    if hyps.len() != state.records.len() {
        return Err(Error::Shape("one hypothesis per pool record".into()));
    }
    for (r, h) in state.records.iter_mut().zip(hyps) {
        if matches!(r.status, Status::Unlabeled | Status::Pls { .. }) {
            r.status = Status::Pls {
                pseudo: h.tokens.clone(),
                refreshed_at: epoch,
            };
        }
    }
    Ok(())
}
