use std::fs;
use std::path::Path;

use super::config::UncertaintyMetric;
use super::config::{PipelineConfig, Variant};
use super::data::{Prepared, TrainItem};
use super::pool::{
    assign_pseudo_labels, partition_subsets, preliminary_filter, refresh_pseudo_labels, score_pool,
    score_pool_detailed, select_hls, PoolState, Status,
};
use super::report::{EpochRow, SummaryRow, TrainingReport};
use super::train::{evaluate_cer, train_epoch, train_initial, EpochStats, InitialOutcome, Phase};
use crate::autodiff::{lr_at_epoch, AdamState};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::p_cer;
use crate::model::Seq2Seq;

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub report: TrainingReport,
    pub model: Seq2Seq,
    pub pool: Option<PoolState>,
    pub warnings: Vec<String>,
}

impl PipelineOutcome {
    /// Writes `report.csv`, `summary.csv`, `model.ckpt` and the effective
    /// `config.toml` into `dir`.
    pub fn write_to(&self, dir: &Path, cfg: &PipelineConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        super::report::write_report(&dir.join("report.csv"), &self.report)?;
        super::report::write_summary(&dir.join("summary.csv"), std::slice::from_ref(&self.report.summary))?;
        self.model.save(&dir.join("model.ckpt"))?;
        let text = toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(dir.join("config.toml"), text)?;
        Ok(())
    }
}

fn row(cfg: &PipelineConfig, stats: &EpochStats, test_cer: Option<f64>, p_cer: Option<f64>) -> EpochRow {
    EpochRow {
        variant: cfg.variant.to_string(),
        budget_fraction: cfg.budget_fraction,
        seed: cfg.seed,
        epoch: stats.epoch,
        lr: Some(stats.lr),
        loss_sup: Some(stats.loss_sup),
        loss_cr: stats.loss_cr,
        test_cer,
        p_cer,
    }
}

fn summary(cfg: &PipelineConfig, final_cer: f64) -> SummaryRow {
    SummaryRow {
        variant: cfg.variant.to_string(),
        budget_fraction: cfg.budget_fraction,
        seed: cfg.seed,
        final_cer,
    }
}

/// Trains the initial model and runs the configured variant on top of it.
pub fn run_pipeline(cfg: &PipelineConfig, corpus: &Corpus) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let prepared = Prepared::new(corpus, &cfg.frontend)?;
    let initial = train_initial(&prepared, cfg)?;
    run_pipeline_from(cfg, &prepared, &initial)
}

fn labeled_items(prepared: &Prepared, pool: Option<&PoolState>) -> Vec<TrainItem> {
    let mut items: Vec<TrainItem> = prepared
        .initial
        .iter()
        .map(|&i| TrainItem {
            index: i,
            label: prepared.labels[i].clone(),
            pseudo: false,
        })
        .collect();
    if let Some(pool) = pool {
        for r in &pool.records {
            if let Status::Hls(t) = &r.status {
                items.push(TrainItem {
                    index: r.index,
                    label: prepared
                        .corpus
                        .vocabulary()
                        .encode(t)
                        .expect("annotated transcripts use the vocabulary"),
                    pseudo: false,
                });
            }
        }
    }
    items
}

/// Runs everything after the initial model: scoring, selection, optional
/// filtering and the pseudo-labeling training loop.
pub fn run_pipeline_from(
    cfg: &PipelineConfig,
    prepared: &Prepared,
    initial: &InitialOutcome,
) -> Result<PipelineOutcome> {
    cfg.validate()?;
    if cfg.variant == Variant::InitialOnly {
        let last = initial.epochs.len().saturating_sub(1);
        let rows = initial
            .epochs
            .iter()
            .map(|s| row(cfg, s, (s.epoch == last).then_some(initial.test_cer), None))
            .collect();
        return Ok(PipelineOutcome {
            report: TrainingReport {
                rows,
                summary: summary(cfg, initial.test_cer),
            },
            model: initial.model.clone(),
            pool: None,
            warnings: Vec::new(),
        });
    }

    let mut warnings = Vec::new();
    let scored = score_pool_detailed(&initial.model, prepared, cfg.metric, &cfg.beam, cfg.workers, cfg.seed)?;
    let mut pool = select_hls(prepared, &scored.scores, cfg.effective_budget())?;
    let uses_pls = cfg.uses_pls();
    if uses_pls && cfg.variant.filtered() {
        let pprob = if cfg.metric == UncertaintyMetric::Pprob {
            scored.scores.clone()
        } else {
            score_pool(
                &initial.model,
                prepared,
                UncertaintyMetric::Pprob,
                &cfg.beam,
                cfg.workers,
                cfg.seed,
            )?
        };
        preliminary_filter(&mut pool, &pprob, cfg.tau)?;
        if pool.count(|s| matches!(s, Status::Unlabeled)) == 0 {
            warnings.push(format!(
                "every pseudo-label candidate has pprob below tau = {}; training on labeled data only",
                cfg.tau
            ));
        }
    }
    let labeled = labeled_items(prepared, Some(&pool));

    let mut model = initial.model.clone();
    let mut adam = AdamState::new(&model.params);
    let mut rows = Vec::with_capacity(cfg.epochs_pipeline);
    let mut final_cer = initial.test_cer;
    for e in 0..cfg.epochs_pipeline {
        if uses_pls && cfg.is_refresh_epoch(e) {
            match (&scored.hypotheses, e) {
                (Some(h), 0) => assign_pseudo_labels(&mut pool, h, 0)?,
                _ => refresh_pseudo_labels(&model, &mut pool, prepared, e, &cfg.beam, cfg.workers)?,
            }
        }
        let mut items = labeled.clone();
        for r in &pool.records {
            if let Status::Pls { pseudo, .. } = &r.status {
                items.push(TrainItem {
                    index: r.index,
                    label: pseudo.clone(),
                    pseudo: true,
                });
            }
        }
        let lr = lr_at_epoch(cfg.lr_pipeline, e as u32, cfg.lr_decay);
        let stats = train_epoch(&mut model, &mut adam, &items, prepared, cfg, Phase::Pipeline, e, lr)?;
        let (test_cer, _) = evaluate_cer(&model, prepared, &prepared.test, cfg)?;
        let pcer = if pool.n_pls() > 0 {
            let (pseudo, truth) = pool.pseudo_and_truth(prepared);
            Some(p_cer(&pseudo, &truth)?)
        } else {
            None
        };
        final_cer = test_cer;
        rows.push(row(cfg, &stats, Some(test_cer), pcer));
    }
    Ok(PipelineOutcome {
        report: TrainingReport {
            rows,
            summary: summary(cfg, final_cer),
        },
        model,
        pool: Some(pool),
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct SubsetResult {
    /// Zero-based; subset 0 holds the most uncertain utterances.
    pub subset: usize,
    pub ids: Vec<String>,
    pub final_cer: f64,
    pub rows: Vec<EpochRow>,
}

/// Scores the pool with `cfg.metric`, splits it into `k` equal subsets and,
/// for each requested subset, fine-tunes the initial model on the initial
/// split plus that subset with true transcripts.
pub fn run_subset_study(
    cfg: &PipelineConfig,
    prepared: &Prepared,
    initial: &InitialOutcome,
    k: usize,
    subsets: &[usize],
) -> Result<Vec<SubsetResult>> {
    cfg.validate()?;
    let scores = score_pool(&initial.model, prepared, cfg.metric, &cfg.beam, cfg.workers, cfg.seed)?;
    let ids: Vec<&str> = prepared
        .pool
        .iter()
        .map(|&i| prepared.utterance(i).id.as_str())
        .collect();
    let parts = partition_subsets(&scores, &ids, k)?;
    let train_cfg = PipelineConfig {
        variant: Variant::Hls,
        ..cfg.clone()
    };
    let mut out = Vec::with_capacity(subsets.len());
    for &s in subsets {
        let part = parts
            .get(s)
            .ok_or_else(|| Error::InvalidArgument(format!("subset {s} of {k}")))?;
        let mut items = labeled_items(prepared, None);
        items.extend(part.iter().map(|&p| {
            let i = prepared.pool[p];
            TrainItem {
                index: i,
                label: prepared.labels[i].clone(),
                pseudo: false,
            }
        }));
        let mut model = initial.model.clone();
        let mut adam = AdamState::new(&model.params);
        let mut rows = Vec::new();
        let mut final_cer = initial.test_cer;
        for e in 0..cfg.epochs_pipeline {
            let lr = lr_at_epoch(cfg.lr_pipeline, e as u32, cfg.lr_decay);
            let stats = train_epoch(
                &mut model,
                &mut adam,
                &items,
                prepared,
                &train_cfg,
                Phase::Pipeline,
                e,
                lr,
            )?;
            // only the final model matters here
            let test_cer = if e + 1 == cfg.epochs_pipeline {
                let (c, _) = evaluate_cer(&model, prepared, &prepared.test, cfg)?;
                final_cer = c;
                Some(c)
            } else {
                None
            };
            rows.push(EpochRow {
                variant: format!("subset{}of{k}", s + 1),
                ..row(&train_cfg, &stats, test_cer, None)
            });
        }
        out.push(SubsetResult {
            subset: s,
            ids: part.iter().map(|&p| ids[p].to_string()).collect(),
            final_cer,
            rows,
        });
    }
    Ok(out)
}
