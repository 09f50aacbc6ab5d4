use super::*;
use crate::autodiff::{AdamState, Tensor};
use crate::corpus::{generate, Corpus, CorpusConfig, SplitSizes};
use crate::decoder::BeamConfig;
use crate::model::{supervised_loss, ModelConfig};
use proptest::prelude::*;

fn tiny_corpus(seed: u64, pool: usize, min_len: usize, max_len: usize) -> Corpus {
    generate(&CorpusConfig {
        seed,
        sizes: SplitSizes {
            initial: 6,
            unlabeled: pool,
            test: 4,
        },
        min_len,
        max_len,
        heterogeneous: false,
    })
    .unwrap()
}

fn tiny_cfg(variant: Variant) -> PipelineConfig {
    PipelineConfig {
        variant,
        budget_fraction: 0.3,
        epochs_initial: 2,
        epochs_pipeline: 3,
        batch_size: 4,
        beam: BeamConfig {
            width: 2,
            max_len: Some(5),
            ..BeamConfig::default()
        },
        model: ModelConfig {
            hidden_size: 6,
            embedding_size: 4,
            attention_dim: 6,
            location_channels: 2,
            location_kernel: 3,
            ..ModelConfig::default()
        },
        ..PipelineConfig::default()
    }
}

fn record_ids(state: &PoolState, pred: impl Fn(&Status) -> bool) -> Vec<String> {
    state
        .records
        .iter()
        .filter(|r| pred(&r.status))
        .map(|r| r.id.clone())
        .collect()
}

#[test]
fn variant_names_round_trip() {
    for name in [
        "initial_only",
        "hls",
        "pls",
        "pls_filtered",
        "cr-s",
        "cr-p",
        "cr-a",
        "cr-sa",
        "cr_filtered-sa",
        "full_budget",
    ] {
        let v: Variant = name.parse().unwrap();
        assert_eq!(v.to_string(), name);
    }
    assert_eq!(
        "cr-sa".parse::<Variant>().unwrap(),
        Variant::Cr(crate::augment::AugmentationPolicy::spec_augment())
    );
    assert!("cr-x".parse::<Variant>().is_err());
    assert!("bogus".parse::<Variant>().is_err());
}

#[test]
fn config_validation_and_overrides() {
    let mut c = PipelineConfig::default();
    assert!(c.validate().is_ok());
    c.delta = 0;
    assert!(c.validate().is_err());
    c.delta = 1;
    c.budget_fraction = 1.5;
    assert!(c.validate().is_err());
    let full = PipelineConfig {
        variant: Variant::FullBudget,
        ..PipelineConfig::default()
    };
    assert_eq!(full.effective_budget(), 1.0);
    assert_eq!(full.effective_lambda(), 0.0);
    let pls = PipelineConfig {
        variant: Variant::Pls,
        ..PipelineConfig::default()
    };
    assert_eq!(pls.effective_lambda(), 0.0);
    assert!(pls.uses_pls());
}

#[test]
fn refresh_schedule() {
    let c = PipelineConfig {
        delta: 5,
        epochs_pipeline: 15,
        ..PipelineConfig::default()
    };
    assert_eq!(c.refresh_epochs(), vec![0, 5, 10]);
    let c = PipelineConfig {
        delta: 1,
        epochs_pipeline: 4,
        ..PipelineConfig::default()
    };
    assert_eq!(c.refresh_epochs(), vec![0, 1, 2, 3]);
}

#[test]
fn select_takes_most_uncertain_within_budget() {
    let corpus = tiny_corpus(1, 3, 3, 3);
    let p = Prepared::new(&corpus, &Default::default()).unwrap();
    let scores = [-0.9, -0.1, -0.5];
    let state = select_hls(&p, &scores, 1.0 / 3.0).unwrap();
    assert_eq!(record_ids(&state, |s| matches!(s, Status::Hls(_))), vec!["pool-0000"]);
    assert_eq!(state.ledger.spent_samples, state.hls_samples());

    let none = select_hls(&p, &scores, 0.0).unwrap();
    assert_eq!(none.n_hls(), 0);
    assert_eq!(none.count(|s| matches!(s, Status::Unlabeled)), 3);
    let all = select_hls(&p, &scores, 1.0).unwrap();
    assert_eq!(all.n_hls(), 3);
    for r in &all.records {
        assert_eq!(r.status, Status::Hls(corpus.get(&r.id).unwrap().transcript.clone()));
    }
    // ties break by id
    let tied = select_hls(&p, &[0.0, 0.0, 0.0], 2.0 / 3.0).unwrap();
    assert_eq!(
        record_ids(&tied, |s| matches!(s, Status::Hls(_))),
        vec!["pool-0000", "pool-0001"]
    );
    assert!(select_hls(&p, &[0.0], 0.5).is_err());
}

#[test]
fn partition_examples() {
    let ids: Vec<String> = (0..11).map(|i| format!("u{i:02}")).collect();
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let scores: Vec<f64> = (0..11).map(|i| -((i * 7 % 11) as f64)).collect();
    let one = partition_subsets(&scores, &id_refs, 1).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].len(), 11);
    let five = partition_subsets(&scores[..10], &id_refs[..10], 5).unwrap();
    assert!(five.iter().all(|s| s.len() == 2));
    let flat: Vec<usize> = five.concat();
    for w in flat.windows(2) {
        assert!(scores[w[0]] <= scores[w[1]]);
    }
    let mut sorted = flat.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    let uneven = partition_subsets(&scores, &id_refs, 5).unwrap();
    assert_eq!(uneven.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2, 2, 2]);
    assert!(partition_subsets(&scores[..3], &id_refs[..3], 4).is_err());
    assert!(partition_subsets(&scores, &id_refs, 0).is_err());
}

#[test]
fn filter_examples() {
    let corpus = tiny_corpus(2, 3, 3, 3);
    let p = Prepared::new(&corpus, &Default::default()).unwrap();
    let base = select_hls(&p, &[-0.9, -0.3, -0.1], 1.0 / 3.0).unwrap();

    let mut s = base.clone();
    assert_eq!(
        preliminary_filter(&mut s, &[-0.9, -0.3, -0.1], f64::NEG_INFINITY).unwrap(),
        0
    );
    assert_eq!(s, base);

    let mut s = base.clone();
    assert_eq!(preliminary_filter(&mut s, &[-0.9, -0.6, -0.3], -0.5).unwrap(), 1);
    assert_eq!(record_ids(&s, |st| matches!(st, Status::Filtered)), vec!["pool-0001"]);
    // the annotated record is untouched even though its pprob is low
    assert!(matches!(s.records[0].status, Status::Hls(_)));

    let mut s = base.clone();
    assert_eq!(preliminary_filter(&mut s, &[-0.9, -0.3, -0.1], 0.0).unwrap(), 2);
    assert_eq!(s.count(|st| matches!(st, Status::Unlabeled)), 0);
}

#[test]
fn scores_and_refresh() {
    let corpus = tiny_corpus(3, 5, 3, 4);
    let cfg = tiny_cfg(Variant::Pls);
    let p = Prepared::new(&corpus, &cfg.frontend).unwrap();
    let model = crate::model::Seq2Seq::new(cfg.model.clone(), corpus.vocabulary().clone(), 0).unwrap();
    let pprob = score_pool(&model, &p, UncertaintyMetric::Pprob, &cfg.beam, 1, 0).unwrap();
    assert!(pprob.iter().all(|&s| s <= 0.0));
    let r1 = score_pool(&model, &p, UncertaintyMetric::Random, &cfg.beam, 1, 7).unwrap();
    let r2 = score_pool(&model, &p, UncertaintyMetric::Random, &cfg.beam, 1, 7).unwrap();
    assert_eq!(r1, r2);
    let loss = score_pool(&model, &p, UncertaintyMetric::OracleLoss, &cfg.beam, 1, 0).unwrap();
    assert!(loss.iter().all(|&s| s < 0.0));
    let c = score_pool(&model, &p, UncertaintyMetric::OracleCer, &cfg.beam, 1, 0).unwrap();
    assert!(c.iter().all(|&s| s <= 0.0));

    let mut state = select_hls(&p, &pprob, 0.2).unwrap();
    refresh_pseudo_labels(&model, &mut state, &p, 0, &cfg.beam, 1).unwrap();
    assert_eq!(state.n_pls() + state.n_hls(), 5);
    let again = {
        let mut s = state.clone();
        refresh_pseudo_labels(&model, &mut s, &p, 0, &cfg.beam, 2).unwrap();
        s
    };
    assert_eq!(again, state);
    let detailed = score_pool_detailed(&model, &p, UncertaintyMetric::Pprob, &cfg.beam, 1, 0).unwrap();
    let mut via_scores = select_hls(&p, &pprob, 0.2).unwrap();
    assign_pseudo_labels(&mut via_scores, detailed.hypotheses.as_ref().unwrap(), 0).unwrap();
    assert_eq!(via_scores, state);
}

#[test]
fn epoch_loss_matches_recomputation() {
    let corpus = tiny_corpus(4, 4, 3, 4);
    let cfg = PipelineConfig {
        batch_size: 64,
        ..tiny_cfg(Variant::Hls)
    };
    let p = Prepared::new(&corpus, &cfg.frontend).unwrap();
    let mut model = crate::model::Seq2Seq::new(cfg.model.clone(), corpus.vocabulary().clone(), 1).unwrap();
    let items: Vec<TrainItem> = p
        .initial
        .iter()
        .map(|&i| TrainItem {
            index: i,
            label: p.labels[i].clone(),
            pseudo: false,
        })
        .collect();
    let posts: Vec<_> = items
        .iter()
        .map(|it| model.posteriors(&p.features[it.index], &it.label).unwrap())
        .collect();
    let labels: Vec<_> = items.iter().map(|it| it.label.clone()).collect();
    let expect = supervised_loss(&posts, &labels, model.vocab.eos()).unwrap();
    let before = model.params.clone();
    let mut adam = AdamState::new(&model.params);
    let stats = train_epoch(&mut model, &mut adam, &items, &p, &cfg, Phase::Pipeline, 0, 1e-3).unwrap();
    assert_eq!(stats.batches.len(), 1);
    assert!((stats.loss_sup - expect).abs() < 1e-9);
    assert!(stats.loss_cr.is_none());
    assert_ne!(model.params, before);

    // several batches: the epoch value is the token-weighted batch mean
    let small = PipelineConfig { batch_size: 2, ..cfg };
    let stats = train_epoch(&mut model, &mut adam, &items, &p, &small, Phase::Pipeline, 1, 1e-3).unwrap();
    assert_eq!(stats.batches.len(), 3);
    let num: f64 = stats.batches.iter().map(|b| b.sup * b.sup_tokens as f64).sum();
    let den: usize = stats.batches.iter().map(|b| b.sup_tokens).sum();
    assert_eq!(den, labels.iter().map(|l| l.len() + 1).sum::<usize>());
    assert!((stats.loss_sup - num / den as f64).abs() < 1e-12);
}

#[test]
fn non_finite_parameters_abort_training() {
    let corpus = tiny_corpus(5, 3, 3, 3);
    let cfg = tiny_cfg(Variant::Hls);
    let p = Prepared::new(&corpus, &cfg.frontend).unwrap();
    let mut model = crate::model::Seq2Seq::new(cfg.model.clone(), corpus.vocabulary().clone(), 1).unwrap();
    let id = model.params.id("out.b").unwrap();
    let shape = model.params.get(id).shape().to_vec();
    let n = model.params.get(id).len();
    *model.params.get_mut(id) = Tensor::new(shape, vec![f64::NAN; n]).unwrap();
    let items = vec![TrainItem {
        index: p.initial[0],
        label: p.labels[p.initial[0]].clone(),
        pseudo: false,
    }];
    let mut adam = AdamState::new(&model.params);
    let err = train_epoch(&mut model, &mut adam, &items, &p, &cfg, Phase::Pipeline, 0, 1e-3).unwrap_err();
    assert!(matches!(err, crate::Error::Diverged(_)), "{err}");
}

#[test]
fn initial_training_is_deterministic_and_zero_epochs_is_identity() {
    let corpus = tiny_corpus(6, 3, 3, 4);
    let cfg = tiny_cfg(Variant::InitialOnly);
    let p = Prepared::new(&corpus, &cfg.frontend).unwrap();
    let a = train_initial(&p, &cfg).unwrap();
    let b = train_initial(&p, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.epochs, b.epochs);
    let zero = train_initial(
        &p,
        &PipelineConfig {
            epochs_initial: 0,
            ..cfg.clone()
        },
    )
    .unwrap();
    let init = crate::model::Seq2Seq::new(cfg.model.clone(), corpus.vocabulary().clone(), cfg.seed).unwrap();
    assert_eq!(zero.model, init);
    assert!(zero.epochs.is_empty());
}

#[test]
fn initial_training_reduces_loss() {
    let corpus = tiny_corpus(7, 3, 3, 4);
    let cfg = PipelineConfig {
        epochs_initial: 8,
        initial_spec_augment: false,
        lr_initial: 0.01,
        ..tiny_cfg(Variant::InitialOnly)
    };
    let p = Prepared::new(&corpus, &cfg.frontend).unwrap();
    let out = train_initial(&p, &cfg).unwrap();
    assert!(out.epochs.last().unwrap().loss_sup < out.epochs[0].loss_sup);
}

#[test]
fn hls_equals_cr_with_zero_lambda_and_no_pseudo_labels() {
    let corpus = tiny_corpus(8, 6, 3, 4);
    let hls = tiny_cfg(Variant::Hls);
    let cr = PipelineConfig {
        variant: "cr-sa".parse().unwrap(),
        lambda: 0.0,
        force_empty_pls: true,
        ..hls.clone()
    };
    let a = run_pipeline(&hls, &corpus).unwrap();
    let b = run_pipeline(&cr, &corpus).unwrap();
    assert_eq!(a.report.unlabeled_rows(), b.report.unlabeled_rows());
    assert_eq!(a.model, b.model);
    assert_eq!(a.report.summary.final_cer, b.report.summary.final_cer);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let corpus = tiny_corpus(9, 6, 3, 4);
    let cfg = tiny_cfg("cr-sa".parse().unwrap());
    let a = run_pipeline(&cfg, &corpus).unwrap();
    let b = run_pipeline(&cfg, &corpus).unwrap();
    assert_eq!(a.report.to_csv().unwrap(), b.report.to_csv().unwrap());
    assert_eq!(a.report.rows.len(), 3);
    assert!(a.report.rows.iter().all(|r| r.p_cer.is_some() && r.loss_cr.is_some()));
    let pool = a.pool.unwrap();
    assert!(pool.hls_samples() <= pool.ledger.budget_samples);
}

#[test]
fn full_budget_and_initial_only_reports() {
    let corpus = tiny_corpus(10, 4, 3, 4);
    let full = run_pipeline(&tiny_cfg(Variant::FullBudget), &corpus).unwrap();
    let pool = full.pool.as_ref().unwrap();
    assert_eq!(pool.n_hls(), 4);
    assert!(full.report.rows.iter().all(|r| r.p_cer.is_none()));
    let csv = String::from_utf8(full.report.to_csv().unwrap()).unwrap();
    assert!(csv.starts_with(REPORT_HEADER));
    assert!(csv.lines().nth(1).unwrap().ends_with(','));

    let init = run_pipeline(&tiny_cfg(Variant::InitialOnly), &corpus).unwrap();
    assert!(init.pool.is_none());
    assert_eq!(init.report.rows.len(), 2);
    assert_eq!(init.report.rows[1].test_cer, Some(init.report.summary.final_cer));
}

#[test]
fn pls_uses_pseudo_labels_without_consistency() {
    let corpus = tiny_corpus(11, 6, 3, 4);
    let out = run_pipeline(&tiny_cfg(Variant::Pls), &corpus).unwrap();
    assert!(out.report.rows.iter().all(|r| r.loss_cr.is_none() && r.p_cer.is_some()));
    let pool = out.pool.unwrap();
    for r in &pool.records {
        if let Status::Pls { refreshed_at, .. } = r.status {
            assert_eq!(refreshed_at, 2);
        }
    }
}

#[test]
fn filtering_everything_warns_and_trains_on_labels() {
    let corpus = tiny_corpus(12, 6, 3, 4);
    let cfg = PipelineConfig {
        tau: 0.0,
        ..tiny_cfg("cr_filtered-sa".parse().unwrap())
    };
    let out = run_pipeline(&cfg, &corpus).unwrap();
    assert_eq!(out.warnings.len(), 1);
    assert!(out.report.rows.iter().all(|r| r.p_cer.is_none() && r.loss_cr.is_none()));
}

#[test]
fn subset_study_trains_requested_quintiles() {
    let corpus = tiny_corpus(13, 10, 3, 4);
    let cfg = tiny_cfg(Variant::Hls);
    let p = Prepared::new(&corpus, &cfg.frontend).unwrap();
    let init = train_initial(&p, &cfg).unwrap();
    let res = run_subset_study(&cfg, &p, &init, 5, &[0, 4]).unwrap();
    assert_eq!(res.len(), 2);
    assert!(res.iter().all(|r| r.ids.len() == 2 && r.rows.len() == 3));
    assert!(run_subset_study(&cfg, &p, &init, 5, &[5]).is_err());
}

#[test]
fn pivot_and_median() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
    assert_eq!(median(&[4.0, 1.0]), Some(2.5));
    assert_eq!(median(&[]), None);
    let mut rows = Vec::new();
    for (b, v, cer) in [
        (0.1, "hls", 5.0),
        (0.1, "pls", 6.0),
        (0.1, "cr-sa", 4.0),
        (0.3, "hls", 3.0),
        (0.3, "pls", 4.0),
        (0.3, "cr-sa", 2.0),
    ] {
        rows.push(SummaryRow {
            variant: v.into(),
            budget_fraction: b,
            seed: 0,
            final_cer: cer,
        });
    }
    let t = pivot_summaries(&rows);
    assert_eq!((t.budgets.len(), t.variants.len()), (2, 3));
    assert_eq!(t.get(0.3, "cr-sa"), Some(2.0));
    for (seed, cer) in [(1, 7.0), (2, 1.0)] {
        rows.push(SummaryRow {
            variant: "hls".into(),
            budget_fraction: 0.1,
            seed,
            final_cer: cer,
        });
    }
    rows.push(SummaryRow {
        variant: "full_budget".into(),
        budget_fraction: 1.0,
        seed: 0,
        final_cer: 1.0,
    });
    let t = pivot_summaries(&rows);
    assert_eq!(t.get(0.1, "hls"), Some(5.0));
    assert_eq!(t.get(0.1, "full_budget"), None);
    let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "budget_fraction,hls,pls,cr-sa,full_budget");
    assert_eq!(csv.lines().nth(1).unwrap(), "0.1,5,6,4,");
}

#[test]
fn report_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = tiny_corpus(14, 4, 3, 3);
    let cfg = tiny_cfg(Variant::Hls);
    let out = run_pipeline(&cfg, &corpus).unwrap();
    out.write_to(dir.path(), &cfg).unwrap();
    assert_eq!(read_report(&dir.path().join("report.csv")).unwrap(), out.report.rows);
    assert_eq!(
        read_summary(&dir.path().join("summary.csv")).unwrap(),
        vec![out.report.summary.clone()]
    );
    let back: PipelineConfig =
        toml::from_str(&std::fs::read_to_string(dir.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let m = crate::model::Seq2Seq::load(&dir.path().join("model.ckpt")).unwrap();
    assert_eq!(m, out.model);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn budget_is_never_exceeded(seed in 0u64..1000, fraction in 0.0f64..=1.0, scores in prop::collection::vec(-5.0f64..0.0, 8)) {
        let corpus = tiny_corpus(seed, 8, 3, 10);
        let p = Prepared::new(&corpus, &Default::default()).unwrap();
        let state = select_hls(&p, &scores, fraction).unwrap();
        let total: usize = state.records.iter().map(|r| r.samples).sum();
        prop_assert!(state.hls_samples() as f64 <= fraction * total as f64 + 1e-6);
        prop_assert_eq!(state.hls_samples(), state.ledger.spent_samples);
        prop_assert_eq!(state.n_hls() + state.count(|s| matches!(s, Status::Unlabeled)), 8);
    }
}
