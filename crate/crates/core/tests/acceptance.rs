//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits non-zero if any fails. The expensive pipeline runs are shared between
//! the checks that need them.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use alcr::augment::{awgn, pitch, spec_augment, spec_augment_with_masks, speed, SpecAugmentParams};
use alcr::autodiff::{Graph, ParamStore};
use alcr::cli::{self, RunConfig};
use alcr::corpus::{generate, Corpus, CorpusConfig, SplitSizes};
use alcr::decoder::{length_penalty, search, BeamConfig, StepModel};
use alcr::dsp::{dominant_frequency, Spectrogram, Waveform};
use alcr::metrics::{cer, edit_distance, EvalPair};
use alcr::model::{batch_objective, ModelConfig, Seq2Seq, TokenId, TokenSequence, Vocabulary};
use alcr::pipeline::{
    median, run_pipeline_from, run_subset_study, train_initial, InitialOutcome, PipelineConfig, Prepared,
    TrainingReport, Variant,
};
use alcr::rng::{hash_str, RngStream};

const SEEDS: [u64; 3] = [0, 1, 2];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn report(id: usize, name: &str, elapsed: Duration, v: &Verdict) {
    println!(
        "{} [{id:>2}] {name}: {} ({:.1}s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64()
    );
}

// ── 1: gradients ─────────────────────────────────────────────────────────

fn rand_spec(seed: u64, frames: usize, bins: usize) -> Spectrogram {
    let mut r = RngStream::new(seed);
    let data = (0..frames * bins).map(|_| r.uniform() * 4.0 - 2.0).collect();
    Spectrogram::from_parts(data, frames, bins, 0.1, 4000)
}

fn gradient_check() -> Verdict {
    let cfg = ModelConfig {
        input_bins: 8,
        freq_pool: 2,
        hidden_size: 8,
        embedding_size: 4,
        attention_dim: 6,
        location_channels: 2,
        location_kernel: 3,
        ..ModelConfig::default()
    };
    // two characters plus SOS, EOS and PAD: five ids
    let vocab = Vocabulary::new(vec!['a', 'b']).unwrap();
    let m = Seq2Seq::new(cfg, vocab, 7).unwrap();
    let xs = [rand_spec(1, 6, 8), rand_spec(2, 4, 8)];
    let ys = [TokenSequence(vec![0, 1, 1]), TokenSequence(vec![1])];
    let mut rng = RngStream::new(3);
    let xa: Vec<Spectrogram> = xs
        .iter()
        .map(|x| {
            spec_augment(
                x,
                &SpecAugmentParams {
                    time_width: 2,
                    freq_width: 2,
                    time_masks: 1,
                    freq_masks: 1,
                },
                &mut rng,
            )
        })
        .collect();
    let eval = |params: &ParamStore| -> f64 {
        let mm = Seq2Seq::from_params(m.config.clone(), m.vocab.clone(), params.clone()).unwrap();
        let mut g = Graph::new(&mm.params);
        let sup: Vec<_> = xs.iter().zip(&ys).collect();
        let cr: Vec<_> = xa.iter().zip(&ys).collect();
        let l = batch_objective(&mut g, &mm, &sup, &cr, 1.0).unwrap();
        g.scalar(l.total)
    };
    let grads = {
        let mut g = Graph::new(&m.params);
        let sup: Vec<_> = xs.iter().zip(&ys).collect();
        let cr: Vec<_> = xa.iter().zip(&ys).collect();
        let l = batch_objective(&mut g, &m, &sup, &cr, 1.0).unwrap();
        g.backward(l.total).unwrap()
    };
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    let mut checked = 0;
    for id in m.params.ids() {
        for i in 0..m.params.get(id).len() {
            let mut p = m.params.clone();
            p.get_mut(id).data_mut()[i] += h;
            let up = eval(&p);
            p.get_mut(id).data_mut()[i] -= 2.0 * h;
            let down = eval(&p);
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.get(id).map_or(0.0, |t| t.data()[i]);
            // relative error, with an absolute floor for near-zero gradients
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            if rel > worst {
                worst = rel;
                worst_name = format!("{}[{i}]", m.params.name(id));
            }
            checked += 1;
        }
    }
    Verdict::new(
        worst < 1e-3,
        format!("{checked} parameter values, worst relative error {worst:.2e} at {worst_name}"),
    )
}

// ── 2: beam search against exhaustive search ────────────────────────────

/// Fixed random posterior for every prefix, `vocab - 1` content ids plus EOS.
struct TreeTable {
    vocab: usize,
    seed: u64,
}

impl TreeTable {
    fn row(&self, prefix: &[TokenId]) -> Vec<f64> {
        let mut keys = vec![hash_str("tree"), prefix.len() as u64];
        keys.extend(prefix.iter().map(|&t| t as u64));
        let mut r = RngStream::keyed(self.seed, &keys);
        let w: Vec<f64> = (0..self.vocab).map(|_| r.uniform() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| (x / s).ln()).collect()
    }
}

impl StepModel for TreeTable {
    type State = Vec<TokenId>;

    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn eos(&self) -> TokenId {
        self.vocab - 1
    }

    fn emits(&self, token: TokenId) -> bool {
        token < self.vocab - 1
    }

    fn frames(&self) -> usize {
        1
    }

    fn start(&mut self) -> (Vec<TokenId>, TokenId) {
        (Vec::new(), usize::MAX)
    }

    fn step(&mut self, state: &Vec<TokenId>, prev: TokenId) -> (Vec<TokenId>, Vec<f64>) {
        let mut next = state.clone();
        if prev != usize::MAX {
            next.push(prev);
        }
        let row = self.row(&next);
        (next, row)
    }
}

/// Best `(tokens, logp / lp)` over every sequence of at most `max_len`
/// content tokens followed by EOS.
fn exhaustive(m: &TreeTable, max_len: usize) -> (Vec<TokenId>, f64) {
    let eos = m.vocab - 1;
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut frontier = vec![(Vec::new(), 0.0)];
    for depth in 0..=max_len {
        let mut next = Vec::new();
        for (prefix, logp) in &frontier {
            let row = m.row(prefix);
            let score = (logp + row[eos]) / length_penalty(prefix.len());
            if score > best.1 {
                best = (prefix.clone(), score);
            }
            if depth < max_len {
                for (t, lp) in row.iter().enumerate().take(eos) {
                    let mut p = prefix.clone();
                    p.push(t);
                    next.push((p, logp + lp));
                }
            }
        }
        frontier = next;
    }
    best
}

fn beam_oracle() -> Verdict {
    let mut tables = 0;
    let mut mismatches = 0;
    for vocab in [2usize, 3] {
        for max_len in [3usize, 4] {
            for seed in 0..100u64 {
                let mut m = TreeTable {
                    vocab,
                    seed: seed * 31 + vocab as u64 * 7 + max_len as u64,
                };
                let (want, want_score) = exhaustive(&m, max_len);
                let cfg = BeamConfig {
                    width: vocab.pow(max_len as u32),
                    max_len: Some(max_len),
                    ..BeamConfig::default()
                };
                let got = search(&mut m, &cfg).unwrap();
                if got[0].tokens.0 != want || (got[0].score - want_score).abs() > 1e-12 {
                    mismatches += 1;
                }
                tables += 1;
            }
        }
    }
    Verdict::new(
        mismatches == 0,
        format!("{mismatches} mismatches over {tables} random tables"),
    )
}

// ── 3: length penalty ────────────────────────────────────────────────────

fn length_penalty_values() -> Verdict {
    let lp1 = length_penalty(1);
    let lp7 = length_penalty(7);
    let pass = lp1 == 1.0 && (lp7 - 2f64.powf(1.2)).abs() < 1e-12 && (lp7 - 2.2974).abs() < 1e-4;
    Verdict::new(pass, format!("lp(1) = {lp1}, lp(7) = {lp7:.12}"))
}

// ── 4: edit distance ─────────────────────────────────────────────────────

fn brute(a: &[u8], b: &[u8]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ar)), Some((y, br))) => {
            let sub = brute(ar, br) + usize::from(x != y);
            sub.min(brute(ar, b) + 1).min(brute(a, br) + 1)
        }
    }
}

fn edit_distance_oracle() -> Verdict {
    let mut all: Vec<Vec<u8>> = vec![Vec::new()];
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..6 {
        layer = layer
            .iter()
            .flat_map(|s| (b'a'..=b'c').map(move |c| [s.as_slice(), &[c]].concat()))
            .collect();
        all.extend(layer.iter().cloned());
    }
    let mut bad = 0usize;
    for a in &all {
        for b in &all {
            if edit_distance(a, b) != brute(a, b) {
                bad += 1;
            }
        }
    }
    let pairs = [EvalPair::from_text("ab", "ab"), EvalPair::from_text("cd", "ce")];
    let c = cer(&pairs).unwrap();
    Verdict::new(
        bad == 0 && c == 25.0,
        format!(
            "{} string pairs, {bad} disagreements; CER example = {c}",
            all.len() * all.len()
        ),
    )
}

// ── 5: augmentation invariants ───────────────────────────────────────────

fn sine(freq: f64, n: usize) -> Waveform {
    Waveform::new(
        (0..n)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 4000.0).sin())
            .collect(),
        4000,
    )
}

fn augmentation_invariants() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;

    let lengths_ok = [1000usize, 4001, 10_007, 12_345].iter().all(|&n| {
        let out = speed(&sine(200.0, n), 1.5).unwrap();
        out.len() == (n as f64 / 1.5).floor() as usize
    });
    pass &= lengths_ok;
    notes.push(format!("speed lengths {}", if lengths_ok { "exact" } else { "wrong" }));

    let target = 2f64.powf(2.0 / 12.0);
    let ratio = dominant_frequency(&pitch(&sine(200.0, 8000), 2).unwrap()) / 200.0;
    let pitch_ok = (ratio / target - 1.0).abs() < 0.01;
    pass &= pitch_ok;
    notes.push(format!("pitch ratio {ratio:.5} vs {target:.5}"));

    let w = sine(311.0, 100_000);
    let noisy = awgn(&w, 5.0, &mut RngStream::new(9)).unwrap();
    let noise = noisy
        .samples
        .iter()
        .zip(&w.samples)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / w.len() as f64;
    let snr = 10.0 * (w.power() / noise).log10();
    pass &= (snr - 5.0).abs() <= 0.2;
    notes.push(format!("awgn SNR {snr:.3} dB"));

    let s = rand_spec(4, 60, 401);
    let zero = SpecAugmentParams {
        time_width: 0,
        freq_width: 0,
        time_masks: 0,
        freq_masks: 0,
    };
    let identity = spec_augment(&s, &zero, &mut RngStream::new(1)) == s;
    pass &= identity;
    let p = SpecAugmentParams::default();
    let mut rng = RngStream::new(10);
    let mut bounded = true;
    for _ in 0..500 {
        let (_, masks) = spec_augment_with_masks(&s, &p, &mut rng);
        let mut cols = vec![false; s.n_frames()];
        let mut rows = vec![false; s.n_bins()];
        for &(st, w) in &masks.time {
            bounded &= w <= p.time_width;
            cols[st..st + w].iter_mut().for_each(|c| *c = true);
        }
        for &(st, w) in &masks.freq {
            bounded &= w <= p.freq_width;
            rows[st..st + w].iter_mut().for_each(|c| *c = true);
        }
        bounded &= masks.time.len() == p.time_masks && masks.freq.len() == p.freq_masks;
        bounded &= cols.iter().filter(|&&c| c).count() <= p.time_masks * p.time_width;
        bounded &= rows.iter().filter(|&&c| c).count() <= p.freq_masks * p.freq_width;
    }
    pass &= bounded;
    notes.push(format!(
        "specaugment identity {identity}, mask bounds {}",
        if bounded { "respected" } else { "violated" }
    ));
    Verdict::new(pass, notes.join("; "))
}

// ── 6: variant equivalence ───────────────────────────────────────────────

fn small_corpus(seed: u64) -> Corpus {
    generate(&CorpusConfig {
        seed,
        sizes: SplitSizes {
            initial: 40,
            unlabeled: 120,
            test: 30,
        },
        ..CorpusConfig::default()
    })
    .unwrap()
}

fn small_cfg() -> PipelineConfig {
    PipelineConfig {
        epochs_initial: 3,
        epochs_pipeline: 3,
        ..PipelineConfig::default()
    }
}

fn variant_equivalence() -> Verdict {
    let corpus = small_corpus(5);
    let base = small_cfg();
    let prepared = Prepared::new(&corpus, &base.frontend).unwrap();
    let initial = train_initial(&prepared, &base).unwrap();
    let hls = run_pipeline_from(
        &PipelineConfig {
            variant: Variant::Hls,
            ..base.clone()
        },
        &prepared,
        &initial,
    )
    .unwrap();
    let cr_cfg = PipelineConfig {
        variant: "cr-sa".parse().unwrap(),
        lambda: 0.0,
        force_empty_pls: true,
        ..base
    };
    let cr = run_pipeline_from(&cr_cfg, &prepared, &initial).unwrap();
    let same_rows = hls.report.unlabeled_rows() == cr.report.unlabeled_rows();
    let bits = |r: &TrainingReport| -> Vec<u64> {
        r.rows
            .iter()
            .flat_map(|x| [x.lr, x.loss_sup, x.test_cer].into_iter().flatten().map(f64::to_bits))
            .collect()
    };
    let same_bits = bits(&hls.report) == bits(&cr.report);
    let same_final = hls.report.summary.final_cer.to_bits() == cr.report.summary.final_cer.to_bits();
    let same_params = hls.model.params == cr.model.params;
    Verdict::new(
        same_rows && same_bits && same_final && same_params,
        format!(
            "{} epochs; rows identical {same_rows}, bit patterns identical {same_bits}, final model identical {same_params}",
            hls.report.rows.len()
        ),
    )
}

// ── 12: determinism through the command-line layer ───────────────────────

fn collect_files(dir: &Path, out: &mut BTreeMap<String, Vec<u8>>, root: &Path) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out, root);
        } else if p.extension().is_some_and(|e| e == "csv") {
            out.insert(
                p.strip_prefix(root).unwrap().display().to_string(),
                std::fs::read(&p).unwrap(),
            );
        }
    }
}

fn determinism() -> Verdict {
    let text = r#"
seed = 11
[corpus]
sizes = { initial = 40, unlabeled = 120, test = 30 }
[pipeline]
epochs_initial = 2
epochs_pipeline = 3
[grid]
variants = ["hls", "pls_filtered", "cr-sa"]
budgets = [0.1]
"#;
    let cfg = RunConfig::from_toml(text).unwrap();
    let mut trees = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("out");
        let mut sink = Vec::new();
        cli::cmd_synth(&cfg, &root, &mut sink).unwrap();
        cli::cmd_run(&cfg, &root, &mut sink).unwrap();
        let mut files = BTreeMap::new();
        collect_files(&root.join("runs"), &mut files, &root);
        trees.push(files);
    }
    let identical = trees[0] == trees[1];
    Verdict::new(
        identical && !trees[0].is_empty(),
        format!("{} report files compared, byte-identical {identical}", trees[0].len()),
    )
}

// ── 7-11: pipeline-scale properties ──────────────────────────────────────

struct Shared<'c> {
    prepared: Prepared<'c>,
    base: PipelineConfig,
    initial: Vec<InitialOutcome>,
    initial_time: Duration,
    /// `final CER` per seed for each variant name
    finals: BTreeMap<String, Vec<f64>>,
    cr_reports: Vec<TrainingReport>,
}

fn cell(base: &PipelineConfig, variant: &str, seed: u64) -> PipelineConfig {
    PipelineConfig {
        variant: variant.parse().unwrap(),
        seed,
        ..base.clone()
    }
}

fn fmt(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/")
}

fn med(xs: &[f64]) -> f64 {
    median(xs).unwrap_or(f64::NAN)
}

fn ordering(shared: &mut Shared) -> Verdict {
    for &seed in &SEEDS {
        let i = seed as usize;
        shared
            .finals
            .entry("initial_only".into())
            .or_default()
            .push(shared.initial[i].test_cer);
        for v in ["hls", "pls", "cr-sa"] {
            let out = run_pipeline_from(&cell(&shared.base, v, seed), &shared.prepared, &shared.initial[i]).unwrap();
            shared
                .finals
                .entry(v.into())
                .or_default()
                .push(out.report.summary.final_cer);
            if v == "cr-sa" {
                shared.cr_reports.push(out.report);
            }
        }
    }
    let m = |v: &str| med(&shared.finals[v]);
    let (init, hls, pls, cr) = (m("initial_only"), m("hls"), m("pls"), m("cr-sa"));
    let pass = cr < hls && hls < init && pls > hls;
    let detail = format!(
        "median CER cr-sa {cr:.2} [{}], hls {hls:.2} [{}], initial {init:.2} [{}], pls {pls:.2} [{}]; \
         cr<hls {}, hls<initial {}, pls>hls {}",
        fmt(&shared.finals["cr-sa"]),
        fmt(&shared.finals["hls"]),
        fmt(&shared.finals["initial_only"]),
        fmt(&shared.finals["pls"]),
        cr < hls,
        hls < init,
        pls > hls
    );
    Verdict::new(pass, detail)
}

fn subset_ordering(shared: &Shared) -> Verdict {
    let mut most = Vec::new();
    let mut least = Vec::new();
    for &seed in &SEEDS {
        let cfg = cell(&shared.base, "hls", seed);
        let res = run_subset_study(&cfg, &shared.prepared, &shared.initial[seed as usize], 5, &[0, 4]).unwrap();
        most.push(res[0].final_cer);
        least.push(res[1].final_cer);
    }
    let (a, b) = (med(&most), med(&least));
    Verdict::new(
        a < b,
        format!(
            "median CER most-uncertain fifth {a:.2} [{}] vs least-uncertain fifth {b:.2} [{}]",
            fmt(&most),
            fmt(&least)
        ),
    )
}

fn pseudo_label_trend(shared: &Shared) -> Verdict {
    let mut improved = 0;
    let mut notes = Vec::new();
    for r in &shared.cr_reports {
        let pc: Vec<f64> = r.rows.iter().filter_map(|x| x.p_cer).collect();
        let (first, last) = (pc[0], pc[pc.len() - 1]);
        if last < first {
            improved += 1;
        }
        notes.push(format!("{first:.2}->{last:.2}"));
    }
    Verdict::new(
        improved >= 2,
        format!(
            "P-CER first->final refresh per seed {}; improved in {improved}/3",
            notes.join(", ")
        ),
    )
}

fn refresh_period(shared: &Shared) -> Verdict {
    let mut d5 = Vec::new();
    for &seed in &SEEDS {
        let cfg = PipelineConfig {
            delta: 5,
            ..cell(&shared.base, "cr-sa", seed)
        };
        let out = run_pipeline_from(&cfg, &shared.prepared, &shared.initial[seed as usize]).unwrap();
        d5.push(out.report.summary.final_cer);
    }
    let d1 = &shared.finals["cr-sa"];
    let gap = (med(&d5) - med(d1)).abs();
    Verdict::new(
        gap <= 3.0,
        format!(
            "median CER delta=5 {:.2} [{}] vs delta=1 {:.2} [{}], gap {gap:.2} points",
            med(&d5),
            fmt(&d5),
            med(d1),
            fmt(d1)
        ),
    )
}

fn heterogeneous_recovery() -> Verdict {
    let corpus = generate(&CorpusConfig::heterogeneous(0)).unwrap();
    let base = PipelineConfig::default();
    let prepared = Prepared::new(&corpus, &base.frontend).unwrap();
    let mut init = Vec::new();
    let mut cr = Vec::new();
    for &seed in &SEEDS {
        let cfg = PipelineConfig {
            variant: "cr_filtered-sa".parse().unwrap(),
            budget_fraction: 1.0 / 3.0,
            tau: -0.5,
            seed,
            ..base.clone()
        };
        let initial = train_initial(&prepared, &cfg).unwrap();
        init.push(initial.test_cer);
        cr.push(
            run_pipeline_from(&cfg, &prepared, &initial)
                .unwrap()
                .report
                .summary
                .final_cer,
        );
    }
    let (a, b) = (med(&init), med(&cr));
    Verdict::new(
        a >= 1.5 * b,
        format!(
            "median CER initial {a:.2} [{}] vs cr_filtered-sa {b:.2} [{}], ratio {:.2}",
            fmt(&init),
            fmt(&cr),
            a / b
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = Vec::new();
    let mut run = |id: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let mut v = f();
        let elapsed = t.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                v.pass = false;
                v.detail.push_str(&format!("; exceeded the {}s limit", limit.as_secs()));
            }
        }
        report(id, name, elapsed, &v);
        if !v.pass {
            failed.push(id);
        }
        elapsed
    };

    run(
        1,
        "total-loss gradient vs finite differences",
        Some(Duration::from_secs(30)),
        &mut gradient_check,
    );
    run(
        2,
        "beam search vs exhaustive search",
        Some(Duration::from_secs(10)),
        &mut beam_oracle,
    );
    run(3, "length penalty values", None, &mut length_penalty_values);
    run(4, "edit distance vs brute force", None, &mut edit_distance_oracle);
    run(5, "augmentation invariants", None, &mut augmentation_invariants);
    run(
        6,
        "hls equals cr-sa with zero lambda and no pseudo-labels",
        None,
        &mut variant_equivalence,
    );
    run(12, "byte-identical reports on repeat", None, &mut determinism);

    let corpus = generate(&CorpusConfig::default()).unwrap();
    let base = PipelineConfig::default();
    let t = Instant::now();
    let prepared = Prepared::new(&corpus, &base.frontend).unwrap();
    let initial = SEEDS
        .iter()
        .map(|&s| {
            train_initial(
                &prepared,
                &PipelineConfig {
                    seed: s,
                    ..base.clone()
                },
            )
            .unwrap()
        })
        .collect();
    let mut shared = Shared {
        prepared,
        base,
        initial,
        initial_time: t.elapsed(),
        finals: BTreeMap::new(),
        cr_reports: Vec::new(),
    };
    let init_time = shared.initial_time;
    // the initial models count toward every check that needs them
    let mut with_initial = |id: usize, name: &str, limit: Duration, f: &mut dyn FnMut() -> Verdict| {
        run(id, name, Some(limit.saturating_sub(init_time)), f)
    };
    with_initial(
        7,
        "variant ordering at budget 0.1",
        Duration::from_secs(30 * 60),
        &mut || ordering(&mut shared),
    );
    with_initial(
        8,
        "most-uncertain subset beats least-uncertain subset",
        Duration::from_secs(20 * 60),
        &mut || subset_ordering(&shared),
    );
    run(
        9,
        "pseudo-label error falls under consistency training",
        None,
        &mut || pseudo_label_trend(&shared),
    );
    run(
        10,
        "refresh period 5 stays within 3 points of period 1",
        None,
        &mut || refresh_period(&shared),
    );
    run(
        11,
        "recovery on the shifted-vocabulary corpus",
        None,
        &mut heterogeneous_recovery,
    );

    println!(
        "initial models for the shared runs took {:.1}s",
        init_time.as_secs_f64()
    );
    if failed.is_empty() {
        println!("all acceptance checks passed");
        ExitCode::SUCCESS
    } else {
        println!("failed checks: {failed:?}");
        ExitCode::FAILURE
    }
}
