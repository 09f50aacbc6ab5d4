//! Runs the active-learning loop for several variants from one shared seed
//! model and prints the per-epoch curves and a summary table.
//!
//! `cargo run --release --example active_learning -- hls,pls,cr-sa 0.2`

use alcr::corpus::{generate, CorpusConfig, SplitSizes};
use alcr::pipeline::{pivot_summaries, run_pipeline_from, train_initial, PipelineConfig, Prepared, Variant};

fn main() -> alcr::Result<()> {
    let mut args = std::env::args().skip(1);
    let variants: Vec<Variant> = args
        .next()
        .unwrap_or_else(|| "hls,pls,cr-sa,cr_filtered-sa".into())
        .split(',')
        .map(str::parse)
        .collect::<alcr::Result<_>>()?;
    let budget: f64 = args
        .next()
        .map_or(Ok(0.2), |b| b.parse())
        .map_err(|e| alcr::Error::InvalidArgument(format!("budget: {e}")))?;

    let corpus = generate(&CorpusConfig {
        seed: 5,
        sizes: SplitSizes {
            initial: 400,
            unlabeled: 400,
            test: 60,
        },
        ..CorpusConfig::default()
    })?;
    let base = PipelineConfig {
        budget_fraction: budget,
        epochs_pipeline: 3,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..PipelineConfig::default()
    };
    let prepared = Prepared::new(&corpus, &base.frontend)?;
    let initial = train_initial(&prepared, &base)?;
    println!("seed model: test CER {:.2}%", initial.test_cer);

    let mut summaries = Vec::new();
    for variant in variants {
        let cfg = PipelineConfig {
            variant: variant.clone(),
            ..base.clone()
        };
        let out = run_pipeline_from(&cfg, &prepared, &initial)?;
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
        if let Some(pool) = &out.pool {
            println!(
                "{variant}: {} human-labeled, {} pseudo-labeled, {} filtered",
                pool.n_hls(),
                pool.n_pls(),
                pool.n_filtered()
            );
        }
        for r in &out.report.rows {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            println!(
                "  epoch {:>2}  sup {}  cr {}  test CER {}  P-CER {}",
                r.epoch,
                fmt(r.loss_sup),
                fmt(r.loss_cr),
                fmt(r.test_cer),
                fmt(r.p_cer)
            );
        }
        summaries.push(out.report.summary);
    }
    let pivot = pivot_summaries(&summaries);
    print!("{}", String::from_utf8_lossy(&pivot.to_csv()?));
    Ok(())
}
