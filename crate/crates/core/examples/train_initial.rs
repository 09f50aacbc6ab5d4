//! Trains the seed model on a small labeled split, saves and reloads the
//! checkpoint, and decodes a few test utterances.

use alcr::corpus::{generate, CorpusConfig, SplitSizes};
use alcr::decoder::beam_search;
use alcr::model::Seq2Seq;
use alcr::pipeline::{train_initial, PipelineConfig, Prepared};

fn main() -> alcr::Result<()> {
    let corpus = generate(&CorpusConfig {
        seed: 21,
        sizes: SplitSizes {
            initial: 400,
            unlabeled: 1,
            test: 30,
        },
        ..CorpusConfig::default()
    })?;
    let cfg = PipelineConfig {
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..PipelineConfig::default()
    };
    let prepared = Prepared::new(&corpus, &cfg.frontend)?;
    let out = train_initial(&prepared, &cfg)?;
    for e in &out.epochs {
        println!("epoch {:>2}  lr {:.5}  loss {:.4}", e.epoch, e.lr, e.loss_sup);
    }
    println!("test CER {:.2}%", out.test_cer);

    let path = std::env::temp_dir().join("alcr-initial.ckpt");
    out.model.save(&path)?;
    let model = Seq2Seq::load(&path)?;
    let vocab = corpus.vocabulary();
    for &i in prepared.test.iter().take(5) {
        let hyp = &beam_search(&model, &prepared.features[i], &cfg.beam)?[0];
        println!(
            "  {:<22} -> {:<22} pprob {:.3}",
            corpus.utterances[i].transcript,
            vocab.decode(&hyp.tokens),
            hyp.score
        );
    }
    Ok(())
}
