//! Writes a small corpus to disk, reloads it and checks that regeneration is
//! byte-stable. Pass a directory to keep the output.

use alcr::corpus::{generate_corpus, load_corpus, CorpusConfig, Split, SplitSizes, MANIFEST_FILE};

fn main() -> alcr::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("alcr-corpus"));
    let cfg = CorpusConfig {
        seed: 4,
        sizes: SplitSizes {
            initial: 20,
            unlabeled: 80,
            test: 15,
        },
        ..CorpusConfig::default()
    };
    let corpus = generate_corpus(&cfg, &dir)?;
    for split in Split::ALL {
        let first = corpus.manifest.split(split).next().expect("non-empty split");
        println!(
            "{:<10} {:>3} utterances {:>6.1} s   e.g. {} {:?}",
            split.name(),
            corpus.manifest.split(split).count(),
            corpus.manifest.total_duration(split),
            first.id,
            first.transcript
        );
    }
    let reloaded = load_corpus(&dir)?;
    assert_eq!(reloaded.utterances, corpus.utterances);

    let manifest = std::fs::read(dir.join(MANIFEST_FILE))?;
    let again = std::env::temp_dir().join("alcr-corpus-again");
    generate_corpus(&cfg, &again)?;
    let same = manifest == std::fs::read(again.join(MANIFEST_FILE))?;
    println!(
        "written to {}; reload matches; regeneration byte-identical: {same}",
        dir.display()
    );
    Ok(())
}
