use crate::corpus::{Corpus, Split, Utterance};
use crate::dsp::{spectrogram, FrontendConfig, Spectrogram};
use crate::error::Result;
use crate::model::TokenSequence;

/// A corpus with genuine features and encoded transcripts computed once.
/// Indices everywhere in the pipeline refer to `corpus.utterances`.
#[derive(Clone, Debug)]
pub struct Prepared<'c> {
    pub corpus: &'c Corpus,
    pub frontend: FrontendConfig,
    pub features: Vec<Spectrogram>,
    pub labels: Vec<TokenSequence>,
    pub initial: Vec<usize>,
    pub pool: Vec<usize>,
    pub test: Vec<usize>,
}

impl<'c> Prepared<'c> {
    pub fn new(corpus: &'c Corpus, frontend: &FrontendConfig) -> Result<Self> {
        frontend.validate()?;
        let vocab = corpus.vocabulary();
        let mut features = Vec::with_capacity(corpus.utterances.len());
        let mut labels = Vec::with_capacity(corpus.utterances.len());
        for u in &corpus.utterances {
            features.push(spectrogram(&u.waveform, frontend)?);
            labels.push(vocab.encode(&u.transcript)?);
        }
        let members = |s: Split| -> Vec<usize> {
            corpus
                .utterances
                .iter()
                .enumerate()
                .filter(|(_, u)| u.split == s)
                .map(|(i, _)| i)
                .collect()
        };
        Ok(Self {
            corpus,
            frontend: frontend.clone(),
            features,
            labels,
            initial: members(Split::Initial),
            pool: members(Split::Unlabeled),
            test: members(Split::Test),
        })
    }

    pub fn utterance(&self, index: usize) -> &Utterance {
        &self.corpus.utterances[index]
    }

    pub fn feature_refs(&self, indices: &[usize]) -> Vec<&Spectrogram> {
        indices.iter().map(|&i| &self.features[i]).collect()
    }
}

/// One training example: corpus index, its target and whether the target is
/// a pseudo-label (which also makes it a consistency-loss example).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainItem {
    pub index: usize,
    pub label: TokenSequence,
    pub pseudo: bool,
}
