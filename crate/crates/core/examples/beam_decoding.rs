//! Beam search over a hand-written posterior table and over an untrained
//! network, showing how the length penalty ranks hypotheses.

use alcr::corpus::{synthesize, SpeakerProfile};
use alcr::decoder::{beam_search, length_penalty, search, BeamConfig, StepModel};
use alcr::dsp::{spectrogram, FrontendConfig};
use alcr::metrics::{cer, EvalPair};
use alcr::model::{ModelConfig, Seq2Seq, TokenId, Vocabulary};
use alcr::rng::RngStream;

/// Posteriors depend only on depth; ids are `a`, `b`, EOS.
struct Table(Vec<[f64; 3]>);

impl StepModel for Table {
    type State = usize;
    fn vocab_size(&self) -> usize {
        3
    }
    fn eos(&self) -> TokenId {
        2
    }
    fn emits(&self, t: TokenId) -> bool {
        t < 2
    }
    fn frames(&self) -> usize {
        self.0.len()
    }
    fn start(&mut self) -> (usize, TokenId) {
        (0, 0)
    }
    fn step(&mut self, depth: &usize, _prev: TokenId) -> (usize, Vec<f64>) {
        let row = self.0[(*depth).min(self.0.len() - 1)];
        (depth + 1, row.iter().map(|p| p.ln()).collect())
    }
}

fn main() -> alcr::Result<()> {
    println!(
        "lp(0) {:.5}  lp(1) {:.5}  lp(7) {:.5}",
        length_penalty(0),
        length_penalty(1),
        length_penalty(7)
    );

    let mut table = Table(vec![[0.5, 0.1, 0.4], [0.6, 0.1, 0.3], [0.2, 0.1, 0.7], [0.3, 0.3, 0.4]]);
    let cfg = BeamConfig {
        width: 3,
        max_len: Some(4),
        ..BeamConfig::default()
    };
    println!("table model, width 3:");
    for h in search(&mut table, &cfg)?.iter().take(5) {
        println!(
            "  {:<10} logp {:>8.4}  score {:>8.4}",
            format!("{:?}", h.tokens.0),
            h.logp,
            h.score
        );
    }

    let vocab = Vocabulary::default();
    let model = Seq2Seq::new(ModelConfig::default(), vocab.clone(), 0)?;
    let wave = synthesize("cafe", &vocab, &SpeakerProfile::neutral(), &mut RngStream::new(1))?;
    let x = spectrogram(&wave, &FrontendConfig::default())?;
    let hyps = beam_search(&model, &x, &BeamConfig::default())?;
    let best = &hyps[0];
    let text = vocab.decode(&best.tokens);
    let c = cer(&[EvalPair::from_text("cafe", &text)])?;
    println!(
        "untrained network: best {text:?}, pprob {:.4}, CER {c:.1}% ({} finished hypotheses)",
        best.score,
        hyps.len()
    );
    Ok(())
}
