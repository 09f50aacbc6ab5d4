//! Renders a transcript as dual tones, writes it as a WAV file and prints the
//! two strongest frequencies of each character's middle frame.

use alcr::corpus::{char_span, synthesize, tone_pair, SpeakerProfile};
use alcr::dsp::{read_wav, spectrogram, write_wav, FrontendConfig};
use alcr::model::Vocabulary;
use alcr::rng::RngStream;

fn main() -> alcr::Result<()> {
    let vocab = Vocabulary::default();
    let text = "badge";
    let wave = synthesize(text, &vocab, &SpeakerProfile::neutral(), &mut RngStream::new(3))?;
    let path = std::env::temp_dir().join("alcr-badge.wav");
    write_wav(&path, &wave)?;
    let back = read_wav(&path)?;
    println!(
        "{text:?}: {} samples, {:.2} s, written to {}",
        back.len(),
        back.duration_s(),
        path.display()
    );

    let fe = FrontendConfig::default();
    let spec = spectrogram(&back, &fe)?;
    let hz_per_bin = back.sample_rate as f64 / fe.window_samples(back.sample_rate) as f64;
    println!(
        "{} frames x {} bins, {hz_per_bin} Hz per bin",
        spec.n_frames(),
        spec.n_bins()
    );
    let stride = fe.stride_samples(back.sample_rate);
    let window = fe.window_samples(back.sample_rate);
    for (k, c) in text.chars().enumerate() {
        let (start, end) = char_span(k, back.sample_rate);
        let mid = (start + end) / 2;
        let frame = (mid.saturating_sub(window / 2) / stride).min(spec.n_frames() - 1);
        let mut bins: Vec<(usize, f64)> = spec.frame(frame).iter().copied().enumerate().collect();
        bins.sort_by(|a, b| b.1.total_cmp(&a.1));
        // neighbouring bins of one peak are skipped
        let first = bins[0].0;
        let second = bins.iter().find(|(b, _)| b.abs_diff(first) > 3).map_or(0, |x| x.0);
        let (lo, hi) = (
            first.min(second) as f64 * hz_per_bin,
            first.max(second) as f64 * hz_per_bin,
        );
        let (f1, f2) = tone_pair(vocab.id_of(c)?).expect("content character");
        println!("  {c}: peaks {lo:>6.0} Hz {hi:>6.0} Hz   (tones {f1} / {f2} Hz)");
    }
    Ok(())
}
