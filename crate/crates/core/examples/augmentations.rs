//! Applies each consistency-loss augmentation to one synthetic utterance and
//! reports what it changed.

use alcr::augment::{self, AugmentationPolicy, SpecAugmentParams};
use alcr::corpus::{synthesize, SpeakerProfile};
use alcr::dsp::{dominant_frequency, spectrogram, FrontendConfig, Waveform};
use alcr::model::Vocabulary;
use alcr::rng::RngStream;

fn main() -> alcr::Result<()> {
    let fe = FrontendConfig::default();
    let mut rng = RngStream::new(8);
    let wave = synthesize("aaaa", &Vocabulary::default(), &SpeakerProfile::neutral(), &mut rng)?;
    let plain = spectrogram(&wave, &fe)?;
    println!(
        "genuine: {} samples, {} frames, dominant {:.1} Hz",
        wave.len(),
        plain.n_frames(),
        dominant_frequency(&wave)
    );

    let fast = augment::speed(&wave, 1.5)?;
    println!(
        "speed 1.5: {} samples, dominant {:.1} Hz",
        fast.len(),
        dominant_frequency(&fast)
    );

    let high = augment::pitch(&wave, 2)?;
    println!(
        "pitch +2: {} samples, dominant {:.1} Hz",
        high.len(),
        dominant_frequency(&high)
    );

    let noisy = augment::awgn(&wave, 5.0, &mut rng)?;
    let noise = Waveform::new(
        noisy.samples.iter().zip(&wave.samples).map(|(a, b)| a - b).collect(),
        wave.sample_rate,
    );
    println!(
        "awgn 5 dB: measured SNR {:.2} dB",
        10.0 * (wave.power() / noise.power()).log10()
    );

    let (masked, masks) = augment::spec_augment_with_masks(&plain, &SpecAugmentParams::default(), &mut rng);
    let changed = plain.data().iter().zip(masked.data()).filter(|(a, b)| a != b).count();
    println!(
        "specaugment: time masks {:?}, freq masks {:?}, {changed} of {} cells changed",
        masks.time,
        masks.freq,
        plain.data().len()
    );

    for policy in ["none", "speed", "pitch", "awgn", "specaugment"] {
        let p: AugmentationPolicy = policy.parse()?;
        let x = augment::apply(&p, &wave, &fe, &mut rng)?;
        println!("apply({p}): {} x {}", x.n_frames(), x.n_bins());
    }
    Ok(())
}
