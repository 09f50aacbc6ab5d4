//! Synthetic dual-tone corpus, split manifests and the oracle annotator.
//!
//! Every character is rendered as two simultaneous sinusoids taken from an
//! eight-frequency table (a 2-of-8 code). Each utterance gets its own speaker
//! profile that scales all frequencies and the gain, so neighbouring codes
//! become confusable for extreme speakers.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{self, Waveform, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::model::Vocabulary;
use crate::rng::{hash_str, RngStream};

pub const CHAR_SECONDS: f64 = 0.3;
pub const GAP_SECONDS: f64 = 0.05;
pub const EMPTY_SECONDS: f64 = 0.1;
pub const BACKGROUND_SNR_DB: f64 = 30.0;
pub const MAX_TRANSCRIPT_LEN: usize = 20;

/// Peak amplitude of each of the two tones at unit gain.
const TONE_AMPLITUDE: f64 = 0.45;
const RAMP_SECONDS: f64 = 0.01;

/// Geometric frequency ladder, ratio ≈ 1.25 between rungs.
pub const TONE_FREQS: [f64; 8] = [300.0, 375.0, 469.0, 586.0, 732.0, 915.0, 1144.0, 1430.0];

/// Tone-index pairs for the twelve characters, in vocabulary order.
pub const TONE_PAIRS: [(usize, usize); 12] = [
    (0, 2),
    (0, 4),
    (0, 6),
    (1, 3),
    (1, 5),
    (1, 7),
    (2, 4),
    (2, 6),
    (3, 5),
    (3, 7),
    (4, 6),
    (5, 7),
];

/// Tone frequencies for the character with index `id` in the default
/// vocabulary order.
pub fn tone_pair(id: usize) -> Option<(f64, f64)> {
    TONE_PAIRS.get(id).map(|&(a, b)| (TONE_FREQS[a], TONE_FREQS[b]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub base_freq_scale: f64,
    pub gain: f64,
    pub jitter_seed: u64,
}

impl SpeakerProfile {
    pub fn sample(rng: &mut RngStream) -> Self {
        Self {
            base_freq_scale: 0.9 + 0.2 * rng.uniform(),
            gain: 0.5 + 0.5 * rng.uniform(),
            jitter_seed: rand::RngCore::next_u64(rng),
        }
    }

    pub fn neutral() -> Self {
        Self {
            base_freq_scale: 1.0,
            gain: 1.0,
            jitter_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.9..=1.1).contains(&self.base_freq_scale) || !(0.5..=1.0).contains(&self.gain) {
            return Err(Error::InvalidArgument(format!(
                "speaker out of range: scale {} gain {}",
                self.base_freq_scale, self.gain
            )));
        }
        Ok(())
    }
}

fn seconds_to_samples(s: f64, rate: u32) -> usize {
    (s * f64::from(rate)).round() as usize
}

/// Sample count of a synthesized transcript of `chars` characters.
pub fn utterance_samples(chars: usize, rate: u32) -> usize {
    if chars == 0 {
        return seconds_to_samples(EMPTY_SECONDS, rate);
    }
    let gap = seconds_to_samples(GAP_SECONDS, rate);
    gap + chars * (seconds_to_samples(CHAR_SECONDS, rate) + gap)
}

/// Sample range `[start, end)` of the `k`-th character tone.
pub fn char_span(k: usize, rate: u32) -> (usize, usize) {
    let gap = seconds_to_samples(GAP_SECONDS, rate);
    let tone = seconds_to_samples(CHAR_SECONDS, rate);
    let start = gap + k * (tone + gap);
    (start, start + tone)
}

/// Renders `transcript` at the default sample rate. Characters map to tone
/// pairs by their position in `vocab`.
pub fn synthesize(
    transcript: &str,
    vocab: &Vocabulary,
    speaker: &SpeakerProfile,
    rng: &mut RngStream,
) -> Result<Waveform> {
    synthesize_at(transcript, vocab, speaker, rng, DEFAULT_SAMPLE_RATE)
}

pub fn synthesize_at(
    transcript: &str,
    vocab: &Vocabulary,
    speaker: &SpeakerProfile,
    rng: &mut RngStream,
    rate: u32,
) -> Result<Waveform> {
    speaker.validate()?;
    let ids = vocab.encode(transcript)?.0;
    if ids.len() > MAX_TRANSCRIPT_LEN {
        return Err(Error::InvalidArgument(format!(
            "transcript of {} characters exceeds {MAX_TRANSCRIPT_LEN}",
            ids.len()
        )));
    }
    let pairs = ids
        .iter()
        .map(|&id| tone_pair(id).ok_or_else(|| Error::UnknownCharacter(vocab.chars()[id])))
        .collect::<Result<Vec<_>>>()?;

    let n = utterance_samples(ids.len(), rate);
    let mut samples = vec![0.0; n];
    let mut jitter = RngStream::keyed(speaker.jitter_seed, &[hash_str("jitter")]);
    let ramp = seconds_to_samples(RAMP_SECONDS, rate).max(1);
    let sr = f64::from(rate);
    for (k, &(f1, f2)) in pairs.iter().enumerate() {
        let (start, end) = char_span(k, rate);
        let len = end - start;
        let tones = [f1, f2].map(|f| {
            let freq = f * speaker.base_freq_scale * (1.0 + 0.015 * (2.0 * jitter.uniform() - 1.0));
            let amp = TONE_AMPLITUDE * speaker.gain * (0.9 + 0.2 * jitter.uniform());
            let phase = 2.0 * std::f64::consts::PI * jitter.uniform();
            (freq, amp, phase)
        });
        for i in 0..len {
            let env = if i < ramp {
                0.5 - 0.5 * (std::f64::consts::PI * i as f64 / ramp as f64).cos()
            } else if len - i <= ramp {
                0.5 - 0.5 * (std::f64::consts::PI * (len - i) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            let t = i as f64 / sr;
            let v: f64 = tones
                .iter()
                .map(|&(f, a, p)| a * (2.0 * std::f64::consts::PI * f * t + p).sin())
                .sum();
            samples[start + i] = env * v;
        }
    }
    // Background noise relative to the nominal power of a tone pair.
    let nominal = 2.0 * (TONE_AMPLITUDE * speaker.gain).powi(2) / 2.0;
    let sd = (nominal / 10f64.powf(BACKGROUND_SNR_DB / 10.0)).sqrt();
    for s in &mut samples {
        let z: f64 = StandardNormal.sample(rng);
        *s += sd * z;
    }
    Ok(Waveform::new(samples, rate))
}

/// Round-trips a waveform through 16-bit PCM so in-memory and on-disk copies
/// are identical.
pub fn quantize(w: &Waveform) -> Waveform {
    let samples = w
        .samples
        .iter()
        .map(|&x| (x * 32768.0).round().clamp(-32768.0, 32767.0) / 32768.0)
        .collect();
    Waveform::new(samples, w.sample_rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Initial,
    Unlabeled,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Initial, Split::Unlabeled, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Initial => "initial",
            Split::Unlabeled => "unlabeled",
            Split::Test => "test",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Split::Initial => "init",
            Split::Unlabeled => "pool",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub initial: usize,
    pub unlabeled: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            initial: 400,
            unlabeled: 1600,
            test: 300,
        }
    }
}

impl SplitSizes {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Initial => self.initial,
            Split::Unlabeled => self.unlabeled,
            Split::Test => self.test,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub seed: u64,
    #[serde(default)]
    pub sizes: SplitSizes,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// Draw the initial split from the first eight characters and the other
    /// splits from the last eight.
    #[serde(default)]
    pub heterogeneous: bool,
}

fn default_min_len() -> usize {
    3
}

fn default_max_len() -> usize {
    10
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sizes: SplitSizes::default(),
            min_len: default_min_len(),
            max_len: default_max_len(),
            heterogeneous: false,
        }
    }
}

impl CorpusConfig {
    pub fn heterogeneous(seed: u64) -> Self {
        Self {
            seed,
            heterogeneous: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if Split::ALL.iter().any(|&s| self.sizes.get(s) == 0) {
            return Err(Error::Config("every split needs at least one utterance".into()));
        }
        if self.min_len > self.max_len || self.max_len > MAX_TRANSCRIPT_LEN {
            return Err(Error::Config(format!(
                "transcript lengths must satisfy min ≤ max ≤ {MAX_TRANSCRIPT_LEN}"
            )));
        }
        Ok(())
    }

    /// Characters transcripts of `split` are drawn from.
    pub fn charset(&self, split: Split) -> Vec<char> {
        let all: Vec<char> = crate::model::DEFAULT_CHARS.chars().collect();
        match (self.heterogeneous, split) {
            (false, _) => all,
            (true, Split::Initial) => all[..8].to_vec(),
            (true, _) => all[4..].to_vec(),
        }
    }
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub transcript: String,
    pub samples: usize,
    pub duration_s: f64,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub config: CorpusConfig,
    pub vocabulary: Vocabulary,
    pub sample_rate: u32,
    pub counts: Vec<(Split, usize)>,
    pub durations_s: Vec<(Split, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusManifest {
    pub config: CorpusConfig,
    pub vocabulary: Vocabulary,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn ids(&self, split: Split) -> Vec<&str> {
        self.split(split).map(|e| e.id.as_str()).collect()
    }

    pub fn total_samples(&self, split: Split) -> usize {
        self.split(split).map(|e| e.samples).sum()
    }

    pub fn total_duration(&self, split: Split) -> f64 {
        self.total_samples(split) as f64 / f64::from(DEFAULT_SAMPLE_RATE)
    }

    pub fn info(&self) -> CorpusInfo {
        CorpusInfo {
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
            sample_rate: DEFAULT_SAMPLE_RATE,
            counts: Split::ALL.iter().map(|&s| (s, self.split(s).count())).collect(),
            durations_s: Split::ALL.iter().map(|&s| (s, self.total_duration(s))).collect(),
        }
    }

    /// Tab-separated: id, relative WAV path, transcript, duration in
    /// seconds, split.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.id,
                e.path.display(),
                e.transcript,
                e.duration_s,
                e.split
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub waveform: Waveform,
    pub transcript: String,
    pub duration_s: f64,
    pub split: Split,
}

impl Utterance {
    pub fn samples(&self) -> usize {
        self.waveform.len()
    }
}

/// A manifest with its waveforms in memory.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn split(&self, split: Split) -> Vec<&Utterance> {
        self.utterances.iter().filter(|u| u.split == split).collect()
    }

    pub fn get(&self, id: &str) -> Result<&Utterance> {
        self.utterances
            .iter()
            .find(|u| u.id == id)
            .ok_or_else(|| Error::UnknownUtterance(id.to_string()))
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.manifest.vocabulary
    }
}

fn draw_transcript(rng: &mut RngStream, charset: &[char], min_len: usize, max_len: usize) -> String {
    let len = rng.range_inclusive(min_len, max_len);
    (0..len)
        .map(|_| charset[rng.range_inclusive(0, charset.len() - 1)])
        .collect()
}

fn synth_one(cfg: &CorpusConfig, vocab: &Vocabulary, split: Split, index: usize) -> Result<Utterance> {
    let tag = if cfg.heterogeneous { "het" } else { "std" };
    let mut rng = RngStream::keyed(cfg.seed, &[hash_str(tag), hash_str(split.name()), index as u64]);
    let charset = cfg.charset(split);
    let transcript = draw_transcript(&mut rng, &charset, cfg.min_len, cfg.max_len);
    let speaker = SpeakerProfile::sample(&mut rng);
    let waveform = quantize(&synthesize(&transcript, vocab, &speaker, &mut rng)?);
    Ok(Utterance {
        id: format!("{}-{index:04}", split.id_prefix()),
        duration_s: waveform.duration_s(),
        waveform,
        transcript,
        split,
    })
}

/// Generates every utterance in memory. Each utterance has its own keyed
/// stream, so results do not depend on generation order.
pub fn generate(cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let vocab = Vocabulary::default();
    let mut utterances = Vec::new();
    for split in Split::ALL {
        for i in 0..cfg.sizes.get(split) {
            utterances.push(synth_one(cfg, &vocab, split, i)?);
        }
    }
    let entries = utterances
        .iter()
        .map(|u| ManifestEntry {
            id: u.id.clone(),
            path: PathBuf::from("wav").join(format!("{}.wav", u.id)),
            transcript: u.transcript.clone(),
            samples: u.samples(),
            duration_s: u.duration_s,
            split: u.split,
        })
        .collect();
    Ok(Corpus {
        manifest: CorpusManifest {
            config: cfg.clone(),
            vocabulary: vocab,
            entries,
        },
        utterances,
    })
}

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const INFO_FILE: &str = "corpus.json";

/// Generates the corpus and writes WAVs, `manifest.tsv` and `corpus.json`
/// under `dir`.
pub fn generate_corpus(cfg: &CorpusConfig, dir: &Path) -> Result<Corpus> {
    let corpus = generate(cfg)?;
    write_corpus(&corpus, dir)?;
    Ok(corpus)
}

pub fn generate_heterogeneous_corpus(seed: u64, dir: &Path) -> Result<Corpus> {
    generate_corpus(&CorpusConfig::heterogeneous(seed), dir)
}

pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("wav"))?;
    for (u, e) in corpus.utterances.iter().zip(&corpus.manifest.entries) {
        dsp::write_wav(&dir.join(&e.path), &u.waveform)?;
    }
    corpus
        .manifest
        .write_tsv(BufWriter::new(fs::File::create(dir.join(MANIFEST_FILE))?))?;
    let info = serde_json::to_string_pretty(&corpus.manifest.info())?;
    fs::write(dir.join(INFO_FILE), info + "\n")?;
    Ok(())
}

fn parse_line(line: &str, lineno: usize, path: &Path) -> Result<(String, PathBuf, String, f64, Split)> {
    let bad = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg: format!("line {lineno}: {msg}"),
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(bad(format!("expected 5 fields, found {}", fields.len())));
    }
    let duration = fields[3].parse().map_err(|e| bad(format!("duration: {e}")))?;
    let split = fields[4].parse().map_err(|e: Error| bad(e.to_string()))?;
    Ok((fields[0].into(), fields[1].into(), fields[2].into(), duration, split))
}

/// Reads a corpus written by [`generate_corpus`], WAVs included.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let info: CorpusInfo = serde_json::from_str(&fs::read_to_string(dir.join(INFO_FILE))?)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let reader = BufReader::new(fs::File::open(&manifest_path)?);
    let mut entries = Vec::new();
    let mut utterances = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (id, path, transcript, duration_s, split) = parse_line(&line, i + 1, &manifest_path)?;
        if !seen.insert(id.clone()) {
            return Err(Error::Format {
                path: manifest_path.clone(),
                msg: format!("duplicate id {id}"),
            });
        }
        info.vocabulary.encode(&transcript)?;
        let waveform = dsp::read_wav(&dir.join(&path))?;
        entries.push(ManifestEntry {
            id: id.clone(),
            path,
            transcript: transcript.clone(),
            samples: waveform.len(),
            duration_s,
            split,
        });
        utterances.push(Utterance {
            id,
            duration_s: waveform.duration_s(),
            waveform,
            transcript,
            split,
        });
    }
    Ok(Corpus {
        manifest: CorpusManifest {
            config: info.config,
            vocabulary: info.vocabulary,
            entries,
        },
        utterances,
    })
}

/// Labeling budget tracked in samples so accounting is exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BudgetLedger {
    pub budget_samples: usize,
    pub spent_samples: usize,
    labeled: BTreeSet<String>,
}

impl BudgetLedger {
    pub fn new(budget_samples: usize) -> Self {
        Self {
            budget_samples,
            spent_samples: 0,
            labeled: BTreeSet::new(),
        }
    }

    /// Budget as `floor(fraction · pool_samples)`, with a tolerance of 1e-6
    /// samples so fractions like 1/3 of a multiple of 3 are not rounded down.
    pub fn from_fraction(fraction: f64, pool_samples: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "budget fraction {fraction} outside [0, 1]"
            )));
        }
        let budget = ((fraction * pool_samples as f64 + 1e-6).floor() as usize).min(pool_samples);
        Ok(Self::new(budget))
    }

    pub fn remaining(&self) -> usize {
        self.budget_samples - self.spent_samples
    }

    pub fn can_afford(&self, samples: usize) -> bool {
        samples <= self.remaining()
    }

    pub fn is_labeled(&self, id: &str) -> bool {
        self.labeled.contains(id)
    }

    pub fn labeled(&self) -> impl Iterator<Item = &str> {
        self.labeled.iter().map(String::as_str)
    }
}

/// Simulated human annotation: returns the true transcript and charges the
/// utterance's duration to the ledger once.
pub fn oracle_annotate(corpus: &Corpus, id: &str, ledger: &mut BudgetLedger) -> Result<String> {
    let u = corpus.get(id)?;
    if !ledger.is_labeled(id) {
        if !ledger.can_afford(u.samples()) {
            return Err(Error::InvalidArgument(format!(
                "annotating {id} ({} samples) exceeds the remaining budget of {}",
                u.samples(),
                ledger.remaining()
            )));
        }
        ledger.spent_samples += u.samples();
        ledger.labeled.insert(id.to_string());
    }
    Ok(u.transcript.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{cer, EvalPair};

    fn small(seed: u64) -> CorpusConfig {
        CorpusConfig {
            seed,
            sizes: SplitSizes {
                initial: 6,
                unlabeled: 10,
                test: 4,
            },
            ..CorpusConfig::default()
        }
    }

    fn goertzel_power(x: &[f64], freq: f64, rate: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / rate;
        let c = 2.0 * w.cos();
        let (mut s1, mut s2) = (0.0, 0.0);
        for &v in x {
            let s = v + c * s1 - s2;
            s2 = s1;
            s1 = s;
        }
        s1 * s1 + s2 * s2 - c * s1 * s2
    }

    /// Classifies each tone segment by the two strongest rungs of the
    /// speaker-scaled frequency ladder, searching ±2% around each rung.
    fn matched_filter(w: &Waveform, chars: usize, scale: f64) -> String {
        let vocab = Vocabulary::default();
        (0..chars)
            .map(|k| {
                let (s, e) = char_span(k, w.sample_rate);
                let seg = &w.samples[s..e];
                let mut p: Vec<(usize, f64)> = TONE_FREQS
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| {
                        // band energy covering the per-character jitter
                        let band = (-8..=8)
                            .map(|d| {
                                goertzel_power(seg, f * scale * (1.0 + 0.0025 * f64::from(d)), f64::from(w.sample_rate))
                            })
                            .fold(0.0, f64::max);
                        (i, band)
                    })
                    .collect();
                p.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
                let mut pair = (p[0].0.min(p[1].0), p[0].0.max(p[1].0));
                if pair.0 == pair.1 {
                    pair.1 += 1;
                }
                let id = TONE_PAIRS.iter().position(|&q| q == pair).unwrap_or(0);
                vocab.chars()[id]
            })
            .collect()
    }

    #[test]
    fn durations_follow_segment_layout() {
        let v = Vocabulary::default();
        let sp = SpeakerProfile::neutral();
        let w = synthesize("a", &v, &sp, &mut RngStream::new(0)).unwrap();
        assert_eq!(w.len(), 1600);
        assert!((w.duration_s() - (0.3 + 2.0 * 0.05)).abs() < 1e-12);
        let e = synthesize("", &v, &sp, &mut RngStream::new(0)).unwrap();
        assert_eq!(e.len(), 400);
        assert!(e.power() < 1e-3);
        let w = synthesize("abcdefghij", &v, &sp, &mut RngStream::new(0)).unwrap();
        assert_eq!(w.len(), utterance_samples(10, 4000));
        assert!(synthesize("z", &v, &sp, &mut RngStream::new(0)).is_err());
        assert!(synthesize(&"a".repeat(21), &v, &sp, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn synthesis_is_deterministic() {
        let v = Vocabulary::default();
        let sp = SpeakerProfile::sample(&mut RngStream::new(3));
        let a = synthesize("abc", &v, &sp, &mut RngStream::new(9)).unwrap();
        let b = synthesize("abc", &v, &sp, &mut RngStream::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tone_code_is_injective() {
        let set: BTreeSet<_> = TONE_PAIRS.iter().collect();
        assert_eq!(set.len(), TONE_PAIRS.len());
        assert_eq!(TONE_PAIRS.len(), Vocabulary::default().n_chars());
        assert!(TONE_FREQS.iter().all(|f| f * 1.1 * 1.015 < 2000.0));
    }

    #[test]
    fn matched_filter_recovers_clean_transcripts() {
        let corpus = generate(&small(4)).unwrap();
        let mut pairs = Vec::new();
        for u in &corpus.utterances {
            // Regenerate the speaker from the same keyed stream.
            let idx: usize = u.id[5..].parse().unwrap();
            let mut rng = RngStream::keyed(4, &[hash_str("std"), hash_str(u.split.name()), idx as u64]);
            let t = draw_transcript(&mut rng, &corpus.manifest.config.charset(u.split), 3, 10);
            assert_eq!(t, u.transcript);
            let sp = SpeakerProfile::sample(&mut rng);
            let hyp = matched_filter(&u.waveform, u.transcript.len(), sp.base_freq_scale);
            pairs.push(EvalPair::from_text(&u.transcript, &hyp));
        }
        assert_eq!(cer(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let c = generate(&small(1)).unwrap();
        for s in Split::ALL {
            assert_eq!(c.split(s).len(), small(1).sizes.get(s));
        }
        let ids: BTreeSet<_> = c.utterances.iter().map(|u| &u.id).collect();
        assert_eq!(ids.len(), c.utterances.len());
        for u in &c.utterances {
            assert!((3..=10).contains(&u.transcript.len()));
            assert_eq!(u.samples(), utterance_samples(u.transcript.len(), 4000));
        }
    }

    #[test]
    fn written_corpus_round_trips_and_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let c = generate_corpus(&small(2), &a).unwrap();
        generate_corpus(&small(2), &b).unwrap();
        for e in &c.manifest.entries {
            assert_eq!(fs::read(a.join(&e.path)).unwrap(), fs::read(b.join(&e.path)).unwrap());
        }
        assert_eq!(
            fs::read(a.join(MANIFEST_FILE)).unwrap(),
            fs::read(b.join(MANIFEST_FILE)).unwrap()
        );
        let back = load_corpus(&a).unwrap();
        assert_eq!(back.manifest, c.manifest);
        assert_eq!(back.utterances, c.utterances);
        for s in Split::ALL {
            let from_wavs: f64 = back.split(s).iter().map(|u| u.duration_s).sum();
            let listed: f64 = back.manifest.split(s).map(|e| e.duration_s).sum();
            assert!((from_wavs - listed).abs() <= 1.0 / 4000.0);
        }
    }

    #[test]
    fn every_utterance_fits_a_frontend_window() {
        let c = generate(&small(5)).unwrap();
        for u in &c.utterances {
            assert!(u.samples() >= 800);
        }
    }

    #[test]
    fn heterogeneous_charsets_overlap_but_differ() {
        let cfg = CorpusConfig::heterogeneous(0);
        let a: BTreeSet<char> = cfg.charset(Split::Initial).into_iter().collect();
        let b: BTreeSet<char> = cfg.charset(Split::Test).into_iter().collect();
        assert!(a.intersection(&b).count() > 0 && a != b);
        assert_eq!(a.difference(&b).count(), 4);
        assert_eq!(b.difference(&a).count(), 4);
        let c = generate(&CorpusConfig {
            sizes: SplitSizes {
                initial: 20,
                unlabeled: 20,
                test: 200,
            },
            min_len: 10,
            ..cfg
        })
        .unwrap();
        for u in c.split(Split::Initial) {
            assert!(u.transcript.chars().all(|ch| a.contains(&ch)));
        }
        let exclusive: BTreeSet<char> = b.difference(&a).copied().collect();
        let hits = c
            .split(Split::Test)
            .iter()
            .filter(|u| u.transcript.chars().any(|ch| exclusive.contains(&ch)))
            .count();
        // P(miss) = 2^-10 per utterance
        assert!(hits >= 198, "{hits}");
    }

    #[test]
    fn annotation_charges_budget_exactly_once() {
        let c = generate(&small(3)).unwrap();
        let pool = c.split(Split::Unlabeled);
        let mut ledger = BudgetLedger::new(c.manifest.total_samples(Split::Unlabeled));
        let ids: Vec<&str> = pool.iter().take(3).map(|u| u.id.as_str()).collect();
        for id in &ids {
            assert_eq!(
                oracle_annotate(&c, id, &mut ledger).unwrap(),
                c.get(id).unwrap().transcript
            );
        }
        let expect: usize = pool.iter().take(3).map(|u| u.samples()).sum();
        assert_eq!(ledger.spent_samples, expect);
        oracle_annotate(&c, ids[0], &mut ledger).unwrap();
        assert_eq!(ledger.spent_samples, expect);
        assert!(matches!(
            oracle_annotate(&c, "nope", &mut ledger),
            Err(Error::UnknownUtterance(_))
        ));
        let mut tiny = BudgetLedger::new(10);
        assert!(oracle_annotate(&c, ids[1], &mut tiny).is_err());
        assert_eq!(tiny.spent_samples, 0);
    }
}
