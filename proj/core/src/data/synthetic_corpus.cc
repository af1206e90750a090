#include "pvits/data/synthetic_corpus.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "pvits/text/utterance.h"

namespace pvits {

namespace {

enum class Kind { kSilence, kVowel, kVoiced, kFricative };

struct PhonemeSpec {
  const char* name;
  Kind kind;
  double f1, f2, f3;  // resonance centres (Hz); fricatives use f1 only
  double gain;
};

constexpr PhonemeSpec kPhonemes[] = {
    {"sil", Kind::kSilence, 0, 0, 0, 0.0},
    {"a", Kind::kVowel, 750, 1250, 2600, 1.0},
    {"i", Kind::kVowel, 300, 2300, 3000, 0.8},
    {"u", Kind::kVowel, 350, 900, 2300, 0.8},
    {"e", Kind::kVowel, 500, 1900, 2600, 0.9},
    {"o", Kind::kVowel, 500, 850, 2500, 0.9},
    {"m", Kind::kVoiced, 280, 1100, 2300, 0.35},
    {"n", Kind::kVoiced, 280, 1600, 2600, 0.35},
    {"r", Kind::kVoiced, 450, 1300, 1700, 0.5},
    {"w", Kind::kVoiced, 320, 750, 2200, 0.45},
    {"s", Kind::kFricative, 6000, 0, 0, 0.08},
    {"sh", Kind::kFricative, 3500, 0, 0, 0.08},
    {"f", Kind::kFricative, 8000, 0, 0, 0.05},
};
constexpr int kNumPhonemes = static_cast<int>(std::size(kPhonemes));
constexpr const char* kAccents[] = {"none", "high", "low"};
constexpr double kAccentShift[] = {1.0, 1.12, 0.9};
constexpr const char* kSpeakers[] = {"spk_low", "spk_high", "spk_mid", "spk_deep"};
constexpr double kSpeakerF0[] = {115.0, 220.0, 165.0, 95.0};
constexpr const char* kEmotions[] = {"neutral", "happy", "sad"};
constexpr double kEmotionScale[] = {1.0, 1.18, 0.88};

// Two-pole resonator with unit peak gain near its centre.
struct Resonator {
  double a1 = 0, a2 = 0, b0 = 0, y1 = 0, y2 = 0;
  void Set(double freq, double bandwidth, int fs) {
    const double r = std::exp(-std::numbers::pi * bandwidth / fs);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
    a2 = -r * r;
    b0 = 1.0 - r;
  }
  double Step(double x) {
    const double y = b0 * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

int SyntheticPhonemeCount() { return kNumPhonemes; }

bool SyntheticPhonemeVoiced(int phoneme) {
  const auto k = kPhonemes[phoneme].kind;
  return k == Kind::kVowel || k == Kind::kVoiced;
}

SyntheticUtterance MakeSyntheticUtterance(const SyntheticCorpusConfig& config, int index) {
  if (config.num_speakers < 1 || config.num_speakers > 4 || config.num_emotions < 1 ||
      config.num_emotions > 3 || config.min_phonemes < 1 ||
      config.max_phonemes < config.min_phonemes || config.min_frames < 1 ||
      config.max_frames < config.min_frames) {
    throw std::invalid_argument("invalid synthetic corpus configuration");
  }
  std::mt19937_64 rng(config.seed * 1000003ULL + static_cast<uint64_t>(index));
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticUtterance u;
  auto& e = u.entry;
  char id[32];
  std::snprintf(id, sizeof(id), "syn_%04d", index);
  e.id = id;
  e.audio = std::filesystem::path("wavs") / (e.id + ".wav");
  e.speaker = index % config.num_speakers;
  e.emotion = (index / config.num_speakers) % config.num_emotions;

  // Alternate consonant / vowel between leading and trailing pauses.
  const int n_inner = uniform_int(config.min_phonemes, config.max_phonemes);
  e.phonemes.push_back(0);
  e.accents.push_back(0);
  e.durations.push_back(uniform_int(6, 10));
  for (int i = 0; i < n_inner; ++i) {
    int p = (i % 2 == 1) ? uniform_int(1, 5) : uniform_int(6, kNumPhonemes - 1);
    e.phonemes.push_back(p);
    e.accents.push_back(SyntheticPhonemeVoiced(p) ? uniform_int(0, 2) : 0);
    e.durations.push_back(uniform_int(config.min_frames, config.max_frames));
  }
  e.phonemes.push_back(0);
  e.accents.push_back(0);
  e.durations.push_back(uniform_int(6, 10));

  int total_frames = 0;
  for (int d : e.durations) total_frames += d;
  const int hop = config.hop_samples;
  const int fs = config.sample_rate;
  const int n = total_frames * hop;

  // Frame-level targets, then per-sample smoothing.
  std::vector<double> f0_target(total_frames), gain_target(total_frames);
  std::vector<int> frame_phone(total_frames);
  const double base = kSpeakerF0[e.speaker] * kEmotionScale[e.emotion] *
                      std::exp(0.05 * normal(rng));
  for (int i = 0, t = 0; i < static_cast<int>(e.phonemes.size()); ++i) {
    for (int k = 0; k < e.durations[i]; ++k, ++t) {
      const double decl = 1.05 - 0.12 * t / std::max(1, total_frames - 1);
      f0_target[t] = base * decl * kAccentShift[e.accents[i]];
      gain_target[t] = kPhonemes[e.phonemes[i]].gain;
      frame_phone[t] = e.phonemes[i];
    }
  }
  u.f0_hz.resize(total_frames);
  for (int t = 0; t < total_frames; ++t) {
    u.f0_hz[t] = SyntheticPhonemeVoiced(frame_phone[t]) ? f0_target[t] : 0.0;
  }

  std::vector<double> out(n, 0.0);
  Resonator r1, r2, r3, rf;
  double phase = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double f0_s = f0_target[0];
  double voiced_gain = 0.0, noise_gain = 0.0;
  const double smooth_f0 = 1.0 - std::exp(-1.0 / (0.010 * fs));   // ~10 ms glide
  const double smooth_gain = 1.0 - std::exp(-1.0 / (0.004 * fs)); // ~4 ms ramps
  int last_phone = -1;
  for (int s = 0; s < n; ++s) {
    const int t = s / hop;
    const int p = frame_phone[t];
    const auto& spec = kPhonemes[p];
    if (p != last_phone) {
      if (spec.kind == Kind::kVowel || spec.kind == Kind::kVoiced) {
        r1.Set(spec.f1, 80, fs);
        r2.Set(spec.f2, 100, fs);
        r3.Set(spec.f3, 140, fs);
      } else if (spec.kind == Kind::kFricative) {
        rf.Set(spec.f1, 1500, fs);
      }
      last_phone = p;
    }
    const bool voiced = SyntheticPhonemeVoiced(p);
    f0_s += smooth_f0 * (f0_target[t] - f0_s);
    voiced_gain += smooth_gain * ((voiced ? gain_target[t] : 0.0) - voiced_gain);
    noise_gain += smooth_gain * ((spec.kind == Kind::kFricative ? gain_target[t] : 0.0) -
                                 noise_gain);
    phase += f0_s / fs;
    phase -= std::floor(phase);
    // Band-limited sawtooth-like source, harmonic amplitudes 1/k.
    double src = 0.0;
    const int harmonics = std::min(40, static_cast<int>(0.45 * fs / f0_s));
    for (int k = 1; k <= harmonics; ++k) {
      src += std::sin(2.0 * std::numbers::pi * k * phase) / k;
    }
    const double v = 0.5 * r1.Step(src) + 0.3 * r2.Step(src) + 0.15 * r3.Step(src);
    const double f = rf.Step(normal(rng)) * 4.0;
    out[s] = voiced_gain * v + noise_gain * f + 3e-5 * normal(rng);
  }
  double peak = 1e-9;
  for (double x : out) peak = std::max(peak, std::abs(x));
  u.wave.sample_rate = fs;
  u.wave.samples.resize(n);
  for (int s = 0; s < n; ++s) u.wave.samples[s] = static_cast<float>(0.5 * out[s] / peak);
  return u;
}

std::filesystem::path WriteSyntheticCorpus(const std::filesystem::path& dir,
                                           const SyntheticCorpusConfig& config) {
  std::filesystem::create_directories(dir / "wavs");
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < config.num_utterances; ++i) {
    auto u = MakeSyntheticUtterance(config, i);
    SaveWaveform(dir / u.entry.audio, u.wave);
    entries.push_back(std::move(u.entry));
  }
  std::vector<std::string> phonemes, accents, speakers, emotions;
  for (const auto& p : kPhonemes) phonemes.emplace_back(p.name);
  for (const auto* a : kAccents) accents.emplace_back(a);
  for (int i = 0; i < config.num_speakers; ++i) speakers.emplace_back(kSpeakers[i]);
  for (int i = 0; i < config.num_emotions; ++i) emotions.emplace_back(kEmotions[i]);
  Vocabulary(phonemes).Save(dir / "phonemes.txt");
  Vocabulary(accents).Save(dir / "accents.txt");
  Vocabulary(speakers).Save(dir / "speakers.txt");
  Vocabulary(emotions).Save(dir / "emotions.txt");
  const auto manifest = dir / "manifest.txt";
  WriteManifest(manifest, entries);
  return manifest;
}

}  // namespace pvits
