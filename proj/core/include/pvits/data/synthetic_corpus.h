#ifndef PVITS_DATA_SYNTHETIC_CORPUS_H_
#define PVITS_DATA_SYNTHETIC_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pvits/features/manifest.h"
#include "pvits/features/wav_io.h"

namespace pvits {

// Parametric speech-like corpus with exact phoneme timing: harmonic source
// through formant resonators for vowels and voiced consonants, shaped noise
// for fricatives, near-silence for pauses. Speakers set the base F0,
// emotions scale it and accent tags bend it locally.
struct SyntheticCorpusConfig {
  int num_utterances = 10;
  int num_speakers = 2;   // at most 4
  int num_emotions = 2;   // at most 3
  int min_phonemes = 8;
  int max_phonemes = 16;
  int min_frames = 4;     // per non-silence phoneme
  int max_frames = 12;
  int sample_rate = 24000;
  int hop_samples = 240;
  uint64_t seed = 7;
};

struct SyntheticUtterance {
  ManifestEntry entry;
  Waveform wave;
  std::vector<double> f0_hz;  // per frame, 0 where unvoiced
};

// Phoneme inventory of the generator; 0 is silence.
int SyntheticPhonemeCount();
bool SyntheticPhonemeVoiced(int phoneme);

SyntheticUtterance MakeSyntheticUtterance(const SyntheticCorpusConfig& config, int index);

// Writes <dir>/wavs/*.wav, <dir>/manifest.txt and the vocabulary files.
// Returns the manifest path.
std::filesystem::path WriteSyntheticCorpus(const std::filesystem::path& dir,
                                           const SyntheticCorpusConfig& config);

}  // namespace pvits

#endif  // PVITS_DATA_SYNTHETIC_CORPUS_H_
