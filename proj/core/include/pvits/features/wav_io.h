#ifndef PVITS_FEATURES_WAV_IO_H_
#define PVITS_FEATURES_WAV_IO_H_

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvits {

/// Mono PCM audio scaled to [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 24000;
  int bits_per_sample = 16;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads a RIFF/WAVE 16-bit PCM mono file. Throws WavError naming the
// offending property when the file is missing, not mono, not 16-bit PCM, or
// recorded at a rate other than |expected_rate|. No resampling is done.
Waveform LoadWaveform(const std::filesystem::path& path, int expected_rate);

// Writes 16-bit PCM mono. Samples are clipped to [-1, 1].
void SaveWaveform(const std::filesystem::path& path, const Waveform& wave);

// Encodes a float sample in [-1, 1] the way SaveWaveform does.
int16_t FloatToPcm16(float x);

}  // namespace pvits

#endif  // PVITS_FEATURES_WAV_IO_H_
