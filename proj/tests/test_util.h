#ifndef PVITS_TESTS_TEST_UTIL_H_
#define PVITS_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pvits/features/wav_io.h"
#include "pvits/model/config.h"

namespace pvits::testing {

// Small network on the real framing (24 kHz, hop 240) for fast tests.
inline AppConfig TinyConfig() {
  AppConfig c = AppConfig::Desk();
  auto& m = c.model;
  m.hidden_channels = 32;
  m.latent_channels = 16;
  m.condition_channels = 16;
  m.text_ffn_channels = 64;
  m.duration_channels = 32;
  m.flow_wn_layers = 2;
  m.posterior_layers = 2;
  m.upsample_initial_channels = 32;
  m.disc_channels = 8;
  m.disc_periods = {2, 3};
  c.train.segment_frames = 8;
  c.train.batch_average = 2;
  return c;
}

inline Waveform Tone(double f0, double seconds, double amplitude = 0.5, int fs = 24000) {
  Waveform w;
  w.sample_rate = fs;
  const int n = static_cast<int>(std::lround(seconds * fs));
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    w.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * f0 * i / fs));
  }
  return w;
}

// Band-limited sawtooth.
inline Waveform Sawtooth(double f0, double seconds, double amplitude = 0.4, int fs = 24000) {
  Waveform w;
  w.sample_rate = fs;
  const int n = static_cast<int>(std::lround(seconds * fs));
  const int harmonics = static_cast<int>(0.45 * fs / f0);
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int k = 1; k <= harmonics; ++k) s += std::sin(2.0 * std::numbers::pi * k * f0 * i / fs) / k;
    w.samples[i] = static_cast<float>(amplitude * s * 2.0 / std::numbers::pi);
  }
  return w;
}

inline Waveform WhiteNoise(double seconds, double stddev, uint64_t seed, int fs = 24000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, stddev);
  Waveform w;
  w.sample_rate = fs;
  w.samples.resize(static_cast<size_t>(seconds * fs));
  for (auto& s : w.samples) s = static_cast<float>(n(rng));
  return w;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pvits_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pvits::testing

#endif  // PVITS_TESTS_TEST_UTIL_H_
