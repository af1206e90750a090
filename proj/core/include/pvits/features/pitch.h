#ifndef PVITS_FEATURES_PITCH_H_
#define PVITS_FEATURES_PITCH_H_

#include <cstdint>
#include <span>
#include <vector>

#include "pvits/features/wav_io.h"

namespace pvits {

struct PitchConfig {
  int sample_rate = 24000;
  int hop_samples = 240;
  // Integration window of the difference function, in samples.
  int window_samples = 480;
  double f0_min = 50.0;
  double f0_max = 600.0;
  // First dip of the normalised difference below this is taken as the period.
  double dip_threshold = 0.15;
  // Frames whose best normalised difference exceeds this are unvoiced.
  double voicing_threshold = 0.3;
  // Frames quieter than this RMS are unvoiced.
  double energy_floor = 3e-4;
  int median_width = 5;
  // Used for utterances without a single voiced frame.
  double fallback_f0_hz = 150.0;

  void Validate() const;
};

/// Frame-rate prosody: continuous natural-log F0 and binary voicing.
struct PitchTrack {
  std::vector<float> log_f0;
  std::vector<float> vuv;
  bool all_unvoiced = false;

  size_t size() const { return log_f0.size(); }
  double VoicedFraction() const;
};

// YIN-style estimator: cumulative-mean-normalised difference function with
// parabolic refinement, energy gating and median smoothing, followed by
// MakeContinuous. Frame t is centred on sample t * hop + hop / 2, matching
// SpectrogramExtractor. |num_frames| < 0 means floor(samples / hop).
PitchTrack ExtractPitch(const Waveform& wave, const PitchConfig& config,
                        int64_t num_frames = -1);

// Raw per-frame estimate before smoothing and interpolation; f0 is 0 on
// unvoiced frames.
struct RawPitch {
  std::vector<double> f0_hz;
  std::vector<double> aperiodicity;
};
RawPitch EstimateRawPitch(std::span<const float> samples,
                          const PitchConfig& config, int64_t num_frames);

// Log-F0 interpolated linearly across unvoiced spans and held at the edges.
// Returns an empty vector when no frame is voiced.
std::vector<float> MakeContinuous(std::span<const double> f0_hz,
                                  std::span<const float> vuv);

// Overwrites log_f0 with a constant (the corpus-median fallback).
void FillUnvoicedTrack(PitchTrack& track, double log_f0_value);

}  // namespace pvits

#endif  // PVITS_FEATURES_PITCH_H_
