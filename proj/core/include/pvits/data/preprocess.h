#ifndef PVITS_DATA_PREPROCESS_H_
#define PVITS_DATA_PREPROCESS_H_

#include <filesystem>

#include "pvits/features/feature_cache.h"
#include "pvits/features/wav_io.h"
#include "pvits/model/config.h"

namespace pvits {

struct PreprocessSummary {
  size_t utterances = 0;
  size_t repaired = 0;
  size_t all_unvoiced = 0;
  double median_log_f0 = 0.0;
};

// Features of one waveform: trims to a whole number of frames, then computes
// linear and log-mel spectrograms and the pitch track on shared framing.
FeatureRecord ExtractFeatures(const std::string& utterance_id, const Waveform& wave,
                              const AppConfig& config);

// For every manifest entry (vocabulary files must sit next to the manifest):
// extract features, validate the sample against the frame count, write
// <out>/<id>.feat. Utterances with no voiced frame get the corpus median
// log-F0. Writes <out>/manifest.txt (repaired durations, absolute audio
// paths), the vocabulary files, linear_stats.bin and pitch_stats.bin.
PreprocessSummary Preprocess(const std::filesystem::path& manifest,
                             const std::filesystem::path& out_dir, const AppConfig& config);

}  // namespace pvits

#endif  // PVITS_DATA_PREPROCESS_H_
