#ifndef PVITS_FEATURES_FEATURE_CACHE_H_
#define PVITS_FEATURES_FEATURE_CACHE_H_

#include <torch/torch.h>

#include <filesystem>
#include <stdexcept>
#include <string>

#include "pvits/features/normalization.h"
#include "pvits/features/pitch.h"

namespace pvits {

/// All frame-rate features of one utterance.
struct FeatureRecord {
  std::string utterance_id;
  torch::Tensor linear_spec;  // [T x 513]
  torch::Tensor log_mel;      // [T x 80]
  PitchTrack pitch;

  int64_t num_frames() const { return linear_spec.size(0); }
  // Throws std::runtime_error when the four arrays disagree on T.
  void CheckAligned() const;
};

class FeatureCacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout (little endian):
//   "PVFC" | u32 version | u32 id_len | id bytes | u32 num_arrays
//   per array: u32 name_len | name | u32 rows | u32 cols | f32[rows*cols]
// Arrays: linear_spec, log_mel, log_f0 (rows x 1), vuv (rows x 1).
inline constexpr uint32_t kFeatureCacheVersion = 1;

std::filesystem::path FeatureCachePath(const std::filesystem::path& dir,
                                       const std::string& utterance_id);
void WriteFeatureRecord(const std::filesystem::path& path, const FeatureRecord& record);
FeatureRecord ReadFeatureRecord(const std::filesystem::path& path);

// Two-row [mean; std] matrices, same container format as records.
void WriteNormStats(const std::filesystem::path& path, const NormStats& stats);
NormStats ReadNormStats(const std::filesystem::path& path);

}  // namespace pvits

#endif  // PVITS_FEATURES_FEATURE_CACHE_H_
