#ifndef PVITS_TEXT_UTTERANCE_H_
#define PVITS_TEXT_UTTERANCE_H_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvits/features/manifest.h"

namespace pvits {

/// One token per line; the line index is the ID.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}

  static Vocabulary Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  // -1 when absent.
  int IndexOf(const std::string& token) const;

 private:
  std::vector<std::string> tokens_;
};

struct VocabSizes {
  int phonemes = 0;
  int accents = 0;
  int speakers = 0;
  int emotions = 0;
};

// phonemes.txt, accents.txt, speakers.txt, emotions.txt under |dir|.
VocabSizes LoadVocabSizes(const std::filesystem::path& dir);

/// The conditioning input c of one utterance.
struct UtteranceSample {
  std::string utterance_id;
  std::vector<int> phonemes;
  std::vector<int> accents;
  std::vector<int> durations;  // frames per phoneme
  int speaker_id = 0;
  int emotion_id = 0;

  int64_t TotalFrames() const;
  static UtteranceSample FromManifest(const ManifestEntry& entry);
};

class SampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ValidatedSample {
  UtteranceSample sample;
  bool repaired = false;
};

// Checks ID ranges and that durations sum to |num_frames|. A mismatch of one
// frame is absorbed by the final phoneme (and logged); larger mismatches,
// negative durations and out-of-range IDs throw SampleError naming the value.
ValidatedSample ValidateSample(const UtteranceSample& sample, int64_t num_frames,
                               const VocabSizes& vocab);

}  // namespace pvits

#endif  // PVITS_TEXT_UTTERANCE_H_
