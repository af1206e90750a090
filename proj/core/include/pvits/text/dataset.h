#ifndef PVITS_TEXT_DATASET_H_
#define PVITS_TEXT_DATASET_H_

#include <torch/torch.h>

#include <filesystem>
#include <string>
#include <vector>

#include "pvits/features/feature_cache.h"
#include "pvits/features/normalization.h"
#include "pvits/features/spectrogram.h"
#include "pvits/text/batching.h"
#include "pvits/text/utterance.h"

namespace pvits {

// [B] lengths -> [B, 1, max_len] float mask, 1 on real positions.
torch::Tensor SequenceMask(const torch::Tensor& lengths, int64_t max_len);

/// Padded mini-batch. Layouts are channels-first as consumed by the model.
struct Batch {
  std::vector<std::string> ids;
  torch::Tensor phonemes;         // [B, N] int64
  torch::Tensor accents;          // [B, N] int64
  torch::Tensor durations;        // [B, N] int64
  torch::Tensor phoneme_lengths;  // [B] int64
  torch::Tensor linear;           // [B, 513, T] raw magnitudes
  torch::Tensor log_f0;           // [B, T]
  torch::Tensor vuv;              // [B, T]
  torch::Tensor frame_lengths;    // [B] int64
  torch::Tensor wave;             // [B, T * hop]
  torch::Tensor speakers;         // [B] int64
  torch::Tensor emotions;         // [B] int64

  int64_t size() const { return static_cast<int64_t>(ids.size()); }
  torch::Tensor PhonemeMask() const { return SequenceMask(phoneme_lengths, phonemes.size(1)); }
  torch::Tensor FrameMask() const { return SequenceMask(frame_lengths, log_f0.size(1)); }
};

struct Utterance {
  UtteranceSample sample;
  FeatureRecord features;
  torch::Tensor wave;  // [T * hop]
};

// Preprocessed corpus held in memory (desk-scale corpora fit comfortably).
class Dataset {
 public:
  // Reads <dir>/manifest.txt, the per-utterance records, the wave files and
  // the normalisation statistics written by Preprocess.
  static Dataset Load(const std::filesystem::path& feature_dir, const FeatureConfig& config);

  Dataset() = default;
  Dataset(std::vector<Utterance> utterances, NormStats linear_stats, NormStats pitch_stats,
          VocabSizes vocab, int hop_samples);

  size_t size() const { return utterances_.size(); }
  const Utterance& at(size_t i) const { return utterances_.at(i); }
  const NormStats& linear_stats() const { return linear_stats_; }
  const NormStats& pitch_stats() const { return pitch_stats_; }
  const VocabSizes& vocab() const { return vocab_; }
  int hop_samples() const { return hop_samples_; }
  std::vector<int64_t> FrameLengths() const;

  Batch Collate(const BatchIndices& indices) const;

 private:
  std::vector<Utterance> utterances_;
  NormStats linear_stats_;
  NormStats pitch_stats_;
  VocabSizes vocab_;
  int hop_samples_ = 240;
};

}  // namespace pvits

#endif  // PVITS_TEXT_DATASET_H_
