#include "pvits/text/dataset.h"

#include <algorithm>
#include <stdexcept>

#include "pvits/features/manifest.h"
#include "pvits/features/wav_io.h"

namespace pvits {

torch::Tensor SequenceMask(const torch::Tensor& lengths, int64_t max_len) {
  auto range = torch::arange(max_len, lengths.options().dtype(torch::kInt64));
  return (range.unsqueeze(0) < lengths.to(torch::kInt64).unsqueeze(1))
      .to(torch::kFloat32)
      .unsqueeze(1);
}

Dataset::Dataset(std::vector<Utterance> utterances, NormStats linear_stats, NormStats pitch_stats,
                 VocabSizes vocab, int hop_samples)
    : utterances_(std::move(utterances)),
      linear_stats_(std::move(linear_stats)),
      pitch_stats_(std::move(pitch_stats)),
      vocab_(vocab),
      hop_samples_(hop_samples) {}

Dataset Dataset::Load(const std::filesystem::path& dir, const FeatureConfig& config) {
  const auto entries = ReadManifest(dir / "manifest.txt");
  if (entries.empty()) throw std::runtime_error("dataset manifest in " + dir.string() + " is empty");
  const VocabSizes vocab = LoadVocabSizes(dir);
  std::vector<Utterance> utts;
  utts.reserve(entries.size());
  for (const auto& e : entries) {
    Utterance u;
    u.features = ReadFeatureRecord(FeatureCachePath(dir, e.id));
    const int64_t frames = u.features.num_frames();
    // Preprocess already repaired durations; anything left over is a hard error.
    u.sample = ValidateSample(UtteranceSample::FromManifest(e), frames, vocab).sample;
    Waveform w = LoadWaveform(e.audio, config.sample_rate);
    w.samples.resize(static_cast<size_t>(frames * config.hop_samples), 0.0f);
    u.wave = ToTensor(w);
    utts.push_back(std::move(u));
  }
  return Dataset(std::move(utts), ReadNormStats(dir / "linear_stats.bin"),
                 ReadNormStats(dir / "pitch_stats.bin"), vocab, config.hop_samples);
}

std::vector<int64_t> Dataset::FrameLengths() const {
  std::vector<int64_t> out;
  out.reserve(utterances_.size());
  for (const auto& u : utterances_) out.push_back(u.features.num_frames());
  return out;
}

Batch Dataset::Collate(const BatchIndices& indices) const {
  if (indices.empty()) throw std::invalid_argument("cannot collate an empty batch");
  const auto b = static_cast<int64_t>(indices.size());
  int64_t max_ph = 0, max_t = 0;
  for (size_t i : indices) {
    const auto& u = utterances_.at(i);
    max_ph = std::max<int64_t>(max_ph, static_cast<int64_t>(u.sample.phonemes.size()));
    max_t = std::max<int64_t>(max_t, u.features.num_frames());
  }
  const int64_t bins = utterances_.at(indices.front()).features.linear_spec.size(1);
  Batch batch;
  const auto i64 = torch::TensorOptions().dtype(torch::kInt64);
  batch.phonemes = torch::zeros({b, max_ph}, i64);
  batch.accents = torch::zeros({b, max_ph}, i64);
  batch.durations = torch::zeros({b, max_ph}, i64);
  batch.phoneme_lengths = torch::zeros({b}, i64);
  batch.linear = torch::zeros({b, bins, max_t});
  batch.log_f0 = torch::zeros({b, max_t});
  batch.vuv = torch::zeros({b, max_t});
  batch.frame_lengths = torch::zeros({b}, i64);
  batch.wave = torch::zeros({b, max_t * hop_samples_});
  batch.speakers = torch::zeros({b}, i64);
  batch.emotions = torch::zeros({b}, i64);

  for (int64_t k = 0; k < b; ++k) {
    const auto& u = utterances_.at(indices[k]);
    const auto n = static_cast<int64_t>(u.sample.phonemes.size());
    const int64_t t = u.features.num_frames();
    batch.ids.push_back(u.sample.utterance_id);
    batch.phonemes[k].narrow(0, 0, n).copy_(torch::tensor(u.sample.phonemes, i64));
    batch.accents[k].narrow(0, 0, n).copy_(torch::tensor(u.sample.accents, i64));
    batch.durations[k].narrow(0, 0, n).copy_(torch::tensor(u.sample.durations, i64));
    batch.phoneme_lengths[k] = n;
    batch.linear[k].narrow(1, 0, t).copy_(u.features.linear_spec.transpose(0, 1));
    batch.log_f0[k].narrow(0, 0, t).copy_(torch::tensor(u.features.pitch.log_f0));
    batch.vuv[k].narrow(0, 0, t).copy_(torch::tensor(u.features.pitch.vuv));
    batch.frame_lengths[k] = t;
    batch.wave[k].narrow(0, 0, u.wave.numel()).copy_(u.wave);
    batch.speakers[k] = u.sample.speaker_id;
    batch.emotions[k] = u.sample.emotion_id;
  }
  return batch;
}

}  // namespace pvits
