#include "pvits/data/preprocess.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>

#include "pvits/features/manifest.h"
#include "pvits/features/normalization.h"
#include "pvits/features/spectrogram.h"
#include "pvits/text/utterance.h"

namespace pvits {

FeatureRecord ExtractFeatures(const std::string& utterance_id, const Waveform& wave,
                              const AppConfig& config) {
  Waveform trimmed = wave;
  const int hop = config.features.hop_samples;
  trimmed.samples.resize(wave.samples.size() / hop * hop);
  FeatureRecord r;
  r.utterance_id = utterance_id;
  r.linear_spec = LinearSpectrogram(trimmed, config.features);
  r.log_mel = LogMelSpectrogram(trimmed, config.features);
  r.pitch = ExtractPitch(trimmed, config.pitch, r.linear_spec.size(0));
  r.CheckAligned();
  return r;
}

PreprocessSummary Preprocess(const std::filesystem::path& manifest,
                             const std::filesystem::path& out_dir, const AppConfig& config) {
  config.Validate();
  auto entries = ReadManifest(manifest);
  if (entries.empty()) throw std::runtime_error("manifest " + manifest.string() + " is empty");
  const auto vocab_dir = manifest.parent_path();
  const VocabSizes vocab = LoadVocabSizes(vocab_dir);
  std::filesystem::create_directories(out_dir);
  for (const char* f : {"phonemes.txt", "accents.txt", "speakers.txt", "emotions.txt"}) {
    std::filesystem::copy_file(vocab_dir / f, out_dir / f,
                               std::filesystem::copy_options::overwrite_existing);
  }

  PreprocessSummary summary;
  std::vector<FeatureRecord> records;
  std::vector<float> voiced_log_f0;
  for (auto& e : entries) {
    const Waveform wave = LoadWaveform(e.audio, config.features.sample_rate);
    FeatureRecord r = ExtractFeatures(e.id, wave, config);
    auto checked = ValidateSample(UtteranceSample::FromManifest(e), r.num_frames(), vocab);
    if (checked.repaired) ++summary.repaired;
    e.durations = checked.sample.durations;
    e.audio = std::filesystem::absolute(e.audio);
    for (size_t t = 0; t < r.pitch.size(); ++t) {
      if (r.pitch.vuv[t] > 0.5f) voiced_log_f0.push_back(r.pitch.log_f0[t]);
    }
    records.push_back(std::move(r));
  }

  if (!voiced_log_f0.empty()) {
    auto mid = voiced_log_f0.begin() + voiced_log_f0.size() / 2;
    std::nth_element(voiced_log_f0.begin(), mid, voiced_log_f0.end());
    summary.median_log_f0 = *mid;
  } else {
    LOG(WARNING) << "corpus has no voiced frames; using the configured fallback F0";
    summary.median_log_f0 = std::log(config.pitch.fallback_f0_hz);
  }

  std::vector<torch::Tensor> linear, log_f0;
  for (auto& r : records) {
    if (r.pitch.all_unvoiced) {
      ++summary.all_unvoiced;
      FillUnvoicedTrack(r.pitch, summary.median_log_f0);
    }
    WriteFeatureRecord(FeatureCachePath(out_dir, r.utterance_id), r);
    linear.push_back(r.linear_spec);
    log_f0.push_back(torch::tensor(r.pitch.log_f0).unsqueeze(1));
  }
  WriteNormStats(out_dir / "linear_stats.bin", ComputeNormStats(linear));
  WriteNormStats(out_dir / "pitch_stats.bin", ComputeNormStats(log_f0));
  WriteManifest(out_dir / "manifest.txt", entries);
  summary.utterances = records.size();
  LOG(INFO) << "preprocessed " << summary.utterances << " utterances into " << out_dir
            << " (" << summary.repaired << " duration repairs, " << summary.all_unvoiced
            << " unvoiced fallbacks)";
  return summary;
}

}  // namespace pvits
