#ifndef PVITS_EVAL_SYNTHESIZER_H_
#define PVITS_EVAL_SYNTHESIZER_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pvits/features/pitch.h"
#include "pvits/features/wav_io.h"
#include "pvits/model/config.h"
#include "pvits/model/period_vits.h"

namespace pvits {

struct SynthesisOutput {
  Waveform wave;
  std::vector<int64_t> durations;
  PitchTrack predicted;  // predicted log-F0 and the thresholded voicing
};

// Inference front end over a trained generator. Both entry points end in
// PeriodVitsImpl::Render.
class Synthesizer {
 public:
  // Rebuilds the network from the config stored in the checkpoint.
  static Synthesizer FromCheckpoint(const std::filesystem::path& path);
  Synthesizer(AppConfig config, PeriodVits model);

  const AppConfig& config() const { return config_; }
  PeriodVits& model() { return model_; }

  // Throws std::invalid_argument on out-of-range IDs or mismatched lengths.
  SynthesisOutput Synthesize(const std::vector<int64_t>& phonemes,
                             const std::vector<int64_t>& accents, int64_t speaker,
                             int64_t emotion, const SynthesisOptions& options, uint64_t seed);

  // Posterior latent of |wave| plus its extracted pitch. Output is a whole
  // number of frames, so at most hop - 1 samples shorter than the input.
  Waveform CopySynthesize(const Waveform& wave, int64_t speaker, int64_t emotion, uint64_t seed,
                          bool zero_phase = true);

 private:
  void CheckSpeaker(int64_t speaker, int64_t emotion) const;

  AppConfig config_;
  PeriodVits model_;
};

Waveform TensorToWaveform(const torch::Tensor& samples, int sample_rate);

}  // namespace pvits

#endif  // PVITS_EVAL_SYNTHESIZER_H_
