#ifndef PVITS_MODEL_PERIOD_VITS_H_
#define PVITS_MODEL_PERIOD_VITS_H_

#include <torch/torch.h>

#include <functional>
#include <optional>

#include "pvits/features/normalization.h"
#include "pvits/features/spectrogram.h"
#include "pvits/model/config.h"
#include "pvits/model/decoder.h"
#include "pvits/model/excitation.h"
#include "pvits/model/losses.h"
#include "pvits/model/posterior_encoder.h"
#include "pvits/model/prior_encoder.h"
#include "pvits/text/dataset.h"

namespace pvits {

// Where the pitch that drives the decoder came from.
enum class PitchSource { kExtracted, kPredicted };

struct RenderTrace {
  PitchSource source;
  torch::Tensor log_f0;  // [B, T] as passed to the excitation
  torch::Tensor vuv;
};

struct PriorPath {
  torch::Tensor text_hidden;    // [B, H, N]
  torch::Tensor phoneme_mask;   // [B, 1, N]
  torch::Tensor log_durations;  // [B, N]
  torch::Tensor durations;      // [B, N] int64, the ones used for expansion
  torch::Tensor frame_mask;     // [B, 1, T]
  FramePriorOutput frame_prior;
  PitchPrediction pitch;
};

struct TrainForwardResult {
  torch::Tensor fake;          // [B, S * hop] generated segment
  torch::Tensor real;          // [B, S * hop] matching ground-truth segment
  torch::Tensor segment_mask;  // [B, S], 1 on frames inside the utterance
  torch::Tensor segment_starts;
  LossTerms terms;             // kl, pitch, dur filled in
};

struct SynthesisOptions {
  double temperature = 0.667;
  double vuv_threshold = 0.5;
  bool zero_phase = true;
};

struct SynthesisResult {
  torch::Tensor wave;        // [B, T * hop], padded beyond frame_lengths
  torch::Tensor frame_lengths;
  torch::Tensor durations;   // [B, N]
  PitchPrediction pitch;     // raw predictor output
  torch::Tensor vuv;         // thresholded flags fed to the excitation
};

// Generator side of the model: conditional embeddings, prior encoder
// (text encoder, duration predictor, frame prior network, pitch predictor,
// flow), posterior encoder and the excitation-driven decoder.
class PeriodVitsImpl : public torch::nn::Module {
 public:
  PeriodVitsImpl(const ModelConfig& model, const FeatureConfig& features);

  const ModelConfig& config() const { return config_; }
  const FeatureConfig& feature_config() const { return features_; }

  // Copies corpus statistics into buffers so checkpoints are self-contained.
  void SetStats(const NormStats& linear, const NormStats& pitch);
  torch::Tensor NormalizeLinear(const torch::Tensor& linear) const;  // [B, F, T]

  torch::Tensor GlobalCondition(const torch::Tensor& speakers, const torch::Tensor& emotions);

  // Text to frame-level prior parameters and pitch, expanding with the given
  // integer durations [B, N].
  PriorPath EncodePrior(const torch::Tensor& phonemes, const torch::Tensor& accents,
                        const torch::Tensor& phoneme_lengths, const torch::Tensor& durations,
                        const torch::Tensor& g, bool predict_durations = false);

  // Posterior z plus extracted pitch drive the decoder on a random segment.
  TrainForwardResult TrainForward(const Batch& batch, int segment_frames, at::Generator gen);

  // The single decoder path shared by training, synthesis and copy-synthesis.
  torch::Tensor Render(const torch::Tensor& z, const torch::Tensor& log_f0,
                       const torch::Tensor& vuv, const torch::Tensor& g, PitchSource source,
                       bool random_phase, std::optional<at::Generator> gen);

  // Prior latent plus predicted pitch.
  SynthesisResult Synthesize(const torch::Tensor& phonemes, const torch::Tensor& accents,
                             const torch::Tensor& phoneme_lengths, const torch::Tensor& speakers,
                             const torch::Tensor& emotions, const SynthesisOptions& options,
                             at::Generator gen);

  // Posterior latent from a raw linear spectrogram [B, F, T] plus the given
  // (extracted) pitch [B, T].
  torch::Tensor CopySynthesize(const torch::Tensor& linear, const torch::Tensor& log_f0,
                               const torch::Tensor& vuv, const torch::Tensor& speakers,
                               const torch::Tensor& emotions, bool zero_phase, at::Generator gen);

  void set_render_observer(std::function<void(const RenderTrace&)> fn) {
    render_observer_ = std::move(fn);
  }

  TextEncoder& text_encoder() { return text_encoder_; }
  DurationPredictor& duration_predictor() { return duration_predictor_; }
  FramePriorNetwork& frame_prior() { return frame_prior_; }
  PitchPredictor& pitch_predictor() { return pitch_predictor_; }
  FlowStack& flow() { return flow_; }
  PosteriorEncoder& posterior_encoder() { return posterior_encoder_; }
  Generator& decoder() { return decoder_; }

 private:
  ModelConfig config_;
  FeatureConfig features_;
  torch::nn::Embedding speaker_emb_{nullptr}, emotion_emb_{nullptr};
  TextEncoder text_encoder_{nullptr};
  DurationPredictor duration_predictor_{nullptr};
  FramePriorNetwork frame_prior_{nullptr};
  PitchPredictor pitch_predictor_{nullptr};
  FlowStack flow_{nullptr};
  PosteriorEncoder posterior_encoder_{nullptr};
  Generator decoder_{nullptr};
  torch::Tensor linear_mean_, linear_std_, log_f0_mean_, log_f0_std_;
  std::function<void(const RenderTrace&)> render_observer_;
};
TORCH_MODULE(PeriodVits);

}  // namespace pvits

#endif  // PVITS_MODEL_PERIOD_VITS_H_
