#ifndef PVITS_MODEL_PRIOR_ENCODER_H_
#define PVITS_MODEL_PRIOR_ENCODER_H_

#include <torch/torch.h>

#include <vector>

#include "pvits/model/config.h"
#include "pvits/model/layers.h"

namespace pvits {

/// Frame-level Gaussian parameters, [B, D_z, T] each.
struct GaussianParams {
  torch::Tensor mu;
  torch::Tensor log_sigma;
};
using PriorParams = GaussianParams;

/// Frame-level prosody prediction, [B, T] each.
struct PitchPrediction {
  torch::Tensor log_f0;
  torch::Tensor vuv;  // in [0, 1]
};

// Phoneme + accent embeddings (summed), global condition, then masked
// self-attention blocks.
class TextEncoderImpl : public torch::nn::Module {
 public:
  explicit TextEncoderImpl(const ModelConfig& config);
  // phonemes/accents [B, N] int64, mask [B, 1, N], g [B, G, 1] -> [B, H, N]
  torch::Tensor forward(const torch::Tensor& phonemes, const torch::Tensor& accents,
                        const torch::Tensor& mask, const torch::Tensor& g);

 private:
  int64_t hidden_;
  torch::nn::Embedding phoneme_emb_{nullptr}, accent_emb_{nullptr};
  torch::nn::Conv1d cond_{nullptr};
  torch::nn::ModuleList attn_{nullptr}, ffn_{nullptr}, norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(TextEncoder);

// Predicts log(1 + frames) per phoneme from the (detached) phoneme hidden.
class DurationPredictorImpl : public torch::nn::Module {
 public:
  explicit DurationPredictorImpl(const ModelConfig& config);
  // -> [B, N]
  torch::Tensor forward(const torch::Tensor& hidden, const torch::Tensor& mask,
                        const torch::Tensor& g);

 private:
  torch::nn::Conv1d conv1_{nullptr}, conv2_{nullptr}, proj_{nullptr}, cond_{nullptr};
  ChannelLayerNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(DurationPredictor);

// Training target for the duration predictor.
torch::Tensor DurationTarget(const torch::Tensor& durations);
// Inference rounding: max(1, round(exp(pred) - 1)) on real phonemes, 0 on padding.
torch::Tensor DurationsFromPrediction(const torch::Tensor& log_durations,
                                      const torch::Tensor& mask);

struct ExpandedFrames {
  torch::Tensor frames;         // [B, H, T]
  torch::Tensor frame_lengths;  // [B]
};
// Repeats phoneme row n durations[n] times. Throws std::invalid_argument if
// any utterance has zero total duration.
ExpandedFrames ExpandToFrames(const torch::Tensor& hidden, const torch::Tensor& durations);

struct FramePriorOutput {
  PriorParams params;
  torch::Tensor pitch_features;  // hidden after the tap stack, [B, H, T]
};

// Residual convolution stacks over the length-regulated hidden states.
class FramePriorNetworkImpl : public torch::nn::Module {
 public:
  explicit FramePriorNetworkImpl(const ModelConfig& config);
  FramePriorOutput forward(const torch::Tensor& frames, const torch::Tensor& mask);

 private:
  int64_t latent_;
  int tap_;
  torch::nn::ModuleList convs_{nullptr}, norms_{nullptr};
  torch::nn::Conv1d proj_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(FramePriorNetwork);

// Five-layer convolutional head predicting log-F0 and voicing, conditioned on
// speaker/emotion. Log-F0 is predicted in normalised units and mapped back
// with the corpus statistics held in buffers.
class PitchPredictorImpl : public torch::nn::Module {
 public:
  explicit PitchPredictorImpl(const ModelConfig& config);
  PitchPrediction forward(const torch::Tensor& features, const torch::Tensor& mask,
                          const torch::Tensor& g);
  void SetStats(double log_f0_mean, double log_f0_std);

 private:
  torch::nn::ModuleList convs_{nullptr}, norms_{nullptr};
  torch::nn::Conv1d cond_{nullptr}, proj_{nullptr};
  torch::nn::Dropout drop_{nullptr};
  torch::Tensor log_f0_mean_, log_f0_std_;
};
TORCH_MODULE(PitchPredictor);

struct FlowResult {
  torch::Tensor z;        // [B, D_z, T]
  torch::Tensor log_det;  // [B]
};

// Affine coupling on a channel split: the first half conditions a scale and
// shift for the second half; channels are then reversed. The output
// projection starts at zero, so a fresh step is the identity up to the flip.
class AffineCouplingImpl : public torch::nn::Module {
 public:
  AffineCouplingImpl(int64_t channels, int64_t hidden, int64_t kernel, int64_t wn_layers,
                     int64_t condition_channels);
  FlowResult forward(const torch::Tensor& x, const torch::Tensor& mask, const torch::Tensor& g);
  torch::Tensor inverse(const torch::Tensor& y, const torch::Tensor& mask, const torch::Tensor& g);
  torch::nn::Conv1d& post() { return post_; }

 private:
  std::pair<torch::Tensor, torch::Tensor> Stats(const torch::Tensor& x0, const torch::Tensor& mask,
                                                const torch::Tensor& g);
  int64_t half_;
  torch::nn::Conv1d pre_{nullptr}, post_{nullptr};
  WaveNet enc_{nullptr};
};
TORCH_MODULE(AffineCoupling);

class FlowStackImpl : public torch::nn::Module {
 public:
  explicit FlowStackImpl(const ModelConfig& config);
  FlowResult forward(const torch::Tensor& z, const torch::Tensor& mask, const torch::Tensor& g);
  torch::Tensor inverse(const torch::Tensor& u, const torch::Tensor& mask, const torch::Tensor& g);
  size_t num_steps() const { return steps_.size(); }
  AffineCoupling& step(size_t i) { return steps_[i]; }

 private:
  std::vector<AffineCoupling> steps_;
};
TORCH_MODULE(FlowStack);

// Single-sample estimate of KL(q(z|x) || p(z|c)) with the flow-augmented
// prior density, per unmasked element:
//   log q(z) - log N(f(z); mu_p, sigma_p) - log_det / (frames * D_z)
// where log q(z) uses the closed-form entropy of q. Averaged over unmasked
// frames and latent dims. Throws std::invalid_argument if mask is all zero.
torch::Tensor PriorKl(const torch::Tensor& flowed_z, const torch::Tensor& log_sigma_q,
                      const PriorParams& prior, const torch::Tensor& log_det,
                      const torch::Tensor& mask);

// Closed-form KL(N(mu_q, sigma_q) || N(mu_p, sigma_p)) averaged over unmasked
// elements. Valid as the prior KL only for an identity flow.
torch::Tensor AnalyticGaussianKl(const GaussianParams& q, const GaussianParams& p,
                                 const torch::Tensor& mask);

}  // namespace pvits

#endif  // PVITS_MODEL_PRIOR_ENCODER_H_
