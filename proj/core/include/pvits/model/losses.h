#ifndef PVITS_MODEL_LOSSES_H_
#define PVITS_MODEL_LOSSES_H_

#include <torch/torch.h>

#include <string>
#include <vector>

#include "pvits/features/spectrogram.h"
#include "pvits/model/config.h"
#include "pvits/model/discriminator.h"
#include "pvits/model/prior_encoder.h"

namespace pvits {

// Mean absolute difference of log-mel spectrograms of two [B, L] segments.
// |frame_mask| [B, T] (optional) excludes padded frames.
torch::Tensor MelReconLoss(const SpectrogramExtractor& stft, const torch::Tensor& generated,
                           const torch::Tensor& target, const torch::Tensor& frame_mask = {});

// Root-mean-square error over unmasked frames for log-F0 plus the same for
// voicing. mask [B, T]. Zero exactly when the prediction is exact.
torch::Tensor PitchLoss(const PitchPrediction& pred, const torch::Tensor& log_f0,
                        const torch::Tensor& vuv, const torch::Tensor& mask);

// Masked mean-squared error between predicted log durations and
// log(1 + frames). mask [B, N].
torch::Tensor DurationLoss(const torch::Tensor& log_durations, const torch::Tensor& durations,
                           const torch::Tensor& mask);

// Least-squares GAN objectives: per sub-discriminator the element mean,
// summed over sub-discriminators.
torch::Tensor DiscriminatorLoss(const std::vector<torch::Tensor>& real_logits,
                                const std::vector<torch::Tensor>& fake_logits);
torch::Tensor GeneratorAdversarialLoss(const std::vector<torch::Tensor>& fake_logits);

// Sum over all (sub-discriminator, layer) feature maps of the element-mean
// absolute difference. Real maps are treated as constants.
torch::Tensor FeatureMatchingLoss(const std::vector<std::vector<torch::Tensor>>& real,
                                  const std::vector<std::vector<torch::Tensor>>& fake);

/// Scalar values of one training step.
struct LossReport {
  double recon = 0, kl = 0, pitch = 0, dur = 0, adv = 0, fm = 0;
  double total = 0;
  double disc = 0;
};

struct LossTerms {
  torch::Tensor recon, kl, pitch, dur, adv, fm;
};

// Weighted sum accumulated in the fixed order recon, kl, pitch, dur, adv, fm,
// in double precision.
torch::Tensor TotalLoss(const LossTerms& terms, const LossWeights& weights);
double TotalLoss(const LossReport& report, const LossWeights& weights);

// Throws std::runtime_error naming the first non-finite component.
void CheckFinite(const LossReport& report);

}  // namespace pvits

#endif  // PVITS_MODEL_LOSSES_H_
