#ifndef PVITS_FEATURES_NORMALIZATION_H_
#define PVITS_FEATURES_NORMALIZATION_H_

#include <torch/torch.h>

#include <span>

namespace pvits {

/// Per-dimension mean and standard deviation of [T x D] feature matrices.
struct NormStats {
  torch::Tensor mean;  // [D]
  torch::Tensor std;   // [D], floored at kStdFloor

  static constexpr double kStdFloor = 1e-5;

  int64_t dim() const { return mean.numel(); }

  // x: [..., D]
  torch::Tensor Normalize(const torch::Tensor& x) const;
  torch::Tensor Denormalize(const torch::Tensor& x) const;
};

// Population statistics pooled over all frames of all matrices. Dimensions
// with variance below the floor are warned about and floored.
// Throws std::invalid_argument on an empty collection or mismatched widths.
NormStats ComputeNormStats(std::span<const torch::Tensor> matrices);

}  // namespace pvits

#endif  // PVITS_FEATURES_NORMALIZATION_H_
