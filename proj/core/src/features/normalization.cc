#include "pvits/features/normalization.h"

#include <glog/logging.h>

#include <stdexcept>

namespace pvits {

torch::Tensor NormStats::Normalize(const torch::Tensor& x) const {
  return (x - mean.to(x.dtype())) / std.to(x.dtype());
}

torch::Tensor NormStats::Denormalize(const torch::Tensor& x) const {
  return x * std.to(x.dtype()) + mean.to(x.dtype());
}

NormStats ComputeNormStats(std::span<const torch::Tensor> matrices) {
  if (matrices.empty()) {
    throw std::invalid_argument("cannot compute normalisation stats of an empty collection");
  }
  const int64_t dim = matrices.front().size(1);
  auto sum = torch::zeros({dim}, torch::kFloat64);
  auto sum_sq = torch::zeros({dim}, torch::kFloat64);
  int64_t count = 0;
  for (const auto& m : matrices) {
    if (m.dim() != 2 || m.size(1) != dim) {
      throw std::invalid_argument("feature matrices must share width " + std::to_string(dim));
    }
    auto d = m.to(torch::kFloat64);
    sum += d.sum(0);
    sum_sq += (d * d).sum(0);
    count += m.size(0);
  }
  if (count == 0) throw std::invalid_argument("feature matrices contain no frames");
  auto mean = sum / static_cast<double>(count);
  auto var = (sum_sq / static_cast<double>(count) - mean * mean).clamp_min(0.0);
  auto std = var.sqrt();
  const int64_t floored = (std < NormStats::kStdFloor).sum().item<int64_t>();
  if (floored > 0) {
    LOG(WARNING) << floored << " of " << dim
                 << " feature dimensions have (near-)zero variance; std floored at "
                 << NormStats::kStdFloor;
  }
  std = std.clamp_min(NormStats::kStdFloor);
  return {mean.to(torch::kFloat32), std.to(torch::kFloat32)};
}

}  // namespace pvits
