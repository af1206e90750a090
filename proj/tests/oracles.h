#ifndef PVITS_TESTS_ORACLES_H_
#define PVITS_TESTS_ORACLES_H_

// Reference computations written independently of the library code paths.

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "pvits/features/spectrogram.h"

namespace pvits::testing {

// Direct DFT magnitude with the documented framing, [T][bins].
inline std::vector<std::vector<double>> NaiveLinear(const std::vector<double>& x,
                                                    const FeatureConfig& c) {
  const int pad_left = (c.fft_size - c.hop_samples) / 2;
  const int pad_right = c.fft_size - c.hop_samples - pad_left;
  const int n = static_cast<int>(x.size());
  std::vector<double> p;
  for (int i = pad_left; i >= 1; --i) p.push_back(x[i]);
  p.insert(p.end(), x.begin(), x.end());
  for (int i = 1; i <= pad_right; ++i) p.push_back(x[n - 1 - i]);
  const int frames = n / c.hop_samples;
  const int offset = (c.fft_size - c.win_samples) / 2;
  std::vector<std::vector<double>> out(frames, std::vector<double>(c.NumBins()));
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < c.NumBins(); ++k) {
      std::complex<double> acc = 0;
      for (int m = 0; m < c.win_samples; ++m) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * m / c.win_samples);
        const int idx = m + offset;
        acc += p[t * c.hop_samples + idx] * w *
               std::polar(1.0, -2.0 * std::numbers::pi * k * idx / c.fft_size);
      }
      out[t][k] = std::abs(acc);
    }
  }
  return out;
}

// Slaney mel scale written out from its definition.
inline double OracleHzToMel(double hz) {
  return hz < 1000.0 ? 3.0 * hz / 200.0 : 15.0 + 27.0 * std::log(hz / 1000.0) / std::log(6.4);
}
inline double OracleMelToHz(double mel) {
  return mel < 15.0 ? 200.0 * mel / 3.0 : 1000.0 * std::pow(6.4, (mel - 15.0) / 27.0);
}

inline std::vector<std::vector<double>> NaiveMelBasis(const FeatureConfig& c) {
  const double top = c.fmax > 0 ? c.fmax : c.sample_rate / 2.0;
  const double lo_mel = OracleHzToMel(c.fmin), hi_mel = OracleHzToMel(top);
  std::vector<std::vector<double>> basis(c.num_mels, std::vector<double>(c.NumBins(), 0.0));
  for (int m = 0; m < c.num_mels; ++m) {
    const double f0 = OracleMelToHz(lo_mel + (hi_mel - lo_mel) * m / (c.num_mels + 1));
    const double f1 = OracleMelToHz(lo_mel + (hi_mel - lo_mel) * (m + 1) / (c.num_mels + 1));
    const double f2 = OracleMelToHz(lo_mel + (hi_mel - lo_mel) * (m + 2) / (c.num_mels + 1));
    for (int k = 0; k < c.NumBins(); ++k) {
      const double f = k * static_cast<double>(c.sample_rate) / c.fft_size;
      double w = 0;
      if (f > f0 && f <= f1) w = (f - f0) / (f1 - f0);
      if (f > f1 && f < f2) w = (f2 - f) / (f2 - f1);
      basis[m][k] = w * 2.0 / (f2 - f0);
    }
  }
  return basis;
}

inline std::vector<std::vector<double>> NaiveLogMel(const std::vector<double>& x,
                                                    const FeatureConfig& c) {
  const auto lin = NaiveLinear(x, c);
  const auto basis = NaiveMelBasis(c);
  std::vector<std::vector<double>> out(lin.size(), std::vector<double>(c.num_mels));
  for (size_t t = 0; t < lin.size(); ++t) {
    for (int m = 0; m < c.num_mels; ++m) {
      double s = 0;
      for (int k = 0; k < c.NumBins(); ++k) s += basis[m][k] * lin[t][k];
      out[t][m] = std::log(std::max(s, c.log_floor));
    }
  }
  return out;
}

// Mean over frames and bands of |log-mel(a) - log-mel(b)|.
inline double NaiveMelL1(const std::vector<double>& a, const std::vector<double>& b,
                         const FeatureConfig& c) {
  const auto ma = NaiveLogMel(a, c), mb = NaiveLogMel(b, c);
  double s = 0;
  for (size_t t = 0; t < ma.size(); ++t) {
    for (int m = 0; m < c.num_mels; ++m) s += std::abs(ma[t][m] - mb[t][m]);
  }
  return s / static_cast<double>(ma.size() * c.num_mels);
}

// RMS over masked frames of log-F0 error plus RMS of voicing error.
inline double BrutePitchLoss(const std::vector<double>& pred_lf0, const std::vector<double>& pred_vuv,
                             const std::vector<double>& lf0, const std::vector<double>& vuv,
                             const std::vector<double>& mask) {
  double a = 0, b = 0, n = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    a += (pred_lf0[i] - lf0[i]) * (pred_lf0[i] - lf0[i]);
    b += (pred_vuv[i] - vuv[i]) * (pred_vuv[i] - vuv[i]);
    n += 1;
  }
  return std::sqrt(a / n) + std::sqrt(b / n);
}

inline std::vector<double> ToVector(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous().view({-1});
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

// Worst relative disagreement between the autograd directional derivative
// and a central difference along |directions| random unit directions.
inline double DirectionalGradientError(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                                       const torch::Tensor& x0, int directions, double eps,
                                       uint64_t seed) {
  auto x = x0.detach().to(torch::kFloat64).clone().requires_grad_(true);
  auto y = f(x);
  auto grad = torch::autograd::grad({y}, {x})[0];
  torch::manual_seed(seed);
  double worst = 0;
  torch::NoGradGuard no_grad;
  for (int d = 0; d < directions; ++d) {
    auto v = torch::randn_like(x);
    v = v / v.norm();
    const double analytic = (grad * v).sum().item<double>();
    const double fd = (f(x + eps * v).item<double>() - f(x - eps * v).item<double>()) / (2 * eps);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(analytic - fd) / denom);
  }
  return worst;
}

}  // namespace pvits::testing

#endif  // PVITS_TESTS_ORACLES_H_
