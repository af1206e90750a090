#include <gtest/gtest.h>
#include <torch/torch.h>

#include <cmath>

#include "oracles.h"
#include "pvits/model/discriminator.h"
#include "pvits/model/losses.h"
#include "test_util.h"

namespace pvits {
namespace {

using testing::ToVector;

torch::Tensor RandomWave(int64_t samples, uint64_t seed, double scale = 0.3) {
  torch::manual_seed(seed);
  return torch::randn({1, samples}, torch::kFloat64) * scale;
}

TEST(MelRecon, IdenticalAndSymmetric) {
  SpectrogramExtractor stft{FeatureConfig{}};
  auto a = RandomWave(1200, 1), b = RandomWave(1200, 2);
  EXPECT_EQ(MelReconLoss(stft, a, a).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(MelReconLoss(stft, a, b).item<double>(), MelReconLoss(stft, b, a).item<double>());
  EXPECT_THROW(MelReconLoss(stft, a, RandomWave(1440, 3)), std::invalid_argument);
}

TEST(MelRecon, SilenceVersusToneMatchesOracle) {
  FeatureConfig c;
  SpectrogramExtractor stft(c);
  auto tone = testing::Tone(220.0, 0.05);
  std::vector<double> t(tone.samples.begin(), tone.samples.end());
  std::vector<double> silence(t.size(), 0.0);
  auto got = MelReconLoss(stft, torch::tensor(silence).unsqueeze(0), torch::tensor(t).unsqueeze(0));
  // float32 feature path against a double oracle
  const double want = testing::NaiveMelL1(silence, t, c);
  EXPECT_NEAR(got.item<double>(), want, 2e-6 * want);
}

TEST(MelRecon, MaskExcludesPaddedFrames) {
  SpectrogramExtractor stft{FeatureConfig{}};
  auto a = RandomWave(2400, 4), b = RandomWave(2400, 5);
  auto mask = torch::zeros({1, 10}, torch::kFloat64);
  mask.narrow(1, 0, 6).fill_(1);
  auto b2 = b.clone();
  b2.narrow(1, 2000, 400).fill_(0.7);  // only touches frames >= 7 (with window overhang)
  EXPECT_NEAR(MelReconLoss(stft, a, b, mask).item<double>(),
              MelReconLoss(stft, a, b2, mask).item<double>(), 1e-12);
}

TEST(MelRecon, FiniteDifferenceGradient) {
  SpectrogramExtractor stft{FeatureConfig{}};
  auto target = RandomWave(1200, 6);
  auto x = RandomWave(1200, 7);
  auto f = [&](const torch::Tensor& g) { return MelReconLoss(stft, g, target); };
  EXPECT_LT(testing::DirectionalGradientError(f, x, 8, 1e-6, 1), 1e-3);
}

TEST(PitchLoss, PerfectPredictionIsZero) {
  auto lf = torch::randn({2, 5}), vuv = (torch::rand({2, 5}) > 0.5).to(torch::kFloat32);
  auto loss = PitchLoss({lf, vuv}, lf, vuv, torch::ones({2, 5}));
  EXPECT_EQ(loss.item<float>(), 0.0f);
}

TEST(PitchLoss, ConstantOffset) {
  auto lf = torch::randn({1, 8}), vuv = torch::ones({1, 8});
  auto loss = PitchLoss({lf + 0.3, vuv}, lf, vuv, torch::ones({1, 8}));
  EXPECT_NEAR(loss.item<float>(), 0.3, 1e-6);
}

TEST(PitchLoss, ThreeFrameOracle) {
  auto plf = torch::tensor({{5.0, 5.2, 4.9}}, torch::kFloat64);
  auto pvv = torch::tensor({{0.9, 0.2, 0.6}}, torch::kFloat64);
  auto lf = torch::tensor({{5.1, 5.0, 5.0}}, torch::kFloat64);
  auto vv = torch::tensor({{1.0, 0.0, 1.0}}, torch::kFloat64);
  auto mask = torch::tensor({{1.0, 1.0, 1.0}}, torch::kFloat64);
  const double expected = std::sqrt((0.01 + 0.04 + 0.01) / 3) + std::sqrt((0.01 + 0.04 + 0.16) / 3);
  EXPECT_NEAR(PitchLoss({plf, pvv}, lf, vv, mask).item<double>(), expected, 1e-12);
  EXPECT_NEAR(expected,
              testing::BrutePitchLoss(ToVector(plf), ToVector(pvv), ToVector(lf), ToVector(vv),
                                      ToVector(mask)),
              1e-12);
}

TEST(PitchLoss, MaskedFramesIgnored) {
  torch::manual_seed(8);
  auto plf = torch::randn({2, 6}, torch::kFloat64), pvv = torch::rand({2, 6}, torch::kFloat64);
  auto lf = torch::randn({2, 6}, torch::kFloat64), vv = torch::rand({2, 6}, torch::kFloat64);
  auto mask = torch::ones({2, 6}, torch::kFloat64);
  mask[1].narrow(0, 3, 3).fill_(0);
  const double got = PitchLoss({plf, pvv}, lf, vv, mask).item<double>();
  EXPECT_NEAR(got, testing::BrutePitchLoss(ToVector(plf), ToVector(pvv), ToVector(lf), ToVector(vv),
                                           ToVector(mask)),
              1e-12);
  plf[1][4] = 100.0;
  EXPECT_EQ(PitchLoss({plf, pvv}, lf, vv, mask).item<double>(), got);
}

TEST(PitchLoss, FiniteDifferenceGradient) {
  torch::manual_seed(9);
  auto lf = torch::randn({1, 12}, torch::kFloat64) * 0.2 + 5;
  auto vv = (torch::rand({1, 12}) > 0.4).to(torch::kFloat64);
  auto mask = torch::ones({1, 12}, torch::kFloat64);
  auto x = torch::cat({lf + torch::randn_like(lf) * 0.1, torch::rand_like(vv)}, 0);
  auto f = [&](const torch::Tensor& p) { return PitchLoss({p[0].unsqueeze(0), p[1].unsqueeze(0)}, lf, vv, mask); };
  EXPECT_LT(testing::DirectionalGradientError(f, x, 8, 1e-6, 2), 1e-3);
}

TEST(DurationLoss, PerfectAndMasked) {
  auto d = torch::tensor({{3, 5, 1, 0}});
  auto mask = torch::tensor({{1.f, 1.f, 1.f, 0.f}});
  auto pred = torch::log1p(d.to(torch::kFloat32));
  EXPECT_EQ(DurationLoss(pred, d, mask).item<float>(), 0.0f);
  pred[0][3] = 50.0f;
  EXPECT_EQ(DurationLoss(pred, d, mask).item<float>(), 0.0f);
  pred[0][0] += 1.0f;
  EXPECT_NEAR(DurationLoss(pred, d, mask).item<float>(), 1.0f / 3.0f, 1e-6);
}

TEST(Adversarial, OptimumAndHalf) {
  std::vector<torch::Tensor> ones = {torch::ones({2, 7}), torch::ones({3})};
  std::vector<torch::Tensor> zeros = {torch::zeros({2, 7}), torch::zeros({3})};
  EXPECT_EQ(DiscriminatorLoss(ones, zeros).item<float>(), 0.0f);
  EXPECT_EQ(GeneratorAdversarialLoss(zeros).item<float>(), 2.0f);  // 1 per sub-discriminator
  std::vector<torch::Tensor> half = {torch::full({4}, 0.5f), torch::full({2, 2}, 0.5f)};
  EXPECT_FLOAT_EQ(DiscriminatorLoss(half, half).item<float>(), 2 * 0.5f);
}

TEST(Adversarial, GeneratorLossDecreasesWithFakeScore) {
  auto f = torch::full({5}, 0.2f, torch::requires_grad());
  auto loss = GeneratorAdversarialLoss({f});
  loss.backward();
  EXPECT_LT(f.grad().max().item<float>(), 0.0f);
  auto r = torch::randn({6}), q = torch::randn({6});
  EXPECT_GE(DiscriminatorLoss({r}, {q}).item<float>(), 0.0f);
  EXPECT_GE(GeneratorAdversarialLoss({q}).item<float>(), 0.0f);
}

TEST(FeatureMatching, IdenticalOffsetAndBruteForce) {
  torch::manual_seed(10);
  std::vector<std::vector<torch::Tensor>> real = {{torch::randn({1, 4, 6}), torch::randn({1, 2, 3})},
                                                  {torch::randn({1, 5})}};
  EXPECT_EQ(FeatureMatchingLoss(real, real).item<float>(), 0.0f);
  auto fake = real;
  fake[0][1] = real[0][1] + 0.5;
  EXPECT_NEAR(FeatureMatchingLoss(real, fake).item<float>(), 0.5, 1e-6);
  for (auto& d : fake) {
    for (auto& m : d) m = m + torch::randn_like(m);
  }
  double sum = 0;
  int maps = 0;
  for (size_t d = 0; d < real.size(); ++d) {
    for (size_t l = 0; l < real[d].size(); ++l) {
      auto a = ToVector(real[d][l]), b = ToVector(fake[d][l]);
      double s = 0;
      for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      sum += s / a.size();
      ++maps;
    }
  }
  EXPECT_EQ(maps, 3);
  EXPECT_NEAR(FeatureMatchingLoss(real, fake).item<double>(), sum, 1e-6 * sum);
}

TEST(FeatureMatching, ToyDiscriminatorBruteForce) {
  ModelConfig m = testing::TinyConfig().model;
  MultiDiscriminator disc(m);
  auto real = disc(torch::randn({1, 960}) * 0.3);
  auto fake = disc(torch::randn({1, 960}) * 0.3);
  EXPECT_EQ(real.logits.size(), disc->num_discriminators());
  double sum = 0;
  int maps = 0;
  for (size_t d = 0; d < real.feature_maps.size(); ++d) {
    for (size_t l = 0; l < real.feature_maps[d].size(); ++l) {
      auto a = ToVector(real.feature_maps[d][l]), b = ToVector(fake.feature_maps[d][l]);
      double s = 0;
      for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      sum += s / a.size();
      ++maps;
    }
  }
  EXPECT_GT(maps, static_cast<int>(real.feature_maps.size()));
  EXPECT_NEAR(FeatureMatchingLoss(real.feature_maps, fake.feature_maps).item<double>(), sum,
              1e-5 * sum);
}

TEST(TotalLoss, WeightedSumIdentity) {
  LossWeights w;
  LossReport unit{1, 1, 1, 1, 1, 1, 0, 0};
  EXPECT_EQ(TotalLoss(unit, w), 51.0);
  EXPECT_EQ(TotalLoss(LossReport{}, w), 0.0);
  LossReport r{0.37, 1.9, 0.2, 0.05, 3.1, 0.7, 0, 0};
  LossReport r2 = r;
  r2.recon *= 2;
  EXPECT_NEAR(TotalLoss(r2, w) - TotalLoss(r, w), 45 * r.recon, 1e-12);
  auto t = [](double v) { return torch::tensor(static_cast<float>(v)); };
  LossTerms terms{t(r.recon), t(r.kl), t(r.pitch), t(r.dur), t(r.adv), t(r.fm)};
  LossReport rf{t(r.recon).item<double>(), t(r.kl).item<double>(), t(r.pitch).item<double>(),
                t(r.dur).item<double>(), t(r.adv).item<double>(), t(r.fm).item<double>(), 0, 0};
  EXPECT_EQ(TotalLoss(terms, w).item<double>(), TotalLoss(rf, w));
}

TEST(TotalLoss, NonFiniteNamed) {
  LossReport r{1, 1, std::nan(""), 1, 1, 1, 0, 0};
  try {
    CheckFinite(r);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("pitch"), std::string::npos);
  }
}

TEST(Discriminator, ShapesAndScaleChannelCheck) {
  ModelConfig m = testing::TinyConfig().model;
  MultiDiscriminator disc(m);
  auto out = disc(torch::randn({2, 1200}));
  EXPECT_EQ(out.logits.size(), 3u);  // scale + periods 2, 3
  for (const auto& l : out.logits) EXPECT_EQ(l.size(0), 2);
  m.disc_channels = 12;
  EXPECT_THROW(m.Validate(240), std::invalid_argument);
}

}  // namespace
}  // namespace pvits
