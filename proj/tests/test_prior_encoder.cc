#include <gtest/gtest.h>
#include <torch/torch.h>

#include <cmath>

#include "pvits/model/prior_encoder.h"
#include "pvits/text/dataset.h"
#include "test_util.h"

namespace pvits {
namespace {

class PriorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(0);
    config_ = testing::TinyConfig().model;
  }
  torch::Tensor G(int64_t b = 1) { return torch::randn({b, config_.condition_channels, 1}); }
  ModelConfig config_;
};

TEST_F(PriorTest, TextEncoderShape) {
  TextEncoder enc(config_);
  enc->eval();
  auto ph = torch::randint(config_.num_phonemes, {2, 7}, torch::kInt64);
  auto ac = torch::randint(config_.num_accents, {2, 7}, torch::kInt64);
  auto mask = SequenceMask(torch::tensor({7, 4}), 7);
  auto h = enc(ph, ac, mask, G(2));
  EXPECT_EQ(h.sizes(), (torch::IntArrayRef{2, config_.hidden_channels, 7}));
}

TEST_F(PriorTest, TextEncoderSpeakerSensitivity) {
  TextEncoder enc(config_);
  enc->eval();
  auto ph = torch::randint(config_.num_phonemes, {1, 6}, torch::kInt64);
  auto ac = torch::zeros({1, 6}, torch::kInt64);
  auto mask = torch::ones({1, 1, 6});
  auto a = enc(ph, ac, mask, G());
  auto b = enc(ph, ac, mask, G());
  EXPECT_GT((a - b).abs().max().item<float>(), 1e-4);
}

TEST_F(PriorTest, TextEncoderPaddingNeutral) {
  TextEncoder enc(config_);
  enc->eval();
  auto ph = torch::randint(config_.num_phonemes, {1, 5}, torch::kInt64);
  auto ac = torch::randint(config_.num_accents, {1, 5}, torch::kInt64);
  auto g = G();
  auto ref = enc(ph, ac, torch::ones({1, 1, 5}), g);
  auto mask = SequenceMask(torch::tensor({5}), 9);
  for (int trial = 0; trial < 2; ++trial) {
    auto tail_ph = torch::randint(config_.num_phonemes, {1, 4}, torch::kInt64);
    auto tail_ac = torch::randint(config_.num_accents, {1, 4}, torch::kInt64);
    auto out = enc(torch::cat({ph, tail_ph}, 1), torch::cat({ac, tail_ac}, 1), mask, g);
    EXPECT_LT((out.narrow(2, 0, 5) - ref).abs().max().item<float>(), 1e-5);
  }
}

TEST_F(PriorTest, DurationTargetsAndRounding) {
  EXPECT_EQ(DurationTarget(torch::tensor({0}))[0].item<float>(), 0.0f);
  auto d = torch::tensor({3, 5});
  EXPECT_TRUE(torch::allclose(DurationTarget(d), torch::log(torch::tensor({4.f, 6.f}))));
  auto log_d = torch::tensor({{-5.0f, 0.1f, std::log(6.0f), 2.0f}});
  auto mask = SequenceMask(torch::tensor({3}), 4);
  auto frames = DurationsFromPrediction(log_d, mask);
  EXPECT_TRUE(torch::equal(frames, torch::tensor({{1, 1, 5, 0}})));
}

TEST_F(PriorTest, DurationPredictorDetachesInput) {
  DurationPredictor dp(config_);
  auto h = torch::randn({1, config_.hidden_channels, 4}, torch::requires_grad());
  auto out = dp(h, torch::ones({1, 1, 4}), G());
  EXPECT_EQ(out.sizes(), (torch::IntArrayRef{1, 4}));
  out.sum().backward();
  EXPECT_FALSE(h.grad().defined() && h.grad().abs().sum().item<float>() > 0);
}

TEST_F(PriorTest, ExpandRepeatsRows) {
  auto h = torch::tensor({{{1.f, 2.f}}});  // [1, 1, 2]: rows a=1, b=2
  auto e = ExpandToFrames(h, torch::tensor({{2, 3}}));
  EXPECT_TRUE(torch::equal(e.frames, torch::tensor({{{1.f, 1.f, 2.f, 2.f, 2.f}}})));
  EXPECT_EQ(e.frame_lengths[0].item<int64_t>(), 5);
  auto x = torch::randn({1, 3, 4});
  EXPECT_TRUE(torch::equal(ExpandToFrames(x, torch::ones({1, 4}, torch::kInt64)).frames, x));
  EXPECT_THROW(ExpandToFrames(x, torch::zeros({1, 4}, torch::kInt64)), std::invalid_argument);
}

TEST_F(PriorTest, ExpandBatchPadsWithZeros) {
  auto h = torch::randn({2, 3, 2});
  auto e = ExpandToFrames(h, torch::tensor({{1, 1}, {2, 2}}));
  EXPECT_EQ(e.frames.size(2), 4);
  EXPECT_TRUE(torch::equal(e.frame_lengths, torch::tensor({2, 4})));
  EXPECT_EQ(e.frames[0].narrow(1, 2, 2).abs().sum().item<float>(), 0.0f);
}

TEST_F(PriorTest, FramePriorShapesAndReceptiveField) {
  FramePriorNetwork net(config_);
  net->eval();
  const int64_t t = 80;
  auto x = torch::randn({1, config_.hidden_channels, t});
  auto mask = torch::ones({1, 1, t});
  auto out = net(x, mask);
  EXPECT_EQ(out.params.mu.sizes(), (torch::IntArrayRef{1, config_.latent_channels, t}));
  EXPECT_EQ(out.pitch_features.size(2), t);
  EXPECT_GT(torch::exp(out.params.log_sigma).min().item<float>(), 0.0f);
  auto x2 = x.clone();
  x2.select(2, 0) += 1.0;
  auto out2 = net(x2, mask);
  auto diff = (out2.params.mu - out.params.mu).abs().amax(1)[0];
  EXPECT_GT(diff[48].item<float>(), 0.0f);
  EXPECT_EQ(diff.narrow(0, 49, t - 49).max().item<float>(), 0.0f);
}

TEST_F(PriorTest, PitchPredictorModesAndStats) {
  PitchPredictor pp(config_);
  pp->SetStats(5.0, 0.2);
  auto f = torch::randn({1, config_.hidden_channels, 20});
  auto mask = torch::ones({1, 1, 20});
  auto g = G();
  pp->eval();
  auto a = pp(f, mask, g), b = pp(f, mask, g);
  EXPECT_TRUE(torch::equal(a.log_f0, b.log_f0));
  EXPECT_GE(a.vuv.min().item<float>(), 0.0f);
  EXPECT_LE(a.vuv.max().item<float>(), 1.0f);
  pp->train();
  auto c = pp(f, mask, g), d = pp(f, mask, g);
  EXPECT_FALSE(torch::equal(c.log_f0, d.log_f0));
  pp->eval();
  auto e = pp(f, mask, G());
  EXPECT_FALSE(torch::equal(a.log_f0, e.log_f0));
}

TEST_F(PriorTest, FlowIdentityAtInit) {
  FlowStack flow(config_);
  auto z = torch::randn({2, config_.latent_channels, 30});
  auto mask = torch::ones({2, 1, 30});
  auto r = flow(z, mask, G(2));
  EXPECT_EQ(r.log_det.abs().max().item<float>(), 0.0f);
}

void Randomise(FlowStack& flow) {
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < flow->num_steps(); ++i) {
    auto& post = flow->step(i)->post();
    post->weight.normal_(0.0, 0.05);
    post->bias.normal_(0.0, 0.05);
  }
}

TEST_F(PriorTest, FlowRoundTripAndAdditivity) {
  FlowStack flow(config_);
  Randomise(flow);
  flow->eval();
  auto g = G(1);
  auto mask = SequenceMask(torch::tensor({25}), 30);
  for (int i = 0; i < 10; ++i) {
    auto z = torch::randn({1, config_.latent_channels, 30}) * mask;
    auto r = flow(z, mask, g);
    EXPECT_GT(r.log_det.abs().item<float>(), 0.0f);
    auto back = flow->inverse(r.z, mask, g);
    EXPECT_LT((back - z).abs().max().item<float>(), 1e-4);
    // Sum of single-step log-dets.
    auto x = z;
    auto total = torch::zeros({1});
    for (size_t k = 0; k < flow->num_steps(); ++k) {
      auto s = flow->step(k)(x, mask, g);
      total = total + s.log_det;
      x = s.z;
    }
    EXPECT_NEAR(total.item<double>(), r.log_det.item<double>(), 1e-6 * (1 + std::abs(total.item<double>())));
  }
}

TEST_F(PriorTest, FlowRejectsNonFinite) {
  FlowStack flow(config_);
  auto z = torch::randn({1, config_.latent_channels, 4});
  z[0][0][0] = std::nan("");
  EXPECT_THROW(flow(z, torch::ones({1, 1, 4}), G()), std::exception);
}

TEST(Kl, IdenticalGaussiansZero) {
  torch::manual_seed(1);
  GaussianParams q{torch::randn({2, 4, 6}), torch::randn({2, 4, 6}) * 0.3};
  EXPECT_NEAR(AnalyticGaussianKl(q, q, torch::ones({2, 1, 6})).item<double>(), 0.0, 1e-6);
}

TEST(Kl, StandardVersusWideGaussian) {
  GaussianParams q{torch::zeros({1, 3, 5}), torch::zeros({1, 3, 5})};
  GaussianParams p{torch::zeros({1, 3, 5}), torch::ones({1, 3, 5})};  // sigma = e
  const double expected = 1.0 + std::exp(-2.0) / 2.0 - 0.5;
  EXPECT_NEAR(AnalyticGaussianKl(q, p, torch::ones({1, 1, 5})).item<double>(), expected, 1e-6);
}

TEST(Kl, ClosedFormPerElement) {
  torch::manual_seed(2);
  GaussianParams q{torch::randn({1, 2, 3}), torch::randn({1, 2, 3}) * 0.5};
  GaussianParams p{torch::randn({1, 2, 3}), torch::randn({1, 2, 3}) * 0.5};
  double sum = 0;
  for (int c = 0; c < 2; ++c) {
    for (int t = 0; t < 3; ++t) {
      const double mq = q.mu[0][c][t].item<double>(), sq = std::exp(q.log_sigma[0][c][t].item<double>());
      const double mp = p.mu[0][c][t].item<double>(), sp = std::exp(p.log_sigma[0][c][t].item<double>());
      sum += std::log(sp / sq) + (sq * sq + (mq - mp) * (mq - mp)) / (2 * sp * sp) - 0.5;
    }
  }
  EXPECT_NEAR(AnalyticGaussianKl(q, p, torch::ones({1, 1, 3})).item<double>(), sum / 6, 1e-6);
}

TEST(Kl, MaskedFramesContributeNothing) {
  torch::manual_seed(3);
  GaussianParams q{torch::randn({1, 2, 6}), torch::randn({1, 2, 6})};
  GaussianParams p{torch::randn({1, 2, 6}), torch::randn({1, 2, 6})};
  auto mask = SequenceMask(torch::tensor({4}), 6);
  auto a = AnalyticGaussianKl(q, p, mask);
  GaussianParams q2{q.mu.clone(), q.log_sigma.clone()};
  q2.mu.narrow(2, 4, 2).fill_(100.0);
  EXPECT_EQ(a.item<double>(), AnalyticGaussianKl(q2, p, mask).item<double>());
  auto z = torch::randn({1, 2, 6});
  auto z2 = z.clone();
  z2.narrow(2, 4, 2).fill_(1e3);
  auto ld = torch::zeros({1});
  EXPECT_EQ(PriorKl(z, q.log_sigma, p, ld, mask).item<double>(),
            PriorKl(z2, q.log_sigma, p, ld, mask).item<double>());
  EXPECT_THROW(AnalyticGaussianKl(q, p, torch::zeros({1, 1, 6})), std::invalid_argument);
}

TEST(Kl, SampledEstimateMatchesAnalyticForIdentityFlow) {
  torch::manual_seed(4);
  GaussianParams q{torch::randn({1, 4, 8}) * 0.5, torch::randn({1, 4, 8}) * 0.2};
  GaussianParams p{torch::randn({1, 4, 8}) * 0.5, torch::randn({1, 4, 8}) * 0.2};
  auto mask = torch::ones({1, 1, 8});
  const int n = 20000;
  auto z = q.mu + torch::exp(q.log_sigma) * torch::randn({n, 4, 8});
  GaussianParams pn{p.mu.expand({n, 4, 8}), p.log_sigma.expand({n, 4, 8})};
  auto est = PriorKl(z, q.log_sigma.expand({n, 4, 8}), pn, torch::zeros({n}),
                     torch::ones({n, 1, 8}));
  EXPECT_NEAR(est.item<double>(), AnalyticGaussianKl(q, p, mask).item<double>(), 0.01);
}

}  // namespace
}  // namespace pvits
