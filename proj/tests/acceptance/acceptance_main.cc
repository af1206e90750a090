// Acceptance probes. One PASS/FAIL line per criterion; exit status is the
// number of failures. Pass criterion numbers as arguments to run a subset.
// PVITS_PROBE_STEPS overrides the overfit probe length, PVITS_PROBE_DIR keeps
// its artefacts.

#include <torch/torch.h>

#include <ATen/CPUGeneratorImpl.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "pvits/data/preprocess.h"
#include "pvits/data/synthetic_corpus.h"
#include "pvits/eval/pitch_stability.h"
#include "pvits/eval/synthesizer.h"
#include "pvits/features/pitch.h"
#include "pvits/model/decoder.h"
#include "pvits/model/excitation.h"
#include "pvits/model/losses.h"
#include "pvits/model/prior_encoder.h"
#include "pvits/text/dataset.h"
#include "pvits/train/trainer.h"
#include "test_util.h"

namespace pvits {
namespace {

using Detail = std::ostringstream;

int64_t DominantLag(const torch::Tensor& x, int64_t min_lag, int64_t max_lag) {
  auto v = x.to(torch::kFloat64);
  v = v - v.mean();
  double best = -1e300;
  int64_t arg = -1;
  const int64_t n = v.numel();
  for (int64_t lag = min_lag; lag <= max_lag; ++lag) {
    const double r = (v.narrow(0, 0, n - lag) * v.narrow(0, lag, n - lag)).sum().item<double>() /
                     static_cast<double>(n - lag);
    if (r > best) best = r, arg = lag;
  }
  return arg;
}

// ---- 1 ----
bool StructuralIdentities(Detail& d) {
  bool ok = true;
  const auto desk = AppConfig::Desk().model;
  ok &= desk.UpsampleProduct() == 240;
  d << "upsample product " << desk.UpsampleProduct();

  Generator gen(testing::TinyConfig().model);
  torch::NoGradGuard no_grad;
  int bad_t = 0;
  for (int64_t t = 1; t <= 50; ++t) {
    auto hidden = gen->HiddenLengths(t);
    auto feats = gen->downsample()->forward(torch::zeros({1, 3, t * 240}));
    if (feats.size() != hidden.size()) {
      ++bad_t;
      continue;
    }
    for (size_t i = 0; i < hidden.size(); ++i) {
      if (feats[feats.size() - 1 - i].size(2) != hidden[i]) {
        ++bad_t;
        break;
      }
    }
  }
  ok &= bad_t == 0;
  d << "; stage length mismatches over T=1..50: " << bad_t;

  torch::manual_seed(11);
  auto vuv = (torch::rand({2, 37}) > 0.5).to(torch::kFloat);
  auto up = UpsampleVuv(vuv, 240);
  auto expect = vuv.unsqueeze(2).expand({2, 37, 240}).reshape({2, 37 * 240});
  const bool nn_ok = torch::equal(up, expect);
  ok &= nn_ok;
  d << "; vuv upsampling exact " << nn_ok;

  const double total = TotalLoss(LossReport{1, 1, 1, 1, 1, 1, 0, 0}, LossWeights{});
  ok &= total == 51.0;
  d << "; weighted unit sum " << total;
  return ok;
}

// ---- 2 ----
bool FlowInvertibility(Detail& d) {
  torch::manual_seed(21);
  auto m = AppConfig::Desk().model;
  FlowStack flow(m);
  {
    torch::NoGradGuard no_grad;
    for (size_t i = 0; i < flow->num_steps(); ++i) {
      flow->step(i)->post()->weight.normal_(0.0, 0.05);
      flow->step(i)->post()->bias.normal_(0.0, 0.05);
    }
  }
  flow->eval();
  torch::NoGradGuard no_grad;
  double worst_rt = 0, worst_ld = 0, min_ld = 1e300;
  for (int i = 0; i < 100; ++i) {
    const int64_t t = 10 + i % 41;
    auto mask = SequenceMask(torch::tensor({t - i % 5}), t);
    auto g = torch::randn({1, m.condition_channels, 1});
    auto z = torch::randn({1, m.latent_channels, t}) * mask;
    auto r = flow(z, mask, g);
    worst_rt = std::max(worst_rt, (flow->inverse(r.z, mask, g) - z).abs().max().item<double>());
    auto x = z;
    auto sum = torch::zeros({1});
    for (size_t k = 0; k < flow->num_steps(); ++k) {
      auto s = flow->step(k)(x, mask, g);
      sum = sum + s.log_det;
      x = s.z;
    }
    const double ld = r.log_det.item<double>();
    min_ld = std::min(min_ld, std::abs(ld));
    worst_ld = std::max(worst_ld, std::abs(sum.item<double>() - ld) / (1.0 + std::abs(ld)));
  }
  d << "max round trip error " << worst_rt << "; max log-det additivity error " << worst_ld
    << "; min |log det| " << min_ld;
  return worst_rt < 1e-4 && worst_ld < 1e-6 && min_ld > 0;
}

// ---- 3 ----
bool KlOracle(Detail& d) {
  bool ok = true;
  auto m = AppConfig::Desk().model;
  FlowStack flow(m);
  auto z = torch::randn({1, m.latent_channels, 7});
  auto mask = torch::ones({1, 1, 7});
  auto r = flow(z, mask, torch::zeros({1, m.condition_channels, 1}));
  const bool identity = torch::equal(r.z, z) && r.log_det.abs().max().item<double>() == 0.0;
  ok &= identity;
  d << "flow identity at init " << identity;

  GaussianParams q{torch::zeros({1, 3, 5}), torch::zeros({1, 3, 5})};
  GaussianParams p{torch::zeros({1, 3, 5}), torch::ones({1, 3, 5})};
  const double worked = AnalyticGaussianKl(q, p, torch::ones({1, 1, 5})).item<double>();
  const double worked_ref = 1.0 + std::exp(-2.0) / 2.0 - 0.5;
  ok &= std::abs(worked - worked_ref) < 1e-6;
  d << "; N(0,1)||N(0,e) " << worked << " vs " << worked_ref;

  torch::manual_seed(31);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    GaussianParams a{torch::randn({1, 4, 6}), torch::randn({1, 4, 6}) * 0.5};
    GaussianParams b{torch::randn({1, 4, 6}), torch::randn({1, 4, 6}) * 0.5};
    double sum = 0;
    auto am = a.mu.to(torch::kFloat64), as = a.log_sigma.to(torch::kFloat64);
    auto bm = b.mu.to(torch::kFloat64), bs = b.log_sigma.to(torch::kFloat64);
    for (int c = 0; c < 4; ++c) {
      for (int t = 0; t < 6; ++t) {
        const double mq = am[0][c][t].item<double>(), sq = std::exp(as[0][c][t].item<double>());
        const double mp = bm[0][c][t].item<double>(), sp = std::exp(bs[0][c][t].item<double>());
        sum += std::log(sp / sq) + (sq * sq + (mq - mp) * (mq - mp)) / (2 * sp * sp) - 0.5;
      }
    }
    const double want = sum / 24;
    const double got = AnalyticGaussianKl(a, b, torch::ones({1, 1, 6})).item<double>();
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  ok &= worst < 1e-6;
  d << "; worst closed-form deviation " << worst;
  return ok;
}

// ---- 4 ----
bool ExcitationPeriodicity(Detail& d) {
  SineConfig sc;
  auto s = GenerateSine(torch::full({1, 100}, std::log(100.0)), torch::ones({1, 100}),
                        torch::zeros({1}), sc)[0];
  const int64_t lag = DominantLag(s, 20, 400);
  bool ok = std::abs(lag - 240) <= 1;
  d << "100 Hz dominant lag " << lag;
  PitchConfig pc;
  double worst = 0;
  int unvoiced = 0;
  for (double f0 = 80.0; f0 <= 400.0; f0 += 10.0) {
    auto w = GenerateSine(torch::full({1, 100}, std::log(f0)), torch::ones({1, 100}),
                          torch::zeros({1}), sc);
    Waveform wave;
    wave.samples.assign(w.data_ptr<float>(), w.data_ptr<float>() + w.numel());
    auto track = ExtractPitch(wave, pc);
    for (size_t t = 2; t + 2 < track.size(); ++t) {
      if (track.vuv[t] != 1.0f) ++unvoiced;
      worst = std::max(worst, std::abs(std::exp(track.log_f0[t]) - f0) / f0);
    }
  }
  ok &= unvoiced == 0 && worst <= 0.03;
  d << "; F0 80..400 Hz worst relative error " << worst << ", unvoiced interior frames " << unvoiced;
  return ok;
}

// Corpus on disk plus loaded features.
struct Corpus {
  std::filesystem::path dir;
  std::unique_ptr<Dataset> data;
  std::vector<ManifestEntry> entries;
};

Corpus MakeCorpus(const std::filesystem::path& dir, const AppConfig& config, int utterances,
                  bool noise_waves) {
  SyntheticCorpusConfig cc;
  cc.num_utterances = utterances;
  const auto manifest = WriteSyntheticCorpus(dir / "corpus", cc);
  Corpus c;
  c.dir = dir;
  c.entries = ReadManifest(manifest);
  if (noise_waves) {
    for (size_t i = 0; i < c.entries.size(); ++i) {
      const auto path = dir / "corpus" / c.entries[i].audio;
      auto w = LoadWaveform(path, 24000);
      SaveWaveform(path, testing::WhiteNoise(static_cast<double>(w.samples.size()) / 24000, 0.1, i));
    }
  }
  Preprocess(manifest, dir / "feat", config);
  c.data = std::make_unique<Dataset>(Dataset::Load(dir / "feat", config.features));
  return c;
}

// ---- 5 ----
bool GradientReachability(Detail& d, const std::filesystem::path& work) {
  auto config = AppConfig::Desk();
  auto corpus = MakeCorpus(work / "random", config, 4, true);
  Trainer trainer(config);
  trainer.AttachData(*corpus.data);
  std::map<std::string, bool> groups;
  std::vector<std::string> dead;
  trainer.set_gradient_observer([&](PeriodVitsImpl& m) {
    for (const auto& p : m.named_parameters()) {
      const auto group = p.key().substr(0, p.key().find('.'));
      const bool nz = p.value().grad().defined() && p.value().grad().abs().sum().item<double>() > 0;
      groups[group] = groups[group] || nz;
    }
  });
  trainer.Step(corpus.data->Collate({0, 1}));
  for (const auto& [g, nz] : groups) {
    if (!nz) dead.push_back(g);
  }
  for (const auto& p : trainer.discriminator()->named_parameters()) {
    if (!p.value().grad().defined() || p.value().grad().abs().sum().item<double>() == 0) {
      dead.push_back("disc:" + p.key());
      break;
    }
  }
  bool ok = dead.empty() && groups.size() >= 9;
  d << groups.size() << " generator groups, zero-gradient groups:";
  for (const auto& g : dead) d << " " << g;
  if (dead.empty()) d << " none";

  SpectrogramExtractor stft{FeatureConfig{}};
  torch::manual_seed(51);
  auto target = torch::randn({1, 1200}, torch::kFloat64) * 0.3;
  auto x = torch::randn({1, 1200}, torch::kFloat64) * 0.3;
  const double mel_err = testing::DirectionalGradientError(
      [&](const torch::Tensor& g) { return MelReconLoss(stft, g, target); }, x, 8, 1e-6, 1);
  auto lf = torch::randn({1, 12}, torch::kFloat64) * 0.2 + 5;
  auto vv = (torch::rand({1, 12}) > 0.4).to(torch::kFloat64);
  auto mask = torch::ones({1, 12}, torch::kFloat64);
  auto px = torch::cat({lf + torch::randn_like(lf) * 0.1, torch::rand_like(vv)}, 0);
  const double pitch_err = testing::DirectionalGradientError(
      [&](const torch::Tensor& p) {
        return PitchLoss({p[0].unsqueeze(0), p[1].unsqueeze(0)}, lf, vv, mask);
      },
      px, 8, 1e-6, 2);
  ok &= mel_err < 1e-3 && pitch_err < 1e-3;
  d << "; finite difference relative error mel " << mel_err << ", pitch " << pitch_err;
  return ok;
}

// ---- 6 and 7 ----
struct ProbeResult {
  double recon_first10 = 0;
  double recon_last10 = 0;
  PitchStats pitch;
  double seconds = 0;
};

std::vector<double> ReconColumn(const std::string& log) {
  std::vector<double> out;
  std::istringstream is(log);
  for (std::string line; std::getline(is, line);) {
    out.push_back(nlohmann::json::parse(line).at("recon").get<double>());
  }
  return out;
}

double Mean(const std::vector<double>& v, size_t begin, size_t end) {
  double s = 0;
  for (size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

ProbeResult RunProbe(const AppConfig& config, const Corpus& corpus, int64_t steps,
                     const std::filesystem::path& out) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out);
  Trainer trainer(config);
  std::ostringstream log;
  trainer.Fit(*corpus.data, steps, &log);
  trainer.SaveCheckpoint(out / "final.pt");
  std::ofstream(out / "train.log") << log.str();

  ProbeResult r;
  const auto recon = ReconColumn(log.str());
  r.recon_first10 = Mean(recon, 0, 10);
  r.recon_last10 = Mean(recon, recon.size() - 10, recon.size());

  auto synth = Synthesizer::FromCheckpoint(out / "final.pt");
  std::vector<PitchStats> all;
  for (const auto& e : corpus.entries) {
    auto wave = LoadWaveform(corpus.dir / "corpus" / e.audio, 24000);
    auto syn = synth.CopySynthesize(wave, e.speaker, e.emotion, 7);
    SaveWaveform(out / (e.id + ".wav"), syn);
    auto s = EvalPitchStability(wave, syn, config.pitch, e.id);
    r.pitch.frames += s.frames;
    r.pitch.voiced_both += s.voiced_both;
    r.pitch.sum_sq_hz += s.sum_sq_hz;
    r.pitch.vuv_errors += s.vuv_errors;
  }
  r.pitch.id = "aggregate";
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

int64_t ProbeSteps() {
  if (const char* s = std::getenv("PVITS_PROBE_STEPS")) return std::stoll(s);
  return 5000;
}

struct Probes {
  std::optional<ProbeResult> full, ablated;
};

ProbeResult& FullProbe(Probes& p, const Corpus& corpus, const std::filesystem::path& work) {
  if (!p.full) p.full = RunProbe(AppConfig::Desk(), corpus, ProbeSteps(), work / "probe_full");
  return *p.full;
}

bool OverfitProbe(Detail& d, Probes& probes, const Corpus& corpus,
                  const std::filesystem::path& work) {
  const auto& r = FullProbe(probes, corpus, work);
  const double drop = 1.0 - r.recon_last10 / r.recon_first10;
  d << ProbeSteps() << " steps in " << static_cast<int>(r.seconds) << " s; recon " << r.recon_first10
    << " -> " << r.recon_last10 << " (drop " << 100 * drop << "%); copy-synthesis F0 RMSE "
    << r.pitch.f0_rmse_hz() << " Hz over " << r.pitch.voiced_both << " frames, V/UV error "
    << 100 * r.pitch.vuv_error_rate() << "%";
  return drop >= 0.5 && r.pitch.f0_defined() && r.pitch.f0_rmse_hz() < 15.0 &&
         r.pitch.vuv_error_rate() < 0.10;
}

bool AblationDirection(Detail& d, Probes& probes, const Corpus& corpus,
                       const std::filesystem::path& work) {
  const auto& full = FullProbe(probes, corpus, work);
  auto config = AppConfig::Desk();
  config.model.excitation = ExcitationMode::kNone;
  config.model.concat_frame_pitch = true;
  probes.ablated = RunProbe(config, corpus, ProbeSteps(), work / "probe_ablated");
  const auto& ab = *probes.ablated;
  d << "F0 RMSE with excitation " << full.pitch.f0_rmse_hz() << " Hz, frame pitch only "
    << ab.pitch.f0_rmse_hz() << " Hz (V/UV error " << 100 * full.pitch.vuv_error_rate() << "% vs "
    << 100 * ab.pitch.vuv_error_rate() << "%)";
  // An undefined RMSE (no frame voiced in both) counts as the worst outcome.
  if (!full.pitch.f0_defined()) return false;
  if (!ab.pitch.f0_defined()) return true;
  return ab.pitch.f0_rmse_hz() > full.pitch.f0_rmse_hz();
}

// ---- 8 ----
bool Determinism(Detail& d, const std::filesystem::path& work) {
  auto config = testing::TinyConfig();
  config.train.deterministic = true;
  auto corpus = MakeCorpus(work / "determinism", config, 4, false);
  const auto ckpt = work / "determinism" / "resume.pt";
  std::ostringstream log_a, log_b;
  Trainer a(config);
  a.Fit(*corpus.data, 5);
  a.SaveCheckpoint(ckpt);
  a.Fit(*corpus.data, 15, &log_a);
  Trainer b(config);
  b.LoadCheckpoint(ckpt);
  b.Fit(*corpus.data, 15, &log_b);
  auto strip = [](const std::string& log) {
    std::vector<std::string> out;
    std::istringstream is(log);
    for (std::string line; std::getline(is, line);) {
      auto j = nlohmann::json::parse(line);
      j.erase("wall_time");
      out.push_back(j.dump());
    }
    return out;
  };
  const auto la = strip(log_a.str()), lb = strip(log_b.str());
  const bool resume_ok = la.size() == 10 && la == lb;
  d << "resumed " << lb.size() << " loss lines identical " << resume_ok;

  auto s1 = Synthesizer::FromCheckpoint(ckpt);
  auto s2 = Synthesizer::FromCheckpoint(ckpt);
  SynthesisOptions o;
  o.temperature = 0.0;
  const auto& u = corpus.data->at(0).sample;
  std::vector<int64_t> ph(u.phonemes.begin(), u.phonemes.end());
  std::vector<int64_t> ac(u.accents.begin(), u.accents.end());
  auto x = s1.Synthesize(ph, ac, u.speaker_id, u.emotion_id, o, 42).wave.samples;
  auto y = s2.Synthesize(ph, ac, u.speaker_id, u.emotion_id, o, 42).wave.samples;
  const bool synth_ok = !x.empty() && x == y;
  d << "; tau=0 synthesis bit-identical " << synth_ok << " (" << x.size() << " samples)";
  return resume_ok && synth_ok;
}

}  // namespace
}  // namespace pvits

int main(int argc, char** argv) {
  using namespace pvits;
  torch::set_num_threads(1);
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return selected.empty() || selected.count(n) > 0; };

  std::filesystem::path work;
  std::unique_ptr<pvits::testing::TempDir> temp;
  if (const char* keep = std::getenv("PVITS_PROBE_DIR")) {
    work = keep;
    std::filesystem::create_directories(work);
  } else {
    temp = std::make_unique<pvits::testing::TempDir>("acceptance");
    work = temp->path();
  }

  std::unique_ptr<Corpus> probe_corpus;
  Probes probes;
  auto corpus = [&]() -> const Corpus& {
    if (!probe_corpus) {
      probe_corpus = std::make_unique<Corpus>(MakeCorpus(work / "probe", AppConfig::Desk(), 10, false));
    }
    return *probe_corpus;
  };

  const std::vector<std::pair<std::string, std::function<bool(Detail&)>>> criteria = {
      {"structural identities", StructuralIdentities},
      {"flow invertibility", FlowInvertibility},
      {"KL oracle", KlOracle},
      {"excitation periodicity", ExcitationPeriodicity},
      {"gradient reachability", [&](Detail& d) { return GradientReachability(d, work); }},
      {"overfit probe", [&](Detail& d) { return OverfitProbe(d, probes, corpus(), work); }},
      {"ablation direction", [&](Detail& d) { return AblationDirection(d, probes, corpus(), work); }},
      {"determinism", [&](Detail& d) { return Determinism(d, work); }},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!wanted(n)) continue;
    Detail detail;
    bool ok = false;
    try {
      ok = criteria[i].second(detail);
    } catch (const std::exception& e) {
      detail << " threw: " << e.what();
    }
    failures += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << " (" << criteria[i].first
              << "): " << detail.str() << std::endl;
  }
  return failures;
}
