#include "pvits/train/trainer.h"

#include <ATen/CPUGeneratorImpl.h>
#include <glog/logging.h>

#include <chrono>
#include <cmath>
#include "json.hpp"

#include "pvits/text/batching.h"

namespace pvits {

uint64_t MixSeed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

torch::optim::AdamWOptions MakeOptions(const TrainConfig& t) {
  return torch::optim::AdamWOptions(t.learning_rate)
      .betas({t.beta1, t.beta2})
      .eps(t.eps)
      .weight_decay(t.weight_decay);
}

torch::serialize::InputArchive OpenArchive(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw CheckpointError("checkpoint not found: " + path.string());
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  return archive;
}

std::string ReadString(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue v;
  if (!archive.try_read(key, v) || !v.isString()) {
    throw CheckpointError("checkpoint is missing '" + key + "'");
  }
  return v.toStringRef();
}

int64_t ReadInt(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue v;
  if (!archive.try_read(key, v) || !v.isInt()) {
    throw CheckpointError("checkpoint is missing '" + key + "'");
  }
  return v.toInt();
}

void CheckHeader(torch::serialize::InputArchive& archive, const AppConfig& config) {
  const int64_t version = ReadInt(archive, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const auto hash = ReadString(archive, "config_hash");
  if (hash != config.ModelHash()) {
    throw CheckpointError("checkpoint config hash " + hash + " does not match " +
                          config.ModelHash() + "; refusing to load");
  }
}

template <typename M>
void LoadModule(torch::serialize::InputArchive& archive, const std::string& key, M& module) {
  torch::serialize::InputArchive sub;
  if (!archive.try_read(key, sub)) throw CheckpointError("checkpoint is missing '" + key + "'");
  try {
    module->load(sub);
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot restore '" + key + "': " + e.what_without_backtrace());
  }
}

}  // namespace

Trainer::Trainer(AppConfig config) : config_(std::move(config)), stft_(config_.features) {
  config_.Validate();
  // Initial weights come from the global generator.
  torch::manual_seed(config_.train.seed);
  model_ = PeriodVits(config_.model, config_.features);
  disc_ = MultiDiscriminator(config_.model);
  opt_g_ = std::make_unique<torch::optim::AdamW>(model_->parameters(), MakeOptions(config_.train));
  opt_d_ = std::make_unique<torch::optim::AdamW>(disc_->parameters(), MakeOptions(config_.train));
  if (config_.train.deterministic) at::globalContext().setDeterministicAlgorithms(true, false);
}

double Trainer::learning_rate() const {
  return config_.train.learning_rate *
         std::pow(config_.train.lr_decay, static_cast<double>(progress_.epoch));
}

void Trainer::ApplyLearningRate() {
  const double lr = learning_rate();
  for (auto* opt : {opt_g_.get(), opt_d_.get()}) {
    for (auto& group : opt->param_groups()) {
      static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
    }
  }
}

void Trainer::AttachData(const Dataset& data) {
  const auto& v = data.vocab();
  const auto& m = config_.model;
  auto check = [](const char* what, int have, int need) {
    if (need > have) {
      throw std::invalid_argument(std::string("model has ") + std::to_string(have) + " " + what +
                                  " but the corpus uses " + std::to_string(need));
    }
  };
  check("phonemes", m.num_phonemes, v.phonemes);
  check("accents", m.num_accents, v.accents);
  check("speakers", m.num_speakers, v.speakers);
  check("emotions", m.num_emotions, v.emotions);
  model_->SetStats(data.linear_stats(), data.pitch_stats());
}

LossReport Trainer::Step(const Batch& batch, const StepOptions& options) {
  const uint64_t seed = MixSeed(config_.train.seed, static_cast<uint64_t>(progress_.step));
  torch::manual_seed(seed);
  auto gen = at::make_generator<at::CPUGeneratorImpl>(MixSeed(seed, 1));
  model_->train();
  disc_->train();
  ApplyLearningRate();

  auto fwd = model_->TrainForward(batch, config_.train.segment_frames, gen);

  // Discriminator.
  auto real_out = disc_(fwd.real);
  auto fake_out = disc_(fwd.fake.detach());
  auto loss_d = DiscriminatorLoss(real_out.logits, fake_out.logits);
  LossReport report;
  report.disc = loss_d.item<double>();
  if (!std::isfinite(report.disc)) {
    throw std::runtime_error("non-finite loss in component 'disc'");
  }
  if (options.update_discriminator) {
    opt_d_->zero_grad();
    loss_d.backward();
    opt_d_->step();
  }

  // Generator side.
  auto& terms = fwd.terms;
  terms.recon = MelReconLoss(stft_, fwd.fake, fwd.real, fwd.segment_mask);
  auto gen_out = disc_(fwd.fake);
  DiscriminatorOutput ref_out;
  {
    torch::NoGradGuard no_grad;
    ref_out = disc_(fwd.real);
  }
  terms.adv = GeneratorAdversarialLoss(gen_out.logits);
  terms.fm = FeatureMatchingLoss(ref_out.feature_maps, gen_out.feature_maps);
  auto total = TotalLoss(terms, config_.train.weights);

  report.recon = terms.recon.item<double>();
  report.kl = terms.kl.item<double>();
  report.pitch = terms.pitch.item<double>();
  report.dur = terms.dur.item<double>();
  report.adv = terms.adv.item<double>();
  report.fm = terms.fm.item<double>();
  report.total = total.item<double>();
  CheckFinite(report);

  if (options.update_generator) {
    opt_g_->zero_grad();
    total.backward();
    if (gradient_observer_) gradient_observer_(*model_);
    opt_g_->step();
  }
  ++progress_.step;
  return report;
}

void Trainer::Fit(const Dataset& data, int64_t max_steps, std::ostream* log,
                  const std::filesystem::path& checkpoint_dir) {
  AttachData(data);
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  const auto lengths = data.FrameLengths();
  const auto start = std::chrono::steady_clock::now();
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  while (progress_.step < max_steps) {
    const auto batches = MakeBatches(lengths, config_.train.batch_average,
                                     MixSeed(config_.train.seed, 1u << 20 | progress_.epoch));
    while (progress_.batch_in_epoch < static_cast<int64_t>(batches.size()) &&
           progress_.step < max_steps) {
      const auto batch = data.Collate(batches[progress_.batch_in_epoch]);
      const auto report = Step(batch);
      ++progress_.batch_in_epoch;
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (log && config_.train.log_every > 0 && progress_.step % config_.train.log_every == 0) {
        *log << FormatLogLine(progress_, report, learning_rate(), wall) << '\n' << std::flush;
      }
      if (!checkpoint_dir.empty() && config_.train.checkpoint_every > 0 &&
          progress_.step % config_.train.checkpoint_every == 0) {
        SaveCheckpoint(checkpoint_dir / ("step_" + std::to_string(progress_.step) + ".pt"));
        SaveCheckpoint(checkpoint_dir / "latest.pt");
      }
    }
    if (progress_.batch_in_epoch >= static_cast<int64_t>(batches.size())) {
      ++progress_.epoch;
      progress_.batch_in_epoch = 0;
    }
  }
  if (!checkpoint_dir.empty()) SaveCheckpoint(checkpoint_dir / "latest.pt");
}

void Trainer::SaveCheckpoint(const std::filesystem::path& path) const {
  torch::serialize::OutputArchive archive;
  archive.write("version", c10::IValue(kCheckpointVersion));
  archive.write("config_hash", c10::IValue(config_.ModelHash()));
  archive.write("config", c10::IValue(config_.ToJson()));
  archive.write("step", c10::IValue(progress_.step));
  archive.write("epoch", c10::IValue(progress_.epoch));
  archive.write("batch_in_epoch", c10::IValue(progress_.batch_in_epoch));
  torch::serialize::OutputArchive gen, disc, opt_g, opt_d;
  model_->save(gen);
  disc_->save(disc);
  opt_g_->save(opt_g);
  opt_d_->save(opt_d);
  archive.write("gen", gen);
  archive.write("disc", disc);
  archive.write("opt_g", opt_g);
  archive.write("opt_d", opt_d);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  archive.save_to(tmp);
  std::filesystem::rename(tmp, path);
}

void Trainer::LoadCheckpoint(const std::filesystem::path& path) {
  auto archive = OpenArchive(path);
  CheckHeader(archive, config_);
  LoadModule(archive, "gen", model_);
  LoadModule(archive, "disc", disc_);
  torch::serialize::InputArchive opt_g, opt_d;
  if (!archive.try_read("opt_g", opt_g) || !archive.try_read("opt_d", opt_d)) {
    throw CheckpointError("checkpoint has no optimiser state");
  }
  try {
    opt_g_->load(opt_g);
    opt_d_->load(opt_d);
  } catch (const c10::Error& e) {
    throw CheckpointError(std::string("cannot restore optimiser: ") + e.what_without_backtrace());
  }
  progress_.step = ReadInt(archive, "step");
  progress_.epoch = ReadInt(archive, "epoch");
  progress_.batch_in_epoch = ReadInt(archive, "batch_in_epoch");
  // Keep the pitch head's copy of the statistics in sync with the buffers.
  auto buffers = model_->named_buffers();
  model_->pitch_predictor()->SetStats(buffers["log_f0_mean"].item<double>(),
                                      buffers["log_f0_std"].item<double>());
}

AppConfig ReadCheckpointConfig(const std::filesystem::path& path) {
  auto archive = OpenArchive(path);
  return AppConfig::FromJson(ReadString(archive, "config"));
}

void LoadModelWeights(const std::filesystem::path& path, const AppConfig& config,
                      PeriodVits& model) {
  auto archive = OpenArchive(path);
  CheckHeader(archive, config);
  LoadModule(archive, "gen", model);
  auto buffers = model->named_buffers();
  model->pitch_predictor()->SetStats(buffers["log_f0_mean"].item<double>(),
                                     buffers["log_f0_std"].item<double>());
}

std::string FormatLogLine(const TrainProgress& progress, const LossReport& r, double lr,
                          double wall_seconds) {
  nlohmann::ordered_json j;
  j["step"] = progress.step;
  j["epoch"] = progress.epoch;
  j["recon"] = r.recon;
  j["kl"] = r.kl;
  j["pitch"] = r.pitch;
  j["dur"] = r.dur;
  j["adv"] = r.adv;
  j["fm"] = r.fm;
  j["total"] = r.total;
  j["disc"] = r.disc;
  j["lr"] = lr;
  j["wall_time"] = wall_seconds;
  return j.dump();
}

}  // namespace pvits
