#ifndef PVITS_TRAIN_TRAINER_H_
#define PVITS_TRAIN_TRAINER_H_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pvits/model/config.h"
#include "pvits/model/discriminator.h"
#include "pvits/model/losses.h"
#include "pvits/model/period_vits.h"
#include "pvits/text/dataset.h"

namespace pvits {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int64_t kCheckpointVersion = 1;

// SplitMix64 finaliser of (seed, salt); the per-step seed stream.
uint64_t MixSeed(uint64_t seed, uint64_t salt);

struct StepOptions {
  bool update_generator = true;
  bool update_discriminator = true;
};

// Position in the run. Everything else a resume needs lives in the model and
// optimiser state.
struct TrainProgress {
  int64_t step = 0;
  int64_t epoch = 0;
  int64_t batch_in_epoch = 0;
};

class Trainer {
 public:
  explicit Trainer(AppConfig config);

  const AppConfig& config() const { return config_; }
  PeriodVits& model() { return model_; }
  MultiDiscriminator& discriminator() { return disc_; }
  const TrainProgress& progress() const { return progress_; }
  double learning_rate() const;

  // Copies corpus statistics into the model and checks vocabulary sizes.
  void AttachData(const Dataset& data);

  // One optimisation step: discriminator on (real, detached fake), then the
  // weighted generator-side objective. Randomness is derived from the step
  // counter, so a resumed run replays the same draws. Throws
  // std::runtime_error naming a non-finite loss component.
  LossReport Step(const Batch& batch, const StepOptions& options = {});

  // Runs until progress().step reaches max_steps. Writes one JSON object per
  // log line and checkpoints into |checkpoint_dir| when non-empty.
  void Fit(const Dataset& data, int64_t max_steps, std::ostream* log = nullptr,
           const std::filesystem::path& checkpoint_dir = {});

  void SaveCheckpoint(const std::filesystem::path& path) const;
  // Throws CheckpointError on unreadable files, version or config mismatch.
  void LoadCheckpoint(const std::filesystem::path& path);

  // Called after the generator-side backward pass, before the update.
  void set_gradient_observer(std::function<void(PeriodVitsImpl&)> fn) {
    gradient_observer_ = std::move(fn);
  }

 private:
  void ApplyLearningRate();

  AppConfig config_;
  PeriodVits model_{nullptr};
  MultiDiscriminator disc_{nullptr};
  std::unique_ptr<torch::optim::AdamW> opt_g_, opt_d_;
  SpectrogramExtractor stft_;
  TrainProgress progress_;
  std::function<void(PeriodVitsImpl&)> gradient_observer_;
};

// Config stored in a checkpoint; lets inference rebuild the network.
AppConfig ReadCheckpointConfig(const std::filesystem::path& path);

// Model weights only (no optimiser state). Same checks as LoadCheckpoint.
void LoadModelWeights(const std::filesystem::path& path, const AppConfig& config,
                      PeriodVits& model);

std::string FormatLogLine(const TrainProgress& progress, const LossReport& report, double lr,
                          double wall_seconds);

}  // namespace pvits

#endif  // PVITS_TRAIN_TRAINER_H_
