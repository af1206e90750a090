#ifndef PVITS_MODEL_CONFIG_H_
#define PVITS_MODEL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvits/features/pitch.h"
#include "pvits/features/spectrogram.h"

namespace pvits {

// Which channels of the sample-level excitation reach the decoder.
enum class ExcitationMode {
  kNone,          // no periodicity generator
  kSine,          // sine only; vuv and noise channels zeroed
  kSineVuvNoise,  // full source
};

std::string ToString(ExcitationMode mode);
ExcitationMode ParseExcitationMode(const std::string& s);

struct ModelConfig {
  int num_phonemes = 32;
  int num_accents = 4;
  int num_speakers = 4;
  int num_emotions = 3;

  int hidden_channels = 96;
  int latent_channels = 96;
  int condition_channels = 64;
  double dropout = 0.1;

  int text_layers = 2;
  int text_heads = 2;
  int text_ffn_channels = 192;
  int text_ffn_kernel = 3;

  int duration_channels = 96;
  int duration_kernel = 3;

  int frame_prior_stacks = 6;
  int frame_prior_kernel = 17;
  int pitch_tap_stack = 3;  // 1-based stack whose output feeds the pitch head

  int pitch_layers = 5;
  int pitch_kernel = 5;
  double pitch_dropout = 0.3;

  int flow_steps = 4;
  int flow_wn_layers = 4;
  int flow_kernel = 5;

  int posterior_layers = 8;
  int posterior_kernel = 5;

  std::vector<int> upsample_rates{6, 5, 2, 2, 2};
  int upsample_initial_channels = 128;
  std::vector<int> resblock_kernels{3, 7};
  std::vector<std::vector<int>> resblock_dilations{{1, 3}, {1, 3}};

  ExcitationMode excitation = ExcitationMode::kSineVuvNoise;
  bool fusion = true;              // add down-sampled excitation at each resolution
  bool concat_frame_pitch = false;  // append [log-F0, vuv] to z (frame-level pitch input)
  double sine_amplitude = 0.1;
  double unvoiced_noise_std = 0.003;
  double excitation_noise_std = 1.0;

  std::vector<int> disc_periods{2, 3, 5, 7, 11};
  bool disc_use_scale = true;
  int disc_channels = 16;

  int64_t UpsampleProduct() const;
  bool UsesExcitation() const { return fusion && excitation != ExcitationMode::kNone; }
  // Throws std::invalid_argument; enforces product(upsample_rates) == hop.
  void Validate(int hop_samples) const;
};

struct LossWeights {
  double recon = 45.0;
  double kl = 1.0;
  double pitch = 1.0;
  double dur = 1.0;
  double adv = 1.0;
  double fm = 2.0;
};

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-9;
  double weight_decay = 0.01;
  double lr_decay = 0.999875;  // per epoch
  int segment_frames = 32;
  int batch_average = 4;
  LossWeights weights;
  uint64_t seed = 1234;
  int64_t max_steps = 20000;
  int64_t log_every = 1;
  int64_t checkpoint_every = 1000;
  bool deterministic = true;
};

struct DataConfig {
  std::string feature_dir;  // output of `pvits preprocess`
  std::string output_dir = "exp";
};

struct SynthesisConfig {
  double temperature = 0.667;
  double vuv_threshold = 0.5;
  bool zero_phase = true;
};

struct AppConfig {
  std::string profile = "desk";
  FeatureConfig features;
  PitchConfig pitch;
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  SynthesisConfig synthesis;

  static AppConfig Desk();
  static AppConfig Paper();
  static AppConfig Profile(const std::string& name);

  // JSON object; "profile" selects the base, every other key overrides it.
  // Unknown keys are rejected.
  static AppConfig FromJson(const std::string& text);
  static AppConfig Load(const std::filesystem::path& path);
  std::string ToJson() const;

  // Stable hash over everything that shapes the network and its features.
  std::string ModelHash() const;
  void Validate() const;
};

}  // namespace pvits

#endif  // PVITS_MODEL_CONFIG_H_
