#include "pvits/model/config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pvits {

using nlohmann::json;

std::string ToString(ExcitationMode mode) {
  switch (mode) {
    case ExcitationMode::kNone: return "none";
    case ExcitationMode::kSine: return "sine";
    case ExcitationMode::kSineVuvNoise: return "sine+vuv+noise";
  }
  return "none";
}

ExcitationMode ParseExcitationMode(const std::string& s) {
  if (s == "none") return ExcitationMode::kNone;
  if (s == "sine") return ExcitationMode::kSine;
  if (s == "sine+vuv+noise") return ExcitationMode::kSineVuvNoise;
  throw std::invalid_argument("unknown excitation mode '" + s +
                              "' (expected none|sine|sine+vuv+noise)");
}

int64_t ModelConfig::UpsampleProduct() const {
  int64_t p = 1;
  for (int r : upsample_rates) p *= r;
  return p;
}

void ModelConfig::Validate(int hop_samples) const {
  if (upsample_rates.empty()) throw std::invalid_argument("upsample_rates must be non-empty");
  for (int r : upsample_rates) {
    if (r < 1) throw std::invalid_argument("upsample rates must be >= 1");
  }
  if (UpsampleProduct() != hop_samples) {
    throw std::invalid_argument("product of upsample_rates (" + std::to_string(UpsampleProduct()) +
                                ") must equal hop_samples (" + std::to_string(hop_samples) + ")");
  }
  if (upsample_initial_channels >> upsample_rates.size() < 1) {
    throw std::invalid_argument("upsample_initial_channels too small for the number of stages");
  }
  if (resblock_kernels.size() != resblock_dilations.size() || resblock_kernels.empty()) {
    throw std::invalid_argument("resblock_kernels and resblock_dilations must pair up");
  }
  if (latent_channels % 2 != 0) throw std::invalid_argument("latent_channels must be even");
  if (hidden_channels % text_heads != 0) {
    throw std::invalid_argument("hidden_channels must be divisible by text_heads");
  }
  if (pitch_tap_stack < 1 || pitch_tap_stack > frame_prior_stacks) {
    throw std::invalid_argument("pitch_tap_stack must index a frame prior stack");
  }
  if (frame_prior_kernel % 2 == 0 || pitch_kernel % 2 == 0 || flow_kernel % 2 == 0 ||
      posterior_kernel % 2 == 0 || duration_kernel % 2 == 0 || text_ffn_kernel % 2 == 0) {
    throw std::invalid_argument("convolution kernel sizes must be odd");
  }
  if (num_phonemes < 1 || num_accents < 1 || num_speakers < 1 || num_emotions < 1) {
    throw std::invalid_argument("vocabulary sizes must be positive");
  }
  if (disc_use_scale && (disc_channels < 8 || disc_channels % 8 != 0)) {
    throw std::invalid_argument("disc_channels must be a positive multiple of 8 (grouped convs)");
  }
  if (disc_periods.empty() && !disc_use_scale) {
    throw std::invalid_argument("at least one discriminator is required");
  }
}

// Serialisers live in pvits so argument-dependent lookup finds them.
void to_json(json& j, const FeatureConfig& c) {
  j = json{{"sample_rate", c.sample_rate}, {"hop_samples", c.hop_samples},
           {"win_samples", c.win_samples}, {"fft_size", c.fft_size},
           {"num_mels", c.num_mels},       {"fmin", c.fmin},
           {"fmax", c.fmax},               {"log_floor", c.log_floor}};
}
void from_json(const json& j, FeatureConfig& c) {
  j.at("sample_rate").get_to(c.sample_rate);
  j.at("hop_samples").get_to(c.hop_samples);
  j.at("win_samples").get_to(c.win_samples);
  j.at("fft_size").get_to(c.fft_size);
  j.at("num_mels").get_to(c.num_mels);
  j.at("fmin").get_to(c.fmin);
  j.at("fmax").get_to(c.fmax);
  j.at("log_floor").get_to(c.log_floor);
}

void to_json(json& j, const PitchConfig& c) {
  j = json{{"window_samples", c.window_samples},
           {"f0_min", c.f0_min},
           {"f0_max", c.f0_max},
           {"dip_threshold", c.dip_threshold},
           {"voicing_threshold", c.voicing_threshold},
           {"energy_floor", c.energy_floor},
           {"median_width", c.median_width},
           {"fallback_f0_hz", c.fallback_f0_hz}};
}
void from_json(const json& j, PitchConfig& c) {
  j.at("window_samples").get_to(c.window_samples);
  j.at("f0_min").get_to(c.f0_min);
  j.at("f0_max").get_to(c.f0_max);
  j.at("dip_threshold").get_to(c.dip_threshold);
  j.at("voicing_threshold").get_to(c.voicing_threshold);
  j.at("energy_floor").get_to(c.energy_floor);
  j.at("median_width").get_to(c.median_width);
  j.at("fallback_f0_hz").get_to(c.fallback_f0_hz);
}

#define PVITS_MODEL_FIELDS(X)                                                         \
  X(num_phonemes) X(num_accents) X(num_speakers) X(num_emotions) X(hidden_channels)  \
  X(latent_channels) X(condition_channels) X(dropout) X(text_layers) X(text_heads)   \
  X(text_ffn_channels) X(text_ffn_kernel) X(duration_channels) X(duration_kernel)    \
  X(frame_prior_stacks) X(frame_prior_kernel) X(pitch_tap_stack) X(pitch_layers)     \
  X(pitch_kernel) X(pitch_dropout) X(flow_steps) X(flow_wn_layers) X(flow_kernel)    \
  X(posterior_layers) X(posterior_kernel) X(upsample_rates)                          \
  X(upsample_initial_channels) X(resblock_kernels) X(resblock_dilations) X(fusion)   \
  X(concat_frame_pitch) X(sine_amplitude) X(unvoiced_noise_std)                      \
  X(excitation_noise_std) X(disc_periods) X(disc_use_scale) X(disc_channels)

void to_json(json& j, const ModelConfig& c) {
  j = json::object();
#define X(name) j[#name] = c.name;
  PVITS_MODEL_FIELDS(X)
#undef X
  j["excitation"] = ToString(c.excitation);
}
void from_json(const json& j, ModelConfig& c) {
#define X(name) j.at(#name).get_to(c.name);
  PVITS_MODEL_FIELDS(X)
#undef X
  c.excitation = ParseExcitationMode(j.at("excitation").get<std::string>());
}
#undef PVITS_MODEL_FIELDS

void to_json(json& j, const LossWeights& w) {
  j = json{{"recon", w.recon}, {"kl", w.kl}, {"pitch", w.pitch},
           {"dur", w.dur},     {"adv", w.adv}, {"fm", w.fm}};
}
void from_json(const json& j, LossWeights& w) {
  j.at("recon").get_to(w.recon);
  j.at("kl").get_to(w.kl);
  j.at("pitch").get_to(w.pitch);
  j.at("dur").get_to(w.dur);
  j.at("adv").get_to(w.adv);
  j.at("fm").get_to(w.fm);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},
           {"beta2", c.beta2},                 {"eps", c.eps},
           {"weight_decay", c.weight_decay},   {"lr_decay", c.lr_decay},
           {"segment_frames", c.segment_frames}, {"batch_average", c.batch_average},
           {"weights", c.weights},             {"seed", c.seed},
           {"max_steps", c.max_steps},         {"log_every", c.log_every},
           {"checkpoint_every", c.checkpoint_every}, {"deterministic", c.deterministic}};
}
void from_json(const json& j, TrainConfig& c) {
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("beta1").get_to(c.beta1);
  j.at("beta2").get_to(c.beta2);
  j.at("eps").get_to(c.eps);
  j.at("weight_decay").get_to(c.weight_decay);
  j.at("lr_decay").get_to(c.lr_decay);
  j.at("segment_frames").get_to(c.segment_frames);
  j.at("batch_average").get_to(c.batch_average);
  j.at("weights").get_to(c.weights);
  j.at("seed").get_to(c.seed);
  j.at("max_steps").get_to(c.max_steps);
  j.at("log_every").get_to(c.log_every);
  j.at("checkpoint_every").get_to(c.checkpoint_every);
  j.at("deterministic").get_to(c.deterministic);
}

void to_json(json& j, const DataConfig& c) {
  j = json{{"feature_dir", c.feature_dir}, {"output_dir", c.output_dir}};
}
void from_json(const json& j, DataConfig& c) {
  j.at("feature_dir").get_to(c.feature_dir);
  j.at("output_dir").get_to(c.output_dir);
}

void to_json(json& j, const SynthesisConfig& c) {
  j = json{{"temperature", c.temperature}, {"vuv_threshold", c.vuv_threshold},
           {"zero_phase", c.zero_phase}};
}
void from_json(const json& j, SynthesisConfig& c) {
  j.at("temperature").get_to(c.temperature);
  j.at("vuv_threshold").get_to(c.vuv_threshold);
  j.at("zero_phase").get_to(c.zero_phase);
}

namespace {

json ToJsonObject(const AppConfig& c) {
  return json{{"profile", c.profile}, {"features", c.features}, {"pitch", c.pitch},
              {"model", c.model},     {"train", c.train},       {"data", c.data},
              {"synthesis", c.synthesis}};
}

void RejectUnknownKeys(const json& base, const json& patch, const std::string& where) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (!base.contains(it.key())) {
      throw std::invalid_argument("unknown config key '" + where + it.key() + "'");
    }
    if (it->is_object() && base.at(it.key()).is_object()) {
      RejectUnknownKeys(base.at(it.key()), *it, where + it.key() + ".");
    }
  }
}

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

AppConfig AppConfig::Desk() { return AppConfig{}; }

AppConfig AppConfig::Paper() {
  AppConfig c;
  c.profile = "paper";
  auto& m = c.model;
  m.hidden_channels = 192;
  m.latent_channels = 192;
  m.condition_channels = 256;
  m.text_layers = 6;
  m.text_ffn_channels = 768;
  m.duration_channels = 256;
  m.posterior_layers = 16;
  m.upsample_initial_channels = 512;
  m.resblock_kernels = {3, 7, 11};
  m.resblock_dilations = {{1, 3, 5}, {1, 3, 5}, {1, 3, 5}};
  m.disc_channels = 32;
  c.train.batch_average = 26;
  c.train.max_steps = 800000;
  return c;
}

AppConfig AppConfig::Profile(const std::string& name) {
  if (name == "desk") return Desk();
  if (name == "paper") return Paper();
  throw std::invalid_argument("unknown config profile '" + name + "' (expected desk|paper)");
}

AppConfig AppConfig::FromJson(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw std::invalid_argument("config must be a JSON object");
  const std::string profile = user.value("profile", std::string("desk"));
  json merged = ToJsonObject(Profile(profile));
  RejectUnknownKeys(merged, user, "");
  merged.merge_patch(user);
  AppConfig c;
  try {
    c.profile = merged.at("profile").get<std::string>();
    merged.at("features").get_to(c.features);
    merged.at("pitch").get_to(c.pitch);
    merged.at("model").get_to(c.model);
    merged.at("train").get_to(c.train);
    merged.at("data").get_to(c.data);
    merged.at("synthesis").get_to(c.synthesis);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed config value: ") + e.what());
  }
  c.pitch.sample_rate = c.features.sample_rate;
  c.pitch.hop_samples = c.features.hop_samples;
  c.Validate();
  return c;
}

AppConfig AppConfig::Load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return FromJson(ss.str());
}

std::string AppConfig::ToJson() const { return ToJsonObject(*this).dump(2); }

std::string AppConfig::ModelHash() const {
  const json j{{"features", features}, {"model", model}};
  std::ostringstream os;
  os << std::hex << Fnv1a(j.dump());
  return os.str();
}

void AppConfig::Validate() const {
  features.Validate();
  pitch.Validate();
  if (pitch.sample_rate != features.sample_rate || pitch.hop_samples != features.hop_samples) {
    throw std::invalid_argument("pitch and spectrogram framing must agree");
  }
  model.Validate(features.hop_samples);
  if (train.segment_frames < 1) throw std::invalid_argument("segment_frames must be >= 1");
  if (train.segment_frames * features.hop_samples < features.win_samples) {
    throw std::invalid_argument("training segment must span at least one analysis window");
  }
  if (train.batch_average < 1) throw std::invalid_argument("batch_average must be >= 1");
}

}  // namespace pvits
