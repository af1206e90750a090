#include "pvits/eval/pitch_stability.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pvits {

double PitchStats::f0_rmse_hz() const {
  if (!f0_defined()) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(sum_sq_hz / static_cast<double>(voiced_both));
}

double PitchStats::vuv_error_rate() const {
  return frames > 0 ? static_cast<double>(vuv_errors) / static_cast<double>(frames) : 0.0;
}

PitchStats ComparePitchTracks(const PitchTrack& ref, const PitchTrack& syn,
                              const std::string& id) {
  PitchStats s;
  s.id = id;
  s.frames = static_cast<int64_t>(std::min(ref.size(), syn.size()));
  for (int64_t t = 0; t < s.frames; ++t) {
    const bool rv = ref.vuv[t] > 0.5f;
    const bool sv = syn.vuv[t] > 0.5f;
    if (rv != sv) ++s.vuv_errors;
    if (rv && sv) {
      const double d = std::exp(static_cast<double>(ref.log_f0[t])) -
                       std::exp(static_cast<double>(syn.log_f0[t]));
      s.sum_sq_hz += d * d;
      ++s.voiced_both;
    }
  }
  return s;
}

PitchStats EvalPitchStability(const Waveform& ref, const Waveform& syn, const PitchConfig& config,
                              const std::string& id) {
  return ComparePitchTracks(ExtractPitch(ref, config), ExtractPitch(syn, config), id);
}

PitchStabilityReport EvalPitchStabilityDirs(const std::filesystem::path& ref_dir,
                                            const std::filesystem::path& syn_dir,
                                            const PitchConfig& config) {
  std::map<std::string, std::filesystem::path> refs;
  for (const auto& e : std::filesystem::directory_iterator(ref_dir)) {
    if (e.path().extension() == ".wav") refs[e.path().stem().string()] = e.path();
  }
  PitchStabilityReport report;
  report.aggregate.id = "aggregate";
  for (const auto& [name, ref_path] : refs) {
    const auto syn_path = syn_dir / (name + ".wav");
    if (!std::filesystem::exists(syn_path)) {
      LOG(WARNING) << "no synthesised counterpart for " << name;
      continue;
    }
    auto s = EvalPitchStability(LoadWaveform(ref_path, config.sample_rate),
                                LoadWaveform(syn_path, config.sample_rate), config, name);
    report.aggregate.frames += s.frames;
    report.aggregate.voiced_both += s.voiced_both;
    report.aggregate.sum_sq_hz += s.sum_sq_hz;
    report.aggregate.vuv_errors += s.vuv_errors;
    report.utterances.push_back(std::move(s));
  }
  if (report.utterances.empty()) {
    throw std::runtime_error("no common .wav files in " + ref_dir.string() + " and " +
                             syn_dir.string());
  }
  return report;
}

std::string FormatPitchStats(const PitchStats& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["frames"] = s.frames;
  j["voiced_both"] = s.voiced_both;
  j["f0_defined"] = s.f0_defined();
  if (s.f0_defined()) {
    j["f0_rmse_hz"] = s.f0_rmse_hz();
  } else {
    j["f0_rmse_hz"] = nullptr;
  }
  j["vuv_error_rate"] = s.vuv_error_rate();
  return j.dump();
}

std::string FormatPitchReport(const PitchStabilityReport& report) {
  std::ostringstream os;
  for (const auto& s : report.utterances) os << FormatPitchStats(s) << '\n';
  os << FormatPitchStats(report.aggregate) << '\n';
  return os.str();
}

}  // namespace pvits
