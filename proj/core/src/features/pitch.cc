#include "pvits/features/pitch.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pvits {

void PitchConfig::Validate() const {
  if (sample_rate <= 0 || hop_samples <= 0 || window_samples <= 0) {
    throw std::invalid_argument("pitch framing parameters must be positive");
  }
  if (!(f0_min > 0 && f0_min < f0_max && f0_max < sample_rate / 2.0)) {
    throw std::invalid_argument("pitch search range must satisfy 0 < f0_min < f0_max < sr/2");
  }
  if (median_width < 1) throw std::invalid_argument("median_width must be >= 1");
}

double PitchTrack::VoicedFraction() const {
  if (vuv.empty()) return 0.0;
  return std::accumulate(vuv.begin(), vuv.end(), 0.0) / vuv.size();
}

RawPitch EstimateRawPitch(std::span<const float> samples,
                          const PitchConfig& config, int64_t num_frames) {
  const int w = config.window_samples;
  const int tau_min = std::max(2, static_cast<int>(std::floor(config.sample_rate / config.f0_max)));
  const int tau_max = static_cast<int>(std::ceil(config.sample_rate / config.f0_min));
  const int64_t n = static_cast<int64_t>(samples.size());

  RawPitch raw;
  raw.f0_hz.assign(num_frames, 0.0);
  raw.aperiodicity.assign(num_frames, 1.0);

  std::vector<double> seg(w + tau_max + 1);
  std::vector<double> diff(tau_max + 2);
  std::vector<double> cmnd(tau_max + 2);
  for (int64_t t = 0; t < num_frames; ++t) {
    const int64_t centre = t * config.hop_samples + config.hop_samples / 2;
    const int64_t start = centre - (w + tau_max) / 2;
    double energy = 0.0;
    for (size_t j = 0; j < seg.size(); ++j) {
      const int64_t idx = start + static_cast<int64_t>(j);
      seg[j] = (idx >= 0 && idx < n) ? samples[idx] : 0.0;
    }
    for (int j = 0; j < w; ++j) energy += seg[tau_max / 2 + j] * seg[tau_max / 2 + j];
    const double rms = std::sqrt(energy / w);
    if (rms < config.energy_floor) continue;

    diff[0] = 0.0;
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      double d = 0.0;
      for (int j = 0; j < w; ++j) {
        const double e = seg[j] - seg[j + tau];
        d += e * e;
      }
      diff[tau] = d;
    }
    cmnd[0] = 1.0;
    double running = 0.0;
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      running += diff[tau];
      cmnd[tau] = running > 0 ? diff[tau] * tau / running : 1.0;
    }

    int best = -1;
    for (int tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < config.dip_threshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) {
      best = tau_min;
      for (int tau = tau_min; tau <= tau_max; ++tau) {
        if (cmnd[tau] < cmnd[best]) best = tau;
      }
    }
    raw.aperiodicity[t] = cmnd[best];
    if (cmnd[best] > config.voicing_threshold) continue;

    // Parabolic refinement around the chosen lag.
    double period = best;
    if (best > 1 && best < tau_max + 1) {
      const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
      const double denom = a - 2.0 * b + c;
      if (denom > 0) period = best + 0.5 * (a - c) / denom;
    }
    const double f0 = config.sample_rate / period;
    if (f0 >= config.f0_min && f0 <= config.f0_max) raw.f0_hz[t] = f0;
  }
  return raw;
}

std::vector<float> MakeContinuous(std::span<const double> f0_hz,
                                  std::span<const float> vuv) {
  const size_t n = f0_hz.size();
  std::vector<size_t> voiced;
  for (size_t t = 0; t < n; ++t) {
    if (vuv[t] > 0.5f && f0_hz[t] > 0) voiced.push_back(t);
  }
  if (voiced.empty()) return {};
  std::vector<float> out(n);
  for (size_t t = 0; t <= voiced.front(); ++t) out[t] = std::log(f0_hz[voiced.front()]);
  for (size_t t = voiced.back(); t < n; ++t) out[t] = std::log(f0_hz[voiced.back()]);
  for (size_t k = 0; k + 1 < voiced.size(); ++k) {
    const size_t a = voiced[k], b = voiced[k + 1];
    const double la = std::log(f0_hz[a]), lb = std::log(f0_hz[b]);
    for (size_t t = a; t <= b; ++t) {
      const double frac = static_cast<double>(t - a) / static_cast<double>(b - a);
      out[t] = static_cast<float>(la + frac * (lb - la));
    }
  }
  return out;
}

void FillUnvoicedTrack(PitchTrack& track, double log_f0_value) {
  std::fill(track.log_f0.begin(), track.log_f0.end(), static_cast<float>(log_f0_value));
}

PitchTrack ExtractPitch(const Waveform& wave, const PitchConfig& config,
                        int64_t num_frames) {
  config.Validate();
  if (wave.sample_rate != config.sample_rate) {
    throw std::invalid_argument("waveform sample rate " + std::to_string(wave.sample_rate) +
                                " does not match pitch config " +
                                std::to_string(config.sample_rate));
  }
  if (num_frames < 0) {
    num_frames = static_cast<int64_t>(wave.samples.size()) / config.hop_samples;
  }
  RawPitch raw = EstimateRawPitch(wave.samples, config, num_frames);

  PitchTrack track;
  track.vuv.resize(num_frames);
  for (int64_t t = 0; t < num_frames; ++t) track.vuv[t] = raw.f0_hz[t] > 0 ? 1.0f : 0.0f;

  // Median smoothing over voiced neighbours only.
  std::vector<double> smoothed(raw.f0_hz);
  const int half = config.median_width / 2;
  std::vector<double> window;
  for (int64_t t = 0; t < num_frames; ++t) {
    if (raw.f0_hz[t] <= 0) continue;
    window.clear();
    for (int64_t k = std::max<int64_t>(0, t - half);
         k <= std::min<int64_t>(num_frames - 1, t + half); ++k) {
      if (raw.f0_hz[k] > 0) window.push_back(raw.f0_hz[k]);
    }
    std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
    smoothed[t] = window[window.size() / 2];
  }

  track.log_f0 = MakeContinuous(smoothed, track.vuv);
  if (track.log_f0.empty()) {
    LOG(WARNING) << "no voiced frames found; filling log-F0 with fallback "
                 << config.fallback_f0_hz << " Hz";
    track.all_unvoiced = true;
    track.log_f0.assign(num_frames, static_cast<float>(std::log(config.fallback_f0_hz)));
  }
  return track;
}

}  // namespace pvits
