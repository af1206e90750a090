#ifndef PVITS_EVAL_PITCH_STABILITY_H_
#define PVITS_EVAL_PITCH_STABILITY_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvits/features/pitch.h"
#include "pvits/features/wav_io.h"

namespace pvits {

struct PitchStats {
  std::string id;
  int64_t frames = 0;       // compared frames (shorter of the two tracks)
  int64_t voiced_both = 0;
  double sum_sq_hz = 0.0;   // over frames voiced in both
  int64_t vuv_errors = 0;

  bool f0_defined() const { return voiced_both > 0; }
  // NaN when no frame is voiced in both.
  double f0_rmse_hz() const;
  double vuv_error_rate() const;
};

struct PitchStabilityReport {
  std::vector<PitchStats> utterances;
  PitchStats aggregate;  // pooled over all compared frames
};

// Truncates both tracks to the shorter one.
PitchStats ComparePitchTracks(const PitchTrack& ref, const PitchTrack& syn,
                              const std::string& id = {});

PitchStats EvalPitchStability(const Waveform& ref, const Waveform& syn, const PitchConfig& config,
                              const std::string& id = {});

// Pairs <ref_dir>/<name>.wav with <syn_dir>/<name>.wav. Files present in only
// one directory are skipped with a warning; none in common is an error.
PitchStabilityReport EvalPitchStabilityDirs(const std::filesystem::path& ref_dir,
                                            const std::filesystem::path& syn_dir,
                                            const PitchConfig& config);

// One JSON object per utterance, then one with "id": "aggregate".
std::string FormatPitchReport(const PitchStabilityReport& report);
std::string FormatPitchStats(const PitchStats& stats);

}  // namespace pvits

#endif  // PVITS_EVAL_PITCH_STABILITY_H_
