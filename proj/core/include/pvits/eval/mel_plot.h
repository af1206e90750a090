#ifndef PVITS_EVAL_MEL_PLOT_H_
#define PVITS_EVAL_MEL_PLOT_H_

#include <filesystem>
#include <vector>

#include "pvits/features/spectrogram.h"
#include "pvits/features/wav_io.h"

namespace pvits {

struct MelPlotLayout {
  int width = 0;
  int height = 0;
  std::vector<int> panel_x;       // left edge of each panel
  std::vector<int> panel_width;   // frames * pixels_per_frame
  std::vector<int64_t> frames;
  float value_min = 0.0f;  // shared colour scale over all panels
  float value_max = 0.0f;
};

struct MelPlotOptions {
  int pixels_per_frame = 2;
  int pixels_per_band = 2;
  int gap = 8;
};

// Log-mel panels side by side (low frequencies at the bottom) written as an
// 8-bit RGB PNG. Throws std::invalid_argument for no input and
// std::runtime_error when |out| cannot be written.
MelPlotLayout PlotMelComparison(const std::vector<Waveform>& waves, const FeatureConfig& config,
                                const std::filesystem::path& out,
                                const MelPlotOptions& options = {});

}  // namespace pvits

#endif  // PVITS_EVAL_MEL_PLOT_H_
