#include "pvits/eval/mel_plot.h"

#include <png.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace pvits {

namespace {

// Dark blue -> teal -> yellow.
std::array<uint8_t, 3> ColourMap(float v) {
  static constexpr float kStops[5][3] = {
      {13, 8, 135}, {84, 2, 163}, {33, 145, 140}, {122, 209, 81}, {253, 231, 37}};
  v = std::clamp(v, 0.0f, 1.0f) * 4.0f;
  const int i = std::min(static_cast<int>(v), 3);
  const float f = v - static_cast<float>(i);
  std::array<uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<uint8_t>(kStops[i][c] + f * (kStops[i + 1][c] - kStops[i][c]) + 0.5f);
  }
  return rgb;
}

void WritePng(const std::filesystem::path& out, int width, int height,
              const std::vector<uint8_t>& rgb) {
  FILE* fp = std::fopen(out.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + out.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("PNG encoding failed for " + out.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<uint8_t*>(rgb.data()) + static_cast<size_t>(y) * width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

MelPlotLayout PlotMelComparison(const std::vector<Waveform>& waves, const FeatureConfig& config,
                                const std::filesystem::path& out, const MelPlotOptions& options) {
  if (waves.empty()) throw std::invalid_argument("mel plot needs at least one waveform");
  std::vector<torch::Tensor> mels;
  MelPlotLayout layout;
  layout.value_min = std::numeric_limits<float>::max();
  layout.value_max = std::numeric_limits<float>::lowest();
  for (const auto& w : waves) {
    auto m = LogMelSpectrogram(w, config).contiguous();  // [T, D]
    layout.value_min = std::min(layout.value_min, m.min().item<float>());
    layout.value_max = std::max(layout.value_max, m.max().item<float>());
    layout.frames.push_back(m.size(0));
    mels.push_back(std::move(m));
  }
  const int bands = config.num_mels;
  layout.height = bands * options.pixels_per_band;
  int x = 0;
  for (size_t i = 0; i < mels.size(); ++i) {
    if (i > 0) x += options.gap;
    layout.panel_x.push_back(x);
    layout.panel_width.push_back(static_cast<int>(layout.frames[i]) * options.pixels_per_frame);
    x += layout.panel_width.back();
  }
  layout.width = x;

  std::vector<uint8_t> rgb(static_cast<size_t>(layout.width) * layout.height * 3, 255);
  const float range = std::max(layout.value_max - layout.value_min, 1e-6f);
  for (size_t i = 0; i < mels.size(); ++i) {
    const float* data = mels[i].data_ptr<float>();
    for (int y = 0; y < layout.height; ++y) {
      const int band = bands - 1 - y / options.pixels_per_band;
      for (int px = 0; px < layout.panel_width[i]; ++px) {
        const int t = px / options.pixels_per_frame;
        const auto c = ColourMap((data[t * bands + band] - layout.value_min) / range);
        auto* dst = &rgb[(static_cast<size_t>(y) * layout.width + layout.panel_x[i] + px) * 3];
        std::copy(c.begin(), c.end(), dst);
      }
    }
  }
  WritePng(out, layout.width, layout.height, rgb);
  return layout;
}

}  // namespace pvits
