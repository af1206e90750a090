#include "pvits/text/batching.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pvits {

std::vector<BatchIndices> MakeBatches(std::span<const int64_t> frame_lengths, int target_avg,
                                      uint64_t seed) {
  if (frame_lengths.empty()) throw std::invalid_argument("cannot batch an empty dataset");
  if (target_avg < 1) throw std::invalid_argument("target batch size must be >= 1");

  const double total =
      std::accumulate(frame_lengths.begin(), frame_lengths.end(), 0.0);
  const double budget = target_avg * total / static_cast<double>(frame_lengths.size());

  std::mt19937_64 rng(seed);
  std::vector<size_t> order(frame_lengths.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return frame_lengths[a] < frame_lengths[b];
  });

  std::vector<BatchIndices> batches;
  std::vector<size_t> regular;
  double regular_total = 0.0;
  for (size_t i : order) {
    if (static_cast<double>(frame_lengths[i]) > budget && frame_lengths.size() > 1) {
      LOG(WARNING) << "utterance " << i << " (" << frame_lengths[i]
                   << " frames) exceeds the batch frame budget " << budget
                   << "; placing it in its own batch";
      batches.push_back({i});
    } else {
      regular.push_back(i);
      regular_total += static_cast<double>(frame_lengths[i]);
    }
  }

  if (!regular.empty()) {
    const auto groups = std::max<size_t>(1, static_cast<size_t>(std::lround(regular_total / budget)));
    const double per_group = regular_total / static_cast<double>(groups);
    std::vector<BatchIndices> grouped(groups);
    double cumulative = 0.0;
    for (size_t i : regular) {
      const double mid = cumulative + 0.5 * static_cast<double>(frame_lengths[i]);
      const auto g = std::min(groups - 1, static_cast<size_t>(mid / per_group));
      grouped[g].push_back(i);
      cumulative += static_cast<double>(frame_lengths[i]);
    }
    for (auto& g : grouped) {
      if (!g.empty()) batches.push_back(std::move(g));
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace pvits
