#ifndef PVITS_TEXT_BATCHING_H_
#define PVITS_TEXT_BATCHING_H_

#include <cstdint>
#include <span>
#include <vector>

namespace pvits {

using BatchIndices = std::vector<size_t>;

// Dynamic batching by frame budget. The budget is target_avg times the mean
// utterance length, so batches average roughly target_avg utterances.
// Utterances are shuffled with |seed|, stably ordered by length, and cut into
// round(total / budget) contiguous groups of near-equal total frames; batch
// order is shuffled again. Every index appears exactly once. An utterance
// longer than the budget gets its own batch (with a warning).
std::vector<BatchIndices> MakeBatches(std::span<const int64_t> frame_lengths, int target_avg,
                                      uint64_t seed);

}  // namespace pvits

#endif  // PVITS_TEXT_BATCHING_H_
