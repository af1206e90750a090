#include "pvits/text/utterance.h"

#include <glog/logging.h>

#include <fstream>
#include <numeric>

namespace pvits {

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) os << t << '\n';
}

int Vocabulary::IndexOf(const std::string& token) const {
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == token) return static_cast<int>(i);
  }
  return -1;
}

VocabSizes LoadVocabSizes(const std::filesystem::path& dir) {
  return {Vocabulary::Load(dir / "phonemes.txt").size(), Vocabulary::Load(dir / "accents.txt").size(),
          Vocabulary::Load(dir / "speakers.txt").size(), Vocabulary::Load(dir / "emotions.txt").size()};
}

int64_t UtteranceSample::TotalFrames() const {
  return std::accumulate(durations.begin(), durations.end(), int64_t{0});
}

UtteranceSample UtteranceSample::FromManifest(const ManifestEntry& e) {
  return {e.id, e.phonemes, e.accents, e.durations, e.speaker, e.emotion};
}

namespace {

void CheckRange(const std::string& utt, const char* what, int id, int size) {
  if (id < 0 || id >= size) {
    throw SampleError(utt + ": " + what + " ID " + std::to_string(id) +
                      " outside vocabulary of size " + std::to_string(size));
  }
}

}  // namespace

ValidatedSample ValidateSample(const UtteranceSample& sample, int64_t num_frames,
                               const VocabSizes& vocab) {
  const auto& id = sample.utterance_id;
  const size_t n = sample.phonemes.size();
  if (n == 0) throw SampleError(id + ": empty phoneme sequence");
  if (sample.accents.size() != n || sample.durations.size() != n) {
    throw SampleError(id + ": phonemes/accents/durations lengths differ (" + std::to_string(n) +
                      "/" + std::to_string(sample.accents.size()) + "/" +
                      std::to_string(sample.durations.size()) + ")");
  }
  for (int p : sample.phonemes) CheckRange(id, "phoneme", p, vocab.phonemes);
  for (int a : sample.accents) CheckRange(id, "accent", a, vocab.accents);
  CheckRange(id, "speaker", sample.speaker_id, vocab.speakers);
  CheckRange(id, "emotion", sample.emotion_id, vocab.emotions);
  for (int d : sample.durations) {
    if (d < 0) throw SampleError(id + ": negative duration " + std::to_string(d));
  }

  ValidatedSample out{sample, false};
  const int64_t diff = num_frames - sample.TotalFrames();
  if (diff == 0) return out;
  if (diff > 1 || diff < -1 || sample.durations.back() + diff < 0) {
    throw SampleError(id + ": durations sum to " + std::to_string(sample.TotalFrames()) +
                      " frames but features have " + std::to_string(num_frames));
  }
  out.sample.durations.back() += static_cast<int>(diff);
  out.repaired = true;
  LOG(WARNING) << id << ": final phoneme duration adjusted by " << diff
               << " frame to match " << num_frames << " feature frames";
  return out;
}

}  // namespace pvits
