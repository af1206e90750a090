#include "pvits/features/feature_cache.h"

#include <cstring>
#include <fstream>
#include <vector>

namespace pvits {
namespace {

constexpr char kMagic[4] = {'P', 'V', 'F', 'C'};

void PutU32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

uint32_t GetU32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw FeatureCacheError("truncated feature record while reading " + what);
  }
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void PutString(std::ostream& os, const std::string& s) {
  PutU32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string GetString(std::istream& is, const std::string& what) {
  const uint32_t n = GetU32(is, what);
  if (n > (1u << 20)) throw FeatureCacheError("implausible string length in " + what);
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw FeatureCacheError("truncated " + what);
  return s;
}

void PutArray(std::ostream& os, const std::string& name, const torch::Tensor& m) {
  auto c = m.to(torch::kFloat32).contiguous();
  const auto rows = static_cast<uint32_t>(c.size(0));
  const auto cols = static_cast<uint32_t>(c.dim() == 2 ? c.size(1) : 1);
  PutString(os, name);
  PutU32(os, rows);
  PutU32(os, cols);
  os.write(reinterpret_cast<const char*>(c.data_ptr<float>()),
           static_cast<std::streamsize>(sizeof(float)) * rows * cols);
}

std::pair<std::string, torch::Tensor> GetArray(std::istream& is) {
  std::string name = GetString(is, "array name");
  const uint32_t rows = GetU32(is, name + " rows");
  const uint32_t cols = GetU32(is, name + " cols");
  if (static_cast<uint64_t>(rows) * cols > (1ull << 32)) {
    throw FeatureCacheError("implausible array shape for " + name);
  }
  auto t = torch::empty({rows, cols}, torch::kFloat32);
  if (!is.read(reinterpret_cast<char*>(t.data_ptr<float>()),
               static_cast<std::streamsize>(sizeof(float)) * rows * cols)) {
    throw FeatureCacheError("truncated array data for " + name);
  }
  return {std::move(name), t};
}

std::vector<float> ToVector(const torch::Tensor& t) {
  auto c = t.reshape({-1}).contiguous();
  return {c.data_ptr<float>(), c.data_ptr<float>() + c.numel()};
}

torch::Tensor FromVector(const std::vector<float>& v) {
  return torch::tensor(v, torch::kFloat32);
}

void WriteHeader(std::ostream& os, const std::string& id, uint32_t arrays) {
  os.write(kMagic, 4);
  PutU32(os, kFeatureCacheVersion);
  PutString(os, id);
  PutU32(os, arrays);
}

std::ifstream OpenAndCheckHeader(const std::filesystem::path& path, std::string* id,
                                 uint32_t* arrays) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FeatureCacheError("cannot open feature record " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FeatureCacheError(path.string() + " is not a feature record (bad magic)");
  }
  const uint32_t version = GetU32(is, "version");
  if (version != kFeatureCacheVersion) {
    throw FeatureCacheError(path.string() + ": unsupported feature cache version " +
                            std::to_string(version));
  }
  *id = GetString(is, "utterance id");
  *arrays = GetU32(is, "array count");
  return is;
}

}  // namespace

void FeatureRecord::CheckAligned() const {
  const int64_t t = linear_spec.size(0);
  if (log_mel.size(0) != t || static_cast<int64_t>(pitch.log_f0.size()) != t ||
      static_cast<int64_t>(pitch.vuv.size()) != t) {
    throw std::runtime_error("features of " + utterance_id + " are not frame aligned: linear " +
                             std::to_string(t) + ", mel " + std::to_string(log_mel.size(0)) +
                             ", log_f0 " + std::to_string(pitch.log_f0.size()) + ", vuv " +
                             std::to_string(pitch.vuv.size()));
  }
}

std::filesystem::path FeatureCachePath(const std::filesystem::path& dir,
                                       const std::string& utterance_id) {
  return dir / (utterance_id + ".feat");
}

void WriteFeatureRecord(const std::filesystem::path& path, const FeatureRecord& record) {
  record.CheckAligned();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FeatureCacheError("cannot write feature record " + path.string());
  WriteHeader(os, record.utterance_id, 4);
  PutArray(os, "linear_spec", record.linear_spec);
  PutArray(os, "log_mel", record.log_mel);
  PutArray(os, "log_f0", FromVector(record.pitch.log_f0));
  PutArray(os, "vuv", FromVector(record.pitch.vuv));
  if (!os) throw FeatureCacheError("failed writing feature record " + path.string());
}

FeatureRecord ReadFeatureRecord(const std::filesystem::path& path) {
  std::string id;
  uint32_t arrays = 0;
  auto is = OpenAndCheckHeader(path, &id, &arrays);
  FeatureRecord record;
  record.utterance_id = id;
  bool seen[4] = {false, false, false, false};
  for (uint32_t i = 0; i < arrays; ++i) {
    auto [name, t] = GetArray(is);
    if (name == "linear_spec") {
      record.linear_spec = t, seen[0] = true;
    } else if (name == "log_mel") {
      record.log_mel = t, seen[1] = true;
    } else if (name == "log_f0") {
      record.pitch.log_f0 = ToVector(t), seen[2] = true;
    } else if (name == "vuv") {
      record.pitch.vuv = ToVector(t), seen[3] = true;
    }
  }
  for (bool s : seen) {
    if (!s) throw FeatureCacheError(path.string() + ": missing feature array");
  }
  record.CheckAligned();
  return record;
}

void WriteNormStats(const std::filesystem::path& path, const NormStats& stats) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FeatureCacheError("cannot write stats " + path.string());
  WriteHeader(os, "norm_stats", 1);
  PutArray(os, "mean_std", torch::stack({stats.mean, stats.std}));
}

NormStats ReadNormStats(const std::filesystem::path& path) {
  std::string id;
  uint32_t arrays = 0;
  auto is = OpenAndCheckHeader(path, &id, &arrays);
  if (id != "norm_stats" || arrays != 1) {
    throw FeatureCacheError(path.string() + " does not hold normalisation stats");
  }
  auto [name, t] = GetArray(is);
  if (t.size(0) != 2) throw FeatureCacheError(path.string() + ": malformed stats");
  return {t[0].clone(), t[1].clone()};
}

}  // namespace pvits
