#include "pvits/features/manifest.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pvits {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string Where(int line_number) {
  return line_number > 0 ? "manifest line " + std::to_string(line_number) + ": "
                         : "manifest: ";
}

int ParseInt(std::string_view tok, const std::string& field, int line_number) {
  int v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ManifestError(Where(line_number) + "field '" + field + "' has non-integer token '" +
                        std::string(tok) + "'");
  }
  return v;
}

std::vector<int> ParseList(std::string_view s, const std::string& field, int line_number) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos < s.size()) {
    const auto b = s.find_first_not_of(" \t", pos);
    if (b == std::string_view::npos) break;
    auto e = s.find_first_of(" \t", b);
    if (e == std::string_view::npos) e = s.size();
    out.push_back(ParseInt(s.substr(b, e - b), field, line_number));
    pos = e;
  }
  return out;
}

template <typename T>
std::string Join(const std::vector<T>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

}  // namespace

ManifestEntry ParseManifestLine(std::string_view line, int line_number) {
  std::vector<std::string_view> fields;
  size_t pos = 0;
  while (true) {
    const auto bar = line.find('|', pos);
    fields.push_back(Trim(line.substr(pos, bar == std::string_view::npos ? line.npos : bar - pos)));
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  if (fields.size() != 7) {
    throw ManifestError(Where(line_number) + "expected 7 '|'-separated fields, found " +
                        std::to_string(fields.size()));
  }
  ManifestEntry e;
  e.id = std::string(fields[0]);
  if (e.id.empty()) throw ManifestError(Where(line_number) + "empty utterance ID");
  e.audio = std::string(fields[1]);
  e.phonemes = ParseList(fields[2], "phonemes", line_number);
  e.accents = ParseList(fields[3], "accents", line_number);
  e.durations = ParseList(fields[4], "durations", line_number);
  e.speaker = ParseInt(fields[5], "speaker", line_number);
  e.emotion = ParseInt(fields[6], "emotion", line_number);
  return e;
}

std::string FormatManifestLine(const ManifestEntry& e) {
  return e.id + "|" + e.audio.string() + "|" + Join(e.phonemes) + "|" + Join(e.accents) + "|" +
         Join(e.durations) + "|" + std::to_string(e.speaker) + "|" + std::to_string(e.emotion);
}

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ManifestError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto e = ParseManifestLine(t, n);
    if (e.audio.is_relative()) e.audio = path.parent_path() / e.audio;
    entries.push_back(std::move(e));
  }
  return entries;
}

void WriteManifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw ManifestError("cannot write manifest " + path.string());
  for (const auto& e : entries) os << FormatManifestLine(e) << '\n';
}

}  // namespace pvits
