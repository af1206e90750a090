#ifndef PVITS_FEATURES_MANIFEST_H_
#define PVITS_FEATURES_MANIFEST_H_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pvits {

// One manifest line:
//   ID | audio path | phoneme IDs | accent tags | durations | speaker | emotion
// List fields are whitespace separated integers. Blank lines and lines
// starting with '#' are ignored.
struct ManifestEntry {
  std::string id;
  std::filesystem::path audio;
  std::vector<int> phonemes;
  std::vector<int> accents;
  std::vector<int> durations;
  int speaker = 0;
  int emotion = 0;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ManifestEntry ParseManifestLine(std::string_view line, int line_number = 0);
std::string FormatManifestLine(const ManifestEntry& entry);

// Relative audio paths are resolved against the manifest's directory.
std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries);

}  // namespace pvits

#endif  // PVITS_FEATURES_MANIFEST_H_
