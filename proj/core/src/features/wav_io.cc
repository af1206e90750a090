#include "pvits/features/wav_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pvits {
namespace {

uint32_t ReadU32(const char* p) {
  return static_cast<uint32_t>(static_cast<uint8_t>(p[0])) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[1])) << 8) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[2])) << 16) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[3])) << 24);
}

uint16_t ReadU16(const char* p) {
  return static_cast<uint16_t>(static_cast<uint8_t>(p[0]) |
                               (static_cast<uint8_t>(p[1]) << 8));
}

void WriteU32(std::ostream& os, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void WriteU16(std::ostream& os, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace

int16_t FloatToPcm16(float x) {
  const float clipped = std::clamp(x, -1.0f, 1.0f);
  return static_cast<int16_t>(
      std::clamp(std::lround(clipped * 32768.0f), -32768L, 32767L));
}

Waveform LoadWaveform(const std::filesystem::path& path, int expected_rate) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WavError("cannot open audio file: " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    const uint32_t size = ReadU32(id + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw WavError(path.string() + ": truncated chunk");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw WavError(path.string() + ": malformed fmt chunk");
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw WavError(path.string() + ": data before fmt chunk");
      if (format != 1) {
        throw WavError(path.string() + ": audio format " +
                       std::to_string(format) + " is not PCM");
      }
      if (channels != 1) {
        throw WavError(path.string() + ": expected mono audio, found " +
                       std::to_string(channels) + " channels");
      }
      if (bits != 16) {
        throw WavError(path.string() + ": expected 16-bit samples, found " +
                       std::to_string(bits) + "-bit");
      }
      if (static_cast<int>(rate) != expected_rate) {
        throw WavError(path.string() + ": sample rate " + std::to_string(rate) +
                       " Hz does not match configured " +
                       std::to_string(expected_rate) + " Hz");
      }
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.bits_per_sample = bits;
      const size_t n = size / 2;
      wave.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const auto v = static_cast<int16_t>(ReadU16(bytes.data() + body + 2 * i));
        wave.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return wave;
    }
    pos = body + size + (size & 1);
  }
  throw WavError(path.string() + ": no data chunk");
}

void SaveWaveform(const std::filesystem::path& path, const Waveform& wave) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw WavError("cannot write audio file: " + path.string());
  const auto data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  os.write("RIFF", 4);
  WriteU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteU32(os, 16);
  WriteU16(os, 1);
  WriteU16(os, 1);
  WriteU32(os, static_cast<uint32_t>(wave.sample_rate));
  WriteU32(os, static_cast<uint32_t>(wave.sample_rate * 2));
  WriteU16(os, 2);
  WriteU16(os, 16);
  os.write("data", 4);
  WriteU32(os, data_bytes);
  for (float x : wave.samples) WriteU16(os, static_cast<uint16_t>(FloatToPcm16(x)));
  if (!os) throw WavError("failed writing audio file: " + path.string());
}

}  // namespace pvits
