#include "ptx/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ptx/util.hpp"

namespace ptx {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

WavData load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open wav file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error("not a RIFF/WAVE file: " + path);
  }

  WavData wav;
  int format = 0, channels = 0, bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) throw Error("truncated wav chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw Error("malformed fmt chunk in " + path);
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      wav.sample_rate_hz = static_cast<int>(read_u32(bytes.data() + body + 4));
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw Error("wav data chunk before fmt in " + path);
      if (channels != 1) throw Error(strprintf("wav %s has %d channels, expected mono", path.c_str(), channels));
      if (format == 1 && bits == 16) {
        const std::size_t n = chunk_size / 2;
        wav.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
          wav.samples[i] = static_cast<float>(v) / 32768.0f;
        }
      } else if (format == 3 && bits == 32) {
        const std::size_t n = chunk_size / 4;
        wav.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const std::uint32_t u = read_u32(bytes.data() + body + 4 * i);
          float f;
          std::memcpy(&f, &u, 4);
          wav.samples[i] = f;
        }
      } else {
        throw Error(strprintf("unsupported wav encoding in %s (format %d, %d bits)",
                              path.c_str(), format, bits));
      }
      return wav;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  throw Error("no data chunk found in " + path);
}

void save_wav(const std::string& path, const std::vector<float>& samples, int sample_rate_hz) {
  std::string out;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
  out.reserve(44 + data_size);
  out.append("RIFF");
  put_u32(out, 36 + data_size);
  out.append("WAVEfmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_size);
  for (float f : samples) {
    const float clamped = std::clamp(f, -1.0f, 1.0f);
    const auto v = static_cast<std::int16_t>(std::lrint(clamped * 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write wav file " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error("write failed for wav file " + path);
}

}  // namespace ptx
